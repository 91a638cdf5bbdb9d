import bisect
import math

import numpy as np
import pytest
from scipy import integrate

from doublingclt import bitstream as bs
from doublingclt import functions as fn


def step(values, level=None):
    if level is None:
        level = int(math.log2(len(values)))
    return fn.StepFunction(level, np.asarray(values, dtype=np.float64))


def cosine(coeffs, M=10.0, beta=1.0):
    return fn.FourierFunction(np.asarray(coeffs, dtype=np.float64), M, beta)


class TestStepEval:
    def test_first_half_interval(self):
        phi = step([1.0, -1.0])
        w = bs.DigitStream.from_bits([0, 1, 1, 1]).window(0, 4)
        assert fn.eval_step(phi, w) == 1.0

    def test_index_two(self):
        phi = step([3.0, 1.0, -1.0, -3.0])
        w = bs.DigitStream.from_bits([1, 0, 0, 0]).window(0, 4)
        assert fn.eval_step(phi, w) == -1.0

    def test_matches_interval_lookup_oracle(self):
        # oracle: bisect over the explicit interval boundaries
        rng = np.random.default_rng(11)
        for _ in range(40):
            level = int(rng.integers(1, 5))
            phi = step(rng.normal(size=2**level), level)
            boundaries = [i / 2**level for i in range(1, 2**level)]
            stream = bs.generate(int(rng.integers(0, 2**63)), 64 * 260)
            for offset in rng.integers(0, 200, size=250).tolist():
                w = stream.window(int(offset), 53)
                expected = phi.values[bisect.bisect_right(boundaries, w.value)]
                assert fn.eval_step(phi, w) == expected

    def test_depends_only_on_first_r_bits(self):
        # exhaustive: r <= 4, window width 8, perturb all trailing bits
        for level in (1, 2, 3, 4):
            rng = np.random.default_rng(level)
            phi = step(rng.normal(size=2**level), level)
            for head in range(2**level):
                head_bits = [(head >> (level - i)) & 1 for i in range(1, level + 1)]
                outputs = set()
                for tail in range(2 ** (8 - level)):
                    tail_bits = [
                        (tail >> (8 - level - i)) & 1 for i in range(1, 8 - level + 1)
                    ]
                    w = bs.DigitStream.from_bits(head_bits + tail_bits).window(0, 8)
                    outputs.add(fn.eval_step(phi, w))
                assert len(outputs) == 1

    def test_narrow_window_rejected(self):
        phi = step([3.0, 1.0, -1.0, -3.0])
        w = bs.DigitStream.from_bits([1, 0]).window(0, 1)
        with pytest.raises(ValueError, match="insufficient digits"):
            fn.eval_step(phi, w)


class TestFourierEval:
    def test_cosine_at_zero(self):
        assert fn.eval_fourier(cosine([1.0]), 0.0) == 1.0

    def test_cosine_zero_crossing(self):
        assert abs(fn.eval_fourier(cosine([1.0]), 0.25)) < 1e-15

    def test_two_terms(self):
        f = cosine([1.0, 0.5])
        assert abs(fn.eval_fourier(f, 0.5) - (-0.5)) < 1e-15

    def test_bounded_by_coefficient_sum(self):
        f = cosine([0.7, -0.3, 0.0, 0.2])
        rng = np.random.default_rng(5)
        bound = float(np.sum(np.abs(f.coefficients)))
        for t in rng.uniform(0, 1, size=500).tolist():
            assert abs(fn.eval_fourier(f, t)) <= bound + 1e-12

    def test_eval_array_matches_scalar(self):
        f = cosine([0.9, -0.4, 0.25, 0.0, 0.1])
        t = np.random.default_rng(8).uniform(0, 1, size=200)
        vec = f.eval_array(t)
        scalar = np.array([fn.eval_fourier(f, float(x)) for x in t])
        assert np.max(np.abs(vec - scalar)) < 1e-12

    def test_envelope_validation(self):
        with pytest.raises(ValueError, match="envelope"):
            fn.FourierFunction(np.array([1.0, 1.0]), 1.5, 1.0)  # |a_2| >= 1.5/2
        with pytest.raises(ValueError, match="beta"):
            fn.FourierFunction(np.array([0.1]), 1.0, 0.5)
        with pytest.raises(ValueError, match="M"):
            fn.FourierFunction(np.array([0.1]), 0.0, 1.0)

    def test_tail_bound_decreases_with_truncation_order(self):
        short = fn.FourierFunction(np.array([0.5]), 1.0, 1.0)
        long = fn.FourierFunction(np.array([0.5, 0.2, 0.1]), 1.0, 1.0)
        assert long.l2_tail_bound() < short.l2_tail_bound()
        # tail of sum (M/m^beta)^2 / 2 from m=2: M=1, beta=1 -> (pi^2/6 - 1)/2
        expect = 0.5 * (math.pi**2 / 6.0 - 1.0)
        assert abs(short.l2_tail_bound() - expect) < 1e-12


class TestCenterAndMean:
    def test_already_centered(self):
        phi = fn.center(step([1.0, -1.0]))
        assert phi.values.tolist() == [1.0, -1.0]

    def test_subtracts_mean(self):
        phi = fn.center(step([2.0, 0.0]))
        assert phi.values.tolist() == [1.0, -1.0]

    def test_zero_mean_unchanged(self):
        phi = fn.center(step([3.0, 1.0, -1.0, -3.0]))
        assert phi.values.tolist() == [3.0, 1.0, -1.0, -3.0]
        assert fn.exact_mean(phi) == 0.0

    def test_mean_values(self):
        assert fn.mean(fn.FunctionSpec(step([1.0, -1.0]))) == 0.0
        assert fn.mean(fn.FunctionSpec(step([2.0, 0.0]))) == 1.0
        assert fn.mean(fn.FunctionSpec(cosine([1.0]))) == 0.0


class TestProjection:
    def test_cosine_level_two_closed_form(self):
        phi = fn.project_to_step(cosine([1.0]), 2)
        c = 2.0 / math.pi
        assert np.max(np.abs(phi.values - np.array([c, -c, -c, c]))) < 1e-14

    def test_against_quadrature_oracle(self):
        f = cosine([0.8, -0.3, 0.15])
        for level in (1, 2, 3):
            phi = fn.project_to_step(f, level)
            cells = 2**level
            for i in range(cells):
                val, _ = integrate.quad(
                    lambda t: fn.eval_fourier(f, t), i / cells, (i + 1) / cells,
                    epsabs=1e-13,
                )
                assert abs(phi.values[i] - cells * val) < 1e-10

    def test_level_one_annihilates_first_harmonic(self):
        phi = fn.project_to_step(cosine([1.0]), 1)
        assert np.max(np.abs(phi.values)) < 1e-15
        assert fn.is_degenerate(phi)

    def test_idempotent_at_fixed_level(self):
        f = cosine([1.0, 0.5, 0.0, 0.125])
        phi = fn.project_to_step(f, 3)
        again = fn.project_to_step(phi, 3)
        assert np.array_equal(phi.values, again.values)

    def test_step_refinement_then_projection_round_trips(self):
        phi = step([3.0, 1.0, -1.0, -3.0])
        fine = fn.project_to_step(phi, 5)
        back = fn.project_to_step(fine, 2)
        assert np.max(np.abs(back.values - phi.values)) < 1e-15

    def test_l2_contraction(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            ncoef = int(rng.integers(1, 9))
            f = cosine((rng.uniform(-1, 1, size=ncoef) * 0.9).tolist())
            for level in (1, 2, 4):
                phi = fn.project_to_step(f, level)
                proj_sq = float(np.mean(phi.values**2))
                assert proj_sq <= f.l2_norm_sq() + 1e-12

    def test_projection_error_monotone_in_level(self):
        f = cosine([1.0, 0.5, 0.25, 0.0, 0.1])
        errs = [fn.projection_l2_error(f, r) for r in range(1, 9)]
        for worse, better in zip(errs, errs[1:]):
            assert better <= worse + 1e-12

    def test_bad_level(self):
        with pytest.raises(ValueError):
            fn.project_to_step(cosine([1.0]), 0)


class TestSpecAndConfig:
    def test_step_validation(self):
        with pytest.raises(ValueError):
            fn.StepFunction(2, np.array([1.0, -1.0]))  # wrong length
        with pytest.raises(ValueError):
            fn.StepFunction(0, np.array([1.0]))
        with pytest.raises(ValueError):
            fn.StepFunction(1, np.array([np.nan, 0.0]))

    def test_digest_distinguishes_functions(self):
        a = fn.FunctionSpec(step([1.0, -1.0]))
        b = fn.FunctionSpec(step([1.0, -1.0]))
        c = fn.FunctionSpec(step([2.0, 0.0]))
        d = fn.FunctionSpec(cosine([1.0]))
        assert a.digest() == b.digest()
        assert len({a.digest(), c.digest(), d.digest()}) == 3

    def test_from_config_dict(self):
        phi = fn.from_config_dict({"step": {"level": 2, "values": [3, 1, -1, -3]}})
        assert isinstance(phi, fn.StepFunction)
        assert phi.values.tolist() == [3.0, 1.0, -1.0, -3.0]
        f = fn.from_config_dict({"fourier": {"coeffs": [1.0, 0.5], "M": 2.0, "beta": 1.0}})
        assert isinstance(f, fn.FourierFunction)
        assert f.decay_beta == 1.0

    def test_from_config_dict_errors(self):
        with pytest.raises(ValueError):
            fn.from_config_dict({})
        with pytest.raises(ValueError):
            fn.from_config_dict({"spline": {}})
        with pytest.raises(ValueError):
            fn.from_config_dict({"step": {"level": 2}})
        with pytest.raises(ValueError):
            fn.from_config_dict({"fourier": {"coeffs": [1.0]}})
