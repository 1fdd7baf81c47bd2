import dataclasses
import math

import numpy as np
import pytest

from tractdim import linearizer as lz
from tractdim.errors import NotRepelling, Overflow, ZeroDenominator
from tractdim.poly import Polynomial


P_SQUARE = Polynomial.from_string("z^2")
P_COSH = Polynomial.from_string("2z^2-1")


def cosh_ref(z):
    # even entire series sum 2^n z^n / (2n)!
    return np.cosh(2 * np.sqrt(np.asarray(z, dtype=complex) / 2))


def sample_disk(n, radius, seed=0):
    rng = np.random.default_rng(seed)
    return radius * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))


class TestCoefficients:
    def test_exponential_series(self):
        a = lz.koenigs_coefficients(P_SQUARE, 1.0, 8)
        fact = [math.factorial(n) for n in range(1, 9)]
        assert a == pytest.approx([1.0 / f for f in fact], abs=1e-14)

    def test_cosh_series(self):
        a = lz.koenigs_coefficients(P_COSH, 1.0, 8)
        ref = [2.0**n / math.factorial(2 * n) for n in range(1, 9)]
        assert a == pytest.approx(ref, abs=1e-14)

    def test_not_repelling(self):
        with pytest.raises(NotRepelling):
            lz.koenigs_coefficients(P_SQUARE, 0.0, 4)

    def test_not_fixed(self):
        with pytest.raises(ValueError):
            lz.koenigs_coefficients(P_SQUARE, 3.0, 4)


class TestLadderEval:
    def test_golden_exp(self):
        L = lz.make_koenigs(P_SQUARE, 1.0)
        for z in sample_disk(200, 2.0):
            assert lz.linearizer_eval(L, z) == pytest.approx(np.exp(z), abs=1e-9)
        assert lz.linearizer_eval(L, 2 + np.pi * 1j) == pytest.approx(
            -7.3890561, abs=1e-6
        )

    def test_golden_cosh(self):
        L = lz.make_koenigs(P_COSH, 1.0)
        assert lz.linearizer_eval(L, 1.0) == pytest.approx(2.1781836, abs=1e-6)
        for z in sample_disk(200, 2.0, seed=1):
            assert lz.linearizer_eval(L, z) == pytest.approx(cosh_ref(z), abs=1e-8)

    def test_functional_equation(self):
        for p, z0 in ((P_SQUARE, 1.0), (P_COSH, 1.0),
                      (Polynomial.from_string("z^2-1"), (1 + np.sqrt(5)) / 2)):
            L = lz.make_koenigs(p, z0)
            for z in sample_disk(100, 10.0, seed=2):
                lhs = lz.linearizer_eval(L, L.lam * z)
                rhs = p(lz.linearizer_eval(L, z))
                assert abs(lhs - rhs) < 1e-9 * (1 + abs(rhs))

    def test_normalization(self):
        L = lz.make_koenigs(P_COSH, 1.0)
        assert lz.linearizer_eval(L, 0.0) == 1.0
        assert L.taylor[0] == 1.0

    def test_overflow_is_error(self):
        L = lz.make_koenigs(P_SQUARE, 1.0)
        with pytest.raises(Overflow):
            lz.linearizer_eval(L, 1e6)

    def test_derivative_matches_differences(self):
        for p in (P_SQUARE, P_COSH):
            L = lz.make_koenigs(p, 1.0)
            h = 1e-6
            for z in sample_disk(100, 5.0, seed=3):
                num = (lz.linearizer_eval(L, z + h) - lz.linearizer_eval(L, z - h)) / (2 * h)
                d = lz.linearizer_derivative(L, z)
                assert d == pytest.approx(num, rel=1e-6)

    def test_derivative_golden(self):
        L = lz.make_koenigs(P_SQUARE, 1.0)
        assert lz.linearizer_derivative(L, 1.0) == pytest.approx(np.e, abs=1e-9)
        Lc = lz.make_koenigs(P_COSH, 1.0)
        assert lz.linearizer_derivative(Lc, 0.0) == pytest.approx(1.0, abs=1e-12)


class TestDisjointType:
    def test_exp_family(self):
        L = lz.make_koenigs(P_SQUARE, 1.0)
        dt = lz.make_disjoint_type(L, np.e)
        # f_kappa = e^{kappa z}; separation demands sampled |f| <= R on the disk
        assert abs(dt.kappa) <= 0.5
        for z in sample_disk(200, np.e, seed=4):
            assert abs(lz.linearizer_eval(dt, z)) <= np.e + 1e-9

    def test_identity_when_already_disjoint(self):
        L = dataclasses.replace(lz.make_koenigs(P_SQUARE, 1.0), kappa=1 / 16)
        dt = lz.make_disjoint_type(L, np.e)
        assert dt.kappa == L.kappa

    def test_cosh_family(self):
        L = lz.make_koenigs(P_COSH, 1.0)
        dt = lz.make_disjoint_type(L, 4.0)
        for z in sample_disk(200, 4.0, seed=5):
            assert abs(lz.linearizer_eval(dt, z)) <= 4.0 + 1e-9


class TestHandles:
    def test_exp_power_eval(self):
        h = lz.exp_power(1.0, 2)
        assert lz.function_eval(h, 1 + 1j) == pytest.approx(
            -0.4161468 + 0.9092974j, abs=1e-6
        )

    def test_composite(self):
        inner = lz.exp_power(np.exp(-6.0), 1)  # e^{z-6}
        F = lz.composite_exp(inner)
        assert lz.function_eval(F, np.log(10)) == pytest.approx(np.exp(4.0), rel=1e-12)

    def test_koenigs_at_one(self):
        h = lz.koenigs_handle(P_SQUARE, 1.0)
        assert lz.function_eval(h, 1.0) == pytest.approx(np.e, abs=1e-9)

    def test_derivative_consistency(self):
        handles = [
            lz.exp_power(0.25, 1),
            lz.exp_power(1.0, 2),
            lz.koenigs_handle(P_SQUARE, 1.0),
            lz.composite_exp(lz.exp_power(np.exp(-6.0), 1)),
        ]
        h = 1e-6
        for handle in handles:
            for z in sample_disk(100, 2.0, seed=6) + 2.5:
                num = (lz.function_eval(handle, z + h) - lz.function_eval(handle, z - h)) / (2 * h)
                d = lz.function_derivative(handle, z)
                assert d == pytest.approx(num, rel=1e-5)

    def test_metric_derivative(self):
        assert lz.metric_derivative(lz.exp_power(1.0, 1), 3 + 4j) == pytest.approx(5.0)
        assert lz.metric_derivative(lz.exp_power(1.0, 2), 2.0) == pytest.approx(8.0)
        hk = lz.koenigs_handle(P_SQUARE, 1.0)
        assert lz.metric_derivative(hk, 2.0) == pytest.approx(2.0, abs=1e-9)
        assert lz.metric_derivative(hk, 0.5 + 0.1j) > 0

    def test_metric_derivative_guards(self):
        with pytest.raises(ZeroDenominator):
            lz.metric_derivative(lz.exp_power(1.0, 1), 0.0)

    def test_json_roundtrip(self):
        handles = [
            lz.exp_power(0.25 + 0.1j, 3),
            lz.koenigs_handle(P_COSH, 1.0, kappa=0.125),
            lz.composite_exp(lz.exp_power(np.exp(-6.0), 1)),
        ]
        for h in handles:
            back = lz.handle_from_json(lz.handle_to_json(h))
            assert back.variant == h.variant
            z = 1.3 + 0.2j
            assert lz.function_eval(back, z) == pytest.approx(lz.function_eval(h, z))
