import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import wegnerlab as wl
from wegnerlab.spectral import ConvergenceError, SpectralError

from conftest import random_operator


def dense_count(op, e):
    return int((wl.dense_spectrum(op) < e).sum())


class TestCountBelow:
    def test_free_l1_m4(self, free_op):
        # spectrum {9.3726, 32, 54.6274}: exactly one eigenvalue below 10
        assert wl.count_below(free_op, 10.0) == 1
        assert wl.count_below(free_op, 9.3725) == 0
        assert wl.count_below(free_op, 100.0) == 3

    def test_below_gershgorin_is_zero(self, free_op):
        lo, hi = free_op.gershgorin()
        assert wl.count_below(free_op, lo - 1.0) == 0
        assert wl.count_below(free_op, hi + 1.0) == free_op.n

    def test_rejects_nonfinite(self, free_op):
        with pytest.raises(SpectralError):
            wl.count_below(free_op, np.inf)

    def test_matches_dense_on_random_instances(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            op = random_operator(rng)
            e = rng.uniform(-300, 300)
            assert wl.count_below(op, e) == dense_count(op, e)

    def test_exact_pivot_hits(self):
        # shifts equal to diagonal entries force zero pivots in the recurrence
        d = np.array([5.0, 5.0, 5.0, 5.0])
        e = np.array([1.0, 2.0, 1.0])
        op = wl.TridiagonalOperator(d, e, 1.0, "dirichlet", np.arange(4.0))
        for shift in (5.0, 4.0, 6.0, 5.0 - 1e-15):
            assert wl.count_below(op, shift) == dense_count(op, shift)
        # probing a decoupled matrix exactly on an eigenvalue resolves the tie
        # downward (the pinned negative pivot replacement)
        dd = wl.TridiagonalOperator(np.array([1.0, 2.0, 3.0]), np.zeros(2), 1.0,
                                    "dirichlet", np.arange(3.0))
        assert wl.count_below(dd, 2.0) == 2
        assert wl.count_below(dd, 2.0 - 1e-15) == 1
        assert wl.count_below(dd, 3.0) == 3

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), e1=st.floats(-250, 250), e2=st.floats(-250, 250))
    def test_monotone_in_energy(self, seed, e1, e2):
        op = random_operator(np.random.default_rng(seed))
        lo, hi = sorted((e1, e2))
        assert wl.count_below(op, lo) <= wl.count_below(op, hi)


class TestTraceProjection:
    def test_empty_open_window(self, free_op):
        assert wl.trace_projection(free_op, wl.SpectralWindow(5, 5, False, False)) == 0

    def test_full_spectrum_window(self, free_op):
        lo, hi = free_op.gershgorin()
        assert wl.trace_projection(free_op, wl.SpectralWindow(lo, hi)) == free_op.n

    def test_closure_flags_at_eigenvalue(self):
        dd = wl.TridiagonalOperator(np.array([1.0, 2.0, 3.0]), np.zeros(2), 1.0,
                                    "dirichlet", np.arange(3.0))
        assert wl.trace_projection(dd, wl.SpectralWindow(2.0, 3.0, True, True)) == 2
        assert wl.trace_projection(dd, wl.SpectralWindow(2.0, 3.0, False, False)) == 0
        assert wl.trace_projection(dd, wl.SpectralWindow(2.0, 3.0, True, False)) == 1
        assert wl.trace_projection(dd, wl.SpectralWindow(2.0, 2.0, True, True)) == 1

    def test_matches_dense_on_random_windows(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            op = random_operator(rng)
            a, b = np.sort(rng.uniform(-250, 250, 2))
            got = wl.trace_projection(op, wl.SpectralWindow(a, b, True, False))
            vals = wl.dense_spectrum(op)
            assert got == int(((vals >= a) & (vals < b)).sum())

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1),
           cuts=st.lists(st.floats(-200, 200), min_size=3, max_size=3, unique=True))
    def test_additive_over_adjacent_windows(self, seed, cuts):
        op = random_operator(np.random.default_rng(seed))
        a, c, b = sorted(cuts)
        whole = wl.trace_projection(op, wl.SpectralWindow(a, b, True, False))
        left = wl.trace_projection(op, wl.SpectralWindow(a, c, True, False))
        right = wl.trace_projection(op, wl.SpectralWindow(c, b, True, False))
        assert whole == left + right

    def test_rejects_reversed_window(self):
        with pytest.raises(SpectralError):
            wl.SpectralWindow(2.0, 1.0)


class TestEigenvaluesIn:
    def test_free_closed_forms(self, free_op):
        got = wl.eigenvalues_in(free_op, wl.SpectralWindow(0, 60), max_count=5)
        expected = 64.0 * np.sin(np.arange(1, 4) * np.pi / 8.0) ** 2
        assert got == pytest.approx(expected, abs=1e-6)

    def test_empty_window(self, free_op):
        assert wl.eigenvalues_in(free_op, wl.SpectralWindow(100, 200), 5).size == 0

    def test_max_count_guard(self, free_op):
        with pytest.raises(SpectralError, match="max_count"):
            wl.eigenvalues_in(free_op, wl.SpectralWindow(0, 100), max_count=2)

    def test_matches_dense(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            op = random_operator(rng, n=int(rng.integers(4, 64)))
            vals = wl.dense_spectrum(op)
            a, b = np.sort(rng.uniform(vals[0] - 1, vals[-1] + 1, 2))
            got = wl.eigenvalues_in(op, wl.SpectralWindow(a, b, True, False), op.n)
            want = vals[(vals >= a) & (vals < b)]
            assert got.size == want.size
            if want.size:
                assert got == pytest.approx(want, abs=1e-9 * op.scale)

    def test_multiplicity_emitted(self):
        d = np.array([2.0, 2.0, 2.0])
        op = wl.TridiagonalOperator(d, np.zeros(2), 1.0, "dirichlet", np.arange(3.0))
        got = wl.eigenvalues_in(op, wl.SpectralWindow(0, 4), 3)
        assert got == pytest.approx([2.0, 2.0, 2.0], abs=1e-9)

    def test_eigenvalue_by_index_matches_dense(self):
        rng = np.random.default_rng(19)
        for _ in range(25):
            op = random_operator(rng, n=int(rng.integers(3, 48)))
            vals = wl.dense_spectrum(op)
            k = int(rng.integers(1, op.n + 1))
            assert wl.eigenvalue_by_index(op, k) == pytest.approx(vals[k - 1],
                                                                  abs=1e-9 * op.scale)


class TestEigenpair:
    def test_free_ground_state_positive(self, free_op):
        lam = wl.eigenvalue_by_index(free_op, 1)
        pair = wl.eigenpair(free_op, lam)
        assert np.all(pair.vector > 0)  # Perron property of the Jacobi sign structure
        assert pair.value == pytest.approx(64.0 * np.sin(np.pi / 8) ** 2, abs=1e-9)

    def test_normalization_and_residual(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            op = random_operator(rng, n=int(rng.integers(4, 64)), h=0.25)
            vals = wl.dense_spectrum(op)
            gaps = np.diff(vals)
            k = int(np.argmax(np.minimum(np.append(gaps, np.inf),
                                         np.insert(gaps, 0, np.inf))))
            try:
                pair = wl.eigenpair(op, float(vals[k]))
            except ConvergenceError:
                continue
            assert op.h * np.sum(pair.vector**2) == pytest.approx(1.0, abs=1e-12)
            assert pair.residual <= 1e-8 * (abs(pair.value) + op.scale)

    def test_start_vector_independence(self):
        rng = np.random.default_rng(29)
        op = random_operator(rng, n=32)
        vals = wl.dense_spectrum(op)
        gaps = np.minimum(np.append(np.diff(vals), np.inf),
                          np.insert(np.diff(vals), 0, np.inf))
        k = int(np.argmax(gaps))
        p1 = wl.eigenpair(op, float(vals[k]), start=rng.standard_normal(32))
        p2 = wl.eigenpair(op, float(vals[k]), start=rng.standard_normal(32))
        assert p1.value == pytest.approx(p2.value, abs=1e-10 * op.scale)
        assert np.abs(p1.vector) == pytest.approx(np.abs(p2.vector), abs=1e-8)

    def test_matches_dense_vector(self, free_op):
        lam = wl.eigenvalue_by_index(free_op, 2)
        pair = wl.eigenpair(free_op, lam)
        vals, vecs = wl.dense_spectrum(free_op, vectors=True)
        assert np.abs(pair.vector) == pytest.approx(np.abs(vecs[:, 1]), abs=1e-8)


class TestDenseSpectrum:
    def test_free_closed_form(self, free_op):
        assert wl.dense_spectrum(free_op) == pytest.approx([9.3726, 32.0, 54.6274],
                                                           abs=1e-4)

    def test_diagonal_matrix(self):
        d = np.array([3.0, -1.0, 2.0])
        op = wl.TridiagonalOperator(np.sort(d), np.zeros(2), 1.0, "dirichlet",
                                    np.arange(3.0))
        assert wl.dense_spectrum(op) == pytest.approx(np.sort(d))

    def test_size_guard(self):
        n = 5000
        op = wl.TridiagonalOperator(np.ones(n), np.zeros(n - 1), 1.0, "dirichlet",
                                    np.arange(float(n)))
        with pytest.raises(SpectralError):
            wl.dense_spectrum(op)

    def test_agrees_with_bisection_over_full_range(self):
        rng = np.random.default_rng(31)
        op = random_operator(rng, n=40)
        lo, hi = op.gershgorin()
        vals = wl.dense_spectrum(op)
        located = wl.eigenvalues_in(op, wl.SpectralWindow(lo - 1, hi + 1), op.n)
        assert located == pytest.approx(vals, abs=1e-9 * op.scale)
