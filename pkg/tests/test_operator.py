import numpy as np
import pytest

import wegnerlab as wl
from wegnerlab.operator import OperatorError, export_text

from conftest import constant_realization, zero_realization


def free_operator(box_length, m, bc="dirichlet"):
    site = wl.indicator_site(0.15)
    model = wl.CanonicalModel(wl.zero_periodic(), site, wl.uniform_density(0, 1e-300))
    grid = wl.GridSpec(box_length, m, bc)
    return wl.assemble(model, zero_realization(box_length, site), grid), grid


def fd_dirichlet_spectrum(box_length, m):
    # closed-form eigenvalues of the free central-difference Dirichlet matrix
    h = 1.0 / m
    k = np.arange(1, box_length * m)
    return (4.0 / h**2) * np.sin(k * np.pi * h / (2.0 * box_length)) ** 2


class TestGridSpec:
    def test_counts_and_nodes(self):
        g = wl.GridSpec(2, 4)
        assert g.n == 7
        assert g.nodes() == pytest.approx(np.arange(-0.75, 0.76, 0.25))
        gn = wl.GridSpec(2, 4, "neumann")
        assert gn.n == 9
        assert gn.nodes()[0] == -1.0 and gn.nodes()[-1] == 1.0

    def test_lattice_sites_are_nodes(self):
        for l, m in ((3, 2), (4, 3), (16, 32)):
            nodes = wl.GridSpec(l, m, "neumann").nodes()
            for k in wl.lattice_sites(l):
                assert np.min(np.abs(nodes - k)) == 0.0

    def test_validation(self):
        with pytest.raises(OperatorError):
            wl.GridSpec(0, 4)
        with pytest.raises(OperatorError):
            wl.GridSpec(2, 0)
        with pytest.raises(OperatorError):
            wl.GridSpec(1, 3)  # odd l*m: lattice sites would miss the grid
        with pytest.raises(OperatorError):
            wl.GridSpec(2, 4, "periodic")


class TestAssemble:
    def test_free_l1_m4(self, free_op):
        assert free_op.diag == pytest.approx([32.0, 32.0, 32.0])
        assert free_op.offdiag == pytest.approx([-16.0, -16.0])

    def test_neumann_endpoints(self):
        op, _ = free_operator(1, 4, "neumann")
        assert op.diag[0] == 16.0 and op.diag[-1] == 16.0
        assert op.diag[1] == 32.0

    def test_constant_shift(self, model):
        grid = wl.GridSpec(2, 8)
        base = wl.assemble(model, zero_realization(2, model.site), grid)
        # constant background c shifts diagonal and spectrum by c
        shifted_model = wl.CanonicalModel(wl.PeriodicPotential(np.array([2.5])),
                                          model.site, model.coupling)
        shifted = wl.assemble(shifted_model, zero_realization(2, model.site), grid)
        assert shifted.diag == pytest.approx(base.diag + 2.5)
        assert wl.dense_spectrum(shifted) == pytest.approx(wl.dense_spectrum(base) + 2.5)

    def test_closed_form_spectrum(self):
        for l, m in ((1, 4), (1, 32), (2, 16)):
            op, _ = free_operator(l, m)
            expected = fd_dirichlet_spectrum(l, m)
            got = wl.dense_spectrum(op)
            assert np.max(np.abs(got - expected) / expected) < 1e-10

    def test_box_mismatch(self, model):
        real = zero_realization(4, model.site)
        with pytest.raises(OperatorError, match="differs"):
            wl.assemble(model, real, wl.GridSpec(8, 4))

    def test_gershgorin_contains_spectrum(self, model):
        grid = wl.GridSpec(4, 8)
        real = constant_realization(4, model.site, 1.0)
        op = wl.assemble(model, real, grid)
        lo, hi = op.gershgorin()
        vals = wl.dense_spectrum(op)
        assert lo <= vals[0] and vals[-1] <= hi


class TestDirichletNeumannBoxes:
    def test_neumann_below_dirichlet_indexwise(self, model):
        for seed in (0, 1):
            real = wl.sample_couplings(model.coupling, np.random.default_rng(seed),
                                       wl.coupling_sites(4, model.site), 4)
            vd = wl.dense_spectrum(wl.assemble(model, real, wl.GridSpec(4, 8)))
            vn = wl.dense_spectrum(wl.assemble(model, real, wl.GridSpec(4, 8, "neumann")))
            assert np.all(vn[: vd.size] <= vd + 1e-9 * 128)


class TestSplitAt:
    def test_dirichlet_center_cut_is_direct_sum(self):
        op, _ = free_operator(2, 4)  # n = 7, center node at 0
        cut = wl.split_at(op, 0.0, 0.0, "dirichlet")
        assert cut.n == 6
        assert cut.offdiag[2] == 0.0
        block = wl.TridiagonalOperator(op.diag[:3], op.offdiag[:2], op.h, op.bc,
                                       op.positions[:3])
        expected = np.sort(np.concatenate([wl.dense_spectrum(block)] * 2))
        assert wl.dense_spectrum(cut) == pytest.approx(expected)

    def test_neumann_cut_reflected_stencil(self):
        op, _ = free_operator(2, 4)
        cut = wl.split_at(op, 0.0, 0.5, "neumann")
        # severed edges just outside the cut nodes, half-weight diagonals there
        i_left = int(np.flatnonzero(op.positions == -0.5)[0])
        i_right = int(np.flatnonzero(op.positions == 0.5)[0])
        assert cut.offdiag[i_left - 1] == 0.0 and cut.offdiag[i_right] == 0.0
        assert cut.diag[i_left] == pytest.approx(op.diag[i_left] - 16.0)
        assert cut.diag[i_right] == pytest.approx(op.diag[i_right] - 16.0)

    def test_counting_directions(self, model):
        grid = wl.GridSpec(6, 8)
        real = wl.sample_couplings(model.coupling, np.random.default_rng(7),
                                   wl.coupling_sites(6, model.site), 6)
        op = wl.assemble(model, real, grid)
        op_d = wl.split_at(op, 0, model.site.half_width, "dirichlet")
        op_n = wl.split_at(op, 0, model.site.half_width, "neumann")
        for e in np.linspace(-1.0, 260.0, 57):
            c, cd, cn = (wl.count_below(o, e) for o in (op, op_d, op_n))
            assert cn >= c >= cd
            assert abs(cn - c) <= 2 and abs(cd - c) <= 2

    def test_dimension_bookkeeping(self, model):
        grid = wl.GridSpec(6, 8)
        real = zero_realization(6, model.site)
        op = wl.assemble(model, real, grid)
        top = op.gershgorin()[1] + 1.0
        op_d = wl.split_at(op, 1, 0.25, "dirichlet")
        op_n = wl.split_at(op, 1, 0.25, "neumann")
        assert wl.count_below(op_d, top) == op.n - 2
        assert wl.count_below(op_n, top) == op.n

    def test_cut_positions_validated(self, free_op):
        with pytest.raises(OperatorError):
            wl.split_at(free_op, 5.0, 0.0, "dirichlet")  # outside the box
        with pytest.raises(OperatorError):
            wl.split_at(free_op, 0.0, 0.0, "robin")
        op, _ = free_operator(2, 4, "neumann")
        with pytest.raises(OperatorError):
            wl.split_at(op, -1.0, 0.0, "neumann")  # no edge left of the boundary node

    def test_snap_warning(self, model):
        op, _ = free_operator(2, 4)
        with pytest.warns(UserWarning, match="snapped"):
            wl.split_at(op, 0.125, 0.0, "dirichlet")

    def test_cuts_recorded(self):
        op, _ = free_operator(2, 4)
        cut = wl.split_at(op, 0.0, 0.25, "neumann")
        assert cut.cuts == ((-0.25, "neumann"), (0.25, "neumann"))


class TestExport:
    def test_three_column_roundtrip(self, free_op):
        text = export_text(free_op)
        lines = text.strip().splitlines()
        assert lines[0].startswith("#")
        assert len(lines) == 1 + free_op.n
        i, d, e = lines[1].split()
        assert int(i) == 0
        assert float(d) == free_op.diag[0]
        assert float(e) == free_op.offdiag[0]
        assert len(lines[-1].split()) == 2
