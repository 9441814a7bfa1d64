import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chbiot.basis import Domain, Quadrature, build_bases, default_grid, inner, project_y, project_z
from chbiot.verify import basis_fidelity


@pytest.mark.parametrize("lengths, k", [((1.0,), 16), ((2.0,), 64), ((1.0, 1.0), 12), ((1.0, 0.5), 16)])
def test_fidelity_of_both_bases(lengths, k):
    for basis in build_bases(Domain(lengths), k):
        fid = basis_fidelity(basis)
        assert fid["gram"] <= 1e-12
        assert fid["eigen"] <= 1e-10
        assert fid["boundary"] <= 1e-12


def test_closed_form_eigenvalues_1d():
    Z, Y = build_bases(Domain((2.0,)), 5)
    j = np.arange(5)
    assert np.allclose(Z.eigenvalues, (j * np.pi / 2.0) ** 2, rtol=1e-15)
    assert np.allclose(Y.eigenvalues, ((j + 0.5) * np.pi / 2.0) ** 2, rtol=1e-15)


def test_z_first_mode_is_constant():
    Z, _ = build_bases(Domain((1.0, 2.0)), 6)
    assert Z.eigenvalues[0] == 0.0
    assert np.allclose(Z.values[0], 1.0 / np.sqrt(2.0))


def test_2d_modes_sorted_by_eigenvalue():
    Z, Y = build_bases(Domain((1.0, 1.0)), 12)
    assert np.all(np.diff(Z.eigenvalues) >= 0)
    assert np.all(np.diff(Y.eigenvalues) >= 0)


def test_single_mode_projection_is_unit_vector():
    Z, Y = build_bases(Domain((1.0,)), 8)
    for basis in (Z, Y):
        c = basis.project(basis.values[3]).coeffs
        e = np.zeros(8)
        e[3] = 1.0
        assert np.abs(c - e).max() <= 1e-13


def test_projection_rejects_wrong_family():
    Z, Y = build_bases(Domain((1.0,)), 4)
    with pytest.raises(ValueError):
        project_z(Y, np.zeros(Y.quad.size))
    with pytest.raises(ValueError):
        project_y(Z, np.zeros(Z.quad.size))


def test_under_resolved_grid_rejected():
    with pytest.raises(ValueError, match="under-resolved"):
        build_bases(Domain((1.0,)), 10, grid=12)
    build_bases(Domain((1.0,)), 10, grid=20)


def test_default_grid_rule():
    assert default_grid(Domain((1.0,)), 10) == (3 * 10 + 16,)


def test_invalid_domain_and_size():
    with pytest.raises(ValueError):
        Domain((1.0, -1.0))
    with pytest.raises(ValueError):
        Domain((1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        build_bases(Domain((1.0,)), 0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_parseval_and_exact_laplacian(coeffs):
    Z, Y = build_bases(Domain((1.0,)), 6)
    c = np.array(coeffs)
    for basis in (Z, Y):
        f = basis.field(c)
        assert np.isclose(inner(f, f), np.dot(c, c), rtol=1e-12, atol=1e-13)
        lap = basis.to_nodes(f.laplacian_coeffs().coeffs)
        assert np.allclose(lap, c @ basis.evaluate_laplacian(basis.quad.nodes), atol=1e-10 * (1 + basis.eigenvalues.max()))


def test_evaluate_matches_stored_tables():
    Z, Y = build_bases(Domain((1.0, 1.0)), 6)
    x = Z.quad.nodes
    for basis in (Z, Y):
        assert np.allclose(basis.evaluate(x), basis.values, atol=1e-14)
        assert np.allclose(basis.evaluate_grad(x), basis.grads, atol=1e-13)


def test_quadrature_integrates_polynomials_exactly():
    q = Quadrature.gauss(Domain((2.0, 3.0)), (5, 5))
    x, y = q.nodes.T
    assert np.isclose(q.integrate(x**3 * y**2), 2.0**4 / 4 * 3.0**3 / 3, rtol=1e-14)
    assert np.isclose(q.weights.sum(), 6.0, rtol=1e-15)


def test_boundary_rules_measure():
    q = Quadrature.gauss(Domain((2.0, 3.0)), (6, 7))
    total = sum(w.sum() for _, w in q.boundary_rules())
    # Neumann part: x = Lx plus y = 0 and y = Ly
    assert np.isclose(total, 3.0 + 2.0 + 2.0)
