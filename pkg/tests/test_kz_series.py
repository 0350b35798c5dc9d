import pytest
from gmpy2 import mpq
from mpmath import mp, mpf

from fusionkz.errors import DomainError, NotInCategory
from fusionkz.kz import (
    build_omega_system,
    evaluate_series,
    float_matrix,
    max_abs,
    series_at_one,
    series_at_zero,
)
from fusionkz.linalg import is_zero, kron, qeye, qzeros
from fusionkz.modules import defining_module, dual_action, irreducible, trivial_module


@pytest.fixture(scope="module")
def sys_vvt(a1):
    v = defining_module(a1)
    triv = trivial_module(a1)
    return build_omega_system(v, v, triv, 1)


@pytest.fixture(scope="module")
def sys_cube2(a1):
    L2 = irreducible(a1, (2,))
    return build_omega_system(L2, L2, L2, 2)


def test_omega_example_vvt(sys_vvt):
    assert sorted(sys_vvt.pair12.eigenvalues) == [mpq(-1, 2), mpq(1, 6)]
    assert is_zero(sys_vvt.B)
    assert is_zero(sys_vvt.C13)


def test_omega_example_cube(sys_cube2):
    assert sorted(sys_cube2.pair12.eigenvalues) == [mpq(-1), mpq(-1, 2), mpq(1, 2)]
    classes = {cls.base: cls.offsets for cls in sys_cube2.pair12.classes}
    assert classes == {mpq(-1): (0,), mpq(-1, 2): (0, 1)}


def test_omega_trivial_triple(a1):
    triv = trivial_module(a1)
    sys_ = build_omega_system(triv, triv, triv, 0)
    assert is_zero(sys_.A)
    assert is_zero(sys_.B)


def test_omega_rejects_non_members(a1):
    v = defining_module(a1)
    L2 = irreducible(a1, (2,))
    with pytest.raises(NotInCategory):
        build_omega_system(L2, v, v, 1)


def test_dual_side_convention(sys_vvt, a1):
    # A^T equals the module-side sum of b_a ⊗ b^a ⊗ 1, divided by kappa
    u1, u2, u3 = sys_vvt.modules
    total = qzeros((sys_vvt.dim, sys_vvt.dim))
    i3 = qeye(u3.dim)
    for a in range(a1.dim_g):
        total = total + kron(kron(u1.action[a], dual_action(u2, a)), i3)
    assert is_zero(sys_vvt.A.T - total / sys_vvt.kappa)


def test_pair_element_is_symmetric(a1):
    # sum_a b_a ⊗ b^a = sum_a b^a ⊗ b_a as operators
    v = defining_module(a1)
    fwd = qzeros((4, 4))
    rev = qzeros((4, 4))
    for a in range(a1.dim_g):
        fwd = fwd + kron(v.action[a], dual_action(v, a))
        rev = rev + kron(dual_action(v, a), v.action[a])
    assert is_zero(fwd - rev)


def test_commutation_identities(sys_cube2, sys_vvt):
    assert sys_cube2.omega_commutators_are_zero()
    assert sys_vvt.omega_commutators_are_zero()


def test_commutation_identities_dense(sys_vvt):
    # cross-check the factored computation against dense matrices
    from fusionkz.linalg import mat_mul

    a, b, c = sys_vvt.A, sys_vvt.C13, sys_vvt.B
    for x, y in ((a, b + c), (b, a + c), (c, a + b)):
        assert is_zero(mat_mul(x, y) - mat_mul(y, x))


def test_projection_algebra(sys_cube2, sys_vvt):
    assert sys_cube2.projection_algebra_is_exact()
    assert sys_vvt.projection_algebra_is_exact()


def test_series_eigencase_is_single_power(sys_vvt):
    pe = sys_vvt.pair12
    w0 = qzeros((sys_vvt.dim, 1))
    w0[0, 0] = mpq(1)
    w = sys_vvt.apply_pair12(pe.projections[mpq(1, 6)], w0)
    ser = series_at_zero(sys_vvt, w, 12)
    populated = {
        (ci, i, j) for ci, co in enumerate(ser.coeffs) for (i, j) in co
    }
    cls_idx = [k for k, c in enumerate(ser.classes) if c.base == mpq(1, 6)][0]
    assert populated == {(cls_idx, 0, 0)}
    vals, tail = ser.evaluate(mpq(1, 2), 192)
    assert tail == 0
    with mp.workprec(208):
        expect = float_matrix(w) * mp.power(mpf(2), mpf(-1) / 6)
        assert max_abs(vals - expect) < mpf(2) ** -180


def test_series_zero_initial_is_zero(sys_cube2):
    ser = series_at_zero(sys_cube2, qzeros((sys_cube2.dim, 1)), 8)
    assert all(not co for co in ser.coeffs)
    vals, tail = ser.evaluate(mpq(1, 2), 64)
    assert max_abs(vals) == 0
    assert tail == 0


def test_series_initial_datum_invariants(sys_cube2):
    w = qzeros((sys_cube2.dim, 1))
    for k in range(sys_cube2.dim):
        w[k, 0] = mpq(2 * k + 1, 7)
    ser = series_at_zero(sys_cube2, w, 8)
    pe = sys_cube2.pair12
    for ci, cls in enumerate(ser.classes):
        co = ser.coeffs[ci]
        w00 = co.get((0, 0), qzeros(w.shape))
        assert is_zero(w00 - sys_cube2.apply_pair12(pe.projections[cls.base], w))
        for off in cls.offsets[1:]:
            proj = pe.projections[cls.base + off]
            lhs = sys_cube2.apply_pair12(proj, co.get((off, 0), qzeros(w.shape)))
            rhs = sys_cube2.apply_pair12(proj, w)
            assert is_zero(lhs - rhs)


def test_back_substitution_exact(sys_cube2):
    w = qzeros((sys_cube2.dim, 1))
    for k in range(sys_cube2.dim):
        w[k, 0] = mpq(k + 1, 3)
    ser = series_at_zero(sys_cube2, w, 24)
    assert ser.back_substitution_residual() == 0
    ser1 = series_at_one(sys_cube2, w, 24)
    assert ser1.back_substitution_residual() == 0
    assert any(j > 0 for co in ser.coeffs for (_, j) in co)  # logs really occur


def test_series_at_one_eigencase(a1):
    # with U1 trivial, the swapped system has A-role = pair23 and B-role = 0
    v = defining_module(a1)
    triv = trivial_module(a1)
    sys_ = build_omega_system(triv, v, v, 1)
    pe = sys_.pair23
    mu = sorted(pe.eigenvalues)[0]
    w0 = qzeros((sys_.dim, 1))
    w0[1, 0] = mpq(1)  # v_w ⊗ v_{-w} has a component in both eigenspaces
    w = sys_.apply_pair23(pe.projections[mu], w0)
    assert not is_zero(w)
    ser = series_at_one(sys_, w, 10)
    populated = {(ci, i, j) for ci, co in enumerate(ser.coeffs) for (i, j) in co}
    cls_idx = [k for k, c in enumerate(ser.classes) if c.base == mu][0]
    assert populated == {(cls_idx, 0, 0)}


def test_evaluate_rejects_bad_point(sys_vvt):
    ser = series_at_zero(sys_vvt, qzeros((sys_vvt.dim, 1)), 4)
    for z in (mpq(0), mpq(1), mpq(3, 2), mpq(-1, 2)):
        with pytest.raises(DomainError):
            ser.evaluate(z, 64)


def test_order_below_top_offset_rejected(sys_cube2):
    with pytest.raises(DomainError):
        series_at_zero(sys_cube2, qzeros((sys_cube2.dim, 1)), 0)


def test_convergence_self_test(a1):
    # doubling the order moves the value by less than the reported tail
    v = defining_module(a1)
    sys_ = build_omega_system(v, v, v, 1)
    w = qzeros((sys_.dim, 1))
    for k in range(sys_.dim):
        w[k, 0] = mpq(k + 2, 5)
    ser = series_at_zero(sys_, w, 48)
    v48, tail48 = ser.evaluate(mpq(1, 2), 128)
    ser.extend(96)
    v96, _ = ser.evaluate(mpq(1, 2), 128)
    with mp.workprec(144):
        assert max_abs(v96 - v48) < tail48


def test_vector_initial_api(sys_vvt):
    w = qzeros(sys_vvt.dim)
    w[0] = mpq(1)
    ser = series_at_zero(sys_vvt, w, 16)
    vals, tail = evaluate_series(ser, mpq(1, 2), 96)
    assert vals.shape == (sys_vvt.dim,)
