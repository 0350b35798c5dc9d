import math

import pytest
from gmpy2 import mpq

from fusionkz.errors import DomainError, InvarianceError
from fusionkz.linalg import is_zero, mat_mul, qeye, qzeros
from fusionkz.modules import (
    casimir_matrix,
    decompose,
    defining_module,
    fundamental_module,
    irreducible,
    module_from_json,
    module_to_json,
    quotient,
    singular_vectors,
    submodule_closure,
    subspace_from_vectors,
    tensor,
    trivial_module,
)
from fusionkz.rootdata import build_root_datum, casimir_eigenvalue

from oracles import clebsch_gordan_sl2, weyl_dim_A


def test_fundamental_dimensions(a2):
    assert fundamental_module(a2, 1).dim == 3
    assert fundamental_module(a2, 2).dim == 3
    with pytest.raises(DomainError):
        fundamental_module(a2, 3)


def test_fundamental_dimensions_a3():
    a3 = build_root_datum("A", 3)
    for k in range(1, 4):
        assert fundamental_module(a3, k).dim == math.comb(4, k)
        assert fundamental_module(a3, k).check_brackets()


def test_defining_module_a1(a1):
    v = defining_module(a1)
    assert v.dim == 2
    assert v.weights == ((1,), (-1,))


def test_exterior_square_highest_weight(a2):
    f2 = fundamental_module(a2, 2)
    sing = singular_vectors(f2)
    assert set(sing) == {(0, 1)}
    assert decompose(f2) == [((0, 1), 1)]


def test_tensor_dimension_and_weights(a1):
    v = defining_module(a1)
    vv = tensor(v, v)
    assert vv.dim == 4
    assert vv.weights == ((2,), (0,), (0,), (-2,))
    assert vv.check_brackets()
    assert vv.check_cartan_diagonal()


def test_tensor_datum_mismatch(a1, a2):
    with pytest.raises(DomainError):
        tensor(defining_module(a1), defining_module(a2))


def test_top_tensor_weight_adds(a2):
    f1 = fundamental_module(a2, 1)
    f2 = fundamental_module(a2, 2)
    prod = tensor(f1, f2)
    assert prod.weights[0] == (1, 1)


@pytest.mark.parametrize("m", range(0, 5))
def test_irreducible_dims_a1(a1, m):
    assert irreducible(a1, (m,)).dim == weyl_dim_A(1, (m,)) == m + 1


@pytest.mark.parametrize("lam", [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (2, 1)])
def test_irreducible_dims_a2(a2, lam):
    mod = irreducible(a2, lam)
    assert mod.dim == weyl_dim_A(2, lam)
    assert mod.check_brackets()
    assert decompose(mod) == [(lam, 1)]


def test_irreducible_rejects_non_dominant(a1):
    with pytest.raises(DomainError):
        irreducible(a1, (-2,))


def test_trivial_module(a2):
    t = trivial_module(a2)
    assert t.dim == 1
    assert decompose(t) == [((0, 0), 1)]


def test_singular_vectors_tensor_square(a1):
    v = defining_module(a1)
    sing = singular_vectors(tensor(v, v))
    assert {w: rows.shape[0] for w, rows in sing.items()} == {(2,): 1, (0,): 1}
    # the weight-0 singular vector is the antisymmetric combination
    row = sing[(0,)][0]
    assert row[1] != 0 and row[2] == -row[1]


@pytest.mark.parametrize("a,b", [(1, 1), (2, 1), (2, 2), (3, 2)])
def test_decompose_matches_clebsch_gordan(a1, a, b):
    prod = tensor(irreducible(a1, (a,)), irreducible(a1, (b,)))
    got = {lam[0]: mult for lam, mult in decompose(prod)}
    assert got == {c: 1 for c in clebsch_gordan_sl2(a, b)}


def test_decompose_partitions_dimension(a2):
    prod = tensor(irreducible(a2, (1, 0)), irreducible(a2, (1, 1)))
    total = sum(mult * weyl_dim_A(2, lam) for lam, mult in decompose(prod))
    assert total == prod.dim


def test_closure_of_zero(a1):
    v = defining_module(a1)
    sub = submodule_closure(v, [qzeros(2)])
    assert sub.dim == 0


def test_closure_of_highest_weight_vector_is_everything(a2):
    mod = irreducible(a2, (1, 1))
    seed = qzeros(mod.dim)
    sing = singular_vectors(mod)[(1, 1)]
    sub = submodule_closure(mod, [sing[0]])
    assert sub.dim == mod.dim


def test_closure_top_square(a1):
    v = defining_module(a1)
    vv = tensor(v, v)
    seed = qzeros(4)
    seed[0] = mpq(1)  # v_omega ⊗ v_omega
    sub = submodule_closure(vv, [seed])
    assert sub.dim == 3
    assert sub.is_invariant()
    weights = {vv.weights[p] for p in sub.span.pivots}
    assert weights == {(2,), (0,), (-2,)}


def test_quotient_by_zero_is_identity(a1):
    v = defining_module(a1)
    sub = subspace_from_vectors(v, qzeros((0, 2)))
    quot, proj = quotient(v, sub)
    assert quot.dim == 2
    assert is_zero(proj - qeye(2))
    for a in range(a1.dim_g):
        assert is_zero(quot.action[a] - v.action[a])


def test_quotient_by_everything_is_zero(a1):
    v = defining_module(a1)
    sub = subspace_from_vectors(v, qeye(2))
    quot, proj = quotient(v, sub)
    assert quot.dim == 0


def test_quotient_tensor_square(a1):
    v = defining_module(a1)
    vv = tensor(v, v)
    seed = qzeros(4)
    seed[0] = mpq(1)
    sub = submodule_closure(vv, [seed])
    quot, proj = quotient(vv, sub)
    assert quot.dim == 1
    assert decompose(quot) == [((0,), 1)]
    # projection intertwines exactly
    for a in range(a1.dim_g):
        assert is_zero(mat_mul(proj, vv.action[a]) - mat_mul(quot.action[a], proj))


def test_quotient_rejects_non_invariant(a1):
    v = defining_module(a1)
    vv = tensor(v, v)
    seed = qzeros((1, 4))
    seed[0, 0] = mpq(1)
    sub = subspace_from_vectors(vv, seed)
    with pytest.raises(InvarianceError):
        quotient(vv, sub)


@pytest.mark.parametrize("lam", [(0,), (1,), (2,), (3,)])
def test_casimir_scalar_on_irreducibles(a1, lam):
    mod = irreducible(a1, lam)
    cm = casimir_matrix(mod)
    assert is_zero(cm - casimir_eigenvalue(a1, lam) * qeye(mod.dim))


def test_casimir_commutes_with_action(a2):
    mod = tensor(fundamental_module(a2, 1), fundamental_module(a2, 2))
    cm = casimir_matrix(mod)
    for a in range(a2.dim_g):
        assert is_zero(mat_mul(cm, mod.action[a]) - mat_mul(mod.action[a], cm))


def test_module_json_roundtrip(a1):
    mod = irreducible(a1, (2,))
    doc = module_to_json(mod)
    back = module_from_json(a1, doc)
    assert back.dim == mod.dim
    assert back.weights == mod.weights
    for x, y in zip(back.action, mod.action):
        assert is_zero(x - y)


def test_zero_dimensional_module_is_legal(a1):
    v = defining_module(a1)
    sub = subspace_from_vectors(v, qeye(2))
    quot, _ = quotient(v, sub)
    assert quot.dim == 0
    assert decompose(quot) == []
    again = tensor(quot, v)
    assert again.dim == 0
