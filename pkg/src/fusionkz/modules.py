"""Finite-dimensional g-modules as exact rational action matrices.

A GModule carries one action matrix per element of the datum's algebra
basis, plus an integer weight label per basis vector (Cartan generators act
diagonally by those labels). Every construction here is exact; weight
homogeneity is preserved everywhere, which keeps echelon bases and
complements weight-homogeneous for free: vectors of distinct weights have
disjoint support.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from gmpy2 import mpq

from .errors import (
    DimensionError,
    DomainError,
    InternalInvariantViolation,
    InvarianceError,
    UnsupportedAlgebra,
)
from .linalg import (
    RowReducer,
    SpanBasis,
    is_zero,
    kron,
    mat_mul,
    nullspace,
    qarray,
    qeye,
    qq,
    qq_str,
    qzeros,
)
from .rootdata import RootDatum, is_dominant


@dataclass
class GModule:
    datum: RootDatum
    dim: int
    weights: tuple[tuple[int, ...], ...]
    action: tuple[np.ndarray, ...]
    provenance: dict = field(default_factory=dict)

    def act(self, index: int) -> np.ndarray:
        return self.action[index]

    def e_action(self, i: int) -> np.ndarray:
        return self.action[self.datum.chevalley["e"][i]]

    def f_action(self, i: int) -> np.ndarray:
        return self.action[self.datum.chevalley["f"][i]]

    def h_action(self, i: int) -> np.ndarray:
        return self.action[self.datum.chevalley["h"][i]]

    def x_theta_action(self) -> np.ndarray:
        return self.action[self.datum.x_theta]

    def label(self) -> str:
        return _label(self.provenance)

    def check_cartan_diagonal(self) -> bool:
        for i in range(self.datum.rank):
            h = self.h_action(i)
            for a in range(self.dim):
                for b in range(self.dim):
                    want = qq(self.weights[a][i]) if a == b else mpq(0)
                    if h[a, b] != want:
                        return False
        return True

    def check_brackets(self) -> bool:
        """Exact bracket relations over every pair of basis elements.

        Runs on sparse row dictionaries so the check stays affordable on
        large tensor products, whose action matrices are mostly zero.
        """
        g = self.datum.dim_g
        sparse = [_sparse_rows(self.action[a]) for a in range(g)]
        for a in range(g):
            for b in range(a + 1, g):
                lhs = _sparse_commutator(sparse[a], sparse[b])
                coeffs = self.datum.bracket_coefficients(a, b)
                for k in range(g):
                    if coeffs[k] != 0:
                        _sparse_axpy(lhs, -coeffs[k], sparse[k])
                if any(v != 0 for row in lhs for v in row.values()):
                    return False
        return True


def _sparse_rows(mat: np.ndarray) -> list[dict]:
    n = mat.shape[0]
    return [
        {j: mat[i, j] for j in range(mat.shape[1]) if mat[i, j] != 0} for i in range(n)
    ]


def _sparse_mul(a_rows: list[dict], b_rows: list[dict]) -> list[dict]:
    out = [dict() for _ in a_rows]
    for i, row in enumerate(a_rows):
        acc = out[i]
        for k, v in row.items():
            for j, w in b_rows[k].items():
                acc[j] = acc.get(j, 0) + v * w
    return out


def _sparse_axpy(dst: list[dict], coeff, src: list[dict]) -> None:
    for i, row in enumerate(src):
        acc = dst[i]
        for j, v in row.items():
            acc[j] = acc.get(j, 0) + coeff * v


def _sparse_commutator(a_rows: list[dict], b_rows: list[dict]) -> list[dict]:
    lhs = _sparse_mul(a_rows, b_rows)
    _sparse_axpy(lhs, -1, _sparse_mul(b_rows, a_rows))
    return lhs


def _label(prov: dict) -> str:
    kind = prov.get("kind", "?")
    if kind == "trivial":
        return "L(0)"
    if kind == "irreducible":
        return "L(" + ",".join(str(c) for c in prov["weight"]) + ")"
    if kind == "fundamental":
        return f"F{prov['k']}"
    if kind == "defining":
        return "V"
    if kind == "tensor":
        return "(" + "⊗".join(_label(p) for p in prov["factors"]) + ")"
    if kind == "quotient":
        return prov["ambient"] + "/W"
    if kind == "submodule":
        return prov["ambient"] + ">sub"
    return kind


def dual_action(module: GModule, a: int) -> np.ndarray:
    """Action matrix of the dual element b^a on the module."""
    coeffs = module.datum.dual_coefficients(a)
    out = qzeros((module.dim, module.dim))
    for k in range(module.datum.dim_g):
        if coeffs[k] != 0:
            out = out + coeffs[k] * module.action[k]
    return out


def casimir_matrix(module: GModule) -> np.ndarray:
    """Sum over the dual-basis pair of products of action matrices."""
    total = qzeros((module.dim, module.dim))
    for a in range(module.datum.dim_g):
        total = total + mat_mul(module.action[a], dual_action(module, a))
    return total


def trivial_module(datum: RootDatum) -> GModule:
    zero = tuple(qzeros((1, 1)) for _ in range(datum.dim_g))
    return GModule(
        datum=datum,
        dim=1,
        weights=(tuple(0 for _ in range(datum.rank)),),
        action=zero,
        provenance={"kind": "trivial"},
    )


def defining_module(datum: RootDatum) -> GModule:
    n = datum.algebra_basis[0].shape[0]
    weights = []
    for k in range(n):
        weights.append(
            tuple(int(datum.algebra_basis[datum.chevalley["h"][i]][k, k]) for i in range(datum.rank))
        )
    return GModule(
        datum=datum,
        dim=n,
        weights=tuple(weights),
        action=tuple(np.array(m, dtype=object, copy=True) for m in datum.algebra_basis),
        provenance={"kind": "defining"},
    )


def fundamental_module(datum: RootDatum, k: int) -> GModule:
    """L_{omega_k} for type A, realized as the k-th exterior power."""
    if datum.series != "A":
        raise UnsupportedAlgebra("fundamental_module requires the built-in type A realization")
    if not 1 <= k <= datum.rank:
        raise DomainError(f"fundamental index {k} outside 1..{datum.rank}")
    if k == 1:
        mod = defining_module(datum)
        mod.provenance = {"kind": "fundamental", "k": 1}
        return mod
    n = datum.rank + 1
    subsets = list(itertools.combinations(range(n), k))
    index = {s: i for i, s in enumerate(subsets)}
    dim = len(subsets)
    defining = defining_module(datum)

    actions = []
    for m in defining.action:
        out = qzeros((dim, dim))
        for s_idx, subset in enumerate(subsets):
            for pos, t in enumerate(subset):
                for i in range(n):
                    c = m[i, t]
                    if c == 0:
                        continue
                    if i == t:
                        out[s_idx, s_idx] += c
                        continue
                    if i in subset:
                        continue
                    replaced = list(subset)
                    replaced[pos] = i
                    new = tuple(sorted(replaced))
                    sign = (-1) ** _sort_parity(replaced)
                    out[index[new], s_idx] += sign * c
        actions.append(out)

    weights = tuple(
        tuple(sum(defining.weights[t][i] for t in subset) for i in range(datum.rank))
        for subset in subsets
    )
    return GModule(
        datum=datum,
        dim=dim,
        weights=weights,
        action=tuple(actions),
        provenance={"kind": "fundamental", "k": k},
    )


def _sort_parity(seq) -> int:
    parity = 0
    seq = list(seq)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                parity += 1
    return parity


def tensor(m1: GModule, m2: GModule) -> GModule:
    """Tensor product with the Leibniz action a(u⊗v) = au⊗v + u⊗av."""
    if m1.datum is not m2.datum:
        raise DomainError("tensor factors live over different data")
    i1, i2 = qeye(m1.dim), qeye(m2.dim)
    actions = tuple(
        kron(m1.action[a], i2) + kron(i1, m2.action[a]) for a in range(m1.datum.dim_g)
    )
    weights = tuple(
        tuple(w1[i] + w2[i] for i in range(m1.datum.rank))
        for w1 in m1.weights
        for w2 in m2.weights
    )
    return GModule(
        datum=m1.datum,
        dim=m1.dim * m2.dim,
        weights=weights,
        action=actions,
        provenance={"kind": "tensor", "factors": [m1.provenance, m2.provenance]},
    )


def tensor_many(mods) -> GModule:
    mods = list(mods)
    out = mods[0]
    for m in mods[1:]:
        out = tensor(out, m)
    return out


def _weight_blocks(module: GModule) -> dict[tuple, list[int]]:
    blocks: dict[tuple, list[int]] = {}
    for idx, w in enumerate(module.weights):
        blocks.setdefault(w, []).append(idx)
    return blocks


def singular_vectors(module: GModule) -> dict[tuple, np.ndarray]:
    """Joint kernel of the raising operators, grouped by weight.

    Returns {weight: basis rows in ambient coordinates}, each block in
    reduced row echelon form with first nonzero entry 1. The multiplicity
    of L_lam in the module equals the number of rows at lam.
    """
    datum = module.datum
    blocks = _weight_blocks(module)
    result: dict[tuple, np.ndarray] = {}
    for w, idxs in sorted(blocks.items(), key=lambda kv: (sum(kv[0]), tuple(-c for c in kv[0]))):
        stacked = []
        for i in range(datum.rank):
            alpha = datum.simple_root(i)
            target = tuple(w[j] + int(alpha[j]) for j in range(datum.rank))
            rows = blocks.get(target, [])
            if not rows:
                continue
            e = module.e_action(i)
            stacked.append(np.array([[e[r, c] for c in idxs] for r in rows], dtype=object))
        if stacked:
            mat = np.concatenate(stacked, axis=0)
            kernel = nullspace(mat)
        else:
            kernel = qeye(len(idxs))
        if kernel.shape[0] == 0:
            continue
        ambient = qzeros((kernel.shape[0], module.dim))
        for r in range(kernel.shape[0]):
            for c, idx in enumerate(idxs):
                ambient[r, idx] = kernel[r, c]
        result[w] = ambient
    return result


def decompose(module: GModule) -> list[tuple[tuple, int]]:
    """Irreducible constituents as (dominant weight, multiplicity) pairs."""
    sing = singular_vectors(module)
    out = [(w, vecs.shape[0]) for w, vecs in sing.items()]
    out.sort(key=lambda kv: (sum(kv[0]), tuple(-c for c in kv[0])))
    return out


@dataclass
class SubspaceBasis:
    """Exact basis of a g-invariant subspace, with complement data."""

    ambient: GModule
    span: SpanBasis

    @property
    def dim(self) -> int:
        return self.span.dim

    @property
    def vectors(self) -> np.ndarray:
        return self.span.rows

    @property
    def complement_indices(self) -> tuple[int, ...]:
        return self.span.free

    def projection(self) -> np.ndarray:
        return self.span.projection()

    def section(self) -> np.ndarray:
        return self.span.section()

    def is_invariant(self) -> bool:
        for a in range(self.ambient.datum.dim_g):
            act = self.ambient.action[a]
            for row in self.span.rows:
                if not self.span.contains(mat_mul(act, row)):
                    return False
        return True


def subspace_from_vectors(module: GModule, vectors) -> SubspaceBasis:
    return SubspaceBasis(ambient=module, span=SpanBasis.from_vectors(vectors, module.dim))


def submodule_closure(module: GModule, seeds) -> SubspaceBasis:
    """Smallest g-invariant subspace containing the seeds; exact.

    Applies every action matrix to a worklist of echelon representatives
    until the rank stabilizes.
    """
    red = RowReducer(module.dim)
    queue = []
    for seed in seeds:
        v = np.asarray(seed, dtype=object)
        if v.shape != (module.dim,):
            raise DimensionError("seed has wrong length")
        piv = red.add(v)
        if piv is not None:
            queue.append(red.rows[piv])
    while queue:
        vec = queue.pop()
        for a in range(module.datum.dim_g):
            piv = red.add(mat_mul(module.action[a], vec))
            if piv is not None:
                queue.append(red.rows[piv])
    rows = red.rref_rows()
    span = SpanBasis(rows, tuple(sorted(red.rows)), module.dim)
    return SubspaceBasis(ambient=module, span=span)


def quotient(module: GModule, sub: SubspaceBasis) -> tuple[GModule, np.ndarray]:
    """Quotient module on the weight-homogeneous complement, plus projection."""
    if sub.ambient is not module:
        raise DomainError("subspace does not live in the given module")
    if not sub.is_invariant():
        raise InvarianceError("subspace is not g-invariant")
    proj = sub.projection()
    sec = sub.section()
    actions = tuple(mat_mul(proj, mat_mul(module.action[a], sec)) for a in range(module.datum.dim_g))
    weights = tuple(module.weights[f] for f in sub.complement_indices)
    quot = GModule(
        datum=module.datum,
        dim=len(sub.complement_indices),
        weights=weights,
        action=actions,
        provenance={"kind": "quotient", "ambient": module.label(), "removed": sub.dim},
    )
    return quot, proj


def _rebase_on_subspace(module: GModule, sub: SubspaceBasis, provenance: dict) -> GModule:
    rows = sub.vectors
    dim = rows.shape[0]
    actions = []
    for a in range(module.datum.dim_g):
        act = module.action[a]
        cols = qzeros((dim, dim))
        for k in range(dim):
            image = mat_mul(act, rows[k])
            try:
                cols[:, k] = sub.span.coordinates(image)
            except DimensionError as exc:
                raise InternalInvariantViolation("subspace not closed under action") from exc
        actions.append(cols)
    weights = []
    for k in range(dim):
        pivot = sub.span.pivots[k]
        weights.append(module.weights[pivot])
    return GModule(
        datum=module.datum,
        dim=dim,
        weights=tuple(weights),
        action=tuple(actions),
        provenance=provenance,
    )


def irreducible(datum: RootDatum, lam) -> GModule:
    """L_lam built as the cyclic submodule of a product of fundamentals.

    The lam-weight space of ⊗_k F_k^{⊗a_k} is one-dimensional and spanned by
    the product of the factors' top vectors, which is singular; the module
    it generates is irreducible with highest weight lam.
    """
    lam = tuple(int(c) for c in lam)
    if len(lam) != datum.rank:
        raise DimensionError("weight coordinate length != rank")
    if not is_dominant(lam):
        raise DomainError(f"{lam} is not dominant")
    if lam in datum._irr_cache:
        return datum._irr_cache[lam]
    if all(c == 0 for c in lam):
        mod = trivial_module(datum)
        mod.provenance = {"kind": "irreducible", "weight": list(lam)}
        datum._irr_cache[lam] = mod
        return mod
    factors = []
    for k in range(1, datum.rank + 1):
        factors.extend(fundamental_module(datum, k) for _ in range(lam[k - 1]))
    ambient = tensor_many(factors)
    top = qzeros(ambient.dim)
    top[0] = mpq(1)
    if ambient.weights[0] != lam:
        raise InternalInvariantViolation("top vector weight mismatch")
    for i in range(datum.rank):
        if not is_zero(mat_mul(ambient.e_action(i), top)):
            raise InternalInvariantViolation("top vector is not singular")
    sub = submodule_closure(ambient, [top])
    mod = _rebase_on_subspace(
        ambient, sub, {"kind": "irreducible", "weight": list(lam)}
    )
    datum._irr_cache[lam] = mod
    return mod


def module_to_json(module: GModule) -> dict:
    return {
        "dim": module.dim,
        "weights": [list(w) for w in module.weights],
        "action": [[[qq_str(x) for x in row] for row in m] for m in module.action],
        "provenance": module.provenance,
    }


def module_from_json(datum: RootDatum, doc: dict) -> GModule:
    return GModule(
        datum=datum,
        dim=int(doc["dim"]),
        weights=tuple(tuple(int(c) for c in w) for w in doc["weights"]),
        action=tuple(qarray(m) for m in doc["action"]),
        provenance=dict(doc.get("provenance", {})),
    )


def save_module(module: GModule, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(module_to_json(module), fh, sort_keys=True)
