"""The category D(g,l): membership, fusion kernels, fusion products, tables.

D(g,l) is the category of finite-dimensional g-modules on which
x_theta^(l+1) acts as zero. The fusion product is the quotient of the
ordinary tensor product by the submodule generated by
v_lam ⊗ x_theta^(l - <lam,theta> + 1) w over highest-weight vectors v_lam of
the first factor and w in the second.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from gmpy2 import mpq

from .errors import (
    DimensionError,
    DomainError,
    InternalInvariantViolation,
    NotAMorphism,
    NotInCategory,
)
from .linalg import is_zero, kron, mat_mul, mat_pow, qq_str
from .modules import (
    GModule,
    SubspaceBasis,
    decompose,
    irreducible,
    module_to_json,
    quotient,
    singular_vectors,
    submodule_closure,
    tensor,
)
from .rootdata import RootDatum, admissible_weights, theta_pairing


def in_category(module: GModule, level: int) -> bool:
    """True iff x_theta^(level+1) is exactly the zero matrix."""
    x = module.x_theta_action()
    power = np.array(x, dtype=object, copy=True)
    if is_zero(power):
        return True
    for _ in range(level):
        power = mat_mul(power, x)
        if is_zero(power):
            return True
    return is_zero(power)


def _require_membership(module: GModule, level: int) -> None:
    if not in_category(module, level):
        raise NotInCategory(f"{module.label()} is not in D(g,{level})")


def fusion_kernel(u1: GModule, u2: GModule, level: int, ambient: GModule | None = None) -> SubspaceBasis:
    """The submodule W of u1⊗u2 killed in the fusion product.

    Seeds run over an echelon basis of the singular vectors of u1 at each
    weight lam, paired with every basis vector of u2 hit by
    x_theta^(l - <lam,theta> + 1); the closure under the full algebra action
    is taken exactly.
    """
    _require_membership(u1, level)
    _require_membership(u2, level)
    if ambient is None:
        ambient = tensor(u1, u2)
    x2 = u2.x_theta_action()
    seeds = []
    for lam, vecs in singular_vectors(u1).items():
        gap = mpq(level) - theta_pairing(u1.datum, lam)
        if gap.denominator != 1:
            raise InternalInvariantViolation(f"<{lam},theta> is not integral")
        exponent = int(gap) + 1
        if exponent <= 0:
            raise InternalInvariantViolation("membership should force a positive exponent")
        xp = mat_pow(x2, exponent)
        if is_zero(xp):
            continue
        for r in range(vecs.shape[0]):
            for w in range(u2.dim):
                col = xp[:, w]
                if is_zero(col):
                    continue
                seeds.append(np.kron(vecs[r], col))
    return submodule_closure(ambient, seeds)


@dataclass
class FusionProduct:
    factors: tuple[GModule, GModule]
    level: int
    kernel: SubspaceBasis
    result: GModule
    projection: np.ndarray

    @property
    def section(self) -> np.ndarray:
        return self.kernel.section()

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "factors": [self.factors[0].provenance, self.factors[1].provenance],
            "kernel_dim": self.kernel.dim,
            "kernel_basis": [[qq_str(x) for x in row] for row in self.kernel.vectors],
            "result": module_to_json(self.result),
            "projection": [[qq_str(x) for x in row] for row in self.projection],
        }


def fuse(u1: GModule, u2: GModule, level: int) -> FusionProduct:
    """u1 ⊠ u2 at the given level, as an explicit quotient."""
    prod = tensor(u1, u2)
    kernel = fusion_kernel(u1, u2, level, ambient=prod)
    result, projection = quotient(prod, kernel)
    result.provenance = {
        "kind": "fusion",
        "level": level,
        "factors": [u1.provenance, u2.provenance],
    }
    if result.dim != u1.dim * u2.dim - kernel.dim:
        raise InternalInvariantViolation("quotient dimension mismatch")
    if not in_category(result, level):
        raise InternalInvariantViolation("fusion product left the category")
    return FusionProduct(
        factors=(u1, u2), level=level, kernel=kernel, result=result, projection=projection
    )


class FusionCache:
    """Memo for fuse() keyed on module identity; keeps iterated-fusion
    objects literally shared so associators compose on equal coordinates."""

    def __init__(self):
        self._data: dict[tuple[int, int, int], FusionProduct] = {}

    def fuse(self, u1: GModule, u2: GModule, level: int) -> FusionProduct:
        key = (id(u1), id(u2), level)
        if key not in self._data:
            self._data[key] = fuse(u1, u2, level)
        return self._data[key]


def sl2_fusion_oracle(level: int, a: int, b: int) -> set[int]:
    """Truncated Clebsch-Gordan rule for sl2 at integer level.

    Standalone closed form; shares no code with fuse(). Labels are the
    integers m with L_{m omega}, 0 <= m <= level.
    """
    if not (0 <= a <= level and 0 <= b <= level):
        raise DomainError("sl2 labels must satisfy 0 <= a,b <= level")
    top = min(a + b, 2 * level - a - b)
    return {c for c in range(abs(a - b), top + 1, 2)}


@dataclass
class FusionTable:
    datum: RootDatum
    level: int
    weights: list[tuple[int, ...]]
    entries: dict = field(default_factory=dict)  # (lam, mu) -> {nu: mult}

    def multiplicity(self, lam, mu, nu) -> int:
        return self.entries.get((tuple(lam), tuple(mu)), {}).get(tuple(nu), 0)

    def to_csv(self) -> str:
        def wlabel(w):
            return "(" + ",".join(str(c) for c in w) + ")"

        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["lambda\\mu"] + [wlabel(m) for m in self.weights])
        for lam in self.weights:
            row = [wlabel(lam)]
            for mu in self.weights:
                cell = self.entries[(lam, mu)]
                parts = [f"{wlabel(nu)}:{mult}" for nu, mult in sorted(cell.items())]
                row.append(",".join(parts))
            writer.writerow(row)
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "algebra": f"{self.datum.series}{self.datum.rank}",
            "level": self.level,
            "weights": [list(w) for w in self.weights],
            "entries": [
                {
                    "lambda": list(lam),
                    "mu": list(mu),
                    "result": [{"nu": list(nu), "mult": m} for nu, m in sorted(cell.items())],
                }
                for (lam, mu), cell in sorted(self.entries.items())
            ],
        }


def fusion_table(datum: RootDatum, level: int) -> FusionTable:
    """N^nu_{lam,mu} over all admissible weights, from explicit quotients."""
    weights = admissible_weights(datum, level)
    table = FusionTable(datum=datum, level=level, weights=weights)
    mods = {lam: irreducible(datum, lam) for lam in weights}
    for lam in weights:
        for mu in weights:
            product = fuse(mods[lam], mods[mu], level)
            cell = {nu: mult for nu, mult in decompose(product.result)}
            table.entries[(lam, mu)] = cell
    return table


def _float_max_abs(arr):
    from mpmath import mpf, mpmathify

    worst = mpf(0)
    for x in arr.reshape(-1):
        a = abs(mpmathify(x))
        if a > worst:
            worst = a
    return worst


@dataclass
class ModuleMap:
    """A linear map between modules; exact maps are verified to intertwine."""

    source: GModule
    target: GModule
    matrix: np.ndarray
    exact: bool = True

    def __post_init__(self):
        if self.matrix.shape != (self.target.dim, self.source.dim):
            raise DimensionError("map shape does not match modules")

    def check_equivariant(self, tol=None) -> None:
        for a in range(self.source.datum.dim_g):
            resid = mat_mul(self.matrix, self.source.action[a]) - mat_mul(
                self.target.action[a], self.matrix
            )
            if tol is None:
                if not is_zero(resid):
                    raise NotAMorphism(f"map fails to intertwine basis element {a}")
            else:
                worst = _float_max_abs(resid)
                if worst > tol:
                    raise NotAMorphism(f"map intertwining residual {worst} above {tol}")


def identity_map(module: GModule) -> ModuleMap:
    from .linalg import qeye

    return ModuleMap(source=module, target=module, matrix=qeye(module.dim))


def induced_morphism(
    f1: ModuleMap,
    f2: ModuleMap,
    level: int,
    cache: FusionCache | None = None,
    tol=None,
) -> ModuleMap:
    """The unique map (U1⊠U2) -> (U1'⊠U2') under f1 ⊗ f2.

    f1 ⊗ f2 takes kernel generators to kernel generators, so the square with
    the two fusion projections commutes; this is asserted (exactly for
    rational maps, within tol otherwise) and InternalInvariantViolation is
    raised on failure.
    """
    f1.check_equivariant(tol)
    f2.check_equivariant(tol)
    cache = cache or FusionCache()
    src = cache.fuse(f1.source, f2.source, level)
    dst = cache.fuse(f1.target, f2.target, level)
    big = kron(f1.matrix, f2.matrix)
    kernel_rows = src.kernel.vectors
    if kernel_rows.shape[0]:
        moved = mat_mul(mat_mul(dst.projection, big), kernel_rows.T)
        if tol is None:
            if not is_zero(moved):
                raise InternalInvariantViolation("f1⊗f2 does not preserve the fusion kernel")
        else:
            worst = _float_max_abs(moved)
            if worst > tol:
                raise InternalInvariantViolation(
                    f"kernel transport residual {worst} above {tol}"
                )
    matrix = mat_mul(mat_mul(dst.projection, big), src.section)
    return ModuleMap(
        source=src.result, target=dst.result, matrix=matrix, exact=(tol is None)
    )


def unit_isomorphism_report(datum: RootDatum, level: int) -> dict:
    """Exact checks that L_0 ⊠ U = U = U ⊠ L_0 with zero kernels.

    With a zero kernel the quotient keeps all coordinates, so both unit maps
    are literal identity matrices once u⊗1 and 1⊗u are read as u; the check
    below verifies the kernels vanish and the induced action matrices and
    weight labels agree exactly with U's.
    """
    unit = irreducible(datum, tuple(0 for _ in range(datum.rank)))
    checks = []
    for lam in admissible_weights(datum, level):
        mod = irreducible(datum, lam)
        for side in ("left", "right"):
            pair = (unit, mod) if side == "left" else (mod, unit)
            product = fuse(pair[0], pair[1], level)
            ok_kernel = product.kernel.dim == 0
            ok_action = all(
                is_zero(product.result.action[a] - mod.action[a])
                for a in range(datum.dim_g)
            )
            ok_weights = product.result.weights == mod.weights
            checks.append(
                {
                    "weight": list(lam),
                    "side": side,
                    "kernel_dim": product.kernel.dim,
                    "identity_action": bool(ok_action),
                    "identity_weights": bool(ok_weights),
                    "passed": bool(ok_kernel and ok_action and ok_weights),
                }
            )
    return {"level": level, "checks": checks, "passed": all(c["passed"] for c in checks)}


def save_fusion_product(product: FusionProduct, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(product.to_json(), fh, sort_keys=True)
