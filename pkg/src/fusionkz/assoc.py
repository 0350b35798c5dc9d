"""Associativity isomorphisms on fusion quotients, and their verification.

The associator U1⊠(U2⊠U3) -> (U1⊠U2)⊠U3 is induced by the adjoint of the
connection matrix: both triple quotients are realized as complements inside
U1⊗U2⊗U3, the transported kernel is checked against the target kernel
numerically, and the induced matrix is returned in the concrete coordinates
of the iterated fusion modules. The pentagon is then checked by composing
four associators with two ⊠-with-identity maps on the common quotient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from gmpy2 import mpq
from mpmath import mp, mpf

from .errors import VerificationFailure
from .fusion import FusionCache, ModuleMap, identity_map, induced_morphism
from .kz import (
    AssociatorMatrix,
    build_omega_system,
    connection_matrix,
    default_tail_target,
    float_matrix,
    max_abs,
    to_mpmatrix,
    verify_equivariance,
)
from .linalg import kron, mat_mul, nullspace, qeye, qq, qq_str
from .modules import GModule


@dataclass
class AssociatorParams:
    """Numeric policy for associator computations."""

    z0: mpq = mpq(1, 2)
    bits: int = 128
    tolerance: mpf = None
    order: int | None = None
    target_tail: mpf = None

    def __post_init__(self):
        self.z0 = qq(self.z0)
        if self.tolerance is None:
            self.tolerance = mpf("1e-20")
        else:
            self.tolerance = mpf(self.tolerance)
        if self.target_tail is None:
            self.target_tail = default_tail_target(self.bits)

    def describe(self) -> dict:
        return {
            "z0": qq_str(self.z0),
            "precision_bits": self.bits,
            "tolerance": mp.nstr(self.tolerance, 8),
            "order": self.order,
            "target_tail": mp.nstr(self.target_tail, 8),
        }


@dataclass
class TripleQuotient:
    """One bracketing of U1⊗U2⊗U3 as an explicit quotient."""

    result: GModule
    projection: np.ndarray  # triple space -> quotient coordinates
    section: np.ndarray  # quotient coordinates -> triple space
    kernel_rows: np.ndarray


def _triple_quotient(u1, u2, u3, level, side, cache: FusionCache) -> TripleQuotient:
    if side == "right":
        inner = cache.fuse(u2, u3, level)
        outer = cache.fuse(u1, inner.result, level)
        lift = kron(qeye(u1.dim), inner.projection)
        sec = mat_mul(kron(qeye(u1.dim), inner.section), outer.section)
    else:
        inner = cache.fuse(u1, u2, level)
        outer = cache.fuse(inner.result, u3, level)
        lift = kron(inner.projection, qeye(u3.dim))
        sec = mat_mul(kron(inner.section, qeye(u3.dim)), outer.section)
    proj = mat_mul(outer.projection, lift)
    kernel = nullspace(proj)
    return TripleQuotient(
        result=outer.result, projection=proj, section=sec, kernel_rows=kernel
    )


@dataclass
class AssociatorReport:
    triple: tuple[str, str, str]
    level: int
    dims: dict
    kernel_transport_residual: mpf
    equivariance_residual: mpf
    induced_equivariance_residual: mpf
    condition_estimate: mpf
    tail_bound: mpf
    invertible: bool
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        tol = mpf(self.params.get("_tol", "1e-20"))
        return bool(
            self.dims["kernel_right"] == self.dims["kernel_left"]
            and self.kernel_transport_residual < tol
            and self.equivariance_residual < tol
            and self.induced_equivariance_residual < tol
            and self.invertible
        )

    def to_json(self) -> dict:
        return {
            "triple": list(self.triple),
            "level": self.level,
            "dims": self.dims,
            "kernel_transport_residual": mp.nstr(self.kernel_transport_residual, 10),
            "equivariance_residual": mp.nstr(self.equivariance_residual, 10),
            "induced_equivariance_residual": mp.nstr(
                self.induced_equivariance_residual, 10
            ),
            "condition_estimate": mp.nstr(self.condition_estimate, 10),
            "tail_bound": mp.nstr(self.tail_bound, 10),
            "invertible": self.invertible,
            "passed": self.passed,
            "params": {k: v for k, v in self.params.items() if not k.startswith("_")},
        }


def associator_on_quotients(
    u1: GModule,
    u2: GModule,
    u3: GModule,
    level: int,
    params: AssociatorParams | None = None,
    cache: FusionCache | None = None,
    assoc: AssociatorMatrix | None = None,
):
    """Induced associativity matrix plus verification report.

    Raises VerificationFailure when the kernel dimensions disagree or the
    transported kernel leaks out of the target kernel beyond tolerance.
    Returns (map: ModuleMap, report, associator_matrix).
    """
    params = params or AssociatorParams()
    cache = cache or FusionCache()
    right = _triple_quotient(u1, u2, u3, level, "right", cache)
    left = _triple_quotient(u1, u2, u3, level, "left", cache)
    if assoc is None:
        system = build_omega_system(u1, u2, u3, level)
        assoc = connection_matrix(
            system,
            z0=params.z0,
            bits=params.bits,
            order=params.order,
            target_tail=params.target_tail,
        )
    dims = {
        "triple": assoc.system.dim,
        "kernel_right": int(right.kernel_rows.shape[0]),
        "kernel_left": int(left.kernel_rows.shape[0]),
        "quotient_right": right.result.dim,
        "quotient_left": left.result.dim,
    }
    with mp.workprec(params.bits + 16):
        phi_star = assoc.phi_adjoint
        ql = float_matrix(left.projection)
        if dims["kernel_right"]:
            transported = mat_mul(phi_star, float_matrix(right.kernel_rows.T))
            transport_residual = max_abs(mat_mul(ql, transported))
        else:
            transport_residual = mpf(0)
        induced = mat_mul(ql, mat_mul(phi_star, float_matrix(right.section)))
        invertible = True
        cond = mpf("inf")
        if dims["quotient_right"] == dims["quotient_left"] and induced.shape[0]:
            m = to_mpmatrix(induced)
            try:
                minv = m ** -1
                cond = mp.mnorm(m, "inf") * mp.mnorm(minv, "inf")
                invertible = cond < mpf(2) ** (params.bits - 16)
            except ZeroDivisionError:
                invertible = False
        elif dims["quotient_right"] != dims["quotient_left"]:
            invertible = False
        ind_equiv = mpf(0)
        for a in range(u1.datum.dim_g):
            rr = float_matrix(right.result.action[a])
            ll = float_matrix(left.result.action[a])
            resid = max_abs(mat_mul(induced, rr) - mat_mul(ll, induced))
            if resid > ind_equiv:
                ind_equiv = resid
    equiv = verify_equivariance(assoc)
    report = AssociatorReport(
        triple=(u1.label(), u2.label(), u3.label()),
        level=level,
        dims=dims,
        kernel_transport_residual=transport_residual,
        equivariance_residual=equiv["residual"],
        induced_equivariance_residual=ind_equiv,
        condition_estimate=cond,
        tail_bound=assoc.tail_bound,
        invertible=invertible,
        params={**params.describe(), "_tol": mp.nstr(params.tolerance, 12)},
    )
    if dims["kernel_right"] != dims["kernel_left"]:
        raise VerificationFailure(
            f"kernel dimensions differ: {dims}", report=report
        )
    if transport_residual >= params.tolerance:
        raise VerificationFailure(
            f"kernel transport residual {mp.nstr(transport_residual, 6)} "
            f"above tolerance {mp.nstr(params.tolerance, 6)}",
            report=report,
        )
    amap = ModuleMap(
        source=right.result, target=left.result, matrix=induced, exact=False
    )
    return amap, report, assoc


@dataclass
class PentagonReport:
    quadruple: tuple[str, str, str, str]
    level: int
    residual: mpf
    associators: list
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.residual < mpf(self.params.get("_tol", "1e-20")))

    def to_json(self) -> dict:
        return {
            "quadruple": list(self.quadruple),
            "level": self.level,
            "residual": mp.nstr(self.residual, 10),
            "associators": [r.to_json() for r in self.associators],
            "passed": self.passed,
            "params": {k: v for k, v in self.params.items() if not k.startswith("_")},
        }


def verify_pentagon(
    u1: GModule,
    u2: GModule,
    u3: GModule,
    u4: GModule,
    level: int,
    params: AssociatorParams | None = None,
    cache: FusionCache | None = None,
) -> PentagonReport:
    """Check (A ⊠ id) ∘ A ∘ (id ⊠ A) = A ∘ A on the common quotient.

    All five bracketed objects are built through one FusionCache so the
    composable maps share literal coordinates.
    """
    params = params or AssociatorParams()
    cache = cache or FusionCache()
    tol = params.tolerance

    a234, rep234, _ = associator_on_quotients(u2, u3, u4, level, params, cache)
    a123, rep123, _ = associator_on_quotients(u1, u2, u3, level, params, cache)
    u34 = cache.fuse(u3, u4, level).result
    u23 = cache.fuse(u2, u3, level).result
    u12 = cache.fuse(u1, u2, level).result
    a1, rep1, _ = associator_on_quotients(u1, u2, u34, level, params, cache)
    a2, rep2, _ = associator_on_quotients(u12, u3, u4, level, params, cache)
    a4, rep4, _ = associator_on_quotients(u1, u23, u4, level, params, cache)
    with mp.workprec(params.bits + 16):
        id_tol = mpf(10) ** (-(params.bits // 4))
        a3 = induced_morphism(identity_map(u1), a234, level, cache=cache, tol=id_tol)
        a5 = induced_morphism(a123, identity_map(u4), level, cache=cache, tol=id_tol)
        lhs = mat_mul(a5.matrix, mat_mul(a4.matrix, a3.matrix))
        rhs = mat_mul(a2.matrix, a1.matrix)
        residual = max_abs(lhs - rhs)
    report = PentagonReport(
        quadruple=(u1.label(), u2.label(), u3.label(), u4.label()),
        level=level,
        residual=residual,
        associators=[rep234, rep123, rep1, rep2, rep4],
        params={**params.describe(), "_tol": mp.nstr(tol, 12)},
    )
    if residual >= tol:
        raise VerificationFailure(
            f"pentagon residual {mp.nstr(residual, 6)} above {mp.nstr(tol, 6)}",
            report=report,
        )
    return report
