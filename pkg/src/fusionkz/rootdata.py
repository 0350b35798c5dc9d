"""Root-system and invariant-form data for simple Lie algebras.

The built-in realization is type A_r: sl(r+1) by elementary matrices with
the trace form, which is already normalized so that long roots have squared
length 2. Other types can be supplied as JSON data files carrying explicit
basis/dual-basis matrices and a Gram matrix; every invariant is re-verified
on load.

Weights are integer vectors in fundamental-weight coordinates throughout;
roots are converted through the Cartan matrix (alpha_i is the i-th column).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from gmpy2 import mpq

from .errors import DimensionError, DomainError, InternalInvariantViolation, UnsupportedAlgebra
from .linalg import inverse, is_zero, mat_mul, qarray, qeye, qq, qq_str, qzeros

SUPPORTED_SERIES = ("A",)


@dataclass
class RootDatum:
    """Cartan/root/weight data plus a concrete matrix realization.

    ``algebra_basis`` and ``dual_basis`` are matrices in the defining
    representation with normalized-trace-form pairing <b_a, b^c> = delta_ac;
    Casimir-type sums over the pair are basis independent, which is what the
    Omega operators rely on.
    """

    series: str
    rank: int
    cartan: np.ndarray
    gram: np.ndarray
    theta: tuple[int, ...]
    rho: tuple[int, ...]
    h_dual: int
    algebra_basis: tuple[np.ndarray, ...]
    dual_basis: tuple[np.ndarray, ...]
    chevalley: dict
    x_theta: int
    _struct: dict = field(default_factory=dict, repr=False)
    _irr_cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim_g(self) -> int:
        return len(self.algebra_basis)

    def simple_root(self, i: int) -> tuple:
        """alpha_i in fundamental-weight coordinates (i is 0-based)."""
        return tuple(self.cartan[j, i] for j in range(self.rank))

    def expand(self, element: np.ndarray) -> np.ndarray:
        """Coefficients of a defining-rep matrix over algebra_basis.

        Uses the trace pairing: the b_k coefficient of x is <x, b^k>.
        """
        coeffs = qzeros(self.dim_g)
        for k, dual in enumerate(self.dual_basis):
            coeffs[k] = np.trace(mat_mul(element, dual))
        return coeffs

    def bracket_coefficients(self, a: int, b: int) -> np.ndarray:
        """Expansion of [b_a, b_b] over algebra_basis."""
        key = (a, b)
        cache = self._struct.setdefault("brackets", {})
        if key not in cache:
            ma, mb = self.algebra_basis[a], self.algebra_basis[b]
            cache[key] = self.expand(mat_mul(ma, mb) - mat_mul(mb, ma))
        return cache[key]

    def dual_coefficients(self, a: int) -> np.ndarray:
        """Expansion of the dual element b^a over algebra_basis."""
        cache = self._struct.setdefault("duals", {})
        if a not in cache:
            cache[a] = self.expand(self.dual_basis[a])
        return cache[a]


def _elementary(n: int, i: int, j: int) -> np.ndarray:
    m = qzeros((n, n))
    m[i, j] = mpq(1)
    return m


def build_root_datum(series: str, rank: int) -> RootDatum:
    """Construct the normalized datum; built-in realization is type A only."""
    if series != "A" or rank < 1:
        raise UnsupportedAlgebra(f"no built-in realization for {series}{rank}")
    n = rank + 1
    cartan = qzeros((rank, rank))
    for i in range(rank):
        cartan[i, i] = mpq(2)
        if i + 1 < rank:
            cartan[i, i + 1] = mpq(-1)
            cartan[i + 1, i] = mpq(-1)
    gram = inverse(cartan)  # type A: all roots long, <w_i,w_j> = (C^-1)_ij

    basis: list[np.ndarray] = []
    dual: list[np.ndarray] = []
    # Chevalley generators first: e_i, f_i, h_i.
    for i in range(rank):
        basis.append(_elementary(n, i, i + 1))
    for i in range(rank):
        basis.append(_elementary(n, i + 1, i))
    for i in range(rank):
        basis.append(_elementary(n, i, i) - _elementary(n, i + 1, i + 1))
    for i in range(rank):
        dual.append(_elementary(n, i + 1, i))
    for i in range(rank):
        dual.append(_elementary(n, i, i + 1))
    cartan_inv = gram
    for i in range(rank):
        hdual = qzeros((n, n))
        for j in range(rank):
            hdual += cartan_inv[i, j] * (_elementary(n, j, j) - _elementary(n, j + 1, j + 1))
        dual.append(hdual)
    # Remaining root vectors E_ij, |i-j| >= 2.
    uppers = [(i, j) for i in range(n) for j in range(i + 2, n)]
    for (i, j) in uppers:
        basis.append(_elementary(n, i, j))
        dual.append(_elementary(n, j, i))
    for (i, j) in uppers:
        basis.append(_elementary(n, j, i))
        dual.append(_elementary(n, i, j))

    theta = tuple(int(sum(cartan[i, j] for j in range(rank))) for i in range(rank))
    rho = tuple(1 for _ in range(rank))
    chevalley = {
        "e": tuple(range(rank)),
        "f": tuple(range(rank, 2 * rank)),
        "h": tuple(range(2 * rank, 3 * rank)),
    }
    if rank == 1:
        x_theta = 0  # E_{1,2} is e_1
    else:
        x_theta = 3 * rank + uppers.index((0, n - 1))

    datum = RootDatum(
        series=series,
        rank=rank,
        cartan=cartan,
        gram=gram,
        theta=theta,
        rho=rho,
        h_dual=0,
        algebra_basis=tuple(basis),
        dual_basis=tuple(dual),
        chevalley=chevalley,
        x_theta=x_theta,
    )
    datum.h_dual = int(weight_pairing(datum, rho, theta) + 1)
    _validate_datum(datum)
    return datum


def _validate_datum(datum: RootDatum) -> None:
    tt = weight_pairing(datum, datum.theta, datum.theta)
    if tt != 2:
        raise InternalInvariantViolation(f"<theta,theta> = {tt} != 2")
    rt = weight_pairing(datum, datum.rho, datum.theta)
    if rt != datum.h_dual - 1:
        raise InternalInvariantViolation("<rho,theta> != h_dual - 1")
    n = datum.algebra_basis[0].shape[0]
    for a, ma in enumerate(datum.algebra_basis):
        for c, dc in enumerate(datum.dual_basis):
            pair = np.trace(mat_mul(ma, dc))
            if pair != (1 if a == c else 0):
                raise InternalInvariantViolation(f"trace pairing not identity at ({a},{c})")
    cas = qzeros((n, n))
    for ma, da in zip(datum.algebra_basis, datum.dual_basis):
        cas += mat_mul(ma, da)
    scalar = cas[0, 0]
    if not is_zero(cas - scalar * qeye(n)):
        raise InternalInvariantViolation("sum b_a b^a is not scalar in the defining rep")
    defining_hw = tuple(1 if i == 0 else 0 for i in range(datum.rank))
    if scalar != casimir_eigenvalue(datum, defining_hw):
        raise InternalInvariantViolation("defining-rep Casimir scalar mismatch")


def weight_pairing(datum: RootDatum, lam, mu) -> mpq:
    """Exact <lam, mu> in fundamental-weight coordinates."""
    lam = tuple(lam)
    mu = tuple(mu)
    if len(lam) != datum.rank or len(mu) != datum.rank:
        raise DimensionError("weight coordinate length != rank")
    total = mpq(0)
    for i in range(datum.rank):
        if lam[i] == 0:
            continue
        for j in range(datum.rank):
            total += qq(lam[i]) * datum.gram[i, j] * qq(mu[j])
    return total


def is_dominant(lam) -> bool:
    return all(qq(c) >= 0 for c in lam)


def casimir_eigenvalue(datum: RootDatum, lam) -> mpq:
    """<lam, lam + 2 rho>: the Casimir scalar on the irreducible L_lam."""
    if not is_dominant(lam):
        raise DomainError(f"weight {tuple(lam)} is not dominant")
    shifted = tuple(qq(c) + 2 for c in lam)
    return weight_pairing(datum, lam, shifted)


def lowest_conformal_weight(datum: RootDatum, lam, level: int) -> mpq:
    return casimir_eigenvalue(datum, lam) / (2 * (qq(level) + datum.h_dual))


def theta_pairing(datum: RootDatum, lam) -> mpq:
    return weight_pairing(datum, lam, datum.theta)


def admissible_weights(datum: RootDatum, level: int) -> list[tuple[int, ...]]:
    """All dominant lam with <lam,theta> <= level, in graded-lex order.

    Grade is the coordinate sum; within a grade, earlier fundamental-weight
    coordinates dominate (omega_1 before omega_2).
    """
    if level < 0:
        raise DomainError("level must be non-negative")
    comarks = [theta_pairing(datum, tuple(1 if j == i else 0 for j in range(datum.rank)))
               for i in range(datum.rank)]
    out: list[tuple[int, ...]] = []

    def extend(prefix, used):
        i = len(prefix)
        if i == datum.rank:
            out.append(tuple(prefix))
            return
        c = comarks[i]
        top = int((qq(level) - used) / c)
        for v in range(top + 1):
            extend(prefix + [v], used + v * c)

    extend([], mpq(0))
    out.sort(key=lambda w: (sum(w), tuple(-c for c in w)))
    return out


def datum_to_json(datum: RootDatum) -> dict:
    def mat(m):
        return [[qq_str(x) for x in row] for row in m]

    return {
        "series": datum.series,
        "rank": datum.rank,
        "cartan": [[int(x) for x in row] for row in datum.cartan],
        "gram": mat(datum.gram),
        "theta": list(datum.theta),
        "h_dual": datum.h_dual,
        "algebra_basis": [mat(m) for m in datum.algebra_basis],
        "dual_basis": [mat(m) for m in datum.dual_basis],
        "chevalley": {k: list(v) for k, v in datum.chevalley.items()},
        "x_theta": datum.x_theta,
    }


def datum_from_json(doc: dict) -> RootDatum:
    """Load an algebra-data file; all structural invariants are re-verified."""
    rank = int(doc["rank"])
    datum = RootDatum(
        series=str(doc["series"]),
        rank=rank,
        cartan=qarray(doc["cartan"]),
        gram=qarray(doc["gram"]),
        theta=tuple(int(c) for c in doc["theta"]),
        rho=tuple(1 for _ in range(rank)),
        h_dual=int(doc["h_dual"]),
        algebra_basis=tuple(qarray(m) for m in doc["algebra_basis"]),
        dual_basis=tuple(qarray(m) for m in doc["dual_basis"]),
        chevalley={k: tuple(v) for k, v in doc["chevalley"].items()},
        x_theta=int(doc["x_theta"]),
    )
    _validate_datum(datum)
    return datum


def load_root_datum(path) -> RootDatum:
    with open(path, "r", encoding="utf-8") as fh:
        return datum_from_json(json.load(fh))
