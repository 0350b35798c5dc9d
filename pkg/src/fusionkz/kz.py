"""One-variable KZ systems on triple tensor products and their connection data.

The ODE lives on the dual of U1⊗U2⊗U3:

    dphi/dz = (A/z - B/(1-z)) phi,   A = Omega~_12, B = Omega~_23,

with Omega~_pq the normalized two-slot Casimir insertion divided by
kappa = level + h_dual. Both residues are Kronecker-factored through a pair
operator acting on adjacent slots, so eigenvalues, projections and the
Frobenius recursion all run on the small pair spaces.

Series coefficients are exact rationals; floating point enters only when a
truncated series is evaluated at a point, at configurable mantissa precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from gmpy2 import mpq
from mpmath import mp, mpf

from .errors import (
    DomainError,
    InternalInvariantViolation,
    NotInCategory,
    PrecisionExhausted,
)
from .fusion import in_category
from .linalg import is_zero, kron, mat_mul, qeye, qq, qq_str, qzeros, rank
from .modules import GModule
from .rootdata import RootDatum, casimir_eigenvalue


# ---------------------------------------------------------------------------
# numeric helpers


def to_mpf(x) -> mpf:
    if isinstance(x, mpq):
        return mpf(x.numerator) / mpf(x.denominator)
    return mpf(x)


def float_matrix(arr: np.ndarray) -> np.ndarray:
    out = np.empty(arr.shape, dtype=object)
    flat_in = arr.reshape(-1)
    flat_out = out.reshape(-1)
    for k in range(flat_in.shape[0]):
        flat_out[k] = to_mpf(flat_in[k])
    return out

def max_abs(arr) -> mpf:
    worst = mpf(0)
    for x in np.asarray(arr, dtype=object).reshape(-1):
        a = abs(x)
        if a > worst:
            worst = a
    return worst


def to_mpmatrix(arr: np.ndarray):
    m, n = arr.shape
    out = mp.matrix(m, n)
    for i in range(m):
        for j in range(n):
            out[i, j] = arr[i, j]
    return out


def from_mpmatrix(mat) -> np.ndarray:
    out = np.empty((mat.rows, mat.cols), dtype=object)
    for i in range(mat.rows):
        for j in range(mat.cols):
            out[i, j] = mat[i, j]
    return out


# ---------------------------------------------------------------------------
# pair operators and their exact eigen data


@dataclass(frozen=True)
class EigenClass:
    base: mpq
    offsets: tuple[int, ...]

    @property
    def top_offset(self) -> int:
        return self.offsets[-1]


@dataclass
class PairEigen:
    """Dual-side pair matrix with certified rational eigen decomposition."""

    matrix: np.ndarray
    eigenvalues: tuple
    projections: dict
    classes: tuple[EigenClass, ...]
    _partial_inverses: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def projection_for(self, mu) -> np.ndarray:
        return self.projections[mu]

    def partial_inverse(self, shift) -> np.ndarray:
        """Sum over eigenvalues mu != shift of (mu - shift)^-1 pi_mu.

        Equals (q - shift)^-1 when shift is not an eigenvalue, and the
        inverse on the complement of the shift-eigenspace otherwise.
        """
        shift = qq(shift)
        if shift not in self._partial_inverses:
            total = qzeros((self.dim, self.dim))
            for mu in self.eigenvalues:
                if mu == shift:
                    continue
                total = total + self.projections[mu] / (mu - shift)
            self._partial_inverses[shift] = total
        return self._partial_inverses[shift]


def _group_classes(eigenvalues) -> tuple[EigenClass, ...]:
    buckets: dict[mpq, list] = {}
    for mu in eigenvalues:
        frac = mu - (mu.numerator // mu.denominator)
        buckets.setdefault(frac, []).append(mu)
    classes = []
    for vals in buckets.values():
        base = min(vals)
        offsets = tuple(sorted(int(v - base) for v in vals))
        classes.append(EigenClass(base=base, offsets=offsets))
    classes.sort(key=lambda c: c.base)
    return tuple(classes)


def pair_eigen_from_module_matrix(pair_module_matrix: np.ndarray, candidates, kappa) -> PairEigen:
    """Certify eigenvalues of a module-side pair operator and dualize.

    Candidates come from Casimir differences; each is kept iff the shifted
    matrix is exactly singular, then the full set is certified through the
    annihilating product. Projections are Lagrange interpolation polynomials
    in the dual-side matrix.
    """
    q = pair_module_matrix.T / qq(kappa)
    d = q.shape[0]
    cand = sorted(set(qq(c) / qq(kappa) for c in candidates))
    eigen = [c for c in cand if rank(q - c * qeye(d)) < d]
    if d > 0:
        annihilator = qeye(d)
        for mu in eigen:
            annihilator = mat_mul(annihilator, q - mu * qeye(d))
        if not is_zero(annihilator):
            raise InternalInvariantViolation("Casimir candidate set missed an eigenvalue")
    projections = {}
    for mu in eigen:
        proj = qeye(d)
        for nu in eigen:
            if nu == mu:
                continue
            proj = mat_mul(proj, (q - nu * qeye(d)) / (mu - nu))
        projections[mu] = proj
    return PairEigen(
        matrix=q,
        eigenvalues=tuple(eigen),
        projections=projections,
        classes=_group_classes(eigen),
    )


# ---------------------------------------------------------------------------
# the Omega system on a triple tensor product


@dataclass
class OmegaSystem:
    """Exact Omega~ data for (U1, U2, U3) at a level, on dual coordinates."""

    modules: tuple[GModule, GModule, GModule]
    level: int
    kappa: mpq
    pair12: PairEigen
    pair23: PairEigen
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(m.dim for m in self.modules)

    @property
    def dim(self) -> int:
        n1, n2, n3 = self.dims
        return n1 * n2 * n3

    @property
    def datum(self) -> RootDatum:
        return self.modules[0].datum

    @property
    def eigen_classes_A(self) -> tuple[EigenClass, ...]:
        return self.pair12.classes

    @property
    def eigen_classes_B(self) -> tuple[EigenClass, ...]:
        return self.pair23.classes

    # -- full matrices (dual side), built on demand -------------------------

    @property
    def A(self) -> np.ndarray:
        if "A" not in self._cache:
            n3 = self.dims[2]
            self._cache["A"] = kron(self.pair12.matrix, qeye(n3))
        return self._cache["A"]

    @property
    def B(self) -> np.ndarray:
        if "B" not in self._cache:
            n1 = self.dims[0]
            self._cache["B"] = kron(qeye(n1), self.pair23.matrix)
        return self._cache["B"]

    @property
    def C13(self) -> np.ndarray:
        if "C13" not in self._cache:
            u1, u2, u3 = self.modules
            total = qzeros((self.dim, self.dim))
            i2 = qeye(u2.dim)
            from .modules import dual_action

            for a in range(self.datum.dim_g):
                total = total + kron(
                    kron(u1.action[a], i2), dual_action(u3, a)
                )
            self._cache["C13"] = total.T / self.kappa
        return self._cache["C13"]

    def diagonal_action(self, a: int) -> np.ndarray:
        """Module-side action of basis element a on U1⊗U2⊗U3."""
        u1, u2, u3 = self.modules
        i1, i2, i3 = qeye(u1.dim), qeye(u2.dim), qeye(u3.dim)
        return (
            kron(kron(u1.action[a], i2), i3)
            + kron(kron(i1, u2.action[a]), i3)
            + kron(kron(i1, i2), u3.action[a])
        )

    # -- slot-structured application ----------------------------------------

    def apply_pair12(self, mat: np.ndarray, w: np.ndarray) -> np.ndarray:
        n1, n2, n3 = self.dims
        m = w.shape[1]
        block = w.reshape(n1 * n2, n3 * m)
        return mat_mul(mat, block).reshape(n1 * n2 * n3, m)

    def apply_pair23(self, mat: np.ndarray, w: np.ndarray) -> np.ndarray:
        n1, n2, n3 = self.dims
        m = w.shape[1]
        block = w.reshape(n1, n2 * n3, m).transpose(1, 0, 2).reshape(n2 * n3, n1 * m)
        moved = mat_mul(mat, block)
        return moved.reshape(n2 * n3, n1, m).transpose(1, 0, 2).reshape(n1 * n2 * n3, m)

    def apply_A(self, w: np.ndarray) -> np.ndarray:
        return self.apply_pair12(self.pair12.matrix, w)

    def apply_B(self, w: np.ndarray) -> np.ndarray:
        return self.apply_pair23(self.pair23.matrix, w)

    # -- exact structural checks ---------------------------------------------

    def omega_commutators_are_zero(self) -> bool:
        """The three commutation identities, with zero residual.

        Uses the Kronecker-factored expansion of each commutator (one small
        commutator per (a, b) pair of basis elements), accumulated sparsely,
        so the check stays exact and fast at large triple dimensions.
        """
        from .modules import dual_action

        u1, u2, u3 = self.modules
        g = self.datum.dim_g
        r1 = [u1.action[a] for a in range(g)]
        r2 = [u2.action[a] for a in range(g)]
        r3 = [u3.action[a] for a in range(g)]
        d1 = [dual_action(u1, a) for a in range(g)]
        d2 = [dual_action(u2, a) for a in range(g)]
        d3 = [dual_action(u3, a) for a in range(g)]

        def comm(x, y):
            return mat_mul(x, y) - mat_mul(y, x)

        n = self.dim
        # [M12, M13] + [M12, M23]
        total = qzeros((n, n))
        for a in range(g):
            for b in range(g):
                _kron3_add(total, comm(r1[a], r1[b]), d2[a], d3[b], self.dims)
                _kron3_add(total, r1[a], comm(d2[a], r2[b]), d3[b], self.dims)
        if not is_zero(total):
            return False
        # [M13, M12] + [M13, M23]
        total = qzeros((n, n))
        for a in range(g):
            for b in range(g):
                _kron3_add(total, comm(r1[a], r1[b]), d2[b], d3[a], self.dims)
                _kron3_add(total, r1[a], d2[b], comm(d3[a], r3[b]), self.dims)
        if not is_zero(total):
            return False
        # [M23, M12] + [M23, M13]
        total = qzeros((n, n))
        for a in range(g):
            for b in range(g):
                _kron3_add(total, r1[b], comm(r2[a], d2[b]), d3[a], self.dims)
                _kron3_add(total, r1[b], r2[a], comm(d3[a], d3[b]), self.dims)
        return is_zero(total)

    def projection_algebra_is_exact(self) -> bool:
        """Completeness, orthogonality and diagonalization of both pair operators."""
        for pair in (self.pair12, self.pair23):
            d = pair.dim
            total = qzeros((d, d))
            for mu in pair.eigenvalues:
                total = total + pair.projections[mu]
            if not is_zero(total - qeye(d)):
                return False
            for mu in pair.eigenvalues:
                for nu in pair.eigenvalues:
                    prod = mat_mul(pair.projections[mu], pair.projections[nu])
                    want = pair.projections[mu] if mu == nu else qzeros((d, d))
                    if not is_zero(prod - want):
                        return False
                lhs = mat_mul(pair.matrix, pair.projections[mu])
                if not is_zero(lhs - mu * pair.projections[mu]):
                    return False
        return True


def _kron3_add(dst: np.ndarray, f1, f2, f3, dims) -> None:
    """dst += f1 ⊗ f2 ⊗ f3 (module side), touching only nonzero products."""
    n1, n2, n3 = dims
    nz1 = [(i, j, v) for i in range(n1) for j in range(n1) if (v := f1[i, j]) != 0]
    if not nz1:
        return
    nz2 = [(i, j, v) for i in range(n2) for j in range(n2) if (v := f2[i, j]) != 0]
    if not nz2:
        return
    nz3 = [(i, j, v) for i in range(n3) for j in range(n3) if (v := f3[i, j]) != 0]
    for i1, j1, v1 in nz1:
        for i2, j2, v2 in nz2:
            v12 = v1 * v2
            row_base = (i1 * n2 + i2) * n3
            col_base = (j1 * n2 + j2) * n3
            for i3, j3, v3 in nz3:
                dst[row_base + i3, col_base + j3] += v12 * v3


def _pair_matrix(u_left: GModule, u_right: GModule) -> np.ndarray:
    """Module-side sum over the dual-basis pair acting in two slots."""
    from .modules import dual_action

    n = u_left.dim * u_right.dim
    total = qzeros((n, n))
    g = u_left.datum.dim_g
    dims = (u_left.dim, u_right.dim, 1)
    one = qeye(1)
    for a in range(g):
        _kron3_add(total, u_left.action[a], dual_action(u_right, a), one, dims)
    return total


def _casimir_candidates(datum: RootDatum, left: GModule, right: GModule, product: GModule):
    from .modules import decompose

    cas_left = [casimir_eigenvalue(datum, lam) for lam, _ in decompose(left)]
    cas_right = [casimir_eigenvalue(datum, lam) for lam, _ in decompose(right)]
    cas_prod = [casimir_eigenvalue(datum, lam) for lam, _ in decompose(product)]
    out = set()
    for cp in cas_prod:
        for cl in cas_left:
            for cr in cas_right:
                out.add((cp - cl - cr) / 2)
    return out


def build_omega_system(u1: GModule, u2: GModule, u3: GModule, level: int) -> OmegaSystem:
    """Exact Omega~ matrices and certified eigen data for a triple."""
    datum = u1.datum
    if u2.datum is not datum or u3.datum is not datum:
        raise DomainError("triple must live over one datum")
    for u in (u1, u2, u3):
        if not in_category(u, level):
            raise NotInCategory(f"{u.label()} not in D(g,{level})")
    from .modules import tensor

    kappa = qq(level) + datum.h_dual
    p12 = _pair_matrix(u1, u2)
    p23 = _pair_matrix(u2, u3)
    t12 = tensor(u1, u2)
    t23 = tensor(u2, u3)
    eig12 = pair_eigen_from_module_matrix(
        p12, _casimir_candidates(datum, u1, u2, t12), kappa
    )
    eig23 = pair_eigen_from_module_matrix(
        p23, _casimir_candidates(datum, u2, u3, t23), kappa
    )
    return OmegaSystem(
        modules=(u1, u2, u3), level=level, kappa=kappa, pair12=eig12, pair23=eig23
    )


# ---------------------------------------------------------------------------
# logarithmic Frobenius series


@dataclass
class KZSeries:
    """Truncated solution sum_lam sum_{i,j} w_{i,j} x^(lam+i) (log x)^j.

    ``endpoint`` fixes which Omega~ plays the role of the residue at the
    expansion point: 'zero' expands in z with (A, B), 'one' expands in
    y = 1 - z with the roles swapped. ``initial`` may hold several initial
    vectors as columns; coefficients then carry one column each.
    """

    system: OmegaSystem
    endpoint: str
    initial: np.ndarray
    order: int
    classes: tuple[EigenClass, ...]
    coeffs: list[dict]
    _tail_sums: list[list] = field(repr=False, default_factory=list)

    def _role(self):
        if self.endpoint == "zero":
            return self.system.pair12, self.system.apply_pair12, self.system.apply_pair23, self.system.pair23
        return self.system.pair23, self.system.apply_pair23, self.system.apply_pair12, self.system.pair12

    def class_coefficients(self, class_index: int):
        return self.coeffs[class_index]

    def extend(self, new_order: int) -> None:
        if new_order <= self.order:
            return
        _run_recursion(self, self.order + 1, new_order)
        self.order = new_order

    def back_substitution_residual(self) -> mpq:
        """Exact max-abs residual of the recursion over all computed indices."""
        pairA, applyA, applyB, pairB = self._role()
        worst = mpq(0)
        ncols = self.initial.shape[1]
        zero = qzeros((self.system.dim, ncols))
        for cls, coeff in zip(self.classes, self.coeffs):
            jmax = len(cls.offsets) - 1
            sums = [qzeros((self.system.dim, ncols)) for _ in range(jmax + 1)]
            for i in range(self.order + 1):
                for j in range(jmax, -1, -1):
                    if cls.offsets[j] > i:
                        continue
                    w = coeff.get((i, j), zero)
                    shift = cls.base + i
                    resid = shift * w - applyA(pairA.matrix, w) + sums[j]
                    nxt = coeff.get((i, j + 1))
                    if nxt is not None:
                        resid = resid + (j + 1) * nxt
                    m = max_abs_exact(resid)
                    if m > worst:
                        worst = m
                for j in range(jmax + 1):
                    if cls.offsets[j] <= i:
                        w = coeff.get((i, j), zero)
                        sums[j] = sums[j] + applyB(pairB.matrix, w)
        return worst

    def evaluate(self, z0, bits: int):
        """Sum the truncated series at a rational point in (0,1).

        Returns (values, tail_estimate); values has the shape of ``initial``.
        The tail is a geometric extrapolation of trailing term magnitudes;
        it is 0 for exactly terminating series and +inf when the trailing
        ratios do not contract.
        """
        z0 = qq(z0)
        if not (0 < z0 < 1):
            raise DomainError("evaluation point must lie strictly inside (0,1)")
        ncols = self.initial.shape[1]
        n = self.system.dim
        with mp.workprec(bits + 16):
            z = to_mpf(z0)
            logz = mp.log(z)
            abs_log = abs(logz)
            total = np.empty((n, ncols), dtype=object)
            total[...] = mpf(0)
            magnitudes = []
            for cls, coeff in zip(self.classes, self.coeffs):
                jmax = len(cls.offsets) - 1
                zpow = mp.power(z, to_mpf(cls.base))
                cls_mags = [mpf(0)] * (self.order + 1)
                for i in range(self.order + 1):
                    col = None
                    mag = mpf(0)
                    for j in range(jmax + 1):
                        w = coeff.get((i, j))
                        if w is None:
                            continue
                        wf = float_matrix(w)
                        lj = logz ** j if j else mpf(1)
                        term = wf * lj
                        col = term if col is None else col + term
                        mag += max_abs(wf) * (abs_log ** j if j else mpf(1))
                    if col is not None:
                        total = total + col * zpow
                        cls_mags[i] = mag * zpow
                    zpow = zpow * z
                magnitudes.append(cls_mags)
            tail = _tail_estimate(magnitudes, self.order)
        return total, tail


def max_abs_exact(arr) -> mpq:
    worst = mpq(0)
    for x in np.asarray(arr, dtype=object).reshape(-1):
        a = abs(x)
        if a > worst:
            worst = a
    return worst


def _tail_estimate(magnitudes, order: int) -> mpf:
    """Geometric extrapolation of trailing term magnitudes, per class.

    Ratios are gap-adjusted so that sparse tails (terms vanishing at some
    indices) are still extrapolated from the surviving ones; returns +inf
    when the trailing ratios do not contract, which makes the adaptive
    order loop keep doubling.
    """
    window = max(4, min(8, order // 4))
    tail = mpf(0)
    for mags in magnitudes:
        last = mags[-(window + 1):]
        nonzero = [(k, m) for k, m in enumerate(last) if m > 0]
        if not nonzero:
            continue
        if len(nonzero) == 1:
            tail += nonzero[0][1]
            continue
        r = mpf(0)
        for (k1, m1), (k2, m2) in zip(nonzero, nonzero[1:]):
            r = max(r, mp.power(m2 / m1, mpf(1) / (k2 - k1)))
        if r >= mpf("0.97"):
            return mpf("inf")
        tail += nonzero[-1][1] * r / (1 - r)
    return tail


def _run_recursion(series: KZSeries, start: int, stop: int) -> None:
    """Fill coefficient columns start..stop of every eigenvalue class.

    Unified treatment of the recursion's regular and eigen-index cases: the
    partial inverse handles every eigencomponent away from the current
    exponent, and at exponent hits the missing component comes from the
    initial datum (log-free row) or from the previous log row's sums.
    """
    sys_ = series.system
    pairA, applyA, applyB, pairB = series._role()
    ncols = series.initial.shape[1]
    zero = qzeros((sys_.dim, ncols))
    for ci, cls in enumerate(series.classes):
        coeff = series.coeffs[ci]
        jmax = len(cls.offsets) - 1
        offsets = set(cls.offsets)
        sums = series._tail_sums[ci]
        for i in range(start, stop + 1):
            shift = cls.base + i
            eigen_here = i in offsets
            sing = {}
            if eigen_here:
                proj = pairA.projection_for(shift)
                for j in range(jmax + 1):
                    if cls.offsets[j] > i:
                        continue
                    if j == 0:
                        sing[0] = applyA(proj, series.initial)
                    else:
                        sing[j] = applyA(proj, sums[j - 1]) / mpq(-j)
            pinv = pairA.partial_inverse(shift)
            for j in range(jmax, -1, -1):
                if cls.offsets[j] > i:
                    continue
                rhs = sums[j]
                nxt = coeff.get((i, j + 1))
                if nxt is not None:
                    rhs = rhs + (j + 1) * nxt
                w = applyA(pinv, rhs)
                if eigen_here and j in sing:
                    w = w + sing[j]
                if not is_zero(w):
                    coeff[(i, j)] = w
            for j in range(jmax + 1):
                if cls.offsets[j] <= i:
                    w = coeff.get((i, j))
                    if w is not None:
                        sums[j] = sums[j] + applyB(pairB.matrix, w)


def _new_series(sys_: OmegaSystem, endpoint: str, initial: np.ndarray, order: int) -> KZSeries:
    initial = np.asarray(initial, dtype=object)
    if initial.ndim == 1:
        initial = initial.reshape(-1, 1)
    if initial.shape[0] != sys_.dim:
        raise DomainError("initial datum has wrong dimension")
    pair = sys_.pair12 if endpoint == "zero" else sys_.pair23
    max_offset = max((cls.top_offset for cls in pair.classes), default=0)
    if order < max_offset:
        raise DomainError(f"truncation order {order} below top eigen offset {max_offset}")
    series = KZSeries(
        system=sys_,
        endpoint=endpoint,
        initial=initial,
        order=-1,
        classes=pair.classes,
        coeffs=[{} for _ in pair.classes],
        _tail_sums=[
            [qzeros((sys_.dim, initial.shape[1])) for _ in cls.offsets]
            for cls in pair.classes
        ],
    )
    _run_recursion(series, 0, order)
    series.order = order
    return series


def series_at_zero(sys_: OmegaSystem, w, order: int) -> KZSeries:
    """Unique formal solution at z=0 with initial datum w (Frobenius data)."""
    return _new_series(sys_, "zero", w, order)


def series_at_one(sys_: OmegaSystem, w, order: int) -> KZSeries:
    """As series_at_zero with the roles of A and B swapped, in y = 1-z."""
    return _new_series(sys_, "one", w, order)


def evaluate_series(series: KZSeries, z0, bits: int = 128):
    """Evaluate a (vector-initial) series; returns (vector, tail estimate)."""
    values, tail = series.evaluate(z0, bits)
    if series.initial.shape[1] == 1:
        return values.reshape(-1), tail
    return values, tail


# ---------------------------------------------------------------------------
# the connection matrix / Drinfeld associator


@dataclass
class AssociatorMatrix:
    """High-precision connection matrix phi with phi_B ∘ phi = phi_A."""

    system: OmegaSystem
    z0: mpq
    precision_bits: int
    order: int
    phi: np.ndarray
    tail_bound: mpf
    solve_residual: mpf
    condition_estimate: mpf
    metadata: dict = field(default_factory=dict)

    @property
    def phi_adjoint(self) -> np.ndarray:
        """Transpose: the module-side automorphism of U1⊗U2⊗U3."""
        return self.phi.T

    def to_json(self) -> dict:
        def render(x):
            return mp.nstr(x, int(self.precision_bits * 0.302) + 2)

        return {
            "z0": qq_str(self.z0),
            "precision_bits": self.precision_bits,
            "order": self.order,
            "tail_bound": render(self.tail_bound),
            "solve_residual": render(self.solve_residual),
            "condition_estimate": render(self.condition_estimate),
            "phi": [[render(x) for x in row] for row in self.phi],
            "metadata": self.metadata,
        }


def default_tail_target(bits: int) -> mpf:
    return mpf(2) ** (-(bits // 2 + 22))


def connection_matrix(
    sys_: OmegaSystem,
    z0=mpq(1, 2),
    bits: int = 128,
    order: int | None = None,
    target_tail=None,
    max_order: int = 2048,
) -> AssociatorMatrix:
    """Solve the connection problem between the two singular points.

    Columns of M_A (resp. M_B) evaluate the basis solutions at z0 from 0
    (resp. at y0 = 1-z0 from 1); phi = M_B^-1 M_A via LU with one step of
    iterative refinement. Raises PrecisionExhausted when the requested tail
    cannot be reached below max_order or the solve is too ill-conditioned.
    """
    z0 = qq(z0)
    if not (0 < z0 < 1):
        raise DomainError("z0 must lie strictly inside (0,1)")
    n = sys_.dim
    eye = qeye(n)
    adaptive = order is None
    current = 64 if adaptive else order
    min_order = max(
        max((cls.top_offset for cls in sys_.pair12.classes), default=0),
        max((cls.top_offset for cls in sys_.pair23.classes), default=0),
    )
    current = max(current, min_order)
    if target_tail is None:
        target_tail = default_tail_target(bits)
    ser_a = series_at_zero(sys_, eye, current)
    ser_b = series_at_one(sys_, eye, current)
    while True:
        ma, tail_a = ser_a.evaluate(z0, bits)
        mb, tail_b = ser_b.evaluate(1 - z0, bits)
        tail = tail_a + tail_b
        if not adaptive or tail <= target_tail:
            break
        if 2 * current > max_order:
            raise PrecisionExhausted(
                f"tail {mp.nstr(tail, 8)} above target at order {current}"
            )
        current *= 2
        ser_a.extend(current)
        ser_b.extend(current)

    with mp.workprec(bits + 16):
        mb_m = to_mpmatrix(mb)
        ma_m = to_mpmatrix(ma)
        try:
            mb_inv = mb_m ** -1
        except ZeroDivisionError as exc:
            raise PrecisionExhausted("M_B is numerically singular") from exc
        phi = mb_inv * ma_m
        resid = ma_m - mb_m * phi
        phi = phi + mb_inv * resid
        resid = ma_m - mb_m * phi
        solve_residual = mp.mnorm(resid, "inf")
        cond = mp.mnorm(mb_m, "inf") * mp.mnorm(mb_inv, "inf")
        if cond > mpf(2) ** (bits - 16):
            raise PrecisionExhausted(f"connection solve condition {mp.nstr(cond, 6)}")
        phi_norm = mp.mnorm(phi, "inf")
        tail_bound = mp.mnorm(mb_inv, "inf") * (tail_a + tail_b * phi_norm) + solve_residual
    return AssociatorMatrix(
        system=sys_,
        z0=z0,
        precision_bits=bits,
        order=ser_a.order,
        phi=from_mpmatrix(phi),
        tail_bound=tail_bound,
        solve_residual=solve_residual,
        condition_estimate=cond,
        metadata={
            "z0": qq_str(z0),
            "order": ser_a.order,
            "precision_bits": bits,
            "tail_A": mp.nstr(tail_a, 8),
            "tail_B": mp.nstr(tail_b, 8),
            "x_theta_index": sys_.datum.x_theta,
        },
    )


def verify_equivariance(assoc: AssociatorMatrix, bits: int | None = None) -> dict:
    """Max commutation residual of phi with the dual diagonal g-action."""
    sys_ = assoc.system
    bits = bits or assoc.precision_bits
    worst = mpf(0)
    with mp.workprec(bits + 16):
        for a in range(sys_.datum.dim_g):
            dual_diag = float_matrix(sys_.diagonal_action(a).T)
            resid = mat_mul(assoc.phi, dual_diag) - mat_mul(dual_diag, assoc.phi)
            m = max_abs(resid)
            if m > worst:
                worst = m
    return {
        "residual": worst,
        "tail_bound": assoc.tail_bound,
        "precision_bits": bits,
    }


# ---------------------------------------------------------------------------
# independent ODE transport oracle (Runge-Kutta-Fehlberg 7/8)

_RKF78_C = [
    mpq(0), mpq(2, 27), mpq(1, 9), mpq(1, 6), mpq(5, 12), mpq(1, 2), mpq(5, 6),
    mpq(1, 6), mpq(2, 3), mpq(1, 3), mpq(1), mpq(0), mpq(1),
]

_RKF78_A = [
    [],
    [mpq(2, 27)],
    [mpq(1, 36), mpq(1, 12)],
    [mpq(1, 24), mpq(0), mpq(1, 8)],
    [mpq(5, 12), mpq(0), mpq(-25, 16), mpq(25, 16)],
    [mpq(1, 20), mpq(0), mpq(0), mpq(1, 4), mpq(1, 5)],
    [mpq(-25, 108), mpq(0), mpq(0), mpq(125, 108), mpq(-65, 27), mpq(125, 54)],
    [mpq(31, 300), mpq(0), mpq(0), mpq(0), mpq(61, 225), mpq(-2, 9), mpq(13, 900)],
    [mpq(2), mpq(0), mpq(0), mpq(-53, 6), mpq(704, 45), mpq(-107, 9), mpq(67, 90), mpq(3)],
    [mpq(-91, 108), mpq(0), mpq(0), mpq(23, 108), mpq(-976, 135), mpq(311, 54),
     mpq(-19, 60), mpq(17, 6), mpq(-1, 12)],
    [mpq(2383, 4100), mpq(0), mpq(0), mpq(-341, 164), mpq(4496, 1025), mpq(-301, 82),
     mpq(2133, 4100), mpq(45, 82), mpq(45, 164), mpq(18, 41)],
    [mpq(3, 205), mpq(0), mpq(0), mpq(0), mpq(0), mpq(-6, 41), mpq(-3, 205),
     mpq(-3, 41), mpq(3, 41), mpq(6, 41), mpq(0)],
    [mpq(-1777, 4100), mpq(0), mpq(0), mpq(-341, 164), mpq(4496, 1025), mpq(-289, 82),
     mpq(2193, 4100), mpq(51, 82), mpq(33, 164), mpq(12, 41), mpq(0), mpq(1)],
]

_RKF78_B8 = [
    mpq(0), mpq(0), mpq(0), mpq(0), mpq(0), mpq(34, 105), mpq(9, 35), mpq(9, 35),
    mpq(9, 280), mpq(9, 280), mpq(0), mpq(41, 840), mpq(41, 840),
]


def ode_oracle(
    sys_: OmegaSystem,
    z_start,
    z_end,
    initial,
    bits: int = 128,
    rtol=mpf("1e-18"),
    max_steps: int = 200000,
):
    """Transport a solution value along [z_start, z_end] ⊂ (0,1).

    Embedded RKF 7(8) with local extrapolation and standard step control;
    entirely independent of the series machinery (the right-hand side uses
    the full dual-side residue matrices directly).
    """
    z_start, z_end = qq(z_start), qq(z_end)
    for z in (z_start, z_end):
        if not (0 < z < 1):
            raise DomainError("integration endpoints must lie inside (0,1)")
    rtol = mpf(rtol)
    if rtol < mpf(2) ** (-(bits - 8)):
        raise PrecisionExhausted("rtol below what the mantissa supports")
    with mp.workprec(bits + 16):
        a_f = float_matrix(sys_.A)
        b_f = float_matrix(sys_.B)

        def rhs(z, y):
            return mat_mul(a_f, y) / z - mat_mul(b_f, y) / (1 - z)

        y = np.asarray(initial, dtype=object).reshape(-1, 1)
        y = float_matrix(y)
        t = to_mpf(z_start)
        t_end = to_mpf(z_end)
        span = t_end - t
        if span == 0:
            return y.reshape(-1)
        direction = mpf(1) if span > 0 else mpf(-1)
        h = span / 16
        cs = [to_mpf(c) for c in _RKF78_C]
        amat = [[to_mpf(x) for x in row] for row in _RKF78_A]
        b8 = [to_mpf(x) for x in _RKF78_B8]
        err_w = to_mpf(mpq(41, 840))
        h_floor = abs(span) * mpf(2) ** (-(bits + 8))
        steps = 0
        while (t_end - t) * direction > 0:
            if abs(h) > abs(t_end - t):
                h = t_end - t
            ks = []
            for s in range(13):
                ys = y
                for j, aij in enumerate(amat[s]):
                    if aij != 0:
                        ys = ys + (h * aij) * ks[j]
                ks.append(rhs(t + cs[s] * h, ys))
            err_vec = ks[0] + ks[10] - ks[11] - ks[12]
            err = abs(h) * err_w * max_abs(err_vec)
            scale = max(mpf(1), max_abs(y))
            tol_step = rtol * scale
            if err <= tol_step or abs(h) <= h_floor:
                step = b8[5] * ks[5]
                for s in (6, 7, 8, 9, 11, 12):
                    step = step + b8[s] * ks[s]
                y = y + h * step
                t = t + h
                steps += 1
                if steps > max_steps:
                    raise PrecisionExhausted("ode_oracle exceeded the step budget")
            if err > 0:
                factor = mpf("0.9") * mp.power(tol_step / err, mpf(1) / 8)
                factor = min(mpf(4), max(mpf("0.2"), factor))
            else:
                factor = mpf(4)
            h = h * factor
            if abs(h) < h_floor:
                h = h_floor * direction
        return y.reshape(-1)
