"""Command-line front end: fusion tables, associators, verification suites.

Exit codes are a stable contract: 0 success, 1 verification failure,
2 usage error, 3 precision exhausted. Artifacts are deterministic for a
fixed configuration (no timestamps; sorted keys) and written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass

from gmpy2 import mpq
from mpmath import mp, mpf

from .assoc import AssociatorParams, associator_on_quotients, verify_pentagon
from .errors import FusionKZError, PrecisionExhausted, VerificationFailure
from .fusion import fusion_table, sl2_fusion_oracle, unit_isomorphism_report
from .kz import build_omega_system, max_abs, ode_oracle, series_at_zero
from .linalg import qq, qq_str, qzeros
from .modules import irreducible
from .rootdata import admissible_weights, build_root_datum

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2
EXIT_PRECISION = 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    series: str
    rank: int
    level: int
    weights: list[tuple[int, ...]]
    precision_bits: int
    tolerance: str
    z0: mpq
    order: int | None
    out: str | None
    fmt: str

    def validate(self, datum) -> None:
        if self.level < 0:
            raise UsageError("level must be non-negative")
        if self.precision_bits < 53:
            raise UsageError("precision must be at least 53 bits")
        if not (0 < self.z0 < 1):
            raise UsageError("z0 must lie strictly inside (0,1)")
        admissible = set(admissible_weights(datum, self.level))
        for w in self.weights:
            if w not in admissible:
                raise UsageError(
                    f"weight {w} is not admissible at level {self.level}"
                )

    def describe(self) -> dict:
        return {
            "algebra": f"{self.series}{self.rank}",
            "level": self.level,
            "weights": [list(w) for w in self.weights],
            "precision_bits": self.precision_bits,
            "tolerance": self.tolerance,
            "z0": qq_str(self.z0),
            "order": self.order,
        }


def _parse_algebra(text: str) -> tuple[str, int]:
    text = text.strip()
    if len(text) < 2 or not text[0].isalpha():
        raise UsageError(f"bad algebra label {text!r}; expected e.g. A1, A2")
    series = text[0].upper()
    try:
        rank = int(text[1:])
    except ValueError as exc:
        raise UsageError(f"bad algebra rank in {text!r}") from exc
    return series, rank


def _parse_weights(text: str | None, rank: int) -> list[tuple[int, ...]]:
    if not text:
        return []
    try:
        flat = [int(tok) for tok in text.replace(";", ",").split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"bad --weights value {text!r}") from exc
    if len(flat) % rank != 0:
        raise UsageError(
            f"--weights holds {len(flat)} coordinates, not a multiple of rank {rank}"
        )
    return [tuple(flat[i : i + rank]) for i in range(0, len(flat), rank)]


def _config_from_args(args) -> RunConfig:
    series, rank = _parse_algebra(args.algebra)
    bits = args.bits
    if bits is None:
        bits = int(os.environ.get("FUSIONKZ_BITS", "128"))
    try:
        z0 = qq(args.z0)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad --z0 value {args.z0!r}") from exc
    return RunConfig(
        series=series,
        rank=rank,
        level=args.level,
        weights=_parse_weights(getattr(args, "weights", None), rank),
        precision_bits=bits,
        tolerance=args.tolerance,
        z0=z0,
        order=args.order,
        out=args.out,
        fmt=args.format,
    )


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".fusionkz-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(config: RunConfig, doc: dict) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if config.out:
        _write_atomic(config.out, text)
    else:
        sys.stdout.write(text)


def _assoc_params(config: RunConfig) -> AssociatorParams:
    return AssociatorParams(
        z0=config.z0,
        bits=config.precision_bits,
        tolerance=mpf(config.tolerance),
        order=config.order,
    )


def cmd_fusion_table(args) -> int:
    config = _config_from_args(args)
    datum = build_root_datum(config.series, config.rank)
    config.validate(datum)
    table = fusion_table(datum, config.level)
    oracle_match = None
    if config.series == "A" and config.rank == 1:
        oracle_match = True
        for lam in table.weights:
            for mu in table.weights:
                cell = table.entries[(lam, mu)]
                want = {(c,): 1 for c in sl2_fusion_oracle(config.level, lam[0], mu[0])}
                if cell != want:
                    oracle_match = False
    if config.fmt == "csv":
        text = table.to_csv()
        if config.out:
            _write_atomic(config.out, text)
        else:
            sys.stdout.write(text)
    else:
        _emit(config, {"config": config.describe(), "table": table.to_json()})
    size = len(table.weights)
    flag = "n/a" if oracle_match is None else str(oracle_match).lower()
    print(f"fusion-table: level={config.level} size={size}x{size} oracle-match={flag}")
    if oracle_match is False:
        return EXIT_VERIFICATION
    return EXIT_OK


def cmd_associator(args) -> int:
    config = _config_from_args(args)
    datum = build_root_datum(config.series, config.rank)
    config.validate(datum)
    if len(config.weights) != 3:
        raise UsageError("associator needs exactly three weights")
    mods = [irreducible(datum, w) for w in config.weights]
    params = _assoc_params(config)
    try:
        amap, report, assoc = associator_on_quotients(
            mods[0], mods[1], mods[2], config.level, params
        )
    except VerificationFailure as exc:
        doc = {
            "config": config.describe(),
            "report": exc.report.to_json() if exc.report else str(exc),
            "passed": False,
        }
        _emit(config, doc)
        print(f"associator: FAILED ({exc})")
        return EXIT_VERIFICATION
    doc = {
        "config": config.describe(),
        "associator": assoc.to_json(),
        "induced_matrix": [[mp.nstr(x, 30) for x in row] for row in amap.matrix],
        "report": report.to_json(),
        "passed": report.passed,
    }
    _emit(config, doc)
    print(
        "associator: transport residual "
        f"{mp.nstr(report.kernel_transport_residual, 6)}, "
        f"equivariance {mp.nstr(report.equivariance_residual, 6)}, "
        f"passed={report.passed}"
    )
    return EXIT_OK if report.passed else EXIT_VERIFICATION


def _oracle_check(config: RunConfig, datum) -> dict:
    """Series evaluation against Runge-Kutta transport along [0.3, 0.5]."""
    mods = [irreducible(datum, w) for w in config.weights[:3]]
    system = build_omega_system(mods[0], mods[1], mods[2], config.level)
    w0 = qzeros((system.dim, 1))
    for k in range(system.dim):
        w0[k, 0] = mpq(k + 1, system.dim + 1)
    order = config.order or 128
    series = series_at_zero(system, w0, order)
    bits = config.precision_bits
    v_start, tail_start = series.evaluate(mpq(3, 10), bits)
    v_end, tail_end = series.evaluate(mpq(1, 2), bits)
    rtol = mpf("1e-18")
    moved = ode_oracle(
        system, mpq(3, 10), mpq(1, 2), v_start.reshape(-1), bits=bits, rtol=rtol
    )
    with mp.workprec(bits + 16):
        resid = max_abs(moved - v_end.reshape(-1))
        scale = max(mpf(1), max_abs(v_end))
        combined = 50 * (tail_start + tail_end + rtol * scale)
        passed = bool(resid < combined)
    return {
        "name": "series-vs-integration",
        "residual": mp.nstr(resid, 10),
        "combined_tolerance": mp.nstr(combined, 10),
        "passed": passed,
    }


def cmd_verify(args) -> int:
    config = _config_from_args(args)
    datum = build_root_datum(config.series, config.rank)
    config.validate(datum)
    suite = args.suite
    checks = []
    params = _assoc_params(config)
    if suite in ("unit", "all"):
        rep = unit_isomorphism_report(datum, config.level)
        checks.append({"name": "unit-isomorphisms", "passed": rep["passed"], "detail": rep})
    if suite in ("oracle", "all"):
        if len(config.weights) < 3:
            raise UsageError("oracle suite needs three weights")
        checks.append(_oracle_check(config, datum))
    if suite in ("pentagon", "all"):
        if len(config.weights) != 4 and suite == "pentagon":
            raise UsageError("pentagon suite needs four weights")
        if len(config.weights) == 4:
            mods = [irreducible(datum, w) for w in config.weights]
            try:
                rep = verify_pentagon(
                    mods[0], mods[1], mods[2], mods[3], config.level, params
                )
                checks.append(
                    {
                        "name": "pentagon",
                        "residual": mp.nstr(rep.residual, 10),
                        "passed": rep.passed,
                        "detail": rep.to_json(),
                    }
                )
            except VerificationFailure as exc:
                checks.append(
                    {
                        "name": "pentagon",
                        "passed": False,
                        "detail": exc.report.to_json() if exc.report else str(exc),
                    }
                )
    passed = all(c["passed"] for c in checks)
    doc = {"config": config.describe(), "suite": suite, "checks": checks, "passed": passed}
    _emit(config, doc)
    for c in checks:
        print(f"verify[{c['name']}]: passed={c['passed']}")
    return EXIT_OK if passed else EXIT_VERIFICATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusionkz",
        description="Fusion products and Drinfeld associators for simple Lie algebras at integer level",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, weights_help):
        p.add_argument("--algebra", required=True, help="algebra label, e.g. A1 or A2")
        p.add_argument("--level", type=int, required=True, help="non-negative integer level")
        p.add_argument("--weights", help=weights_help)
        p.add_argument("--bits", type=int, default=None,
                       help="mantissa precision (default: env FUSIONKZ_BITS or 128)")
        p.add_argument("--tolerance", default="1e-20", help="verification tolerance")
        p.add_argument("--z0", default="1/2", help="rational evaluation point in (0,1)")
        p.add_argument("--order", type=int, default=None,
                       help="fixed truncation order (default: adaptive)")
        p.add_argument("--out", default=None, help="output artifact path")
        p.add_argument("--format", choices=("json", "csv"), default=None)

    p_table = sub.add_parser("fusion-table", help="compute the fusion table at a level")
    common(p_table, "unused for fusion-table")
    p_table.set_defaults(func=cmd_fusion_table, default_format="csv")

    p_assoc = sub.add_parser("associator", help="compute and verify one associator")
    common(p_assoc, "three dominant weights, flat comma-joined coordinates")
    p_assoc.set_defaults(func=cmd_associator, default_format="json")

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument("suite", choices=("pentagon", "unit", "oracle", "all"))
    common(p_verify, "weights for the suite (4 for pentagon, 3 for oracle)")
    p_verify.set_defaults(func=cmd_verify, default_format="json")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PrecisionExhausted as exc:
        print(f"precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except FusionKZError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION


if __name__ == "__main__":
    sys.exit(main())
