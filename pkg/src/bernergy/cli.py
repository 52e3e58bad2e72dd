"""Command line surface: point-cloud ingestion, computation, JSON reports.

Commands
--------
dist      energy statistic between two point clouds (or weighted measures)
test      two-sample permutation test
verify    numerical certification checks on supplied or generated points
psi-eval  closed form vs. integral representation of a catalog transform

Every command prints a single JSON object with ``version``, ``command``,
a ``config`` echo and the ``seed`` used; outputs are byte-stable for
fixed inputs and flags (floats are serialized with 17 significant
digits, enough to round-trip).  Exit codes: 0 success, 1 I/O, 2 parse,
64 usage, 65 constraint violation.

Input files are UTF-8 comma-separated values, one point per row, ``.``
decimal, ``#`` comment lines, optional header.  A final column named
``weight`` (or the ``--weighted`` flag for headerless files) loads a
signed measure; for the hyperbolic kernel the last coordinate column is
the time coordinate and rows are renormalized onto the sheet.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__, energy, spaces, stats, verify
from .cmfun import PsiFunction, eval_by_representation, eval_closed, get_psi
from .errors import (BernergyError, ConstraintError, DomainError,
                     EmptyPointcloudError, NonNumericCellError,
                     PointcloudFormatError, QuadratureError, RaggedRowError,
                     RepresentationUnavailableError, SpaceMismatchError)
from .spaces import (EUCLIDEAN_SQUARED, HYPERBOLIC, HYPERBOLOID,
                     SPHERE_GEODESIC, CndKernel, Point)

EXIT_OK = 0
EXIT_IO = 1
EXIT_PARSE = 2
EXIT_USAGE = 64
EXIT_CONSTRAINT = 65

_CHECK_NAMES = ("psd", "cpd", "schoenberg", "triangle", "sntype")


class UsageError(BernergyError, ValueError):
    """Bad flag combination detected after argparse."""


# ---------------------------------------------------------------------------
# Deterministic JSON with 17-significant-digit floats


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """Serialize to JSON with stable ordering and round-trip floats."""
    obj = _plain(obj)
    return _dumps(obj)


def _dumps(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return '"nan"'
        if math.isinf(obj):
            return '"inf"' if obj > 0 else '"-inf"'
        return format(obj, ".17g")
    if isinstance(obj, dict):
        inner = ", ".join(f"{json.dumps(str(k))}: {_dumps(v)}"
                          for k, v in obj.items())
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Point-cloud ingestion


@dataclass(frozen=True)
class Pointcloud:
    points: tuple[Point, ...]
    weights: np.ndarray | None
    path: str

    @property
    def weighted(self) -> bool:
        return self.weights is not None

    def sample_set(self) -> stats.SampleSet:
        return stats.SampleSet(self.points, label=self.path)

    def measure(self) -> energy.DiscreteSignedMeasure:
        if self.weights is not None:
            return energy.DiscreteSignedMeasure(self.points, self.weights)
        n = len(self.points)
        return energy.DiscreteSignedMeasure(self.points, np.full(n, 1.0 / n))


def parse_pointcloud(path: str, space: str = "euclidean",
                     weighted: bool = False) -> Pointcloud:
    """Read a CSV point cloud; see the module docstring for the format."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read()
    rows = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        rows.append((lineno, [cell.strip() for cell in text.split(",")]))
    if not rows:
        raise EmptyPointcloudError(f"{path}: no data rows", path=path)

    def _floats(cells):
        return [float(c) for c in cells]

    start = 0
    header = None
    try:
        _floats(rows[0][1])
    except ValueError:
        header = [c.lower() for c in rows[0][1]]
        start = 1
    if header is not None and header and header[-1] == "weight":
        weighted = True
    data_rows = rows[start:]
    if not data_rows:
        raise EmptyPointcloudError(f"{path}: header but no data rows", path=path)
    width = len(data_rows[0][1])
    table = []
    for lineno, cells in data_rows:
        if len(cells) != width:
            raise RaggedRowError(
                f"{path}:{lineno}: expected {width} columns, found {len(cells)}",
                path=path, row=lineno)
        try:
            table.append(_floats(cells))
        except ValueError as exc:
            raise NonNumericCellError(f"{path}:{lineno}: {exc}",
                                      path=path, row=lineno) from None
    values = np.asarray(table, dtype=float)
    weights = None
    if weighted:
        if values.shape[1] < 2:
            raise PointcloudFormatError(
                f"{path}: weighted files need at least two columns", path=path)
        weights = values[:, -1]
        values = values[:, :-1]
    if space == HYPERBOLOID:
        if values.shape[1] < 2:
            raise PointcloudFormatError(
                f"{path}: hyperboloid rows need spatial columns plus t",
                path=path)
        pts = tuple(Point(HYPERBOLOID, row[:-1], row[-1]) for row in values)
    else:
        pts = tuple(Point(space, row) for row in values)
    return Pointcloud(pts, weights, path)


# ---------------------------------------------------------------------------
# Flag parsing helpers


def parse_kernel(spec: str) -> CndKernel:
    name, _, shift = spec.partition(":")
    if name not in (EUCLIDEAN_SQUARED, HYPERBOLIC, SPHERE_GEODESIC):
        raise UsageError(f"unknown kernel: {spec!r}")
    if shift:
        if name != EUCLIDEAN_SQUARED:
            raise UsageError("only euclidean_squared accepts a shift")
        try:
            return CndKernel(name, float(shift))
        except ValueError:
            raise UsageError(f"malformed kernel shift in {spec!r}") from None
    return CndKernel(name)


def _parse_floats(spec: str, flag: str) -> list[float]:
    try:
        return [float(part) for part in spec.split(",") if part.strip() != ""]
    except ValueError:
        raise UsageError(f"malformed float list for {flag}: {spec!r}") from None


def _resolve_psi(spec: str) -> PsiFunction:
    try:
        return get_psi(spec)
    except (KeyError, DomainError) as exc:
        raise UsageError(str(exc)) from None


def _centered(cloud: Pointcloud) -> Pointcloud:
    if cloud.points[0].space != "euclidean":
        raise UsageError("--center requires Euclidean inputs")
    coords = np.array([p.coords for p in cloud.points])
    if cloud.weights is not None:
        total = float(np.sum(cloud.weights))
        if total == 0.0:
            raise UsageError("--center needs nonzero total weight")
        mean = cloud.weights @ coords / total
    else:
        mean = coords.mean(axis=0)
    pts = tuple(Point("euclidean", row - mean) for row in coords)
    return Pointcloud(pts, cloud.weights, cloud.path)


# ---------------------------------------------------------------------------
# Commands


def cmd_dist(args) -> dict:
    kernel = parse_kernel(args.kernel)
    psi = _resolve_psi(args.psi)
    clouds = [parse_pointcloud(p, kernel.space, args.weighted)
              for p in (args.inputs[0], args.inputs[1])]
    if args.center:
        clouds = [_centered(c) for c in clouds]
    p, q = (c.measure() for c in clouds)
    delta = energy.difference(p, q)
    report = energy.constraint_check(delta, psi.ell, kernel)
    if psi.ell == 1 and psi.cm_sign == -1:
        statistic = energy.inner_product_bernstein(delta, delta, kernel, psi)
    else:
        statistic = energy.inner_product_ell(delta, delta, kernel, psi)
    return {
        "version": __version__,
        "command": "dist",
        "config": {"inputs": list(args.inputs), "kernel": args.kernel,
                   "psi": args.psi, "weighted": args.weighted,
                   "center": args.center},
        "seed": None,
        "statistic": statistic,
        "sqrt_statistic": math.sqrt(max(statistic, 0.0)),
        "kernel": kernel.name,
        "psi": psi.name,
        "constraint_report": report,
    }


def cmd_test(args) -> dict:
    kernel = parse_kernel(args.kernel)
    psi = _resolve_psi(args.psi)
    clouds = [parse_pointcloud(p, kernel.space)
              for p in (args.inputs[0], args.inputs[1])]
    if any(c.weighted for c in clouds):
        raise UsageError("test expects unweighted point files")
    if args.center:
        clouds = [_centered(c) for c in clouds]
    result = stats.permutation_test(clouds[0].sample_set(),
                                    clouds[1].sample_set(), kernel, psi,
                                    permutations=args.B, seed=args.seed)
    return {
        "version": __version__,
        "command": "test",
        "config": {"inputs": list(args.inputs), "kernel": args.kernel,
                   "psi": args.psi, "B": args.B, "center": args.center},
        "seed": args.seed,
        **result.as_dict(),
    }


def _verify_points(args, kernel: CndKernel):
    if args.input:
        return parse_pointcloud(args.input, kernel.space).points
    rng = np.random.default_rng(args.seed)
    return tuple(verify.random_points(rng, args.n, args.dim, kernel.space))


def cmd_verify(args) -> dict:
    kernel = parse_kernel(args.kernel)
    checks = [c.strip() for c in args.check.split(",") if c.strip()]
    if not checks or any(c not in _CHECK_NAMES for c in checks):
        raise UsageError(
            f"unknown check in {args.check!r}; valid: {', '.join(_CHECK_NAMES)}")
    pts = _verify_points(args, kernel)
    r_grid = _parse_floats(args.r_grid, "--r-grid")
    reports = []
    for check in checks:
        if check == "psd":
            g = np.exp(-1.0 * spaces.pairwise(kernel, pts))
            reports.append(verify.check_psd(g))
        elif check == "cpd":
            g = -spaces.pairwise(kernel, pts)
            ones = np.ones((1, len(pts)))
            reports.append(verify.check_cpd(g, ones))
        elif check == "schoenberg":
            reports.append(verify.check_schoenberg(kernel, pts, r_grid))
        elif check == "triangle":
            psi = _resolve_psi(args.psi) if args.psi else None
            if psi is None:
                if kernel.kind == EUCLIDEAN_SQUARED:
                    def metric(a, b, k=kernel):
                        return math.sqrt(spaces.eval_kernel(k, a, b))
                else:
                    def metric(a, b, k=kernel):
                        return spaces.eval_kernel(k, a, b)
            else:
                def metric(a, b, k=kernel, f=psi):
                    return energy.psi_metric(a, b, k, f)
            reports.append(verify.check_triangle(metric, pts, args.triples,
                                                 args.seed))
        else:
            psi = _resolve_psi(args.psi or "sqrt")
            reports.append(verify.probe_strong_negative_type(
                kernel, psi, args.dim, args.trials, args.seed))
    return {
        "version": __version__,
        "command": "verify",
        "config": {"kernel": args.kernel, "check": args.check, "n": args.n,
                   "dim": args.dim, "r_grid": args.r_grid, "psi": args.psi,
                   "triples": args.triples, "trials": args.trials,
                   "input": args.input},
        "seed": args.seed,
        "reports": [r.as_dict() for r in reports],
    }


def cmd_psi_eval(args) -> dict:
    psi = _resolve_psi(args.psi)
    if args.t:
        grid = _parse_floats(args.t, "--t")
    else:
        grid = list(np.logspace(-3, 3, 13))
    if any(t < 0 for t in grid):
        raise UsageError("psi functions are defined on t >= 0")
    if args.representation and not psi.has_representation:
        raise RepresentationUnavailableError(
            f"{psi.name!r} is catalogued closed-form only")
    rows = []
    for t in grid:
        row = {"t": t, "closed": float(eval_closed(psi, t))}
        if args.representation:
            row["by_representation"] = eval_by_representation(psi, t, args.tol)
            row["abs_err"] = abs(row["by_representation"] - row["closed"])
        rows.append(row)
    return {
        "version": __version__,
        "command": "psi-eval",
        "config": {"psi": args.psi, "t": args.t, "tol": args.tol,
                   "representation": args.representation},
        "seed": None,
        "table": rows,
    }


# ---------------------------------------------------------------------------
# Entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bernergy",
                     description="Generalized energy distances and kernel checks")
    common = _Parser(add_help=False)
    common.add_argument("--output", default=None,
                        help="write the JSON report to a file instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    dist = sub.add_parser("dist", help="energy statistic between two inputs",
                          parents=[common])
    dist.add_argument("inputs", nargs=2, metavar="CSV")
    dist.add_argument("--kernel", default="euclidean_squared")
    dist.add_argument("--psi", default="sqrt")
    dist.add_argument("--weighted", action="store_true",
                      help="treat the last column as weights")
    dist.add_argument("--center", action="store_true",
                      help="translate each input to zero mean (experimental "
                           "preprocessing for order >= 2 transforms)")
    dist.set_defaults(func=cmd_dist)

    test = sub.add_parser("test", help="two-sample permutation test",
                          parents=[common])
    test.add_argument("inputs", nargs=2, metavar="CSV")
    test.add_argument("--kernel", default="euclidean_squared")
    test.add_argument("--psi", default="sqrt")
    test.add_argument("--B", type=int, default=199,
                      help="number of permutations (default 199)")
    test.add_argument("--seed", type=int, default=0,
                      help="PRNG seed (default 0)")
    test.add_argument("--center", action="store_true")
    test.set_defaults(func=cmd_test)

    ver = sub.add_parser("verify", help="numerical certification checks",
                         parents=[common])
    ver.add_argument("--kernel", default="euclidean_squared")
    ver.add_argument("--check", required=True,
                     help="comma list of: psd, cpd, schoenberg, triangle, sntype")
    ver.add_argument("--n", type=int, default=30)
    ver.add_argument("--dim", type=int, default=3)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--r-grid", dest="r_grid", default="0.1,1,10")
    ver.add_argument("--psi", default=None)
    ver.add_argument("--triples", type=int, default=10000)
    ver.add_argument("--trials", type=int, default=200)
    ver.add_argument("--input", default=None, help="optional CSV point file")
    ver.set_defaults(func=cmd_verify)

    pe = sub.add_parser("psi-eval", help="closed form vs. representation",
                        parents=[common])
    pe.add_argument("--psi", required=True)
    pe.add_argument("--t", default=None,
                    help="comma list of evaluation points (default log grid)")
    pe.add_argument("--tol", type=float, default=1e-9)
    pe.add_argument("--representation", action="store_true")
    pe.set_defaults(func=cmd_psi_eval)

    return parser


_ERROR_EXITS = (
    (RaggedRowError, "ragged_rows", EXIT_PARSE),
    (NonNumericCellError, "non_numeric_cell", EXIT_PARSE),
    (EmptyPointcloudError, "empty_file", EXIT_PARSE),
    (PointcloudFormatError, "pointcloud_format", EXIT_PARSE),
    (ConstraintError, "constraint_violation", EXIT_CONSTRAINT),
    (RepresentationUnavailableError, "representation_unavailable",
     EXIT_CONSTRAINT),
    (QuadratureError, "quadrature_failure", EXIT_CONSTRAINT),
    (UsageError, "usage", EXIT_USAGE),
    (SpaceMismatchError, "space_mismatch", EXIT_USAGE),
    (DomainError, "domain", EXIT_USAGE),
)


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        payload = args.func(args)
    except OSError as exc:
        _emit(dumps({"version": __version__, "command": args.command,
                     "error": {"kind": "io", "message": str(exc)}}), None)
        return EXIT_IO
    except BernergyError as exc:
        for klass, kind, code in _ERROR_EXITS:
            if isinstance(exc, klass):
                detail = {"kind": kind, "message": str(exc)}
                if isinstance(exc, ConstraintError):
                    detail["condition"] = exc.condition
                    detail["order"] = exc.order
                    detail["magnitude"] = exc.magnitude
                    detail["threshold"] = exc.threshold
                _emit(dumps({"version": __version__, "command": args.command,
                             "error": detail}), None)
                return code
        raise
    _emit(dumps(payload), args.output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
