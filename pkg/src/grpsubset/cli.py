"""Command-line interface.

Subcommands: ``fit`` (regularization path), ``cv`` (cross-validation),
``predict``, ``generate`` (synthetic data), ``oracle`` (gap against the
exhaustive minimizer) and ``clean`` (outlier screening and imputation).
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from . import io
from .clean import clean_matrix
from .design import GroupedProblem
from .local_search import fit_with_local_search
from .oracle import optimality_gap, solve_exhaustive
from .path import PathSpec, cross_validate, fit_path, lambda0_path
from .pipeline import PreparedProblem
from .semiparam import DEFAULT_ALPHAS, SplineExpansion, alpha_grid_cv, build_spline_groups, classify_functions
from .solver import SolverOptions
from .synthetic import SyntheticDesign, generate_synthetic

PROG = "grpsubset"
SCHEMA_ORACLE = "grpsubset.oracle/1"
SCHEMA_CLEAN = "grpsubset.clean/1"


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs, taken from the parsed flags."""

    command: str
    X: str | None = None
    y: str | None = None
    groups: str | None = None
    task: str = "square"
    shrink: str = "none"
    nlambda0: int = 100
    nsecondary: int = 10
    alpha_prop3: float = 0.9
    local_search: bool = False
    orthogonalize: bool = False
    folds: int = 5
    seed: int | None = None
    tol: float = 1e-4
    out: str | None = None
    spline: bool = False
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    max_active: int | None = None

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        fields = {k: v for k, v in vars(ns).items() if k in cls.__dataclass_fields__}
        if "alphas" in fields:
            fields["alphas"] = tuple(fields["alphas"])
        return cls(**fields)

    def path_spec(self, estimator: str = "subset") -> PathSpec:
        return PathSpec(
            n_lambda0=self.nlambda0, alpha=self.alpha_prop3, shrink=self.shrink,
            n_secondary=self.nsecondary, estimator=estimator, local_search=self.local_search,
            orthogonalize=self.orthogonalize, max_active=self.max_active,
            solver=SolverOptions(tol=self.tol),
        )


# ------------------------------------------------------------------ loading

def _load_problem(cfg: RunConfig) -> GroupedProblem:
    X = io.read_matrix(cfg.X)
    y = io.read_vector(cfg.y)
    if y.shape[0] != X.shape[0]:
        raise CliError(f"{cfg.y}: has {y.shape[0]} rows but {cfg.X} has {X.shape[0]}")
    groups = io.read_groups(cfg.groups)
    io.check_groups(groups, X.shape[1], cfg.groups)
    return GroupedProblem(X, y, groups, cfg.task)


def _require(cfg: RunConfig, *names: str) -> None:
    for name in names:
        if getattr(cfg, name) is None:
            raise CliError(f"--{name.replace('_', '-')} is required for {cfg.command}")


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        Path(cfg.out).write_text(text, encoding="utf-8")


# ----------------------------------------------------------------- commands

def cmd_fit(cfg: RunConfig) -> None:
    _require(cfg, "X", "y")
    if cfg.spline:
        X = io.read_matrix(cfg.X)
        y = io.read_vector(cfg.y)
        if len(cfg.alphas) != 1:
            raise CliError("fit --spline takes a single --alphas value; use cv to tune alpha")
        B, layout, expansion = build_spline_groups(X, cfg.alphas[0])
        result = fit_path(layout.problem(B, y, cfg.task), cfg.path_spec(), seed=cfg.seed)
        doc = result.as_dict()
        doc["spline"] = expansion.as_dict()
        doc["alpha"] = cfg.alphas[0]
        for path in doc["paths"]:
            for pt in path["points"]:
                pt["function_types"] = classify_functions(pt["active_groups"], layout.n_predictors)
    else:
        _require(cfg, "groups")
        result = fit_path(_load_problem(cfg), cfg.path_spec(), seed=cfg.seed)
        doc = result.as_dict()
    _emit(cfg, io.dumps(doc))


def cmd_cv(cfg: RunConfig) -> None:
    _require(cfg, "X", "y")
    seed = 0 if cfg.seed is None else cfg.seed
    if cfg.spline:
        X = io.read_matrix(cfg.X)
        y = io.read_vector(cfg.y)
        res = alpha_grid_cv(X, y, cfg.task, cfg.alphas, cfg.path_spec(), cfg.folds, seed)
        doc = res.as_dict()
    else:
        _require(cfg, "groups")
        res = cross_validate(_load_problem(cfg), cfg.path_spec(), cfg.folds, seed)
        doc = res.as_dict()
    _emit(cfg, io.dumps(doc))


def _select_point(doc: dict, secondary: int | None, position: int | None) -> dict:
    schema = doc.get("schema")
    if schema == "grpsubset.cv/1" and secondary is None and position is None:
        return doc["model"]
    if "paths" not in doc:
        raise CliError(f"model file has schema {schema!r}; pass a fit result or a cv result")
    s = 0 if secondary is None else secondary
    if not 0 <= s < len(doc["paths"]):
        raise CliError(f"secondary index {s} out of range (0..{len(doc['paths']) - 1})")
    points = doc["paths"][s]["points"]
    t = len(points) - 1 if position is None else position
    if not 0 <= t < len(points):
        raise CliError(f"lambda0 index {t} out of range (0..{len(points) - 1})")
    return points[t]


def cmd_predict(cfg: RunConfig, model: str, secondary: int | None, position: int | None) -> None:
    _require(cfg, "X")
    doc = io.read_json(model)
    if "n_features" not in doc:
        raise CliError(f"{model}: not a fit or cv result")
    point = _select_point(doc, secondary, position)
    X = io.read_matrix(cfg.X)
    if "spline" in doc:
        expansion = SplineExpansion.from_dict(doc["spline"])
        if X.shape[1] != expansion.n_predictors:
            raise CliError(f"{cfg.X}: has {X.shape[1]} columns, model expects {expansion.n_predictors} predictors")
        X = expansion.transform(X)
    coef = np.asarray(point["coef"], dtype=float)
    if X.shape[1] != coef.shape[0]:
        raise CliError(f"{cfg.X}: has {X.shape[1]} columns, model expects {coef.shape[0]}")
    eta = X @ coef + float(point["intercept"])
    if doc["task"] == "logistic":
        eta = expit(eta)
    lines = "".join(repr(float(v)) + "\n" for v in eta)
    _emit(cfg, lines)


def cmd_generate(cfg: RunConfig, design: SyntheticDesign, outdir: str) -> None:
    data = generate_synthetic(design)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_matrix(out / "X.csv", data.X)
    io.write_vector(out / "y.csv", data.y)
    io.write_groups(out / "groups.txt", data.groups)
    io.write_json(out / "truth.json", {"schema": "grpsubset.truth/1", **data.truth})


def cmd_oracle(cfg: RunConfig, max_groups: int | None, lambda2: float, lambda1: float) -> None:
    _require(cfg, "X", "y", "groups")
    problem = _load_problem(cfg)
    spec = cfg.path_spec()
    prep = PreparedProblem(problem, cfg.orthogonalize, options=spec.solver)
    spec.local_search = False
    points = lambda0_path(prep, spec, lambda1, lambda2)
    rows = []
    for pt in points:
        objective = pt.objective
        groups = pt.active_groups
        if cfg.local_search:
            # Swaps start from the descent solution at the same lambda0.
            state, _ = fit_with_local_search(prep.solver, pt.config, pt.theta, pt.intercept)
            objective = state.objective
            groups = [int(k) for k in prep.solver.active_groups(state.beta)]
        orc = solve_exhaustive(prep.solver, pt.config, max_groups)
        rows.append({
            "lambda0": pt.config.lambda0,
            "solver_objective": objective,
            "oracle_objective": orc.best_objective,
            "gap": optimality_gap(objective, orc.best_objective),
            "solver_groups": list(groups),
            "oracle_groups": list(orc.best_subset),
        })
    doc = {
        "schema": SCHEMA_ORACLE,
        "task": problem.task,
        "local_search": cfg.local_search,
        "points": rows,
        "mean_gap": float(np.mean([r["gap"] for r in rows])),
    }
    _emit(cfg, io.dumps(doc))


def cmd_clean(cfg: RunConfig, log_path: str | None) -> None:
    _require(cfg, "X", "out")
    X = io.read_matrix(cfg.X, allow_missing=True)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cleaned, report = clean_matrix(X)
    for w in caught:
        sys.stderr.write(f"{PROG}: warning: {w.message}\n")
    io.write_matrix(cfg.out, cleaned)
    log = {
        "schema": SCHEMA_CLEAN,
        "changes": [{"row": r, "column": c, "original": None if np.isnan(o) else o, "imputed": v, "reason": why}
                    for r, c, o, v, why in report.changes],
        "skipped_columns": report.skipped,
    }
    if log_path is None:
        sys.stdout.write(io.dumps(log))
    else:
        io.write_json(log_path, log)


# ------------------------------------------------------------------- parser

def _alphas(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid alpha list {text!r}") from None
    if not vals or any(not 0.0 < v <= 0.5 for v in vals):
        raise argparse.ArgumentTypeError("alphas must lie in (0, 0.5]")
    return vals


def _data_flags(p: argparse.ArgumentParser, groups: bool = True) -> None:
    p.add_argument("--X", help="headerless CSV design matrix")
    p.add_argument("--y", help="headerless CSV response, one value per line")
    if groups:
        p.add_argument("--groups", help="groups file, one group of zero-based column indices per line")
    p.add_argument("--task", choices=("square", "logistic"), default="square")


def _grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--shrink", choices=("none", "lasso", "ridge"), default="none")
    p.add_argument("--nlambda0", type=int, default=100, help="maximum lambda0 path length")
    p.add_argument("--nsecondary", type=int, default=10, help="secondary (lambda1 or lambda2) grid size")
    p.add_argument("--alpha-prop3", dest="alpha_prop3", type=float, default=0.9,
                   help="fraction of the entry threshold used for the next lambda0")
    p.add_argument("--local-search", dest="local_search", action="store_true")
    p.add_argument("--orthogonalize", action="store_true")
    p.add_argument("--max-active", dest="max_active", type=int, default=None,
                   help="end each path past this many active groups")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Group subset selection with shrinkage.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit the tuning grid and write the paths as JSON")
    _data_flags(p)
    _grid_flags(p)
    p.add_argument("--spline", action="store_true", help="semiparametric fit on raw predictors")
    p.add_argument("--alphas", type=_alphas, default=[0.5], help="linear-group weight for --spline")

    p = sub.add_parser("cv", help="cross-validate the tuning grid")
    _data_flags(p)
    _grid_flags(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--spline", action="store_true", help="semiparametric fit on raw predictors")
    p.add_argument("--alphas", type=_alphas, default=list(DEFAULT_ALPHAS),
                   help="comma-separated alpha grid for --spline")

    p = sub.add_parser("predict", help="predict from a fit or cv result")
    p.add_argument("--model", required=True, help="JSON written by fit or cv")
    p.add_argument("--X", help="headerless CSV design matrix")
    p.add_argument("--secondary-index", dest="secondary_index", type=int, default=None)
    p.add_argument("--lambda0-index", dest="lambda0_index", type=int, default=None)
    p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("generate", help="write a synthetic dataset")
    p.add_argument("--design", choices=("grouped", "semiparametric"), default="grouped")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=int, default=50)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--correlation", choices=("constant", "toeplitz"), default="constant")
    p.add_argument("--snr", type=float, default=10.0)
    p.add_argument("--task", choices=("square", "logistic"), default="square")
    p.add_argument("--group-size", dest="group_size", type=int, default=5)
    p.add_argument("--true-groups", dest="true_groups", type=int, default=2)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--outdir", required=True)

    p = sub.add_parser("oracle", help="optimality gaps against exhaustive enumeration")
    _data_flags(p)
    _grid_flags(p)
    p.add_argument("--max-groups", dest="max_groups", type=int, default=None)
    p.add_argument("--lambda1", type=float, default=0.0)
    p.add_argument("--lambda2", type=float, default=0.0)

    p = sub.add_parser("clean", help="flag outliers and impute missing cells")
    p.add_argument("--X", required=True, help="headerless CSV, empty fields or NA for missing")
    p.add_argument("--out", required=True, help="cleaned CSV")
    p.add_argument("--log", help="JSON log of changed cells (default: stdout)")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg = RunConfig.from_args(ns)
    if ns.command == "fit":
        cmd_fit(cfg)
    elif ns.command == "cv":
        cmd_cv(cfg)
    elif ns.command == "predict":
        cmd_predict(cfg, ns.model, ns.secondary_index, ns.lambda0_index)
    elif ns.command == "generate":
        design = SyntheticDesign(kind=ns.design, n=ns.n, p=ns.p, seed=ns.seed, rho=ns.rho,
                                 correlation=ns.correlation, snr=ns.snr, task=ns.task,
                                 group_size=ns.group_size, n_true_groups=ns.true_groups)
        cmd_generate(cfg, design, ns.outdir)
    elif ns.command == "oracle":
        cmd_oracle(cfg, ns.max_groups, ns.lambda2, ns.lambda1)
    elif ns.command == "clean":
        cmd_clean(cfg, ns.log)
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except (CliError, ValueError, RuntimeError, OSError, KeyError) as exc:
        msg = " ".join(str(exc).split()) or type(exc).__name__
        sys.stderr.write(f"{PROG}: error: {msg}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
