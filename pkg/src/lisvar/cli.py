"""Command-line entry point.

Each subcommand prints a JSON document on stdout and, with ``--out``, also
writes it to ``<out>/<subcommand>.json`` together with CSV plot data. Exit
status: 0 on success, 2 when the identified set is empty (the reduced form is
incompatible with the restrictions), 1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AllDrawsEmpty, LisvarError
from .identification import (
    check_global_rwz,
    check_local_rank,
    identification_verdict,
    solution_count_bound,
)
from .inference import (
    credible_region_phi,
    posterior_irf,
    projection_cs_fixed,
    projection_cs_switching,
    sample_posterior_hsvar,
    sample_posterior_niw,
    solve_draws,
)
from .restrictions import RestrictionSpec, classify, compile_restrictions
from .solve import identified_set_irf, solve, solve_hsvar
from .specfile import load_spec
from .varcore import (
    HsvarReducedForm,
    ReducedForm,
    StructuralParams,
    fit_hsvar_fgls,
    fit_ols,
    read_csv_data,
    simulate,
    simulate_hsvar,
    write_csv_data,
)

log = logging.getLogger("lisvar")

MODES = ("fit", "check-id", "identify-set", "irf", "posterior", "confsets", "hsvar", "simulate")
MODE_HELP = {
    "fit": "least-squares reduced form from a data CSV",
    "check-id": "rank-condition verdicts and solution-count bounds",
    "identify-set": "all admissible rotations at a point estimate",
    "irf": "impulse responses of every identified-set member",
    "posterior": "uniform-weight posterior, HDRs and robust-Bayes ranges",
    "confsets": "projection confidence sets (switching and/or fixed labels)",
    "hsvar": "identification through a variance break",
    "simulate": "simulate data from structural parameters",
}
HDR_LEVELS = (0.9, 0.75, 0.5, 0.25, 0.1)
EXIT_OK, EXIT_ERROR, EXIT_EMPTY = 0, 1, 2
BUNDLED = "bundled:"


class ConfigError(ValueError):
    pass


def resolve_path(value: str | os.PathLike | None):
    """Map ``bundled:<name>`` to a file shipped with the package."""
    if value is None:
        return None
    value = str(value)
    if value.startswith(BUNDLED):
        return resources.files("lisvar.data").joinpath(value[len(BUNDLED) :])
    return Path(value)


@dataclass
class RunConfig:
    mode: str
    data: str | None = None
    reduced_form: str | None = None
    spec: str | None = None
    structural: str | None = None
    lags: int | None = None
    h_max: int = 12
    draws: int = 1000
    alpha: float = 0.9
    seed: int = 0
    break_index: int | None = None
    cs_mode: str = "both"
    anchor: tuple[int, int, int] | None = None
    out: str | None = None
    threads: int = 1
    route: str = "auto"
    levels: tuple[float, ...] = HDR_LEVELS
    pairs: list[tuple[int, int]] | None = None
    periods: int = 500
    lambdas: tuple[float, ...] | None = None
    shock_position: int = 1
    verdict_draws: int = 10

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {', '.join(MODES)}")
        for name in ("data", "reduced_form", "spec", "structural"):
            value = getattr(self, name)
            if value is not None and not resolve_path(value).is_file():
                raise ConfigError(f"--{name.replace('_', '-')}: file not found: {value}")
        if not 0 < self.alpha < 1:
            raise ConfigError("--alpha must lie strictly between 0 and 1")
        if self.draws < 0:
            raise ConfigError("--draws must be non-negative")
        if self.h_max < 0:
            raise ConfigError("--hmax must be non-negative")
        if self.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if self.cs_mode not in ("switching", "fixed", "both"):
            raise ConfigError("--mode must be switching, fixed or both")
        if self.lags is not None and self.lags < 0:
            raise ConfigError("--lags must be non-negative")
        needs_spec = self.mode in ("check-id", "identify-set", "irf", "posterior", "confsets")
        if needs_spec and self.spec is None:
            raise ConfigError(f"{self.mode} needs --spec")
        needs_phi = self.mode in ("check-id", "identify-set", "irf")
        if needs_phi and self.data is None and self.reduced_form is None:
            raise ConfigError(f"{self.mode} needs --data or --reduced-form")
        if self.mode in ("fit", "posterior", "confsets", "hsvar") and self.data is None:
            raise ConfigError(f"{self.mode} needs --data")
        if self.data is not None and self.lags is None and self.mode != "simulate":
            raise ConfigError("--lags is required with --data")
        if self.mode == "hsvar" and self.break_index is None:
            raise ConfigError("hsvar needs --break-index")
        if self.mode == "simulate":
            if self.structural is None or self.out is None:
                raise ConfigError("simulate needs --structural and --out")
            if (self.lambdas is None) != (self.break_index is None):
                raise ConfigError("--lambdas and --break-index go together")
        return self


# ---------------------------------------------------------------- serialization


def _num(x: float):
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(format(x, ".9g"))


def jsonable(obj):
    """Plain JSON types with floats rounded to 9 significant digits."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2)


def _fmt(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else format(float(x), ".9g")


def emit_plot_data(panels: dict, out_dir) -> list[Path]:
    """Write one CSV per panel.

    ``panels[name]`` holds ``horizon`` (list of ints), ``bands`` (name -> per
    horizon list of ``(lo, hi)`` intervals) and ``paths`` (name -> per horizon
    value). A band with several intervals at some horizon gets numbered column
    pairs ``<band>_<k>_lo`` / ``<band>_<k>_hi``; missing cells are blank.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, panel in panels.items():
        horizons = list(panel.get("horizon", []))
        header, columns = ["horizon"], [horizons]
        for band, per_h in panel.get("bands", {}).items():
            per_h = list(per_h)
            width = max((len(ivs) for ivs in per_h), default=1)
            for k in range(width):
                stem = band if width == 1 else f"{band}_{k + 1}"
                header += [f"{stem}_lo", f"{stem}_hi"]
                columns.append([ivs[k][0] if k < len(ivs) else None for ivs in per_h])
                columns.append([ivs[k][1] if k < len(ivs) else None for ivs in per_h])
        for path_name, values in panel.get("paths", {}).items():
            header.append(path_name)
            columns.append(list(values))
        target = out_dir / f"{name}.csv"
        with target.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in range(len(horizons)):
                w.writerow([str(horizons[r])] + [_fmt(col[r]) for col in columns[1:]])
        written.append(target)
    return written


def read_plot_data(path) -> dict[str, np.ndarray]:
    """Columns of a plot CSV; blank cells become NaN."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {
        col: np.array([float(r[k]) if r[k] != "" else np.nan for r in body]) for k, col in enumerate(header)
    }


# ---------------------------------------------------------------- inputs


def _read_json(value) -> dict:
    return json.loads(resolve_path(value).read_text())


def _matrix(d: dict, key: str):
    return np.asarray(d[key], dtype=float)


def load_reduced_form(value) -> ReducedForm | HsvarReducedForm:
    """Reduced form from JSON: ``B`` (n x (1+np), intercept first) or ``lags``
    (+ optional ``intercept``), and ``Sigma`` or ``Sigma1``/``Sigma2``/``t_break``."""
    d = _read_json(value)
    if "B" in d:
        B = _matrix(d, "B")
    else:
        lags = [np.asarray(L, dtype=float) for L in d.get("lags", [])]
        n = len(d["Sigma"] if "Sigma" in d else d["Sigma1"])
        b = np.asarray(d.get("intercept", np.zeros(n)), dtype=float)
        B = np.column_stack([b] + lags)
    if "Sigma1" in d:
        return HsvarReducedForm(B, _matrix(d, "Sigma1"), _matrix(d, "Sigma2"), int(d["t_break"]), d.get("T"))
    return ReducedForm(B, _matrix(d, "Sigma"))


def load_structural(value) -> StructuralParams:
    """Structural parameters from JSON: ``A0inv`` or ``A0`` plus reduced-form ``lags``."""
    d = _read_json(value)
    A0inv = _matrix(d, "A0inv") if "A0inv" in d else np.linalg.inv(_matrix(d, "A0"))
    return StructuralParams.from_impact(A0inv, d.get("lags", []), d.get("intercept"))


def _data(cfg: RunConfig):
    names, data = read_csv_data(resolve_path(cfg.data))
    return names, data


def _spec(cfg: RunConfig) -> RestrictionSpec:
    return load_spec(resolve_path(cfg.spec))


def _phi(cfg: RunConfig):
    if cfg.reduced_form is not None:
        return load_reduced_form(cfg.reduced_form)
    _, data = _data(cfg)
    if cfg.break_index is not None:
        return fit_hsvar_fgls(data, cfg.lags, cfg.break_index)
    return fit_ols(data, cfg.lags)


def _rf_dict(rf) -> dict:
    out = {"n": rf.n, "p": rf.p, "B": rf.B}
    if isinstance(rf, HsvarReducedForm):
        out.update(Sigma1=rf.Sigma1, Sigma2=rf.Sigma2, t_break=rf.t_break, T=rf.T)
        rf = rf.regime1()
    else:
        out["Sigma"] = rf.Sigma
    out.update(
        intercept=rf.intercept,
        lags=rf.lags,
        spectral_radius=rf.spectral_radius(),
        stable=rf.is_stable(),
    )
    return out


def _check_dims(spec: RestrictionSpec, rf):
    if spec.n != rf.n:
        raise ConfigError(f"spec has n={spec.n} but the reduced form has n={rf.n}")


# ---------------------------------------------------------------- pipelines


def _iset_dict(iset, rf) -> dict:
    base = rf.regime1() if isinstance(rf, HsvarReducedForm) else rf
    diag = {k: v for k, v in iset.diagnostics.items() if not isinstance(v, (HsvarReducedForm, ReducedForm))}
    out = {
        "route": iset.route,
        "count": iset.count,
        "q_matrices": iset.q_matrices,
        "a0_matrices": iset.a0_matrices(base) if iset.count else [],
        "labels": iset.labels or [],
        "diagnostics": diag,
    }
    if iset.lambdas is not None:
        out["lambdas"] = iset.lambdas
    return out


def run_fit(cfg: RunConfig):
    rf = _phi(cfg)
    return _rf_dict(rf), {}, EXIT_OK


def run_check_id(cfg: RunConfig):
    spec, rf = _spec(cfg), _phi(cfg)
    _check_dims(spec, rf)
    cls = classify(spec)
    required = spec.n * (spec.n - 1) // 2
    result = {
        "classification": cls.as_dict(),
        "restrictions": spec.f,
        "required": required,
        "order_condition": spec.f >= required,
        "solution_count_bound": solution_count_bound(spec),
    }
    compiled = compile_restrictions(spec, rf)
    if cls.recursive and not cls.cross_shock:
        g = check_global_rwz(compiled)
        result["global"] = {"globally_identified": g.globally_identified, "failing_index": g.failing_index}
    if spec.f <= required:
        iset = solve(spec, rf, cfg.route, seed=cfg.seed)
        result["members"] = [
            {"q": Q, "rank": r.rank, "locally_identified": r.locally_identified}
            for Q, r in ((Q, check_local_rank(compiled, Q)) for Q in iset.q_matrices)
        ]
    if cfg.data is not None and cfg.verdict_draws > 0:
        _, data = _data(cfg)
        sampler = sample_posterior_niw(data, cfg.lags, cfg.verdict_draws, cfg.seed).draws
    else:
        sampler = [rf]
    v = identification_verdict(spec, sampler, n_draws=len(sampler), seed=cfg.seed, short_circuit=False)
    result["verdict"] = v.as_dict()
    return result, {}, EXIT_OK


def _irf_panels(irfs: np.ndarray, n: int) -> dict:
    panels = {}
    horizons = list(range(irfs.shape[1]))
    for i in range(n):
        for j in range(n):
            paths = {f"member_{m + 1}": irfs[m, :, i, j] for m in range(irfs.shape[0])}
            panels[f"irf_v{i + 1}_s{j + 1}"] = {"horizon": horizons, "bands": {}, "paths": paths}
    return panels


def run_identify_set(cfg: RunConfig):
    spec, rf = _spec(cfg), _phi(cfg)
    _check_dims(spec, rf)
    iset = solve(spec, rf, cfg.route, seed=cfg.seed, shock_position=cfg.shock_position)
    return _iset_dict(iset, rf), {}, EXIT_EMPTY if iset.empty else EXIT_OK


def run_irf(cfg: RunConfig):
    spec, rf = _spec(cfg), _phi(cfg)
    _check_dims(spec, rf)
    iset = solve(spec, rf, cfg.route, seed=cfg.seed, shock_position=cfg.shock_position)
    result = _iset_dict(iset, rf)
    result["h_max"] = cfg.h_max
    if iset.empty:
        result["irfs"] = []
        return result, {}, EXIT_EMPTY
    base = rf.regime1() if isinstance(rf, HsvarReducedForm) else rf
    irfs = identified_set_irf(iset, base, cfg.h_max).irfs
    result["irfs"] = irfs
    return result, _irf_panels(irfs, rf.n), EXIT_OK


def _posterior_draws(cfg: RunConfig):
    _, data = _data(cfg)
    if cfg.break_index is not None:
        return sample_posterior_hsvar(data, cfg.lags, cfg.break_index, cfg.draws, cfg.seed)
    return sample_posterior_niw(data, cfg.lags, cfg.draws, cfg.seed)


def _solved(cfg: RunConfig):
    spec = _spec(cfg)
    draws = _posterior_draws(cfg)
    if draws.count and spec.n != draws.draws[0].n:
        raise ConfigError(f"spec has n={spec.n} but the data have {draws.draws[0].n} variables")
    return solve_draws(
        draws,
        spec,
        cfg.h_max,
        route=cfg.route,
        seed=cfg.seed,
        threads=cfg.threads,
        shock_position=cfg.shock_position,
    )


def _coords(cfg: RunConfig, n: int):
    pairs = cfg.pairs or [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)]
    return [(i, j, h) for i, j in pairs for h in range(cfg.h_max + 1)]


def _coord_dict(c):
    return {"variable": c[0], "shock": c[1], "horizon": c[2]}


def _empty_summary(solved, what: str):
    return {"error": f"all {solved.count} draws have an empty identified set", "records": [], "what": what}


def run_posterior(cfg: RunConfig):
    solved = _solved(cfg)
    if not solved.nonempty:
        return _empty_summary(solved, "posterior"), {}, EXIT_EMPTY
    n = solved.spec.n
    sample = posterior_irf(solved)
    coords = _coords(cfg, n)
    switching = projection_cs_switching(solved, alpha=cfg.alpha, h_max=cfg.h_max, coordinates=coords)
    records, panels = [], {}
    for c in coords:
        vals = solved.values(c)
        lo = float(np.mean([v.min() for v in vals]))
        hi = float(np.mean([v.max() for v in vals]))
        x, _ = sample.values(c)
        hdr = sample.hdr(c, cfg.levels) if x.size >= 100 else [[] for _ in cfg.levels]
        rec = {
            "coordinate": _coord_dict(c),
            "posterior_mean": sample.mean(c),
            "hdr": {format(a, "g"): ivs for a, ivs in zip(cfg.levels, hdr)},
            "robust_mean_range": [lo, hi],
            "robust_credible": list(switching.hull(*c)),
            "robust_credible_construction": "hull of the switching-label projection set",
        }
        records.append(rec)
        panel = panels.setdefault(
            f"posterior_v{c[0]}_s{c[1]}", {"horizon": [], "bands": {}, "paths": {"posterior_mean": []}}
        )
        panel["horizon"].append(c[2])
        for a, ivs in zip(cfg.levels, hdr):
            panel["bands"].setdefault(f"hdr{format(100 * a, 'g')}", []).append(ivs)
        panel["bands"].setdefault("robust_mean", []).append([(lo, hi)])
        panel["bands"].setdefault("robust_credible", []).append([switching.hull(*c)])
        panel["paths"]["posterior_mean"].append(rec["posterior_mean"])
    result = {
        "draws": solved.count,
        "empty_draws": solved.n_empty,
        "failed_draws": len(solved.failures),
        "alpha": cfg.alpha,
        "levels": list(cfg.levels),
        "records": records,
    }
    return result, panels, EXIT_OK


def run_confsets(cfg: RunConfig):
    solved = _solved(cfg)
    if not solved.nonempty:
        return _empty_summary(solved, "confsets"), {}, EXIT_EMPTY
    coords = _coords(cfg, solved.spec.n)
    sets = {}
    if cfg.cs_mode in ("switching", "both"):
        sets["cs_switching"] = projection_cs_switching(
            solved, alpha=cfg.alpha, h_max=cfg.h_max, coordinates=coords
        )
    if cfg.cs_mode in ("fixed", "both"):
        anchor = cfg.anchor or (1, 1, 0)
        sets["cs_fixed"] = projection_cs_fixed(
            solved, alpha=cfg.alpha, h_max=cfg.h_max, anchor=anchor, coordinates=coords
        )
    records, panels = [], {}
    for c in coords:
        rec = {"coordinate": _coord_dict(c)}
        panel = panels.setdefault(f"confsets_v{c[0]}_s{c[1]}", {"horizon": [], "bands": {}, "paths": {}})
        panel["horizon"].append(c[2])
        for key, cs in sets.items():
            rec[key] = cs.intervals(*c)
            rec[f"{key}_clusters"] = cs.cluster_intervals(*c)
            panel["bands"].setdefault(key, []).append(cs.intervals(*c))
        records.append(rec)
    result = {
        "alpha": cfg.alpha,
        "draws": solved.count,
        "retained": credible_region_phi(solved, cfg.alpha).count,
        "empty_draws": solved.n_empty,
        "anchor": list(sets["cs_fixed"].anchor) if "cs_fixed" in sets else None,
        "records": records,
        "diagnostics": {k: _cs_diag(v) for k, v in sets.items()},
    }
    return result, panels, EXIT_OK


def _cs_diag(cs) -> dict:
    d = dict(cs.diagnostics)
    d.pop("member_labels", None)
    d.pop("source_indices", None)
    if isinstance(d.get("M_bar"), dict):
        d["M_bar"] = {",".join(map(str, k)): v for k, v in d["M_bar"].items()}
    if isinstance(d.get("variance_floored"), list):
        d["variance_floored"] = [list(k) for k in d["variance_floored"]]
    return d


def run_hsvar(cfg: RunConfig):
    _, data = _data(cfg)
    hrf = fit_hsvar_fgls(data, cfg.lags, cfg.break_index)
    spec = _spec(cfg) if cfg.spec is not None else None
    if spec is not None:
        _check_dims(spec, hrf)
    iset = solve_hsvar(hrf, spec, cfg.shock_position)
    result = _iset_dict(iset, hrf)
    result["reduced_form"] = _rf_dict(hrf)
    panels = {}
    if not iset.empty:
        irfs = identified_set_irf(iset, hrf.regime1(), cfg.h_max).irfs
        result["irfs"] = irfs
        panels = _irf_panels(irfs, hrf.n)
    empty = iset.empty and not iset.diagnostics.get("continuum")
    return result, panels, EXIT_EMPTY if empty else EXIT_OK


def run_simulate(cfg: RunConfig):
    sp = load_structural(cfg.structural)
    if cfg.break_index is not None:
        data = simulate_hsvar(sp, cfg.lambdas, cfg.break_index, cfg.periods, cfg.seed)
    else:
        data = simulate(sp, cfg.periods, cfg.seed)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv_data(out / "data.csv", data)
    return {"periods": cfg.periods, "n": sp.n, "seed": cfg.seed, "file": str(out / "data.csv")}, {}, EXIT_OK


PIPELINES = {
    "fit": run_fit,
    "check-id": run_check_id,
    "identify-set": run_identify_set,
    "irf": run_irf,
    "posterior": run_posterior,
    "confsets": run_confsets,
    "hsvar": run_hsvar,
    "simulate": run_simulate,
}


def run(config: RunConfig, stdout=None) -> int:
    """Execute one pipeline; returns the process exit status."""
    stdout = stdout or sys.stdout
    config.validate()
    result, panels, code = PIPELINES[config.mode](config)
    text = dumps(result)
    stdout.write(text + "\n")
    if config.out is not None:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{config.mode}.json").write_text(text + "\n")
        if panels:
            emit_plot_data(panels, out)
    return code


# ---------------------------------------------------------------- argument parsing


def _ints(text: str, count: int, flag: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{flag} expects {count} comma-separated integers") from None
    if len(vals) != count:
        raise argparse.ArgumentTypeError(f"{flag} expects {count} comma-separated integers")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lisvar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"lisvar {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for mode in MODES:
        p = sub.add_parser(mode, help=MODE_HELP[mode])
        p.add_argument("--data", help="CSV file with a header row of variable names")
        p.add_argument("--reduced-form", help="JSON reduced form (alternative to --data)")
        p.add_argument("--spec", help="restriction file; 'bundled:<name>' selects a shipped fixture")
        p.add_argument("--structural", help="JSON structural parameters (simulate)")
        p.add_argument("--lags", type=int, help="lag order p")
        p.add_argument("--hmax", type=int, default=12, help="largest impulse-response horizon")
        p.add_argument("--draws", type=int, default=1000, help="posterior draws L")
        p.add_argument("--alpha", type=float, default=0.9, help="credibility / coverage level")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--break-index", type=int, help="first observation of the second regime")
        p.add_argument("--mode", default="both", help="confidence-set labels: switching, fixed or both")
        p.add_argument("--anchor", type=lambda s: _ints(s, 3, "--anchor"), help="anchor i,j,h for fixed labels")
        p.add_argument("--out", help="output directory for JSON and CSV plot data")
        p.add_argument("--threads", type=int, default=1, help="worker threads for per-draw solves")
        p.add_argument("--route", default="auto", choices=["auto", "triangular", "general", "oracle", "hsvar"])
        p.add_argument("--levels", type=lambda s: tuple(float(x) for x in s.split(",")), default=HDR_LEVELS)
        p.add_argument(
            "--pair",
            action="append",
            type=lambda s: _ints(s, 2, "--pair"),
            help="restrict output to variable,shock (repeatable)",
        )
        p.add_argument("--periods", type=int, default=500, help="sample length (simulate)")
        p.add_argument("--lambdas", type=lambda s: tuple(float(x) for x in s.split(",")))
        p.add_argument("--shock-position", type=int, default=1)
        p.add_argument("--verdict-draws", type=int, default=10)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        mode=args.command,
        data=args.data,
        reduced_form=args.reduced_form,
        spec=args.spec,
        structural=args.structural,
        lags=args.lags,
        h_max=args.hmax,
        draws=args.draws,
        alpha=args.alpha,
        seed=args.seed,
        break_index=args.break_index,
        cs_mode=args.mode,
        anchor=args.anchor,
        out=args.out,
        threads=args.threads,
        route=args.route,
        levels=args.levels,
        pairs=args.pair,
        periods=args.periods,
        lambdas=args.lambdas,
        shock_position=args.shock_position,
        verdict_draws=args.verdict_draws,
    )


def _setup_logging():
    level = os.environ.get("LISVAR_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    logging.captureWarnings(True)


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return run(config_from_args(args))
    except AllDrawsEmpty as exc:
        print(f"lisvar: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (LisvarError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        msg = f"missing key {exc}" if isinstance(exc, KeyError) else str(exc)
        print(f"lisvar: error: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
