"""Command-line front end.

Subcommands wire the library into a file-based workflow:

    fit       sample the posterior, write draws + convergence summary
    diagnose  rank-histogram and autocorrelation tables from a draws file
    analyze   HPD / stats / odds / decision / marginal-effect tables
    evaluate  train-test ROC curves and AUC for both classifiers
    synth     generate a synthetic cohort with ground truth

Every command is driven by a single JSON config and a seed; reruns produce
byte-identical data files.  Exit codes: 0 success, 2 config error, 3 data
error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import analysis, diagnostics, evaluation, synth
from .data import DataError, Dataset, Schema, encode, load_table, split
from .model import ModelSpec
from .sampler import ChainConfig, NumericError, PosteriorDraws, run_chains


class ConfigError(Exception):
    """Missing, unparseable, or inconsistent configuration."""


class StageError(Exception):
    def __init__(self, stage: str, original: Exception):
        super().__init__(f"stage {stage}: {original}")
        self.stage = stage
        self.original = original


def _fmt(v) -> str:
    return repr(float(v))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


@dataclass
class RunConfig:
    """Parsed configuration document plus the directory it came from."""

    raw: dict
    base_dir: Path
    seed: int
    out_dir: Path

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        base = path.parent
        seed = int(raw.get("seed", 0))
        out_dir = base / raw.get("out_dir", "out")
        return cls(raw, base, seed, out_dir)

    def section(self, name: str) -> dict:
        value = self.raw.get(name, {})
        if not isinstance(value, dict):
            raise ConfigError(f"config section {name!r} must be an object")
        return value

    def resolve(self, rel) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.base_dir / p

    def schema(self) -> Schema:
        data = self.section("data")
        spec = data.get("schema")
        if spec is None:
            raise ConfigError("config needs data.schema (object or file path)")
        if isinstance(spec, str):
            try:
                spec = json.loads(self.resolve(spec).read_text(encoding="utf-8"))
            except OSError as exc:
                raise ConfigError(f"cannot read schema file: {exc}") from exc
        try:
            return Schema.from_dict(spec)
        except DataError as exc:
            raise ConfigError(f"bad schema: {exc}") from exc

    def dataset(self) -> Dataset:
        data = self.section("data")
        if "path" not in data:
            raise ConfigError("config needs data.path")
        schema = self.schema()
        table = _in_stage("data.load", load_table, self.resolve(data["path"]))
        return _in_stage("data.encode", encode, table, schema)

    def model_spec(self, dim: int) -> ModelSpec:
        m = self.section("model")
        mean = m.get("prior_mean", 0.0)
        var = m.get("prior_variance", 1000.0)
        mean_vec = np.full(dim, float(mean)) if np.isscalar(mean) else np.asarray(mean, float)
        var_vec = np.full(dim, float(var)) if np.isscalar(var) else np.asarray(var, float)
        try:
            return ModelSpec(mean_vec, var_vec)
        except ValueError as exc:
            raise ConfigError(f"bad model section: {exc}") from exc

    def chain_config(self) -> ChainConfig:
        c = self.section("chains")
        try:
            return ChainConfig(
                n_chains=int(c.get("n_chains", 4)),
                warmup=int(c.get("warmup", 1000)),
                thin=int(c.get("thin", 1)),
                draws_per_chain=int(c.get("draws_per_chain", 2500)),
                max_tree_depth=int(c.get("max_tree_depth", 10)),
                target_accept=float(c.get("target_accept", 0.8)),
                seed=self.seed,
            )
        except ValueError as exc:
            raise ConfigError(f"bad chains section: {exc}") from exc


def _in_stage(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (DataError, ConfigError, NumericError, ValueError, OSError) as exc:
        raise StageError(stage, exc) from exc


def _write_manifest(out_dir: Path, command: str, cfg: RunConfig, outputs, started: float) -> None:
    manifest = {
        "command": command,
        "seed": cfg.seed,
        "config": cfg.raw,
        "outputs": sorted(str(o) for o in outputs),
        "wall_time_s": round(time.monotonic() - started, 3),
    }
    path = out_dir / f"manifest_{command}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_fit(cfg: RunConfig) -> int:
    started = time.monotonic()
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    ds = cfg.dataset()
    spec = cfg.model_spec(ds.dim)
    chains = cfg.chain_config()
    draws = _in_stage("sampler.run", run_chains, ds, spec, chains)
    draws_path = out / "draws.csv"
    draws.write_csv(draws_path)
    report = _in_stage("diagnostics", diagnostics.diagnose, draws)
    diag_path = out / "diagnostics.csv"
    report.write_csv(diag_path)
    if ds.n_dropped:
        print(f"dropped {ds.n_dropped} rows with missing values", file=sys.stderr)
    _write_manifest(out, "fit", cfg, [draws_path.name, diag_path.name], started)
    return 0


def cmd_diagnose(cfg: RunConfig, draws_path) -> int:
    started = time.monotonic()
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    pd = _in_stage("draws.read", PosteriorDraws.read_csv, draws_path)
    a = cfg.section("analysis")
    max_lag = int(a.get("max_lag", 50))
    n_bins = int(a.get("n_bins", 20))
    report = _in_stage("diagnostics", diagnostics.diagnose, pd, max_lag, n_bins)

    chain_cols = [f"chain{c}" for c in range(pd.n_chains)]
    hist_rows = []
    acf_rows = []
    for p in report.parameters:
        if p.rank_histogram is not None:
            for b in range(p.rank_histogram.shape[1]):
                hist_rows.append([p.name, b, *(int(v) for v in p.rank_histogram[:, b])])
        if p.autocorr is not None:
            for lag in range(p.autocorr.shape[1]):
                acf_rows.append([p.name, lag, *(_fmt(v) for v in p.autocorr[:, lag])])
    hist_path = out / "rank_histograms.csv"
    _write_csv(hist_path, ["parameter", "bin", *chain_cols], hist_rows)
    acf_path = out / "autocorrelations.csv"
    _write_csv(acf_path, ["parameter", "lag", *chain_cols], acf_rows)
    _write_manifest(out, "diagnose", cfg, [hist_path.name, acf_path.name], started)
    return 0


def cmd_analyze(cfg: RunConfig, draws_path) -> int:
    started = time.monotonic()
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    pd = _in_stage("draws.read", PosteriorDraws.read_csv, draws_path)
    ds = cfg.dataset()
    if tuple(ds.feature_names) != tuple(pd.feature_names):
        raise StageError("analyze", DataError(
            "draws file feature names do not match the encoded dataset"))

    a = cfg.section("analysis")
    mass = float(a.get("mass", 0.95))
    delta = float(a.get("delta", 1.0))
    p_base = a.get("p")
    p_base = float(np.mean(ds.y)) if p_base is None else float(p_base)
    d_values = tuple(float(d) for d in a.get("d_values", analysis.DEFAULT_D_VALUES))

    flat = pd.flat()
    hpd_rows, stats_rows, odds_rows = [], [], []
    for j, name in enumerate(pd.feature_names):
        draws_j = flat[:, j]
        iv = analysis.hpd(draws_j, mass)
        st = analysis.summary(draws_j)
        hpd_rows.append([name, _fmt(iv.lower), _fmt(iv.upper)])
        stats_rows.append([name, *(_fmt(v) for v in st)])
        oc = analysis.odds_change(draws_j, delta, name)
        o_iv = analysis.hpd(oc.draws, mass)
        o_st = analysis.summary(oc.draws)
        odds_rows.append([name, *(_fmt(v) for v in o_st), _fmt(o_iv.lower), _fmt(o_iv.upper)])

    table = _in_stage("analysis.decisions", analysis.decision_table, pd, p_base, d_values, delta)
    threshold_rows = []
    for d in d_values:
        th = analysis.HypothesisThresholds.from_probability_shift(p_base, d)
        threshold_rows.append([_fmt(d), _fmt(th.epsilon1), _fmt(th.epsilon2)])

    quant_cols = [c for c in cfg.schema().quantitative_cols if c in pd.feature_names]
    margeff_rows = []
    for name in quant_cols:
        j = pd.feature_names.index(name)
        sample = analysis.marginal_effect_distribution(ds, pd, j)
        iv = analysis.hpd(sample.effects, mass) if sample.effects.size >= 10 else None
        st = analysis.summary(sample.effects)
        bounds = [_fmt(iv.lower), _fmt(iv.upper)] if iv else ["", ""]
        margeff_rows.append([name, *(_fmt(v) for v in st), *bounds])

    paths = {
        "hpd.csv": (["parameter", "hpd_lower", "hpd_upper"], hpd_rows),
        "stats.csv": (["parameter", "mean", "q25", "median", "q75"], stats_rows),
        "odds.csv": (["parameter", "mean", "q25", "median", "q75", "hpd_lower", "hpd_upper"], odds_rows),
        "decisions.csv": (["parameter", *(f"d_{d:g}" for d in d_values)], table.symbol_rows()),
        "thresholds.csv": (["d", "epsilon1", "epsilon2"], threshold_rows),
        "marginal_effects.csv": (["parameter", "mean", "q25", "median", "q75", "hpd_lower", "hpd_upper"], margeff_rows),
    }
    for fname, (header, rows) in paths.items():
        _write_csv(out / fname, header, rows)
    print(f"baseline rate p = {p_base:.6g}; thresholds written to thresholds.csv")
    _write_manifest(out, "analyze", cfg, list(paths), started)
    return 0


def cmd_evaluate(cfg: RunConfig, reduced_grid: bool | None = None) -> int:
    started = time.monotonic()
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    ds = cfg.dataset()
    ev = cfg.section("eval")
    test_fraction = float(ev.get("test_fraction", 0.3))
    folds = int(ev.get("folds", 3))
    if reduced_grid is None:
        reduced_grid = bool(ev.get("reduced_grid", False))
    train, test = _in_stage("data.split", split, ds, test_fraction, cfg.seed)

    spec = cfg.model_spec(ds.dim)
    chains = cfg.chain_config()
    pd = _in_stage("sampler.run", run_chains, train, spec, chains)
    forest_cfg = _in_stage(
        "eval.grid_search", evaluation.grid_search, train, folds, None, cfg.seed, reduced_grid
    )
    logit_report, forest_report = _in_stage(
        "eval.compare", evaluation.compare, train, test, pd, forest_cfg, cfg.seed
    )

    outputs = []
    for report, stem in ((logit_report, "logistic_regression"), (forest_report, "random_forest")):
        path = out / f"roc_{stem}.csv"
        rows = [
            [_fmt(t), _fmt(f), _fmt(r)]
            for t, f, r in zip(report.roc.thresholds, report.roc.fpr, report.roc.tpr)
        ]
        _write_csv(path, ["threshold", "fpr", "tpr"], rows)
        outputs.append(path.name)
    auc_path = out / "auc.csv"
    _write_csv(auc_path, ["model", "auc"],
               [[r.model, _fmt(r.auc)] for r in (logit_report, forest_report)])
    outputs.append(auc_path.name)
    cfg.raw.setdefault("eval", {})["selected_forest"] = {
        "n_trees": forest_cfg.n_trees,
        "m_features": forest_cfg.m_features,
        "min_node": forest_cfg.min_node,
        "sample_fraction": forest_cfg.sample_fraction,
        "with_replacement": forest_cfg.with_replacement,
    }
    _write_manifest(out, "evaluate", cfg, outputs, started)
    return 0


def _parse_covariates(items) -> tuple[synth.Covariate, ...]:
    covs = []
    for item in items:
        kind = item.get("kind")
        if kind == "binary":
            covs.append(synth.Covariate("binary", p=float(item.get("p", 0.5)),
                                        name=item.get("name", "")))
        elif kind == "categorical":
            covs.append(synth.Covariate("categorical", probs=tuple(item["probs"]),
                                        name=item.get("name", "")))
        elif kind == "normal":
            covs.append(synth.Covariate("normal", name=item.get("name", "")))
        else:
            raise ConfigError(f"unknown covariate kind {kind!r}")
    return tuple(covs)


def _synth_config(cfg: RunConfig) -> synth.SynthConfig:
    s = cfg.section("synth")
    try:
        att_raw = s.get("attrition", {"mode": "none"})
        attrition = synth.AttritionSpec(
            mode=att_raw.get("mode", "none"),
            q=float(att_raw.get("q", 0.0)),
            z_columns=tuple(att_raw.get("z_columns", ())),
            gamma=tuple(att_raw.get("gamma", ())),
            outcome_coef=float(att_raw.get("outcome_coef", 0.0)),
        )
        return synth.SynthConfig(
            n=int(s["n"]),
            theta_true=np.asarray(s["theta_true"], dtype=float),
            covariates=_parse_covariates(s.get("covariates", [])),
            attrition=attrition,
            seed=cfg.seed,
        )
    except KeyError as exc:
        raise ConfigError(f"synth section missing key {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"bad synth section: {exc}") from exc


def _write_cohort_csv(path: Path, ds: Dataset) -> None:
    # Intercept column is implicit in the file format; drop it on export.
    names = list(ds.feature_names)
    cols = list(range(len(names)))
    if names and names[0] == "intercept":
        names, cols = names[1:], cols[1:]
    rows = [
        [_fmt(ds.X[i, j]) for j in cols] + [str(int(ds.y[i]))]
        for i in range(ds.n)
    ]
    _write_csv(path, [*names, "y"], rows)


def cmd_synth(cfg: RunConfig) -> int:
    started = time.monotonic()
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    scfg = _synth_config(cfg)
    cohort = _in_stage("synth.generate", synth.generate, scfg)
    full_path = out / "synth_full.csv"
    obs_path = out / "synth_observed.csv"
    _write_cohort_csv(full_path, cohort.full)
    _write_cohort_csv(obs_path, cohort.observed)

    names = [n for n in cohort.full.feature_names if n != "intercept"]
    quantitative = [
        cov.column_names(i)[0]
        for i, cov in enumerate(scfg.covariates) if cov.kind == "normal"
    ]
    binary = [n for n in names if n not in quantitative]
    schema = {
        "outcome": "y",
        "binary": binary,
        "categorical": [],
        "quantitative": quantitative,
        "intercept": True,
    }
    schema_path = out / "synth_schema.json"
    schema_path.write_text(json.dumps(schema, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    truth = {
        "feature_names": list(cohort.full.feature_names),
        "theta_true": [float(v) for v in cohort.theta_true],
        "n_full": cohort.full.n,
        "n_observed": cohort.observed.n,
        "retention": cohort.retention,
    }
    truth_path = out / "synth_truth.json"
    truth_path.write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_manifest(out, "synth", cfg,
                    [full_path.name, obs_path.name, schema_path.name, truth_path.name], started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayeslogit",
        description="Bayesian logistic regression: sampling, diagnostics, and analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out-dir", default=None, help="override the config output directory")

    p_fit = sub.add_parser("fit", help="sample the posterior and write draws + diagnostics")
    add_common(p_fit)
    p_fit.add_argument("--thin", type=int, default=None, help="override chain thinning")

    p_diag = sub.add_parser("diagnose", help="rank histograms and autocorrelations from draws")
    add_common(p_diag)
    p_diag.add_argument("--draws", default=None, help="draws CSV (default: <out-dir>/draws.csv)")

    p_an = sub.add_parser("analyze", help="HPD, stats, odds, decisions, marginal effects")
    add_common(p_an)
    p_an.add_argument("--draws", default=None, help="draws CSV (default: <out-dir>/draws.csv)")

    p_ev = sub.add_parser("evaluate", help="ROC/AUC against the tuned forest benchmark")
    add_common(p_ev)
    p_ev.add_argument("--reduced-grid", action="store_true", default=None,
                      help="use the small tuning grid")

    p_sy = sub.add_parser("synth", help="generate a synthetic cohort with known truth")
    add_common(p_sy)
    return parser


def _exit_code(exc: Exception) -> int:
    inner = exc.original if isinstance(exc, StageError) else exc
    if isinstance(inner, ConfigError):
        return 2
    if isinstance(inner, (DataError, OSError)):
        return 3
    if isinstance(inner, (NumericError, ValueError)):
        return 4
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config)
        if args.seed is not None:
            cfg.seed = int(args.seed)
        if args.out_dir is not None:
            cfg.out_dir = Path(args.out_dir)
        if args.command == "fit":
            if args.thin is not None:
                cfg.raw.setdefault("chains", {})["thin"] = int(args.thin)
            return cmd_fit(cfg)
        if args.command == "diagnose":
            draws = args.draws or cfg.out_dir / "draws.csv"
            return cmd_diagnose(cfg, draws)
        if args.command == "analyze":
            draws = args.draws or cfg.out_dir / "draws.csv"
            return cmd_analyze(cfg, draws)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.reduced_grid)
        if args.command == "synth":
            return cmd_synth(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except (StageError, ConfigError, DataError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
