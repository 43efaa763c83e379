"""Pipeline driver.

Subcommands map one-to-one onto pipeline stages; ``run`` drives them all
from an INI config with content-hash caching per stage. Exit codes:
0 success, 1 usage/data error, 2 internal failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import evaluation as ev
from . import features as ft
from . import learn
from . import report as rp
from . import synth as sy
from .corpus import (ClaimCorpus, CorpusError, InteractionKey,
                     join_metadata, load_affiliation_ranks, load_corpus,
                     load_journal_scores, load_strengths, save_corpus)
from .partition import (ClassLabel, PartitionError, Thresholds,
                        optimize_thresholds, partition_classes,
                        percentile_thresholds)

_USER_ERRORS = (CorpusError, PartitionError, learn.LearnError, ev.EvalError,
                FileNotFoundError, configparser.Error, ValueError)


class StageError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Stage caching

def _hash_inputs(paths, params: dict) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(params, sort_keys=True, default=str).encode())
    for p in sorted(Path(p) for p in paths):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


def run_stage(out: Path, name: str, inputs, params: dict, outputs,
              fn) -> bool:
    """Run fn unless the stamp hash matches; returns True if recomputed."""
    out.mkdir(parents=True, exist_ok=True)
    stamp = out / f".{name}.stamp"
    digest = _hash_inputs(inputs, params)
    if stamp.exists():
        try:
            st = json.loads(stamp.read_text(encoding="utf-8"))
            if st.get("hash") == digest and all(Path(o).exists()
                                                for o in outputs):
                print(f"[{name}] cached")
                return False
        except (json.JSONDecodeError, OSError, UnicodeDecodeError):
            print(f"[{name}] warning: cache stamp unreadable, recomputing",
                  file=sys.stderr)
    try:
        fn()
    except Exception as exc:
        raise StageError(f"stage {name} failed: {exc}") from exc
    stamp.write_text(json.dumps({"stage": name, "hash": digest}),
                     encoding="utf-8")
    print(f"[{name}] done")
    return True


# ---------------------------------------------------------------------------
# Shared IO helpers

def _corpus_paths(d: Path) -> tuple[Path, Path]:
    return d / "claims.tsv", d / "publications.jsonl"


def _load_corpus_dir(d: Path) -> ClaimCorpus:
    claims, pubs = _corpus_paths(Path(d))
    return load_corpus(claims, pubs)


def _load_labels(path: Path) -> dict[InteractionKey, ClassLabel]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("source\ttarget\tclass"):
            raise CorpusError(f"{path}: unexpected class table header")
        for line in fh:
            if not line.strip():
                continue
            src, tgt, cls = line.rstrip("\n").split("\t")[:3]
            out[InteractionKey(src, tgt)] = ClassLabel(cls)
    return out


def _write_labels(path: Path,
                  labels: dict[InteractionKey, ClassLabel],
                  strengths: dict[InteractionKey, float]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("source\ttarget\tclass\tstrength\n")
        for key in sorted(labels):
            fh.write(f"{key.source}\t{key.target}\t{labels[key].value}"
                     f"\t{strengths[key]!r}\n")


def _load_tables(features_dir: Path,
                 labels: dict[InteractionKey, ClassLabel]) -> ft.FeatureTables:
    inter = pd.read_csv(features_dir / "interaction.tsv", sep="\t",
                        index_col=0)
    claim = pd.read_csv(features_dir / "claim.tsv", sep="\t", index_col=0)
    return ft.FeatureTables(interaction=inter, claim=claim, labels=labels)


# ---------------------------------------------------------------------------
# Subcommand bodies (also used as run-stages)

def _do_synth(cfg: sy.GenConfig, out: Path) -> None:
    corpus, strengths, labels = sy.generate_corpus(cfg)
    sy.save_synth(out, corpus, strengths, labels)


def _do_ingest(claims: Path, pubs: Path, out: Path,
               strengths: Path | None = None,
               journal_scores: Path | None = None,
               affiliation_ranks: Path | None = None) -> None:
    corpus = load_corpus(claims, pubs)
    coverage = {}
    if journal_scores or affiliation_ranks:
        scores = (load_journal_scores(journal_scores)
                  if journal_scores else None)
        ranks = (load_affiliation_ranks(affiliation_ranks)
                 if affiliation_ranks else None)
        corpus, coverage = join_metadata(corpus, scores, ranks)
    out.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, *_corpus_paths(out))
    if strengths:
        vals = load_strengths(strengths)
        with open(out / "strengths.tsv", "w", encoding="utf-8") as fh:
            fh.write("source\ttarget\tstrength\n")
            for key in sorted(vals):
                fh.write(f"{key.source}\t{key.target}\t{vals[key]!r}\n")
    payload = dict(corpus.ingest_report)
    payload["join_coverage"] = coverage
    (out / "ingest.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2, default=str),
        encoding="utf-8")


def _do_partition(corpus_dir: Path, out: Path, mode: str,
                  eps: float = 0.05, theta_minus: float | None = None,
                  theta_plus: float | None = None) -> None:
    corpus = _load_corpus_dir(corpus_dir)
    strengths = load_strengths(corpus_dir / "strengths.tsv")
    missing = [k for k in strengths if k not in corpus.interactions]
    if missing:
        raise CorpusError(f"strengths list unknown interactions: "
                          f"{', '.join(str(k) for k in missing[:5])}")
    diagnostics: dict = {}
    if mode == "optimize":
        th, diagnostics = optimize_thresholds(corpus, strengths)
    elif mode == "percentile":
        th = percentile_thresholds(strengths, eps)
    elif mode == "fixed":
        if theta_minus is None or theta_plus is None:
            raise CorpusError("fixed mode needs --theta-minus/--theta-plus")
        th = Thresholds(theta_minus, theta_plus)
    else:
        raise CorpusError(f"unknown partition mode {mode!r}")
    labels = partition_classes(strengths, th)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"theta_minus": th.theta_minus, "theta_plus": th.theta_plus,
               "mode": mode,
               "class_counts": {lab.value: sum(1 for v in labels.values()
                                               if v is lab)
                                for lab in ClassLabel}}
    if diagnostics:
        payload["objective"] = diagnostics["objective"]
        payload["flags"] = diagnostics["flags"]
        rp.write_curves_csv(out / "curves.csv", diagnostics)
    (out / "thresholds.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2), encoding="utf-8")
    _write_labels(out / "classes.tsv", labels, strengths)


def _do_features(corpus_dir: Path, classes: Path, out: Path, seed: int,
                 convention: str) -> None:
    corpus = _load_corpus_dir(corpus_dir)
    labels = _load_labels(classes)
    tabs = ft.assemble(corpus, labels, seed=seed, convention=convention)
    out.mkdir(parents=True, exist_ok=True)
    tabs.interaction.to_csv(out / "interaction.tsv", sep="\t")
    tabs.claim.to_csv(out / "claim.tsv", sep="\t")
    (out / "families.json").write_text(
        json.dumps(tabs.families, sort_keys=True, indent=2),
        encoding="utf-8")


def _matrices_for_task(tabs: ft.FeatureTables, task: str):
    keys = sorted(tabs.labels)
    if task in ("neutral", "positive_direct"):
        ids, y = ev._interaction_xy(tabs, keys, task)
        names = list(tabs.interaction.columns)
        df = tabs.interaction.loc[ids]
    elif task == "claim_correctness":
        df, y = ev._claim_xy(tabs, keys)
        names = tabs.claim_feature_columns()
        df = df[names]
    else:
        raise CorpusError(f"no standalone model for task {task!r}")
    X, _ = ft.impute_median(df, df)
    return X, y, names


def _do_train(features_dir: Path, classes: Path, out: Path, task: str,
              seed: int) -> None:
    tabs = _load_tables(features_dir, _load_labels(classes))
    X, y, names = _matrices_for_task(tabs, task)
    out.mkdir(parents=True, exist_ok=True)
    forest = learn.train_forest(X, y, seed=seed, feature_names=names)
    (out / f"{task}_forest.json").write_text(learn.forest_to_json(forest),
                                             encoding="utf-8")
    std = learn.Standardizer.fit(X)
    logit = learn.train_logit_l1(std.transform(X), y, seed=seed,
                                 feature_names=names)
    (out / f"{task}_logit.json").write_text(learn.logit_to_json(logit),
                                            encoding="utf-8")


def _do_evaluate(corpus_dir: Path, features_dir: Path, classes: Path,
                 out: Path, tasks: list[str], repeats: int, k: int,
                 seed: int, model_kind: str) -> None:
    corpus = _load_corpus_dir(corpus_dir)
    labels = _load_labels(classes)
    tabs = _load_tables(features_dir, labels)
    plan = ev.grouped_kfold(sorted(labels), repeats=repeats, k=k, seed=seed)
    reports = [ev.evaluate(corpus, tabs, task, plan, model_kind=model_kind)
               for task in tasks]
    out.mkdir(parents=True, exist_ok=True)
    rp.write_eval_json(out / "eval.json", reports)
    rp.write_auc_samples(out / "auc_samples.csv", reports)
    rp.write_summary(out / "summary.csv", reports)
    for rep in reports:
        rp.write_importances(out / f"importances_{rep.task}.csv", rep)


def _do_policy(corpus_dir: Path, classes: Path, out: Path,
               betas: list[float], repeats: int, k: int, seed: int,
               task: str, model_kind: str, convention: str) -> None:
    corpus = _load_corpus_dir(corpus_dir)
    labels = _load_labels(classes)
    rows = []
    for beta in betas:
        sub = ev.policy_resample_lengths(corpus, beta, seed=seed)
        tabs = ft.assemble(sub, labels, seed=seed, convention=convention)
        plan = ev.grouped_kfold(sorted(sub.interactions), repeats=repeats,
                                k=k, seed=seed)
        rep = ev.evaluate(sub, tabs, task, plan, model_kind=model_kind)
        aucs = np.asarray(rep.auc_samples)
        igs = np.asarray(rep.ig_samples)
        rows.append({
            "beta": beta,
            "auc_mean": float(aucs.mean()) if aucs.size else float("nan"),
            "auc_sd": float(aucs.std(ddof=1)) if aucs.size > 1
            else float("nan"),
            "ig_mean": float(igs.mean()) if igs.size else float("nan"),
            "ig_sd": float(igs.std(ddof=1)) if igs.size > 1
            else float("nan"),
        })
    out.mkdir(parents=True, exist_ok=True)
    rp.write_policy_csv(out / "policy.csv", rows)
    rp.policy_chart(out / "policy.svg", out / "policy.csv")


def _do_report(in_dir: Path, out: Path) -> None:
    in_dir = Path(in_dir)
    out.mkdir(parents=True, exist_ok=True)
    eval_json = in_dir / "eval.json"
    if not eval_json.exists():
        raise CorpusError(f"{eval_json} not found; run evaluate first")
    payload = json.loads(eval_json.read_text(encoding="utf-8"))
    with open(out / "auc_summary.csv", "w", encoding="utf-8") as fh:
        fh.write("task,n_samples,auc_mean,auc_ci_lo,auc_ci_hi,ig_mean\n")
        for task in sorted(payload):
            rep = payload[task]
            s = rp.summarize_auc(rep["auc_samples"])
            fh.write(f"{task},{s['n']},{s['mean']!r},{s['ci_lo']!r},"
                     f"{s['ci_hi']!r},{rep['ig_mean']!r}\n")
        for task in sorted(payload):
            rep = payload[task]
            rows = sorted(
                ((name, *vals) for name, vals in
                 rep["family_importances"].items()),
                key=lambda r: -r[1])
            with open(out / f"importances_{task}.csv", "w",
                      encoding="utf-8") as ifh:
                ifh.write("family,mean,ci_lo,ci_hi\n")
                for name, m, lo, hi in rows:
                    ifh.write(f"{name},{m!r},{lo!r},{hi!r}\n")
            rp.importance_chart(out / f"importances_{task}.svg", rows)
    curves = in_dir / "curves.csv"
    if curves.exists():
        rp.curves_chart(out / "curves.svg", curves)
    policy = in_dir / "policy.csv"
    if policy.exists():
        rp.policy_chart(out / "policy.svg", policy)


# ---------------------------------------------------------------------------
# Config-driven full run

def _cfg(cp: configparser.ConfigParser, section: str, key: str, default):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    if isinstance(default, bool):
        return cp.getboolean(section, key)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def _do_run(config_path: Path, seed_override: int | None,
            out_override: Path | None) -> None:
    cp = configparser.ConfigParser()
    read = cp.read(config_path)
    if not read:
        raise CorpusError(f"config file {config_path} not found")
    if not cp.has_section("run"):
        raise CorpusError("config needs a [run] section with seed and out")
    if seed_override is None and not cp.has_option("run", "seed"):
        raise CorpusError("seed is mandatory: set [run] seed or --seed")
    seed = seed_override if seed_override is not None \
        else cp.getint("run", "seed")
    out = Path(out_override or _cfg(cp, "run", "out", "claimcal_out"))
    out.mkdir(parents=True, exist_ok=True)
    convention = _cfg(cp, "features", "citation_exponent", "2sigma")

    corpus_dir = out / "corpus"
    if cp.has_section("synth"):
        gen = sy.GenConfig(
            n_interactions=_cfg(cp, "synth", "n_interactions", 400),
            zipf_exponent=_cfg(cp, "synth", "zipf_exponent", 2.0),
            signal_strength=_cfg(cp, "synth", "signal_strength", 1.0),
            reuse_probability=_cfg(cp, "synth", "reuse_probability", 0.35),
            seed=_cfg(cp, "synth", "seed", seed))
        synth_dir = out / "synth"
        stamp_cfg = {k: ({lbl.value: spec for lbl, spec in v.items()}
                         if isinstance(v, dict) else v)
                     for k, v in vars(gen).items()}
        run_stage(out, "synth", [config_path], {"cfg": stamp_cfg},
                  [synth_dir / "claims.tsv"],
                  lambda: _do_synth(gen, synth_dir))
        claims, pubs = _corpus_paths(synth_dir)
        strengths_path = synth_dir / "strengths.tsv"
    else:
        if not cp.has_section("paths"):
            raise CorpusError("config needs [paths] or [synth]")
        claims = Path(cp.get("paths", "claims"))
        pubs = Path(cp.get("paths", "publications"))
        strengths_path = Path(cp.get("paths", "strengths"))

    run_stage(out, "ingest", [claims, pubs, strengths_path], {},
              [corpus_dir / "claims.tsv", corpus_dir / "strengths.tsv"],
              lambda: _do_ingest(claims, pubs, corpus_dir,
                                 strengths=strengths_path))

    part_dir = out / "partition"
    mode = _cfg(cp, "partition", "mode", "optimize")
    eps = _cfg(cp, "partition", "eps", 0.05)
    tm = cp.getfloat("partition", "theta_minus", fallback=None)
    tp = cp.getfloat("partition", "theta_plus", fallback=None)
    run_stage(out, "partition",
              list(_corpus_paths(corpus_dir)) + [corpus_dir /
                                                 "strengths.tsv"],
              {"mode": mode, "eps": eps, "tm": tm, "tp": tp},
              [part_dir / "thresholds.json", part_dir / "classes.tsv"],
              lambda: _do_partition(corpus_dir, part_dir, mode, eps, tm, tp))

    feat_dir = out / "features"
    run_stage(out, "features",
              list(_corpus_paths(corpus_dir)) + [part_dir / "classes.tsv"],
              {"seed": seed, "convention": convention},
              [feat_dir / "interaction.tsv", feat_dir / "claim.tsv"],
              lambda: _do_features(corpus_dir, part_dir / "classes.tsv",
                                   feat_dir, seed, convention))

    model_dir = out / "models"
    train_task = _cfg(cp, "train", "task", "neutral")
    run_stage(out, "train",
              [feat_dir / "interaction.tsv", feat_dir / "claim.tsv"],
              {"seed": seed, "task": train_task},
              [model_dir / f"{train_task}_forest.json"],
              lambda: _do_train(feat_dir, part_dir / "classes.tsv",
                                model_dir, train_task, seed))

    eval_dir = out / "eval"
    tasks = [t.strip() for t in
             _cfg(cp, "evaluate", "tasks", "neutral").split(",") if t.strip()]
    repeats = _cfg(cp, "evaluate", "repeats", 20)
    k = _cfg(cp, "evaluate", "k", 3)
    model_kind = _cfg(cp, "evaluate", "model_kind", "forest")
    run_stage(out, "evaluate",
              [feat_dir / "interaction.tsv", feat_dir / "claim.tsv"],
              {"tasks": tasks, "repeats": repeats, "k": k, "seed": seed,
               "model_kind": model_kind},
              [eval_dir / "eval.json"],
              lambda: _do_evaluate(corpus_dir, feat_dir,
                                   part_dir / "classes.tsv", eval_dir,
                                   tasks, repeats, k, seed, model_kind))

    policy_dir = out / "policy"
    betas_raw = _cfg(cp, "policy", "betas", "")
    if betas_raw:
        betas = [float(b) for b in betas_raw.split(",") if b.strip()]
        run_stage(out, "policy",
                  list(_corpus_paths(corpus_dir)),
                  {"betas": betas, "seed": seed},
                  [policy_dir / "policy.csv"],
                  lambda: _do_policy(
                      corpus_dir, part_dir / "classes.tsv", policy_dir,
                      betas, _cfg(cp, "policy", "repeats", 4),
                      _cfg(cp, "policy", "k", 3), seed,
                      _cfg(cp, "policy", "task", "positive_bayes"),
                      model_kind, convention))

    report_dir = out / "report"
    report_inputs = [eval_dir / "eval.json"]
    if (part_dir / "curves.csv").exists():
        report_inputs.append(part_dir / "curves.csv")

    def _report_all() -> None:
        staging = eval_dir
        curves = part_dir / "curves.csv"
        if curves.exists():
            (eval_dir / "curves.csv").write_bytes(curves.read_bytes())
        policy_csv = policy_dir / "policy.csv"
        if policy_csv.exists():
            (eval_dir / "policy.csv").write_bytes(policy_csv.read_bytes())
        _do_report(staging, report_dir)

    run_stage(out, "report", report_inputs, {},
              [report_dir / "auc_summary.csv"], _report_all)


# ---------------------------------------------------------------------------
# Argument parsing

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="claimcal",
        description="Claim-calibration pipeline: partition interactions by"
                    " experimental strength, build leakage-safe features,"
                    " train and evaluate claim/interaction models.")
    p.add_argument("--seed", type=int, default=None,
                   help="global RNG seed (default: per-command or config)")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--threads", type=int, default=1,
                   help="worker hint; stages currently run sequentially")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic corpus")
    sp.add_argument("--n-interactions", type=int, default=400)
    sp.add_argument("--zipf-exponent", type=float, default=2.0)
    sp.add_argument("--signal-strength", type=float, default=1.0)
    sp.add_argument("--reuse-probability", type=float, default=0.35)

    ip = sub.add_parser("ingest", help="load and validate corpus files")
    ip.add_argument("--claims", type=Path, required=True)
    ip.add_argument("--publications", type=Path, required=True)
    ip.add_argument("--strengths", type=Path)
    ip.add_argument("--journal-scores", type=Path)
    ip.add_argument("--affiliation-ranks", type=Path)

    pp = sub.add_parser("partition", help="classify interactions by strength")
    pp.add_argument("--corpus", type=Path, required=True,
                    help="directory from ingest/synth")
    pp.add_argument("--mode", choices=("optimize", "percentile", "fixed"),
                    default="optimize")
    pp.add_argument("--eps", type=float, default=0.05)
    pp.add_argument("--theta-minus", type=float)
    pp.add_argument("--theta-plus", type=float)

    fp = sub.add_parser("features", help="assemble feature tables")
    fp.add_argument("--corpus", type=Path, required=True)
    fp.add_argument("--classes", type=Path, required=True)
    fp.add_argument("--citation-exponent", choices=("2sigma", "2sigma2"),
                    default="2sigma")

    tp = sub.add_parser("train", help="fit and dump full-data models")
    tp.add_argument("--features", type=Path, required=True)
    tp.add_argument("--classes", type=Path, required=True)
    tp.add_argument("--task", choices=("neutral", "positive_direct",
                                       "claim_correctness"),
                    default="neutral")

    ep = sub.add_parser("evaluate", help="cross-validated AUC/IG report")
    ep.add_argument("--corpus", type=Path, required=True)
    ep.add_argument("--features", type=Path, required=True)
    ep.add_argument("--classes", type=Path, required=True)
    ep.add_argument("--tasks", default="neutral")
    ep.add_argument("--repeats", type=int, default=20)
    ep.add_argument("--k", type=int, default=3)
    ep.add_argument("--model-kind", choices=("forest", "logit"),
                    default="forest")

    lp = sub.add_parser("policy", help="claim-length resampling policy sweep")
    lp.add_argument("--corpus", type=Path, required=True)
    lp.add_argument("--classes", type=Path, required=True)
    lp.add_argument("--betas", required=True,
                    help="comma-separated target exponents")
    lp.add_argument("--repeats", type=int, default=4)
    lp.add_argument("--k", type=int, default=3)
    lp.add_argument("--task", default="positive_bayes")
    lp.add_argument("--model-kind", choices=("forest", "logit"),
                    default="forest")
    lp.add_argument("--citation-exponent", choices=("2sigma", "2sigma2"),
                    default="2sigma")

    rp_ = sub.add_parser("report", help="render CSV/SVG summaries")
    rp_.add_argument("--in", dest="in_dir", type=Path, required=True,
                     help="directory holding eval.json (+ optional csv)")

    rr = sub.add_parser("run", help="full pipeline from an INI config")
    rr.add_argument("--config", type=Path, required=True)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    seed = args.seed if args.seed is not None else 0
    out = args.out or Path("claimcal_out")
    try:
        if args.command == "synth":
            cfg = sy.GenConfig(n_interactions=args.n_interactions,
                               zipf_exponent=args.zipf_exponent,
                               signal_strength=args.signal_strength,
                               reuse_probability=args.reuse_probability,
                               seed=seed)
            _do_synth(cfg, out)
        elif args.command == "ingest":
            _do_ingest(args.claims, args.publications, out,
                       strengths=args.strengths,
                       journal_scores=args.journal_scores,
                       affiliation_ranks=args.affiliation_ranks)
        elif args.command == "partition":
            _do_partition(args.corpus, out, args.mode, args.eps,
                          args.theta_minus, args.theta_plus)
        elif args.command == "features":
            _do_features(args.corpus, args.classes, out, seed,
                         args.citation_exponent)
        elif args.command == "train":
            _do_train(args.features, args.classes, out, args.task, seed)
        elif args.command == "evaluate":
            tasks = [t.strip() for t in args.tasks.split(",") if t.strip()]
            _do_evaluate(args.corpus, args.features, args.classes, out,
                         tasks, args.repeats, args.k, seed, args.model_kind)
        elif args.command == "policy":
            betas = [float(b) for b in args.betas.split(",") if b.strip()]
            _do_policy(args.corpus, args.classes, out, betas, args.repeats,
                       args.k, seed, args.task, args.model_kind,
                       args.citation_exponent)
        elif args.command == "report":
            _do_report(args.in_dir, out)
        elif args.command == "run":
            _do_run(args.config, args.seed, args.out)
        else:  # pragma: no cover - argparse guards this
            parser.error(f"unknown command {args.command!r}")
    except StageError as exc:
        cause = exc.__cause__
        print(f"error: {exc}", file=sys.stderr)
        return 1 if isinstance(cause, _USER_ERRORS) else 2
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
