"""Command-line interface.

Commands validate their configuration and inputs before touching the
output directory, so a bad run leaves nothing behind. All outputs
except run.log are byte-deterministic for a fixed config and seed;
run.log is the only place timestamps go.
"""

from __future__ import annotations

import datetime
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from .config import RunConfig, build_synth_spec, load_run_config
from .data import balance_classes, load_corpus, load_features, make_folds
from .evector import save_word_weights
from .exceptions import ConfigError, CoverageError, EmofusionError
from .experiment import (
    DEFAULT_WEIGHT_GRID,
    select_verification_weight,
    sweep_modules,
    train_acoustic_round,
    train_evector_round,
    train_text_round,
)
from .fusion import ScoreSet, read_score_file, run_fusion_experiment, write_score_file
from .metrics import ResultRow, confusion, format_results_table, results_to_json
from .synth import synth_corpus, write_synth_corpus
from .utils import dump_json, rng_for

_FOLD_STREAM = 1
_BALANCE_STREAM = 8


def _log(out_dir: Path, message: str) -> None:
    stamp = datetime.datetime.now().isoformat(timespec="seconds")
    with open(out_dir / "run.log", "a", encoding="utf-8") as handle:
        handle.write(f"{stamp} {message}\n")


def _cli_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except EmofusionError as exc:
            click.echo(f"ERROR {type(exc).__name__}: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _prepare(cfg: RunConfig, need_features: bool):
    """Corpus, features and fold plan for a run config."""
    if cfg.manifest is not None:
        corpus = load_corpus(cfg.manifest)
        features = None
        if need_features:
            features = dict(zip(corpus.ids, load_features(corpus, corpus.ids)))
    else:
        assert cfg.synth is not None
        result = synth_corpus(cfg.synth, cfg.seed)
        corpus = result.corpus
        features = result.features if need_features else None
    if cfg.balance:
        corpus = balance_classes(corpus, rng_for(cfg.seed, _BALANCE_STREAM))
        if features is not None:
            features = {uid: features[uid] for uid in corpus.ids}
    plan = make_folds(corpus, cfg.folds, rng_for(cfg.seed, _FOLD_STREAM))
    return corpus, features, plan


def _score_dir(out: Path, system: str) -> Path:
    d = out / "scores" / system
    d.mkdir(parents=True, exist_ok=True)
    return d


@click.group()
@click.version_option(package_name="emofusion")
def main() -> None:
    """Emotion recognition from speech: train, fuse and evaluate."""


@main.command("synth-data")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@_cli_errors
def synth_data(spec_path: str, seed: int, out_dir: str) -> None:
    """Generate a synthetic corpus from a spec JSON file."""
    try:
        doc = json.loads(Path(spec_path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{spec_path}: invalid JSON: {exc}") from exc
    spec = build_synth_spec(doc)
    out = Path(out_dir)
    corpus = write_synth_corpus(spec, seed, out)
    _log(out, f"synth-data seed={seed} utterances={len(corpus)}")
    click.echo(
        f"wrote {len(corpus)} utterances over {len(corpus.speakers)} speakers "
        f"to {out / 'manifest.jsonl'}"
    )


def _write_round_history(out: Path, system: str, round_index: int, doc: dict) -> None:
    hist_dir = out / "history"
    hist_dir.mkdir(parents=True, exist_ok=True)
    path = hist_dir / f"{system}_round{round_index}.json"
    path.write_text(dump_json(doc, indent=2) + "\n", encoding="utf-8")


@main.command("train-text")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--round", "only_rounds", multiple=True, type=int,
              help="Restrict to specific rounds (repeatable).")
@click.option("--select-weight", is_flag=True,
              help="Pick the verification weight per round from the grid.")
@_cli_errors
def train_text(config_path: str, out_dir: str, only_rounds: tuple[int, ...],
               select_weight: bool) -> None:
    """Train the text model for each round and write scores."""
    cfg = load_run_config(config_path)
    corpus, _, plan = _prepare(cfg, need_features=False)
    rounds = list(only_rounds) if only_rounds else cfg.round_list()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "models").mkdir(exist_ok=True)
    _log(out, f"train-text config={config_path} rounds={rounds}")
    for r in rounds:
        selection = None
        if select_weight:
            grid = cfg.weight_grid or DEFAULT_WEIGHT_GRID
            weight, clf, selection = select_verification_weight(
                corpus, plan, r, cfg.text_params, grid=grid, seed=cfg.seed
            )
            probs = clf.predict_proba(corpus.tokens_for(corpus.ids))
            scores = ScoreSet(
                system="mcnn",
                scores={uid: probs[i] for i, uid in enumerate(corpus.ids)},
            )
            history = clf.history_
            click.echo(f"round {r}: selected verification weight {weight}")
        else:
            art = train_text_round(corpus, plan, r, cfg.text_params, cfg.seed)
            clf, scores, history = art.estimator, art.scores, art.history
        write_score_file(_score_dir(out, "mcnn") / f"round{r}.jsonl", scores)
        clf.save(out / "models" / f"mcnn_round{r}.json")
        doc = {"round": r, "history": history}
        if selection is not None:
            doc["weight_selection"] = selection
        _write_round_history(out, "mcnn", r, doc)
        best = max((h.get("val_ua", 0.0) for h in history), default=0.0)
        click.echo(f"round {r}: text model best val UA {best:.4f}")
        _log(out, f"train-text round={r} done")
    click.echo(f"scores under {out / 'scores' / 'mcnn'}")


@main.command("train-acoustic")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--round", "only_rounds", multiple=True, type=int)
@_cli_errors
def train_acoustic(config_path: str, out_dir: str, only_rounds: tuple[int, ...]) -> None:
    """Train the acoustic model for each round and write scores."""
    cfg = load_run_config(config_path)
    corpus, features, plan = _prepare(cfg, need_features=True)
    assert features is not None
    rounds = list(only_rounds) if only_rounds else cfg.round_list()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "models").mkdir(exist_ok=True)
    _log(out, f"train-acoustic config={config_path} rounds={rounds}")
    for r in rounds:
        art = train_acoustic_round(
            corpus, features, plan, r, cfg.acoustic_params, cfg.seed
        )
        write_score_file(_score_dir(out, "lstm") / f"round{r}.jsonl", art.scores)
        art.estimator.save(out / "models" / f"lstm_round{r}.json")
        _write_round_history(out, "lstm", r, {"round": r, "history": art.history})
        best = max((h.get("val_ua", 0.0) for h in art.history), default=0.0)
        click.echo(f"round {r}: acoustic model best val UA {best:.4f}")
        _log(out, f"train-acoustic round={r} done")
    click.echo(f"scores under {out / 'scores' / 'lstm'}")


@main.command("train-evector")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--round", "only_rounds", multiple=True, type=int)
@_cli_errors
def train_evector(config_path: str, out_dir: str, only_rounds: tuple[int, ...]) -> None:
    """Fit the e-vector table for each round and write scores."""
    cfg = load_run_config(config_path)
    corpus, _, plan = _prepare(cfg, need_features=False)
    rounds = list(only_rounds) if only_rounds else cfg.round_list()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "models").mkdir(exist_ok=True)
    _log(out, f"train-evector config={config_path} rounds={rounds}")
    for r in rounds:
        art = train_evector_round(corpus, plan, r, cfg.evector_params, cfg.seed)
        write_score_file(_score_dir(out, "evector") / f"round{r}.jsonl", art.scores)
        save_word_weights(out / "models" / f"evector_round{r}.jsonl", art.estimator.table_)
        click.echo(f"round {r}: e-vector table over {len(art.estimator.table_)} words")
        _log(out, f"train-evector round={r} done")
    click.echo(f"scores under {out / 'scores' / 'evector'}")


def _parse_combinations(raw: str | None, systems: list[str]) -> list[tuple[str, ...]]:
    if raw:
        combos = []
        for part in raw.split(","):
            names = tuple(n.strip() for n in part.split("+") if n.strip())
            if not names:
                raise ConfigError(f"empty combination in {raw!r}")
            combos.append(names)
        return combos
    singles = [(s,) for s in systems]
    if len(systems) > 1:
        singles.append(tuple(systems))
    return singles


@main.command("fuse")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--scores-root", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--combinations", "combos_raw", default=None,
              help='Comma-separated combos, e.g. "mcnn,lstm,mcnn+lstm". '
                   "Defaults to every system alone plus all together.")
@_cli_errors
def fuse(config_path: str, scores_root: str, out_dir: str, combos_raw: str | None) -> None:
    """Fuse per-system scores with a linear SVM and report metrics."""
    cfg = load_run_config(config_path)
    corpus, _, plan = _prepare(cfg, need_features=False)
    rounds = cfg.round_list()
    root = Path(scores_root)
    systems = sorted(d.name for d in root.iterdir() if d.is_dir())
    if not systems:
        raise CoverageError(f"no system score directories under {root}")
    combos = _parse_combinations(combos_raw, systems)
    needed = {name for combo in combos for name in combo}
    system_scores: dict[str, dict[int, ScoreSet]] = {}
    for name in sorted(needed):
        per_round: dict[int, ScoreSet] = {}
        for r in rounds:
            path = root / name / f"round{r}.jsonl"
            if not path.exists():
                raise CoverageError(f"missing score file {path}")
            per_round[r] = read_score_file(path)
        system_scores[name] = per_round

    report = run_fusion_experiment(
        system_scores, corpus, plan, combos, rounds=rounds,
        svm_params=cfg.svm_params, seed=cfg.seed,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = format_results_table(report.rows, report.class_names, show_wa=cfg.show_wa)
    doc = results_to_json(report.rows, report.class_names, show_wa=cfg.show_wa)
    doc["per_round"] = report.per_round
    doc["audits"] = report.audits
    (out / "results.json").write_text(dump_json(doc, indent=2) + "\n", encoding="utf-8")
    (out / "results.txt").write_text(table + "\n", encoding="utf-8")
    _log(out, f"fuse combos={[ '+'.join(c) for c in combos ]}")
    click.echo(table)
    click.echo(f"results in {out / 'results.json'}")


@main.command("sweep-modules")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--max-modules", required=True, type=int)
@click.option("--increment", default=1, show_default=True, type=int)
@_cli_errors
def sweep_modules_cmd(config_path: str, out_dir: str, max_modules: int, increment: int) -> None:
    """Sweep the module count with the verification term off."""
    cfg = load_run_config(config_path)
    corpus, _, plan = _prepare(cfg, need_features=False)
    results = sweep_modules(
        corpus, plan, max_modules, cfg.text_params,
        increment=increment, rounds=cfg.round_list(), seed=cfg.seed,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.json").write_text(dump_json(results, indent=2) + "\n", encoding="utf-8")
    _log(out, f"sweep-modules max={max_modules} increment={increment}")
    for row in results:
        click.echo(
            f"modules {row['n_modules']:2d} sizes {row['kernel_sizes']}: "
            f"UA {row['ua']:.4f} WA {row['wa']:.4f}"
        )
    click.echo(f"sweep table in {out / 'sweep.json'}")


@main.command("evaluate")
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--ids", "ids_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Optional file with one utterance id per line to restrict scoring.")
@click.option("--show-wa/--no-show-wa", default=True, show_default=True)
@_cli_errors
def evaluate(scores_path: str, manifest_path: str, ids_path: str | None, show_wa: bool) -> None:
    """Score a score file against manifest labels (argmax decision)."""
    corpus = load_corpus(manifest_path)
    score_set = read_score_file(scores_path)
    if score_set.dim != corpus.num_classes:
        raise ConfigError(
            f"score dimension {score_set.dim} != {corpus.num_classes} classes; "
            "argmax evaluation needs per-class scores"
        )
    if ids_path is not None:
        ids = [l.strip() for l in Path(ids_path).read_text(encoding="utf-8").splitlines() if l.strip()]
    else:
        ids = list(score_set.scores)
    preds = np.array([int(np.argmax(score_set.vector_for(uid))) for uid in ids])
    labels = corpus.labels_for(ids)
    cm = confusion(labels, preds, corpus.num_classes)
    row = ResultRow(system=score_set.system, cm=cm)
    click.echo(format_results_table([row], corpus.label_names, show_wa=show_wa))


if __name__ == "__main__":
    main()
