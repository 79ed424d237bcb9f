"""Run configuration: one JSON file drives data, folds and every system.

Strict by design: unknown keys anywhere are errors, so typos cannot
silently fall back to defaults. Class counts always come from the
corpus, never from config. Example:

    {
      "seed": 7,
      "data": {"manifest": "data/manifest.jsonl"},
      "folds": 5,
      "balance": false,
      "text": {"preset": "iemocap", "n_epochs": 20},
      "acoustic": {"preset": "iemocap"},
      "evector": {"alpha": 1.0},
      "svm": {"c_reg": 1.0},
      "report": {"show_wa": true}
    }

``data`` holds either a manifest path (relative paths resolve against
the config file) or an inline synthetic-corpus spec under "synth".
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .acoustic import acoustic_preset
from .exceptions import ConfigError, FormatError
from .mcnn import mcnn_preset
from .synth import SynthSpec, synth_preset

__all__ = ["RunConfig", "load_run_config"]

_TOP_KEYS = {"seed", "data", "folds", "rounds", "balance", "text", "acoustic",
             "evector", "svm", "report"}
_TEXT_KEYS = {"preset", "kernel_sizes", "embed_dim", "filters_per_module",
              "verification_weight", "weight_grid", "learning_rate",
              "batch_size", "n_epochs", "early_stop_train_ua"}
_ACOUSTIC_KEYS = {"preset", "lstm_units", "dense_units", "dropout",
                  "learning_rate", "batch_size", "n_epochs",
                  "early_stop_train_ua", "normalize"}
_EVECTOR_KEYS = {"alpha"}
_SVM_KEYS = {"c_reg", "n_epochs"}
_REPORT_KEYS = {"show_wa"}
_DATA_KEYS = {"manifest", "synth"}
_SYNTH_KEYS = {"preset", "num_classes", "utterances_per_class", "num_speakers",
               "vocab_size", "text_signal", "acoustic_signal", "mean_tokens",
               "mean_frames", "feature_dim", "text_groups", "acoustic_groups",
               "label_names"}


def _check_keys(section: Mapping, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(
            f"unknown {where} keys: {sorted(unknown)}; allowed: {sorted(allowed)}"
        )


def _listify(value: Any) -> Any:
    return tuple(value) if isinstance(value, list) else value


def _resolve_section(
    section: Mapping | None,
    allowed: set[str],
    where: str,
    preset_fn=None,
) -> dict:
    """Merge a preset (if named) with explicit overrides."""
    section = dict(section or {})
    _check_keys(section, allowed, where)
    params: dict = {}
    preset_name = section.pop("preset", None)
    if preset_name is not None:
        if preset_fn is None:
            raise ConfigError(f"{where} does not support presets")
        params.update(preset_fn(str(preset_name)))
        # Class counts come from the corpus, never from a preset.
        params.pop("num_classes", None)
    params.update(section)
    for key in ("kernel_sizes", "lstm_units", "weight_grid"):
        if key in params:
            params[key] = _listify(params[key])
    return params


def build_synth_spec(section: Mapping) -> SynthSpec:
    """SynthSpec from a config mapping, honoring an optional preset."""
    section = dict(section)
    _check_keys(section, _SYNTH_KEYS, "data.synth")
    args: dict = {}
    preset_name = section.pop("preset", None)
    if preset_name is not None:
        args.update(synth_preset(str(preset_name)))
    args.update(section)
    for key in ("utterances_per_class", "text_groups", "acoustic_groups", "label_names"):
        if key in args:
            args[key] = _listify(args[key])
    return SynthSpec(**args)


@dataclass
class RunConfig:
    """Validated, preset-resolved configuration for one experiment."""

    seed: int
    manifest: Path | None
    synth: SynthSpec | None
    folds: int
    rounds: tuple[int, ...] | None
    balance: bool
    text_params: dict
    weight_grid: tuple[float, ...] | None
    acoustic_params: dict
    evector_params: dict
    svm_params: dict
    show_wa: bool

    @classmethod
    def from_dict(cls, doc: Mapping, base_dir: Path | None = None) -> "RunConfig":
        if not isinstance(doc, Mapping):
            raise ConfigError("run config must be a JSON object")
        _check_keys(doc, _TOP_KEYS, "top-level")
        if "data" not in doc or not isinstance(doc["data"], Mapping):
            raise ConfigError('run config needs a "data" object')
        data = dict(doc["data"])
        _check_keys(data, _DATA_KEYS, "data")
        manifest: Path | None = None
        synth: SynthSpec | None = None
        if ("manifest" in data) == ("synth" in data):
            raise ConfigError('data must hold exactly one of "manifest" or "synth"')
        if "manifest" in data:
            manifest = Path(str(data["manifest"]))
            if base_dir is not None and not manifest.is_absolute():
                manifest = base_dir / manifest
        else:
            synth = build_synth_spec(data["synth"])

        seed = int(doc.get("seed", 0))
        folds = int(doc.get("folds", 5))
        if folds < 3:
            raise ConfigError(f"folds must be >= 3, got {folds}")
        rounds = doc.get("rounds")
        if rounds is not None:
            rounds = tuple(int(r) for r in rounds)
            if any(not 0 <= r < folds for r in rounds):
                raise ConfigError(f"rounds {rounds} out of range for {folds} folds")
            if len(set(rounds)) != len(rounds):
                raise ConfigError(f"duplicate rounds: {rounds}")

        text_params = _resolve_section(doc.get("text"), _TEXT_KEYS, "text", mcnn_preset)
        weight_grid = text_params.pop("weight_grid", None)
        if weight_grid is not None:
            weight_grid = tuple(float(w) for w in weight_grid)
            if not weight_grid or any(w < 0 for w in weight_grid):
                raise ConfigError(f"weight_grid must hold non-negative weights, got {weight_grid}")
        acoustic_params = _resolve_section(
            doc.get("acoustic"), _ACOUSTIC_KEYS, "acoustic", acoustic_preset
        )
        evector_params = _resolve_section(doc.get("evector"), _EVECTOR_KEYS, "evector")
        svm_params = _resolve_section(doc.get("svm"), _SVM_KEYS, "svm")
        report = dict(doc.get("report") or {})
        _check_keys(report, _REPORT_KEYS, "report")

        return cls(
            seed=seed,
            manifest=manifest,
            synth=synth,
            folds=folds,
            rounds=rounds,
            balance=bool(doc.get("balance", False)),
            text_params=text_params,
            weight_grid=weight_grid,
            acoustic_params=acoustic_params,
            evector_params=evector_params,
            svm_params=svm_params,
            show_wa=bool(report.get("show_wa", True)),
        )

    def round_list(self) -> list[int]:
        return list(self.rounds) if self.rounds is not None else list(range(self.folds))


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    return RunConfig.from_dict(doc, base_dir=path.parent)
