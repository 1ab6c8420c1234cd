"""Experiment orchestration: condition x pattern x communication type x trials.

An experiment is described by one JSON document (see :data:`PRESETS` for
the defaults it is merged onto). Every trial owns a seed derived from the
experiment seed and its index, so results do not depend on scheduling and
re-running a configuration reproduces its outputs byte for byte.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .crossmodal import cross_modal_predictions, default_totals
from .distributions import make_rng, trial_seed
from .inference import TRACE_FIELDS, run
from .metrics import cosine, jsd, kappa_band, summarize, welch_t_test
from .model import CommunicationType, GameState, ModelConfig
from .synthdata import (
    Dataset,
    DatasetFormatError,
    all_conditions,
    apply_condition,
    condition_spec,
    generate_synthetic,
    load_histogram_dataset,
)

CSV_HEADER = ("condition", "pattern", "comm_type", "ari_a_mean", "ari_a_sd", "ari_a_p",
              "ari_b_mean", "ari_b_sd", "ari_b_p", "kappa_mean", "ari_w_mean")
CROSSMODAL_TYPES = ("proposed", "all_accept", "all_reject")
DIAGNOSTIC_WINDOW = 50
BUNDLE_FORMAT = "intermdm-results/1"
CROSSMODAL_FORMAT = "intermdm-crossmodal/1"

_ALL_TYPES = [t.value for t in CommunicationType]
_MODEL_KEYS = {"K", "L", "alpha", "beta", "gamma", "iterations"}
_SYNTH_KEYS = {"source", "num_objects", "per_object", "V", "total", "concentration",
               "min_jsd", "floor", "block_size", "design", "seed"}

PRESETS = {
    "synthetic": {
        "model": {"K": 15, "L": 15, "alpha": 0.01, "beta": 0.001, "iterations": 200},
        "trials": 10,
        "data": {"source": "synthetic", "num_objects": 15, "per_object": 10, "V": 20},
    },
    "real": {
        "model": {"K": 40, "L": 40, "alpha": 0.01, "beta": 0.001, "iterations": 300},
        "trials": 10,
        "data": {"source": "file"},
    },
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class TrialError(RuntimeError):
    """A trial failed; the whole cell is aborted."""


@dataclass
class ExperimentConfig:
    preset: str = "synthetic"
    seed: int = 0
    trials: int = 10
    model: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    conditions: list = field(default_factory=list)
    communication_types: list = field(default_factory=list)
    crossmodal: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "seed": self.seed,
            "trials": self.trials,
            "model": copy.deepcopy(self.model),
            "data": copy.deepcopy(self.data),
            "conditions": [list(c) for c in self.conditions],
            "communication_types": list(self.communication_types),
            "crossmodal": copy.deepcopy(self.crossmodal),
        }

    def model_config(self, comm_type, seed: int) -> ModelConfig:
        return ModelConfig(communication_type=comm_type, seed=seed, **self.model)


def _merge(base: dict, override: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _parse_conditions(raw) -> list:
    if raw in (None, "all"):
        return [[s.condition, s.pattern] for s in all_conditions()]
    if not isinstance(raw, list) or not raw:
        raise ConfigError("conditions: expected 'all' or a non-empty list of [condition, pattern]")
    out = []
    for i, item in enumerate(raw):
        if isinstance(item, (int, str)):
            item = [item, "-"]
        if not isinstance(item, list) or len(item) != 2:
            raise ConfigError(f"conditions[{i}]: expected [condition, pattern], got {item!r}")
        try:
            spec = condition_spec(int(item[0]), item[1])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"conditions[{i}]: {exc}") from exc
        out.append([spec.condition, spec.pattern])
    return out


def _parse_types(raw, where: str, default) -> list:
    if raw is None:
        return list(default)
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{where}: expected a non-empty list")
    try:
        return [CommunicationType.parse(t).value for t in raw]
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def build_config(doc: Mapping | None = None, *, base_dir: Path | None = None,
                 **overrides) -> ExperimentConfig:
    """Validate ``doc`` merged onto its preset; keyword overrides win.

    Accepted overrides: ``seed``, ``trials``, ``iterations``. A results
    bundle may be passed as ``doc``; its embedded configuration is used.
    """
    doc = dict(doc or {})
    if doc.get("format") in (BUNDLE_FORMAT, CROSSMODAL_FORMAT):
        doc = dict(doc["config"])
    known = {"preset", "seed", "trials", "model", "data", "conditions",
             "communication_types", "crossmodal"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    preset = doc.get("preset", "synthetic")
    if preset not in PRESETS:
        raise ConfigError(f"preset: expected one of {sorted(PRESETS)}, got {preset!r}")
    base = copy.deepcopy(PRESETS[preset])
    user_data = doc.get("data")
    if isinstance(user_data, Mapping) and user_data.get("source", base["data"]["source"]) \
            != base["data"]["source"]:
        base["data"] = {}
    merged = _merge(base, {k: v for k, v in doc.items() if k != "preset"})
    if not isinstance(merged.get("model"), dict) or not isinstance(merged.get("data"), dict):
        raise ConfigError("model and data must be JSON objects")
    if overrides.get("seed") is not None:
        merged["seed"] = overrides["seed"]
    if overrides.get("trials") is not None:
        merged["trials"] = overrides["trials"]
    if overrides.get("iterations") is not None:
        merged["model"]["iterations"] = overrides["iterations"]

    seed = merged.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed: expected an unsigned 64-bit integer, got {seed!r}")
    trials = merged.get("trials")
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
        raise ConfigError(f"trials: expected a positive integer, got {trials!r}")

    model = merged["model"]
    bad = set(model) - _MODEL_KEYS
    if bad:
        raise ConfigError(f"model: unknown fields {sorted(bad)}")
    try:
        ModelConfig(**model)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"model: {exc}") from exc
    if model.get("iterations", 1) < 1:
        raise ConfigError("model.iterations: experiments need at least one iteration")

    data = merged["data"]
    source = data.get("source")
    if source == "synthetic":
        bad = set(data) - _SYNTH_KEYS
        if bad:
            raise ConfigError(f"data: unknown synthetic generator fields {sorted(bad)}")
    elif source == "file":
        if not data.get("path"):
            raise ConfigError("data.path: required when data.source is 'file'")
        bad = set(data) - {"source", "path"}
        if bad:
            raise ConfigError(f"data: unknown fields {sorted(bad)}")
        path = Path(data["path"])
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        data["path"] = str(path.resolve())
    else:
        raise ConfigError(f"data.source: expected 'synthetic' or 'file', got {source!r}")

    cm = merged.get("crossmodal") or {}
    bad = set(cm) - {"condition", "communication_types", "trials", "prior"}
    if bad:
        raise ConfigError(f"crossmodal: unknown fields {sorted(bad)}")
    cm_cond = _parse_conditions([cm.get("condition", [1, "-"])])[0]
    cm_types = _parse_types(cm.get("communication_types"), "crossmodal.communication_types",
                            CROSSMODAL_TYPES)
    cm_trials = cm.get("trials", trials)
    if not isinstance(cm_trials, int) or cm_trials < 1:
        raise ConfigError(f"crossmodal.trials: expected a positive integer, got {cm_trials!r}")
    prior = cm.get("prior", "marginal")
    if prior not in ("marginal", "uniform"):
        raise ConfigError(f"crossmodal.prior: expected 'marginal' or 'uniform', got {prior!r}")

    return ExperimentConfig(
        preset=preset,
        seed=seed,
        trials=trials,
        model=model,
        data=data,
        conditions=_parse_conditions(merged.get("conditions")),
        communication_types=_parse_types(merged.get("communication_types"),
                                         "communication_types", _ALL_TYPES),
        crossmodal={"condition": cm_cond, "communication_types": cm_types,
                    "trials": cm_trials, "prior": prior},
    )


def load_config(path, **overrides) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return build_config(doc, base_dir=path.parent, **overrides)


def load_dataset(config: ExperimentConfig) -> Dataset:
    data = dict(config.data)
    if data.pop("source") == "file":
        try:
            return load_histogram_dataset(data["path"])
        except OSError as exc:
            raise ConfigError(f"data.path: cannot read {data['path']} ({exc.strerror})") from exc
        except DatasetFormatError as exc:
            raise ConfigError(f"data.path: {exc}") from exc
    data.setdefault("seed", config.seed)
    try:
        return generate_synthetic(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"data: {exc}") from exc


# ---------------------------------------------------------------- trials

def _run_trial(task):
    key, model_config, obs_a, obs_b, labels = task
    try:
        result = run(model_config, obs_a, obs_b, labels)
    except Exception as exc:  # re-raised with the cell named
        return key, None, f"{type(exc).__name__}: {exc}"
    return key, result.trace, None


def _execute(tasks, parallel: int, worker=None):
    worker = worker or _run_trial
    if parallel > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(worker, tasks))
    else:
        results = [worker(t) for t in tasks]
    return sorted(results, key=lambda r: r[0])


def _window_max(trace: list, name: str) -> float:
    vals = [r[name] for r in trace[-DIAGNOSTIC_WINDOW:]]
    vals = [v for v in vals if not math.isnan(v)]
    return max(vals) if vals else math.nan


def _columns(trace: list) -> dict:
    return {name: [r[name] for r in trace] for name in TRACE_FIELDS}


@dataclass
class Cell:
    condition: int
    pattern: str
    comm_type: str
    seeds: list
    finals: list
    traces: list

    def values(self, name: str) -> list:
        return [f[name] for f in self.finals]


def run_experiment(config: ExperimentConfig, parallel: int = 1,
                   dataset: Dataset | None = None) -> dict:
    """Run every requested cell and return the results bundle (a JSON-able dict)."""
    if dataset is None:
        dataset = load_dataset(config)
    tasks = []
    for ci, (cond, pattern) in enumerate(config.conditions):
        try:
            masked = apply_condition(dataset, condition_spec(cond, pattern))
        except ValueError as exc:
            raise ConfigError(f"conditions: {exc}") from exc
        for ti, ct in enumerate(config.communication_types):
            for t in range(config.trials):
                seed = trial_seed(config.seed, t)
                tasks.append(((ci, ti, t), config.model_config(ct, seed),
                              masked.observations_a, masked.observations_b, dataset.true_labels))

    results = _execute(tasks, parallel)
    cells = {}
    for (ci, ti, t), trace, err in results:
        cond, pattern = config.conditions[ci]
        ct = config.communication_types[ti]
        if err is not None:
            raise TrialError(f"cell condition={cond} pattern={pattern} comm_type={ct}: "
                             f"trial {t} (seed {trial_seed(config.seed, t)}) failed: {err}")
        cell = cells.setdefault((ci, ti), Cell(cond, pattern, ct, [], [], []))
        cell.seeds.append(trial_seed(config.seed, t))
        final = dict(trace[-1])
        for name in ("ari_a", "ari_b", "ari_w", "kappa"):
            final[f"{name}_max_last{DIAGNOSTIC_WINDOW}"] = _window_max(trace, name)
        cell.finals.append(final)
        cell.traces.append(trace)

    ordered = [cells[k] for k in sorted(cells)]
    return {
        "format": BUNDLE_FORMAT,
        "config": config.to_dict(),
        "dataset": {"D": dataset.D, "modalities": dataset.modalities, "V": dataset.V,
                    "meta": dataset.meta},
        "cells": [_cell_summary(c, ordered) for c in ordered],
        "traces": [
            {"condition": c.condition, "pattern": c.pattern, "comm_type": c.comm_type,
             "trial": t, "seed": c.seeds[t], **_columns(trace)}
            for c in ordered for t, trace in enumerate(c.traces)
        ],
    }


def _stat(values: list) -> dict | None:
    if any(math.isnan(v) for v in values):
        return None
    s = summarize(values)
    return {"mean": s.mean, "sd": s.sd}


def _cell_summary(cell: Cell, cells: list) -> dict:
    ref = next((c for c in cells if c.condition == cell.condition and c.pattern == cell.pattern
                and c.comm_type == CommunicationType.PROPOSED.value), None)
    tests = {}
    if ref is not None and ref is not cell and len(cell.finals) > 1 and len(ref.finals) > 1:
        for name in ("ari_a", "ari_b"):
            res = welch_t_test(ref.values(name), cell.values(name))
            tests[name] = {"t": res.statistic, "p": res.pvalue, "band": res.band}
    diag = {}
    for name in ("ari_a", "ari_b", "ari_w", "kappa"):
        key = f"{name}_max_last{DIAGNOSTIC_WINDOW}"
        diag[key] = _stat(cell.values(key))
    return {
        "condition": cell.condition,
        "pattern": cell.pattern,
        "comm_type": cell.comm_type,
        "trials": [{"trial": t, "seed": s, **f} for t, (s, f) in enumerate(zip(cell.seeds, cell.finals))],
        "summary": {name: _stat(cell.values(name)) for name in ("ari_a", "ari_b", "ari_w", "kappa")},
        "tests_vs_proposed": tests,
        "diagnostics": diag,
    }


# ---------------------------------------------------------------- output

def _fmt(x, spec: str = ".4f") -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "n/a"
    return format(x, spec)


def results_rows(bundle: Mapping) -> list:
    rows = []
    for cell in bundle["cells"]:
        s, tests = cell["summary"], cell["tests_vs_proposed"]
        row = [str(cell["condition"]), cell["pattern"], cell["comm_type"]]
        for name in ("ari_a", "ari_b"):
            st = s[name]
            row += [_fmt(st and st["mean"]), _fmt(st and st["sd"]),
                    _fmt(tests[name]["p"], ".3e") if name in tests else "n/a"]
        row += [_fmt(s["kappa"] and s["kappa"]["mean"]), _fmt(s["ari_w"] and s["ari_w"]["mean"])]
        rows.append(row)
    return rows


def results_csv(bundle: Mapping) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(results_rows(bundle))
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return _json_safe(float(obj))
    return obj


def dumps(obj) -> str:
    return json.dumps(_json_safe(obj), indent=1, allow_nan=False) + "\n"


def trace_records(bundle: Mapping):
    for tr in bundle["traces"]:
        head = {k: tr[k] for k in ("condition", "pattern", "comm_type", "trial", "seed")}
        for i in range(len(tr["iteration"])):
            yield {**head, **{name: tr[name][i] for name in TRACE_FIELDS}}


def traces_jsonl(bundle: Mapping) -> str:
    return "".join(json.dumps(_json_safe(r), allow_nan=False) + "\n" for r in trace_records(bundle))


def traces_csv(bundle: Mapping) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    head = ("condition", "pattern", "comm_type", "trial", "seed")
    writer.writerow(head + TRACE_FIELDS)
    for r in trace_records(bundle):
        writer.writerow([r[k] for k in head] + [r["iteration"]]
                        + [_fmt(r[k], ".6f") for k in TRACE_FIELDS[1:]])
    return buf.getvalue()


def write_results(bundle: Mapping, out_dir, trace_format: str | None = None) -> list:
    """Write ``results.csv``, ``bundle.json`` and traces; return the written paths.

    ``trace_format`` is ``"csv"``, ``"json"`` (JSON lines) or ``None`` for both.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"results.csv": results_csv(bundle), "bundle.json": dumps(bundle)}
    if trace_format in (None, "csv"):
        files["traces.csv"] = traces_csv(bundle)
    if trace_format in (None, "json"):
        files["traces.jsonl"] = traces_jsonl(bundle)
    paths = []
    for name, text in files.items():
        (out / name).write_text(text)
        paths.append(out / name)
    return paths


def format_table(bundle: Mapping) -> str:
    """Human-readable table with significance and agreement bands."""
    lines = [f"{'cond':<5}{'pat':<5}{'comm_type':<18}{'ARI(A)':>22}{'ARI(B)':>22}"
             f"{'kappa':>24}{'ARI(W)':>9}"]
    for cell in bundle["cells"]:
        s, tests = cell["summary"], cell["tests_vs_proposed"]
        parts = []
        for name in ("ari_a", "ari_b"):
            st = s[name]
            band = tests[name]["band"] if name in tests else ""
            parts.append(f"{_fmt(st['mean'], '.2f')} +/- {_fmt(st['sd'], '.2f')} {band:<4}"
                         if st else "n/a")
        k = s["kappa"]
        kappa_txt = f"{k['mean']:.2f} ({kappa_band(k['mean'])})" if k else "n/a"
        w = s["ari_w"]
        lines.append(f"{cell['condition']!s:<5}{cell['pattern']:<5}{cell['comm_type']:<18}"
                     f"{parts[0]:>22}{parts[1]:>22}{kappa_txt:>24}"
                     f"{_fmt(w and w['mean'], '.2f'):>9}")
    return "\n".join(lines) + "\n"


def summarize_bundle(bundle: Mapping) -> dict:
    if bundle.get("format") == CROSSMODAL_FORMAT:
        return {"format": CROSSMODAL_FORMAT, "rows": bundle["rows"]}
    return {
        "format": BUNDLE_FORMAT,
        "seed": bundle["config"]["seed"],
        "trials": bundle["config"]["trials"],
        "cells": [{k: c[k] for k in ("condition", "pattern", "comm_type", "summary",
                                     "tests_vs_proposed")} for c in bundle["cells"]],
    }


# ---------------------------------------------------------------- cross-modal

def crossmodal_scores(records, obs_a: Mapping) -> dict:
    """Mean cosine and JSD per modality between A's data and B's predictions."""
    out = {}
    mods = [m for m in obs_a if any(m in r.predicted for r in records)]
    for m in mods:
        cos, div = [], []
        for r in records:
            if m not in r.predicted:
                continue
            o, h = obs_a[m][r.d], r.predicted[m]
            cos.append(cosine(o, h))
            div.append(jsd(o, h))
        out[m] = {"cos": float(np.mean(cos)), "jsd": float(np.mean(div))}
    return out


def evaluate_crossmodal_state(state: GameState, obs_a: Mapping, obs_b: Mapping, gamma,
                              seed: int, prior: str = "marginal"):
    """Per-datum predictions and per-modality scores for one trained state."""
    rng = make_rng(seed)
    totals = default_totals(obs_a)
    records = cross_modal_predictions(state.agent_a, state.agent_b, obs_a, gamma, rng,
                                      totals=totals, candidates=obs_b, prior=prior)
    return records, crossmodal_scores(records, obs_a)


def _crossmodal_trial(task):
    key, model_config, obs_a, obs_b, labels, gamma, prior = task
    try:
        result = run(model_config, obs_a, obs_b, labels)
        records, scores = evaluate_crossmodal_state(result.state, obs_a, obs_b, gamma,
                                                    model_config.seed, prior)
    except (ValueError, FloatingPointError) as exc:
        return key, None, f"{type(exc).__name__}: {exc}"
    state = result.state.to_dict() if key[1] == 0 else None
    return key, (scores, [r.to_json() for r in records], state), None


def run_crossmodal_eval(config: ExperimentConfig, dataset: Dataset | None = None,
                        state: GameState | None = None, parallel: int = 1) -> dict:
    """Train each configured communication type and score B's predictions of A's data.

    With ``state`` given, that trained state is scored instead of training.
    """
    if dataset is None:
        dataset = load_dataset(config)
    cm = config.crossmodal
    masked = apply_condition(dataset, condition_spec(*cm["condition"]))
    obs_a, obs_b = masked.observations_a, masked.observations_b
    gamma = config.model_config(CommunicationType.PROPOSED, 0).gamma_vector()
    rows, predictions, states = [], [], {}
    if state is not None:
        records, scores = evaluate_crossmodal_state(state, obs_a, obs_b, gamma,
                                                    config.seed, cm["prior"])
        rows.append({"comm_type": "state", "trials": 1, "scores": scores})
        predictions.append({"comm_type": "state", "trial": 0,
                            "records": [r.to_json() for r in records]})
    else:
        types = cm["communication_types"]
        tasks = [((ti, t), config.model_config(ct, trial_seed(config.seed, t)), obs_a, obs_b,
                  dataset.true_labels, gamma, cm["prior"])
                 for ti, ct in enumerate(types) for t in range(cm["trials"])]
        per_type = {ct: [] for ct in types}
        for (ti, t), out, err in _execute(tasks, parallel, _crossmodal_trial):
            ct = types[ti]
            if err is not None:
                raise TrialError(f"crossmodal comm_type={ct}: trial {t} "
                                 f"(seed {trial_seed(config.seed, t)}) failed: {err}")
            scores, records, st = out
            per_type[ct].append(scores)
            if st is not None:
                states[ct] = st
            predictions.append({"comm_type": ct, "trial": t, "records": records})
        for ct, per_trial in per_type.items():
            mods = list(per_trial[0])
            avg = {m: {k: float(np.mean([s[m][k] for s in per_trial])) for k in ("cos", "jsd")}
                   for m in mods}
            rows.append({"comm_type": ct, "trials": cm["trials"], "scores": avg})
    return {"format": CROSSMODAL_FORMAT, "config": config.to_dict(), "rows": rows,
            "predictions": predictions, "states": states}


def crossmodal_csv(report: Mapping) -> str:
    mods = list(report["rows"][0]["scores"]) if report["rows"] else []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["comm_type"] + [f"{m}_{k}" for m in mods for k in ("cos", "jsd")])
    for row in report["rows"]:
        writer.writerow([row["comm_type"]] + [format(row["scores"][m][k], ".4f")
                                              for m in mods for k in ("cos", "jsd")])
    return buf.getvalue()


def write_crossmodal(report: Mapping, out_dir, fmt: str | None = None) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"crossmodal.csv": crossmodal_csv(report),
             "crossmodal.json": dumps({k: v for k, v in report.items()
                                       if k not in ("predictions", "states")})}
    for ct, st in report.get("states", {}).items():
        files[f"state_{ct}.json"] = dumps(st)
    if fmt in (None, "json"):
        lines = []
        for p in report["predictions"]:
            for rec in p["records"]:
                lines.append(json.dumps({"comm_type": p["comm_type"], "trial": p["trial"], **rec}))
        files["predictions.jsonl"] = "".join(line + "\n" for line in lines)
    if fmt in (None, "csv") and report["predictions"]:
        mods = list(report["predictions"][0]["records"][0]["predicted"])
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["comm_type", "trial", "d", "category_a", "sign", "category_b"]
                        + [f"{m}_{k}" for m in mods for k in ("nearest", "jsd")])
        for p in report["predictions"]:
            for rec in p["records"]:
                writer.writerow([p["comm_type"], p["trial"], rec["d"], rec["category_a"],
                                 rec["sign"], rec["category_b"]]
                                + [v for m in mods for v in (rec["nearest"].get(m, ""),
                                                             _fmt(rec["jsd"].get(m), ".6f"))])
        files["predictions.csv"] = buf.getvalue()
    paths = []
    for name, text in files.items():
        (out / name).write_text(text)
        paths.append(out / name)
    return paths

