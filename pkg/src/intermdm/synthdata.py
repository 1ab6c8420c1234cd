"""Synthetic multimodal histogram datasets, modality-lack conditions, and the
dataset JSON format.

Generator
---------
Each modality has a set of *prototype* emission distributions (sparse
Dirichlet draws, kept only if every pair is at least ``min_jsd`` apart).
Objects are grouped into prototypes per modality by :func:`prototype_index`.
With block size ``s`` each prototype is shared by ``s`` objects, so a single
modality cannot tell them apart, while the default ``"affine"`` grouping
makes any two objects share a prototype in at most one modality: all
modalities together identify every object. ``block_size=1`` gives every
object its own distribution in every modality. Prototype entries below
``floor`` are set to zero so that no datum carries stray counts in
near-empty bins.

Per datum and per agent, one histogram of ``total`` counts is drawn from the
object's prototype, so the two agents see the same objects up to sampling
noise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .distributions import make_rng, sample_dirichlet
from .metrics import jsd
from .model import MODALITIES

CONDITIONS = {
    (1, "-"): (("vision", "sound", "haptic"), ("vision", "sound", "haptic")),
    (2, "I"): (("vision", "sound", "haptic"), ("vision", "sound")),
    (2, "II"): (("vision", "sound", "haptic"), ("sound", "haptic")),
    (2, "III"): (("vision", "sound", "haptic"), ("vision", "haptic")),
    (3, "I"): (("vision", "sound", "haptic"), ("vision",)),
    (3, "II"): (("vision", "sound", "haptic"), ("sound",)),
    (3, "III"): (("vision", "sound", "haptic"), ("haptic",)),
    (4, "I"): (("vision", "sound"), ("haptic",)),
    (4, "II"): (("sound", "haptic"), ("vision",)),
    (4, "III"): (("vision", "haptic"), ("sound",)),
}


@dataclass
class Dataset:
    observations_a: dict        # modality -> (D, V) int64
    observations_b: dict
    true_labels: np.ndarray     # (D,)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.observations_a = {m: np.asarray(x, dtype=np.int64) for m, x in self.observations_a.items()}
        self.observations_b = {m: np.asarray(x, dtype=np.int64) for m, x in self.observations_b.items()}
        self.true_labels = np.asarray(self.true_labels, dtype=np.int64)

    @property
    def D(self) -> int:
        return int(self.true_labels.shape[0])

    @property
    def modalities(self) -> list:
        seen = list(self.observations_a) + [m for m in self.observations_b if m not in self.observations_a]
        return _ordered(seen)

    @property
    def V(self) -> dict:
        out = {}
        for obs in (self.observations_a, self.observations_b):
            for m, x in obs.items():
                out[m] = int(x.shape[1])
        return {m: out[m] for m in self.modalities}

    def equals(self, other: "Dataset") -> bool:
        def same(x, y):
            return set(x) == set(y) and all(np.array_equal(x[m], y[m]) for m in x)
        return (same(self.observations_a, other.observations_a)
                and same(self.observations_b, other.observations_b)
                and np.array_equal(self.true_labels, other.true_labels)
                and self.meta == other.meta)

    def to_dict(self) -> dict:
        def per_datum(obs):
            return [{m: obs[m][d].tolist() for m in _ordered(obs)} for d in range(self.D)]
        return {
            "modalities": self.modalities,
            "V": self.V,
            "D": self.D,
            "observations_a": per_datum(self.observations_a),
            "observations_b": per_datum(self.observations_b),
            "true_labels": self.true_labels.tolist(),
            "meta": self.meta,
        }


@dataclass(frozen=True)
class ConditionSpec:
    condition: int
    pattern: str
    modalities_a: tuple
    modalities_b: tuple

    @property
    def label(self) -> str:
        return f"{self.condition}{'' if self.pattern == '-' else '-' + self.pattern}"


def condition_spec(condition: int, pattern: str = "-") -> ConditionSpec:
    """Look up one row of the modality-lack table (condition 1 has pattern ``'-'``)."""
    pattern = str(pattern).upper() if str(pattern) != "-" else "-"
    if int(condition) == 1:
        pattern = "-"
    key = (int(condition), pattern)
    if key not in CONDITIONS:
        raise ValueError(f"unknown condition/pattern {condition}/{pattern}")
    mod_a, mod_b = CONDITIONS[key]
    return ConditionSpec(key[0], key[1], mod_a, mod_b)


def all_conditions() -> list:
    return [condition_spec(c, p) for c, p in CONDITIONS]


def apply_condition(dataset: Dataset, spec: ConditionSpec) -> Dataset:
    """Keep only the modalities each agent has under ``spec``."""
    obs_a = {m: x for m, x in dataset.observations_a.items() if m in spec.modalities_a}
    obs_b = {m: x for m, x in dataset.observations_b.items() if m in spec.modalities_b}
    for name, obs in (("A", obs_a), ("B", obs_b)):
        if not obs:
            raise ValueError(f"condition {spec.label} leaves agent {name} with no modality")
    return Dataset(obs_a, obs_b, dataset.true_labels.copy(), dict(dataset.meta))


def prototype_index(num_objects: int, block_size: int, modality_index: int,
                    design: str = "affine") -> np.ndarray:
    """Prototype used by each object in one modality.

    ``"shifted"``: cyclic blocks, ``((o + m) mod N) // s``. Neighbouring
    objects share prototypes in up to ``s - 1`` modalities.

    ``"affine"``: write ``o = a * s + b`` and use ``(a - m * b) mod (N / s)``.
    When ``N / s`` is prime and at least ``s``, two objects share a prototype
    in at most one modality. Falls back to ``"shifted"`` when ``s`` does not
    divide ``N``.
    """
    objects = np.arange(num_objects)
    if design == "affine" and num_objects % block_size == 0:
        a, b = np.divmod(objects, block_size)
        return (a - modality_index * b) % (num_objects // block_size)
    if design not in ("affine", "shifted"):
        raise ValueError(f"unknown design {design!r}")
    return ((objects + modality_index) % num_objects) // block_size


def _draw_prototypes(n: int, V: int, concentration: float, min_jsd: float, floor: float,
                     rng, max_tries: int = 10000) -> np.ndarray:
    protos = []
    tries = 0
    while len(protos) < n:
        tries += 1
        if tries > max_tries:
            raise RuntimeError(
                f"could not draw {n} prototypes with pairwise JSD >= {min_jsd}; "
                "lower min_jsd or the concentration")
        p = sample_dirichlet(np.full(V, concentration), rng)
        # entries below the floor would only produce rare outlier counts
        p = np.where(p < floor, 0.0, p)
        p /= p.sum()
        if all(jsd(p, q) >= min_jsd for q in protos):
            protos.append(p)
    return np.array(protos)


def generate_synthetic(num_objects: int = 15, per_object: int = 10, V: int | Mapping = 20,
                       total: int | Mapping = 40, rng: np.random.Generator | None = None,
                       *, modalities=MODALITIES, concentration: float = 0.1,
                       min_jsd: float = 0.2, floor: float = 0.03, block_size: int | None = None,
                       design: str = "affine", seed: int | None = None) -> Dataset:
    """Generate the paired-agent histogram dataset.

    Labels are ``per_object`` copies of each object id, in object order.
    ``V`` and ``total`` are either one value for all modalities or a
    per-modality mapping. ``block_size`` defaults to the number of modalities.
    """
    if num_objects < 1 or per_object < 1:
        raise ValueError("num_objects and per_object must be positive")
    modalities = tuple(modalities)
    if not modalities:
        raise ValueError("at least one modality is required")
    Vs = {m: int(V[m] if isinstance(V, Mapping) else V) for m in modalities}
    totals = {m: int(total[m] if isinstance(total, Mapping) else total) for m in modalities}
    if any(v < 1 for v in Vs.values()):
        raise ValueError("V must be positive")
    if any(t < 1 for t in totals.values()):
        raise ValueError("histogram totals must be positive")
    if block_size is None:
        block_size = len(modalities)
    block_size = max(1, min(int(block_size), num_objects))
    if rng is None:
        rng = make_rng(seed)

    labels = np.repeat(np.arange(num_objects), per_object)
    obs_a, obs_b = {}, {}
    truth = {}
    for mi, m in enumerate(modalities):
        proto_of = prototype_index(num_objects, block_size, mi, design)
        protos = _draw_prototypes(int(proto_of.max()) + 1, Vs[m], concentration, min_jsd,
                                  floor, rng)
        truth[m] = {"prototype_of": proto_of.tolist(), "prototypes": protos.tolist()}
        probs = protos[proto_of[labels]]
        obs_a[m] = np.stack([rng.multinomial(totals[m], p) for p in probs])
        obs_b[m] = np.stack([rng.multinomial(totals[m], p) for p in probs])

    meta = {
        "generator": "synthetic",
        "num_objects": int(num_objects),
        "per_object": int(per_object),
        "V": Vs,
        "total": totals,
        "concentration": float(concentration),
        "min_jsd": float(min_jsd),
        "floor": float(floor),
        "block_size": int(block_size),
        "design": design,
        "seed": None if seed is None else int(seed),
        "ground_truth": truth,
    }
    return Dataset(obs_a, obs_b, labels, meta)


def save_dataset(dataset: Dataset, path) -> None:
    Path(path).write_text(json.dumps(dataset.to_dict(), indent=1) + "\n")


class DatasetFormatError(ValueError):
    """Raised for a dataset file that violates the schema; the message names the location."""


def dataset_from_dict(doc) -> Dataset:
    if not isinstance(doc, Mapping):
        raise DatasetFormatError("top level: expected an object")
    for key in ("observations_a", "observations_b", "true_labels"):
        if key not in doc:
            raise DatasetFormatError(f"top level: missing field {key!r}")
    labels = doc["true_labels"]
    if not isinstance(labels, list) or not labels:
        raise DatasetFormatError("true_labels: expected a non-empty list")
    for i, lab in enumerate(labels):
        if not isinstance(lab, int) or isinstance(lab, bool) or lab < 0:
            raise DatasetFormatError(f"true_labels[{i}]: expected a non-negative integer, got {lab!r}")
    D = len(labels)
    if "D" in doc and doc["D"] != D:
        raise DatasetFormatError(f"D: declared {doc['D']} but true_labels has {D} entries")
    declared_V = doc.get("V") or {}

    def parse_agent(key):
        rows = doc[key]
        if not isinstance(rows, list):
            raise DatasetFormatError(f"{key}: expected a list of per-datum objects")
        if len(rows) != D:
            raise DatasetFormatError(f"{key}: has {len(rows)} data but true_labels has {D}")
        if not rows:
            raise DatasetFormatError(f"{key}: empty")
        if not isinstance(rows[0], Mapping) or not rows[0]:
            raise DatasetFormatError(f"{key}[0]: expected a non-empty modality -> histogram object")
        mods = list(rows[0])
        out = {m: [] for m in mods}
        for d, row in enumerate(rows):
            if not isinstance(row, Mapping) or set(row) != set(mods):
                raise DatasetFormatError(
                    f"{key}[{d}]: modalities {sorted(row) if isinstance(row, Mapping) else row!r} "
                    f"differ from {sorted(mods)} (presence must be the same for every datum)")
            for m in mods:
                hist = row[m]
                where = f"{key}[{d}].{m}"
                if not isinstance(hist, list) or not hist:
                    raise DatasetFormatError(f"{where}: expected a non-empty list of counts")
                for j, v in enumerate(hist):
                    if not isinstance(v, int) or isinstance(v, bool):
                        raise DatasetFormatError(f"{where}[{j}]: expected an integer, got {v!r}")
                    if v < 0:
                        raise DatasetFormatError(f"{where}[{j}]: negative count {v}")
                width = len(out[m][0]) if out[m] else declared_V.get(m, len(hist))
                if len(hist) != width:
                    raise DatasetFormatError(f"{where}: expected {width} bins, got {len(hist)}")
                out[m].append(hist)
        return {m: np.array(v, dtype=np.int64) for m, v in out.items()}

    obs_a = parse_agent("observations_a")
    obs_b = parse_agent("observations_b")
    for m in set(obs_a) & set(obs_b):
        if obs_a[m].shape[1] != obs_b[m].shape[1]:
            raise DatasetFormatError(f"modality {m!r}: agents disagree on the number of bins")
    return Dataset(obs_a, obs_b, np.array(labels, dtype=np.int64), dict(doc.get("meta") or {}))


def load_histogram_dataset(path) -> Dataset:
    """Read and validate a dataset JSON file."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path}: invalid JSON ({exc})") from exc
    return dataset_from_dict(doc)


def _ordered(mods) -> list:
    mods = list(mods)
    return [m for m in MODALITIES if m in mods] + sorted(m for m in mods if m not in MODALITIES)
