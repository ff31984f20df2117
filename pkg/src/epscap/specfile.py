"""JSON channel-spec files and run configuration.

A spec file looks like::

    {
      "name": "mixed-bsc",
      "components": [
        {"weight": 0.5, "matrix": [[0.9, 0.1], [0.1, 0.9]], "label": "good"},
        {"weight": 0.5, "matrix": [[0.8, 0.2], [0.2, 0.8]], "label": "bad"}
      ],
      "cost": [0.0, 1.0]
    }

``cost`` and the labels are optional. Weights and matrix rows whose sums are
within ``RENORM_TOL`` of one are renormalized; anything further off is an
error naming the offending field.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .capacity import MAX_COMPONENTS
from .channel import EXACT_TOL, Dmc, MixedChannel
from .spectrum import ATOM_CAP, MERGE_TOL

RENORM_TOL = 1e-9


class SpecError(ValueError):
    """A channel spec or config file failed validation."""


def _numbers(value, path: str, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise SpecError(f"{path}: expected numbers, got {value!r}") from None
    if arr.ndim != ndim or 0 in arr.shape:
        kind = "a non-empty list" if ndim == 1 else "a non-empty list of equal-length rows"
        raise SpecError(f"{path}: expected {kind}")
    if not np.all(np.isfinite(arr)):
        raise SpecError(f"{path}: non-finite entry")
    if np.any(arr < 0):
        raise SpecError(f"{path}: negative entry {arr.min()!r}")
    return arr


def _renormalize(arr: np.ndarray, path: str, what: str) -> np.ndarray:
    total = arr.sum()
    if abs(total - 1.0) > RENORM_TOL:
        raise SpecError(f"{path}: {what} sum {total:.12g} ≠ 1")
    return arr / total if abs(total - 1.0) > EXACT_TOL else arr


def channel_from_dict(doc) -> MixedChannel:
    if not isinstance(doc, dict):
        raise SpecError("top level: expected a JSON object")
    comps = doc.get("components")
    if not isinstance(comps, list) or not comps:
        raise SpecError("components: expected a non-empty list")
    weights, matrices, labels = [], [], []
    for i, comp in enumerate(comps):
        path = f"components[{i}]"
        if not isinstance(comp, dict):
            raise SpecError(f"{path}: expected an object")
        for key in ("weight", "matrix"):
            if key not in comp:
                raise SpecError(f"{path}: missing field '{key}'")
        w = comp["weight"]
        if isinstance(w, bool) or not isinstance(w, (int, float)) or not np.isfinite(w) or w <= 0:
            raise SpecError(f"{path}.weight: expected a positive number, got {w!r}")
        weights.append(float(w))
        try:
            mat = _numbers(comp["matrix"], f"{path}.matrix", 2)
        except SpecError:
            raise
        rows = [_renormalize(row, f"{path}.matrix[{r}]", "row") for r, row in enumerate(mat)]
        mat = np.vstack(rows)
        if matrices and mat.shape != matrices[0].shape:
            raise SpecError(f"{path}.matrix: shape {mat.shape} differs from {matrices[0].shape}")
        matrices.append(mat)
        labels.append(comp.get("label"))
    w = _renormalize(np.array(weights), "components[*].weight", "weights")
    cost = None
    if doc.get("cost") is not None:
        cost = _numbers(doc["cost"], "cost", 1)
        if cost.size != matrices[0].shape[0]:
            raise SpecError(f"cost: {cost.size} entries for {matrices[0].shape[0]} inputs")
    if all(lab is None for lab in labels):
        labels = None
    elif any(lab is None for lab in labels):
        raise SpecError("components[*].label: give a label for every component or none")
    try:
        return MixedChannel(w, tuple(Dmc(m) for m in matrices), cost=cost, labels=labels)
    except ValueError as exc:
        raise SpecError(str(exc)) from None


def parse_channel_spec(path) -> MixedChannel:
    """Read and validate a JSON spec file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"{path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return channel_from_dict(doc)


def channel_to_dict(ch: MixedChannel, name: str | None = None) -> dict:
    doc = {}
    if name is not None:
        doc["name"] = name
    comps = []
    for i, (w, c) in enumerate(zip(ch.weights, ch.channels)):
        comp = {"weight": float(w), "matrix": c.matrix.tolist()}
        if ch.labels is not None:
            comp["label"] = ch.labels[i]
        comps.append(comp)
    doc["components"] = comps
    if ch.cost is not None:
        doc["cost"] = ch.cost.tolist()
    return doc


def serialize_channel_spec(ch: MixedChannel, path=None, name: str | None = None) -> str:
    """JSON text for ``ch``; floats use shortest round-trip repr, so re-parsing is bit-exact."""
    text = json.dumps(channel_to_dict(ch, name), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


@dataclass(frozen=True)
class RunConfig:
    tol: float = 1e-7
    grid_resolution: float = 0.002
    component_cap: int = MAX_COMPONENTS
    atom_cap: int = ATOM_CAP
    type_cap: int = 200_000
    merge_tol: float = MERGE_TOL
    seed: int = 0
    threads: int = 1
    out_dir: str | None = None

    def __post_init__(self):
        for name in ("component_cap", "atom_cap", "type_cap", "threads"):
            if getattr(self, name) < 1:
                raise SpecError(f"config.{name}: must be positive")
        for name in ("tol", "grid_resolution", "merge_tol"):
            if not getattr(self, name) > 0:
                raise SpecError(f"config.{name}: must be positive")

    @classmethod
    def load(cls, path=None, env=None, **overrides) -> "RunConfig":
        """Defaults, then the optional JSON config file, then ``EPSCAP_THREADS``, then flags."""
        env = os.environ if env is None else env
        values = {}
        known = {f.name for f in fields(cls)}
        if path is not None:
            try:
                doc = json.loads(Path(path).read_text())
            except OSError as exc:
                raise SpecError(f"{path}: {exc.strerror}") from None
            except json.JSONDecodeError as exc:
                raise SpecError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
            if not isinstance(doc, dict):
                raise SpecError(f"{path}: expected a JSON object")
            unknown = set(doc) - known
            if unknown:
                raise SpecError(f"{path}: unknown config field(s) {sorted(unknown)}")
            values.update(doc)
        if env.get("EPSCAP_THREADS"):
            try:
                values["threads"] = int(env["EPSCAP_THREADS"])
            except ValueError:
                raise SpecError(f"EPSCAP_THREADS: not an integer: {env['EPSCAP_THREADS']!r}") from None
        values.update({k: v for k, v in overrides.items() if v is not None})
        return replace(cls(), **values)
