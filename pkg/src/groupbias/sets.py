"""Multisets of group elements carrying bias claims and certificates.

A BiasedSet stores element indices into its group, either as an explicit
list in construction order ("list" encoding) or as sorted distinct values
with positive multiplicities ("counts" encoding). Stored order matters:
tiling-based constructions index into it, so serialization must round-trip
it exactly.

Claims come in two kinds. A "bound" claim is an inequality the certifier
enforces (certified bias must not exceed it beyond tolerance). A
"reference" claim is a theorem constant recorded for comparison only;
certification reports it but does not gate on it.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceError, StructuralError
from .groups import FiniteGroup, parse_group
from .limits import CERT_TOL, cap

CLAIM_KINDS = ("bound", "reference")


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace, ASCII only."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


@dataclass(frozen=True)
class BiasedSet:
    group: FiniteGroup
    values: np.ndarray
    claimed_bias: float
    claim_kind: str = "bound"
    counts: np.ndarray | None = None
    certified_bias: float | None = None
    certified_method: str | None = None
    provenance: list = field(default_factory=list)
    seed: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int64)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size == 0:
            raise StructuralError("a biased set needs at least one element")
        if values.min() < 0 or values.max() >= self.group.order:
            raise StructuralError("element index out of range for the group")
        if self.counts is not None:
            counts = np.asarray(self.counts, dtype=np.int64)
            object.__setattr__(self, "counts", counts)
            if counts.shape != values.shape:
                raise StructuralError("counts shape does not match values")
            if counts.min() < 1:
                raise StructuralError("counts must be positive")
            if np.any(np.diff(values) <= 0):
                raise StructuralError("counts encoding requires strictly increasing values")
        if not (0.0 <= self.claimed_bias <= 1.0):
            raise StructuralError(f"claimed bias {self.claimed_bias} outside [0, 1]")
        if self.claim_kind not in CLAIM_KINDS:
            raise StructuralError(f"unknown claim kind {self.claim_kind!r}")

    @property
    def size(self) -> int:
        if self.counts is None:
            return int(self.values.size)
        return int(self.counts.sum())

    @property
    def encoding(self) -> str:
        return "list" if self.counts is None else "counts"

    @property
    def best_bias(self) -> float:
        """Certified bias when present, claimed bias otherwise."""
        return self.claimed_bias if self.certified_bias is None else self.certified_bias

    def element_counts(self):
        """Distinct element indices (sorted ascending) with multiplicities."""
        if self.counts is not None:
            return self.values, self.counts
        vals, cnts = np.unique(self.values, return_counts=True)
        return vals, cnts

    def gather_stored(self, positions):
        """Element indices at the given stored positions (mod size is the caller's job)."""
        positions = np.asarray(positions, dtype=np.int64)
        if positions.size and (positions.min() < 0 or positions.max() >= self.size):
            raise StructuralError("stored position out of range")
        if self.counts is None:
            return self.values[positions]
        cum = np.cumsum(self.counts)
        return self.values[np.searchsorted(cum, positions, side="right")]

    def expanded(self) -> np.ndarray:
        """The full multiset in stored order (repeats counted sets)."""
        if self.counts is None:
            return self.values
        if self.size > cap("SERIALIZE_CAP"):
            raise ResourceError(f"refusing to expand {self.size} elements")
        return np.repeat(self.values, self.counts)

    def with_certificate(self, bias: float, method: str) -> "BiasedSet":
        return dataclasses.replace(self, certified_bias=float(bias), certified_method=method)

    def with_provenance(self, entry: dict) -> "BiasedSet":
        return dataclasses.replace(self, provenance=self.provenance + [_jsonable(entry)])

    def digest(self) -> str:
        """Short content hash over the parts that define the multiset and claim."""
        core = {
            "group": self.group.descriptor,
            "encoding": self.encoding,
            "elements": self.values.tolist(),
            "counts": None if self.counts is None else self.counts.tolist(),
            "claimed_bias": float(self.claimed_bias),
        }
        return hashlib.sha256(canonical_json(core).encode()).hexdigest()[:16]

    def to_payload(self, run: dict | None = None) -> dict:
        n_entries = int(self.values.size)
        if n_entries > cap("SERIALIZE_CAP"):
            raise ResourceError(
                f"certificate would carry {n_entries} entries, over cap "
                f"{cap('SERIALIZE_CAP')}"
            )
        return {
            "kind": "biased-set",
            "group": self.group.descriptor,
            "order": self.group.order,
            "encoding": self.encoding,
            "elements": self.values.tolist(),
            "counts": None if self.counts is None else self.counts.tolist(),
            "size": self.size,
            "claimed_bias": float(self.claimed_bias),
            "claim_kind": self.claim_kind,
            "certified_bias": None if self.certified_bias is None else float(self.certified_bias),
            "certified_method": self.certified_method,
            "tolerance": CERT_TOL,
            "digest": self.digest(),
            "provenance": _jsonable(self.provenance),
            "seed": self.seed,
            "run": _jsonable(run) if run else None,
        }

    def to_json(self, run: dict | None = None) -> str:
        return canonical_json(self.to_payload(run))

    @staticmethod
    def from_payload(payload: dict) -> "BiasedSet":
        if payload.get("kind") != "biased-set":
            raise StructuralError("not a biased-set certificate")
        group = parse_group(payload["group"])
        if group.order != payload.get("order", group.order):
            raise StructuralError("certificate order disagrees with the group descriptor")
        counts = payload.get("counts")
        s = BiasedSet(
            group=group,
            values=np.asarray(payload["elements"], dtype=np.int64),
            counts=None if counts is None else np.asarray(counts, dtype=np.int64),
            claimed_bias=float(payload["claimed_bias"]),
            claim_kind=payload.get("claim_kind", "bound"),
            certified_bias=payload.get("certified_bias"),
            certified_method=payload.get("certified_method"),
            provenance=list(payload.get("provenance", [])),
            seed=payload.get("seed"),
        )
        if payload.get("digest") and payload["digest"] != s.digest():
            raise StructuralError("certificate digest mismatch; content was altered")
        return s

    @staticmethod
    def from_json(text: str) -> "BiasedSet":
        return BiasedSet.from_payload(json.loads(text))


def counted(group, values, counts, **kw) -> BiasedSet:
    """Build a counts-encoded set from possibly unsorted/duplicated values."""
    values = np.asarray(values, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    keep = counts > 0
    values, counts = values[keep], counts[keep]
    order = np.argsort(values, kind="stable")
    values, counts = values[order], counts[order]
    dedup_vals, start = np.unique(values, return_index=True)
    dedup_counts = np.add.reduceat(counts, start)
    return BiasedSet(group=group, values=dedup_vals, counts=dedup_counts, **kw)
