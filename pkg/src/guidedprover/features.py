"""Clause feature extraction: term walks, count features and sdbm hashing.

A clause is encoded as a sparse count vector.  Each feature is serialised
to a string key (``V:~p/f/*`` for a walk, ``C:len`` for a count), the key is
hashed into ``[0, base)`` and colliding values are summed.  With conjecture
embedding the vector has a second block ``[base, 2*base)`` holding the
hashed features of the problem's negated conjecture clauses.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

from .logic import Clause, Literal, Term

MASK64 = (1 << 64) - 1
PAD = "□"  # terminal marker for walks shorter than three nodes
VAR = "*"
FEATURE_SET_VERSION = "walk3+counts/1"
COUNT_KEYS = ("C:len", "C:pos", "C:neg", "C:depth", "C:vars")


def sdbm(key) -> int:
    """64-bit sdbm hash of a string (UTF-8 encoded) or bytes."""
    data = key.encode("utf-8") if isinstance(key, str) else bytes(key)
    h = 0
    for b in data:
        h = (b + (h << 6) + (h << 16) - h) & MASK64
    return h


@dataclass(frozen=True)
class HashSpec:
    base: int = 2 ** 15

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("hash base must be at least 2")


@lru_cache(maxsize=1 << 18)
def _cached_index(key: str, base: int) -> int:
    return sdbm(key) % base


def hash_index(key: str, spec: HashSpec) -> int:
    return _cached_index(key, spec.base)


@dataclass
class SparseVector:
    entries: Dict[int, float]
    dimension: int

    def __post_init__(self):
        for i in self.entries:
            if not 0 <= i < self.dimension:
                raise ValueError(f"index {i} outside dimension {self.dimension}")

    def __getitem__(self, i: int) -> float:
        return self.entries.get(i, 0)

    def items(self) -> List[Tuple[int, float]]:
        return sorted(self.entries.items())


@dataclass(frozen=True)
class FeatureConfig:
    hash: HashSpec = field(default_factory=HashSpec)
    walk_length: int = 3
    count_features: bool = True
    conjecture_embedding: bool = True

    def __post_init__(self):
        if self.walk_length != 3:
            raise ValueError("only walks of length 3 are supported")

    @property
    def dimension(self) -> int:
        return 2 * self.hash.base if self.conjecture_embedding else self.hash.base

    def to_meta(self) -> dict:
        return {
            "hash_base": self.hash.base,
            "walk_length": self.walk_length,
            "count_features": self.count_features,
            "conjecture_embedding": self.conjecture_embedding,
            "feature_set_version": FEATURE_SET_VERSION,
            "dimension": self.dimension,
        }

    @classmethod
    def from_meta(cls, meta: dict) -> "FeatureConfig":
        if meta.get("feature_set_version", FEATURE_SET_VERSION) != FEATURE_SET_VERSION:
            raise ValueError(f"unsupported feature set {meta['feature_set_version']!r}")
        return cls(HashSpec(int(meta["hash_base"])), int(meta.get("walk_length", 3)),
                   bool(meta.get("count_features", True)),
                   bool(meta.get("conjecture_embedding", True)))


# --------------------------------------------------------------------------
# Features
# --------------------------------------------------------------------------


def _label(t: Term) -> str:
    return VAR if isinstance(t, str) else t[0]


def literal_walks(l: Literal) -> List[str]:
    """Walk keys of one literal's sign-annotated term tree."""
    root = l.atom[0] if l.positive else "~" + l.atom[0]
    out: List[str] = []
    if len(l.atom) == 1:
        out.append("V:" + "/".join((root, PAD, PAD)))
        return out
    for a in l.atom[1:]:
        _walks_from(a, (root,), 1, out)
    return out


def _walks_from(t: Term, prefix: Tuple[str, ...], depth: int, out: List[str]) -> None:
    """``prefix`` holds up to two ancestors; ``depth`` is t's parent depth."""
    label = _label(t)
    path = prefix + (label,)
    if len(path) == 3:
        out.append("V:" + "/".join(path))
    leaf = isinstance(t, str) or len(t) == 1
    if leaf and depth + 1 < 3:
        # root-to-leaf path of fewer than three nodes
        out.append("V:" + "/".join(path + (PAD,) * (3 - len(path))))
    if leaf:
        return
    nxt = path[-2:]
    for a in t[1:]:
        _walks_from(a, nxt, depth + 1, out)


def term_walk_features(c: Clause) -> Counter:
    """Multiset of walk keys over all literals of ``c``."""
    out: Counter = Counter()
    for l in c.literals:
        out.update(literal_walks(l))
    return out


def _depth(t: Term) -> int:
    if isinstance(t, str) or len(t) == 1:
        return 1
    return 1 + max(_depth(a) for a in t[1:])


def count_features(c: Clause) -> List[Tuple[str, int]]:
    pos = sum(1 for l in c.literals if l.positive)
    depth = 0
    nvars = 0
    for l in c.literals:
        for a in l.atom[1:]:
            depth = max(depth, _depth(a))
        stack = list(l.atom[1:])
        while stack:
            t = stack.pop()
            if isinstance(t, str):
                nvars += 1
            else:
                stack.extend(t[1:])
    return [("C:len", len(c.literals)), ("C:pos", pos), ("C:neg", len(c.literals) - pos),
            ("C:depth", depth), ("C:vars", nvars)]


def clause_features(c: Clause, cfg: FeatureConfig) -> Counter:
    """Exact (unhashed) feature-count map of a clause; zero counts dropped."""
    feats = term_walk_features(c)
    if cfg.count_features:
        for k, v in count_features(c):
            if v:
                feats[k] += v
    return feats


def fold(features: Dict[str, int], spec: HashSpec, offset: int = 0) -> Dict[int, int]:
    """Hash a feature map into index space, summing collisions."""
    out: Dict[int, int] = {}
    base = spec.base
    for k, v in features.items():
        i = _cached_index(k, base) + offset
        out[i] = out.get(i, 0) + v
    return out


def conjecture_block(conjecture: Sequence[Clause], cfg: FeatureConfig) -> Dict[int, int]:
    """Hashed features of the union of the conjecture clauses, offset by base."""
    feats: Counter = Counter()
    for c in conjecture:
        feats.update(clause_features(c, cfg))
    return fold(feats, cfg.hash, offset=cfg.hash.base)


def clause_vector(c: Clause, conjecture: Sequence[Clause], cfg: FeatureConfig,
                  conj_block: Dict[int, int] = None) -> SparseVector:
    """Sparse vector of ``c``; pass ``conj_block`` to reuse a per-problem block."""
    entries = fold(clause_features(c, cfg), cfg.hash)
    if cfg.conjecture_embedding:
        if conj_block is None:
            conj_block = conjecture_block(conjecture, cfg)
        entries.update(conj_block)
    return SparseVector(entries, cfg.dimension)


# --------------------------------------------------------------------------
# Sparse training-data files
# --------------------------------------------------------------------------


def format_example(label: int, v: SparseVector) -> str:
    parts = [str(int(label))]
    for i, x in sorted(v.entries.items()):
        if x:
            parts.append(f"{i}:{int(x) if float(x).is_integer() else repr(float(x))}")
    return " ".join(parts)


def parse_example(line: str, dimension: int) -> Tuple[SparseVector, int]:
    parts = line.split()
    if not parts:
        raise ValueError("empty example line")
    label = int(parts[0])
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {parts[0]!r}")
    entries: Dict[int, float] = {}
    last = -1
    for p in parts[1:]:
        i, _, x = p.partition(":")
        idx = int(i)
        if idx <= last:
            raise ValueError("indices must be strictly ascending")
        last = idx
        val = float(x)
        if not val > 0:
            raise ValueError(f"feature values must be positive, got {x!r}")
        entries[idx] = int(val) if val.is_integer() else val
    return SparseVector(entries, dimension), label


def meta_path(data_path: Path) -> Path:
    data_path = Path(data_path)
    return data_path.with_name(data_path.name + ".meta.json")


def write_examples(path, examples: Iterable[Tuple[int, SparseVector]], cfg: FeatureConfig,
                   extra_meta: dict = None) -> int:
    """Write ``label index:value ...`` lines plus a metadata sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w") as fh:
        for label, v in examples:
            fh.write(format_example(label, v) + "\n")
            n += 1
    meta = cfg.to_meta()
    meta["examples"] = n
    if extra_meta:
        meta.update(extra_meta)
    meta_path(path).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    return n


def read_examples(path) -> Tuple[List[Tuple[SparseVector, int]], FeatureConfig]:
    path = Path(path)
    mp = meta_path(path)
    if not mp.exists():
        raise FileNotFoundError(f"missing metadata sidecar {mp}")
    cfg = FeatureConfig.from_meta(json.loads(mp.read_text()))
    data = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                data.append(parse_example(line, cfg.dimension))
    return data, cfg
