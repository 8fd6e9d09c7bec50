"""Persistence: dataset manifests (JSON), embedding files (.vemb) and head
checkpoints (.vphd), both little-endian float32 row-major with self-describing
headers so dimensions never need out-of-band configuration.

.vemb layout
    magic "VEMB" | version u16 | mode u8 ('A' per-frame, 'B' per-window)
    d0 u32 | d1 u32 | window_count u32 | j u32
    then per window: start u32 | d0*d1 float32
Mode A stores one record per frame (d0, d1) = (m_f, d_f); mode B one record
per window, (d0, d1) = (t_v, e).

.vphd layout
    magic "VPHD" | version u16 | t_v u32 | e_in u32 | t u32 | e_red u32 | c u32
    flags u8 (bit0 squared_distance, bit1 adam state present)
    then w1, w2, w3, centroids, rho as float32
    if adam present: step u64, then per parameter m float64 and v float64
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import (
    BadMagicError,
    BadVersionError,
    DatasetError,
    NonFinitePayloadError,
    ShapeError,
    TruncatedFileError,
)
from .head import PARAM_FIELDS, HeadConfig, HeadParams

VEMB_MAGIC = b"VEMB"
VPHD_MAGIC = b"VPHD"
VEMB_VERSION = 1
VPHD_VERSION = 1
_VEMB_HEADER = struct.Struct("<4sHBIIII")
_VPHD_HEADER = struct.Struct("<4sHIIIIIB")

SPLITS = ("train", "val", "test", "unassigned")
CRF_LEVELS = (None, 23, 30, 50)


# ---------------------------------------------------------------------------
# Manifest

@dataclass(frozen=True)
class ManifestEntry:
    video_id: str
    label: str                      # "real" | "fake"
    n_frames: int
    embedding_path: str | None = None
    generator: str = "real"         # fakes carry their generator tag
    crf: int | None = None
    source_video_id: str | None = None
    split: str = "unassigned"

    def __post_init__(self):
        if self.label not in ("real", "fake"):
            raise DatasetError(f"bad label {self.label!r} for {self.video_id}")
        if self.split not in SPLITS:
            raise DatasetError(f"bad split {self.split!r} for {self.video_id}")
        if self.crf not in CRF_LEVELS:
            raise DatasetError(f"bad crf {self.crf!r} for {self.video_id}")

    @property
    def source_unit(self) -> str:
        return self.source_video_id or self.video_id


def validate_manifest(entries: list[ManifestEntry]) -> None:
    seen = set()
    for e in entries:
        if e.video_id in seen:
            raise DatasetError(f"duplicate video_id {e.video_id!r}")
        seen.add(e.video_id)


def manifest_to_json(entries: list[ManifestEntry]) -> str:
    doc = {"entries": [asdict(e) for e in entries]}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def manifest_from_json(text: str) -> list[ManifestEntry]:
    doc = json.loads(text)
    entries = [ManifestEntry(**rec) for rec in doc["entries"]]
    validate_manifest(entries)
    return entries


def save_manifest(path, entries: list[ManifestEntry]) -> None:
    validate_manifest(entries)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(manifest_to_json(entries))


def load_manifest(path) -> list[ManifestEntry]:
    with open(path, encoding="utf-8") as fh:
        return manifest_from_json(fh.read())


def split_manifest(entries: list[ManifestEntry], seed: int) -> list[ManifestEntry]:
    """Assign 70/10/20 splits at the level of real source videos.

    A fake inherits its source's split via source_video_id, so derived
    content never leaks across splits. Counts are floor(0.7 n) / floor(0.1 n)
    with the remainder going to test (503 sources -> 352/50/101).
    """
    if not any(e.split == "unassigned" for e in entries):
        raise DatasetError("split_manifest: no unassigned entries")
    units = sorted({e.source_unit for e in entries})
    if len(units) < 10:
        raise DatasetError(f"split requires >= 10 source videos, got {len(units)}")
    order = np.random.default_rng(seed).permutation(len(units))
    shuffled = [units[i] for i in order]
    n = len(units)
    n_train = n * 7 // 10
    n_val = n // 10
    assign = {}
    for i, u in enumerate(shuffled):
        if i < n_train:
            assign[u] = "train"
        elif i < n_train + n_val:
            assign[u] = "val"
        else:
            assign[u] = "test"
    return [replace(e, split=assign[e.source_unit]) for e in entries]


def select_training_subset(entries: list[ManifestEntry], generators=("TF", "DC"),
                           m="all", seed: int = 0) -> list[ManifestEntry]:
    """Pick M real train sources plus their generator-matched uncompressed fakes.

    Only crf=None entries from the train split qualify. A source is eligible
    when every requested generator has a matched fake linked to it.
    """
    generators = tuple(generators)
    train = [e for e in entries if e.split == "train" and e.crf is None]
    present = {e.generator for e in train if e.label == "fake"}
    for g in generators:
        if g not in present:
            raise DatasetError(f"generator {g!r} absent from the train split")
    reals = {e.video_id: e for e in train if e.label == "real"}
    fakes_by_source: dict[str, dict[str, list[ManifestEntry]]] = {}
    for e in train:
        if e.label == "fake" and e.generator in generators and e.source_video_id:
            fakes_by_source.setdefault(e.source_video_id, {}).setdefault(e.generator, []).append(e)
    eligible = sorted(
        sid for sid, by_gen in fakes_by_source.items()
        if sid in reals and all(g in by_gen for g in generators)
    )
    if m == "all":
        chosen = eligible
    else:
        m = int(m)
        if len(eligible) < m:
            raise DatasetError(
                f"requested M={m} but only {len(eligible)} matched sources available"
            )
        order = np.random.default_rng(seed).permutation(len(eligible))
        chosen = sorted(eligible[i] for i in order[:m])
    if not chosen:
        raise DatasetError("no matched real/fake training sources available")
    out = [reals[sid] for sid in chosen]
    for sid in chosen:
        for g in generators:
            out.extend(fakes_by_source[sid][g])
    return out


# ---------------------------------------------------------------------------
# Embedding files

@dataclass(frozen=True)
class EmbeddingFile:
    mode: str                 # "A" | "B"
    d0: int
    d1: int
    j: int
    windows: tuple            # of (start: int, matrix: float32 ndarray (d0, d1))

    def __post_init__(self):
        if self.mode not in ("A", "B"):
            raise ShapeError(f"bad .vemb mode {self.mode!r}")


def write_vemb(path, emb: EmbeddingFile) -> None:
    parts = [_VEMB_HEADER.pack(VEMB_MAGIC, VEMB_VERSION, ord(emb.mode),
                               emb.d0, emb.d1, len(emb.windows), emb.j)]
    for start, mat in emb.windows:
        mat = np.ascontiguousarray(mat, dtype=np.float32)
        if mat.shape != (emb.d0, emb.d1):
            raise ShapeError(f".vemb window shape {mat.shape} != ({emb.d0}, {emb.d1})")
        if not np.isfinite(mat).all():
            raise NonFinitePayloadError(".vemb payload contains non-finite values")
        parts.append(struct.pack("<I", start))
        parts.append(mat.astype("<f4").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def read_vemb(path) -> EmbeddingFile:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _VEMB_HEADER.size:
        raise TruncatedFileError(f"{path}: shorter than the .vemb header")
    magic, version, mode_byte, d0, d1, count, j = _VEMB_HEADER.unpack_from(data)
    if magic != VEMB_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if version != VEMB_VERSION:
        raise BadVersionError(f"{path}: unsupported .vemb version {version}")
    mode = chr(mode_byte)
    if mode not in ("A", "B"):
        raise BadVersionError(f"{path}: unknown mode byte {mode_byte}")
    rec_size = 4 + d0 * d1 * 4
    expected = _VEMB_HEADER.size + count * rec_size
    if len(data) != expected:
        raise TruncatedFileError(
            f"{path}: size mismatch, expected {expected} bytes, got {len(data)}"
        )
    windows = []
    off = _VEMB_HEADER.size
    for _ in range(count):
        (start,) = struct.unpack_from("<I", data, off)
        mat = np.frombuffer(data, dtype="<f4", count=d0 * d1, offset=off + 4)
        mat = mat.reshape(d0, d1).copy()
        if not np.isfinite(mat).all():
            raise NonFinitePayloadError(f"{path}: non-finite payload values")
        windows.append((start, mat))
        off += rec_size
    return EmbeddingFile(mode=mode, d0=d0, d1=d1, j=j, windows=tuple(windows))


# ---------------------------------------------------------------------------
# Checkpoints

def _param_order(cfg: HeadConfig):
    return (
        ("w1", (cfg.t_v, cfg.t)),
        ("w2", (cfg.e_in, cfg.e_red)),
        ("w3", (cfg.t * cfg.e_red, cfg.c)),
        ("centroids", (cfg.c,)),
        ("rho", (cfg.c,)),
    )


def save_checkpoint(path, params: HeadParams, cfg: HeadConfig, adam_state=None) -> None:
    flags = (1 if cfg.squared_distance else 0) | (2 if adam_state is not None else 0)
    parts = [_VPHD_HEADER.pack(VPHD_MAGIC, VPHD_VERSION, cfg.t_v, cfg.e_in,
                               cfg.t, cfg.e_red, cfg.c, flags)]
    for name, shape in _param_order(cfg):
        arr = np.ascontiguousarray(getattr(params, name), dtype=np.float32)
        if arr.shape != shape:
            raise ShapeError(f"checkpoint: {name} shape {arr.shape} != {shape}")
        if not np.isfinite(arr).all():
            raise NonFinitePayloadError(f"checkpoint: {name} contains non-finite values")
        parts.append(arr.astype("<f4").tobytes())
    if adam_state is not None:
        parts.append(struct.pack("<Q", adam_state.step))
        for name, _ in _param_order(cfg):
            m, v = adam_state.moments[name]
            parts.append(np.ascontiguousarray(m, dtype="<f8").tobytes())
            parts.append(np.ascontiguousarray(v, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_checkpoint(path):
    """Returns (params, cfg, adam_state-or-None)."""
    from .trainer import AdamState  # local import to avoid a cycle

    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _VPHD_HEADER.size:
        raise TruncatedFileError(f"{path}: shorter than the .vphd header")
    magic, version, t_v, e_in, t, e_red, c, flags = _VPHD_HEADER.unpack_from(data)
    if magic != VPHD_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if version != VPHD_VERSION:
        raise BadVersionError(f"{path}: unsupported .vphd version {version}")
    cfg = HeadConfig(t_v=t_v, e_in=e_in, t=t, e_red=e_red, c=c,
                     squared_distance=bool(flags & 1))
    has_adam = bool(flags & 2)
    sizes = [int(np.prod(shape)) for _, shape in _param_order(cfg)]
    body = sum(sizes) * 4 + (8 + sum(sizes) * 16 if has_adam else 0)
    if len(data) != _VPHD_HEADER.size + body:
        raise TruncatedFileError(
            f"{path}: size mismatch, expected {_VPHD_HEADER.size + body} bytes, "
            f"got {len(data)}"
        )
    off = _VPHD_HEADER.size
    values = {}
    for (name, shape), size in zip(_param_order(cfg), sizes):
        arr = np.frombuffer(data, dtype="<f4", count=size, offset=off).reshape(shape).copy()
        if not np.isfinite(arr).all():
            raise NonFinitePayloadError(f"{path}: {name} contains non-finite values")
        values[name] = arr
        off += size * 4
    params = HeadParams(**{f: values[f] for f in PARAM_FIELDS})
    state = None
    if has_adam:
        (step,) = struct.unpack_from("<Q", data, off)
        off += 8
        moments = {}
        for (name, shape), size in zip(_param_order(cfg), sizes):
            m = np.frombuffer(data, dtype="<f8", count=size, offset=off).reshape(shape).copy()
            off += size * 8
            v = np.frombuffer(data, dtype="<f8", count=size, offset=off).reshape(shape).copy()
            off += size * 8
            moments[name] = (m, v)
        state = AdamState(step=step, moments=moments)
    return params, cfg, state
