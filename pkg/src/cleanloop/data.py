"""Dataset manifests, embedding ingestion, and pairwise distances.

Manifests are JSONL files, one ``{"id", "path", "label"}`` object per line.
Embeddings arrive either as a binary container (magic ``SCEM``, version 0x01,
little-endian u32 N and D, then N*D float32 values row-major) or as a CSV
with header ``id,e0,...,e{D-1}`` whose ids must match the manifest order.
A pixel baseline embedder is included so the pipeline runs end to end
without any pretrained encoder.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy.spatial.distance import pdist, squareform

from .errors import (
    DecodeError,
    DuplicateId,
    FormatError,
    MissingImage,
    NonFiniteValue,
    OutOfRange,
    ParseError,
    ShapeMismatch,
    ZeroVector,
)

SCEM_MAGIC = b"SCEM"
SCEM_VERSION = 0x01

METRICS = ("cosine", "euclidean")
UNIT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class SampleRecord:
    id: str
    path: str
    label: Optional[str] = None


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    samples: tuple[SampleRecord, ...]

    def __post_init__(self):
        if len(self.samples) < 1:
            raise ParseError(f"manifest {self.name!r} is empty")
        seen: set[str] = set()
        for rec in self.samples:
            if not rec.path:
                raise ParseError(f"sample {rec.id!r} has an empty path")
            if rec.id in seen:
                raise DuplicateId(f"duplicate sample id {rec.id!r}")
            seen.add(rec.id)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def ids(self) -> list[str]:
        return [rec.id for rec in self.samples]

    @property
    def labels(self) -> list[Optional[str]]:
        return [rec.label for rec in self.samples]

    def index_of(self) -> dict[str, int]:
        return {rec.id: i for i, rec in enumerate(self.samples)}


@dataclass(frozen=True)
class EmbeddingMatrix:
    values: np.ndarray  # (n, d) float
    normalized: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ShapeMismatch(f"embeddings must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteValue("embedding matrix contains NaN or infinite values")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class DistanceMatrix:
    entries: np.ndarray  # (n, n) symmetric, zero diagonal
    metric: str

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.float64)
        if self.metric not in METRICS:
            raise OutOfRange(f"metric must be one of {METRICS}, got {self.metric!r}")
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeMismatch(f"distance matrix must be square, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NonFiniteValue("distance matrix contains NaN or infinite values")
        if np.any(m < 0) or np.any(np.diag(m) != 0) or not np.array_equal(m, m.T):
            raise OutOfRange("distance matrix must be symmetric, non-negative, zero-diagonal")
        object.__setattr__(self, "entries", m)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def load_manifest(path: str | Path, name: Optional[str] = None) -> DatasetManifest:
    """Read a JSONL manifest, preserving file order. Duplicate ids are rejected."""
    path = Path(path)
    records: list[SampleRecord] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path.name}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict) or "id" not in obj or "path" not in obj:
                raise ParseError(f"{path.name}:{lineno}: record must have 'id' and 'path'")
            label = obj.get("label")
            if label is not None and not isinstance(label, str):
                raise ParseError(f"{path.name}:{lineno}: 'label' must be a string or null")
            if not isinstance(obj["id"], str) or not isinstance(obj["path"], str):
                raise ParseError(f"{path.name}:{lineno}: 'id' and 'path' must be strings")
            if not obj["path"]:
                raise ParseError(f"{path.name}:{lineno}: 'path' must be non-empty")
            records.append(SampleRecord(id=obj["id"], path=obj["path"], label=label))
    if not records:
        raise ParseError(f"{path.name}: manifest contains no records")
    return DatasetManifest(name=name or path.stem, samples=tuple(records))


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in manifest.samples:
            fh.write(json.dumps({"id": rec.id, "path": rec.path, "label": rec.label}) + "\n")


def _rows_unit_normalized(values: np.ndarray) -> bool:
    norms = np.linalg.norm(values, axis=1)
    return bool(np.all(np.abs(norms - 1.0) <= UNIT_NORM_TOL))


def load_embeddings(path: str | Path, manifest: DatasetManifest) -> EmbeddingMatrix:
    """Load embeddings (binary SCEM or CSV) aligned to the manifest order."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        values = _read_csv_embeddings(path, manifest)
    else:
        values = _read_scem(path)
    if values.shape[0] != len(manifest):
        raise ShapeMismatch(
            f"embedding rows ({values.shape[0]}) != manifest size ({len(manifest)})"
        )
    if not np.all(np.isfinite(values)):
        bad = int(np.argwhere(~np.all(np.isfinite(values), axis=1))[0][0])
        raise NonFiniteValue(f"row {bad} contains NaN or infinite values")
    return EmbeddingMatrix(values=values, normalized=_rows_unit_normalized(values))


def _read_scem(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    header = SCEM_MAGIC + bytes([SCEM_VERSION])
    if len(raw) < len(header) + 8:
        raise FormatError(f"{path.name}: file too short for SCEM header")
    if raw[:4] != SCEM_MAGIC:
        raise FormatError(f"{path.name}: bad magic bytes {raw[:4]!r}")
    if raw[4] != SCEM_VERSION:
        raise FormatError(f"{path.name}: unsupported version {raw[4]}")
    n, d = struct.unpack_from("<II", raw, 5)
    expected = 13 + 4 * n * d
    if len(raw) != expected:
        raise FormatError(
            f"{path.name}: payload is {len(raw)} bytes, expected {expected} for N={n}, D={d}"
        )
    values = np.frombuffer(raw, dtype="<f4", count=n * d, offset=13)
    return values.reshape(n, d).astype(np.float64)


def save_embeddings(emb: EmbeddingMatrix, path: str | Path) -> None:
    """Write the binary SCEM container (float32 payload)."""
    with Path(path).open("wb") as fh:
        fh.write(SCEM_MAGIC)
        fh.write(bytes([SCEM_VERSION]))
        fh.write(struct.pack("<II", emb.n, emb.d))
        fh.write(np.ascontiguousarray(emb.values, dtype="<f4").tobytes())


def _read_csv_embeddings(path: Path, manifest: DatasetManifest) -> np.ndarray:
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path.name}: empty CSV") from None
        if not header or header[0] != "id" or any(
            h != f"e{i}" for i, h in enumerate(header[1:])
        ):
            raise FormatError(f"{path.name}: header must be 'id,e0,...,e{{D-1}}'")
        d = len(header) - 1
        if d < 1:
            raise FormatError(f"{path.name}: no embedding columns")
        rows: list[list[float]] = []
        ids: list[str] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != d + 1:
                raise FormatError(f"{path.name}:{lineno}: expected {d + 1} fields, got {len(row)}")
            ids.append(row[0])
            try:
                rows.append([float(x) for x in row[1:]])
            except ValueError as exc:
                raise FormatError(f"{path.name}:{lineno}: non-numeric value") from exc
    if ids != manifest.ids:
        raise FormatError(f"{path.name}: ids do not match manifest ids and order")
    return np.asarray(rows, dtype=np.float64)


def baseline_embed(
    manifest: DatasetManifest, image_root: str | Path, side: int = 16
) -> EmbeddingMatrix:
    """Pixel-statistics embedder: grayscale, area-averaged side*side resize,
    flatten, L2-normalize.

    All-black images produce a zero row that is kept as-is; such a row leaves
    the matrix-level normalized flag unset and makes cosine distances fail
    loudly downstream instead of silently defining one.
    """
    if side < 1:
        raise OutOfRange(f"side must be >= 1, got {side}")
    root = Path(image_root)
    rows = np.empty((len(manifest), side * side), dtype=np.float64)
    any_zero = False
    for i, rec in enumerate(manifest.samples):
        img_path = root / rec.path
        if not img_path.is_file():
            raise MissingImage(f"{rec.id}: no image at {img_path}")
        try:
            with Image.open(img_path) as img:
                gray = img.convert("L").resize((side, side), Image.Resampling.BOX)
        except (UnidentifiedImageError, OSError) as exc:
            raise DecodeError(f"{rec.id}: cannot decode {img_path} ({exc})") from exc
        vec = np.asarray(gray, dtype=np.float64).reshape(-1) / 255.0
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            any_zero = True
            rows[i] = vec
        else:
            rows[i] = vec / norm
    return EmbeddingMatrix(values=rows, normalized=not any_zero)


def pairwise_distance(emb: EmbeddingMatrix, metric: str = "cosine") -> DistanceMatrix:
    """Dense symmetric distance matrix; cosine is 1 - u.v/(|u||v|)."""
    if metric not in METRICS:
        raise OutOfRange(f"metric must be one of {METRICS}, got {metric!r}")
    x = emb.values
    if metric == "cosine":
        norms = np.linalg.norm(x, axis=1)
        zero = np.nonzero(norms == 0.0)[0]
        if zero.size:
            raise ZeroVector(f"cosine distance undefined for all-zero row {int(zero[0])}")
        unit = x / norms[:, None]
        # 1 - cos(u, v) == |u^ - v^|^2 / 2; the difference form keeps identical
        # rows at exactly zero and small distances free of cancellation
        d = squareform(pdist(unit, metric="sqeuclidean")) / 2.0
        np.clip(d, 0.0, 2.0, out=d)
    else:
        d = squareform(pdist(x, metric="euclidean"))
    d = (d + d.T) / 2.0  # kill asymmetric rounding noise
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(entries=d, metric=metric)
