"""Synthetic image dataset with planted quality issues, for demos and tests.

Sixty 32x32 PNGs: three visual clusters (dark disc, bright frame, diagonal
stripes) of unique jittered renderings, two structural outliers, two exact
byte-level duplicates of cluster images, and two label swaps across
clusters. The planted ground truth ships alongside so a scripted annotator
can answer sessions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .data import DatasetManifest, SampleRecord

SIDE = 32


@dataclass(frozen=True)
class PlantedTruth:
    irrelevant: tuple[str, ...]
    near_duplicate: tuple[tuple[str, str], ...]
    label_error: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "irrelevant": list(self.irrelevant),
            "near_duplicate": [list(p) for p in self.near_duplicate],
            "label_error": list(self.label_error),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "PlantedTruth":
        return cls(
            irrelevant=tuple(obj["irrelevant"]),
            near_duplicate=tuple((a, b) for a, b in obj["near_duplicate"]),
            label_error=tuple(obj["label_error"]),
        )


def _disc(rng: np.random.Generator) -> np.ndarray:
    yy, xx = np.mgrid[0:SIDE, 0:SIDE]
    cx, cy = 16 + rng.uniform(-2, 2), 16 + rng.uniform(-2, 2)
    r = 9 + rng.uniform(-1.5, 1.5)
    img = np.full((SIDE, SIDE), 210.0)
    img[(xx - cx) ** 2 + (yy - cy) ** 2 <= r * r] = 35.0
    return img


def _frame(rng: np.random.Generator) -> np.ndarray:
    img = np.full((SIDE, SIDE), 60.0)
    t = int(4 + rng.integers(0, 3))
    img[:t, :] = img[-t:, :] = 230.0
    img[:, :t] = img[:, -t:] = 230.0
    return img


def _stripes(rng: np.random.Generator) -> np.ndarray:
    yy, xx = np.mgrid[0:SIDE, 0:SIDE]
    period = 6 + int(rng.integers(0, 3))
    phase = int(rng.integers(0, period))
    return np.where((xx + yy + phase) % period < period // 2, 200.0, 70.0)


def _outlier(rng: np.random.Generator, kind: int) -> np.ndarray:
    # pixel vectors are non-negative, so far-from-everything in cosine terms
    # means nearly disjoint bright support: a dark field with one lit corner
    img = rng.uniform(0, 6, size=(SIDE, SIDE))
    if kind == 0:
        img[:8, :8] = 255.0
    else:
        img[-8:, -8:] = 255.0
    return img


def _write(img: np.ndarray, rng: np.random.Generator, path: Path, jitter: bool = True) -> None:
    if jitter:
        img = img + rng.normal(0.0, 2.0, size=img.shape)
    arr = np.clip(img, 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def generate(out_dir: str | Path, seed: int = 7) -> tuple[DatasetManifest, PlantedTruth]:
    """Create images + manifest + truth file under out_dir; returns both."""
    out = Path(out_dir)
    images = out / "images"
    images.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    makers = {"disc": _disc, "frame": _frame, "stripes": _stripes}
    cluster_sizes = {"disc": 19, "frame": 19, "stripes": 18}  # 56 unique cluster images
    records: list[SampleRecord] = []
    for cls, count in cluster_sizes.items():
        for k in range(count):
            sid = f"{cls}{k:02d}"
            _write(makers[cls](rng), rng, images / f"{sid}.png")
            records.append(SampleRecord(id=sid, path=f"images/{sid}.png", label=cls))

    # exact duplicates: byte-identical copies of two cluster images
    dup_pairs = []
    for src_id, cls in (("disc00", "disc"), ("frame00", "frame")):
        dup_id = f"{src_id}dup"
        (images / f"{dup_id}.png").write_bytes((images / f"{src_id}.png").read_bytes())
        records.append(SampleRecord(id=dup_id, path=f"images/{dup_id}.png", label=cls))
        dup_pairs.append((src_id, dup_id))

    # structural outliers, labeled arbitrarily as an existing class
    outliers = []
    for k in range(2):
        sid = f"odd{k}"
        _write(_outlier(rng, k), rng, images / f"{sid}.png", jitter=False)
        records.append(SampleRecord(id=sid, path=f"images/{sid}.png", label="disc"))
        outliers.append(sid)

    # label swaps: two cluster images traded across classes
    swapped = ("disc01", "frame01")
    records = [
        SampleRecord(rec.id, rec.path, {"disc01": "frame", "frame01": "disc"}.get(rec.id, rec.label))
        for rec in records
    ]

    manifest = DatasetManifest(name="synthetic", samples=tuple(records))
    truth = PlantedTruth(
        irrelevant=tuple(outliers),
        near_duplicate=tuple(dup_pairs),
        label_error=swapped,
    )

    with (out / "manifest.jsonl").open("w", encoding="utf-8") as fh:
        for rec in manifest.samples:
            fh.write(json.dumps({"id": rec.id, "path": rec.path, "label": rec.label}) + "\n")
    (out / "truth.json").write_text(json.dumps(truth.to_dict(), indent=2) + "\n", encoding="utf-8")
    return manifest, truth


def load_truth(path: str | Path) -> PlantedTruth:
    return PlantedTruth.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
