"""Synthetic manifold data and loaders for IDX and CSV files."""
from __future__ import annotations

import csv
import gzip
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class DataFormatError(ValueError):
    pass


@dataclass
class Dataset:
    samples: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 1:
            s = s.reshape(0, 0) if s.size == 0 else s[None, :]
        if s.ndim != 2:
            raise ValueError("samples must form an (n, d) array")
        self.samples = s

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def d(self) -> int:
        return self.samples.shape[1]


def default_basis(seed: int = 2019) -> np.ndarray:
    """Two orthonormal vectors in R^3 from a seeded Gram-Schmidt step."""
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((3, 2)))
    return q.T


@dataclass
class MixtureSpec:
    """Gaussian modes evenly spaced on a circle, optionally placed on a plane in R^3."""

    modes: int = 8
    radius: float = 2.0
    sigma: float = 0.05
    embed: bool = True
    basis: np.ndarray = field(default_factory=default_basis)
    offset: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=float)
        self.offset = np.asarray(self.offset, dtype=float)
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.modes < 1:
            raise ValueError("need at least one mode")
        if self.embed:
            if self.basis.shape != (2, 3) or self.offset.shape != (3,):
                raise ValueError("hyperplane needs a (2, 3) basis and a 3-vector offset")
            if np.max(np.abs(self.basis @ self.basis.T - np.eye(2))) > 1e-10:
                raise ValueError("hyperplane basis is not orthonormal")

    @property
    def d(self) -> int:
        return 3 if self.embed else 2

    def centers_2d(self) -> np.ndarray:
        ang = 2.0 * np.pi * np.arange(self.modes) / self.modes
        return self.radius * np.stack([np.cos(ang), np.sin(ang)], 1)

    def lift(self, pts2) -> np.ndarray:
        pts2 = np.asarray(pts2, dtype=float)
        return self.offset + pts2 @ self.basis if self.embed else pts2

    def centers(self) -> np.ndarray:
        return self.lift(self.centers_2d())

    @property
    def normal(self) -> np.ndarray:
        return np.cross(self.basis[0], self.basis[1])

    def to_dict(self):
        return {"modes": self.modes, "radius": self.radius, "sigma": self.sigma, "embed": self.embed,
                "basis": self.basis.tolist(), "offset": self.offset.tolist()}


def sample_mixture(spec: MixtureSpec, n: int, rng: np.random.Generator, return_modes: bool = False):
    if n < 0:
        raise ValueError("n must be non-negative")
    modes = rng.integers(0, spec.modes, size=n)
    pts = spec.centers_2d()[modes] + spec.sigma * rng.standard_normal((n, 2))
    ds = Dataset(spec.lift(pts) if n else np.zeros((0, spec.d)), provenance=f"ring{spec.modes}")
    return (ds, modes) if return_modes else ds


def _open(path):
    path = Path(path)
    return gzip.open(path, "rb") if path.suffix == ".gz" else open(path, "rb")


def load_idx(path) -> Dataset:
    """Read a big-endian IDX image file; bytes 0..255 map affinely onto [-1, 1]."""
    with _open(path) as fh:
        raw = fh.read()
    if len(raw) >= 4 and struct.unpack(">I", raw[:4])[0] != IDX_IMAGES_MAGIC:
        raise DataFormatError(f"{path}: bad magic 0x{struct.unpack('>I', raw[:4])[0]:08x} at byte offset 0 "
                              f"(expected 0x{IDX_IMAGES_MAGIC:08x})")
    if len(raw) < 16:
        raise DataFormatError(f"{path}: header truncated at byte offset {len(raw)}")
    _, n, rows, cols = struct.unpack(">IIII", raw[:16])
    need = 16 + n * rows * cols
    if len(raw) < need:
        raise DataFormatError(f"{path}: payload truncated at byte offset {len(raw)} (expected {need} bytes)")
    pix = np.frombuffer(raw, dtype=np.uint8, count=n * rows * cols, offset=16)
    return Dataset(pix.reshape(n, rows * cols).astype(float) / 127.5 - 1.0, provenance=f"idx:{path}")


def load_idx_labels(path) -> np.ndarray:
    with _open(path) as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise DataFormatError(f"{path}: header truncated at byte offset {len(raw)}")
    magic, n = struct.unpack(">II", raw[:8])
    if magic != IDX_LABELS_MAGIC:
        raise DataFormatError(f"{path}: bad magic 0x{magic:08x} at byte offset 0")
    if len(raw) < 8 + n:
        raise DataFormatError(f"{path}: payload truncated at byte offset {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8, count=n, offset=8).copy()


def write_idx(path, images) -> None:
    """Write uint8 images of shape (n, rows, cols) as an IDX image file."""
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    data = struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols) + images.tobytes()
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wb") as fh:
        fh.write(data)


def load_csv(path, d: int, header: bool = False) -> Dataset:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not rec:
                continue
            if len(rec) != d:
                raise DataFormatError(f"{path}:{lineno}: expected {d} fields, found {len(rec)}")
            try:
                rows.append([float(v) for v in rec])
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: non-numeric field") from None
    return Dataset(np.array(rows, dtype=float).reshape(len(rows), d), provenance=f"csv:{path}")


def save_csv(path, samples) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.asarray(samples, dtype=float):
            w.writerow([repr(float(v)) for v in row])
