"""Data ingestion and synthetic generators for the experiment runners."""

import struct

import numpy as np

from .errors import IdxFormatError, ValidationError
from .manifolds import Spd

IDX_MAGIC_IMAGES = 2051
IDX_MAGIC_LABELS = 2049


def load_idx(path):
    """Read a big-endian IDX file.

    Magic 2051 yields float64 images shaped (count, rows, cols) with pixel
    bytes scaled to [0, 1]; magic 2049 yields int64 labels shaped (count,).
    Returns ``(array, kind)`` with kind in {"images", "labels"}.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8:
        raise IdxFormatError(f"{path}: too short for an IDX header")
    magic = struct.unpack(">I", blob[:4])[0]
    if magic == IDX_MAGIC_IMAGES:
        ndim, kind = 3, "images"
    elif magic == IDX_MAGIC_LABELS:
        ndim, kind = 1, "labels"
    else:
        raise IdxFormatError(f"{path}: bad magic {magic} (expected 2051 or 2049)")
    header_len = 4 + 4 * ndim
    if len(blob) < header_len:
        raise IdxFormatError(f"{path}: truncated dimension header")
    dims = struct.unpack(f">{ndim}I", blob[4:header_len])
    total = 1
    for d in dims:
        if d > 2**31:
            raise IdxFormatError(f"{path}: dimension {d} overflows")
        total *= d
    if total > 2**33:
        raise IdxFormatError(f"{path}: payload of {total} bytes is implausible")
    payload = blob[header_len:]
    if len(payload) != total:
        raise IdxFormatError(
            f"{path}: payload has {len(payload)} bytes, header promises {total}"
        )
    raw = np.frombuffer(payload, dtype=np.uint8)
    if kind == "images":
        return raw.reshape(dims).astype(np.float64) / 255.0, kind
    return raw.astype(np.int64), kind


def write_idx(path, array, kind):
    """Write images (uint8-scaled) or labels in IDX format."""
    array = np.asarray(array)
    if kind == "images":
        if array.ndim != 3:
            raise ValidationError("images must be (count, rows, cols)")
        data = array
        if data.dtype != np.uint8:
            data = np.clip(np.round(np.asarray(data, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
        header = struct.pack(">IIII", IDX_MAGIC_IMAGES, *data.shape)
    elif kind == "labels":
        if array.ndim != 1:
            raise ValidationError("labels must be 1-D")
        data = array.astype(np.uint8)
        header = struct.pack(">II", IDX_MAGIC_LABELS, data.shape[0])
    else:
        raise ValidationError(f"unknown IDX kind {kind!r}")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def load_image_label_pair(image_path, label_path):
    """Load and pair IDX images with IDX labels, checking counts."""
    images, kind_i = load_idx(image_path)
    if kind_i != "images":
        raise IdxFormatError(f"{image_path}: expected an image file")
    labels, kind_l = load_idx(label_path)
    if kind_l != "labels":
        raise IdxFormatError(f"{label_path}: expected a label file")
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(
            f"count mismatch: {images.shape[0]} images vs {labels.shape[0]} labels"
        )
    return images, labels


def load_vectors_csv(path):
    """Vectors from CSV rows: one vector per line, comma-separated, no header."""
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from exc
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValidationError(
                    f"{path}:{lineno}: expected {width} columns, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise ValidationError(f"{path}: no vectors found")
    return np.asarray(rows, dtype=np.float64)


def rotation_in_plane(dim, degrees):
    """Rotation by ``degrees`` in the plane of the first two coordinates."""
    theta = np.deg2rad(degrees)
    r = np.eye(dim)
    r[0, 0] = r[1, 1] = np.cos(theta)
    r[0, 1] = -np.sin(theta)
    r[1, 0] = np.sin(theta)
    return r


def synth_spd_sequences(classes_deg, per_class, frames, dim, noise, seed):
    """Labeled SPD sequences whose classes differ by per-frame rotation rate.

    Class with orientation ``a`` produces frame t as
    R(t*a) D R(t*a)^T + noise * sym(G_t), eigenvalue-clamped to SPD, where
    D = diag(dim, dim-1, ..., 1) and R rotates the first two coordinates.
    Returns (sequences (N, frames, dim, dim), labels (N,)).
    """
    classes_deg = list(classes_deg)
    if dim < 2:
        raise ValidationError("dim must be >= 2")
    if frames < 2:
        raise ValidationError("frames must be >= 2")
    if len(set(classes_deg)) != len(classes_deg) or not classes_deg:
        raise ValidationError("orientation classes must be distinct and nonempty")
    if per_class < 1:
        raise ValidationError("per_class must be >= 1")
    if noise < 0:
        raise ValidationError("noise must be nonnegative")
    rng = np.random.default_rng(seed)
    spd = Spd(dim)
    base = np.diag(np.arange(dim, 0, -1, dtype=np.float64))
    sequences = []
    labels = []
    for label, angle in enumerate(classes_deg):
        for _ in range(per_class):
            seq = np.empty((frames, dim, dim))
            for t in range(frames):
                r = rotation_in_plane(dim, t * angle)
                frame = r @ base @ r.T
                if noise > 0:
                    g = rng.normal(size=(dim, dim))
                    frame = frame + noise * 0.5 * (g + g.T)
                seq[t] = spd.project(frame)
            sequences.append(seq)
            labels.append(label)
    return np.stack(sequences), np.asarray(labels, dtype=np.int64)


def split_indices(count, test_fraction, seed):
    """Deterministic shuffled train/test index split."""
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    order = rng.permutation(count)
    n_test = max(1, int(round(count * test_fraction)))
    return np.sort(order[n_test:]), np.sort(order[:n_test])
