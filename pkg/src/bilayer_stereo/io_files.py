"""File ingestion and emission: images, PFM disparity maps, manifests.

Images load as luminance in [0, 1] (Rec. 709 weights for RGB).  Ground-truth
disparities use the Middlebury PFM convention: grayscale 'Pf' header, a
width/height line, a scale line whose sign encodes endianness, rows stored
bottom to top, non-finite values marking holes.  Run manifests are JSON
written atomically with SHA-256 checksums of every input.
"""

import hashlib
import json
import os
import struct
import tempfile

import numpy as np
from PIL import Image, UnidentifiedImageError


class UnsupportedFormat(ValueError):
    pass


class CorruptFile(ValueError):
    pass


class BadHeader(ValueError):
    pass


class TruncatedPayload(ValueError):
    pass


RGB_WEIGHTS = (0.2126, 0.7152, 0.0722)


def load_image(path):
    """Decode an 8/16-bit grayscale or RGB image to luminance in [0, 1]."""
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode in ("L", "P"):
                arr = np.asarray(img.convert("L"), dtype=float) / 255.0
            elif mode in ("I", "I;16", "I;16B", "I;16L"):
                arr = np.asarray(img.convert("I"), dtype=float) / 65535.0
            elif mode in ("RGB", "RGBA"):
                rgb = np.asarray(img.convert("RGB"), dtype=float) / 255.0
                arr = (RGB_WEIGHTS[0] * rgb[..., 0] + RGB_WEIGHTS[1] * rgb[..., 1]
                       + RGB_WEIGHTS[2] * rgb[..., 2])
            else:
                raise UnsupportedFormat(f"{path}: unsupported image mode {mode!r}")
    except UnidentifiedImageError as exc:
        raise CorruptFile(f"{path}: not a decodable image ({exc})") from exc
    except (OSError, SyntaxError) as exc:
        raise CorruptFile(f"{path}: failed to decode ({exc})") from exc
    return np.clip(arr, 0.0, 1.0)


def save_image(path, array):
    """Write a [0, 1] float array as a 16-bit grayscale PNG."""
    a = np.clip(np.asarray(array, dtype=float), 0.0, 1.0)
    img = Image.fromarray((a * 65535.0 + 0.5).astype(np.uint16))
    img.save(path)


def save_mask(path, mask):
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8)).save(path)


def load_mask(path):
    return np.asarray(Image.open(path).convert("L")) > 127


def load_pfm(path):
    """Read a grayscale PFM file; returns float32 with holes as +/-inf/nan."""
    with open(path, "rb") as f:
        header = f.readline().rstrip()
        if header == b"PF":
            raise BadHeader(f"{path}: color PFM ('PF') is not supported")
        if header != b"Pf":
            raise BadHeader(f"{path}: expected 'Pf' header, got {header[:10]!r}")
        dims = f.readline().split()
        if len(dims) != 2:
            raise BadHeader(f"{path}: malformed dimensions line")
        try:
            width, height = int(dims[0]), int(dims[1])
        except ValueError as exc:
            raise BadHeader(f"{path}: malformed dimensions line") from exc
        try:
            scale = float(f.readline().strip())
        except ValueError as exc:
            raise BadHeader(f"{path}: malformed scale line") from exc
        count = width * height
        payload = f.read(4 * count)
        if len(payload) < 4 * count:
            raise TruncatedPayload(
                f"{path}: expected {4 * count} payload bytes, got {len(payload)}")
    endian = "<" if scale < 0 else ">"
    data = np.frombuffer(payload, dtype=np.dtype(endian + "f4"))
    # rows are stored bottom to top
    return data.reshape(height, width)[::-1].copy()


def save_pfm(path, disparity):
    """Write a float array as little-endian grayscale PFM (bottom-up rows)."""
    arr = np.asarray(disparity, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError("disparity must be 2-D")
    height, width = arr.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{width} {height}\n".encode())
        f.write(b"-1.0\n")
        f.write(arr[::-1].astype("<f4").tobytes())


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json_atomic(path, payload):
    """Serialize deterministically (sorted keys) and rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
