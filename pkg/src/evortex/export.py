"""File emission: node CSV, 16-bit grayscale PGM/PNG images, JSON."""

import json
import math
from pathlib import Path

import numpy as np
from PIL import Image

CSV_HEADER = "x,y,re,im,rho,jx,jy,jvx,jvy,jpx,jpy"
_FMT = "{:.10e}"


def fmt(v):
    """Fixed, locale-independent float text used in every CSV cell."""
    v = float(v)
    if v == 0.0:
        v = 0.0  # drop the sign of negative zero
    return _FMT.format(v)


def field_csv(field, current):
    """CSV text of a Cartesian or polar field and its current split, row-major."""
    g = field.grid
    cols = [g.x, g.y, field.psi.real, field.psi.imag, current.rho,
            *current.j, *current.jv, *current.jp]
    flat = [np.asarray(c, dtype=float).ravel() for c in cols]
    lines = [CSV_HEADER]
    for row in zip(*flat):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def table_csv(header, rows):
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(v if isinstance(v, str) else (str(v) if isinstance(v, (int, np.integer)) else fmt(v))
                            for v in row))
    return "\n".join(out) + "\n"


def to_uint16(values, lo, hi):
    """Linear map [lo, hi] -> [0, 65535] with clipping."""
    values = np.asarray(values, dtype=float)
    span = hi - lo
    if span <= 0:
        return np.zeros(values.shape, dtype=np.uint16)
    scaled = np.clip((values - lo) / span, 0.0, 1.0) * 65535.0
    return np.rint(scaled).astype(np.uint16)


def density_image(field):
    rho = field.rho
    return to_uint16(rho, 0.0, float(np.max(rho)))


def phase_image(field):
    return to_uint16(np.angle(field.psi), -math.pi, math.pi)


def _top_down(img):
    # Arrays are indexed [iy, ix] with y increasing; images put +y at the top.
    return np.ascontiguousarray(img[::-1])


def write_pgm(path, img):
    """Binary 16-bit PGM (P5, maxval 65535, big-endian samples)."""
    img = _top_down(img)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(img.astype(">u2").tobytes())


def read_pgm(path):
    """Inverse of `write_pgm` (returns the array in [iy, ix] order)."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = map(int, parts[1].split())
    arr = np.frombuffer(parts[3], dtype=">u2").reshape(h, w)
    return arr[::-1].astype(np.uint16)


def write_png(path, img):
    """16-bit grayscale PNG."""
    img = _top_down(img).astype(np.uint16)
    Image.fromarray(img).save(path, format="PNG")


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


def dumps(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return None
        return float(fmt(v))
    return obj


def write_images(field, stem, formats):
    """Write rho and phase images of a Cartesian field; returns the paths written."""
    if field.grid.kind != "cartesian":
        return []
    written = []
    for kind, img in (("rho", density_image(field)), ("phase", phase_image(field))):
        if "pgm" in formats:
            p = Path(f"{stem}_{kind}.pgm")
            write_pgm(p, img)
            written.append(p)
        if "png" in formats:
            p = Path(f"{stem}_{kind}.png")
            write_png(p, img)
            written.append(p)
    return written
