"""Stable on-disk formats: config hashing, CSV/JSON writers, dumps, SVG quick-looks.

Every data file embeds (config hash, master seed, tool version); with
those fixed, re-running a command reproduces the files byte for byte.
Wall-clock information therefore never goes into data files; it lives in
the run_info.json sidecar.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA_VERSION = 1


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(config: dict) -> str:
    """Hash of the semantic config: output/threads knobs do not change results."""
    stripped = {k: v for k, v in config.items() if k not in ("output", "threads")}
    return hashlib.sha256(canonical_json(stripped).encode()).hexdigest()[:16]


def provenance(config: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config_hash": config_hash(config),
        "master_seed": config.get("seed"),
        "tool_version": __version__,
    }


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, columns, rows, header: dict) -> None:
    """CSV with '# key: value' provenance comments, then a header line, then rows."""
    lines = [f"# {k}: {v}" for k, v in header.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path):
    """Counterpart to write_csv: returns (header dict, columns, list of string rows)."""
    header = {}
    columns = None
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            header[key.strip()] = val.strip()
        elif columns is None:
            columns = line.split(",")
        elif line:
            rows.append(line.split(","))
    return header, columns, rows


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2,
                                     allow_nan=False) + "\n")


def sanitize(obj):
    """Make a payload JSON-strict: numpy scalars to python, non-finite to None."""
    if isinstance(obj, dict):
        return {k: sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else None
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


# ------------------------------------------------------------ raw dumps

def write_config_dump(path, header: dict, configs) -> None:
    """Header line (JSON) then one hex-packed bitstring per kept configuration.

    Bits follow the geometry edge order, most significant bit first within
    each byte (numpy packbits convention).
    """
    recs = [canonical_json({**header, "record": "edge-configs"})]
    for cfg in configs:
        recs.append(np.packbits(np.asarray(cfg, dtype=np.uint8)).tobytes().hex())
    Path(path).write_text("\n".join(recs) + "\n")


def read_config_dump(path):
    lines = Path(path).read_text().splitlines()
    header = json.loads(lines[0])
    n_edges = header["n_edges"]
    out = []
    for line in lines[1:]:
        if not line:
            continue
        bits = np.unpackbits(np.frombuffer(bytes.fromhex(line), dtype=np.uint8))
        out.append(bits[:n_edges].astype(np.uint8))
    return header, out


def write_spin_dump(path, header: dict, spin_configs) -> None:
    """Header line (JSON) then one colour byte per vertex (hex) per record."""
    recs = [canonical_json({**header, "record": "spin-configs"})]
    for spins in spin_configs:
        recs.append(np.asarray(spins, dtype=np.uint8).tobytes().hex())
    Path(path).write_text("\n".join(recs) + "\n")


# ------------------------------------------------------------ svg quick-look

def _svg_text(x, y, s, size=11, anchor="middle") -> str:
    return (f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" '
            f'font-family="monospace" text-anchor="{anchor}">{s}</text>')


def svg_histogram(samples, title: str, annotations: dict) -> str:
    """Self-contained quick-look: sqrt-rule bins with a moment-matched normal overlay."""
    x = np.asarray(samples, dtype=float)
    n = x.shape[0]
    bins = max(int(np.ceil(np.sqrt(n))), 1)
    counts, edges = np.histogram(x, bins=bins)
    width, height, ml, mb, mt = 640.0, 420.0, 50.0, 40.0, 30.0
    plot_w, plot_h = width - ml - 20, height - mb - mt
    top = max(counts.max(), 1)
    mu, sd = x.mean(), x.std()
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
             f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
             '<rect width="100%" height="100%" fill="white"/>']
    lo, hi = edges[0], edges[-1]
    span = hi - lo if hi > lo else 1.0

    def sx(v):
        return ml + (v - lo) / span * plot_w

    def sy(c):
        return mt + plot_h * (1.0 - c / top)

    for i, c in enumerate(counts):
        if c == 0:
            continue
        x0, x1 = sx(edges[i]), sx(edges[i + 1])
        parts.append(f'<rect x="{x0:.2f}" y="{sy(c):.2f}" width="{x1 - x0:.2f}" '
                     f'height="{plot_h - (sy(c) - mt):.2f}" fill="#7aa6c2" stroke="#33546b" stroke-width="0.5"/>')
    if sd > 0:
        grid = np.linspace(lo, hi, 161)
        dens = np.exp(-0.5 * ((grid - mu) / sd) ** 2) / (sd * np.sqrt(2 * np.pi))
        scale = n * (edges[1] - edges[0])
        pts = " ".join(f"{sx(v):.2f},{sy(min(d * scale, top * 1.05)):.2f}"
                       for v, d in zip(grid, dens))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#b03030" stroke-width="1.5"/>')
    parts.append(f'<line x1="{ml:.1f}" y1="{mt + plot_h:.1f}" x2="{ml + plot_w:.1f}" '
                 f'y2="{mt + plot_h:.1f}" stroke="black"/>')
    parts.append(f'<line x1="{ml:.1f}" y1="{mt:.1f}" x2="{ml:.1f}" y2="{mt + plot_h:.1f}" stroke="black"/>')
    parts.append(_svg_text(width / 2, 18, title))
    parts.append(_svg_text(ml, height - 8, f"{lo:.6g}", anchor="start"))
    parts.append(_svg_text(ml + plot_w, height - 8, f"{hi:.6g}", anchor="end"))
    parts.append(_svg_text(ml - 6, mt + 6, f"{top}", size=10, anchor="end"))
    tag = "  ".join(f"{k}={v}" for k, v in annotations.items())
    parts.append(_svg_text(width / 2, height - 8, tag, size=9))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
