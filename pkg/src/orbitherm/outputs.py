"""Result emission (CSV, JSON envelope, SVG) and the on-disk table cache."""
import csv
import io
import json
import os
from pathlib import Path

import numpy as np

from .config import SCHEMA_VERSION, TOOL_VERSION
from .errors import StaleTableError
from .words import parse_word

EXIT_OK, EXIT_ERROR, EXIT_VERDICT = 0, 1, 2


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def to_csv(header, rows):
    """RFC-4180 text with '.' decimals and LF line endings."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def envelope(result, cfg_hash):
    return {
        "config_hash": cfg_hash,
        "tool_version": TOOL_VERSION,
        "schema_version": SCHEMA_VERSION,
        "driver": result.name,
        "header": list(result.header),
        "rows": _jsonable(result.rows),
        "verdicts": [v.to_json() for v in result.verdicts],
        "failures": [v.to_json() for v in result.verdicts if not v.passed],
        "extra": _jsonable(result.extra),
    }


def svg_chart(header, rows, width=640, height=400):
    """Static line chart: first column on x, every numeric column as a line."""
    pts = [[float(v) for v in r] for r in rows
           if all(isinstance(v, (int, float, np.floating, np.integer)) for v in r)]
    pad = 40
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    if len(pts) >= 2:
        a = np.array(pts)
        x = a[:, 0]
        ys = a[:, 1:]
        finite = np.isfinite(ys)
        y_lo = float(ys[finite].min()) if finite.any() else 0.0
        y_hi = float(ys[finite].max()) if finite.any() else 1.0
        if y_hi == y_lo:
            y_hi = y_lo + 1.0
        x_lo, x_hi = float(x.min()), float(x.max())
        if x_hi == x_lo:
            x_hi = x_lo + 1.0
        sx = lambda v: pad + (v - x_lo) / (x_hi - x_lo) * (width - 2 * pad)
        sy = lambda v: height - pad - (v - y_lo) / (y_hi - y_lo) * (height - 2 * pad)
        colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
        for j in range(ys.shape[1]):
            p = " ".join(f"{sx(xi):.2f},{sy(yi):.2f}" for xi, yi in zip(x, ys[:, j]) if np.isfinite(yi))
            out.append(f'<polyline fill="none" stroke="{colors[j % len(colors)]}" points="{p}"/>')
            out.append(f'<text x="{width - pad}" y="{pad + 14 * j}" font-size="11" text-anchor="end" '
                       f'fill="{colors[j % len(colors)]}">{header[j + 1]}</text>')
        out.append(f'<text x="{width / 2}" y="{height - 8}" font-size="11" text-anchor="middle">{header[0]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_outputs(result, cfg, out_dir, svg=None):
    """Write <stem>.csv, <stem>.json (and <stem>.svg); returns the exit code."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = cfg.outputs.get("stem", result.name)
        csv_text = to_csv(result.header, result.rows)
        (out_dir / f"{stem}.csv").write_bytes(csv_text.encode())
        env = envelope(result, cfg.hash)
        (out_dir / f"{stem}.json").write_text(json.dumps(env, indent=1, sort_keys=True) + "\n")
        if svg if svg is not None else cfg.outputs.get("svg", False):
            (out_dir / f"{stem}.svg").write_text(svg_chart(result.header, result.rows))
    except OSError as exc:
        raise OSError(f"cannot write outputs under {out_dir}: {exc}") from exc
    return EXIT_OK if result.ok else EXIT_VERDICT


# ---------------------------------------------------------------------------
# cache: <cache_dir>/<config_hash>/<table>.json


def cache_dir(explicit=None):
    return Path(explicit or os.environ.get("ORBITHERM_CACHE") or "cache")


def table_path(root, cfg_hash, name="table"):
    return Path(root) / cfg_hash / f"{name}.json"


def save_table(table, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(table.to_json(), sort_keys=True))
    os.replace(tmp, path)  # single writer: readers never see a partial file


def load_table(table, path):
    """Fill cached Birkhoff integrals into ``table``; raises StaleTableError
    when the cached header does not describe this table."""
    obj = json.loads(Path(path).read_text())
    head = obj["header"]
    mine = table.header()
    for k in ("schema_version", "group_hash", "n_range", "step"):
        if head.get(k) != mine.get(k):
            raise StaleTableError(f"cached table differs in {k}")
    by_n = {}
    for row in obj["classes"]:
        by_n.setdefault(row["n"], []).append(row)
    for n, rows in by_n.items():
        words = [c.word for c in table.classes[n]]
        if [parse_word(r["class"]) for r in rows] != words:
            raise StaleTableError(f"class list differs at n={n}")
    for pid in head["potential_ids"]:
        table.birkhoff[pid] = {n: np.array([r["birkhoff"][pid] for r in rows]) for n, rows in by_n.items()}
    return head["potential_ids"]
