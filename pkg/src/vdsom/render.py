"""Dependency-free emitters: CSV logs, SVG map snapshots, PGM weight sheets.

Every writer is deterministic so that identical inputs give identical bytes.
"""

import numpy as np

CSV_HEADER = "step,sigma,distortion,objective"


def _g9(v):
    return f"{float(v):.9g}"


def write_csv(log, path):
    lines = [CSV_HEADER]
    for r in log.records:
        lines.append(f"{r.step},{_g9(r.sigma)},{_g9(r.distortion)},{_g9(r.objective)}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    """Parse a log CSV back into a list of ``(step, sigma, distortion, objective)``."""
    with open(path) as fh:
        header, *rows = fh.read().splitlines()
    if header != CSV_HEADER:
        raise ValueError(f"unexpected header {header!r}")
    out = []
    for row in rows:
        step, *vals = row.split(",")
        out.append((int(step), *map(float, vals)))
    return out


def write_table_csv(header, rows, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_g9(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def write_map_svg(grid, weights, path, samples=None, size=480):
    """Draw samples (gray), weights (black) and lattice edges in observation space.

    Wrap-around edges of a toroidal grid are not drawn.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 2 or weights.shape[1] != 2:
        raise ValueError(f"SVG maps need 2D weights, got shape {weights.shape}")
    points = weights if samples is None else np.vstack([weights, np.asarray(samples, float)])
    lo, hi = points.min(axis=0), points.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    lo, span = lo - 0.05 * span, 1.1 * span
    scale = size / span.max()
    width, height = span * scale

    def xy(p):
        # flip y so the picture reads like a plot
        return f"{(p[0] - lo[0]) * scale:.3f}", f"{height - (p[1] - lo[1]) * scale:.3f}"

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width:.3f}" height="{height:.3f}" viewBox="0 0 {width:.3f} {height:.3f}">',
        f'<rect width="{width:.3f}" height="{height:.3f}" fill="white"/>',
    ]
    if samples is not None:
        out.append('<g class="samples" fill="#999999">')
        for p in np.asarray(samples, dtype=float):
            x, y = xy(p)
            out.append(f'<circle cx="{x}" cy="{y}" r="1.5"/>')
        out.append("</g>")
    out.append('<g class="edges" stroke="black" stroke-width="0.8">')
    for i, j in grid.edges(include_wrap=False):
        (x1, y1), (x2, y2) = xy(weights[i]), xy(weights[j])
        out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>')
    out.append("</g>")
    out.append('<g class="weights" fill="black">')
    for p in weights:
        x, y = xy(p)
        out.append(f'<circle cx="{x}" cy="{y}" r="2.5"/>')
    out.append("</g>")
    out.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


def tile_sheet(weights, rows, cols, grid_rows, grid_cols):
    """Arrange per-node images into one uint8 array, each tile min-max scaled."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (grid_rows * grid_cols, rows * cols):
        raise ValueError(
            f"weights of shape {weights.shape} do not form a {grid_rows}x{grid_cols} "
            f"sheet of {rows}x{cols} tiles"
        )
    sheet = np.zeros((grid_rows * rows, grid_cols * cols), dtype=np.uint8)
    for k, w in enumerate(weights):
        lo, hi = w.min(), w.max()
        if hi > lo:
            pix = np.floor((w - lo) / (hi - lo) * 255.0 + 0.5)
        else:
            pix = np.full_like(w, 128.0)
        r, c = divmod(k, grid_cols)
        sheet[r * rows : (r + 1) * rows, c * cols : (c + 1) * cols] = pix.reshape(rows, cols)
    return sheet


def write_weight_tiles_pgm(weights, rows, cols, grid_rows, grid_cols, path):
    sheet = tile_sheet(weights, rows, cols, grid_rows, grid_cols)
    h, w = sheet.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(sheet.tobytes())
