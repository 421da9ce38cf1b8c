"""Standalone SVG figures: 1D space-time diagrams, 2D/sphere ray snapshots
and space-time heatmaps."""
from __future__ import annotations

import math

import numpy as np

from ..geometry import DomainKind, TWO_PI, fold, square_perimeter_point, vec_to_sphere

W, H, PAD = 420, 420, 30
REGION_FILL = "#9ecae1"
RAY_STROKE = "#d62728"


def _doc(width, height, body, title=""):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n')
    t = f"<title>{_esc(title)}</title>\n" if title else ""
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + head + t + "\n".join(body) + "\n</svg>\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _pts(xy) -> str:
    return " ".join(f"{x:.3f},{y:.3f}" for x, y in xy)


def _polyline(xy, stroke=RAY_STROKE, width=1.2):
    if len(xy) < 2:
        return ""
    return f'<polyline points="{_pts(xy)}" fill="none" stroke="{stroke}" stroke-width="{width}"/>'


def save(text: str, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# 1D


def _q_polygon(spec, T):
    knots = np.concatenate([[0.0], spec.breakpoints(0.0, T), [T]])
    left = np.asarray(spec.anchor(knots), dtype=float)
    right = np.minimum(left + spec.a, 1.0)
    return knots, left, right


def space_time_svg(spec, T: float, rays=(), title: str = "") -> str:
    """(x, t) diagram: Q shaded, rays as zigzags of slope +-1.

    ``rays`` holds (x0, d) pairs with d = +-1.
    """
    sx = lambda x: PAD + x * (W - 2 * PAD)
    st = lambda t: H - PAD - t / T * (H - 2 * PAD)
    body = [f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
            f'fill="white" stroke="black"/>']
    if spec is not None:
        knots, left, right = _q_polygon(spec, T)
        poly = [(sx(x), st(t)) for t, x in zip(knots, left)] + \
               [(sx(x), st(t)) for t, x in zip(knots[::-1], right[::-1])]
        body.append(f'<polygon points="{_pts(poly)}" fill="{REGION_FILL}" stroke="#3182bd"/>')
    for x0, d in rays:
        u0 = float(x0)
        # unfolded coordinate u0 + d t hits integers at the bounces
        ks = np.arange(math.floor(min(u0, u0 + d * T)), math.ceil(max(u0, u0 + d * T)) + 1)
        tb = np.sort(np.concatenate([[0.0, T], (ks - u0) / d]))
        tb = tb[(tb >= 0.0) & (tb <= T)]
        body.append(_polyline([(sx(float(fold(u0 + d * t))), st(t)) for t in tb]))
    body.append(f'<text x="{W / 2}" y="{H - 8}" font-size="12" text-anchor="middle">x</text>')
    body.append(f'<text x="10" y="{H / 2}" font-size="12">t</text>')
    return _doc(W, H, body, title)


def heatmap_svg(values, T: float, spec=None, title: str = "") -> str:
    """Heatmap of values[i, j] on t_i (rows, bottom to top) by x_j, with the
    outline of Q overlaid."""
    v = np.asarray(values, dtype=float)
    nt, nx = v.shape if v.ndim == 2 else (0, 0)
    sx = lambda x: PAD + x * (W - 2 * PAD)
    st = lambda t: H - PAD - t / T * (H - 2 * PAD)
    body = [f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
            f'fill="white" stroke="black"/>']
    vmax = float(np.max(v)) if v.size and np.max(v) > 0 else 1.0
    cw, ch = (W - 2 * PAD) / max(nx, 1), (H - 2 * PAD) / max(nt, 1)
    for i in range(nt):
        for j in range(nx):
            g = int(round(255 * (1.0 - min(max(v[i, j] / vmax, 0.0), 1.0))))
            body.append(f'<rect x="{PAD + j * cw:.3f}" y="{H - PAD - (i + 1) * ch:.3f}" '
                        f'width="{cw:.3f}" height="{ch:.3f}" fill="rgb({g},{g},{g})"/>')
    if spec is not None:
        knots, left, right = _q_polygon(spec, T)
        poly = [(sx(x), st(t)) for t, x in zip(knots, left)] + \
               [(sx(x), st(t)) for t, x in zip(knots[::-1], right[::-1])]
        body.append(f'<polygon points="{_pts(poly)}" fill="none" stroke="{RAY_STROKE}" stroke-width="1.5"/>')
    return _doc(W, H, body, title)


# ---------------------------------------------------------------------------
# 2D and sphere snapshots


def _disk_region(spec, t, sp):
    th0 = float(spec.anchor(t))
    a = min(spec.a, TWO_PI - 1e-6)
    if spec.mode == "boundary":
        ang = np.linspace(th0, th0 + a, 64)
        return [_polyline([sp(math.cos(s), math.sin(s)) for s in ang], "#3182bd", 4.0)]
    r_in = 1.0 - spec.eps
    outer = [sp(math.cos(s), math.sin(s)) for s in np.linspace(th0, th0 + a, 64)]
    inner = [sp(r_in * math.cos(s), r_in * math.sin(s)) for s in np.linspace(th0 + a, th0, 64)]
    return [f'<polygon points="{_pts(outer + inner)}" fill="{REGION_FILL}" fill-opacity="0.6" stroke="#3182bd"/>']


def _square_region(spec, t, sp):
    s0 = float(spec.anchor(t))
    if spec.mode == "boundary":
        ss = np.linspace(s0, s0 + spec.a, 64)
        x, y = square_perimeter_point(np.mod(ss, 4.0))
        return [_polyline([sp(float(a), float(b)) for a, b in zip(x, y)], "#3182bd", 4.0)]
    px, py = (float(c) for c in square_perimeter_point(np.mod(s0, 4.0)))
    x0, x1 = max(px - spec.a, 0.0), min(px + spec.a, 1.0)
    y0, y1 = max(py - spec.a, 0.0), min(py + spec.a, 1.0)
    (ax, ay), (bx, by) = sp(x0, y1), sp(x1, y0)
    return [f'<rect x="{ax:.3f}" y="{ay:.3f}" width="{bx - ax:.3f}" height="{by - ay:.3f}" '
            f'fill="{REGION_FILL}" fill-opacity="0.6" stroke="#3182bd"/>']


def _sphere_region(spec, t, sp):
    th0 = float(spec.anchor(t)) % TWO_PI
    th1 = th0 + min(spec.a, TWO_PI)
    out = []
    for lo, hi in ((th0, min(th1, TWO_PI)), (0.0, max(th1 - TWO_PI, 0.0))):
        if hi > lo:
            (ax, ay), (bx, by) = sp(lo, spec.eps), sp(hi, -spec.eps)
            out.append(f'<rect x="{ax:.3f}" y="{ay:.3f}" width="{bx - ax:.3f}" height="{by - ay:.3f}" '
                       f'fill="{REGION_FILL}" fill-opacity="0.6" stroke="#3182bd"/>')
    return out


def snapshot_svg(kind, spec=None, times=(), polyline=None, title: str = "") -> str:
    """Domain outline, the region at the given times and an optional ray
    polyline (points of the domain; 3-vectors on the sphere)."""
    kind = DomainKind.parse(kind)
    body = []
    if kind is DomainKind.DISK:
        sp = lambda x, y: (W / 2 + x * (W / 2 - PAD), H / 2 - y * (H / 2 - PAD))
        body.append(f'<circle cx="{W / 2}" cy="{H / 2}" r="{W / 2 - PAD}" fill="none" stroke="black"/>')
        region = _disk_region
    elif kind is DomainKind.SQUARE:
        sp = lambda x, y: (PAD + x * (W - 2 * PAD), H - PAD - y * (H - 2 * PAD))
        body.append(f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
                    f'fill="none" stroke="black"/>')
        region = _square_region
    elif kind is DomainKind.SPHERE:
        # equirectangular: longitude to the right, latitude up
        sp = lambda lon, lat: (PAD + lon / TWO_PI * (W - 2 * PAD), H / 2 - lat / (math.pi / 2) * (H / 2 - PAD))
        body.append(f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
                    f'fill="none" stroke="black"/>')
        region = _sphere_region
    else:
        sp = lambda x, y=0.0: (PAD + x * (W - 2 * PAD), H / 2)
        body.append(_polyline([sp(0.0), sp(1.0)], "black", 1.0))
        region = None
    if spec is not None and region is not None:
        for t in times:
            body.extend(region(spec, t, sp))
    if polyline is not None and len(polyline):
        p = np.asarray(polyline, dtype=float)
        if kind is DomainKind.SPHERE:
            lon, lat = vec_to_sphere(p)
            # break the line where the longitude wraps
            cut = np.nonzero(np.abs(np.diff(lon)) > math.pi)[0] + 1
            for seg_lon, seg_lat in zip(np.split(lon, cut), np.split(lat, cut)):
                body.append(_polyline([sp(a, b) for a, b in zip(seg_lon, seg_lat)]))
        elif kind is DomainKind.INTERVAL:
            body.append(_polyline([sp(float(x)) for x in p.reshape(-1)]))
        else:
            body.append(_polyline([sp(x, y) for x, y in p[:, :2]]))
    return _doc(W, H, [b for b in body if b], title)
