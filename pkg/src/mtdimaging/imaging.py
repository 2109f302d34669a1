"""Topological derivative maps, their multi-frequency average, and scoring."""

from dataclasses import dataclass, field, replace

import numpy as np

from .adjoint import adjoint_basis, build_adjoint, default_order
from .geometry import SamplingGrid, distance_to_crack


class DegenerateMapError(ValueError):
    pass


@dataclass(frozen=True)
class ImageMap:
    """Real map values at the valid points of ``grid``."""

    grid: SamplingGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def kind(self):
        return self.meta.get("kind", "TD")

    def image(self, fill=np.nan):
        """Values on the full n x n lattice (row index = y)."""
        return self.grid.to_image(self.values, fill)

    def argmax_point(self):
        return self.grid.points[int(np.argmax(np.abs(self.values)))]


def td_map(data, grid, f=0, n_max=None):
    """Single-frequency topological derivative

        R(x) = Re sum_m v_m(x) conj(exp(i k theta_m . x)),

    where v_m solves the adjoint Neumann problem with the m-th residual as
    boundary data.  ``data`` may hold several frequencies; ``f`` picks one.
    """
    k = float(data.wavenumbers[f])
    thetas = data.directions
    if len(thetas) == 0:
        raise ValueError("empty direction set")
    n_max = default_order(k) if n_max is None else n_max
    expansion = build_adjoint(data.residual[f], k, n_max)
    basis = adjoint_basis(k, n_max, grid.points)
    v = expansion.coeffs @ basis  # (M, npts)
    back = np.exp(-1j * k * (thetas @ grid.points.T))
    values = np.zeros(len(grid))
    for m in range(len(thetas)):  # fixed summation order
        values += np.real(v[m] * back[m])
    meta = {"kind": "TD", "F": 1, "M": len(thetas),
            "wavenumbers": [k], "crack": data.crack_name,
            "seed": data.seed, "snr_db": data.snr_db, "n": grid.n}
    return ImageMap(grid, values, meta)


def td_maps(data, grid, workers=1):
    """One TD map per frequency in ``data``."""
    idx = range(len(data.wavenumbers))
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda f: td_map(data, grid, f), idx))
    return [td_map(data, grid, f) for f in idx]


def mtd_map(maps):
    """Average of the maps, each divided by its own maximum magnitude."""
    if not maps:
        raise ValueError("need at least one map")
    grid = maps[0].grid
    M = maps[0].meta.get("M")
    total = np.zeros(len(grid))
    ks = []
    for mp in maps:
        if mp.grid is not grid and not np.array_equal(mp.grid.points, grid.points):
            raise ValueError("maps are on different grids")
        if mp.meta.get("M") != M:
            raise ValueError("maps use different direction counts")
        peak = np.max(np.abs(mp.values))
        if peak == 0:
            raise DegenerateMapError("degenerate normalization: map is identically zero")
        total += mp.values / peak
        ks.extend(mp.meta.get("wavenumbers", []))
    meta = dict(maps[0].meta)
    meta.update(kind="MTD", F=len(maps), wavenumbers=ks)
    return ImageMap(grid, total / len(maps), meta)


def top_indices(values, fraction):
    if not (0 < fraction <= 1):
        raise ValueError("top_fraction must lie in (0, 1]")
    count = max(1, int(np.ceil(fraction * len(values) - 1e-9)))
    order = np.argsort(-np.abs(values), kind="stable")
    return order[:count]


def localization_score(image, crack, top_fraction=0.01, radius=0.1, distances=None):
    """Fraction of the top ``top_fraction`` points (by |value|) lying within
    ``radius`` of the crack."""
    top = top_indices(image.values, top_fraction)
    if distances is None:
        d = distance_to_crack(image.grid.points[top], crack)
    else:
        d = np.asarray(distances)[top]
    return float(np.mean(d <= radius))


def distance_to_lines(points, anchors, directions):
    """Distance from each point to the union of lines anchor + s * direction."""
    pts = np.atleast_2d(points)
    out = np.full(len(pts), np.inf)
    for th in np.atleast_2d(directions):
        normal = np.array([-th[1], th[0]])
        # signed offsets of points and of the anchors along the normal
        po = pts @ normal
        ao = np.sort(anchors @ normal)
        pos = np.clip(np.searchsorted(ao, po), 1, len(ao) - 1)
        d = np.minimum(np.abs(po - ao[pos - 1]), np.abs(po - ao[pos]))
        out = np.minimum(out, d)
    return out


def replica_ray_fraction(image, crack, directions, top_fraction=0.01,
                         crack_radius=0.1, ray_radius=0.1, with_count=False):
    """Among the top points that are farther than ``crack_radius`` from the
    crack, the fraction within ``ray_radius`` of a line through a crack
    point along one of ``directions``.

    With no off-crack top points the fraction is vacuously 1; pass
    ``with_count=True`` to also get the number of off-crack points.
    """
    top = top_indices(image.values, top_fraction)
    pts = image.grid.points[top]
    off = distance_to_crack(pts, crack) > crack_radius
    frac = 1.0
    if off.any():
        anchors = np.concatenate(crack.sample(2000))
        d = distance_to_lines(pts[off], anchors, directions)
        frac = float(np.mean(d <= ray_radius))
    return (frac, int(off.sum())) if with_count else frac


def save_csv(image, path):
    """CSV with ``# key = value`` metadata lines, a header, then x, y, value."""
    lines = [f"# {k} = {_fmt(v)}" for k, v in sorted(image.meta.items())]
    lines.append(f"# grid_n = {image.grid.n}")
    lines.append(f"# grid_radius = {image.grid.radius!r}")
    lines.append("x,y,value")
    for (x, y), v in zip(image.grid.points, image.values):
        lines.append(f"{float(x)!r},{float(y)!r},{float(v)!r}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _fmt(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(repr(float(x)) for x in v)
    return str(v)


def load_csv(path):
    from .geometry import make_sampling_grid
    meta, rows = {}, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = val.strip()
            elif line and line != "x,y,value":
                rows.append([float(t) for t in line.split(",")])
    grid = make_sampling_grid(int(meta.pop("grid_n")), float(meta.pop("grid_radius")))
    arr = np.array(rows)
    if len(arr) != len(grid) or not np.array_equal(arr[:, :2], grid.points):
        raise ValueError(f"{path}: points do not match the recorded grid")
    parsed = {}
    for k, v in meta.items():
        parsed[k] = _parse(k, v)
    return ImageMap(grid, arr[:, 2].copy(), parsed)


def _parse(key, v):
    if key == "wavenumbers":
        return [float(t) for t in v.split()]
    if v == "None":
        return None
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v


def save_pgm(image, path):
    """8-bit binary PGM; valid cells map [min, max] affinely to [0, 255] and
    cells outside the disk are written as 0.  Row 0 is the top (largest y)."""
    vals = image.values
    lo, hi = float(vals.min()), float(vals.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    pix = np.zeros(image.grid.mask.shape, dtype=np.uint8)
    pix[image.grid.mask] = np.rint((vals - lo) * scale).astype(np.uint8)
    pix = pix[::-1]
    n_rows, n_cols = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{n_cols} {n_rows}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h = (int(t) for t in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)
