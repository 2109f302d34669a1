"""Single-frequency TD against the normalized multi-frequency map on the
two-piece crack CM.

    python3 demos/single_vs_multi_frequency.py [out_dir]

Prints the localization score at the top 1% and 5% of grid points for both
maps and writes them as PGM images when an output directory is given.
"""
import sys
from pathlib import Path

import numpy as np

from mtdimaging import forward, geometry, imaging

out = Path(sys.argv[1]) if len(sys.argv) > 1 else None
crack = geometry.catalog_crack("CM")
bgrid = geometry.make_boundary_grid(256)
grid = geometry.make_sampling_grid(128)

# one frequency (k = 2 pi / 0.4), many directions
data = forward.add_noise(
    forward.solve_forward(crack, 2 * np.pi / 0.4, geometry.make_directions(32), bgrid), 15.0, 0)
td = imaging.td_map(data, grid)

# sixteen frequencies, half as many directions
freqs = geometry.make_frequencies(16)
data = forward.add_noise(
    forward.generate(crack, freqs.wavenumbers, geometry.make_directions(16), bgrid), 15.0, 0)
mtd = imaging.mtd_map(imaging.td_maps(data, grid))

dist = geometry.distance_to_crack(grid.points, crack)
for label, image in (("TD  k=2pi/0.4 M=32", td), ("MTD F=16 M=16    ", mtd)):
    s1 = imaging.localization_score(image, crack, 0.01, 0.1, dist)
    s5 = imaging.localization_score(image, crack, 0.05, 0.1, dist)
    print(f"{label}  top1% {s1:.3f}  top5% {s5:.3f}")
    if out:
        out.mkdir(parents=True, exist_ok=True)
        imaging.save_pgm(image, out / f"{image.kind.lower()}_cm.pgm")
