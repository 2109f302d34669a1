"""Four symmetric incident directions against five non-symmetric ones.

    python3 demos/symmetric_vs_odd_directions.py

With M = 4 the directions come in +-theta pairs; M = 5 has no pairs.  Both
runs use 16 frequencies and 15 dB noise drawn from the same seed.
"""
from mtdimaging import forward, geometry, imaging

bgrid = geometry.make_boundary_grid(256)
grid = geometry.make_sampling_grid(128)
freqs = geometry.make_frequencies(16)

for name in ("C1", "CM"):
    crack = geometry.catalog_crack(name)
    dist = geometry.distance_to_crack(grid.points, crack)
    row = []
    for M in (4, 5):
        dirs = geometry.make_directions(M)
        data = forward.add_noise(forward.generate(crack, freqs.wavenumbers, dirs, bgrid), 15.0, 0)
        image = imaging.mtd_map(imaging.td_maps(data, grid))
        tag = "sym" if dirs.symmetric else "odd"
        row.append(f"M={M} ({tag}) {imaging.localization_score(image, crack, 0.01, 0.1, dist):.3f}")
    print(name, "  ".join(row))
