"""Where the off-crack bright spots of a four-direction map sit.

    python3 demos/replica_rays.py

The crack is a short piece of C1.  For growing top fractions we count how
many of the top points are away from the crack, and how many of those lie
near a line through the crack parallel to an incident direction.
"""
import numpy as np

from mtdimaging import forward, geometry, imaging

crack = geometry.truncate(geometry.catalog_crack("C1"), -0.1, 0.1)
dirs = geometry.make_directions(4)
grid = geometry.make_sampling_grid(128)
data = forward.generate(crack, geometry.make_frequencies(16).wavenumbers, dirs,
                        geometry.make_boundary_grid(256))
image = imaging.mtd_map(imaging.td_maps(forward.add_noise(data, 15.0, 0), grid))

# share of off-crack grid points that are near a ray at all (the chance level)
dist = geometry.distance_to_crack(grid.points, crack)
off = dist > 0.1
anchors = np.concatenate(crack.sample(2000))
base = np.mean(imaging.distance_to_lines(grid.points[off], anchors, dirs.directions) <= 0.1)
print(f"chance level {base:.3f}")

for fr in (0.01, 0.02, 0.05, 0.1):
    frac, n_off = imaging.replica_ray_fraction(image, crack, dirs.directions, top_fraction=fr,
                                               with_count=True)
    print(f"top {fr:4.0%}: {n_off:4d} off-crack points, {frac:.3f} of them on rays")
