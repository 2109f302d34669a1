import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from mtdimaging import forward as fw
from mtdimaging import geometry as g
from mtdimaging import imaging as im

K07 = 2 * np.pi / 0.7
K04 = 2 * np.pi / 0.4


@pytest.fixture(scope="module")
def bgrid():
    return g.make_boundary_grid(256)


@pytest.fixture(scope="module")
def grid64():
    return g.make_sampling_grid(64)


@pytest.fixture(scope="module")
def c1_data(bgrid):
    return fw.generate(g.catalog_crack("C1"), [K07, 12.0], g.make_directions(4), bgrid, 48)


def _points_grid(points):
    base = g.make_sampling_grid(16)
    return g.SamplingGrid(base.n, base.axis, base.mask, np.asarray(points, float), 0.95)


def test_zero_residual_gives_zero_map(bgrid, grid64):
    data = fw.solve_forward(None, K07, g.make_directions(4), bgrid)
    assert np.all(im.td_map(data, grid64).values == 0)


def test_td_scales_with_residual(c1_data, grid64):
    one = c1_data.select(0)
    one = fw.FieldData(one.wavenumbers, one.directions[:1], one.angles,
                       one.u_back[:, :1], one.residual[:, :1])
    base = im.td_map(one, grid64).values
    for alpha in (0.5, 3.0):
        scaled = fw.FieldData(one.wavenumbers, one.directions, one.angles,
                              one.u_back, alpha * one.residual)
        assert np.allclose(im.td_map(scaled, grid64).values, alpha * base, rtol=1e-12, atol=1e-14)


def test_td_meta_and_finiteness(c1_data, grid64):
    mp = im.td_map(c1_data, grid64, f=1)
    assert mp.kind == "TD" and mp.meta["M"] == 4 and mp.meta["wavenumbers"] == [12.0]
    assert np.all(np.isfinite(mp.values))
    assert mp.image().shape == (64, 64)


def test_empty_directions(c1_data, grid64):
    empty = fw.FieldData(c1_data.wavenumbers, np.zeros((0, 2)), c1_data.angles,
                         c1_data.u_back[:, :0], c1_data.residual[:, :0])
    with pytest.raises(ValueError):
        im.td_map(empty, grid64)


def test_single_frequency_argmax_near_crack(bgrid):
    crack = g.catalog_crack("C1")
    data = fw.solve_forward(crack, K04, g.make_directions(32), bgrid, 64)
    grid = g.make_sampling_grid(128)
    mp = im.td_map(data, grid)
    assert g.distance_to_crack(mp.argmax_point(), crack) <= 0.1


def test_direction_pair_symmetry(bgrid, grid64):
    crack = g.catalog_crack("CM")
    dirs = g.make_directions(8)
    neg = g.directions_from_vectors(-dirs.directions)
    a = im.td_map(fw.solve_forward(crack, K07, dirs, bgrid, 48), grid64).values
    b = im.td_map(fw.solve_forward(crack, K07, neg, bgrid, 48), grid64).values
    assert np.max(np.abs(a - b)) < 1e-8 * max(1.0, np.max(np.abs(a)))


def test_nucleation_oracle(bgrid):
    # plant a tiny sound-soft crack at x: the first-order misfit change,
    # times ln(l), is proportional to the TD value and independent of the
    # trial crack's orientation
    data = fw.solve_forward(g.catalog_crack("C1"), K07, g.make_directions(4), bgrid, 64)
    pts = np.array([[0.0, 0.0], [0.3, -0.2], [-0.4, 0.1], [0.2, 0.6],
                    [-0.1, -0.5], [0.5, 0.3], [-0.6, -0.3]])
    R = im.td_map(data, _points_grid(pts)).values
    ell = 1e-8
    lin = []
    for p in pts:
        vals = []
        for ang in (0.0, 1.0):
            t = np.array([np.cos(ang), np.sin(ang)])
            trial = g.segment_crack(p - ell * t, p + ell * t)
            d = fw.solve_forward(trial, K07, g.make_directions(4), bgrid, 16).residual[0]
            vals.append(-np.real(np.sum(data.residual[0] * np.conj(d))) * 2 * np.pi / len(bgrid))
        assert abs(vals[0] - vals[1]) < 1e-6 * abs(vals[0])
        lin.append(vals[0] * np.log(ell))
    ratio = np.array(lin) / R
    assert np.all(np.abs(ratio / np.median(ratio) - 1) < 0.2)
    # ln(l) < 0: the misfit change itself has the sign of R
    assert np.corrcoef(lin, R)[0, 1] < -0.99


def test_mtd_single_frequency(c1_data, grid64):
    td = im.td_map(c1_data, grid64, 0)
    mtd = im.mtd_map([td])
    assert mtd.kind == "MTD"
    assert np.max(np.abs(mtd.values)) == 1.0
    assert np.allclose(mtd.values, td.values / np.max(np.abs(td.values)), rtol=0, atol=0)


def test_mtd_identical_maps(c1_data, grid64):
    td = im.td_map(c1_data, grid64, 1)
    mtd = im.mtd_map([td, td, td])
    assert np.allclose(mtd.values, td.values / np.max(np.abs(td.values)), atol=1e-15)


def test_mtd_bounded(c1_data, grid64):
    mtd = im.mtd_map(im.td_maps(c1_data, grid64))
    assert np.max(np.abs(mtd.values)) <= 1.0
    assert mtd.meta["F"] == 2 and len(mtd.meta["wavenumbers"]) == 2


def test_mtd_errors(c1_data, grid64, bgrid):
    zero = im.td_map(fw.solve_forward(None, K07, g.make_directions(4), bgrid), grid64)
    td = im.td_map(c1_data, grid64, 0)
    with pytest.raises(im.DegenerateMapError, match="degenerate normalization"):
        im.mtd_map([td, zero])
    with pytest.raises(ValueError):
        im.mtd_map([])
    other = im.ImageMap(g.make_sampling_grid(32), np.ones(len(g.make_sampling_grid(32))), {"M": 4})
    with pytest.raises(ValueError):
        im.mtd_map([td, other])


def test_td_maps_worker_count_independent(c1_data, grid64):
    a = im.td_maps(c1_data, grid64, workers=1)
    b = im.td_maps(c1_data, grid64, workers=2)
    for x, y in zip(a, b):
        assert np.array_equal(x.values, y.values)


def test_score_all_mass_on_crack(grid64):
    crack = g.catalog_crack("C2")
    dist = g.distance_to_crack(grid64.points, crack)
    values = np.where(dist < 0.02, 1.0, 0.0)
    mp = im.ImageMap(grid64, values)
    assert im.localization_score(mp, crack, 0.01, 0.1) == 1.0


def test_score_top_fraction_one(grid64):
    crack = g.catalog_crack("C1")
    dist = g.distance_to_crack(grid64.points, crack)
    mp = im.ImageMap(grid64, np.random.default_rng(0).normal(size=len(grid64)))
    assert im.localization_score(mp, crack, 1.0, 0.1) == pytest.approx(np.mean(dist <= 0.1))


def test_score_uniform_random_map_monte_carlo():
    grid = g.make_sampling_grid(128)
    crack = g.catalog_crack("C1")
    dist = g.distance_to_crack(grid.points, crack)
    q = np.mean(dist <= 0.1)
    rng = np.random.default_rng(7)
    count = int(np.ceil(0.05 * len(grid)))
    scores = [im.localization_score(im.ImageMap(grid, rng.uniform(size=len(grid))), crack,
                                    0.05, 0.1, distances=dist) for _ in range(50)]
    sigma = np.sqrt(q * (1 - q) / count)
    assert abs(np.mean(scores) - q) < 3 * sigma / np.sqrt(50) + 1e-3
    assert all(abs(s - q) < 4 * sigma for s in scores)


@given(st.integers(1, 500), st.floats(1e-4, 1.0))
def test_top_indices_count(n, fraction):
    idx = im.top_indices(np.arange(n, dtype=float), fraction)
    assert len(idx) == max(1, int(np.ceil(fraction * n - 1e-9)))
    assert idx[0] == n - 1


def test_top_fraction_validation():
    with pytest.raises(ValueError):
        im.top_indices(np.ones(4), 0.0)
    with pytest.raises(ValueError):
        im.top_indices(np.ones(4), 1.5)


def test_distance_to_lines():
    anchors = np.array([[0.0, 0.0]])
    dirs = np.array([[1.0, 0.0], [0.0, 1.0]])
    pts = np.array([[0.5, 0.2], [0.3, 0.7], [-0.1, -0.05]])
    assert np.allclose(im.distance_to_lines(pts, anchors, dirs), [0.2, 0.3, 0.05])


def test_replica_fraction_counts_rays(grid64):
    crack = g.segment_crack([-0.02, 0.0], [0.02, 0.0])
    pts = grid64.points
    on_ray = (np.abs(pts[:, 1]) < 0.03) & (np.abs(pts[:, 0]) > 0.3)
    mp = im.ImageMap(grid64, on_ray.astype(float))
    frac = im.replica_ray_fraction(mp, crack, np.array([[1.0, 0.0]]), top_fraction=0.01)
    assert frac == 1.0


def test_csv_roundtrip(c1_data, grid64, tmp_path):
    mp = im.mtd_map(im.td_maps(c1_data, grid64))
    path = tmp_path / "m.csv"
    im.save_csv(mp, path)
    back = im.load_csv(path)
    assert np.max(np.abs(back.values - mp.values)) <= 1e-12
    assert np.array_equal(back.grid.points, mp.grid.points)
    assert back.meta["kind"] == "MTD" and back.meta["M"] == 4
    assert back.meta["wavenumbers"] == mp.meta["wavenumbers"]
    text = path.read_text().splitlines()
    assert text[0].startswith("# ") and "x,y,value" in text


def test_pgm_endpoints(c1_data, grid64, tmp_path):
    mp = im.td_map(c1_data, grid64, 0)
    path = tmp_path / "m.pgm"
    im.save_pgm(mp, path)
    pix = im.read_pgm(path)
    assert pix.shape == (64, 64)
    img = mp.image()[::-1]
    mask = grid64.mask[::-1]
    assert pix[mask][np.argmax(img[mask])] == 255
    assert pix[mask][np.argmin(img[mask])] == 0
    assert np.all(pix[~mask] == 0)
    # affine and monotone in the value
    order = np.argsort(img[mask])
    assert np.all(np.diff(pix[mask][order].astype(int)) >= 0)
    assert stats.spearmanr(img[mask], pix[mask]).statistic > 0.999
