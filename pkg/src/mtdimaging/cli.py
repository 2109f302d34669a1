"""Command-line front end: generate data, image it, score it, validate the
identity suite, export maps, or run a whole experiment at once.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 validation failure.
"""

import argparse
import dataclasses
import os
import platform
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, forward, geometry, imaging, oracle
from .adjoint import AliasingError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 2, 3, 4
OUTPUT_ROOT_ENV = "MTD_OUTPUT_ROOT"


class ConfigError(ValueError):
    pass


@dataclasses.dataclass
class RunConfig:
    crack: str = "C1"
    M: int = 16
    F: int = 16
    lam_min: float = 0.4
    lam_max: float = 0.7
    snr_db: object = 15.0
    seed: int = 0
    n: int = 128
    P: int = 256
    N: int = 64
    mode: str = "MTD"
    name: str = ""

    def validate(self):
        if self.M < 1:
            raise ConfigError("M must be >= 1")
        if self.F < 1:
            raise ConfigError("F must be >= 1")
        if not 0 < self.lam_min <= self.lam_max:
            raise ConfigError("need 0 < lam_min <= lam_max")
        if self.snr_db is not None and not np.isfinite(self.snr_db):
            raise ConfigError("snr_db must be finite or 'none'")
        if self.n < 16:
            raise ConfigError("grid resolution n must be >= 16")
        if self.P < 64:
            raise ConfigError("boundary points P must be >= 64")
        if self.N < 4:
            raise ConfigError("Nystrom nodes N must be >= 4")
        if self.mode not in ("TD", "MTD"):
            raise ConfigError("mode must be TD or MTD")
        if self.mode == "TD" and self.F != 1:
            raise ConfigError("TD mode images a single frequency (set F = 1)")
        return self

    def run_name(self):
        if self.name:
            return self.name
        stem = Path(self.crack).stem if os.sep in self.crack else self.crack
        return f"{stem}-F{self.F}-M{self.M}-{self.mode}-s{self.seed}"


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(key, value):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    value = value.strip() if isinstance(value, str) else value
    if key == "snr_db":
        if value is None or (isinstance(value, str) and value.lower() in ("none", "inf", "")):
            return None
        return float(value)
    kind = type(_FIELDS[key].default)
    try:
        if kind is int:
            return int(value)
        if kind is float:
            return float(value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    return str(value).upper() if key == "mode" else str(value)


def parse_config_text(text):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        out[key.strip()] = _coerce(key.strip(), value)
    return out


def format_config(cfg):
    lines = []
    for key in _FIELDS:
        v = getattr(cfg, key)
        lines.append(f"{key} = {'none' if v is None else v}")
    return "\n".join(lines) + "\n"


# figure name -> config overrides (everything else at defaults: 15 dB, seed 0)
FIGURES = {
    "gamma1-left": dict(crack="C1", F=16, M=4),
    "gamma1-right": dict(crack="C1", F=16, M=16),
    "gamma2-left": dict(crack="C2", F=16, M=4),
    "gamma2-right": dict(crack="C2", F=16, M=16),
    "gammaM-top-left": dict(crack="CM", F=1, M=32, mode="TD"),
    "gammaM-top-right": dict(crack="CM", F=1, M=64, mode="TD"),
    "gammaM-bottom-left": dict(crack="CM", F=16, M=4),
    "gammaM-bottom-right": dict(crack="CM", F=16, M=16),
    "nonsym1-left": dict(crack="C1", F=16, M=5),
    "nonsym1-right": dict(crack="CM", F=16, M=5),
    "nonsym2-left": dict(crack="C1", F=16, M=15),
    "nonsym2-right": dict(crack="CM", F=16, M=15),
    "gamma12-6416-left": dict(crack="C1", F=16, M=64),
    "gamma12-6416-right": dict(crack="C2", F=16, M=64),
    "gamma12-6464-left": dict(crack="C1", F=64, M=64),
    "gamma12-6464-right": dict(crack="C2", F=64, M=64),
    "gammaM-64-left": dict(crack="CM", F=16, M=64),
    "gammaM-64-right": dict(crack="CM", F=64, M=64),
    "gammaA-1": dict(crack="C3", F=16, M=16),
    "gammaA-2": dict(crack="C3", F=16, M=64),
    "gammaA-3": dict(crack="C3", F=64, M=64),
    "gammaB-1": dict(crack="C4", F=16, M=16),
    "gammaB-2": dict(crack="C4", F=16, M=64),
    "gammaB-3": dict(crack="C4", F=64, M=64),
}


def figure_config(name):
    if name not in FIGURES:
        raise ConfigError(f"unknown figure {name!r}; known: {', '.join(FIGURES)}")
    return RunConfig(name=name, **FIGURES[name])


def build_config(args):
    """Figure recipe or defaults, then the config file, then explicit flags."""
    cfg = figure_config(args.figure) if getattr(args, "figure", None) else RunConfig()
    values = dataclasses.asdict(cfg)
    if getattr(args, "config", None):
        try:
            values.update(parse_config_text(Path(args.config).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    for key in _FIELDS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = _coerce(key, flag) if isinstance(flag, str) else flag
    return RunConfig(**values).validate()


# --- pipeline pieces -------------------------------------------------------------

def _crack(cfg):
    try:
        return geometry.get_crack(cfg.crack)
    except (KeyError, OSError, ValueError) as exc:
        raise ConfigError(f"crack {cfg.crack!r}: {exc}") from None


def generate_data(cfg, workers=1):
    crack = _crack(cfg)
    freqs = geometry.make_frequencies(cfg.F, cfg.lam_min, cfg.lam_max)
    dirs = geometry.make_directions(cfg.M)
    bgrid = geometry.make_boundary_grid(cfg.P)
    data = forward.generate(crack, freqs.wavenumbers, dirs, bgrid, cfg.N, workers)
    if cfg.snr_db is not None:
        data = forward.add_noise(data, cfg.snr_db, cfg.seed)
    return data


def image_data(data, mode, n=128, workers=1):
    grid = geometry.make_sampling_grid(n)
    maps = []
    for f in range(len(data.wavenumbers)):
        try:
            maps.append(imaging.td_map(data, grid, f))
        except (forward.ResonanceError, AliasingError) as exc:
            raise type(exc)(f"frequency index {f}: {exc}") from exc
    if mode == "TD":
        return maps[0]
    return imaging.mtd_map(maps)


def score_map(image, crack, top_fractions=(0.01, 0.05), radius=0.1):
    dist = geometry.distance_to_crack(image.grid.points, crack)
    out = {f"score_top{fr:g}": imaging.localization_score(image, crack, fr, radius, dist)
           for fr in top_fractions}
    out["radius"] = radius
    out["argmax_distance"] = float(dist[int(np.argmax(np.abs(image.values)))])
    return out


def _write_kv(path, values):
    Path(path).write_text("".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n"
                                  for k, v in values.items()))


def execute_run(cfg, root, workers=1):
    """Run the whole experiment into ``root/<name>``; return that directory.

    Outputs are staged in a temporary directory and moved into place only on
    success, so a failed run leaves nothing behind.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    final = root / cfg.run_name()
    stage = Path(tempfile.mkdtemp(prefix=f".{final.name}-", dir=root))
    start = time.time()
    try:
        crack = _crack(cfg)
        data = generate_data(cfg, workers)
        data.save(stage / "data.npz")
        image = image_data(data, cfg.mode, cfg.n, workers)
        imaging.save_csv(image, stage / "map.csv")
        imaging.save_pgm(image, stage / "map.pgm")
        _write_kv(stage / "scores.txt", score_map(image, crack))
        meta = [f"# mtdimaging {__version__}, numpy {np.__version__}, scipy {scipy.__version__}, "
                f"python {platform.python_version()}",
                f"# wall_clock_seconds = {time.time() - start:.3f}",
                f"# workers = {workers}"]
        meta.extend(f"# {k} = {v}" for k, v in sorted(crack.meta.items()))
        (stage / "manifest.txt").write_text("\n".join(meta) + "\n" + format_config(cfg))
        if final.exists():
            shutil.rmtree(final)
        stage.rename(final)
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    return final


def export_run(run_dir, fmt, out_dir=None):
    run_dir = Path(run_dir)
    maps = sorted(run_dir.glob("*.csv")) if run_dir.is_dir() else []
    if not maps:
        raise ConfigError(f"nothing to export in {run_dir}")
    out_dir = Path(out_dir) if out_dir else run_dir / "export"
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for path in maps:
        image = imaging.load_csv(path)
        if fmt in ("pgm", "all"):
            written.append(out_dir / (path.stem + ".pgm"))
            imaging.save_pgm(image, written[-1])
        if fmt in ("csv", "all"):
            written.append(out_dir / path.name)
            imaging.save_csv(image, written[-1])
    return written


def output_root(args):
    return Path(args.out_root or os.environ.get(OUTPUT_ROOT_ENV) or "runs")


# --- argument parsing ---------------------------------------------------------------

def _add_config_flags(p):
    p.add_argument("--config", help="key = value config file (flags override it)")
    p.add_argument("--crack", help="catalog name (C1, C2, CM, C3, C4) or polyline file")
    p.add_argument("-M", dest="M", type=int, help="number of incident directions")
    p.add_argument("-F", dest="F", type=int, help="number of frequencies")
    p.add_argument("--lam-min", dest="lam_min", type=float)
    p.add_argument("--lam-max", dest="lam_max", type=float)
    p.add_argument("--snr", dest="snr_db", help="noise level in dB, or 'none'")
    p.add_argument("--seed", type=int)
    p.add_argument("-n", dest="n", type=int, help="sampling grid resolution")
    p.add_argument("-P", dest="P", type=int, help="boundary points")
    p.add_argument("-N", dest="N", type=int, help="quadrature nodes per crack piece")
    p.add_argument("--mode", help="TD or MTD")
    p.add_argument("--workers", type=int, default=1)


def make_parser():
    parser = argparse.ArgumentParser(prog="mtdimaging", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize boundary data")
    _add_config_flags(p)
    p.add_argument("--out", required=True, help="output .npz path")

    p = sub.add_parser("image", help="TD or MTD map from a FieldData file")
    p.add_argument("data")
    p.add_argument("--mode", default="MTD")
    p.add_argument("-n", dest="n", type=int, default=128)
    p.add_argument("--out", required=True, help="output prefix (.csv and .pgm are added)")

    p = sub.add_parser("score", help="localization scores of a map")
    p.add_argument("map", help="map CSV")
    p.add_argument("--crack", required=True)
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--top", type=float, nargs="+", default=[0.01, 0.05])

    p = sub.add_parser("validate", help="run the Bessel identity suite")
    p.add_argument("--report", help="also write the report to this file")

    p = sub.add_parser("export", help="re-export the maps of a run directory")
    p.add_argument("run_dir")
    p.add_argument("--format", choices=("pgm", "csv", "all"), default="pgm")
    p.add_argument("--out")

    p = sub.add_parser("run", help="generate, image and score in one go")
    _add_config_flags(p)
    p.add_argument("--figure", help="named figure recipe")
    p.add_argument("--manifest", dest="config", help="replay a run manifest")
    p.add_argument("--name", help="run directory name")
    p.add_argument("--out-root", help=f"output root (default ${OUTPUT_ROOT_ENV} or ./runs)")
    p.add_argument("--list-figures", action="store_true")
    return parser


def _cmd_generate(args):
    cfg = build_config(args)
    data = generate_data(cfg, args.workers)
    data.save(args.out)
    print(f"wrote {args.out}  shape={data.shape}")


def _cmd_image(args):
    mode = args.mode.upper()
    if mode not in ("TD", "MTD"):
        raise ConfigError("mode must be TD or MTD")
    try:
        data = forward.FieldData.load(args.data)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read {args.data}: {exc}") from None
    image = image_data(data, mode, args.n)
    imaging.save_csv(image, args.out + ".csv")
    imaging.save_pgm(image, args.out + ".pgm")
    print(f"wrote {args.out}.csv and {args.out}.pgm")


def _cmd_score(args):
    try:
        image = imaging.load_csv(args.map)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read {args.map}: {exc}") from None
    crack = _crack(RunConfig(crack=args.crack))
    for k, v in score_map(image, crack, args.top, args.radius).items():
        print(f"{k} = {v}")


def _cmd_validate(args):
    rows = oracle.identity_suite()
    lines = [f"{'PASS' if ok else 'FAIL'}  {name}  numeric = {num!r}  reference = {ref!r}  "
             f"error = {err:.3e}  tol = {tol:g}"
             for name, num, ref, err, tol, ok in rows]
    failed = sum(not r[-1] for r in rows)
    lines.append(f"checks = {len(rows)}  failed = {failed}")
    report = "\n".join(lines) + "\n"
    sys.stdout.write(report)
    if args.report:
        Path(args.report).write_text(report)
    return EXIT_VALIDATION if failed else EXIT_OK


def _cmd_export(args):
    for path in export_run(args.run_dir, args.format, args.out):
        print(path)


def _cmd_run(args):
    if args.list_figures:
        for name, over in FIGURES.items():
            print(name, " ".join(f"{k}={v}" for k, v in over.items()))
        return EXIT_OK
    cfg = build_config(args)
    out = execute_run(cfg, output_root(args), args.workers)
    print(out)
    print((out / "scores.txt").read_text(), end="")
    return EXIT_OK


COMMANDS = {"generate": _cmd_generate, "image": _cmd_image, "score": _cmd_score,
            "validate": _cmd_validate, "export": _cmd_export, "run": _cmd_run}


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args) or EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except forward.GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (forward.ForwardError, AliasingError, imaging.DegenerateMapError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
