"""Command-line front end.

    polywell simulate --figure 1
    polywell oracle --figure 8
    polywell spectrum --mass 20 --depth 1 --half-width 1
    polywell diagnose out/psi_t200.csv --figure 5
    polywell sweep --figure 1 --param q --values 0.2,0.6,1.0

A run is described by a flat ``key = value`` config. Values come from the
figure preset, then the ``--config`` file, then command-line flags.
``--dry-run`` prints the fully resolved config, which parses back to the
same config.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .core import Grid, PhysicalParams, PolywellError, WaveFunction
from .diagnostics import FORMATION_DEFINITIONS, analyze
from .oracle import evolve_analytic
from .packets import PacketShape, PacketSpec, make_packet
from .potentials import PotentialSpec, WellShape, evaluate
from .propagator import default_resolution, run
from .spectral import bound_states, predicted_reflected_k, resonance_detuning

_COMMON = dict(
    mode="grid", packet="gaussian", q=0.2, delta=0.5, x0=-10.0, mass=20.0,
    well="gaussian", depth=1.0, width=1.0, tmax=5000.0,
)

PRESETS: dict[int, dict] = {
    1: {},
    2: {"q": 0.6},
    3: {"q": 1.4},
    4: {"q": 2.2},
    5: {"q": 1.0, "tmax": 200.0},
    6: {"q": 1.0, "tmax": 200.0, "mass": 11.0},
    7: {"delta": 2.0, "q": 1.0},
    8: {"mode": "oracle", "packet": "square", "well": "square", "q": 1.0, "tmax": 1000.0},
}


@dataclass(frozen=True)
class RunConfig:
    figure: int | None = None
    mode: str = "grid"
    packet: str = "gaussian"
    q: float = 0.2
    delta: float = 0.5
    x0: float = -10.0
    mass: float = 20.0
    well: str = "gaussian"
    depth: float = 1.0
    width: float = 1.0
    xmin: float | None = None
    xmax: float | None = None
    dx: float | None = None
    dt: float | None = None
    tmax: float = 5000.0
    snapshots: tuple[float, ...] = ()
    cadence: float | None = None
    prominence: float = 0.1
    formation: str = "refl_change"
    contamination: str = "warn"
    out_dir: str = "out"

    # -- derived objects
    @property
    def packet_spec(self) -> PacketSpec:
        return PacketSpec(PacketShape(self.packet), self.q, self.x0, self.delta)

    @property
    def well_spec(self) -> PotentialSpec:
        if self.well == "none":
            return PotentialSpec(WellShape.NONE, 0.0, 1.0)
        return PotentialSpec(WellShape(self.well), self.depth, self.width)

    @property
    def grid(self) -> Grid:
        return Grid.from_spacing(self.xmin, self.xmax, self.dx, self.dt)

    def snapshot_times(self) -> list[float]:
        return sorted(set(self.snapshots) | {self.tmax})

    def cadence_times(self) -> list[float]:
        n = int(math.floor(self.tmax / self.cadence + 1e-9))
        return [i * self.cadence for i in range(n + 1)]


def preset(figure: int) -> RunConfig:
    if figure not in PRESETS:
        raise PolywellError("invalid figure", f"figure must be one of 1..8, got {figure}")
    return RunConfig(figure=figure, **{**_COMMON, **PRESETS[figure]})


def preset_extent(cfg: RunConfig) -> float:
    """Half-width of a symmetric domain that stays boundary-clean up to tmax.

    The fastest components that still carry |psi|^2 above the contamination
    level travel at about (q + 4.5 sigma_p) / m, with sigma_p = 1 / (2 delta).
    """
    speed = (abs(cfg.q) + 2.25 / cfg.delta) / cfg.mass
    reach = abs(cfg.x0) + 10 * cfg.delta + speed * cfg.tmax
    return 10.0 * math.ceil(reach / 10.0)


def resolve(cfg: RunConfig) -> RunConfig:
    """Fill unset grid fields from the default rules."""
    dx, dt = default_resolution(cfg.delta, cfg.width, cfg.mass)
    half = preset_extent(cfg)
    return replace(
        cfg,
        xmin=-half if cfg.xmin is None else cfg.xmin,
        xmax=half if cfg.xmax is None else cfg.xmax,
        dx=dx if cfg.dx is None else cfg.dx,
        dt=dt if cfg.dt is None else cfg.dt,
        cadence=cfg.tmax / 100 if cfg.cadence is None else cfg.cadence,
    )


def validate(cfg: RunConfig) -> RunConfig:
    """Resolve and check a config without doing any propagation."""
    cfg = resolve(cfg)
    if cfg.mode not in ("grid", "oracle"):
        raise PolywellError("invalid config", f"mode must be grid or oracle, got {cfg.mode!r}")
    if cfg.formation not in FORMATION_DEFINITIONS:
        raise PolywellError("invalid config", f"formation must be one of {FORMATION_DEFINITIONS}")
    if cfg.contamination not in ("abort", "warn", "ignore"):
        raise PolywellError("invalid config", "contamination must be abort, warn or ignore")
    if not cfg.tmax > 0 or not cfg.cadence > 0:
        raise PolywellError("invalid config", "tmax and cadence must be > 0")
    if any(t < 0 or t > cfg.tmax for t in cfg.snapshots):
        raise PolywellError("invalid config", "snapshot times must lie in [0, tmax]")
    if not cfg.xmin < cfg.x0 < cfg.xmax:
        raise PolywellError("invalid config", "x0 must lie inside the grid")
    try:
        cfg.packet_spec
        cfg.well_spec
    except ValueError as exc:
        raise PolywellError("invalid config", str(exc)) from exc
    PhysicalParams(cfg.mass)
    grid = cfg.grid
    make_packet(cfg.packet_spec, grid)
    evaluate(cfg.well_spec, grid)
    return cfg


# ---------------------------------------------------------------- config text

def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ",".join(repr(float(t)) for t in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {_fmt(getattr(cfg, f.name))}\n" for f in fields(cfg))


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(key: str, text: str):
    kind = _TYPES[key]
    text = text.strip()
    if text.lower() == "none" and "None" in kind:
        return None
    try:
        if kind.startswith("tuple"):
            return tuple(float(t) for t in text.split(",") if t.strip())
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
    except ValueError as exc:
        raise PolywellError("invalid config", f"bad value for {key}: {text!r}") from exc
    return text


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PolywellError("invalid config", f"line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise PolywellError("invalid config", f"line {n}: unknown key {key!r}")
        out[key] = _parse_value(key, val)
    return out


def build_config(file_values: dict, flag_values: dict) -> RunConfig:
    merged = {**file_values, **flag_values}
    figure = merged.get("figure")
    base = preset(figure) if figure is not None else RunConfig()
    return replace(base, **merged)


# ---------------------------------------------------------------- writers

def write_csv(path: Path, x: np.ndarray, psi: np.ndarray) -> None:
    rows = zip(x.tolist(), psi.real.tolist(), psi.imag.tolist(), (np.abs(psi) ** 2).tolist())
    lines = ["x,re,im,abs2"] + [",".join(repr(v) for v in r) for r in rows]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "x,re,im,abs2":
            raise PolywellError("invalid snapshot", f"{path}: unexpected header {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return data[:, 0], data[:, 1] + 1j * data[:, 2]


def _time_tag(t: float) -> str:
    return f"{t:g}"


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n")


# ---------------------------------------------------------------- commands

def simulate(cfg: RunConfig) -> dict:
    grid = cfg.grid
    psi0 = make_packet(cfg.packet_spec, grid)
    v = evaluate(cfg.well_spec, grid)
    times = sorted(set(cfg.cadence_times()) | set(cfg.snapshot_times()))
    res = run(psi0, v, PhysicalParams(cfg.mass), cfg.tmax, times, contamination=cfg.contamination)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wanted = cfg.snapshot_times()
    files = []
    for s, t in zip(res.snapshots, times):
        if t in wanted:
            p = out / f"psi_t{_time_tag(t)}.csv"
            write_csv(p, s.x, s.values)
            files.append(p.name)
    rep = analyze(res.snapshots, cfg.well_spec, prominence=cfg.prominence, formation=cfg.formation)
    doc = {
        "config": _config_dict(cfg),
        "run": {
            "max_norm_drift": res.max_norm_drift,
            "valid": res.valid,
            "contamination_time": res.contamination_time,
            "steps": res.final.step_count,
        },
        "report": rep.to_dict(),
        "snapshots": files,
    }
    _write_json(out / "report.json", doc)
    return doc


def oracle(cfg: RunConfig) -> dict:
    x = cfg.grid.x
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    snaps, meta, files = [], [], []
    for t in cfg.snapshot_times():
        r = evolve_analytic(x, t, cfg.packet_spec, cfg.well_spec, cfg.mass, normalized=True)
        p = out / f"oracle_t{_time_tag(t)}.csv"
        write_csv(p, x, r.psi)
        files.append(p.name)
        snaps.append(WaveFunction(cfg.grid, r.psi, t))
        meta.append({"t": t, "nodes": r.nodes, "p_max": r.p_max,
                     "change_nodes": r.change_nodes, "change_pmax": r.change_pmax})
    rep = analyze(snaps, cfg.well_spec, prominence=cfg.prominence, formation=cfg.formation)
    doc = {"config": _config_dict(cfg), "quadrature": meta, "report": rep.to_dict(), "snapshots": files}
    _write_json(out / "report.json", doc)
    return doc


def spectrum(mass: float, depth: float, half_width: float) -> dict:
    bs = bound_states(mass, depth, half_width)
    det = resonance_detuning(mass, depth, half_width)
    return {
        "mass": mass, "depth": depth, "half_width": half_width,
        "states": [
            {"n": s.n, "parity": s.parity, "energy": s.energy, "k": s.k, "k_prime": s.k_prime}
            for s in bs.states
        ],
        "detuning": {"threshold": det.nearest_threshold, "multiple": det.multiple,
                     "parity": det.parity, "detuning": det.detuning},
        "predicted_reflected_k": predicted_reflected_k(half_width),
    }


_TIME_IN_NAME = re.compile(r"_t([-+0-9.eE]+)\.csv$")


def diagnose(cfg: RunConfig, paths: list[str]) -> dict:
    snaps = []
    for name in paths:
        m = _TIME_IN_NAME.search(name)
        if not m:
            raise PolywellError("invalid snapshot", f"{name}: file name must end in _t<time>.csv")
        x, psi = read_csv(Path(name))
        dx = np.diff(x)
        if len(x) < 3 or not np.allclose(dx, dx[0], rtol=1e-9):
            raise PolywellError("invalid snapshot", f"{name}: x must be uniformly spaced")
        grid = Grid(float(x[0]), float(x[-1]), len(x), cfg.dt)
        snaps.append(WaveFunction(grid, psi, float(m.group(1))))
    rep = analyze(snaps, cfg.well_spec, prominence=cfg.prominence, formation=cfg.formation)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {"report": rep.to_dict(), "snapshots": [Path(p).name for p in paths]}
    _write_json(out / "report.json", doc)
    return doc


def _sweep_one(cfg: RunConfig) -> dict:
    doc = simulate(cfg) if cfg.mode == "grid" else oracle(cfg)
    rep = doc["report"]
    return {k: rep.get(k) for k in ("p_refl", "p_well", "p_trans", "v_refl", "v_trans",
                                      "formation_time", "polychotomous", "interior_k")}


def sweep(cfg: RunConfig, param: str, values: list[str]) -> dict:
    """Run ``cfg`` once per value of ``param``; ``cfg`` should be unresolved."""
    if param not in _TYPES or param in ("figure", "snapshots", "out_dir"):
        raise PolywellError("invalid config", f"cannot sweep {param!r}")
    configs = []
    for v in values:
        # grid defaults depend on the swept value, so each point is resolved afresh
        c = replace(cfg, **{param: _parse_value(param, str(v))},
                    out_dir=str(Path(cfg.out_dir) / f"{param}={v}"))
        configs.append(validate(c))
    workers = max(1, min(len(configs), int(os.environ.get("POLYWELL_THREADS", os.cpu_count() or 1))))
    if workers == 1:
        results = [_sweep_one(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_one, configs))  # map keeps parameter order
    doc = {"param": param, "points": [{"value": v, **r} for v, r in zip(values, results)]}
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    _write_json(Path(cfg.out_dir) / "sweep.json", doc)
    return doc


def _config_dict(cfg: RunConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


# ---------------------------------------------------------------- argparse

_FLAG_KEYS = ("figure", "packet", "q", "delta", "x0", "mass", "well", "depth", "width",
              "xmin", "xmax", "dx", "dt", "tmax", "snapshots", "cadence", "prominence",
              "formation", "contamination", "out_dir")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--figure", type=int, help="figure preset, 1..8")
    p.add_argument("--packet", choices=[s.value for s in PacketShape])
    p.add_argument("--well", choices=[s.value for s in WellShape])
    for name in ("q", "delta", "x0", "mass", "depth", "width", "xmin", "xmax", "dx", "dt",
                 "tmax", "cadence", "prominence"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--snapshots", help="comma-separated snapshot times")
    p.add_argument("--formation", choices=FORMATION_DEFINITIONS)
    p.add_argument("--contamination", choices=("abort", "warn", "ignore"))
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--dry-run", action="store_true", help="print the resolved config and exit")


def _config_from_args(args) -> RunConfig:
    file_values = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            file_values = parse_config(fh.read())
    flags = {}
    for k in _FLAG_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            flags[k] = _parse_value(k, v) if k == "snapshots" else v
    return build_config(file_values, flags)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polywell", description="1-D wave-packet scattering off a well")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "grid propagation"), ("oracle", "analytic square-well evolution")):
        _add_run_flags(sub.add_parser(name, help=help_))
    sp = sub.add_parser("spectrum", help="square-well bound states")
    sp.add_argument("--mass", type=float, default=20.0)
    sp.add_argument("--depth", type=float, default=1.0)
    sp.add_argument("--half-width", "--width", dest="half_width", type=float, default=1.0)
    sp.add_argument("--out-dir", dest="out_dir")
    dp = sub.add_parser("diagnose", help="analyse snapshot CSV files")
    dp.add_argument("files", nargs="+")
    _add_run_flags(dp)
    wp = sub.add_parser("sweep", help="run one preset over several parameter values")
    _add_run_flags(wp)
    wp.add_argument("--param", required=True)
    wp.add_argument("--values", required=True, help="comma-separated values")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "spectrum":
            doc = spectrum(args.mass, args.depth, args.half_width)
            if args.out_dir:
                Path(args.out_dir).mkdir(parents=True, exist_ok=True)
                _write_json(Path(args.out_dir) / "spectrum.json", doc)
            _print_spectrum(doc)
            return 0
        raw = _config_from_args(args)
        cfg = validate(raw)
        if args.dry_run:
            sys.stdout.write(dump_config(cfg))
            return 0
        if args.command == "simulate":
            doc = simulate(cfg)
        elif args.command == "oracle":
            doc = oracle(cfg)
        elif args.command == "diagnose":
            doc = diagnose(cfg, args.files)
        else:
            values = [v for v in args.values.split(",") if v.strip()]
            doc = sweep(raw, args.param, values)
        _print_summary(doc)
        return 0
    except PolywellError as exc:
        _error(exc.code, exc.message)
        return 2
    except OSError as exc:
        _error("io error", str(exc))
        return 3


def _error(code: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": code, "message": message}, sort_keys=True) + "\n")


def _print_spectrum(doc: dict) -> None:
    print(f"{'n':>2} {'parity':>6} {'energy':>14} {'k':>10} {'k_prime':>10}")
    for s in doc["states"]:
        print(f"{s['n']:>2} {s['parity']:>6} {s['energy']:>14.8f} {s['k']:>10.6f} {s['k_prime']:>10.6f}")
    d = doc["detuning"]
    print(f"nearest threshold {d['multiple']} pi/2 ({d['parity']}), detuning {d['detuning']:+.5f}")


def _print_summary(doc: dict) -> None:
    if "points" in doc:
        for p in doc["points"]:
            print(f"{doc['param']}={p['value']} polychotomous={p['polychotomous']} v_refl={p['v_refl']}")
        return
    rep = doc["report"]
    keys = ("p_refl", "p_well", "p_trans", "v_refl", "formation_time", "polychotomous", "interior_k")
    print(" ".join(f"{k}={rep.get(k)}" for k in keys))


if __name__ == "__main__":
    sys.exit(main())
