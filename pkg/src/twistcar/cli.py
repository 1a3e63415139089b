"""Command-line front end.

Every subcommand reads a JSON scenario file, writes deterministic CSV/JSON
files into ``--out`` and prints a JSON summary on stdout.  Exit status is 0
on success, 1 on a solver failure and 2 on an invalid configuration.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import asymptotics, hbalance, poincare
from .dynamics import simulate, write_trajectory_csv
from .integrator import IntegrationError, IntegratorConfig
from .model import (DimlessParams, ParameterError, PhysicalParams, ReducedState,
                    nondimensionalize, redimensionalize)

log = logging.getLogger("twistcar")

COMMANDS = ("simulate", "orbit", "branch", "stability-curve", "asymptotics", "hb")
SWEEP_PARAMS = ("omega", "delta")

SEED_SETS = {
    "default": poincare.DEFAULT_SEEDS,
    "wide": tuple((p, s, 0.02) for p in (-1.5, -0.75, 0.0, 0.75, 1.5) for s in (-0.5, 0.5)),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Sweep:
    param: str
    start: float
    stop: float
    points: int

    def grid(self):
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class ScenarioConfig:
    params: PhysicalParams
    A: float
    omega: float
    t_end: float
    rtol: float = 1e-10
    atol: float = 1e-12
    sweep: Sweep | None = None
    seeds: tuple = field(default=())

    @property
    def dimless(self) -> DimlessParams:
        dp = nondimensionalize(self.params, 1.0)
        return dp.replace(A=self.A, omega=self.omega)

    @property
    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(rtol=self.rtol, atol=self.atol)


def _keys(block, path, allowed, required=()):
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected an object")
    for k in block:
        if k not in allowed:
            raise ConfigError(f"{path}.{k}: unknown key")
    for k in required:
        if k not in block:
            raise ConfigError(f"{path}.{k}: missing required key")


def _number(block, key, path, positive=False):
    x = block[key]
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise ConfigError(f"{path}.{key}: expected a finite number, got {x!r}")
    if positive and not x > 0:
        raise ConfigError(f"{path}.{key}: must be positive, got {x!r}")
    return float(x)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a JSON scenario document.

    Raises
    ------
    ConfigError
        With a message prefixed by the offending key path.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    _keys(doc, "config", {"params", "actuation", "sim", "sweep", "seeds"}, ("params",))
    try:
        params = PhysicalParams.from_mapping(doc["params"], "params")
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None

    act = doc.get("actuation", {})
    _keys(act, "actuation", {"A", "Omega", "omega"})
    if "Omega" in act and "omega" in act:
        raise ConfigError("actuation: ambiguous frequency, give either Omega or omega")
    if "Omega" not in act and "omega" not in act:
        raise ConfigError("actuation.Omega: missing required key (or actuation.omega)")
    if "Omega" in act:
        omega = _number(act, "Omega", "actuation", positive=True) * params.t_c
    else:
        omega = _number(act, "omega", "actuation", positive=True)
    A = _number(act, "A", "actuation") if "A" in act else params.A
    if A < 0:
        raise ConfigError(f"actuation.A: must be non-negative, got {A!r}")

    sim = doc.get("sim", {})
    _keys(sim, "sim", {"t_end", "rtol", "atol"})
    t_end = _number(sim, "t_end", "sim", positive=True) if "t_end" in sim \
        else 200 * 2 * math.pi / omega
    rtol = _number(sim, "rtol", "sim", positive=True) if "rtol" in sim else 1e-10
    atol = _number(sim, "atol", "sim", positive=True) if "atol" in sim else 1e-12
    try:
        IntegratorConfig(rtol=rtol, atol=atol)
    except ValueError as exc:
        raise ConfigError(f"sim: {exc}") from None

    sweep = None
    if "sweep" in doc:
        sw = doc["sweep"]
        _keys(sw, "sweep", {"param", "from", "to", "points"}, ("param", "from", "to", "points"))
        if sw["param"] not in SWEEP_PARAMS:
            raise ConfigError(f"sweep.param: expected one of {SWEEP_PARAMS}, got {sw['param']!r}")
        lo, hi = _number(sw, "from", "sweep", True), _number(sw, "to", "sweep", True)
        if not lo < hi:
            raise ConfigError(f"sweep.to: must exceed sweep.from ({lo} >= {hi})")
        pts = sw["points"]
        if isinstance(pts, bool) or not isinstance(pts, int) or pts < 2:
            raise ConfigError(f"sweep.points: expected an integer >= 2, got {pts!r}")
        sweep = Sweep(sw["param"], lo, hi, pts)

    seeds = ()
    if "seeds" in doc:
        if not isinstance(doc["seeds"], list):
            raise ConfigError("seeds: expected a list")
        out = []
        for i, s in enumerate(doc["seeds"]):
            if not (isinstance(s, list) and len(s) == 3
                    and all(isinstance(x, (int, float)) and not isinstance(x, bool)
                            and math.isfinite(x) for x in s)):
                raise ConfigError(f"seeds[{i}]: expected [phi, sigma, v]")
            out.append(ReducedState(*map(float, s)))
        seeds = tuple(out)
    return ScenarioConfig(params, A, omega, t_end, rtol, atol, sweep, seeds)


# ----------------------------------------------------------------------------
# commands

def _orbit_dict(o: poincare.PeriodicOrbit, dp: DimlessParams):
    return {
        "z_star": [float(x) for x in o.z_star],
        "symmetric": bool(o.symmetric),
        "stable": bool(o.stable),
        "rho": float(o.rho),
        "multipliers": [[float(m.real), float(m.imag)] for m in o.multipliers],
        "phi_bar": float(o.phi_bar),
        "v_bar": float(o.v_bar),
        "v_bar_m_per_s": float(redimensionalize(dp, o.v_bar)),
        "theta_drift": float(o.theta_drift),
    }


def _require_sweep(cfg, cmd, param=None):
    if cfg.sweep is None:
        raise ConfigError(f"sweep: required by '{cmd}'")
    if param and cfg.sweep.param != param:
        raise ConfigError(f"sweep.param: '{cmd}' sweeps {param}, got {cfg.sweep.param!r}")
    return cfg.sweep


def _seeds(cfg, seed_set):
    if seed_set == "config":
        if not cfg.seeds:
            raise ConfigError("seeds: --seed-set config needs a non-empty seeds list")
        return cfg.seeds
    return SEED_SETS[seed_set]


def cmd_simulate(cfg, out, args):
    dp = cfg.dimless
    z0 = _seeds(cfg, args.seed_set)[0] if args.seed_set == "config" else (0.0, 0.0, 0.0)
    traj = simulate(dp, z0, cfg.t_end, cfg=cfg.integrator)
    write_trajectory_csv(out / "trajectory.csv", traj, dp)
    n_per = math.floor(cfg.t_end / dp.period)
    z_end = traj(n_per * dp.period)[:3] if n_per >= 1 else traj.y[-1, :3]
    summary = {"command": "simulate", "omega": dp.omega, "A": dp.A, "delta": dp.delta,
               "t_end": cfg.t_end, "final_state": [float(x) for x in traj.y[-1]]}
    try:
        orb = poincare.find_periodic_orbit(z_end, dp, cfg=cfg.integrator)
        summary["orbit"] = _orbit_dict(orb, dp)
        summary.update(phi_bar=float(orb.phi_bar), theta_drift=float(orb.theta_drift),
                       v_bar=float(orb.v_bar))
    except poincare.OrbitNotFound as exc:
        summary["orbit"] = None
        summary["orbit_error"] = str(exc)
    return summary


def cmd_orbit(cfg, out, args):
    dp = cfg.dimless
    orbits = poincare.orbit_census(dp, seeds=_seeds(cfg, args.seed_set), cfg=cfg.integrator)
    rows = [_orbit_dict(o, dp) for o in orbits]
    with open(out / "orbits.json", "w") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")
    return {"command": "orbit", "omega": dp.omega, "A": dp.A, "delta": dp.delta,
            "n_orbits": len(rows), "orbits": rows}


def cmd_branch(cfg, out, args):
    sw = _require_sweep(cfg, "branch")
    dp = cfg.dimless
    current = dp.omega if sw.param == "omega" else dp.delta
    p0 = current if sw.start <= current <= sw.stop else sw.stop
    dp0 = dp.replace(**{sw.param: p0})
    start = poincare.symmetric_orbit(dp0, cfg=cfg.integrator)
    br = poincare.continue_branch(start, sw.param, (sw.start, sw.stop), dp0,
                                  step=(sw.stop - sw.start) / (sw.points - 1),
                                  cfg=cfg.integrator)
    with open(out / "branch.csv", "w", newline="") as fh:
        br.write_csv(fh)
    markers = [m.to_dict() for m in br.markers]
    with open(out / "bifurcations.json", "w") as fh:
        fh.write(br.markers_json() + "\n")
    return {"command": "branch", "param": sw.param, "start": p0,
            "n_points": len(br.points), "bifurcations": markers}


def _b9_applicable(dp):
    ref = hbalance.B9_PARAMS
    return (abs(dp.alpha - ref["alpha"]) < 1e-3 and abs(dp.beta - ref["beta"]) < 1e-3
            and abs(dp.eta - ref["eta"]) < 1e-3 and abs(dp.A - ref["A"]) < 1e-9)


def _hb_curve(deltas, dp):
    out = []
    prev = None
    src = "B9_fixture" if _b9_applicable(dp) else "semi_numeric"
    for d in deltas:
        try:
            w_hb = hbalance.pitchfork_frequency_hb(d, dp, omega_guess=prev)
        except hbalance.HBError as exc:
            log.warning("harmonic balance failed at delta=%g: %s", d, exc)
            w_hb = math.nan
        ref = w_hb if math.isfinite(w_hb) else prev
        try:
            w_as = hbalance.pitchfork_frequency_asymptotic(d, dp, source=src, reference=ref)
        except hbalance.HBError as exc:
            log.warning("asymptotic root failed at delta=%g: %s", d, exc)
            w_as = math.nan
        prev = w_hb if math.isfinite(w_hb) else prev
        out.append((float(d), w_hb, w_as, src))
    return out


def cmd_stability_curve(cfg, out, args):
    sw = _require_sweep(cfg, "stability-curve", "delta")
    dp = cfg.dimless
    deltas = sw.grid()
    pc = poincare.stability_boundary(deltas, dp, cfg=cfg.integrator, jobs=args.jobs)
    hb = _hb_curve(deltas, dp)
    lines = ["delta,omega_poincare,omega_hb,omega_asymptotic,source"]
    table = []
    for (d, w_p, status), (_, w_h, w_a, src) in zip(pc, hb):
        if status != "ok":
            log.warning("poincare boundary at delta=%g: %s", d, status)
        lines.append(",".join([repr(float(d)), repr(float(w_p)), repr(float(w_h)),
                               repr(float(w_a)), src]))
        table.append({"delta": d, "omega_poincare": w_p, "omega_hb": w_h,
                      "omega_asymptotic": w_a, "source": src})
    (out / "stability_curve.csv").write_text("\n".join(lines) + "\n")
    return {"command": "stability-curve", "A": dp.A, "curve": table}


def cmd_asymptotics(cfg, out, args):
    dp = cfg.dimless
    if cfg.sweep is None:
        rows = [dp]
    else:
        rows = [dp.replace(**{cfg.sweep.param: float(x)}) for x in cfg.sweep.grid()]
    with open(out / "asymptotics.csv", "w", newline="") as fh:
        asymptotics.write_asymptotics_csv(fh, rows)
    d_opt, v_max = asymptotics.optimal_delta(dp)
    return {"command": "asymptotics", "omega": dp.omega, "delta": dp.delta,
            "v_bar_asym": asymptotics.mean_speed_asymptotic(dp),
            "delta_opt": d_opt, "v_bar_max": v_max, "n_rows": len(rows)}


def cmd_hb(cfg, out, args):
    dp = cfg.dimless
    sol = hbalance.solve_symmetric_hb(dp)
    w_star = hbalance.pitchfork_frequency_hb(dp.delta, dp)
    summary = {"command": "hb", "omega": dp.omega, "delta": dp.delta, "A": dp.A,
               "ansatz": {"a": list(sol.a), "b": list(sol.b), "c": list(sol.c)},
               "upsilon": hbalance.upsilon(sol.a[1], sol.a[2], dp.omega, dp),
               "omega_pitchfork": w_star}
    if cfg.sweep is not None:
        _require_sweep(cfg, "hb", "delta")
        curve = _hb_curve(cfg.sweep.grid(), dp)
        lines = ["delta,omega_hb,omega_asymptotic,source"]
        lines += [",".join([repr(d), repr(float(wh)), repr(float(wa)), src])
                  for d, wh, wa, src in curve]
        (out / "hb_curve.csv").write_text("\n".join(lines) + "\n")
        summary["curve"] = [{"delta": d, "omega_hb": wh, "omega_asymptotic": wa, "source": s}
                            for d, wh, wa, s in curve]
    with open(out / "hb.json", "w") as fh:
        json.dump(summary, fh, indent=2, default=_jsonable)
        fh.write("\n")
    return summary


HANDLERS = {
    "simulate": cmd_simulate,
    "orbit": cmd_orbit,
    "branch": cmd_branch,
    "stability-curve": cmd_stability_curve,
    "asymptotics": cmd_asymptotics,
    "hb": cmd_hb,
}


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"not serializable: {type(x)}")


def _clean(obj):
    """Replace non-finite floats by None so stdout stays strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twistcar",
                                     description="Twistcar periodic-orbit toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "integrate one trajectory and polish the orbit it settles on",
        "orbit": "list all periodic orbits found at one parameter point",
        "branch": "continue the symmetric orbit family over sweep.param",
        "stability-curve": "stability boundary of the symmetric orbit over delta",
        "asymptotics": "perturbation mean speed and optimal delta",
        "hb": "harmonic-balance solution and pitchfork frequency",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name], description=helps[name])
        p.add_argument("--config", required=True, type=Path, help="JSON scenario file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="worker processes for sweeps")
        p.add_argument("--seed-set", default="default",
                       choices=sorted(SEED_SETS) + ["config"],
                       help="initial conditions for attractor search")
        p.add_argument("--dry-run", action="store_true",
                       help="validate the configuration and exit")
    return parser


def _setup_logging():
    level = os.environ.get("RAPS_LOG", "WARNING").upper()
    if level.isdigit():
        level = int(level)
    elif not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def run_command(cmd, cfg: ScenarioConfig, out: Path, args) -> dict:
    """Run one subcommand and return its summary."""
    out.mkdir(parents=True, exist_ok=True)
    return HANDLERS[cmd](cfg, out, args)


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(args.config.read_text())
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.dry_run:
        print(json.dumps({"command": args.command, "valid": True,
                          "omega": cfg.omega, "A": cfg.A}, indent=2))
        return 0
    try:
        summary = run_command(args.command, cfg, args.out, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, poincare.OrbitNotFound, poincare.ContinuationError,
            hbalance.HBError, np.linalg.LinAlgError) as exc:
        print(f"error: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(_clean(summary), indent=2, default=_jsonable))
    return 0


if __name__ == "__main__":
    sys.exit(main())
