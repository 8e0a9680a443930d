"""Command-line driver: simulate, certify, converge and fit-decay."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .certification import AUXILIARY_IDS, LEMMA_IDS, certify
from .clock import GevreyClock
from .evolution import (AuxiliaryState, GuardTrip, ImexStepper, StepperConfig, Tendencies,
                        interior_norm, reformulation_residual)
from .functionals import budget_monitor, fit_decay, initial_smallness, make_record
from .spectral import Grid, d_y
from .state import (PROFILES, divergence_residual, good_function_residual, initial_state,
                    suggest_y_max, write_snapshot)

log = logging.getLogger("gevrey_mhd")

FLOAT_FORMAT = "%.16e"
DECAY_SERIES = ("tstar_G", "tstar_dyG", "tstar_dy2G", "tstar_dy3G", "E_ub")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kappa: float = 1.0
    epsilon: float = 1e-8
    lam: float = 20.0
    delta0: float = 0.5
    alpha: float = 1.2
    eta: float = 0.05
    gamma0: float | None = None
    nx: int = 64
    ny: int = 256
    y_max: float | None = None
    dt: float = 0.02
    t_end: float = 50.0
    record_cadence: int = 10
    snapshot_cadence: int = 0
    seed: int = 0
    initial_profile: str = "exact-derivative"
    amplitude: float | None = None
    output_dir: str = "run"
    tstar_factor: float = 10.0
    fit_t0: float = 10.0
    fit_t1: float | None = None
    converge_nx: int = 16
    converge_ny: int = 32
    converge_dt: float = 0.02
    converge_y_max: float = 8.0
    converge_t: float = 0.2
    converge_amplitude: float = 0.5

    @property
    def l_kappa(self) -> float:
        return self.kappa * (2.0 - self.kappa) / 4.0

    @property
    def resolved_gamma0(self) -> float:
        return 1.0 + self.l_kappa - self.eta if self.gamma0 is None else self.gamma0

    @property
    def resolved_y_max(self) -> float:
        return suggest_y_max(self.t_end) if self.y_max is None else self.y_max

    @property
    def resolved_amplitude(self) -> float:
        return self.epsilon if self.amplitude is None else self.amplitude

    def clock(self) -> GevreyClock:
        return GevreyClock(self.epsilon, self.lam, self.delta0, self.alpha, self.eta, self.kappa)

    def grid(self) -> Grid:
        return Grid(self.nx, self.ny, self.resolved_y_max)


KEY_ALIASES = {"lambda": "lam", "delta": "delta0", "n_x": "nx", "n_y": "ny"}


def parse_config_text(text: str) -> dict[str, str]:
    """Flat key = value lines; '#' starts a comment."""
    out = {}
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[KEY_ALIASES.get(key, key)] = value
    return out


def _coerce(name: str, value: str):
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in types:
        raise ConfigError(f"unknown config key {name!r}")
    kind = types[name]
    if value.lower() in ("none", "auto", ""):
        if "None" not in str(kind):
            raise ConfigError(f"{name} cannot be empty")
        return None
    try:
        if kind.startswith("int"):
            return int(value)
        if kind.startswith("float"):
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {value!r}") from exc
    return value


def build_config(values: dict[str, str] | None = None, **overrides) -> ExperimentConfig:
    kwargs = {k: _coerce(k, v) for k, v in (values or {}).items()}
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kwargs)


def load_config(path: str | None, **overrides) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text()) if path else {}
    return build_config(values, **overrides)


def validate(cfg: ExperimentConfig, warn_only: bool = False) -> list[str]:
    """Reject invalid parameter sets; admissibility and saturation checks may be relaxed to warnings."""
    hard, soft = [], []
    if not 0 < cfg.kappa < 2:
        hard.append("kappa must lie in (0, 2)")
    if not cfg.alpha > 1:
        hard.append("alpha must exceed 1")
    if not 0 < cfg.eta < cfg.l_kappa:
        hard.append(f"eta must lie in (0, l_kappa = {cfg.l_kappa:.6g})")
    if not cfg.epsilon > 0 or not cfg.delta0 > 0 or cfg.lam < 0:
        hard.append("epsilon and delta0 must be positive, lambda nonnegative")
    if cfg.nx < 8 or cfg.nx % 2 or cfg.ny < 16 or not cfg.dt > 0 or cfg.t_end < 0 or cfg.record_cadence < 1:
        hard.append("discretization parameters out of range")
    if cfg.initial_profile not in PROFILES:
        hard.append(f"initial_profile must be one of {', '.join(PROFILES)}")
    if hard:
        raise ConfigError("; ".join(hard))
    if not 1.0 < cfg.resolved_gamma0 < 1.0 + cfg.l_kappa:
        soft.append(f"gamma0 = {cfg.resolved_gamma0:.6g} outside (1, 1 + l_kappa)")
    alpha_max = 9.0 / 8.0 + 0.5 * cfg.l_kappa - 0.5 * cfg.eta
    if cfg.alpha > alpha_max + 1e-15:
        soft.append(f"alpha = {cfg.alpha:.6g} exceeds 9/8 + l_kappa/2 - eta/2 = {alpha_max:.6g}")
    clock = cfg.clock()
    if not clock.saturation_ok():
        soft.append(f"theta_infinity = {clock.theta_infinity:.6g} exceeds delta0/(4 lambda) = "
                    f"{cfg.delta0 / (4.0 * cfg.lam):.6g}")
    if soft and not warn_only:
        raise ConfigError("; ".join(soft))
    for msg in soft:
        warnings.warn(msg)
    return soft


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    return FLOAT_FORMAT % float(x)


def _json_float(x):
    return None if x is None or not np.isfinite(x) else float(x)


def run_simulate(cfg: ExperimentConfig, warn_only: bool = False) -> dict:
    """Run the coupled evolution, write timeseries.csv, summary.json and snapshots."""
    soft = validate(cfg, warn_only)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid()
    clock = cfg.clock()
    state = initial_state(grid, clock, cfg.initial_profile, cfg.resolved_amplitude, cfg.seed)
    stepper = ImexStepper(state, StepperConfig(cfg.dt, cfg.t_end, diffusion_kappa=cfg.kappa))
    gamma0 = cfg.resolved_gamma0

    records, rows = [], []
    monitors = {"box_divergence": 0.0, "central_divergence": 0.0, "W_wall": 0.0,
                "dyy_W_wall": 0.0, "v_wall": 0.0}
    threshold = [np.inf]
    halted = None
    snap_dir = out / "snapshots"

    def snapshot(s, tag):
        snap_dir.mkdir(exist_ok=True)
        extra = {"theta": s.state.clock.theta, "delta": s.state.clock.delta}
        for name, f in (("u", s.state.u), ("b", s.state.b), ("W", s.W)):
            write_snapshot(snap_dir / f"{name}_{tag}.txt", name, f, s.t, extra)

    def record(s):
        aux = s.aux_state()
        rec = make_record(s.state, aux, cfg.epsilon, gamma0)
        records.append(rec)
        budget = budget_monitor(records, cfg.eta).values[-1] if len(records) > 1 else rec.E
        row = {"t": rec.t, "theta": rec.theta, "delta": rec.delta, "E": rec.E, "D": rec.D, "H": rec.H,
               "B_budget": budget, "tstar_ratio": rec.guards["tstar_ratio"], **rec.components}
        rows.append(row)
        div = divergence_residual(s.state)
        monitors["box_divergence"] = max(monitors["box_divergence"], div["box_u"], div["box_b"])
        monitors["central_divergence"] = max(monitors["central_divergence"], div["central_u"], div["central_b"])
        monitors["W_wall"] = max(monitors["W_wall"], float(np.max(np.abs(s.W.coeffs[:, 0]))))
        monitors["dyy_W_wall"] = max(monitors["dyy_W_wall"], float(np.max(np.abs(d_y(s.W, 2).coeffs[:, 0]))))
        monitors["v_wall"] = max(monitors["v_wall"], float(np.max(np.abs(s.state.v.coeffs[:, 0]))))
        if len(records) == 1:
            threshold[0] = cfg.tstar_factor * rec.guards["tstar_ratio"]
        elif rec.guards["tstar_ratio"] > threshold[0]:
            stepper.trip("tstar", f"T_* ratio {rec.guards['tstar_ratio']:.6g} exceeds {threshold[0]:.6g}")
        if cfg.snapshot_cadence and (len(records) - 1) % cfg.snapshot_cadence == 0:
            snapshot(s, f"{len(records) - 1:06d}")

    def on_step(s):
        if s.steps % cfg.record_cadence == 0:
            record(s)

    e0_value, e0_ok = initial_smallness(state, AuxiliaryState.zero(state), cfg.epsilon)
    record(stepper)
    try:
        stepper.run_until(cfg.t_end, on_step)
        if stepper.steps % cfg.record_cadence:
            record(stepper)
    except GuardTrip as trip:
        halted = {"reason": trip.reason, "t": trip.t, "detail": trip.detail}
        log.warning("run halted: %s", trip)
    snapshot(stepper, "final")

    columns = list(rows[0].keys())
    with open(out / "timeseries.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])

    t = np.array([r["t"] for r in rows])
    t1 = cfg.t_end if cfg.fit_t1 is None else cfg.fit_t1
    exponents = {}
    lk = cfg.l_kappa - cfg.eta
    for name in DECAY_SERIES:
        series = np.array([r[name] for r in rows])
        if name == "E_ub":
            series = series / (1.0 + t) ** lk
        try:
            exponents[name] = fit_decay(t, series, (cfg.fit_t0, t1))
        except ValueError:
            exponents[name] = None
    budget = budget_monitor(records, cfg.eta) if len(records) > 1 else None
    summary = {
        "config": asdict(cfg),
        "final_time": stepper.t,
        "steps": stepper.steps,
        "min_dt": min(stepper.dt_history) if stepper.dt_history else None,
        "halted": halted,
        "validation_warnings": soft,
        "decay_exponents": exponents,
        "initial_smallness": {"value": e0_value, "holds": e0_ok},
        "budget_max_over_first": (_json_float(budget.values.max() / budget.values[0])
                                  if budget is not None and budget.values[0] > 0 else None),
        "monitors": monitors,
        "records": len(records),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def run_certify(cfg: ExperimentConfig, lemmas=None, sample_count: int = 8) -> tuple[list, int]:
    """Write certify_report.tsv; exit status is nonzero when an exact-class probe has violations."""
    selected = list(LEMMA_IDS) if not lemmas else list(lemmas)
    valid = LEMMA_IDS + AUXILIARY_IDS
    bad = [x for x in selected if x not in valid]
    if bad:
        raise ConfigError(f"unknown lemma ids {bad}; valid: {', '.join(valid)}")
    reports = [certify(lid, sample_count=sample_count, seed=cfg.seed) for lid in selected]
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "certify_report.tsv", "w") as fh:
        fh.write("lemma_id\tclass\tn_samples\tmax_ratio\tviolations\trefinement_drift\tpassed\n")
        for r in reports:
            fh.write(f"{r.lemma_id}\t{'exact' if r.exact else 'bound'}\t{r.n_samples}\t"
                     f"{r.max_ratio:.16e}\t{r.violations}\t{r.refinement_drift:.16e}\t{int(r.passed)}\n")
    status = int(any(r.exact and r.violations for r in reports))
    return reports, status


def heat_oracle_error(cfg: ExperimentConfig, level: int) -> tuple[float, float]:
    """Max error of the CN step against the decaying sine eigenfunction at t = 1."""
    grid = Grid(cfg.converge_nx, cfg.converge_ny * 2**level, cfg.converge_y_max)
    dt = 5.0 * cfg.converge_dt / 2**level
    state = initial_state(grid, cfg.clock(), "heat-mode", amplitude=1.0)
    stepper = ImexStepper(state, StepperConfig(dt, 1.0), auxiliary=False)
    stepper.run_until(1.0)
    exact = np.exp(-(np.pi / grid.y_max) ** 2 * stepper.t) * np.sin(np.pi * grid.y / grid.y_max)
    return grid.dy, float(np.max(np.abs(stepper.state.u.coeffs[0].real - exact)))


def residual_level(cfg: ExperimentConfig, level: int) -> tuple[float, dict[str, float]]:
    """Residual norms of the reformulated and good-function equations from a short nonlinear run."""
    grid = Grid(cfg.converge_nx, cfg.converge_ny * 2**level, cfg.converge_y_max)
    dt = cfg.converge_dt / 2**level
    state = initial_state(grid, cfg.clock(), "exact-derivative", cfg.converge_amplitude, cfg.seed)
    stepper = ImexStepper(state, StepperConfig(dt, cfg.converge_t))
    trail = []
    n_steps = int(round(cfg.converge_t / dt)) + 1
    for _ in range(n_steps):
        stepper.step(dt)
        trail = (trail + [(stepper.state, stepper.W)])[-3:]
    (a, Wa), (m, Wm), (b, Wb) = trail
    tend = Tendencies.centered(a, b, Wa, Wb)
    res = reformulation_residual(m, AuxiliaryState.assemble(m, Wm), tend)
    span = b.t - a.t
    rg, rgt = good_function_residual(m, (b.G - a.G) / span, (b.G_tilde - a.G_tilde) / span)
    out = {f"reformulation_{k}": interior_norm(v) for k, v in res.items()}
    out["good_function_G"] = interior_norm(rg)
    out["good_function_G_tilde"] = interior_norm(rgt)
    return grid.dy, out


def fitted_order(h, errors) -> float:
    return float(np.polyfit(np.log(h), np.log(errors), 1)[0])


def run_converge(cfg: ExperimentConfig, levels: int = 3) -> dict:
    """Convergence table and two-column plot files for the heat oracle and the residuals."""
    if levels < 3:
        raise ConfigError("convergence study needs at least 3 levels")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    curves: dict[str, list[tuple[float, float]]] = {}
    for level in range(levels):
        h, err = heat_oracle_error(cfg, level)
        curves.setdefault("heat_oracle", []).append((h, err))
        h, res = residual_level(cfg, level)
        for name, value in res.items():
            curves.setdefault(name, []).append((h, value))
    table = {}
    for name, pts in curves.items():
        h = np.array([p[0] for p in pts])
        e = np.array([p[1] for p in pts])
        table[name] = {"dy": h.tolist(), "norm": e.tolist(), "order": fitted_order(h, e),
                       "monotone": bool(np.all(np.diff(e) < 0))}
        with open(out / f"converge_{name}.dat", "w") as fh:
            for hv, ev in pts:
                fh.write(f"{hv:.16e}\t{ev:.16e}\n")
    with open(out / "converge_table.tsv", "w") as fh:
        fh.write("quantity\t" + "\t".join(f"level{l}" for l in range(levels)) + "\torder\tmonotone\n")
        for name, row in table.items():
            fh.write(name + "\t" + "\t".join(f"{v:.6e}" for v in row["norm"])
                     + f"\t{row['order']:.4f}\t{int(row['monotone'])}\n")
    return table


def read_timeseries(path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(x) for x in row] for row in reader])
    return {name: data[:, i] for i, name in enumerate(header)}


def run_fit_decay(path, column: str, window: tuple[float, float]) -> float:
    series = read_timeseries(path)
    if column not in series:
        raise ConfigError(f"column {column!r} not in {path}; available: {', '.join(series)}")
    return fit_decay(series["t"], series[column], window)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gevrey-mhd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "certify", "converge"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--warn-only", action="store_true",
                        help="downgrade admissibility and saturation checks to warnings")
        if name == "certify":
            sp.add_argument("--lemmas", help="comma-separated selector list")
            sp.add_argument("--samples", type=int, default=8)
        if name == "converge":
            sp.add_argument("--levels", type=int, default=3)
    fp = sub.add_parser("fit-decay")
    fp.add_argument("csv", help="timeseries.csv written by simulate")
    fp.add_argument("--column", default="tstar_G")
    fp.add_argument("--window", nargs=2, type=float, default=(10.0, 50.0), metavar=("T0", "T1"))
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _parser().parse_args(argv)
    try:
        if args.command == "fit-decay":
            print(f"{args.column}\t{run_fit_decay(args.csv, args.column, tuple(args.window)):.6f}")
            return 0
        cfg = load_config(args.config, output_dir=args.out, seed=args.seed)
        if args.command == "simulate":
            summary = run_simulate(cfg, args.warn_only)
            log.info("final time %.6g, halted: %s", summary["final_time"], summary["halted"])
            return 0
        if args.command == "certify":
            validate(cfg, args.warn_only)
            lemmas = [x.strip() for x in args.lemmas.split(",")] if args.lemmas else None
            reports, status = run_certify(cfg, lemmas, args.samples)
            for r in reports:
                print(f"{r.lemma_id}\tmax_ratio={r.max_ratio:.4g}\tviolations={r.violations}\t"
                      f"drift={r.refinement_drift:.3g}\t{'PASS' if r.passed else 'FAIL'}")
            return status
        validate(cfg, args.warn_only)
        table = run_converge(cfg, args.levels)
        for name, row in table.items():
            print(f"{name}\torder={row['order']:.3f}\tmonotone={row['monotone']}")
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
