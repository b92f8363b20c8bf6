"""Config-driven experiment harness: convergence traces, parameter sweeps,
scheme comparisons, and the bundled verification suite.

Every run is a pure function of (config document, seed): outputs carry no
timestamps, wall-clock timing is opt-in (`timing: true`) precisely because it
would break byte-identical reproduction, and worker fan-out (env var
BDRIS_WORKERS) only changes who computes a row, never the row itself.

Axis semantics
--------------
iterations      cap the ascent at each value (same starts, so a longer cap
                extends the same trajectory).
group_size      optimize under each block restriction (1 = diagonal).
noise_power     optimize once at the base scenario, then rescale the bound:
                the objective does not depend on sigma^2, so the bound scales
                exactly linearly in it for the frozen optimized matrix.
slots           same frozen-matrix treatment; the bound scales as 1/L.
n_r             rebuild the scene with each element count and re-optimize.
ris_x_position  move the surface along x (height fixed), rebuild, re-optimize.

Scheme semantics: `proposed` is best-of-restarts ascent (warm-started from
the diagonal winner when that scheme is also computed, and from the previous
axis point's winner when the block supports nest); `diagonal_baseline` is the
same ascent restricted to group size 1; `random_unitary` reports the best of
`random_samples` Haar draws.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ArgumentError, ConfigError
from .estimate import fd_gradient_oracle, monte_carlo_mse
from .fisher import (
    crb_db,
    crb_from_fim_inverse,
    crb_theta,
    noise_for_target_crb,
    objective_g,
    snr_prefactor,
)
from .linalg import as_rng, haar_random_unitary
from .optimizer import (
    OptimizerConfig,
    OptimizerTrace,
    euclidean_gradient,
    multi_start_ascent,
    random_unitary_objective,
)
from .scene import Scenario, build_channel, geometry_to_scene, sample_scene

AXES = ("iterations", "group_size", "noise_power", "slots", "n_r", "ris_x_position")
SCHEMES = ("proposed", "random_unitary", "diagonal_baseline")
WORKERS_ENV = "BDRIS_WORKERS"

TRACE_CSV = "trace.csv"
SWEEP_CSV = "sweep.csv"
VERIFY_JSON = "verify.json"

_INT_AXES = {"iterations", "group_size", "slots", "n_r"}

_SCENARIO_DEFAULTS = {
    "n_bs": 8,
    "n_r": 64,
    "slots": 256,
    "power": 0.1,
    "noise_power": 1e-15,
    "wavelength": 0.1,
    "d_bs": 0.5,
    "d_ris": 0.5,
    "pathloss_exponent": 2.0,
    "reference_gain": None,
    "relay_model": "geometric",
    "target_pos": [5.0, 0.0],
    "ris_pos": [0.0, 20.0],
    "bs_pos": [-10.0, 0.0],
}

_OPTIMIZER_DEFAULTS = {
    "mu_init": 1e-2,
    "epsilon": 1e-6,
    "max_iters": 2000,
    "max_halvings": 30,
    "max_doublings": 30,
}

_TOP_DEFAULTS = {
    "seed": 0,
    "axis": "group_size",
    "values": None,
    "schemes": list(SCHEMES),
    "restarts": 4,
    "random_samples": 100,
    "mc_trials": 500,
    "timing": False,
    "out": None,
}

_DEFAULT_VALUES = {
    "iterations": [1, 10, 100, 1000, 2000],
    "group_size": [1, 2, 4, 8, 16, 32, 64],
    "noise_power": [1e-16, 1e-15, 1e-14, 1e-13],
    "slots": [64, 128, 256, 512, 1024],
    "n_r": [8, 16, 32, 64],
    "ris_x_position": [2.0, 5.0, 8.0, 11.0, 14.0, 17.0, 20.0],
}


def default_config() -> dict:
    doc = {k: (list(v) if isinstance(v, list) else v) for k, v in _TOP_DEFAULTS.items()}
    doc["scenario"] = {
        k: (list(v) if isinstance(v, list) else v) for k, v in _SCENARIO_DEFAULTS.items()
    }
    doc["optimizer"] = dict(_OPTIMIZER_DEFAULTS)
    return doc


def _fail(path: str, message: str) -> None:
    raise ConfigError(f"{path}: {message}")


def _as_int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(path, f"must be >= {minimum}, got {value}")
    return int(value)


def _as_number(value, path: str, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        _fail(path, f"must be finite, got {value!r}")
    if positive and value <= 0:
        _fail(path, f"must be positive, got {value!r}")
    return value


def _as_point(value, path: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        _fail(path, f"expected a [x, y] pair, got {value!r}")
    return (_as_number(value[0], path + "[0]"), _as_number(value[1], path + "[1]"))


def _merged_section(doc: dict, key: str, defaults: dict) -> dict:
    section = doc.get(key, {})
    if not isinstance(section, dict):
        _fail(key, f"expected an object, got {section!r}")
    unknown = sorted(set(section) - set(defaults))
    if unknown:
        _fail(f"{key}.{unknown[0]}", "unknown key")
    merged = dict(defaults)
    merged.update(section)
    return merged


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Scenario
    axis: str
    values: tuple
    schemes: tuple
    restarts: int
    seed: int
    optimizer: OptimizerConfig
    random_samples: int
    mc_trials: int
    timing: bool
    out: str | None

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError(f"config root: expected an object, got {type(doc).__name__}")
        unknown = sorted(set(doc) - set(_TOP_DEFAULTS) - {"scenario", "optimizer"})
        if unknown:
            _fail(unknown[0], "unknown key")
        top = dict(_TOP_DEFAULTS)
        top.update({k: v for k, v in doc.items() if k in _TOP_DEFAULTS})

        seed = _as_int(top["seed"], "seed", minimum=0)
        axis = top["axis"]
        if axis not in AXES:
            _fail("axis", f"must be one of {list(AXES)}, got {axis!r}")
        restarts = _as_int(top["restarts"], "restarts", minimum=1)
        random_samples = _as_int(top["random_samples"], "random_samples", minimum=1)
        mc_trials = _as_int(top["mc_trials"], "mc_trials", minimum=1)
        if not isinstance(top["timing"], bool):
            _fail("timing", f"expected true/false, got {top['timing']!r}")
        out = top["out"]
        if out is not None and not isinstance(out, str):
            _fail("out", f"expected a path string, got {out!r}")

        schemes = top["schemes"]
        if not isinstance(schemes, (list, tuple)) or not schemes:
            _fail("schemes", "must be a non-empty list")
        for i, scheme in enumerate(schemes):
            if scheme not in SCHEMES:
                _fail(f"schemes[{i}]", f"must be one of {list(SCHEMES)}, got {scheme!r}")
        if len(set(schemes)) != len(schemes):
            _fail("schemes", "entries must be unique")

        scen = _merged_section(doc, "scenario", _SCENARIO_DEFAULTS)
        opt = _merged_section(doc, "optimizer", _OPTIMIZER_DEFAULTS)

        scenario = cls._build_scenario(scen, seed)
        optimizer = cls._build_optimizer(opt, restarts, seed)

        values = top["values"]
        if values is None:
            values = _default_values(axis, scenario)
        values = cls._validate_values(axis, values, scenario)

        return cls(
            scenario=scenario,
            axis=axis,
            values=values,
            schemes=tuple(schemes),
            restarts=restarts,
            seed=seed,
            optimizer=optimizer,
            random_samples=random_samples,
            mc_trials=mc_trials,
            timing=bool(top["timing"]),
            out=out,
        )

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config ({exc})") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})"
            ) from exc
        if overrides:
            doc = dict(doc) if isinstance(doc, dict) else doc
            for key, value in overrides.items():
                doc[key] = value
        return cls.from_dict(doc)

    @staticmethod
    def _build_scenario(scen: dict, seed: int) -> Scenario:
        n_bs = _as_int(scen["n_bs"], "scenario.n_bs", minimum=1)
        n_r = _as_int(scen["n_r"], "scenario.n_r", minimum=1)
        slots = _as_int(scen["slots"], "scenario.slots", minimum=1)
        reference_gain = scen["reference_gain"]
        if reference_gain is not None:
            reference_gain = _as_number(
                reference_gain, "scenario.reference_gain", positive=True
            )
        relay_model = scen["relay_model"]
        base = dict(
            n_bs=n_bs,
            n_r=n_r,
            slots=slots,
            power=_as_number(scen["power"], "scenario.power", positive=True),
            noise_power=_as_number(
                scen["noise_power"], "scenario.noise_power", positive=True
            ),
            wavelength=_as_number(
                scen["wavelength"], "scenario.wavelength", positive=True
            ),
            d_bs=_as_number(scen["d_bs"], "scenario.d_bs", positive=True),
            d_ris=_as_number(scen["d_ris"], "scenario.d_ris", positive=True),
            pathloss_exponent=_as_number(
                scen["pathloss_exponent"], "scenario.pathloss_exponent"
            ),
            reference_gain=reference_gain,
        )
        target = _as_point(scen["target_pos"], "scenario.target_pos")
        ris = _as_point(scen["ris_pos"], "scenario.ris_pos")
        bs = _as_point(scen["bs_pos"], "scenario.bs_pos")
        try:
            skeleton = Scenario(
                theta=0.0,
                phi_r=0.0,
                phi_bs=0.0,
                alpha=1.0 + 0.0j,
                relay_model="farfield",
                **base,
            )
            scene = geometry_to_scene(target, ris, bs, skeleton, seed=seed)
            return replace(scene, relay_model=relay_model)
        except ArgumentError as exc:
            raise ConfigError(f"scenario: {exc}") from exc

    @staticmethod
    def _build_optimizer(opt: dict, restarts: int, seed: int) -> OptimizerConfig:
        try:
            return OptimizerConfig(
                mu_init=_as_number(opt["mu_init"], "optimizer.mu_init", positive=True),
                epsilon=_as_number(opt["epsilon"], "optimizer.epsilon", positive=True),
                max_iters=_as_int(opt["max_iters"], "optimizer.max_iters", minimum=1),
                max_halvings=_as_int(
                    opt["max_halvings"], "optimizer.max_halvings", minimum=1
                ),
                max_doublings=_as_int(
                    opt["max_doublings"], "optimizer.max_doublings", minimum=1
                ),
                restarts=restarts,
                seed=seed,
            )
        except ArgumentError as exc:
            raise ConfigError(f"optimizer: {exc}") from exc

    @staticmethod
    def _validate_values(axis: str, values, scenario: Scenario) -> tuple:
        if not isinstance(values, (list, tuple)) or not values:
            _fail("values", "must be a non-empty list")
        checked = []
        for i, v in enumerate(values):
            path = f"values[{i}]"
            if axis in _INT_AXES:
                v = _as_int(v, path, minimum=1)
            else:
                v = _as_number(v, path)
            checked.append(v)
        if any(b <= a for a, b in zip(checked, checked[1:])):
            _fail("values", "must be strictly increasing")
        if axis == "group_size":
            for i, v in enumerate(checked):
                if scenario.n_r % v != 0:
                    _fail(f"values[{i}]", f"group size {v} does not divide n_r {scenario.n_r}")
        if axis == "noise_power":
            for i, v in enumerate(checked):
                if v <= 0:
                    _fail(f"values[{i}]", "noise power must be positive")
        if axis == "ris_x_position":
            for i, v in enumerate(checked):
                try:
                    _move_ris(scenario, v)
                except (ArgumentError, ConfigError) as exc:
                    _fail(f"values[{i}]", f"invalid geometry ({exc})")
        return tuple(checked)


def _default_values(axis: str, scenario: Scenario) -> list:
    values = list(_DEFAULT_VALUES[axis])
    if axis == "group_size":
        values = [v for v in values if v <= scenario.n_r and scenario.n_r % v == 0]
    return values


def _move_ris(scenario: Scenario, x: float) -> Scenario:
    if scenario.target_pos is None or scenario.ris_pos is None or scenario.bs_pos is None:
        raise ConfigError("ris_x_position sweep requires full position information")
    new_ris = (float(x), scenario.ris_pos[1])
    return geometry_to_scene(
        scenario.target_pos,
        new_ris,
        scenario.bs_pos,
        scenario,
        alpha_phase=float(np.angle(scenario.alpha)),
    )


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return value


def _map_tasks(task, items):
    workers = worker_count()
    if workers == 1 or len(items) <= 1:
        return [task(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, items))


# ---------------------------------------------------------------------------
# Scheme comparison


@dataclass(frozen=True)
class SchemeOutcome:
    scheme: str
    g_value: float
    crb_theta: float
    iterations: int
    phi: np.ndarray | None
    trace: OptimizerTrace | None = None


def compare_schemes(
    scene: Scenario,
    schemes,
    opt_cfg: OptimizerConfig,
    random_samples: int,
    group_size: int | None = None,
    warm_starts: tuple = (),
) -> dict[str, SchemeOutcome]:
    """Run the requested schemes on one scene.

    The diagonal baseline (when computed) seeds the proposed scheme as an
    extra warm start: a diagonal unitary is feasible for every block size, so
    with monotone ascent the proposed result can never fall below it.
    """
    prefactor = snr_prefactor(scene)

    def crb_of(g: float) -> float:
        return 1.0 / (prefactor * g) if g > 0 else float("inf")

    out: dict[str, SchemeOutcome] = {}
    need_diag = "diagonal_baseline" in schemes or "proposed" in schemes
    diag_phi = None
    if need_diag:
        phi, trace, iters = multi_start_ascent(
            scene, replace(opt_cfg, seed=(opt_cfg.seed, 1)), group_size=1
        )
        diag_phi = phi
        if "diagonal_baseline" in schemes:
            out["diagonal_baseline"] = SchemeOutcome(
                "diagonal_baseline", trace.final_g, crb_of(trace.final_g), iters, phi.matrix, trace
            )
    if "proposed" in schemes:
        starts = tuple(warm_starts) + ((diag_phi,) if diag_phi is not None else ())
        phi, trace, iters = multi_start_ascent(
            scene,
            replace(opt_cfg, seed=(opt_cfg.seed, 2)),
            group_size=group_size,
            extra_starts=starts,
        )
        out["proposed"] = SchemeOutcome(
            "proposed", trace.final_g, crb_of(trace.final_g), iters, phi.matrix, trace
        )
    if "random_unitary" in schemes:
        stats = random_unitary_objective(scene, (opt_cfg.seed, 3), random_samples)
        out["random_unitary"] = SchemeOutcome(
            "random_unitary", stats.g_max, crb_of(stats.g_max), random_samples, None
        )
    return out


# ---------------------------------------------------------------------------
# Sweeps


@dataclass(frozen=True)
class SweepRow:
    axis: str
    axis_value: float
    scheme: str
    g_value: float
    crb_theta: float
    crb_db: float
    iterations: int
    wall_time_s: float


def _scene_for_value(config: ExperimentConfig, value):
    scene = config.scenario
    axis = config.axis
    if axis == "n_r":
        return replace(scene, n_r=int(value))
    if axis == "ris_x_position":
        return _move_ris(scene, float(value))
    if axis == "noise_power":
        return replace(scene, noise_power=float(value))
    if axis == "slots":
        return replace(scene, slots=int(value))
    return scene


def run_sweep(config: ExperimentConfig) -> list[SweepRow]:
    """One SweepRow per (axis value, scheme), deterministic in config."""
    axis = config.axis
    rows: list[SweepRow] = []

    if axis in ("noise_power", "slots"):
        # The objective is independent of sigma^2 and L: optimize once on the
        # base scenario, then rescale the bound exactly for each axis value.
        started = time.perf_counter()
        outcomes = compare_schemes(
            config.scenario,
            config.schemes,
            replace(config.optimizer, seed=(config.seed, 0)),
            config.random_samples,
        )
        elapsed = time.perf_counter() - started
        for value in config.values:
            scene_v = _scene_for_value(config, value)
            prefactor = snr_prefactor(scene_v)
            for scheme in config.schemes:
                got = outcomes[scheme]
                crb = 1.0 / (prefactor * got.g_value) if got.g_value > 0 else float("inf")
                rows.append(
                    SweepRow(axis, value, scheme, got.g_value, crb, crb_db(crb),
                             got.iterations, elapsed)
                )
        return rows

    def one_value(index_value):
        index, value = index_value
        started = time.perf_counter()
        scene_v = _scene_for_value(config, value)
        opt = replace(config.optimizer, seed=(config.seed, 10, index))
        group_size = None
        if axis == "group_size":
            group_size = int(value)
        if axis == "iterations":
            opt = replace(opt, max_iters=int(value))
        outcomes = compare_schemes(
            scene_v, config.schemes, opt, config.random_samples, group_size=group_size
        )
        elapsed = time.perf_counter() - started
        return [
            SweepRow(axis, value, scheme, outcomes[scheme].g_value,
                     outcomes[scheme].crb_theta, crb_db(outcomes[scheme].crb_theta),
                     outcomes[scheme].iterations, elapsed)
            for scheme in config.schemes
        ]

    if axis == "group_size":
        # Sequential with warm-start chaining: the previous block support is
        # contained in the next whenever the sizes divide, so each optimized
        # matrix remains feasible (and the bound monotone) as groups grow.
        prev_phi = None
        prev_gs = None
        for index, value in enumerate(config.values):
            started = time.perf_counter()
            opt = replace(config.optimizer, seed=(config.seed, 10, index))
            warm = ()
            if prev_phi is not None and int(value) % prev_gs == 0:
                warm = (prev_phi,)
            outcomes = compare_schemes(
                config.scenario, config.schemes, opt, config.random_samples,
                group_size=int(value), warm_starts=warm,
            )
            elapsed = time.perf_counter() - started
            if "proposed" in outcomes and outcomes["proposed"].phi is not None:
                prev_phi = outcomes["proposed"].phi
                prev_gs = int(value)
            for scheme in config.schemes:
                got = outcomes[scheme]
                rows.append(
                    SweepRow(axis, value, scheme, got.g_value, got.crb_theta,
                             crb_db(got.crb_theta), got.iterations, elapsed)
                )
        return rows

    for chunk in _map_tasks(one_value, list(enumerate(config.values))):
        rows.extend(chunk)
    return rows


def sweep_csv_text(rows, timing: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["axis", "axis_value", "scheme", "g_value", "crb_theta", "crb_db", "iterations"]
    if timing:
        header.append("wall_time_s")
    writer.writerow(header)
    for row in rows:
        value = int(row.axis_value) if row.axis in _INT_AXES else repr(float(row.axis_value))
        record = [
            row.axis,
            value,
            row.scheme,
            repr(float(row.g_value)),
            repr(float(row.crb_theta)),
            repr(float(row.crb_db)),
            row.iterations,
        ]
        if timing:
            record.append(repr(float(row.wall_time_s)))
        writer.writerow(record)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Convergence traces


def run_convergence(config: ExperimentConfig):
    """Per-iteration trace of the proposed scheme plus flat baseline rows."""
    outcomes = compare_schemes(
        config.scenario,
        config.schemes,
        replace(config.optimizer, seed=(config.seed, 0)),
        config.random_samples,
    )
    return outcomes


def trace_csv_text(config: ExperimentConfig, outcomes) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "scheme", "g_value", "crb_theta", "crb_db", "mu"])
    proposed = outcomes.get("proposed")
    span = proposed.trace.records if proposed is not None and proposed.trace else []
    for scheme in config.schemes:
        got = outcomes[scheme]
        if scheme == "proposed" and got.trace is not None:
            for rec in got.trace.records:
                writer.writerow([
                    rec.iteration, scheme, repr(float(rec.g_value)),
                    repr(float(rec.crb_theta)), repr(float(crb_db(rec.crb_theta))),
                    repr(float(rec.mu)),
                ])
        else:
            # flat reference line spanning the proposed trajectory
            count = len(span) if span else 1
            for it in range(1, count + 1):
                writer.writerow([
                    it, scheme, repr(float(got.g_value)),
                    repr(float(got.crb_theta)), repr(float(crb_db(got.crb_theta))),
                    repr(0.0),
                ])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Verification suite


def verification_suite(config: ExperimentConfig, corrupt_gradient: bool = False) -> dict:
    """Machine-readable oracle report: finite-difference gradient agreement,
    the two bound routes, and Monte Carlo efficiency of the ML estimator.

    `corrupt_gradient` flips the analytic gradient's sign before comparison;
    it exists so the failure path itself is testable.
    """
    seed = config.seed
    report: dict = {"seed": seed, "corrupt_gradient": bool(corrupt_gradient)}

    # --- gradient vs central finite differences -------------------------
    worst = 0.0
    pairs = 50
    for i in range(pairs):
        scene = sample_scene((seed, 11, i))
        phi = haar_random_unitary(scene.n_r, as_rng((seed, 12, i)))
        analytic = euclidean_gradient(phi, scene)
        if corrupt_gradient:
            analytic = -analytic
        oracle = fd_gradient_oracle(phi, scene, step=1e-6)
        scale = max(float(np.linalg.norm(oracle)), 1e-300)
        rel = float(np.linalg.norm(analytic - oracle)) / scale
        worst = max(worst, rel)
    gradient_check = {
        "pass": bool(worst <= 1e-6),
        "pairs": pairs,
        "max_rel_error": worst,
        "tolerance": 1e-6,
    }

    # --- direct bound vs inverted full information matrix ---------------
    draws = 1000
    worst_gap = 0.0
    for i in range(draws):
        scene = sample_scene((seed, 21, i))
        phi = haar_random_unitary(scene.n_r, as_rng((seed, 22, i)))
        bundle = build_channel(scene, phi)
        direct = crb_theta(bundle, scene)
        via_inverse = crb_from_fim_inverse(bundle, scene)
        gap = abs(direct - via_inverse) / abs(direct)
        worst_gap = max(worst_gap, float(gap))
    schur_check = {
        "pass": bool(worst_gap <= 1e-9),
        "draws": draws,
        "max_rel_error": worst_gap,
        "tolerance": 1e-9,
    }

    # --- Monte Carlo MSE against the bound ------------------------------
    # The estimator runs on the same close-range seeded scene family the
    # other oracles use: there the steering directions G @ Phi @ a(theta)
    # stay well separated across the search grid, so the likelihood peak
    # is identifiable and the ML estimator reaches its asymptotic regime.
    # At long relay ranges the relay matrix approaches rank one and the
    # concentrated criterion flattens into a near-ambiguous ridge whose
    # threshold SNR is unattainable; the bound itself stays valid, but no
    # finite trial count would touch it there.  Bound validity must hold
    # for every scattering state, so a generic Haar draw is used.
    scene16 = sample_scene((seed, 31), n_bs=8, n_r=16)
    phi = haar_random_unitary(16, as_rng((seed, 30)))
    bundle = build_channel(scene16, phi)
    g_val = objective_g(bundle)
    sigma_high = noise_for_target_crb(scene16, bundle, crb_target=1e-6)
    points = []
    ok_band = True
    ok_floor = True
    for rank, factor in enumerate([1.0, 30.0, 1000.0]):
        scene_v = replace(scene16, noise_power=sigma_high * factor)
        crb = crb_theta(build_channel(scene_v, phi), scene_v)
        result = monte_carlo_mse(scene_v, phi, trials=config.mc_trials, seed=(seed, 32, rank))
        ratio = result.mse / crb
        points.append(
            {
                "noise_power": scene_v.noise_power,
                "crb_theta": crb,
                "mse": result.mse,
                "ratio": ratio,
                "trials": result.trials,
            }
        )
        if rank == 0 and not (0.8 <= ratio <= 2.0):
            ok_band = False
        if ratio < 0.8:
            ok_floor = False
    mse_check = {
        "pass": bool(ok_band and ok_floor),
        "band": [0.8, 2.0],
        "g_value": g_val,
        "points": points,
    }

    checks = {
        "gradient_fd": gradient_check,
        "schur_crb": schur_check,
        "mse_vs_crb": mse_check,
    }
    report["checks"] = checks
    report["all_pass"] = bool(all(c["pass"] for c in checks.values()))
    return report


def run_verify(config: ExperimentConfig, corrupt_gradient: bool = False) -> dict:
    return verification_suite(config, corrupt_gradient=corrupt_gradient)


def verify_json_text(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Output orchestration


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def execute_sweep(config: ExperimentConfig, out_dir, plot: bool = True) -> Path:
    rows = run_sweep(config)
    out = Path(out_dir)
    target = out / SWEEP_CSV
    write_text(target, sweep_csv_text(rows, timing=config.timing))
    if plot:
        from .plots import plot_sweep

        plot_sweep(rows, out / "sweep.png")
    return target


def execute_convergence(config: ExperimentConfig, out_dir, plot: bool = True) -> Path:
    outcomes = run_convergence(config)
    out = Path(out_dir)
    target = out / TRACE_CSV
    write_text(target, trace_csv_text(config, outcomes))
    if plot:
        from .plots import plot_trace

        plot_trace(config, outcomes, out / "trace.png")
    return target


def execute_verify(config: ExperimentConfig, out_dir, corrupt_gradient: bool = False) -> tuple[Path, bool]:
    report = run_verify(config, corrupt_gradient=corrupt_gradient)
    out = Path(out_dir)
    target = out / VERIFY_JSON
    write_text(target, verify_json_text(report))
    return target, bool(report["all_pass"])


def execute_optimize(config: ExperimentConfig, out_dir, plot: bool = True) -> Path:
    """Single-scene optimization: emit the winning trace, the optimized
    matrix, and a short summary document."""
    outcomes = run_convergence(config)
    out = Path(out_dir)
    write_text(out / TRACE_CSV, trace_csv_text(config, outcomes))
    summary = {}
    for scheme in config.schemes:
        got = outcomes[scheme]
        summary[scheme] = {
            "g_value": got.g_value,
            "crb_theta": got.crb_theta,
            "crb_db": crb_db(got.crb_theta),
            "iterations": got.iterations,
        }
    write_text(out / "optimize.json", json.dumps(summary, sort_keys=True, indent=2) + "\n")
    proposed = outcomes.get("proposed")
    if proposed is not None and proposed.phi is not None:
        np.save(out / "phi.npy", proposed.phi)
    if plot:
        from .plots import plot_trace

        plot_trace(config, outcomes, out / "trace.png")
    return out / "optimize.json"
