"""Signal synthesis, likelihood evaluation, concentrated maximum-likelihood
estimation, Monte Carlo mean-squared-error batches, and the finite-difference
gradient oracle.

Observation model: Y = sqrt(P) h(theta, alpha) x^H + N, with x the unit-
modulus pilot vector over L slots and N i.i.d. circular complex Gaussian with
per-entry variance sigma^2.

The log-likelihood is evaluated from the residual Y - sqrt(P) h x^H directly;
at the true parameters on noiseless data the residual is bitwise zero, so the
value equals the additive constant -n_bs * L * ln(pi sigma^2) exactly. An
algebraically expanded twin (norm/cross-term form) is exported separately and
is cross-validated against the residual form in the test suite; the expanded
form loses precision once sigma^2 falls far below the rounding error of
||Y||^2, which is why it is the twin and not the primary.

The ML estimator concentrates the gain out of the likelihood: for each
candidate angle, alpha_hat(theta) = u^H Y x / (sqrt(P) L ||u||^2) with
u(theta) = G Phi a(theta), after which theta_hat maximizes
|u^H Y x|^2 / ||u||^2 over a grid, with one parabolic refinement step around
the best grid point (kept only if it strictly improves the criterion, so an
exactly-on-grid maximum is returned unchanged).

The finite-difference oracle perturbs the real and imaginary part of every
scattering-matrix entry separately, deliberately off the unitary manifold:
the objective is defined on all complex matrices, and the Euclidean gradient
it arbitrates is an ambient-space object (the tangent projection is applied
only afterwards by the optimizer).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ArgumentError, DegenerateSceneError
from .linalg import _flatten_seed, as_rng
from .optimizer import SceneOps, matrix_of
from .scene import EPS_CHANNEL, Scenario, relay_matrix, steering_vector

GRID_POINTS = 2001
GRID_MARGIN = 0.01

FD_STEP_MIN = 1e-8
FD_STEP_MAX = 1e-4

_QPSK_ALPHABET = np.array([1.0 + 0.0j, 0.0 + 1.0j, -1.0 + 0.0j, 0.0 - 1.0j])


@dataclass(frozen=True)
class ObservationBlock:
    y: np.ndarray        # n_bs x L received block
    pilots: np.ndarray   # L unit-modulus pilot symbols
    seed: int

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.complex128)
        pilots = np.asarray(self.pilots, dtype=np.complex128)
        if y.ndim != 2 or pilots.ndim != 1 or y.shape[1] != pilots.shape[0]:
            raise ArgumentError(
                f"observation shape {y.shape} inconsistent with {pilots.shape[0]} pilots"
            )
        if np.max(np.abs(np.abs(pilots) - 1.0)) > 1e-12:
            raise ArgumentError("pilot symbols must be unit modulus")
        y = y.copy()
        pilots = pilots.copy()
        y.setflags(write=False)
        pilots.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "pilots", pilots)

    @property
    def n_bs(self) -> int:
        return self.y.shape[0]

    @property
    def slots(self) -> int:
        return self.y.shape[1]


@dataclass(frozen=True)
class EstimateResult:
    theta_hat: float
    alpha_hat: complex
    concentrated_loglik: float
    grid_theta_hat: float  # argmax before parabolic refinement


def synthesize(
    scene: Scenario,
    phi,
    seed: int,
    noiseless: bool = False,
    pilot: str = "ones",
) -> ObservationBlock:
    """Draw one received block Y = sqrt(P) h x^H + N, deterministic per seed.

    pilot "ones" uses the all-ones sequence; "qpsk" draws i.i.d. symbols from
    {1, j, -1, -j} (exact unit modulus). Pilots are drawn before the noise so
    both come from the same counter-based stream.
    """
    mat = matrix_of(phi)
    if mat.shape != (scene.n_r, scene.n_r):
        raise ArgumentError(
            f"phi shape {mat.shape} does not match scene n_r {scene.n_r}"
        )
    rng = as_rng(seed)
    length = scene.slots
    if pilot == "ones":
        pilots = np.ones(length, dtype=np.complex128)
    elif pilot == "qpsk":
        pilots = _QPSK_ALPHABET[rng.integers(0, 4, size=length)]
    else:
        raise ArgumentError(f"unknown pilot kind {pilot!r}")
    amp = np.sqrt(scene.power)
    a_theta = steering_vector(scene.theta, scene.n_r, scene.d_ris)
    h = scene.alpha * (np.asarray(relay_matrix(scene)) @ (mat @ a_theta))
    y = amp * np.outer(h, pilots.conj())
    if not noiseless:
        scale = np.sqrt(scene.noise_power / 2.0)
        noise = scale * (
            rng.standard_normal((scene.n_bs, length))
            + 1j * rng.standard_normal((scene.n_bs, length))
        )
        y = y + noise
    seed_tag = seed if isinstance(seed, int) else hash(tuple(_flatten_seed(seed)))
    return ObservationBlock(y=y, pilots=pilots, seed=int(seed_tag))


def _candidate_channel(theta: float, alpha: complex, phi, scene: Scenario) -> np.ndarray:
    mat = matrix_of(phi)
    a_theta = steering_vector(float(theta), scene.n_r, scene.d_ris)
    return complex(alpha) * (np.asarray(relay_matrix(scene)) @ (mat @ a_theta))


def log_likelihood(obs: ObservationBlock, theta: float, alpha: complex, phi, scene: Scenario) -> float:
    """ln f(Y | theta, alpha), constant included: -n_bs L ln(pi sigma^2)
    minus the squared residual over sigma^2."""
    if obs.n_bs != scene.n_bs or obs.slots != scene.slots:
        raise ArgumentError("observation dimensions do not match the scene")
    h = _candidate_channel(theta, alpha, phi, scene)
    model = np.sqrt(scene.power) * np.outer(h, obs.pilots.conj())
    resid = obs.y - model
    const = -scene.n_bs * scene.slots * np.log(np.pi * scene.noise_power)
    return float(const - np.vdot(resid, resid).real / scene.noise_power)


def log_likelihood_expanded(
    obs: ObservationBlock, theta: float, alpha: complex, phi, scene: Scenario
) -> float:
    """Algebraic twin of log_likelihood with the residual norm expanded into
    ||Y||^2 - 2 sqrt(P) Re(h^H Y x) + P ||x||^2 ||h||^2. Cross-validated
    against the residual form; prefer log_likelihood numerically."""
    if obs.n_bs != scene.n_bs or obs.slots != scene.slots:
        raise ArgumentError("observation dimensions do not match the scene")
    h = _candidate_channel(theta, alpha, phi, scene)
    z = obs.y @ obs.pilots
    y_power = np.vdot(obs.y, obs.y).real
    cross = 2.0 * np.sqrt(scene.power) * np.vdot(h, z).real
    pilot_power = np.vdot(obs.pilots, obs.pilots).real
    h_power = np.vdot(h, h).real
    quad = y_power - cross + scene.power * pilot_power * h_power
    const = -scene.n_bs * scene.slots * np.log(np.pi * scene.noise_power)
    return float(const - quad / scene.noise_power)


def default_grid() -> np.ndarray:
    return np.linspace(
        -np.pi / 2.0 + GRID_MARGIN, np.pi / 2.0 - GRID_MARGIN, GRID_POINTS
    )


class ConcentratedCriterion:
    """Reusable concentrated-likelihood evaluator for a fixed (scene, phi):
    criterion(theta) = |u^H Y x|^2 / ||u||^2 with u = G Phi a(theta)."""

    def __init__(self, scene: Scenario, phi):
        mat = matrix_of(phi)
        if mat.shape != (scene.n_r, scene.n_r):
            raise ArgumentError(
                f"phi shape {mat.shape} does not match scene n_r {scene.n_r}"
            )
        self.scene = scene
        self.projector = np.asarray(relay_matrix(scene)) @ mat  # G Phi
        self.spacing = scene.d_ris
        self.n_r = scene.n_r

    def directions(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        phase = (
            -2j
            * np.pi
            * self.spacing
            * np.arange(self.n_r)[:, None]
            * np.sin(thetas)[None, :]
        )
        return self.projector @ np.exp(phase)  # n_bs x len(thetas)

    def values(self, z: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        u = self.directions(thetas)
        num = np.abs(u.conj().T @ z) ** 2
        den = np.sum(np.abs(u) ** 2, axis=0)
        out = np.full(num.shape, -np.inf)
        ok = den > EPS_CHANNEL
        out[ok] = num[ok] / den[ok]
        return out

    def gain_estimate(self, z: np.ndarray, theta: float) -> complex:
        u = self.directions(np.array([theta]))[:, 0]
        den = np.vdot(u, u).real
        if den <= EPS_CHANNEL:
            raise DegenerateSceneError("degenerate direction at the estimate")
        return complex(
            np.vdot(u, z) / (np.sqrt(self.scene.power) * self.scene.slots * den)
        )


def ml_estimate(
    obs: ObservationBlock,
    phi,
    scene_known: Scenario,
    grid: np.ndarray | None = None,
) -> EstimateResult:
    """Concentrated ML estimate of (theta, alpha) from one observation block.

    scene_known supplies geometry, powers and dimensions only; its theta and
    alpha fields are treated as unknown and never read.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3:
        raise ArgumentError("grid must be a 1-D array with at least 3 points")
    half_pi = np.pi / 2.0
    if grid.min() <= -half_pi or grid.max() >= half_pi:
        raise ArgumentError("grid must lie strictly inside (-pi/2, pi/2)")
    crit = ConcentratedCriterion(scene_known, phi)
    z = obs.y @ obs.pilots
    values = crit.values(z, grid)
    if not np.any(np.isfinite(values)):
        raise DegenerateSceneError("criterion degenerate on the whole grid")
    best = int(np.argmax(values))
    theta_grid = float(grid[best])
    theta_hat = theta_grid
    best_value = float(values[best])
    if 0 < best < grid.size - 1 and np.isfinite(values[best - 1 : best + 2]).all():
        left, mid, right = values[best - 1 : best + 2]
        curvature = left - 2.0 * mid + right
        if curvature < 0.0:
            offset = 0.5 * (left - right) / curvature
            vertex = theta_grid + offset * (grid[best + 1] - grid[best])
            vertex = float(np.clip(vertex, grid[best - 1], grid[best + 1]))
            vertex_value = float(crit.values(z, np.array([vertex]))[0])
            if vertex_value > best_value:
                theta_hat = vertex
                best_value = vertex_value
    alpha_hat = crit.gain_estimate(z, theta_hat)
    loglik = log_likelihood(obs, theta_hat, alpha_hat, phi, scene_known)
    return EstimateResult(
        theta_hat=theta_hat,
        alpha_hat=alpha_hat,
        concentrated_loglik=loglik,
        grid_theta_hat=theta_grid,
    )


@dataclass(frozen=True)
class MonteCarloResult:
    mse: float
    bias: float
    trials: int
    errors: tuple


def monte_carlo_mse(
    scene: Scenario,
    phi,
    trials: int,
    seed: int,
    grid: np.ndarray | None = None,
    pilot: str = "ones",
) -> MonteCarloResult:
    """Sample mean-squared error of the ML angle estimate over seeded trials.

    Trial t draws its noise from the stream keyed by (seed, t), so batches
    are reproducible and may be fanned out across workers in any order.
    """
    if trials < 1:
        raise ArgumentError("trials must be >= 1")
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    crit = ConcentratedCriterion(scene, phi)
    errors = np.empty(trials)
    for trial in range(trials):
        obs = synthesize(scene, phi, seed=(seed, trial), pilot=pilot)
        z = obs.y @ obs.pilots
        values = crit.values(z, grid)
        best = int(np.argmax(values))
        theta_hat = float(grid[best])
        best_value = float(values[best])
        if 0 < best < grid.size - 1:
            left, mid, right = values[best - 1 : best + 2]
            curvature = left - 2.0 * mid + right
            if np.isfinite(curvature) and curvature < 0.0:
                offset = 0.5 * (left - right) / curvature
                vertex = theta_hat + offset * (grid[best + 1] - grid[best])
                vertex = float(np.clip(vertex, grid[best - 1], grid[best + 1]))
                vertex_value = float(crit.values(z, np.array([vertex]))[0])
                if vertex_value > best_value:
                    theta_hat = vertex
        errors[trial] = theta_hat - scene.theta
    return MonteCarloResult(
        mse=float(np.mean(errors**2)),
        bias=float(np.mean(errors)),
        trials=trials,
        errors=tuple(float(e) for e in errors),
    )


def fd_gradient_oracle(
    phi,
    scene: Scenario | None,
    step: float,
    objective: Callable[[np.ndarray], float] | None = None,
) -> np.ndarray:
    """Central-difference Wirtinger gradient of the bound objective:
    oracle[m, n] = 1/2 (d/dRe + j d/dIm) applied to entry (m, n).

    Perturbations are applied in the ambient matrix space without projecting
    back to the unitary manifold. `objective` substitutes an arbitrary test
    functional for the scene objective (used to pin the convention against
    closed forms); `scene` may then be None.
    """
    if not (FD_STEP_MIN <= step <= FD_STEP_MAX):
        raise ArgumentError(
            f"step {step} outside [{FD_STEP_MIN}, {FD_STEP_MAX}]"
        )
    mat = matrix_of(phi)
    if objective is None:
        if scene is None:
            raise ArgumentError("scene is required unless an objective is given")
        objective = SceneOps(scene).objective
    n_rows, n_cols = mat.shape
    oracle = np.empty((n_rows, n_cols), dtype=np.complex128)
    for m in range(n_rows):
        for n in range(n_cols):
            bump = np.zeros_like(mat)
            bump[m, n] = step
            d_re = (objective(mat + bump) - objective(mat - bump)) / (2.0 * step)
            bump[m, n] = 1j * step
            d_im = (objective(mat + bump) - objective(mat - bump)) / (2.0 * step)
            oracle[m, n] = 0.5 * (d_re + 1j * d_im)
    return oracle
