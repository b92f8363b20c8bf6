"""Physical scenario: arrays, geometry, steering vectors, and the cascaded
target-RIS-BS channel h(Phi) together with its angle derivative.

Coordinate and sign conventions (2-D, meters)
---------------------------------------------
* The BS array faces the +x half plane. Its elements sit at
  ``bs_pos - m * d_bs * wavelength * yhat`` for m = 0..N_BS-1, and angles at
  the BS are measured from broadside (+x), positive toward +y:
  ``phi_bs = atan2(dy, dx)`` of the RIS seen from the BS. Points with dx <= 0
  are behind the array and rejected.
* The RIS faces the -y half plane. Its elements sit at
  ``ris_pos + k * d_ris * wavelength * xhat`` for k = 0..N_R-1, and angles at
  the RIS are measured from broadside (-y), positive toward +x:
  ``angle = atan2(dx, -dy)``. Points with dy >= 0 are behind the surface and
  rejected.

With these conventions the exact-phase relay matrix below factors into
``outer(a_bs(phi_bs), conj(a_ris(phi_r)))`` in the far-field limit, matching
the steering-vector convention ``exp(-j*2*pi*spacing*k*sin(angle))``.

Relay model
-----------
The RIS-BS link is between two pieces of fixed, calibrated infrastructure, so
its per-element phases are knowable exactly. ``relay_model="geometric"``
(default) builds G from exact element-pair distances,
``G_mk = exp(-j*2*pi*(D_mk - D_00)/wavelength)``, with the common path loss
kept inside alpha. At practical link distances the two apertures sit inside
each other's Fresnel region, so G carries more than one effective spatial
degree of freedom; that is what makes the arrival angle identifiable when the
cascade gain alpha is an unknown nuisance.

``relay_model="farfield"`` replaces G by the rank-one plane-wave outer
product. It is retained for reference and for limit tests, but note that a
rank-one relay makes h and its angle derivative parallel for every scattering
matrix, so the angle information (and the optimizer objective) collapses to
zero. See tests/test_scene.py for the explicit demonstration.

The target side is always modeled as a far-field plane wave: the estimand is
a single arrival angle, and no range information about the target is assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import ArgumentError, DegenerateSceneError
from .linalg import as_rng

RELAY_MODELS = ("geometric", "farfield")

# Linear channel power below which a scene is declared degenerate.
EPS_CHANNEL = 1e-30

_CONSISTENCY_RTOL = 1e-9


@dataclass(frozen=True)
class Scenario:
    """Full parameter set of one localization scene.

    Angles in radians, distances in meters, powers in linear watts, spacings
    in wavelengths. ``alpha`` is the complex cascade gain of the
    target-RIS-BS path. Positions are optional unless
    ``relay_model="geometric"``, which needs ``ris_pos`` and ``bs_pos``.
    """

    n_bs: int
    n_r: int
    theta: float
    phi_r: float
    phi_bs: float
    alpha: complex
    d_bs: float = 0.5
    d_ris: float = 0.5
    wavelength: float = 0.1
    power: float = 0.1
    noise_power: float = 1e-15
    slots: int = 256
    pathloss_exponent: float = 2.0
    reference_gain: float | None = None
    target_pos: tuple[float, float] | None = None
    ris_pos: tuple[float, float] | None = None
    bs_pos: tuple[float, float] | None = None
    relay_model: str = "geometric"

    def __post_init__(self):
        for name in ("target_pos", "ris_pos", "bs_pos"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, (float(value[0]), float(value[1])))
        if self.reference_gain is None:
            object.__setattr__(
                self, "reference_gain", (self.wavelength / (4.0 * math.pi)) ** 2
            )
        self._validate()

    def _validate(self) -> None:
        if self.n_bs < 1 or self.n_r < 1 or self.slots < 1:
            raise ArgumentError("n_bs, n_r and slots must all be >= 1")
        for name in ("power", "noise_power", "wavelength", "d_bs", "d_ris",
                     "reference_gain"):
            if not getattr(self, name) > 0:
                raise ArgumentError(f"{name} must be positive")
        # Angles live in the open interval (-pi/2, pi/2). The comparison is
        # inclusive of the float64 value pi/2 because that float is strictly
        # below the real pi/2 (pi rounds down), hence mathematically interior.
        half_pi = math.pi / 2.0
        for name in ("theta", "phi_r", "phi_bs"):
            if not -half_pi <= getattr(self, name) <= half_pi:
                raise ArgumentError(f"{name} must lie in (-pi/2, pi/2)")
        if self.relay_model not in RELAY_MODELS:
            raise ArgumentError(f"relay_model must be one of {RELAY_MODELS}")
        if self.relay_model == "geometric" and (
            self.ris_pos is None or self.bs_pos is None
        ):
            raise ArgumentError("geometric relay_model requires ris_pos and bs_pos")
        self._check_geometry_consistency()

    def _check_geometry_consistency(self) -> None:
        """Declared angles and |alpha| must match any positions provided."""

        def close(a: float, b: float, what: str) -> None:
            if abs(a - b) > _CONSISTENCY_RTOL * (1.0 + abs(b)):
                raise ArgumentError(
                    f"{what} = {a!r} is inconsistent with positions (expected {b!r})"
                )

        if self.ris_pos is not None and self.bs_pos is not None:
            close(self.phi_bs, angle_at_bs(self.bs_pos, self.ris_pos), "phi_bs")
            close(self.phi_r, angle_at_ris(self.ris_pos, self.bs_pos), "phi_r")
        if self.ris_pos is not None and self.target_pos is not None:
            close(self.theta, angle_at_ris(self.ris_pos, self.target_pos), "theta")
            if self.bs_pos is not None:
                d1 = _distance(self.target_pos, self.ris_pos)
                d2 = _distance(self.ris_pos, self.bs_pos)
                close(
                    abs(self.alpha),
                    pathloss_gain(d1, d2, self.pathloss_exponent, self.reference_gain),
                    "|alpha|",
                )


@dataclass(frozen=True)
class ChannelBundle:
    """Cached responses for one (Scenario, Phi) pair.

    ``h = alpha * g_mat @ Phi @ a_ris_theta`` and
    ``h_dot = alpha * g_mat @ Phi @ a_ris_dot`` hold by construction.
    """

    a_bs: np.ndarray
    a_ris_theta: np.ndarray
    a_ris_phi: np.ndarray
    a_ris_dot: np.ndarray
    g_mat: np.ndarray
    h: np.ndarray
    h_dot: np.ndarray

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            getattr(self, name).setflags(write=False)


def steering_vector(beta: float, n: int, spacing: float) -> np.ndarray:
    """Array response toward angle beta: entry k is
    exp(-j*2*pi*spacing*k*sin(beta)), spacing in wavelengths."""
    if n < 1:
        raise ArgumentError("n must be >= 1")
    k = np.arange(n)
    return np.exp(-2j * np.pi * spacing * k * np.sin(beta))


def steering_derivative(theta: float, n: int, spacing: float) -> np.ndarray:
    """Derivative of steering_vector with respect to the angle.

    Equals (-j*2*pi*spacing*cos(theta)) * [0..n-1] (element-wise) times the
    steering vector; entry 0 is exactly 0. Spacing in wavelengths absorbs
    the 1/wavelength factor.
    """
    if n < 1:
        raise ArgumentError("n must be >= 1")
    k = np.arange(n)
    coef = -2j * np.pi * spacing * np.cos(theta)
    return coef * k * steering_vector(theta, n, spacing)


def _distance(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def angle_at_bs(bs_pos, point) -> float:
    """Angle of `point` from the BS broadside (+x), positive toward +y."""
    dx = point[0] - bs_pos[0]
    dy = point[1] - bs_pos[1]
    if dx <= 0:
        raise ArgumentError(
            "point is behind the BS array; angle falls outside (-pi/2, pi/2)"
        )
    return math.atan2(dy, dx)


def angle_at_ris(ris_pos, point) -> float:
    """Angle of `point` from the RIS broadside (-y), positive toward +x."""
    dx = point[0] - ris_pos[0]
    dy = point[1] - ris_pos[1]
    if dy >= 0:
        raise ArgumentError(
            "point is behind the RIS surface; angle falls outside (-pi/2, pi/2)"
        )
    return math.atan2(dx, -dy)


def pathloss_gain(d1: float, d2: float, exponent: float, reference_gain: float) -> float:
    """Two-hop product path loss: |alpha| = g0 / (d1^(e/2) * d2^(e/2))."""
    if d1 <= 0 or d2 <= 0:
        raise ArgumentError("hop distances must be positive")
    half = exponent / 2.0
    return reference_gain / (d1**half * d2**half)


def bs_element_positions(scene: Scenario) -> np.ndarray:
    """(n_bs, 2) element coordinates; element 0 at bs_pos, array along -y."""
    if scene.bs_pos is None:
        raise ArgumentError("scene has no bs_pos")
    step = scene.d_bs * scene.wavelength
    m = np.arange(scene.n_bs)
    pos = np.asarray(scene.bs_pos) + np.stack([np.zeros_like(m, dtype=float), -step * m], axis=1)
    return pos


def ris_element_positions(scene: Scenario) -> np.ndarray:
    """(n_r, 2) element coordinates; element 0 at ris_pos, array along +x."""
    if scene.ris_pos is None:
        raise ArgumentError("scene has no ris_pos")
    step = scene.d_ris * scene.wavelength
    k = np.arange(scene.n_r)
    pos = np.asarray(scene.ris_pos) + np.stack([step * k, np.zeros_like(k, dtype=float)], axis=1)
    return pos


@lru_cache(maxsize=128)
def relay_matrix(scene: Scenario) -> np.ndarray:
    """The known RIS-to-BS link matrix G, shape (n_bs, n_r), unit-modulus entries.

    geometric: exact line-of-sight phases from element-pair distances,
    referenced to the (element 0, element 0) pair so the common propagation
    phase stays inside alpha.

    farfield: rank-one plane-wave factorization
    outer(a_bs(phi_bs), conj(a_ris(phi_r))); the geometric matrix converges
    to it as the link distance grows.
    """
    if scene.relay_model == "farfield":
        a_bs = steering_vector(scene.phi_bs, scene.n_bs, scene.d_bs)
        a_phi = steering_vector(scene.phi_r, scene.n_r, scene.d_ris)
        g = np.outer(a_bs, a_phi.conj())
    else:
        bs_el = bs_element_positions(scene)
        ris_el = ris_element_positions(scene)
        dist = np.linalg.norm(bs_el[:, None, :] - ris_el[None, :, :], axis=2)
        g = np.exp(-2j * np.pi * (dist - dist[0, 0]) / scene.wavelength)
    g.setflags(write=False)
    return g


def geometry_to_scene(
    target_pos,
    ris_pos,
    bs_pos,
    base: Scenario,
    alpha_phase: float | None = None,
    seed: int = 0,
) -> Scenario:
    """Fill a scenario's angles and gain from 2-D positions.

    theta, phi_r, phi_bs come from the broadside conventions above; |alpha|
    from the two-hop path-loss model. The phase of alpha is `alpha_phase` if
    given, else drawn once from a seeded uniform distribution on [0, 2*pi).
    """
    target_pos = (float(target_pos[0]), float(target_pos[1]))
    ris_pos = (float(ris_pos[0]), float(ris_pos[1]))
    bs_pos = (float(bs_pos[0]), float(bs_pos[1]))
    d1 = _distance(target_pos, ris_pos)
    d2 = _distance(ris_pos, bs_pos)
    d3 = _distance(target_pos, bs_pos)
    if min(d1, d2, d3) <= 1e-12:
        raise ArgumentError("positions must be pairwise distinct")
    theta = angle_at_ris(ris_pos, target_pos)
    phi_r = angle_at_ris(ris_pos, bs_pos)
    phi_bs = angle_at_bs(bs_pos, ris_pos)
    magnitude = pathloss_gain(d1, d2, base.pathloss_exponent, base.reference_gain)
    if alpha_phase is None:
        alpha_phase = float(as_rng((int(seed), 0xA1FA)).uniform(0.0, 2.0 * math.pi))
    alpha = magnitude * complex(math.cos(alpha_phase), math.sin(alpha_phase))
    return replace(
        base,
        theta=theta,
        phi_r=phi_r,
        phi_bs=phi_bs,
        alpha=alpha,
        target_pos=target_pos,
        ris_pos=ris_pos,
        bs_pos=bs_pos,
    )


def _phi_matrix(phi, n_r: int) -> np.ndarray:
    """Accept a ScatteringMatrix-like object (validated at construction) or a
    raw complex array; raw arrays are deliberately allowed off the manifold
    for finite-difference and linearity tests."""
    mat = np.asarray(getattr(phi, "matrix", phi), dtype=np.complex128)
    if mat.shape != (n_r, n_r):
        raise ArgumentError(
            f"scattering matrix shape {mat.shape} does not match n_r {n_r}"
        )
    return mat


def build_channel(scene: Scenario, phi) -> ChannelBundle:
    """Assemble all cached responses and the channel pair (h, h_dot)."""
    mat = _phi_matrix(phi, scene.n_r)
    a_bs = steering_vector(scene.phi_bs, scene.n_bs, scene.d_bs)
    a_theta = steering_vector(scene.theta, scene.n_r, scene.d_ris)
    a_phi = steering_vector(scene.phi_r, scene.n_r, scene.d_ris)
    a_dot = steering_derivative(scene.theta, scene.n_r, scene.d_ris)
    g_mat = relay_matrix(scene)
    h = scene.alpha * (g_mat @ (mat @ a_theta))
    h_dot = scene.alpha * (g_mat @ (mat @ a_dot))
    return ChannelBundle(
        a_bs=a_bs,
        a_ris_theta=a_theta,
        a_ris_phi=a_phi,
        a_ris_dot=a_dot,
        g_mat=np.array(g_mat),
        h=h,
        h_dot=h_dot,
    )


def channel_norms(scene: Scenario, bundle: ChannelBundle) -> tuple[float, float]:
    """(||h||^2, ||h_dot||^2) with the degeneracy guard applied to ||h||^2."""
    hh = float(np.vdot(bundle.h, bundle.h).real)
    if hh <= EPS_CHANNEL:
        raise DegenerateSceneError(
            f"channel power {hh:.3e} is below the degeneracy guard {EPS_CHANNEL:.0e}"
        )
    return hh, float(np.vdot(bundle.h_dot, bundle.h_dot).real)


def sample_scene(
    seed,
    n_bs: int | None = None,
    n_r: int | None = None,
    dist_lo: float = 1.5,
    dist_hi: float = 4.0,
    reference_gain: float = 1.0,
) -> Scenario:
    """Seeded random geometric scene for tests and verification suites.

    Places the RIS at the origin, then the BS and target independently in
    front of it (random range in [dist_lo, dist_hi] meters, random angle
    within about +/-52 degrees of broadside). Short ranges keep the relay
    matrix well conditioned so oracle comparisons are not rounding-limited.
    """
    rng = as_rng(seed)
    if n_bs is None:
        n_bs = int(rng.choice([2, 4, 8]))
    if n_r is None:
        n_r = int(rng.choice([2, 4, 8]))

    # BS on the -x side so the RIS stays in front of the BS face (+x);
    # target anywhere in front of the RIS face (-y).
    u = rng.uniform(0.05, 0.9)
    r_bs = rng.uniform(dist_lo, dist_hi)
    bs = (-r_bs * math.sin(u), -r_bs * math.cos(u))
    ang = rng.uniform(-0.9, 0.9)
    r_t = rng.uniform(dist_lo, dist_hi)
    target = (r_t * math.sin(ang), -r_t * math.cos(ang))

    base = Scenario(
        n_bs=n_bs,
        n_r=n_r,
        theta=0.0,
        phi_r=0.0,
        phi_bs=0.0,
        alpha=1.0 + 0.0j,
        reference_gain=reference_gain,
        relay_model="farfield",
    )
    # fill angle-consistent fields and positions, then switch the relay model on
    scene = geometry_to_scene(target, (0.0, 0.0), bs, base,
                              alpha_phase=float(rng.uniform(0.0, 2.0 * math.pi)))
    return replace(scene, relay_model="geometric")
