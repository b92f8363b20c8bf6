"""Fisher information blocks, the angle CRB, and the optimizer objective.

The unknown vector is xi = [theta, Re alpha, Im alpha] with alpha a nuisance.
For the Gaussian observation model the information splits into blocks built
from h and h_dot only; eliminating the nuisance by Schur complement leaves

    crb_theta = sigma^2 / (2 * L * P * g),
    g = ||h_dot||^2 - |h_dot^H h|^2 / ||h||^2,

so maximizing g over the scattering matrix minimizes the bound. g is
evaluated through the orthogonal-residual form (the squared norm of h_dot
minus its projection on h), which is algebraically identical to the
difference above but immune to the cancellation that makes the difference
form lose precision when h_dot is nearly parallel to h. The printed
difference algebra is still exercised independently by the
full-matrix-inversion route below, which the tests compare against.

Nuisance coordinates: the blocks use the score directions {h_dot, h, j*h},
i.e. derivatives with respect to a multiplicative gain perturbation
alpha -> alpha * kappa evaluated at kappa = 1. Differentiating with respect
to [Re alpha, Im alpha] directly rescales the nuisance blocks by |alpha|
factors but leaves the Schur complement, and therefore crb_theta, unchanged;
`score_fim`'s two modes expose both parameterizations and the tests assert
the invariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSceneError
from .scene import EPS_CHANNEL, ChannelBundle, Scenario


@dataclass(frozen=True)
class FisherBlocks:
    """Information blocks for xi = [theta, Re alpha, Im alpha] plus derived values."""

    f_theta_theta: float
    f_theta_alpha: np.ndarray  # shape (2,)
    f_alpha_alpha: np.ndarray  # shape (2, 2), a scalar times the identity
    crb_theta: float
    g_value: float


def snr_prefactor(scene: Scenario) -> float:
    """The common block prefactor 2*L*P/sigma^2."""
    return 2.0 * scene.slots * scene.power / scene.noise_power


def _channel_power(bundle: ChannelBundle) -> float:
    hh = float(np.vdot(bundle.h, bundle.h).real)
    if hh <= EPS_CHANNEL:
        raise DegenerateSceneError(
            f"channel power {hh:.3e} is below the degeneracy guard {EPS_CHANNEL:.0e}"
        )
    return hh


def objective_g(bundle: ChannelBundle) -> float:
    """g = ||h_dot||^2 - |h_dot^H h|^2/||h||^2, always >= 0 (Cauchy-Schwarz).

    Computed as the squared norm of the component of h_dot orthogonal to h.
    """
    hh = _channel_power(bundle)
    coeff = np.vdot(bundle.h, bundle.h_dot) / hh
    resid = bundle.h_dot - coeff * bundle.h
    return float(np.vdot(resid, resid).real)


def crb_theta(bundle: ChannelBundle, scene: Scenario) -> float:
    """Angle CRB in rad^2; +inf when theta carries no information (g = 0)."""
    g = objective_g(bundle)
    if g <= 0.0:
        return float("inf")
    return 1.0 / (snr_prefactor(scene) * g)


def fim_blocks(bundle: ChannelBundle, scene: Scenario) -> FisherBlocks:
    """Assemble the information blocks and the derived CRB and objective."""
    hh = _channel_power(bundle)
    k = snr_prefactor(scene)
    cross = np.vdot(bundle.h_dot, bundle.h)  # h_dot^H h
    hdhd = float(np.vdot(bundle.h_dot, bundle.h_dot).real)
    if not np.isfinite(hdhd) or not np.isfinite(hh):
        raise DegenerateSceneError("non-finite channel entries")
    f_tt = k * hdhd
    f_ta = k * np.array([cross.real, -cross.imag])
    f_aa = k * hh * np.eye(2)
    return FisherBlocks(
        f_theta_theta=f_tt,
        f_theta_alpha=f_ta,
        f_alpha_alpha=f_aa,
        crb_theta=crb_theta(bundle, scene),
        g_value=objective_g(bundle),
    )


def assemble_fim(blocks: FisherBlocks) -> np.ndarray:
    """Symmetric 3x3 information matrix from the blocks."""
    f = np.zeros((3, 3))
    f[0, 0] = blocks.f_theta_theta
    f[0, 1:] = blocks.f_theta_alpha
    f[1:, 0] = blocks.f_theta_alpha
    f[1:, 1:] = blocks.f_alpha_alpha
    return f


def crb_from_fim_inverse(bundle: ChannelBundle, scene: Scenario) -> float:
    """Cross-check route: (1,1) entry of the explicitly inverted 3x3 FIM.

    The nuisance elimination happens inside the inversion here, so this path
    exercises the big-minus-big difference algebra that crb_theta's stable
    evaluation avoids. Agreement between the two is a real consistency check.
    """
    fim = assemble_fim(fim_blocks(bundle, scene))
    return float(np.linalg.inv(fim)[0, 0])


def score_fim(bundle: ChannelBundle, scene: Scenario, coordinates: str = "gain") -> np.ndarray:
    """Independent score-based FIM oracle from first principles.

    For a complex Gaussian observation with mean sqrt(P) h(xi) x[l] and white
    noise sigma^2, the information is
    F_ij = (2 L P / sigma^2) * Re(d_i^H d_j) with d_i the mean derivative in
    direction i. coordinates="gain" perturbs a multiplicative gain (directions
    {h_dot, h, j h}); coordinates="cartesian" differentiates [Re alpha,
    Im alpha] (directions {h_dot, h/alpha, j h/alpha}). Both yield the same
    [F^-1]_00.
    """
    if coordinates == "gain":
        dirs = [bundle.h_dot, bundle.h, 1j * bundle.h]
    elif coordinates == "cartesian":
        v = bundle.h / scene.alpha
        dirs = [bundle.h_dot, v, 1j * v]
    else:
        raise ValueError(f"unknown coordinates {coordinates!r}")
    k = snr_prefactor(scene)
    fim = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            fim[i, j] = k * float(np.vdot(dirs[i], dirs[j]).real)
    return fim


def crb_db(crb: float) -> float:
    """10*log10 of a CRB in rad^2 (inf passes through)."""
    if crb <= 0.0:
        return float("-inf")
    return float(10.0 * np.log10(crb))


def noise_for_target_crb(scene: Scenario, bundle: ChannelBundle, crb_target: float) -> float:
    """sigma^2 that places crb_theta exactly at crb_target for this channel."""
    g = objective_g(bundle)
    if g <= 0.0:
        raise DegenerateSceneError("objective is zero; no noise level attains the target")
    return crb_target * 2.0 * scene.slots * scene.power * g
