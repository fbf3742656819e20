"""Alternating-descent solver for the two-layer stereo model.

Each iteration runs three stages on immutable snapshots: (i) refresh the
occlusion offsets and per-patch validity from the current boundary and
shapes, (ii) update patch disparity messages and fuse them into the
per-pixel consensus, (iii) refit the two global shapes from the consensus
and advance the boundary field by one descent step of the energy

    J = sum H(phi) * M_fg
      + sum (1 - H(phi_plus)) * (1 - H(phi)) * M_bg
      + mu * sum B * delta(phi) * |grad phi|

where M_fg / M_bg are the matching cost sampled at the foreground and
background shapes and B is the combined boundary weight.  The background
data term only counts where the crossing probe phi_plus stays negative,
which suppresses it exactly over half-occluded bands.  The descent bracket
(see data_bracket) applies the same suppression on the figure side and the
ray-crossing substituted background sample on the background side, so the
boundary both retreats out of over-claimed occluded bands and grows across
evidence-free collars of hidden figure.

The boundary field is median filtered every iteration and reinitialized to
a signed distance function on a fixed schedule.  Iteration stops when the
fraction of pixels whose figure/ground label changed stays below phi_tol
for several consecutive iterations.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import costs, fields, occlusion, patches, shapes


@dataclass(frozen=True)
class SolverConfig:
    """Tunable parameters; defaults follow the reference parameterization.

    beta defaults to 0.4 / d_max when left as None.  dt is the descent step
    for intensities in [0, 1]; max_step caps the per-pixel phi change of a
    single iteration (np.inf disables the cap).
    """

    dt: float = 0.2
    eps: float = 1.5
    mu: float = 4.0
    alphas: costs.AlphaWeights = costs.AlphaWeights()
    beta: float = None
    max_iters: int = 300
    reinit_every: int = 10
    median_k: int = 7
    phi_tol: float = 1e-4
    conv_window: int = 5
    n_levels: int = 4
    base: int = 4
    overlap_stride_ratio: float = 0.5
    sigma_g: float = costs.SIGMA_G
    max_step: float = 1.0
    fit_margin: float = 2.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    def resolved_beta(self, d_max):
        return 0.4 / d_max if self.beta is None else self.beta


@dataclass
class Volumes:
    m: costs.CostVolume
    b_occ: costs.CostVolume
    b_mono: costs.CostVolume

    @property
    def d_max(self):
        return self.m.d_max


def build_volumes(pair: costs.StereoPair, config: SolverConfig) -> Volumes:
    m = costs.build_matching_cost(pair)
    return Volumes(m=m,
                   b_occ=costs.build_occ_boundary_cost(m, config.sigma_g),
                   b_mono=costs.build_mono_boundary_cost(pair))


@dataclass
class TraceRecord:
    iteration: int
    energy: float
    energy_fg: float
    energy_bg: float
    energy_boundary: float
    flip_fraction: float
    fg_coeffs: tuple
    bg_coeffs: tuple
    warning: str = ""

    CSV_FIELDS = ("iteration", "energy", "energy_fg", "energy_bg",
                  "energy_boundary", "flip_fraction")

    def csv_row(self):
        cells = [repr(getattr(self, f)) for f in self.CSV_FIELDS]
        cells += [repr(c) for c in self.fg_coeffs] + [repr(c) for c in self.bg_coeffs]
        cells.append(self.warning)
        return cells


@dataclass
class SolverState:
    phi: np.ndarray
    fg_shape: np.ndarray
    bg_shape: np.ndarray
    offsets: np.ndarray
    phi_plus: np.ndarray
    consensus: patches.Consensus
    iteration: int = 0
    trace: list = field(default_factory=list)


@dataclass
class SolveResult:
    disparity: np.ndarray
    occlusion: np.ndarray
    phi: np.ndarray
    consensus: patches.Consensus
    trace: list
    converged: bool
    fg_shape: np.ndarray
    bg_shape: np.ndarray


def energy(phi, phi_plus, m_fg, m_bg, b_weight, mu, eps):
    """Discrete energy and its three terms (pixel area 1).

    m_fg and m_bg are the matching cost sampled per pixel at the foreground
    and background shapes (unshifted); phi_plus is the crossing probe
    treated as an independent field.
    """
    h_phi = fields.heaviside_eps(phi, eps)
    h_plus = fields.heaviside_eps(phi_plus, eps)
    gx, gy = fields.central_gradient(phi)
    grad_mag = np.sqrt(gx * gx + gy * gy)
    t_fg = float(np.sum(h_phi * m_fg))
    t_bg = float(np.sum((1.0 - h_plus) * (1.0 - h_phi) * m_bg))
    t_boundary = float(mu * np.sum(b_weight * fields.dirac_eps(phi, eps) * grad_mag))
    return t_fg + t_bg + t_boundary, (t_fg, t_bg, t_boundary)


def data_bracket(phi, phi_plus, m_fg, m_bg_own, m_bg_shifted, eps):
    """Data part of the descent bracket.

    On the figure side the pixel's own background cost counts only where the
    crossing probe leaves it visible, matching the energy's occlusion
    suppression: over-claimed pixels inside a half-occluded band feel the
    full foreground cost and retreat.  On the background side the cost is
    sampled at the ray crossing instead: for a hidden collar of figure the
    crossing lands where the background shape fits poorly, which is the
    outward force that grows the boundary across evidence-free bands.  The
    two sides are blended by H(phi); with zero offsets and phi_plus frozen
    far below zero this reduces to -m_fg + m_bg, the exact negative gradient
    of the data terms.
    """
    h_phi = fields.heaviside_eps(phi, eps)
    visible = 1.0 - fields.heaviside_eps(phi_plus, eps)
    return -m_fg + h_phi * visible * m_bg_own + (1.0 - h_phi) * m_bg_shifted


def boundary_bracket(phi, b_weight, mu):
    """Geodesic part: mu * (B * curvature + N . grad B)."""
    kappa = fields.curvature(phi)
    nx, ny = fields.normal_field(phi)
    bx, by = fields.central_gradient(b_weight)
    return mu * (b_weight * kappa + nx * bx + ny * by)


def evolve_phi(phi, phi_plus, offsets, volumes: Volumes, fg_shape, bg_shape,
               b_weight, config: SolverConfig):
    """One descent step of the boundary field.

    phi <- phi + dt * delta_eps(phi) * [data bracket + geodesic bracket],
    with the matching cost interpolated along d at the shape values and
    along x for the occlusion-shifted background sample.  Per-pixel steps
    are clipped to +/- max_step.
    """
    h, w = phi.shape
    d_max = volumes.d_max
    fg_map = shapes.shape_map(fg_shape, h, w, d_max)
    bg_map = shapes.shape_map(bg_shape, h, w, d_max)
    m_fg = costs.sample_volume_at_d(volumes.m, fg_map)
    m_bg_own = costs.sample_volume_at_d(volumes.m, bg_map)
    xq = np.arange(w, dtype=float)[None, :] - offsets
    m_bg_shifted = costs.sample_volume_shifted(volumes.m, xq, bg_map)
    bracket = (data_bracket(phi, phi_plus, m_fg, m_bg_own, m_bg_shifted, config.eps)
               + boundary_bracket(phi, b_weight, config.mu))
    update = config.dt * fields.dirac_eps(phi, config.eps) * bracket
    if np.isfinite(config.max_step):
        update = np.clip(update, -config.max_step, config.max_step)
    return phi + update


def _fit_or_keep(d_bar, sigma, mask, previous, label):
    try:
        return shapes.fit_shape_wls(d_bar, sigma, mask), ""
    except shapes.RankDeficient as exc:
        return previous, f"{label} fit kept previous shape: {exc}"


def step(state: SolverState, volumes: Volumes, hierarchy, config: SolverConfig,
         first=False) -> SolverState:
    """One full iteration; returns the successor state.

    Stage order: occlusion offsets, patch validity, messages, consensus,
    shape fits, boundary descent, median filter, scheduled reinitialization,
    trace append.  On the first iteration offsets are zero, every patch is
    valid, and the message regularizer is off.
    """
    phi = state.phi
    h, w = phi.shape
    d_max = volumes.d_max
    iteration = state.iteration + 1

    if first:
        offsets = np.zeros((h, w))
        phi_plus = phi.copy()
        valid = [np.ones((len(lv.ys), len(lv.xs)), dtype=bool)
                 for lv in hierarchy.levels]
        beta = 0.0
    else:
        offsets = occlusion.ray_cast_offsets(state.fg_shape, state.bg_shape, phi, d_max)
        phi_plus = occlusion.crossing_probe(phi, offsets)
        valid = patches.update_validity(hierarchy, phi, phi_plus)
        beta = config.resolved_beta(d_max)

    d_map = shapes.compose_disparity(phi, state.fg_shape, state.bg_shape, d_max)
    curves = patches.patch_cost_curves(hierarchy, volumes.m.values, d_map, beta)
    d_msgs, sigma_msgs = patches.update_messages(curves, d_max)
    consensus = patches.update_consensus(hierarchy, valid, d_msgs, sigma_msgs)

    # fit masks erode by fit_margin so pixels the boundary may still be
    # misassigning (it is only accurate to a couple of px while moving) do
    # not pull the other layer's surface toward them
    occluded = occlusion.occluded_mask(phi, phi_plus)
    m = config.fit_margin
    fg_shape, warn_fg = _fit_or_keep(consensus.d_bar, consensus.sigma,
                                     phi > m, state.fg_shape, "foreground")
    bg_shape, warn_bg = _fit_or_keep(consensus.d_bar, consensus.sigma,
                                     (phi < -m) & ~occluded, state.bg_shape, "background")

    b_weight = costs.combined_boundary_weight(volumes.b_occ, volumes.b_mono,
                                              fg_shape, config.alphas, d_max)
    new_phi = evolve_phi(phi, phi_plus, offsets, volumes, fg_shape, bg_shape,
                         b_weight, config)
    new_phi = fields.median_filter(new_phi, config.median_k)
    if config.reinit_every > 0 and iteration % config.reinit_every == 0:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", fields.AllOneSignWarning)
            new_phi = fields.reinit_sdf(new_phi)

    flip_fraction = float(np.mean((new_phi >= 0) != (phi >= 0)))
    new_phi_plus = occlusion.crossing_probe(new_phi, offsets)
    fg_map = shapes.shape_map(fg_shape, h, w, d_max)
    bg_map = shapes.shape_map(bg_shape, h, w, d_max)
    j, terms = energy(new_phi, new_phi_plus,
                      costs.sample_volume_at_d(volumes.m, fg_map),
                      costs.sample_volume_at_d(volumes.m, bg_map),
                      b_weight, config.mu, config.eps)
    record = TraceRecord(iteration=iteration, energy=j, energy_fg=terms[0],
                         energy_bg=terms[1], energy_boundary=terms[2],
                         flip_fraction=flip_fraction,
                         fg_coeffs=tuple(fg_shape), bg_coeffs=tuple(bg_shape),
                         warning="; ".join(s for s in (warn_fg, warn_bg) if s))
    return SolverState(phi=new_phi, fg_shape=fg_shape, bg_shape=bg_shape,
                       offsets=offsets, phi_plus=new_phi_plus, consensus=consensus,
                       iteration=iteration, trace=state.trace + [record])


def initial_state(pair: costs.StereoPair, ellipse: fields.EllipseSpec) -> SolverState:
    h, w = pair.shape
    phi0 = fields.init_ellipse(ellipse, h, w)
    return SolverState(phi=phi0,
                       fg_shape=shapes.zero_shape(),
                       bg_shape=shapes.zero_shape(),
                       offsets=np.zeros((h, w)),
                       phi_plus=phi0.copy(),
                       consensus=patches.Consensus(
                           d_bar=np.full((h, w), np.nan),
                           sigma=np.full((h, w), np.inf)))


def run(pair: costs.StereoPair, config: SolverConfig,
        ellipse: fields.EllipseSpec) -> SolveResult:
    """Full solve: build volumes, iterate from an elliptical boundary.

    Stops at max_iters or once the figure/ground flip fraction stays below
    phi_tol for conv_window consecutive iterations.
    """
    volumes = build_volumes(pair, config)
    hierarchy = patches.build_hierarchy(pair.shape[1], pair.shape[0],
                                        config.n_levels, config.base,
                                        config.overlap_stride_ratio)
    state = initial_state(pair, ellipse)
    converged = False
    calm = 0
    for i in range(config.max_iters):
        state = step(state, volumes, hierarchy, config, first=(i == 0))
        calm = calm + 1 if state.trace[-1].flip_fraction < config.phi_tol else 0
        if calm >= config.conv_window:
            converged = True
            break
    disparity = shapes.compose_disparity(state.phi, state.fg_shape,
                                         state.bg_shape, volumes.d_max)
    final_offsets = occlusion.ray_cast_offsets(state.fg_shape, state.bg_shape,
                                               state.phi, volumes.d_max)
    final_plus = occlusion.crossing_probe(state.phi, final_offsets)
    occluded = occlusion.occluded_mask(state.phi, final_plus)
    return SolveResult(disparity=disparity, occlusion=occluded, phi=state.phi,
                       consensus=state.consensus, trace=state.trace,
                       converged=converged, fg_shape=state.fg_shape,
                       bg_shape=state.bg_shape)
