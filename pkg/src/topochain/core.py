"""States, instantaneous Hamiltonians, and unitary time evolution.

The dynamics live in the single-excitation subspace, so the Hamiltonian
at any instant is a real symmetric tridiagonal N x N matrix: bond
couplings J_n on the off-diagonal and (Rice-Mele only) on-site energies
on the diagonal.  The time-ordered propagator is approximated by the
piecewise-constant midpoint rule,

    U(T) ~ prod_k exp(-i H(t_k + h/2) h),

with each factor evaluated exactly through the eigendecomposition of
the tridiagonal matrix.  Every step is therefore unitary to machine
precision and the scheme is second-order accurate in h, which the
step-halving check in evolve_converged verifies per run.

hbar = 1 and the inter-cell coupling J_e = 1 set the units; all times
are in 1/J_e.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .errors import ConfigurationError, NumericalError
from .protocols import ChainModel
from .tridiag import _tqli_rot, rotation_capacity, tridiag_eigh

_NORM_TOL = 1e-10


@dataclass(frozen=True)
class StateVector:
    """Normalized complex amplitudes over the N chain sites."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amp.ndim != 1 or amp.shape[0] < 2:
            raise ConfigurationError("state needs at least 2 site amplitudes")
        nrm = float(np.linalg.norm(amp))
        if not math.isfinite(nrm) or abs(nrm - 1.0) > _NORM_TOL:
            raise ConfigurationError(f"state norm {nrm!r} is not 1 within {_NORM_TOL}")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def excitation(cls, n_sites: int, site: int = 1):
        """Basis state with the excitation on one site (1-based index)."""
        if not 1 <= site <= n_sites:
            raise ConfigurationError(f"site {site} outside 1..{n_sites}")
        amp = np.zeros(n_sites, dtype=np.complex128)
        amp[site - 1] = 1.0
        return cls(amp)

    @property
    def n_sites(self) -> int:
        return self.amplitudes.shape[0]

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class InstantaneousHamiltonian:
    """Real symmetric tridiagonal chain Hamiltonian at a fixed time."""

    bonds: np.ndarray
    onsite: np.ndarray

    def __post_init__(self):
        bonds = np.ascontiguousarray(self.bonds, dtype=np.float64)
        onsite = np.ascontiguousarray(self.onsite, dtype=np.float64)
        if onsite.ndim != 1 or bonds.shape != (onsite.shape[0] - 1,):
            raise ConfigurationError("need N onsite energies and N-1 bonds")
        if not (np.all(np.isfinite(bonds)) and np.all(np.isfinite(onsite))):
            raise ConfigurationError("Hamiltonian entries must be finite")
        object.__setattr__(self, "bonds", bonds)
        object.__setattr__(self, "onsite", onsite)

    @property
    def n_sites(self) -> int:
        return self.onsite.shape[0]

    def to_dense(self) -> np.ndarray:
        h = np.diag(self.onsite)
        h += np.diag(self.bonds, 1) + np.diag(self.bonds, -1)
        return h


@dataclass(frozen=True)
class EvolutionConfig:
    """Integration window and accuracy knobs.

    total_time of None means "use the model's transfer window".  The
    step count is ceil(T/h); the actual step is shrunk to divide T
    evenly.  convergence_tol bounds |A_h - A_{h/2}| in the step-halving
    check; it is not consulted by plain evolve.
    """

    total_time: float | None = None
    step_size: float = 0.05
    convergence_tol: float = 1e-6

    def __post_init__(self):
        if self.total_time is not None and not self.total_time > 0:
            raise ConfigurationError(f"total_time must be positive, got {self.total_time}")
        if not self.step_size > 0:
            raise ConfigurationError(f"step_size must be positive, got {self.step_size}")
        if not self.convergence_tol > 0:
            raise ConfigurationError("convergence_tol must be positive")

    def resolve(self, model: ChainModel):
        """(T, n_steps, effective step) for this model."""
        T = self.total_time if self.total_time is not None else model.total_time
        n_steps = max(1, math.ceil(T / self.step_size))
        return T, n_steps, T / n_steps


@dataclass(frozen=True)
class EvolutionResult:
    """Final state plus diagnostics from one propagation."""

    state: StateVector
    norm_drift: float
    n_steps: int
    step_size: float
    trace_times: np.ndarray | None = None
    trace: np.ndarray | None = None


def _bond_offsets(disorder, n_bonds: int) -> np.ndarray:
    """Accept None, a raw offsets array, or anything with an .offsets field."""
    if disorder is None:
        return np.zeros(n_bonds, dtype=np.float64)
    offsets = getattr(disorder, "offsets", disorder)
    offsets = np.ascontiguousarray(offsets, dtype=np.float64)
    if offsets.shape != (n_bonds,):
        raise ConfigurationError(
            f"disorder has {offsets.shape} offsets, chain needs ({n_bonds},)"
        )
    return offsets


def assemble_hamiltonian(model: ChainModel, disorder, t: float) -> InstantaneousHamiltonian:
    """Chain Hamiltonian at time t with static bond offsets added.

    Offsets are not clamped; a large negative offset may flip a bond's
    sign, which is physical for disordered couplings.
    """
    bonds, onsite = model.couplings_at(t)
    offsets = _bond_offsets(disorder, model.n_sites - 1)
    return InstantaneousHamiltonian(bonds + offsets, onsite)


@njit(cache=True)
def _propagate_one(diag_mid, off_mid, offs, psi0, dt, sample_steps,
                   rot_c, rot_s, rot_i, out, pops):
    """Midpoint-exponential propagation of a single disorder realization.

    diag_mid: (K, n) clean on-site energies at step midpoints
    off_mid:  (K, n-1) clean bonds at step midpoints
    offs:     (n-1,) static bond offsets of this realization
    psi0:     (n,) initial state
    sample_steps: sorted cumulative step counts at which to record
                  populations (0 = initial state)
    rot_c/rot_s/rot_i: rotation buffers, length rotation_capacity(n)
    out: (n,) final state;  pops: (S, n) recorded populations

    Returns (max norm drift, first bad step or -1).
    """
    n_steps = diag_mid.shape[0]
    n = diag_mid.shape[1]
    n_samples = sample_steps.shape[0]
    d = np.empty(n, dtype=np.float64)
    e = np.empty(n, dtype=np.float64)
    psi_re = np.empty(n, dtype=np.float64)
    psi_im = np.empty(n, dtype=np.float64)
    for i in range(n):
        psi_re[i] = psi0[i].real
        psi_im[i] = psi0[i].imag
    max_drift = 0.0
    bad_step = -1
    ptr = 0
    while ptr < n_samples and sample_steps[ptr] == 0:
        for i in range(n):
            pops[ptr, i] = psi_re[i] ** 2 + psi_im[i] ** 2
        ptr += 1
    for k in range(n_steps):
        for i in range(n):
            d[i] = diag_mid[k, i]
        for i in range(n - 1):
            e[i] = off_mid[k, i] + offs[i]
        e[n - 1] = 0.0
        n_rot = _tqli_rot(d, e, rot_c, rot_s, rot_i)
        if n_rot < 0:
            bad_step = k
            break
        # psi <- V.T exp(-i Lambda dt) V psi, with V applied as the
        # recorded rotation sequence (forward) and its transpose
        # (reverse order, transposed blocks).
        for r in range(n_rot):
            i = rot_i[r]
            c = rot_c[r]
            s = rot_s[r]
            xr = psi_re[i]
            xi = psi_im[i]
            yr = psi_re[i + 1]
            yi = psi_im[i + 1]
            psi_re[i] = c * xr - s * yr
            psi_im[i] = c * xi - s * yi
            psi_re[i + 1] = s * xr + c * yr
            psi_im[i + 1] = s * xi + c * yi
        for j in range(n):
            ph = d[j] * dt
            cph = math.cos(ph)
            sph = math.sin(ph)
            ar = psi_re[j]
            ai = psi_im[j]
            psi_re[j] = ar * cph + ai * sph
            psi_im[j] = ai * cph - ar * sph
        for r in range(n_rot - 1, -1, -1):
            i = rot_i[r]
            c = rot_c[r]
            s = rot_s[r]
            xr = psi_re[i]
            xi = psi_im[i]
            yr = psi_re[i + 1]
            yi = psi_im[i + 1]
            psi_re[i] = c * xr + s * yr
            psi_im[i] = c * xi + s * yi
            psi_re[i + 1] = c * yr - s * xr
            psi_im[i + 1] = c * yi - s * xi
        norm2 = 0.0
        for i in range(n):
            norm2 += psi_re[i] ** 2 + psi_im[i] ** 2
        if not math.isfinite(norm2):
            bad_step = k
            break
        dev = abs(math.sqrt(norm2) - 1.0)
        if dev > max_drift:
            max_drift = dev
        while ptr < n_samples and sample_steps[ptr] == k + 1:
            for i in range(n):
                pops[ptr, i] = psi_re[i] ** 2 + psi_im[i] ** 2
            ptr += 1
    for i in range(n):
        out[i] = complex(psi_re[i], psi_im[i])
    return max_drift, bad_step


@njit(cache=True, parallel=True)
def _propagate(diag_mid, off_mid, offsets, psi0, dt, sample_steps, rot_cap,
               out, pops, drift, bad):
    """Batch dispatcher over realizations; see _propagate_one.

    Each realization touches only its own output slots, so results are
    identical for any thread count.  The step loop lives in the serial
    helper: code inside a prange body optimizes noticeably worse.
    """
    for b in prange(offsets.shape[0]):
        rot_c = np.empty(rot_cap, dtype=np.float64)
        rot_s = np.empty(rot_cap, dtype=np.float64)
        rot_i = np.empty(rot_cap, dtype=np.int64)
        dr, bd = _propagate_one(diag_mid, off_mid, offsets[b], psi0, dt,
                                sample_steps, rot_c, rot_s, rot_i,
                                out[b], pops[b])
        drift[b] = dr
        bad[b] = bd


def _midpoint_schedule(model: ChainModel, n_steps: int, dt: float):
    ts = (np.arange(n_steps, dtype=np.float64) + 0.5) * dt
    bonds, onsite = model.schedule(ts)
    return np.ascontiguousarray(onsite), np.ascontiguousarray(bonds)


def evolve_batch(model: ChainModel, offsets: np.ndarray, config: EvolutionConfig | None = None,
                 psi0: StateVector | None = None):
    """Propagate one realization per row of offsets; shared clean schedule.

    Returns (final_states (B, N) complex, norm_drift (B,), bad_step (B,))
    without raising on per-realization failures; bad_step[b] >= 0 marks
    realization b as failed.
    """
    config = config or EvolutionConfig()
    offsets = np.ascontiguousarray(offsets, dtype=np.float64)
    if offsets.ndim != 2 or offsets.shape[1] != model.n_sites - 1:
        raise ConfigurationError(
            f"offsets must have shape (B, {model.n_sites - 1}), got {offsets.shape}"
        )
    if psi0 is None:
        psi0 = StateVector.excitation(model.n_sites)
    _, n_steps, dt = config.resolve(model)
    diag_mid, off_mid = _midpoint_schedule(model, n_steps, dt)
    n_batch = offsets.shape[0]
    out = np.empty((n_batch, model.n_sites), dtype=np.complex128)
    pops = np.empty((n_batch, 0, model.n_sites), dtype=np.float64)
    drift = np.empty(n_batch, dtype=np.float64)
    bad = np.empty(n_batch, dtype=np.int64)
    _propagate(diag_mid, off_mid, offsets, psi0.amplitudes, dt,
               np.empty(0, dtype=np.int64), rotation_capacity(model.n_sites),
               out, pops, drift, bad)
    return out, drift, bad


def evolve(model: ChainModel, disorder=None, psi0: StateVector | None = None,
           config: EvolutionConfig | None = None, sample_times=None) -> EvolutionResult:
    """Propagate one state through the full transfer window.

    sample_times, if given, requests site populations at those times;
    each is snapped to the nearest step boundary and duplicates collapse.
    Raises NumericalError (with the offending step) if the state ever
    turns non-finite or an eigendecomposition stalls.
    """
    config = config or EvolutionConfig()
    if psi0 is None:
        psi0 = StateVector.excitation(model.n_sites)
    if psi0.n_sites != model.n_sites:
        raise ConfigurationError(
            f"state has {psi0.n_sites} sites, model has {model.n_sites}"
        )
    offsets = _bond_offsets(disorder, model.n_sites - 1)
    T, n_steps, dt = config.resolve(model)
    if sample_times is not None:
        req = np.asarray(sample_times, dtype=np.float64)
        if req.size and (req.min() < 0 or req.max() > T * (1 + 1e-12)):
            raise ConfigurationError("sample times must lie in [0, T]")
        steps = np.unique(np.clip(np.rint(req / dt), 0, n_steps).astype(np.int64))
    else:
        steps = np.empty(0, dtype=np.int64)
    diag_mid, off_mid = _midpoint_schedule(model, n_steps, dt)
    out = np.empty((1, model.n_sites), dtype=np.complex128)
    pops = np.empty((1, steps.shape[0], model.n_sites), dtype=np.float64)
    drift = np.empty(1, dtype=np.float64)
    bad = np.empty(1, dtype=np.int64)
    _propagate(diag_mid, off_mid, offsets[None, :], psi0.amplitudes, dt,
               steps, rotation_capacity(model.n_sites), out, pops, drift, bad)
    if bad[0] >= 0:
        raise NumericalError(
            f"evolution produced a non-finite state at step {bad[0]}",
            step_index=int(bad[0]),
        )
    return EvolutionResult(
        state=StateVector(out[0]),
        norm_drift=float(drift[0]),
        n_steps=n_steps,
        step_size=dt,
        trace_times=steps * dt if sample_times is not None else None,
        trace=pops[0] if sample_times is not None else None,
    )


def transition_amplitude(state) -> complex:
    """Receiver-site amplitude A = <N|psi>; arg(A) lies in (-pi, pi]."""
    amp = state.amplitudes if isinstance(state, StateVector) else np.asarray(state)
    return complex(amp[-1])


def instantaneous_spectrum(model: ChainModel, disorder, t: float) -> np.ndarray:
    """Ascending eigenvalues of the chain Hamiltonian at time t."""
    h = assemble_hamiltonian(model, disorder, t)
    return tridiag_eigh(h.onsite, h.bonds, eigvecs=False)


@dataclass(frozen=True)
class ConvergenceReport:
    amplitude_coarse: complex
    amplitude_fine: complex
    delta: float
    step_size: float


def convergence_check(model: ChainModel, disorder=None, psi0: StateVector | None = None,
                      config: EvolutionConfig | None = None) -> ConvergenceReport:
    """Receiver amplitudes at step h and h/2 and their distance."""
    config = config or EvolutionConfig()
    coarse = evolve(model, disorder, psi0, config)
    fine = evolve(
        model, disorder, psi0,
        EvolutionConfig(config.total_time, config.step_size / 2.0, config.convergence_tol),
    )
    a_c = transition_amplitude(coarse.state)
    a_f = transition_amplitude(fine.state)
    return ConvergenceReport(a_c, a_f, abs(a_c - a_f), config.step_size)


def evolve_converged(model: ChainModel, disorder=None, psi0: StateVector | None = None,
                     config: EvolutionConfig | None = None, max_halvings: int = 6):
    """Evolve with automatic step halving until |A_h - A_{h/2}| passes.

    Returns (result at the accepted step h, delta against h/2).  The
    published state is the coarse one: its halved check is what bounds
    the error.  Raises NumericalError if max_halvings is exhausted.
    """
    config = config or EvolutionConfig()
    h = config.step_size
    coarse = evolve(model, disorder, psi0,
                    EvolutionConfig(config.total_time, h, config.convergence_tol))
    for _ in range(max_halvings):
        fine = evolve(model, disorder, psi0,
                      EvolutionConfig(config.total_time, h / 2.0, config.convergence_tol))
        delta = abs(transition_amplitude(coarse.state) - transition_amplitude(fine.state))
        if delta < config.convergence_tol:
            return coarse, delta
        h /= 2.0
        coarse = fine
    raise NumericalError(
        f"step halving did not reach |dA| < {config.convergence_tol} "
        f"after {max_halvings} halvings (last h = {h})"
    )
