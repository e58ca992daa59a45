"""Reproducible bond-disorder ensembles and their transfer statistics.

Disorder model: static offsets dJ_n drawn i.i.d. uniform from
[-Delta, Delta], added to every bond coupling at every time (on-site
terms stay clean).  Each realization's randomness comes only from its
sub-seed, derived from (master_seed, strength index, realization index)
by a fixed mixing function, so any realization can be regenerated in
isolation and results are identical however the work is scheduled.

Seeding contract (stable across platforms and versions of this package):

    GOLDEN = 0x9E3779B97F4A7C15
    mix64(z) = splitmix64 finalizer (xor-shift multiply, see _mix64)
    sub_seed(master, i, k) = mix64(mix64(master + (i+1)*GOLDEN) + k*GOLDEN)

with i the 0-based index into the sorted strength grid and k the
1-based realization index; all arithmetic mod 2^64.  Offsets are then
the first n_bonds uniform(-Delta, Delta) variates of a numpy Philox
counter-based generator keyed with the sub-seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import EvolutionConfig, evolve_batch
from .errors import ConfigurationError
from .metrics import Z4_LABELS, average_fidelity, wrap_phase, z4_classify, z4_label
from .protocols import ChainModel

_GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def _mix64(z: int) -> int:
    """SplitMix64 output function: a 64-bit finalizer with full avalanche."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def split_seed(master_seed: int, strength_index: int, realization: int) -> int:
    """Sub-seed for realization k (1-based) at strength index i (0-based)."""
    if strength_index < 0 or realization < 1:
        raise ConfigurationError("strength_index is 0-based, realization 1-based")
    branch = _mix64(master_seed + (strength_index + 1) * _GOLDEN)
    return _mix64(branch + realization * _GOLDEN)


@dataclass(frozen=True)
class DisorderRealization:
    """Static per-bond offsets dJ_n with their strength and seed."""

    offsets: np.ndarray
    strength: float
    seed: int

    def __post_init__(self):
        offsets = np.ascontiguousarray(self.offsets, dtype=np.float64)
        if self.strength < 0:
            raise ConfigurationError(f"strength must be >= 0, got {self.strength}")
        if np.any(np.abs(offsets) > self.strength):
            raise ConfigurationError("offsets exceed the stated strength")
        object.__setattr__(self, "offsets", offsets)


def sample_disorder(n_bonds: int, strength: float, sub_seed: int) -> DisorderRealization:
    """Draw one realization: i.i.d. uniform offsets on [-strength, strength]."""
    if strength < 0:
        raise ConfigurationError(f"strength must be >= 0, got {strength}")
    if strength == 0.0:
        offsets = np.zeros(n_bonds, dtype=np.float64)
    else:
        gen = np.random.Generator(np.random.Philox(key=sub_seed))
        offsets = gen.uniform(-strength, strength, n_bonds)
    return DisorderRealization(offsets, strength, sub_seed)


def circular_stats(phases):
    """(mean direction, resultant length, circular std) of a set of angles.

    circular std = sqrt(-2 ln R); a fully spread sample (R = 0) returns
    inf as the dispersion sentinel.  Resultants below the roundoff of
    the complex summation count as zero (e.g. exact antipodal pairs).
    """
    phases = np.asarray(phases, dtype=np.float64)
    if phases.size == 0:
        raise ValueError("need at least one phase")
    total = np.exp(1j * phases).sum()
    r_len = min(abs(total) / phases.size, 1.0)
    if abs(total) <= phases.size * 1e-15:
        return wrap_phase(math.atan2(total.imag, total.real)), 0.0, math.inf
    mean = wrap_phase(math.atan2(total.imag, total.real))
    std = math.sqrt(max(0.0, -2.0 * math.log(r_len)))
    return mean, r_len, std


@dataclass(frozen=True)
class EnsembleSpec:
    """A disorder sweep: strengths x realizations over one chain model.

    expected_phase, when given, is the clean-transfer phase the protocol
    should lock to; summaries then report the fraction of realizations
    whose phase classifies to it.
    """

    model: ChainModel
    strengths: tuple
    realizations: int
    master_seed: int
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    z4_tolerance: float = 0.15
    expected_phase: float | None = None
    convergence_gate: bool = True
    max_halvings: int = 6

    def __post_init__(self):
        violations = self.model.validate()
        if violations:
            raise ConfigurationError("; ".join(violations))
        strengths = tuple(float(s) for s in self.strengths)
        if not strengths:
            raise ConfigurationError("need at least one strength")
        if any(s < 0 for s in strengths):
            raise ConfigurationError("strengths must be non-negative")
        if any(b <= a for a, b in zip(strengths, strengths[1:])):
            raise ConfigurationError("strengths must be strictly increasing")
        if self.realizations < 1:
            raise ConfigurationError("need at least one realization")
        if self.convergence_gate and self.max_halvings < 1:
            raise ConfigurationError("the convergence gate needs max_halvings >= 1")
        object.__setattr__(self, "strengths", strengths)


@dataclass(frozen=True)
class TransferRecord:
    """One realization's transfer outcome."""

    strength: float
    realization: int
    sub_seed: int
    amplitude: complex
    magnitude: float
    phase: float
    fidelity: float
    failed: bool = False


@dataclass(frozen=True)
class DeltaSummary:
    """Aggregates over the realizations at one disorder strength."""

    strength: float
    n_realizations: int
    n_failed: int
    mean_magnitude: float
    min_magnitude: float
    max_magnitude: float
    circular_mean: float
    resultant_length: float
    circular_std: float
    class_counts: dict
    expected_fraction: float | None
    step_size: float
    convergence_delta: float


@dataclass(frozen=True)
class EnsembleResult:
    records: list
    summaries: list


def _failed_record(strength, k, sub_seed):
    nan = float("nan")
    return TransferRecord(strength, k, sub_seed, complex(nan, nan),
                          nan, nan, nan, failed=True)


def _summarize(spec: EnsembleSpec, strength, records, step_size, conv_delta):
    ok = [r for r in records if not r.failed]
    counts = {label: 0 for label in Z4_LABELS.values()}
    counts["unclassified"] = 0
    counts["failed"] = len(records) - len(ok)
    n_expected = 0
    expected_class = (None if spec.expected_phase is None
                      else z4_classify(spec.expected_phase, spec.z4_tolerance))
    for r in ok:
        cls = z4_classify(r.phase, spec.z4_tolerance)
        counts[z4_label(cls)] += 1
        if expected_class is not None and cls == expected_class:
            n_expected += 1
    if ok:
        mags = np.array([r.magnitude for r in ok])
        mean_dir, r_len, std = circular_stats([r.phase for r in ok])
        mean_m, min_m, max_m = mags.mean(), mags.min(), mags.max()
    else:
        mean_dir = r_len = std = mean_m = min_m = max_m = float("nan")
    return DeltaSummary(
        strength=strength,
        n_realizations=len(records),
        n_failed=counts["failed"],
        mean_magnitude=float(mean_m),
        min_magnitude=float(min_m),
        max_magnitude=float(max_m),
        circular_mean=float(mean_dir),
        resultant_length=float(r_len),
        circular_std=float(std),
        class_counts=counts,
        expected_fraction=(n_expected / len(ok) if ok and expected_class is not None
                           else None),
        step_size=step_size,
        convergence_delta=conv_delta,
    )


def run_ensemble(spec: EnsembleSpec) -> EnsembleResult:
    """Evolve every (strength, realization) pair and aggregate statistics.

    Records come back in canonical order (strength ascending, then
    realization index ascending) independent of execution order or
    thread count.  Each strength's batch is integrated at a common step:
    starting from spec.evolution.step_size, the step is halved until the
    receiver amplitude of every realization moves by less than
    convergence_tol under one further halving (the published amplitudes
    are the coarse ones that passed that check).  Realizations that
    still fail after max_halvings, or that hit non-finite numbers, are
    marked failed and excluded from the statistics but stay in the
    records and the counts.
    """
    model = spec.model
    n_bonds = model.n_sites - 1
    records = []
    summaries = []
    for i, strength in enumerate(spec.strengths):
        seeds = [split_seed(spec.master_seed, i, k)
                 for k in range(1, spec.realizations + 1)]
        offsets = np.stack([sample_disorder(n_bonds, strength, s).offsets
                            for s in seeds])
        h = spec.evolution.step_size
        cfg = EvolutionConfig(spec.evolution.total_time, h, spec.evolution.convergence_tol)
        amps, _, bad = evolve_batch(model, offsets, cfg)
        a_coarse = amps[:, -1]
        failed = bad >= 0
        conv = np.zeros(spec.realizations)
        if spec.convergence_gate:
            tol = spec.evolution.convergence_tol
            for attempt in range(spec.max_halvings):
                cfg_f = EvolutionConfig(spec.evolution.total_time, h / 2.0,
                                        spec.evolution.convergence_tol)
                amps_f, _, bad_f = evolve_batch(model, offsets, cfg_f)
                a_fine = amps_f[:, -1]
                failed_f = bad_f >= 0
                conv = np.abs(a_coarse - a_fine)
                if np.all(failed | failed_f | (conv < tol)):
                    failed = failed | failed_f
                    break
                h /= 2.0
                a_coarse, failed = a_fine, failed_f
            else:
                failed = failed | (conv >= tol)
        batch_records = []
        for k in range(1, spec.realizations + 1):
            b = k - 1
            if failed[b]:
                batch_records.append(_failed_record(strength, k, seeds[b]))
                continue
            a = complex(a_coarse[b])
            batch_records.append(TransferRecord(
                strength=strength,
                realization=k,
                sub_seed=seeds[b],
                amplitude=a,
                magnitude=abs(a),
                phase=wrap_phase(math.atan2(a.imag, a.real)),
                fidelity=average_fidelity(a),
            ))
        if spec.convergence_gate and np.any(~failed):
            conv_delta = float(conv[~failed].max())
        else:
            conv_delta = float("nan")
        records.extend(batch_records)
        summaries.append(_summarize(spec, strength, batch_records, h, conv_delta))
    return EnsembleResult(records, summaries)
