"""Single-excitation state transfer in time-modulated tight-binding chains.

Submodules load lazily so the command line can pin the worker count
before any compiled code is imported.
"""

__version__ = "0.1.0"

_EXPORTS = {
    "ChainModel": "protocols",
    "DEFAULT_PARAMS": "protocols",
    "PROTOCOLS": "protocols",
    "StateVector": "core",
    "EvolutionConfig": "core",
    "EvolutionResult": "core",
    "evolve": "core",
    "evolve_batch": "core",
    "evolve_converged": "core",
    "convergence_check": "core",
    "transition_amplitude": "core",
    "assemble_hamiltonian": "core",
    "instantaneous_spectrum": "core",
    "tridiag_eigh": "tridiag",
    "DisorderRealization": "ensemble",
    "EnsembleSpec": "ensemble",
    "EnsembleResult": "ensemble",
    "run_ensemble": "ensemble",
    "sample_disorder": "ensemble",
    "split_seed": "ensemble",
    "circular_stats": "ensemble",
    "BlochState": "analysis",
    "PhaseCorrection": "analysis",
    "PeriodSweep": "analysis",
    "expected_phase": "analysis",
    "phase_correction": "analysis",
    "apply_correction": "analysis",
    "protocol_phase": "analysis",
    "critical_period_sweep": "analysis",
    "band_flatness": "analysis",
    "compare_protocols": "analysis",
    "average_fidelity": "metrics",
    "wrap_phase": "metrics",
    "circular_distance": "metrics",
    "z4_classify": "metrics",
    "z4_label": "metrics",
    "Z4_PHASES": "metrics",
    "TopochainError": "errors",
    "ConfigurationError": "errors",
    "NumericalError": "errors",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    try:
        module_name = _EXPORTS[name]
    except KeyError:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}") from None
    import importlib

    module = importlib.import_module(f".{module_name}", __name__)
    value = getattr(module, name)
    globals()[name] = value
    return value


def __dir__():
    return __all__
