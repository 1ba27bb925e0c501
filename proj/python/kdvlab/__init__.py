"""Periodic KdV in spectral and action coordinates.

The heavy lifting lives in the compiled extension ``kdvlab._kdvlab``; this
package re-exports it and adds a couple of conveniences on top.
"""

import json as _json

from ._kdvlab import (  # noqa: F401
    ActionSpectrum,
    FourierField,
    HillSpectrum,
    actions,
    discriminant,
    evolve_to,
    field_from_json,
    field_to_json,
    format_double,
    frequency_vector,
    hamiltonian,
    hill_spectrum,
    matrix_oracle_spectrum,
    percival_residual,
    periodic_spectrum,
    resonance_indicator,
    run_criterion,
    run_experiment,
)

__all__ = [name for name in dir() if not name.startswith("_")]


def run_config(config, out_dir):
    """Run an experiment from a dict (or JSON text); returns (status, results dict)."""
    text = config if isinstance(config, str) else _json.dumps(config)
    status, summary = run_experiment(text, out_dir)
    return status, _json.loads(summary)
