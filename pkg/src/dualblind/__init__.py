"""Dual-blind deconvolution of overlaid radar/communications snapshots.

Library layout:

- ``scene``:    dimensions, steering vectors, atoms, scene sampling
- ``lifting``:  lifted linear model, forward map and adjoints
- ``sdp``:      dual semidefinite program in exported conic standard form
- ``solver``:   native first-order operator-splitting conic solver
- ``recovery``: dual polynomials, peak refinement, least-squares recovery
- ``cli``:      experiment configs, runners, sweeps and the command line
"""

from .scene import (
    ChannelSpec,
    Dims,
    ParamTriple,
    Scene,
    SceneConfig,
    Subspaces,
    atom_vector,
    make_subspaces,
    min_separation_ok,
    sample_scene,
    steering_delay_doppler,
    steering_doa,
)
from .lifting import (
    LiftedPair,
    Measurement,
    adjoint_comms,
    adjoint_radar,
    apply_forward,
    channel_vector,
    lift,
    synthesize_measurements,
)

__all__ = [
    "ChannelSpec", "Dims", "ParamTriple", "Scene", "SceneConfig", "Subspaces",
    "atom_vector", "make_subspaces", "min_separation_ok", "sample_scene",
    "steering_delay_doppler", "steering_doa",
    "LiftedPair", "Measurement", "adjoint_comms", "adjoint_radar",
    "apply_forward", "channel_vector", "lift", "synthesize_measurements",
]

__version__ = "0.1.0"
