"""Globally optimal reactive loading of sparse reconfigurable surfaces.

Library layout:

- :mod:`risopt.emmodel` — analytic impedance synthesis of the horn/dipole link
- :mod:`risopt.network` — multiport model, reductions, terminated solves
- :mod:`risopt.qcqp` — real-lifted nonconvex program construction
- :mod:`risopt.sdp` — dense primal-dual interior-point solver
- :mod:`risopt.sdr` — relaxation pipeline with tightness certification
- :mod:`risopt.metrics` — efficiency / radar-cross-section conversions
- :mod:`risopt.scenarios` — configuration families and angle sweeps
- :mod:`risopt.touchstone`, :mod:`risopt.zcache` — external data in/out
- :mod:`risopt.report`, :mod:`risopt.cli` — tables, charts, command line
"""

from .emmodel import LinkGeometry, build_impedance_matrix
from .errors import (
    ModelError,
    NetworkError,
    QcqpError,
    RisoptError,
    SolverError,
    TouchstoneError,
)
from .metrics import LinkBudget, brcs_from_pte, flat_plate_rcs, pte, pte_from_brcs
from .network import (
    ImpedanceMatrix,
    SurfaceConfig,
    loaded_solve,
    merge_parallel,
    partition,
    random_passive_network,
    reduce_open,
    reduce_short,
    s_to_z,
    z_to_s,
)
from .qcqp import QcqpProblem, assemble_qcqp
from .scenarios import ScenarioSpec, SweepRecord, dominance_check, make_config, sweep
from .sdp import SdpProblem, SdpSolution, SolverOptions, solve_sdp
from .sdr import SdrOutcome, oracle_search, solve_config, tightness_error
from .touchstone import touchstone_export, touchstone_import
from .zcache import load_zmatrix, save_zmatrix

__version__ = "1.0.0"

__all__ = [
    "ImpedanceMatrix",
    "LinkBudget",
    "LinkGeometry",
    "ModelError",
    "NetworkError",
    "QcqpError",
    "QcqpProblem",
    "RisoptError",
    "ScenarioSpec",
    "SdpProblem",
    "SdpSolution",
    "SdrOutcome",
    "SolverError",
    "SolverOptions",
    "SurfaceConfig",
    "SweepRecord",
    "TouchstoneError",
    "assemble_qcqp",
    "brcs_from_pte",
    "build_impedance_matrix",
    "dominance_check",
    "flat_plate_rcs",
    "loaded_solve",
    "load_zmatrix",
    "make_config",
    "merge_parallel",
    "oracle_search",
    "partition",
    "pte",
    "pte_from_brcs",
    "random_passive_network",
    "reduce_open",
    "reduce_short",
    "s_to_z",
    "save_zmatrix",
    "solve_config",
    "solve_sdp",
    "sweep",
    "tightness_error",
    "touchstone_export",
    "touchstone_import",
    "z_to_s",
]
