"""Vortex-mode crosstalk and channel capacity under Kolmogorov thin-phase turbulence."""

from .capacity import (
    CapacityCurve,
    CapacityResult,
    blahut_arimoto,
    capacity_sweep,
    entropy_difference,
    find_crossing,
    mutual_information,
    polarization_baseline,
)
from .channel import (
    ERASURE,
    POSTSELECTED,
    SUBUNITAL,
    CrosstalkMatrix,
    ModeSet,
    QuadratureError,
    QuadratureOptions,
    SorterModel,
    analytic_crosstalk,
    analytic_matrix,
    apply_sorter,
    montecarlo_matrix,
    normalize,
)
from .field import ComplexField, apply_phase, make_ang_mode, make_oam_mode, overlap
from .grid import GridSpec
from .turbulence import (
    PhaseScreen,
    ScreenSynthesisOptions,
    fried_parameter,
    generate_screen,
    screen_ensemble,
    structure_function,
    structure_function_map,
    theoretical_structure_function,
    zero_screen,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityCurve",
    "CapacityResult",
    "ComplexField",
    "CrosstalkMatrix",
    "ERASURE",
    "GridSpec",
    "ModeSet",
    "PhaseScreen",
    "POSTSELECTED",
    "QuadratureError",
    "QuadratureOptions",
    "ScreenSynthesisOptions",
    "SorterModel",
    "SUBUNITAL",
    "analytic_crosstalk",
    "analytic_matrix",
    "apply_phase",
    "apply_sorter",
    "blahut_arimoto",
    "capacity_sweep",
    "entropy_difference",
    "find_crossing",
    "fried_parameter",
    "generate_screen",
    "make_ang_mode",
    "make_oam_mode",
    "montecarlo_matrix",
    "mutual_information",
    "normalize",
    "overlap",
    "polarization_baseline",
    "screen_ensemble",
    "structure_function",
    "structure_function_map",
    "theoretical_structure_function",
    "zero_screen",
]
