from .core import BACKEND, available_backends
from .simulator import (FullControl, FullState, NineDofSimulator,
                        NumericalDivergence, TireDiagnostics, LOG_COLUMNS,
                        axle_slip_angles, measure, pack_params, step9dof)
from .tires import combined_slip_scale, pacejka_force

__all__ = [
    "BACKEND", "available_backends", "FullControl", "FullState",
    "NineDofSimulator", "NumericalDivergence", "TireDiagnostics",
    "LOG_COLUMNS", "axle_slip_angles", "measure", "pack_params", "step9dof",
    "combined_slip_scale", "pacejka_force",
]
