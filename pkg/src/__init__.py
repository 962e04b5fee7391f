"""
受限半经典本征值工具包

打靶/Newton 法计算 Dirichlet 受限本征值，并与指数小位移的领头阶渐近公式对照。
"""

__version__ = "1.0.0"
__author__ = "Data Team"

from .exceptions import ConfinedShiftError, SolverError, ValidationError
from .potentials import ConfinementDomain, PotentialSpec, resolve_potential, validate_potential
from .shooting import ModeSpec
from .spectra import HydrogenSpec, confined_eigenvalue, unconfined_eigenvalue
from .asymptotics import ShiftPrediction, shift_leading
from .pipeline import ShiftPipeline, ShiftReport
