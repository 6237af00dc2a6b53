"""Cloud-assisted MPC: dual-mode controller, cloud/edge latency simulation, numerics."""

from cloudmpc.linear import ContinuousLinearModel, DiscreteLinearModel, zoh_discretize
from cloudmpc.lqr import CostSpec, LqrSolution, control_law, solve_dare
from cloudmpc.polytope import Polytope, maximal_invariant_set
from cloudmpc.qp import QpProblem, QpResult, solve_qp
from cloudmpc.mpc import ConstraintSet, MpcPlan, MpcSpec, exec_time_model, mpc_solve

__version__ = "0.1.0"

__all__ = [
    "ContinuousLinearModel",
    "DiscreteLinearModel",
    "zoh_discretize",
    "CostSpec",
    "LqrSolution",
    "solve_dare",
    "control_law",
    "Polytope",
    "maximal_invariant_set",
    "QpProblem",
    "QpResult",
    "solve_qp",
    "ConstraintSet",
    "MpcSpec",
    "MpcPlan",
    "mpc_solve",
    "exec_time_model",
    "__version__",
]
