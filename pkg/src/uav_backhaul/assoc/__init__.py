from .milp import BnBNode, MilpInstance, MilpResult, dump_milp, load_milp, solve_lp, solve_milp
from .p1 import AssociationResult, best_backhaul, build_p1_milp, solve_association
from .simplex import LPResult, linprog_max

__all__ = [
    "AssociationResult",
    "BnBNode",
    "LPResult",
    "MilpInstance",
    "MilpResult",
    "best_backhaul",
    "build_p1_milp",
    "dump_milp",
    "linprog_max",
    "load_milp",
    "solve_association",
    "solve_lp",
    "solve_milp",
]
