"""Circuit-level lattices: two-leg triangle gates and the three-leg grammar cycle."""
from .three_leg import ThreeLegConfig, ThreeLegResult, run_three_leg
from .two_leg import (BranchState, GateStats, LadderConfig, Trajectory, advect, gate_blocks,
                      gate_table, markovianity_audit, run_two_leg, sample_two_leg,
                      sampled_gate_stats, triangle_gate)

__all__ = [
    "ThreeLegConfig", "ThreeLegResult", "run_three_leg", "BranchState", "GateStats",
    "LadderConfig", "Trajectory", "advect", "gate_blocks", "gate_table", "markovianity_audit",
    "run_two_leg", "sample_two_leg", "sampled_gate_stats", "triangle_gate",
]
