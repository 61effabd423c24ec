"""Risk-aware planning toolkit: evidential (Normal-Inverse-Gamma) perception
outputs turned into distributionally robust CVaR collision constraints with
closed-form worst-case bounds, validated inside a sampling-based MPC
obstacle-avoidance simulator.
"""

from . import control, errors, evidential, risk, robust, sim, validation

__version__ = "0.1.0"

__all__ = ["risk", "evidential", "robust", "control", "sim", "validation", "errors"]
