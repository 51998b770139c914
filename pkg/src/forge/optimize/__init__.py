from forge.optimize.bfgs import BFGSResult, bfgs_minimize
from forge.optimize.gradient import Problem, energy, energy_and_angle_gradient, energy_and_coeff_gradient
from forge.optimize.methods import METHODS, OptimizationResult, OptimizerOptions, run_method

__all__ = ["BFGSResult", "METHODS", "OptimizationResult", "OptimizerOptions", "Problem", "bfgs_minimize",
           "energy", "energy_and_angle_gradient", "energy_and_coeff_gradient", "run_method"]
