from .ballistics import BallisticsConfig, NoImpactError, impact_location, impact_times, trajectory
from .dataset import (
    Dataset,
    GenerationBudgetError,
    PROBLEM_NAMES,
    Problem,
    export_dataset_csv,
    generate_dataset,
    get_problem,
    load_dataset,
    save_dataset,
)
from .kinematics import KinematicsConfig, joint_positions
from .oracle import DEFAULT_EPS, BudgetExceededError, SampleSet, eps_stability, rejection_sample_posterior

__all__ = [
    "BallisticsConfig", "NoImpactError", "impact_location", "impact_times", "trajectory",
    "Dataset", "GenerationBudgetError", "PROBLEM_NAMES", "Problem",
    "export_dataset_csv", "generate_dataset", "get_problem", "load_dataset", "save_dataset",
    "KinematicsConfig", "joint_positions",
    "DEFAULT_EPS", "BudgetExceededError", "SampleSet", "eps_stability",
    "rejection_sample_posterior",
]
