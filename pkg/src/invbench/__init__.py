"""invbench: invertible and soft-invertible architectures on two ambiguous
inverse problems, with rejection-sampling ground truth and MMD-based scoring."""

__version__ = "0.1.0"
