"""Neural-network reconstruction and classification of noisy quantum states."""

from . import channels, experiments, neuralnet, qstate, sampling

__all__ = ["channels", "experiments", "neuralnet", "qstate", "sampling"]

__version__ = "0.1.0"
