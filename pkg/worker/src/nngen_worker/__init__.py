"""Training worker: the semantic gate and accuracy oracle for generated nets.

Accepted architecture code is loaded in an isolated subprocess, trained for
one epoch on a desk-scale dataset, and scored by top-1 accuracy.  A small
HTTP service exposes the same operation to the generation pipeline.
"""

from .trainer import TrainRequest, TrainResult, train_once

__version__ = "0.1.0"

__all__ = ["TrainRequest", "TrainResult", "train_once", "__version__"]
