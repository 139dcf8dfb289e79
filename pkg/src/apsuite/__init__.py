"""Active perception environments with per-step predictions.

Every environment takes a movement action plus a prediction of a hidden
quantity at each step; the prediction is scored but never changes the state.
"""

from .core import (ActivePerceptionEnv, InvalidArgument, InvalidState, LifecycleError,
                   PredictionSpace, StepOutcome, TaskSpec)
from .registry import ENV_IDS, make

__all__ = ["ActivePerceptionEnv", "ENV_IDS", "InvalidArgument", "InvalidState", "LifecycleError",
           "PredictionSpace", "StepOutcome", "TaskSpec", "make"]
__version__ = "0.1.0"
