"""
Controllers package for V2XSentinel.
Provides one controller class per command-line verb.
"""

from controllers.simulate_controller import SimulateController
from controllers.train_controller import TrainController
from controllers.detect_controller import DetectController
from controllers.evaluate_controller import EvaluateController

__all__ = [
    'SimulateController',
    'TrainController',
    'DetectController',
    'EvaluateController'
]
