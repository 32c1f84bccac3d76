"""Link budgets, turbulence statistics and QKD key rates for ground-to-satellite optical links."""
from .errors import InputError, NoSignalError, QuadratureError, SatQKDError, ScenarioError

__version__ = "0.1.0"

__all__ = ["InputError", "NoSignalError", "QuadratureError", "SatQKDError", "ScenarioError", "__version__"]
