"""Bad diffusion / perfect diffusion simulation lab."""

__version__ = "0.1.0"
