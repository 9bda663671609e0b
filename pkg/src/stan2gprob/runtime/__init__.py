"""Runtime values, builtins, distributions and inference."""
