"""Training, evaluation, sweeps and the run registry."""
