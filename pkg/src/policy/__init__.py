"""Actor-critic policy over graph backbones."""
