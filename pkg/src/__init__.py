"""AMoD rebalancing: simulator, graph backbones and actor-critic policies."""
