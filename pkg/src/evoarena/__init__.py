"""evoarena: a deterministic dueling-game simulator with a neuroevolution
toolkit (GA over flat weights, topology evolution over graph genomes) and a
competitive-coevolution harness, plus a session service for live play."""

__version__ = "0.1.0"
