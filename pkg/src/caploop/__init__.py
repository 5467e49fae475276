"""caploop: collaborative live captioning with correction-driven speaker adaptation.

The package wires a versioned caption document, a pluggable recognition
engine with hot-swappable model versions, clause-prompt generation, a
fine-tune orchestrator, and an evaluation kit into one service plus a
deterministic closed-loop simulator.
"""

__version__ = "0.1.0"
