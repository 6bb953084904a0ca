"""Tool-program reasoning engine: DSL interpreter, verifier rewards, GRPO batches, pseudo-label forge, evaluation."""

__version__ = "0.1.0"
