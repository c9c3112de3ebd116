"""Transformer scorer plugin for the cognotes pipeline.

Fine-tunes a small word-level transformer encoder on the pipeline's
train/val exports and serves three-class probabilities over the external
scorer wire protocol (see PROTOCOL.md in the main package). The plugin is
fully optional: the core pipeline runs without it.
"""

__version__ = "0.1.0"
