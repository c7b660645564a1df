"""Activation exporter: pretrained classifiers -> .ooda interchange dumps."""

__version__ = "0.1.0"
