"""Benchmarking engine for out-of-distribution supervisors.

Trains small classifiers, wraps them with anomaly-scoring supervisors
(baseline max-softmax, ODIN, OpenMax), and measures supervisor quality via
AUROC, FPR at 95% TPR, coverage breakpoints, and checkpoint sweeps.
"""

__version__ = "0.1.0"
