"""Predict per-flip-flop functional de-rating factors from cheap circuit features.

Pipeline: parse a gate-level netlist, simulate it against a stimulus to get
the golden trace, inject single bit-flips into every flip-flop to measure its
de-rating, extract structural and activity features, then train regressors
that predict de-rating for flip-flops never injected.
"""
__version__ = "0.1.0"
