"""Numerical laboratory for recovering hidden symbol assignments from unpaired
sequence corpora.

Subpackages cover: Markov transition-graph construction with known spectra
(graphs), hidden-Markov language definition and corpus sampling (hmm),
spectral diagnostics and recoverability bounds (spectral), pseudo-inverse and
brute-force assignment recovery (recovery), eigenvalue-gap statistics of
random reversible chains (random_chains), adversarial distribution-matching
training (adversarial), tangent-kernel training dynamics (ntk), and the
experiment sweeps plus CLI (experiments, cli).
"""

__version__ = "0.1.0"
