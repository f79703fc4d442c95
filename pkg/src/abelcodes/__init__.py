"""Rate regions of abelian group codes for distributed source coding."""

from .groups import AbelianGroup, HomMatrix, PrimaryCyclic, decompose_cyclic, enumerate_abelian_groups
from .prob import ConditionalPMF, JointPMF, compose_markov, entropy, conditional_entropy, mutual_information

__version__ = "0.1.0"

__all__ = [
    "AbelianGroup",
    "ConditionalPMF",
    "HomMatrix",
    "JointPMF",
    "PrimaryCyclic",
    "compose_markov",
    "conditional_entropy",
    "decompose_cyclic",
    "entropy",
    "enumerate_abelian_groups",
    "mutual_information",
]
