"""Quasi-stationary Markov measures, their equivalence classes and the
associated monic representations of the Cuntz algebra.

The compiled kernels are used when available; set ``QSMARKOV_PURE_PYTHON=1``
to force the NumPy implementation.
"""

from .classify import DichotomyVerdict, Status, classify_pair, representation_verdict, stationary_equivalent
from .cuntzrep import build_level, check_cuntz_relations, compressed_S, monic_cyclicity_check, projection_of_cylinder
from .density import DensityEngine, PairEngine
from .errors import QSMarkovError, ValidationError
from .kernels import BACKEND
from .matseq import (
    Constant,
    EventuallyConstant,
    ExplicitList,
    Geometric,
    Perturbation,
    Power,
    SignedPower,
    forward_product,
    limit_matrix,
    perron_left,
    product_limit_check,
    validate,
)
from .measure import (
    MarkovMeasure,
    consistency_check,
    cylinder_mass,
    is_quasi_stationary,
    mixing_correlation,
    sample_paths,
    stationary_limit_measure,
)
from .symbolic import Word, enumerate_words, word

__version__ = "0.1.0"
