"""circlekit: multi-term circle-method expansions for lattice-point counts.

The package computes, for an integral homogeneous form F and a box B, the
expansion of the counting function R_B(P, n) into products of generalized
singular series and singular integrals, one term per index tuple, together
with exact enumeration oracles, projective point counts via Moebius
inversion, and the diagonal-form (Waring) closed forms used to validate the
general machinery.
"""

from .bernoulli import bernoulli_number, bernoulli_poly, periodic_bernoulli
from .errors import BudgetExceededError, CircleKitError, ConfigError, QuadratureError
from .forms import (
    DerivativeDecomposition,
    FormMetadata,
    HomogeneousForm,
    IntPolynomial,
    derivative_decomposition,
    diagonal_form,
    form_from_records,
    form_to_records,
    partial_derivative,
)
from .indexing import Box, IndexTuple, dual_tuple, enumerate_index_set, sigma_select
from .quadrature import DEFAULT_QUAD, QuadratureSpec

__all__ = [
    "BudgetExceededError",
    "Box",
    "CircleKitError",
    "ConfigError",
    "DEFAULT_QUAD",
    "DerivativeDecomposition",
    "FormMetadata",
    "HomogeneousForm",
    "IndexTuple",
    "IntPolynomial",
    "QuadratureError",
    "QuadratureSpec",
    "bernoulli_number",
    "bernoulli_poly",
    "derivative_decomposition",
    "diagonal_form",
    "dual_tuple",
    "enumerate_index_set",
    "form_from_records",
    "form_to_records",
    "partial_derivative",
    "periodic_bernoulli",
    "sigma_select",
]

__version__ = "0.1.0"
