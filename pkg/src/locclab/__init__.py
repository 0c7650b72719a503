"""Numerical toolkit for LOCC state discrimination.

Measurements, deviation measures, protocol trees, pseudo-weak splitting,
product-operator certificates and product-basis dissection.
"""

from .basis import Decision, ProductBasis, dissect, emit_protocol
from .certify import (
    closed_form_certificate,
    orthogonal_triple,
    precondition_check,
    scan_chi,
    search_certificate,
    verify_certificate,
)
from .deviation import DeviationKind, WeightedStateFamily, d_ce, d_finite, d_mf
from .measure import KrausInstrument, Povm, PseudoWeakParams
from .protocol import Node, ProtocolTree, simulate, validate
from .qcore import HilbertStructure, ProductOperator
from .splitting import SplitConfig, split_protocol

__version__ = "0.1.0"
