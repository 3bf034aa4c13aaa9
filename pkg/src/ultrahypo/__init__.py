"""Ultradifferentiable classes on compact manifolds and global hypoellipticity
of invariant operators, evaluated on finite truncations of a spectral ladder."""

__version__ = "0.1.0"

from .classify import (
    CoefficientSequence,
    MembershipVerdict,
    epower_check,
    hs_norms,
    plancherel_partial_sums,
    plancherel_sum,
    test_beurling,
    test_dual,
    test_roumieu,
    test_smooth,
)
from .hypotest import HypoVerdict, implication_check, test_beurling_gh, test_roumieu_gh, test_smooth_gh
from .spectra import SpectralModel, builtin_model, sphere_laplacian, torus_laplacian
from .symbols import SymbolBound, SymbolSequence, generate, m_sigma, m_values
from .synth import Counterexample, synth_beurling, synth_roumieu
from .weights import (
    AssociatedFunction,
    AxiomConstants,
    WeightSequence,
    assoc_eval,
    assoc_inverse,
    check_axioms,
    doubling_check,
    fit_constants,
)
