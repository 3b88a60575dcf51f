"""Generalized approximate weak Chebyshev greedy algorithms in sequence spaces."""
from .dictionaries import Atom, Dictionary, canonical_dictionary, explicit_dictionary, g_dictionary, sup_functional, weak_select
from .engine import RealizationPolicy, Trace, adversarial_policy, audit_step, exact_policy, run_gawcga, run_wcga, weakest_policy
from .errors import *  # noqa: F401,F403
from .projection import best_approximation, perturbed_approximant
from .schedules import Constant, Indicator, PowerDecay, Schedules, Table
from .smooth import GeometricExponents, SmoothSpaceX
from .spaces import Element, Functional, LqSpace, apply, dual_exponent, lq_norm, lq_norming_functional
from .theory import SmoothnessModel, beta_bound, check_conditions, find_subsequence, lemma4_check, modulus_empirical, modulus_lp_bound, xi_solve
from .witnesses import build_witness, witness_finite_lambda1, witness_infinite_lambda1, witness_smooth_space_divergence, witness_unbounded_eta

__version__ = "0.1.0"
