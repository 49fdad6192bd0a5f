"""Numerical toolkit for convex log-Sobolev inequalities on the real line."""
from .costs import CostFunction, hp, make_cost, quadratic, theta_D, transform
from .inequalities import (TestFunctionFamily, constant_chain, convex_poincare_test, dual_ic_test,
                           entropy, lsi_test, relative_entropy)
from .measures import Atoms, ClosedForm, GridCdf, discretize, family, load_measure, two_point
from .report import FAIL, INCONCLUSIVE, PASS, Report
from .transport_map import criterion_check, delta_mu, modulus_curve
from .weak_ot import optimal_barycenters, weak_ot_solve, weak_transport_verify

__version__ = "0.1.0"
