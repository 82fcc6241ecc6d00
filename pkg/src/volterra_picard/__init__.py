"""Projected Picard iterations for nonlinear partial Volterra
integro-differential equations, built on piecewise-linear Schauder bases."""

from volterra_picard.basis import HatBasis, NodeSequence, dyadic_nodes, phi4, tau, tau_inverse
from volterra_picard.bounds import ContractionParams, build_report, choose_m, lemma3_bound, mu, tail_sum
from volterra_picard.errors import DomainError
from volterra_picard.problems import example, standard_points
from volterra_picard.quadrature import QuadratureRule
from volterra_picard.volterra import InitialGuess, Iterate, Problem, apply_F_oracle, build_G, compose

__version__ = "0.1.0"
