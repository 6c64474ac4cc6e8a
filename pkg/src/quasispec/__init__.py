"""Spectra and Lyapunov exponents of quasi-periodic Schroedinger operators via periodic approximants."""

from .bandset import BandSet
from .discriminant import (chambers_residual, check_period_collapse, expected_leading_coeff,
                           expected_leading_coeff_periodic, leadcoef_check, m_n, sample_discriminant)
from .lyapunov import (a_set_estimate, bar_gamma_mn, bar_gamma_rational, combes_thomas_probe,
                       conjecture_probe, gamma_rational, herman_check, lyapunov_curve)
from .potential import AnalyticPotential, DomainError, Rational, potential_sequence, truncation_degree
from .rationals import IrrationalTarget, RationalInputError, convergents
from .spectrum import (NumericalDegeneracyError, bloch_oracle, s_minus, s_minus_eps, sigma,
                       theorem3_probe, upsilon_measure)
from .transfer import phi_n, scaled_product

__all__ = [
    "AnalyticPotential", "BandSet", "DomainError", "IrrationalTarget", "NumericalDegeneracyError",
    "Rational", "RationalInputError", "a_set_estimate", "bar_gamma_mn", "bar_gamma_rational",
    "bloch_oracle", "chambers_residual", "check_period_collapse", "combes_thomas_probe",
    "conjecture_probe", "convergents", "expected_leading_coeff", "expected_leading_coeff_periodic",
    "gamma_rational", "herman_check", "leadcoef_check", "lyapunov_curve", "m_n", "phi_n",
    "potential_sequence", "s_minus", "s_minus_eps", "sample_discriminant", "scaled_product", "sigma",
    "theorem3_probe", "truncation_degree", "upsilon_measure",
]
