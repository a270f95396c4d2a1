"""Price-taking (Walrasian) equilibrium and demand aggregation.

The competitive equilibrium is the benchmark every comparison runs against:
prices clear the true (risk-tolerance) demands, allocations move each trader's
market exposure to their relative risk tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ExposureProfile, _frozen_array


@dataclass(frozen=True)
class EquilibriumOutcome:
    """Prices, allocations and per-trader post-trade statistics.

    post_beta is the beta of the post-transaction position E_i + <q_i, S - p>
    (meaningless and flagged via beta_defined=False when a_I = 0); premium is
    the signed cash leg <q_i, p>; utilities are post-trade certainty
    equivalents computed from the general quadratic formula.
    """

    prices: np.ndarray
    allocations: np.ndarray
    post_beta: np.ndarray
    utilities: np.ndarray
    premium: np.ndarray
    beta_defined: bool = True


def position_utilities(
    exposures: ExposureProfile, allocations: np.ndarray, prices: np.ndarray
) -> np.ndarray:
    """Certainty equivalents of E_i + <q_i, S - p> for every trader.

    One code path for every equilibrium kind: mean minus variance over twice
    the risk tolerance of the post-trade position, expanded in terms of the
    stored covariances.
    """
    q = np.asarray(allocations, dtype=float)
    p = np.asarray(prices, dtype=float)
    cov_rows = exposures.model.cov_matrix_rows
    cov = exposures.model.securities_cov
    cross = np.einsum("ij,ij->i", q, cov_rows)  # <q_i, C a_i>
    quad = np.einsum("ij,jk,ik->i", q, cov, q)  # <q_i, C q_i>
    return exposures.u - cross / exposures.delta - quad / (2.0 * exposures.delta) - q @ p


def clearing_outcome(
    exposures: ExposureProfile,
    k_shares: np.ndarray,
    prices: np.ndarray,
    beta_defined: bool = True,
) -> EquilibriumOutcome:
    """Assemble the outcome for allocations of the form q_i = k_i a_I - a_i."""
    k = np.asarray(k_shares, dtype=float)
    q = np.outer(k, exposures.a_total) - exposures.a
    p = np.asarray(prices, dtype=float)
    return EquilibriumOutcome(
        prices=_frozen_array(p),
        allocations=_frozen_array(q),
        post_beta=_frozen_array(k if beta_defined else np.zeros_like(k)),
        utilities=_frozen_array(position_utilities(exposures, q, p)),
        premium=_frozen_array(q @ p),
        beta_defined=beta_defined,
    )


def competitive_equilibrium(exposures: ExposureProfile) -> EquilibriumOutcome:
    """Unique price-taking equilibrium.

    Prices are -C a_I / delta_I and trader i receives lambda_i a_I - a_i, so
    every post-trade beta equals the relative risk tolerance.  In the trivial
    case a_I = 0 prices are zero and traders simply shed the hedgeable part of
    their endowments (q_i = -a_i).
    """
    if exposures.is_trivial:
        zeros = np.zeros(exposures.n_securities)
        return clearing_outcome(
            exposures, np.zeros(exposures.n_traders), zeros, beta_defined=False
        )
    prices = -exposures.cov_total / exposures.delta_total
    return clearing_outcome(exposures, exposures.lam, prices)


def aggregate_demand(exposures: ExposureProfile, elasticities, price) -> np.ndarray:
    """Sum of submitted linear demands -a_i - theta_i C^{-1} p at the price.

    Used as the market-clearing oracle in tests.  Raises if any elasticity is
    infinite (an extremely elastic demand has no finite-valued schedule).
    """
    thetas = []
    for theta in elasticities:
        value = theta.as_float if hasattr(theta, "as_float") else float(theta)
        if np.isinf(value):
            raise ValueError("aggregate demand is undefined for infinite elasticity")
        thetas.append(value)
    if len(thetas) != exposures.n_traders:
        raise ValueError("one elasticity per trader is required")
    p = np.asarray(price, dtype=float)
    return -exposures.a_total - sum(thetas) * exposures.solve_cov(p)
