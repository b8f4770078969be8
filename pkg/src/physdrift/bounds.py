"""Closed-form step counts and error bounds.

Big-O estimates are evaluated with their hidden constant set to one and are
labelled ``up-to-constant``; the qDrift bound and the random-permutation
bound are genuine inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UP_TO_CONSTANT = "up-to-constant"
INEQUALITY = "inequality"


@dataclass(frozen=True)
class BoundQuery:
    t: float = 1.0
    L: int = 1
    lambda_max: float = 1.0
    lambda_one: float = 1.0
    epsilon: float = 0.01
    N: int = 1
    k: int = 1


def _positive(**kw) -> None:
    for name, v in kw.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v!r}")


def trotter_steps(q: BoundQuery, order: int = 1) -> float:
    """``(t L Lambda)**(1 + 1/order) / eps**(1/order)``.

    Order 1 gives ``(t L Lambda)**2 / eps``; order ``2k`` gives the
    Suzuki estimate ``(t L Lambda)**(1 + 1/2k) / eps**(1/2k)``.
    """
    _positive(t=q.t, L=q.L, lambda_max=q.lambda_max, epsilon=q.epsilon)
    if order != 1 and (order < 2 or order % 2):
        raise ValueError("order must be 1 or an even number")
    x = q.t * q.L * q.lambda_max
    return x ** (1 + 1 / order) / q.epsilon ** (1 / order)


def qdrift_samples(lam: float, t: float, epsilon: float) -> float:
    _positive(lam=lam, t=t, epsilon=epsilon)
    return 2 * (t * lam) ** 2 / epsilon


def qdrift_error(lam: float, t: float, N: int, pre_asymptotic: bool = False) -> float:
    """Diamond-distance bound ``2 lambda**2 t**2 / N``, times ``exp(2 lambda t/N)`` if requested."""
    _positive(lam=lam, t=t, N=N)
    bound = 2 * lam**2 * t**2 / N
    if pre_asymptotic:
        bound *= math.exp(2 * lam * t / N)
    return bound


def random_perm_bound(lambda_max: float, t: float, L: int, N: int) -> float:
    _positive(lambda_max=lambda_max, t=t, L=L, N=N)
    x = lambda_max * t * L
    return x**4 / N**3 * math.exp(2 * x / N) + 2 * x**3 / (3 * N**2) * math.exp(x / N)


def optimal_trotter_order(epsilon: float, base10: bool = False) -> float:
    """Stationary point ``k* = sqrt(log(1/eps) / (2 log 5))`` of the Suzuki cost.

    Both logarithms share a base, so ``base10`` does not change the result.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    log = math.log10 if base10 else math.log
    return math.sqrt(log(1 / epsilon) / (2 * log(5)))


def trotter_cost_profile(epsilon: float, ks=range(1, 6)) -> dict[int, float]:
    """Relative cost ``5**k / eps**(1/2k)`` over Suzuki half-orders ``k``."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    return {k: 5.0**k / epsilon ** (1 / (2 * k)) for k in ks}


def jensen_product(p, cost) -> float:
    """``E_p[1/C] * E_p[C]``; at least one for any distribution."""
    p, cost = _check_distribution(p, cost)
    return float(np.dot(p, 1 / cost) * np.dot(p, cost))


def _check_distribution(p, cost):
    p = np.asarray(p, dtype=float)
    cost = np.asarray(cost, dtype=float)
    if p.shape != cost.shape or p.ndim != 1 or p.size == 0:
        raise ValueError("p and C must be vectors of equal length")
    if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
        raise ValueError("p must be a probability vector")
    if np.any(cost <= 0):
        raise ValueError("costs must be positive")
    return p, cost


def importance_cost_compare(p, cost, t: float, lam: float, epsilon: float) -> tuple[float, float, bool]:
    """Costs of cost-aware sampling ``C_qc`` and plain sampling ``C_p``.

    ``C_qc = (t lam)**2/eps * (1 + E_p[1/C] E_p[C]) / E_p[1/C]`` and
    ``C_p = 2 (t lam)**2/eps * E_p[C]``; the flag reports ``C_qc <= C_p``.
    """
    p, cost = _check_distribution(p, cost)
    _positive(t=t, lam=lam, epsilon=epsilon)
    e_inv = float(np.dot(p, 1 / cost))
    e_c = float(np.dot(p, cost))
    scale = (t * lam) ** 2 / epsilon
    c_qc = scale * (1 + e_inv * e_c) / e_inv
    c_p = 2 * scale * e_c
    return c_qc, c_p, bool(c_qc <= c_p)


def bound_table(q: BoundQuery) -> list[tuple[str, str, float, str]]:
    """``(protocol, formula, value, kind)`` rows for the ``bounds`` subcommand."""
    rows = [
        ("trotter1", "(tL*Lambda)^2/eps", trotter_steps(q, 1), UP_TO_CONSTANT),
        (f"suzuki{2 * q.k}", "(tL*Lambda)^(1+1/2k)/eps^(1/2k)", trotter_steps(q, 2 * q.k), UP_TO_CONSTANT),
        ("qdrift", "N = 2(t*lambda)^2/eps", qdrift_samples(q.lambda_one, q.t, q.epsilon), UP_TO_CONSTANT),
        ("qdrift", "eps = 2 lambda^2 t^2/N", qdrift_error(q.lambda_one, q.t, q.N), INEQUALITY),
        ("qdrift", "eps = 2 lambda^2 t^2/N * exp(2 lambda t/N)",
         qdrift_error(q.lambda_one, q.t, q.N, pre_asymptotic=True), INEQUALITY),
        ("random_permutation", "(Lambda tL)^4/N^3 e^(2x/N) + 2(Lambda tL)^3/(3N^2) e^(x/N)",
         random_perm_bound(q.lambda_max, q.t, q.L, q.N), INEQUALITY),
        ("suzuki", "k* = sqrt(ln(1/eps)/(2 ln 5))", optimal_trotter_order(q.epsilon), "stationary point"),
    ]
    return rows
