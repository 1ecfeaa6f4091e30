"""Privacy parameters, the event ledger, and composition rules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field


class ParameterError(ValueError):
    """Invalid parameter for a mechanism, builder, or experiment."""


class UsageError(RuntimeError):
    """A stateful object was driven outside its contract."""


@dataclass(frozen=True)
class PrivacyParams:
    """An (epsilon, delta) differential-privacy target."""

    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        if not (0.0 <= self.delta < 1.0):
            raise ParameterError(f"delta must be in [0, 1), got {self.delta}")


@dataclass
class PrivacyLedger:
    """Append-only list of per-event (epsilon_t, delta_t) charges."""

    events: list[tuple[float, float]] = field(default_factory=list)

    def charge(self, epsilon: float, delta: float = 0.0) -> None:
        if epsilon < 0 or delta < 0:
            raise ParameterError("ledger charges must be nonnegative")
        self.events.append((float(epsilon), float(delta)))

    def extend(self, events) -> None:
        for eps, delta in events:
            self.charge(eps, delta)

    def __len__(self) -> int:
        return len(self.events)


def compose_basic(ledger: PrivacyLedger) -> tuple[float, float]:
    """Sequential composition: sum the epsilons, sum the deltas."""
    eps = sum(e for e, _ in ledger.events)
    delta = sum(d for _, d in ledger.events)
    return (eps, delta)


def compose_advanced_homogeneous(
    epsilon: float, k: int, delta_prime: float, delta: float = 0.0
) -> tuple[float, float]:
    """k-fold advanced composition of one (epsilon, delta)-DP mechanism.

    Returns (sqrt(2 k ln(1/delta')) eps + k eps (e^eps - 1), delta' + k delta).
    """
    if k < 0:
        raise ParameterError("k must be nonnegative")
    if not (0.0 < delta_prime < 1.0):
        raise ParameterError("delta_prime must be in (0, 1)")
    if k == 0:
        return (0.0, delta_prime)
    if epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    eps_out = math.sqrt(2.0 * k * math.log(1.0 / delta_prime)) * epsilon
    eps_out += k * epsilon * (math.exp(epsilon) - 1.0)
    return (eps_out, delta_prime + k * delta)


def compose_advanced_heterogeneous(
    ledger: PrivacyLedger, log_inv_delta: float
) -> tuple[float, float]:
    """Heterogeneous advanced composition over a ledger.

    Returns ((3/2) sum eps_t^2 + sqrt(6 sum eps_t^2 log(1/delta)),
             sum delta_t + delta) for the supplied log(1/delta).
    """
    if log_inv_delta < 0:
        raise ParameterError("log_inv_delta must be nonnegative")
    s2 = sum(e * e for e, _ in ledger.events)
    eps_out = 1.5 * s2 + math.sqrt(6.0 * s2 * log_inv_delta)
    delta_out = sum(d for _, d in ledger.events) + (
        math.exp(-log_inv_delta) if log_inv_delta > 0 else 1.0
    )
    return (eps_out, delta_out)
