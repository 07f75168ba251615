"""Size limits for the brute-force oracles and the expensive constructions."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

ORACLE_ENV_VAR = "MATCHIDEAL_MAX_ORACLE"


@dataclass(frozen=True)
class Limits:
    max_oracle: int = 12  # largest n for perfect-matching enumeration
    max_tour_oracle: int = 8  # largest n for enumerating S_n
    max_symmetrize: int = 8  # matching symmetrization sums over S_n
    max_tour_symmetrize: int = 7
    max_inductive_n: int = 8
    max_inductive_degree: int = 3
    max_basis: int = 5000  # Lasserre moment basis cap
    psd_clamp: float = 1e-9
    numeric_tol: float = 1e-7


def current_limits() -> Limits:
    """Defaults, with the matching oracle cap taken from the environment if set."""
    limits = Limits()
    raw = os.environ.get(ORACLE_ENV_VAR)
    if raw:
        limits = replace(limits, max_oracle=int(raw))
    return limits
