"""Proper scoring rules for binary events.

Two rules are provided: quadratic, ``1 - (outcome - reported)^2``, and
logarithmic, ``outcome*ln(reported) + (1-outcome)*ln(1-reported)`` with the
report clamped away from {0,1} so payments stay finite.  An optional baseline
probability shifts the rule by ``-score(baseline, outcome)``, which changes
payments but not incentives (the shift does not depend on the report).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

DEFAULT_LOG_EPSILON = 1e-12


@dataclass(frozen=True)
class ScoringRule:
    kind: str  # "quadratic" | "log"
    baseline: float | None = None
    clamp_epsilon: float = DEFAULT_LOG_EPSILON

    def __post_init__(self):
        if self.kind not in ("quadratic", "log"):
            raise ValueError(f"unknown scoring rule kind {self.kind!r}")
        if not (0.0 < self.clamp_epsilon <= 1e-6):
            raise ValueError("clamp_epsilon must be in (0, 1e-6]")
        if self.baseline is not None and not (0.0 <= self.baseline <= 1.0):
            raise ValueError("baseline must be in [0, 1]")

    def describe(self) -> str:
        parts = [self.kind]
        if self.baseline is not None:
            parts.append(f"baseline={self.baseline!r}")
        if self.kind == "log" and self.clamp_epsilon != DEFAULT_LOG_EPSILON:
            parts.append(f"eps={self.clamp_epsilon!r}")
        return "@".join(parts)


QUADRATIC = ScoringRule("quadratic")
LOGARITHMIC = ScoringRule("log")


def _check_prob(value: float, name: str) -> None:
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"{name} must be in [0, 1], got {value}")


def _raw_score(rule: ScoringRule, reported: float, outcome: int) -> float:
    if rule.kind == "quadratic":
        return 1.0 - (outcome - reported) ** 2
    clamped = min(max(reported, rule.clamp_epsilon), 1.0 - rule.clamp_epsilon)
    return math.log(clamped) if outcome == 1 else math.log(1.0 - clamped)


def score(rule: ScoringRule, reported: float, outcome: int) -> float:
    """Payment for reporting `reported` when the event resolves to `outcome`."""
    _check_prob(reported, "reported probability")
    if outcome not in (0, 1):
        raise DomainError(f"outcome must be 0 or 1, got {outcome}")
    value = _raw_score(rule, reported, outcome)
    if rule.baseline is not None:
        value -= _raw_score(rule, rule.baseline, outcome)
    return value


def expected_score(rule: ScoringRule, reported: float, belief: float) -> float:
    """Expected payment of `reported` when the event happens with probability `belief`."""
    _check_prob(belief, "belief")
    return belief * score(rule, reported, 1) + (1.0 - belief) * score(rule, reported, 0)


@dataclass(frozen=True)
class PropernessReport:
    passed: bool
    grid_resolution: int
    witness: tuple[float, float] | None = None  # (belief, better-or-tying distant report)
    margin: float = 0.0  # how much the witness report beat truth by

    def __bool__(self) -> bool:
        return self.passed


def verify_properness(rule, grid_resolution: int = 101) -> PropernessReport:
    """Grid check that truthful reporting maximizes expected score.

    For every belief p on the grid, the expected score of the truthful report
    must strictly beat every grid report more than one step away from p.
    `rule` may be a ScoringRule or any callable ``(reported, outcome) -> float``.
    """
    if grid_resolution < 10:
        raise ValueError("grid_resolution must be >= 10")
    if isinstance(rule, ScoringRule):
        score_fn = lambda reported, outcome: score(rule, reported, outcome)
    else:
        score_fn = rule
    grid = [i / (grid_resolution - 1) for i in range(grid_resolution)]
    s1 = [score_fn(p, 1) for p in grid]
    s0 = [score_fn(p, 0) for p in grid]
    worst: tuple[float, float] | None = None
    worst_margin = -math.inf
    for i, p in enumerate(grid):
        expected = [p * s1[j] + (1.0 - p) * s0[j] for j in range(grid_resolution)]
        truth = expected[i]
        for j in range(grid_resolution):
            if abs(j - i) <= 1:
                continue
            margin = expected[j] - truth
            if margin >= 0.0 and margin > worst_margin:
                worst_margin = margin
                worst = (p, grid[j])
    if worst is None:
        return PropernessReport(True, grid_resolution)
    return PropernessReport(False, grid_resolution, worst, worst_margin)


def parse_rule_spec(spec: str) -> ScoringRule:
    """Parse a rule spec string: `quadratic` or `log`, with optional
    `@baseline=<p>` and (log only) `@eps=<e>` suffixes."""
    parts = spec.strip().split("@")
    kind = parts[0].strip().lower()
    if kind in ("logarithmic",):
        kind = "log"
    if kind not in ("quadratic", "log"):
        raise ValueError(f"unknown scoring rule {parts[0]!r} (expected 'quadratic' or 'log')")
    baseline = None
    eps = DEFAULT_LOG_EPSILON
    for part in parts[1:]:
        if "=" not in part:
            raise ValueError(f"malformed rule option {part!r}")
        key, _, value = part.partition("=")
        key = key.strip().lower()
        if key == "baseline":
            baseline = float(value)
        elif key == "eps":
            if kind != "log":
                raise ValueError("eps only applies to the log rule")
            eps = float(value)
        else:
            raise ValueError(f"unknown rule option {key!r}")
    return ScoringRule(kind, baseline, eps)
