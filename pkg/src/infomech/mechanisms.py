"""Direct-revelation payment mechanisms.

Each mechanism maps (scenario, scoring rule, report profile, realized outcome)
to one payment per agent.  Reports are state-subset bitmasks; the grand
intersection of all reports must have positive prior probability, otherwise
the profile is rejected at entry.

Mechanisms:
  individual  s(P(E|R_i), x), shifted by -s(P(E|S), x) unless opted out
  marginal    telescoping score increments along a fixed agent order
  shapley     the all-orders average of marginal payments (exact or sampled)
  group       everyone gets the grand-intersection score
  pivotal     grand-intersection score minus the leave-one-out score
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import MutableMapping

import numpy as np

from .errors import TooManyAgentsForExact
from .scoring import ScoringRule, score
from .state_model import Scenario, posterior

EXACT_SHAPLEY_MAX_AGENTS = 12


# ---------------------------------------------------------------------------
# Mechanism kinds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Individual:
    shifted: bool = True

    def describe(self) -> str:
        return "individual" if self.shifted else "individual,unshifted"


@dataclass(frozen=True)
class Marginal:
    order: tuple[int, ...]  # 0-based agent indices, first mover first

    def describe(self) -> str:
        return "marginal:ord=" + ",".join(str(a + 1) for a in self.order)


@dataclass(frozen=True)
class ShapleyExact:
    def describe(self) -> str:
        return "shapley"


@dataclass(frozen=True)
class ShapleySampled:
    samples: int
    seed: int

    def __post_init__(self):
        if self.samples <= 0:
            raise ValueError("sample count must be positive")

    def describe(self) -> str:
        return f"shapley:samples={self.samples},seed={self.seed}"


@dataclass(frozen=True)
class GroupRewarding:
    def describe(self) -> str:
        return "group"


@dataclass(frozen=True)
class Pivotal:
    def describe(self) -> str:
        return "pivotal"


Mechanism = Individual | Marginal | ShapleyExact | ShapleySampled | GroupRewarding | Pivotal


def parse_mechanism_spec(spec: str, n_agents: int) -> Mechanism:
    """Parse a mechanism spec string (agent numbers in order lists are 1-based)."""
    text = spec.strip().lower()
    head, _, rest = text.partition(":")
    if head == "individual" or text.startswith("individual,"):
        if text == "individual":
            return Individual()
        if text == "individual,unshifted":
            return Individual(shifted=False)
        raise ValueError(f"malformed individual spec {spec!r}")
    if head == "marginal":
        if not rest:
            return Marginal(tuple(range(n_agents)))
        if not rest.startswith("ord="):
            raise ValueError(f"malformed marginal spec {spec!r} (expected marginal:ord=...)")
        order = tuple(int(tok) - 1 for tok in rest[4:].split(","))
        if sorted(order) != list(range(n_agents)):
            raise ValueError(f"order {rest[4:]} is not a permutation of 1..{n_agents}")
        return Marginal(order)
    if head == "shapley":
        if not rest:
            return ShapleyExact()
        opts = dict(tok.split("=", 1) for tok in rest.split(","))
        unknown = set(opts) - {"samples", "seed"}
        if unknown:
            raise ValueError(f"unknown shapley options {sorted(unknown)}")
        return ShapleySampled(int(opts.get("samples", 10_000)), int(opts.get("seed", 0)))
    if head == "group":
        return GroupRewarding()
    if head == "pivotal":
        return Pivotal()
    raise ValueError(f"unknown mechanism {spec!r}")


# ---------------------------------------------------------------------------
# Report profiles and payment vectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PaymentVector:
    payments: tuple[float, ...]
    mechanism: str
    outcome: int
    rule: str
    std_errors: tuple[float, ...] | None = None

    def __iter__(self):
        return iter(self.payments)

    @property
    def total(self) -> float:
        return sum(self.payments)


def validate_reports(scenario: Scenario, reports: tuple[int, ...]) -> None:
    """Report invariants: one nonempty subset per agent, grand intersection
    with positive prior probability (posterior() raises otherwise)."""
    if len(reports) != scenario.n_agents:
        raise ValueError(f"expected {scenario.n_agents} reports, got {len(reports)}")
    full = scenario.space.full_mask
    grand = full
    for i, r in enumerate(reports):
        if r == 0:
            raise ValueError(f"agent {i}: report must be nonempty")
        if r & ~full:
            raise ValueError(f"agent {i}: report references unknown states")
        grand &= r
    posterior(scenario, grand)  # raises ZeroProbabilityInformation if degenerate


def _cached_posterior(scenario: Scenario, mask: int, cache: MutableMapping | None) -> float:
    if cache is None:
        return posterior(scenario, mask)
    hit = cache.get(mask)
    if hit is None:
        hit = posterior(scenario, mask)
        cache[mask] = hit
    return hit


# ---------------------------------------------------------------------------
# The five mechanisms
# ---------------------------------------------------------------------------


def pay_individual(
    scenario: Scenario,
    rule: ScoringRule,
    reports: tuple[int, ...],
    outcome: int,
    shifted: bool = True,
    cache: MutableMapping | None = None,
) -> PaymentVector:
    """Each agent is scored on her own report's posterior.  With the default
    shift, reporting the whole state space pays exactly zero."""
    validate_reports(scenario, reports)
    base = 0.0
    if shifted:
        base = score(rule, _cached_posterior(scenario, scenario.space.full_mask, cache), outcome)
    payments = tuple(
        score(rule, _cached_posterior(scenario, r, cache), outcome) - base for r in reports
    )
    kind = Individual(shifted)
    return PaymentVector(payments, kind.describe(), outcome, rule.describe())


def pay_marginal(
    scenario: Scenario,
    rule: ScoringRule,
    reports: tuple[int, ...],
    order: tuple[int, ...],
    outcome: int,
    cache: MutableMapping | None = None,
) -> PaymentVector:
    """Telescoping payments along `order`; the empty prefix is the whole space."""
    validate_reports(scenario, reports)
    if sorted(order) != list(range(scenario.n_agents)):
        raise ValueError("order must be a permutation of the agents")
    payments = [0.0] * scenario.n_agents
    prefix = scenario.space.full_mask
    prev = score(rule, _cached_posterior(scenario, prefix, cache), outcome)
    for agent in order:
        prefix &= reports[agent]
        here = score(rule, _cached_posterior(scenario, prefix, cache), outcome)
        payments[agent] = here - prev
        prev = here
    return PaymentVector(tuple(payments), Marginal(order).describe(), outcome, rule.describe())


def _coalition_scores(scenario, rule, reports, outcome, cache) -> list[float]:
    """Score of every coalition's pooled report, indexed by agent bitmask.

    Intersections are built incrementally: mask C's intersection is the
    intersection of C-minus-lowest-bit with the lowest agent's report.
    """
    n = scenario.n_agents
    inter = [0] * (1 << n)
    inter[0] = scenario.space.full_mask
    scores = [0.0] * (1 << n)
    scores[0] = score(rule, _cached_posterior(scenario, inter[0], cache), outcome)
    for c in range(1, 1 << n):
        low = c & -c
        inter[c] = inter[c ^ low] & reports[low.bit_length() - 1]
        scores[c] = score(rule, _cached_posterior(scenario, inter[c], cache), outcome)
    return scores


def pay_shapley(
    scenario: Scenario,
    rule: ScoringRule,
    reports: tuple[int, ...],
    outcome: int,
    mode: ShapleyExact | ShapleySampled = ShapleyExact(),
    cache: MutableMapping | None = None,
) -> PaymentVector:
    """The all-orders average of marginal payments.

    Exact mode accumulates |C|!(n-|C|-1)!/n! weighted marginal contributions
    over all coalitions (identical to the n! average, exponentially cheaper).
    Sampled mode averages marginal vectors over uniformly shuffled orders from
    a seeded Philox counter-based generator, and reports standard errors.
    """
    validate_reports(scenario, reports)
    n = scenario.n_agents
    if cache is None:
        cache = {}
    if isinstance(mode, ShapleyExact):
        if n > EXACT_SHAPLEY_MAX_AGENTS:
            raise TooManyAgentsForExact(
                f"exact mode supports up to {EXACT_SHAPLEY_MAX_AGENTS} agents, got {n}"
            )
        scores = _coalition_scores(scenario, rule, reports, outcome, cache)
        fact = [math.factorial(k) for k in range(n + 1)]
        payments = [0.0] * n
        for c in range(1 << n):
            size = c.bit_count()
            weight = fact[size] * fact[n - size - 1] / fact[n]
            for i in range(n):
                if c >> i & 1:
                    continue
                payments[i] += weight * (scores[c | (1 << i)] - scores[c])
        return PaymentVector(tuple(payments), mode.describe(), outcome, rule.describe())

    rng = np.random.Generator(np.random.Philox(mode.seed))
    samples = np.empty((mode.samples, n))
    full = scenario.space.full_mask
    score_of: dict[int, float] = {}

    def prefix_score(mask: int) -> float:
        hit = score_of.get(mask)
        if hit is None:
            hit = score(rule, _cached_posterior(scenario, mask, cache), outcome)
            score_of[mask] = hit
        return hit

    for k in range(mode.samples):
        order = rng.permutation(n)
        prefix = full
        prev = prefix_score(prefix)
        for agent in order:
            prefix &= reports[agent]
            here = prefix_score(prefix)
            samples[k, int(agent)] = here - prev
            prev = here
    means = samples.mean(axis=0)
    if mode.samples > 1:
        errs = samples.std(axis=0, ddof=1) / math.sqrt(mode.samples)
    else:
        errs = np.zeros(n)
    return PaymentVector(
        tuple(float(x) for x in means),
        mode.describe(),
        outcome,
        rule.describe(),
        std_errors=tuple(float(e) for e in errs),
    )


def pay_group(
    scenario: Scenario,
    rule: ScoringRule,
    reports: tuple[int, ...],
    outcome: int,
    cache: MutableMapping | None = None,
) -> PaymentVector:
    """Everyone receives the grand-intersection score."""
    validate_reports(scenario, reports)
    grand = scenario.space.full_mask
    for r in reports:
        grand &= r
    value = score(rule, _cached_posterior(scenario, grand, cache), outcome)
    payments = (value,) * scenario.n_agents
    return PaymentVector(payments, GroupRewarding().describe(), outcome, rule.describe())


def pay_pivotal(
    scenario: Scenario,
    rule: ScoringRule,
    reports: tuple[int, ...],
    outcome: int,
    cache: MutableMapping | None = None,
) -> PaymentVector:
    """Grand-intersection score minus the leave-one-out score, per agent.

    An agent whose report is implied by the others' pooled report gets exactly
    zero: her leave-one-out intersection equals the grand intersection.
    """
    validate_reports(scenario, reports)
    n = scenario.n_agents
    full = scenario.space.full_mask
    grand = full
    for r in reports:
        grand &= r
    grand_score = score(rule, _cached_posterior(scenario, grand, cache), outcome)
    payments = []
    for i in range(n):
        loo = full
        for j, r in enumerate(reports):
            if j != i:
                loo &= r
        payments.append(grand_score - score(rule, _cached_posterior(scenario, loo, cache), outcome))
    return PaymentVector(tuple(payments), Pivotal().describe(), outcome, rule.describe())


def pay(
    scenario: Scenario,
    rule: ScoringRule,
    reports: tuple[int, ...],
    outcome: int,
    mechanism: Mechanism,
    cache: MutableMapping | None = None,
) -> PaymentVector:
    """Dispatch to the mechanism named by `mechanism`."""
    if isinstance(mechanism, Individual):
        return pay_individual(scenario, rule, reports, outcome, mechanism.shifted, cache)
    if isinstance(mechanism, Marginal):
        return pay_marginal(scenario, rule, reports, mechanism.order, outcome, cache)
    if isinstance(mechanism, (ShapleyExact, ShapleySampled)):
        return pay_shapley(scenario, rule, reports, outcome, mechanism, cache)
    if isinstance(mechanism, GroupRewarding):
        return pay_group(scenario, rule, reports, outcome, cache)
    if isinstance(mechanism, Pivotal):
        return pay_pivotal(scenario, rule, reports, outcome, cache)
    raise TypeError(f"unknown mechanism {mechanism!r}")


def expected_payment(
    scenario: Scenario,
    mechanism: Mechanism,
    rule: ScoringRule,
    reports: tuple[int, ...],
    true_info: int,
    cache: MutableMapping | None = None,
) -> tuple[float, ...]:
    """Expected payments when the event happens with probability P(E|true_info).

    For sampled Shapley the permutation draw is pinned by the seed, so the
    expectation is over the outcome only.
    """
    q = posterior(scenario, true_info)
    pay1 = pay(scenario, rule, reports, 1, mechanism, cache).payments
    pay0 = pay(scenario, rule, reports, 0, mechanism, cache).payments
    return tuple(q * a + (1.0 - q) * b for a, b in zip(pay1, pay0))
