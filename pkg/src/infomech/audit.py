"""Brute-force verification of incentive and payment-structure properties.

All audits enumerate finite scenarios exhaustively and compare expected
payments under truth-telling against every deviation in the configured
report space, assuming the other agents report truthfully.  Utilities are
expected monetary payments (risk neutrality).

Deviations that would make the pooled reports contradict the prior (a
zero-probability grand intersection) are not available strategies: the
mechanisms reject such profiles at entry.  In the ex-interim audit a
deviation is dropped if it is infeasible against any realizable combination
of the others' signals; in the ex-post audit feasibility is per realization.

Verdicts are deterministic: enumeration runs in a fixed lexicographic order
and the reported witness is the first among maximal violations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import TooLargeToEnumerate
from .mechanisms import Mechanism, pay
from .scoring import ScoringRule, score
from .state_model import (
    DEFAULT_MAX_EXHAUSTIVE,
    Scenario,
    SignalProfile,
    joint_signal_weights,
    posterior,
)

DEFAULT_AUDIT_TOL = 1e-9
ALL_SUBSETS_MAX_STATES = 16
DECOMPOSITION_MAX_STATES = 10


@dataclass(frozen=True)
class ReportSpace:
    """Where deviating reports may come from.

    `signals`: the agent's own possible signals, plus the whole state space
    (reporting nothing).  `all-subsets`: every nonempty subset of the
    positive-prior states (subsets differing only in zero-prior states
    produce identical payments, so those are canonicalized away).
    """

    mode: str = "signals"

    def __post_init__(self):
        if self.mode not in ("signals", "all-subsets"):
            raise ValueError(f"unknown report space {self.mode!r}")


SIGNAL_SUPPORT = ReportSpace("signals")
ALL_SUBSETS = ReportSpace("all-subsets")


@dataclass(frozen=True)
class AuditVerdict:
    property_name: str
    mechanism: str
    passed: bool
    worst_violation: float
    tolerance: float
    checked: int
    witness: dict | None = None
    ties: int = 0
    tie_example: dict | None = None
    notes: str = ""

    def __post_init__(self):
        assert self.passed == (self.worst_violation <= self.tolerance)


def _support_mask(scenario: Scenario) -> int:
    m = 0
    for i, p in enumerate(scenario.space.prior):
        if p > 0.0:
            m |= 1 << i
    return m


def _submasks(mask: int) -> list[int]:
    """All nonzero submasks of `mask`, ascending."""
    out = []
    sub = mask
    while sub:
        out.append(sub)
        sub = (sub - 1) & mask
    return sorted(out)


def deviation_reports(scenario: Scenario, space: ReportSpace, agent: int) -> tuple[int, ...]:
    if space.mode == "signals":
        masks = set(scenario.signal_support(agent))
        masks.add(scenario.space.full_mask)
        return tuple(sorted(masks))
    if scenario.space.size > ALL_SUBSETS_MAX_STATES:
        raise TooLargeToEnumerate(
            f"all-subsets deviations require at most {ALL_SUBSETS_MAX_STATES} states"
        )
    return tuple(_submasks(_support_mask(scenario)))


class _PaymentTable:
    """Memoized per-agent expected-outcome payments for report profiles."""

    def __init__(self, scenario, mechanism, rule):
        self.scenario = scenario
        self.mechanism = mechanism
        self.rule = rule
        self.posteriors: dict[int, float] = {}
        self.pays: dict[tuple[tuple[int, ...], int], tuple[float, ...]] = {}

    def payments(self, reports: tuple[int, ...], outcome: int) -> tuple[float, ...]:
        key = (reports, outcome)
        hit = self.pays.get(key)
        if hit is None:
            hit = pay(
                self.scenario, self.rule, reports, outcome, self.mechanism, self.posteriors
            ).payments
            self.pays[key] = hit
        return hit

    def utility(self, reports: tuple[int, ...], agent: int, w1: float, w0: float) -> float:
        """w1*payment(x=1) + w0*payment(x=0) for one agent (weights need not sum to 1)."""
        return (
            w1 * self.payments(reports, 1)[agent] + w0 * self.payments(reports, 0)[agent]
        )


def _signal_combos(scenario: Scenario, agents: list[int]):
    """Positive-probability signal combinations for `agents`, with event split.

    Yields (masks, w1, w0): w1 the joint weight on event states, w0 on the
    rest.  Enumeration order is the sorted per-agent support product.
    """
    supports = [scenario.signal_support(a) for a in agents]
    eind = scenario.event_indicator
    for combo in itertools.product(*supports):
        w = joint_signal_weights(scenario, SignalProfile.of(dict(zip(agents, combo))))
        total = float(w.sum())
        if total <= 0.0:
            continue
        w1 = float((w * eind).sum())
        yield combo, w1, total - w1


def _interim_estimate(scenario: Scenario, space: ReportSpace) -> int:
    total = 0
    profiles = 1
    for a in range(scenario.n_agents):
        profiles *= len(scenario.signal_support(a))
    for a in range(scenario.n_agents):
        total += profiles * (len(deviation_reports(scenario, space, a)) + 1)
    return total


def audit_ex_interim(
    scenario: Scenario,
    mechanism: Mechanism,
    rule: ScoringRule,
    report_space: ReportSpace = SIGNAL_SUPPORT,
    tolerance: float = DEFAULT_AUDIT_TOL,
    max_exhaustive: int = DEFAULT_MAX_EXHAUSTIVE,
) -> AuditVerdict:
    """Is truth-telling optimal in expectation over the others' signals?

    For every agent, every signal she can receive, and every available
    deviation, compares the conditional expectation (over the others'
    signals, the state, and the outcome) of her payment under truth versus
    the deviation.
    """
    if _interim_estimate(scenario, report_space) > max_exhaustive:
        raise TooLargeToEnumerate("ex-interim sweep exceeds the enumeration cap")
    table = _PaymentTable(scenario, mechanism, rule)
    n = scenario.n_agents
    full = scenario.space.full_mask
    worst = 0.0
    witness = None
    ties = 0
    tie_example = None
    checked = 0
    for i in range(n):
        others = [j for j in range(n) if j != i]
        devs_all = deviation_reports(scenario, report_space, i)
        for theta_i in scenario.signal_support(i):
            combos = []
            for combo, w1, w0 in _signal_combos_with_fixed(scenario, i, theta_i, others):
                combos.append((combo, w1, w0))
            if not combos:
                continue
            inters = []
            for combo, _, _ in combos:
                m = full
                for sig in combo:
                    m &= sig
                inters.append(m)
            available = [
                d
                for d in devs_all
                if all(scenario.space.prob_of(d & m) > 0.0 for m in inters)
            ]

            def payoff(report: int) -> float:
                u = 0.0
                for (combo, w1, w0), _m in zip(combos, inters):
                    reports = _assemble(n, i, report, others, combo)
                    u += table.utility(reports, i, w1, w0)
                return u

            u_truth = payoff(theta_i)
            for d in available:
                if d == theta_i:
                    continue
                checked += 1
                violation = payoff(d) - u_truth
                if violation > tolerance:
                    if violation > worst:
                        worst = violation
                        witness = {
                            "agent": i,
                            "true_signal": theta_i,
                            "deviation": d,
                            "truthful_utility": u_truth,
                            "deviating_utility": u_truth + violation,
                        }
                elif abs(violation) <= tolerance:
                    ties += 1
                    if tie_example is None:
                        tie_example = {"agent": i, "true_signal": theta_i, "deviation": d}
    return AuditVerdict(
        "ex-interim-ic",
        mechanism.describe(),
        worst <= tolerance,
        worst,
        tolerance,
        checked,
        witness,
        ties,
        tie_example,
        notes=f"report space: {report_space.mode}; utilities are expected payments",
    )


def _signal_combos_with_fixed(scenario, agent, theta, others):
    """Like _signal_combos over `others`, with `agent`'s signal pinned to `theta`."""
    supports = [scenario.signal_support(a) for a in others]
    eind = scenario.event_indicator
    base = scenario.prior_array * scenario.signal_prob_vector(agent, theta)
    for combo in itertools.product(*supports):
        w = base.copy()
        for a, sig in zip(others, combo):
            w = w * scenario.signal_prob_vector(a, sig)
        total = float(w.sum())
        if total <= 0.0:
            continue
        w1 = float((w * eind).sum())
        yield combo, w1, total - w1


def _assemble(n, agent, report, others, other_reports) -> tuple[int, ...]:
    reports = [0] * n
    reports[agent] = report
    for a, r in zip(others, other_reports):
        reports[a] = r
    return tuple(reports)


def audit_ex_post(
    scenario: Scenario,
    mechanism: Mechanism,
    rule: ScoringRule,
    report_space: ReportSpace = SIGNAL_SUPPORT,
    tolerance: float = DEFAULT_AUDIT_TOL,
    max_exhaustive: int = DEFAULT_MAX_EXHAUSTIVE,
) -> AuditVerdict:
    """Is truth-telling optimal for every realization of the others' signals?

    For every positive-probability joint signal profile and every feasible
    deviation, compares the agent's expected payment conditional on the full
    profile (the expectation is over the state and outcome only).
    """
    if _interim_estimate(scenario, report_space) > max_exhaustive:
        raise TooLargeToEnumerate("ex-post sweep exceeds the enumeration cap")
    table = _PaymentTable(scenario, mechanism, rule)
    n = scenario.n_agents
    full = scenario.space.full_mask
    agents = list(range(n))
    worst = 0.0
    witness = None
    ties = 0
    tie_example = None
    checked = 0
    for profile, w1, w0 in _signal_combos(scenario, agents):
        truth_reports = tuple(profile)
        for i in range(n):
            others_mask = full
            for j in range(n):
                if j != i:
                    others_mask &= profile[j]
            u_truth = table.utility(truth_reports, i, w1, w0)
            for d in deviation_reports(scenario, report_space, i):
                if d == profile[i]:
                    continue
                if scenario.space.prob_of(d & others_mask) <= 0.0:
                    continue
                checked += 1
                reports = truth_reports[:i] + (d,) + truth_reports[i + 1 :]
                violation = table.utility(reports, i, w1, w0) - u_truth
                if violation > tolerance:
                    if violation > worst:
                        worst = violation
                        witness = {
                            "agent": i,
                            "profile": truth_reports,
                            "deviation": d,
                            "truthful_utility": u_truth,
                            "deviating_utility": u_truth + violation,
                        }
                elif abs(violation) <= tolerance:
                    ties += 1
                    if tie_example is None:
                        tie_example = {"agent": i, "profile": truth_reports, "deviation": d}
    return AuditVerdict(
        "ex-post-ic",
        mechanism.describe(),
        worst <= tolerance,
        worst,
        tolerance,
        checked,
        witness,
        ties,
        tie_example,
        notes=f"report space: {report_space.mode}; utilities are expected payments",
    )


# ---------------------------------------------------------------------------
# Payment-structure axioms
# ---------------------------------------------------------------------------


def check_individual_agent_property(
    scenario: Scenario,
    mechanism: Mechanism,
    rule: ScoringRule,
    tolerance: float = DEFAULT_AUDIT_TOL,
    max_exhaustive: int = DEFAULT_MAX_EXHAUSTIVE,
) -> AuditVerdict:
    """With everyone else reporting the whole space, agent i's payment must be
    her report's score improvement over the no-information score."""
    table = _PaymentTable(scenario, mechanism, rule)
    n = scenario.n_agents
    full = scenario.space.full_mask
    masks = _submasks(_support_mask(scenario))
    if 2 * n * len(masks) > max_exhaustive:
        raise TooLargeToEnumerate("individual-agent sweep exceeds the enumeration cap")
    base = {x: score(rule, posterior(scenario, full), x) for x in (0, 1)}
    worst = 0.0
    witness = None
    checked = 0
    for i in range(n):
        for m in masks:
            expected = {
                x: score(rule, posterior(scenario, m), x) - base[x] for x in (0, 1)
            }
            reports = tuple(m if j == i else full for j in range(n))
            for x in (0, 1):
                checked += 1
                actual = table.payments(reports, x)[i]
                gap = abs(actual - expected[x])
                if gap > worst:
                    worst = gap
                    if gap > tolerance:
                        witness = {
                            "agent": i,
                            "report": m,
                            "outcome": x,
                            "expected": expected[x],
                            "actual": actual,
                        }
    return AuditVerdict(
        "individual-agent",
        mechanism.describe(),
        worst <= tolerance,
        worst,
        tolerance,
        checked,
        witness,
    )


def check_decomposition(
    scenario: Scenario,
    mechanism: Mechanism,
    rule: ScoringRule,
    strength: str = "strong",
    tolerance: float = DEFAULT_AUDIT_TOL,
    max_exhaustive: int = DEFAULT_MAX_EXHAUSTIVE,
) -> AuditVerdict:
    """Reward for reporting A∩B against background C must equal the reward for
    B against C plus the reward for A against B∩C.

    The background reports are instantiated concretely: every other agent
    reports the background set.  Weak mode fixes the background to the whole
    state space.
    """
    if strength not in ("weak", "strong"):
        raise ValueError("strength must be 'weak' or 'strong'")
    if strength == "strong" and scenario.space.size > DECOMPOSITION_MAX_STATES:
        raise TooLargeToEnumerate(
            f"strong decomposition caps the state count at {DECOMPOSITION_MAX_STATES}"
        )
    table = _PaymentTable(scenario, mechanism, rule)
    n = scenario.n_agents
    full = scenario.space.full_mask
    masks = _submasks(_support_mask(scenario))
    backgrounds = masks if strength == "strong" else [full]
    est = 2 * n * len(masks) * len(masks) * len(backgrounds)
    if est > max_exhaustive:
        raise TooLargeToEnumerate(
            f"decomposition sweep would run {est} checks (cap {max_exhaustive})"
        )
    worst = 0.0
    witness = None
    checked = 0
    for sp, spp, sppp in itertools.product(masks, masks, backgrounds):
        if scenario.space.prob_of(sp & spp & sppp) <= 0.0:
            continue
        inner = spp & sppp
        for i in range(n):
            if n == 1 and (sppp != full or inner != full):
                continue  # a one-agent scenario has nobody to report the background
            lhs_reports = tuple(sp & spp if j == i else sppp for j in range(n))
            r1_reports = tuple(spp if j == i else sppp for j in range(n))
            r2_reports = tuple(sp if j == i else inner for j in range(n))
            for x in (0, 1):
                checked += 1
                lhs = table.payments(lhs_reports, x)[i]
                rhs = table.payments(r1_reports, x)[i] + table.payments(r2_reports, x)[i]
                gap = abs(lhs - rhs)
                if gap > worst:
                    worst = gap
                    if gap > tolerance:
                        witness = {
                            "agent": i,
                            "s_prime": sp,
                            "s_double_prime": spp,
                            "s_triple_prime": sppp,
                            "outcome": x,
                            "combined_reward": lhs,
                            "split_reward": rhs,
                        }
    return AuditVerdict(
        f"{strength}-decomposition",
        mechanism.describe(),
        worst <= tolerance,
        worst,
        tolerance,
        checked,
        witness,
    )


def check_relative_dummy(
    scenario: Scenario,
    mechanism: Mechanism,
    rule: ScoringRule,
    tolerance: float = DEFAULT_AUDIT_TOL,
    max_exhaustive: int = DEFAULT_MAX_EXHAUSTIVE,
) -> AuditVerdict:
    """An agent whose report adds nothing beyond the others' pooled report
    must be paid exactly zero."""
    table = _PaymentTable(scenario, mechanism, rule)
    n = scenario.n_agents
    full = scenario.space.full_mask
    masks = _submasks(_support_mask(scenario))
    est = 2 * n * len(masks) ** n
    if est > max_exhaustive:
        raise TooLargeToEnumerate(
            f"relative-dummy sweep would visit {est} checks (cap {max_exhaustive})"
        )
    worst = 0.0
    witness = None
    checked = 0
    for profile in itertools.product(masks, repeat=n):
        grand = full
        for m in profile:
            grand &= m
        if scenario.space.prob_of(grand) <= 0.0:
            continue
        for i in range(n):
            others = full
            for j in range(n):
                if j != i:
                    others &= profile[j]
            if others & ~profile[i]:
                continue  # the others' pooled report is not contained in i's
            for x in (0, 1):
                checked += 1
                actual = table.payments(tuple(profile), x)[i]
                gap = abs(actual)
                if gap > worst:
                    worst = gap
                    if gap > tolerance:
                        witness = {
                            "agent": i,
                            "profile": tuple(profile),
                            "outcome": x,
                            "payment": actual,
                        }
    return AuditVerdict(
        "relative-dummy",
        mechanism.describe(),
        worst <= tolerance,
        worst,
        tolerance,
        checked,
        witness,
    )


def lemma1_meta(weak: AuditVerdict, dummy: AuditVerdict) -> bool:
    """Weak decomposition must imply the relative-dummy property; a violation
    of this implication indicates an auditor bug."""
    return (not weak.passed) or dummy.passed
