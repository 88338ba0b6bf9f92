"""Sequential-market machinery.

`run_msr` settles a plain market scoring rule: every move pays the score of
the new probability minus the score of the previous one, so the run's total
telescopes to final-score minus initial-score.

`run_figure1` executes the two-tier protocol: information agents reveal
state subsets one at a time, and between reveals a panel of probability
agents may move the shared market probability.  After realization the
information tier is paid marginal score increments of the settled
probabilities (rule s1) and the probability tier is paid its market-scoring
moves rule-s2, summed across rounds.

`demo_manipulation` reproduces the two-agent XOR manipulation story as an
MSR (the original tells it with security trading; the MSR move semantics is
the sequential-market model used everywhere else in this package).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .scoring import ScoringRule, score
from .state_model import Scenario, posterior


# ---------------------------------------------------------------------------
# Market scoring rule
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MsrResult:
    initial: float
    final: float
    move_payments: tuple[tuple[str, float], ...]  # (mover, payment) per move, in order
    totals: dict[str, float]
    outcome: int


def run_msr(
    initial: float,
    moves: list[tuple[str, float]],
    rule: ScoringRule,
    outcome: int,
) -> MsrResult:
    """Settle an MSR run: each move pays score(new) - score(previous)."""
    if not (0.0 <= initial <= 1.0):
        raise DomainError(f"initial probability must be in [0, 1], got {initial}")
    current = initial
    prev_score = score(rule, current, outcome)
    payments = []
    totals: dict[str, float] = {}
    for mover, new_p in moves:
        if not (0.0 <= new_p <= 1.0):
            raise DomainError(f"move to {new_p} by {mover!r} is outside [0, 1]")
        new_score = score(rule, new_p, outcome)
        delta = new_score - prev_score
        payments.append((mover, delta))
        totals[mover] = totals.get(mover, 0.0) + delta
        current, prev_score = new_p, new_score
    return MsrResult(initial, current, tuple(payments), totals, outcome)


# ---------------------------------------------------------------------------
# Figure-style two-tier protocol
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InformationScript:
    """An information agent: her true signal and what she actually reveals."""

    signal: int  # true signal, state-subset mask
    report: int | None = None  # None = truthful (reveal the signal)
    label: str = ""

    def revealed(self) -> int:
        return self.signal if self.report is None else self.report


@dataclass(frozen=True)
class PosteriorPolicy:
    """Move to the exact posterior of the revealed information."""


@dataclass(frozen=True)
class NoisyPolicy:
    """Exact posterior plus clamped Gaussian noise from a seeded generator."""

    sigma: float
    seed: int


@dataclass(frozen=True)
class FixedSequencePolicy:
    """A scripted move per round (round 0 first); length must be rounds+1."""

    moves: tuple[float, ...]


BeliefPolicy = PosteriorPolicy | NoisyPolicy | FixedSequencePolicy


@dataclass(frozen=True)
class Move:
    mover: str
    tier: str  # "information" | "probability"
    probability: float  # market probability after this step
    revealed: int | None = None
    label: str = ""


@dataclass(frozen=True)
class MarketTranscript:
    initial: float
    grid: tuple[tuple[float, ...], ...]  # rows: 0..n1 reveals; cols: 0..n2 prob moves
    moves: tuple[Move, ...]
    outcome: int | None  # None in expected mode
    outcome_probability: float | None  # P(event | true signals) in expected mode
    info_rewards: tuple[float, ...]
    prob_rewards: tuple[float, ...]
    rule_info: str
    rule_prob: str

    @property
    def final(self) -> float:
        return self.grid[-1][-1]


def run_figure1(
    scenario: Scenario,
    info_scripts: list[InformationScript],
    prob_policies: list[BeliefPolicy],
    rule_info: ScoringRule,
    rule_prob: ScoringRule,
    outcome: int | None = None,
    initial: float | None = None,
) -> MarketTranscript:
    """Run the two-tier protocol and settle both tiers.

    Rounds: a round of probability-agent moves on no information, then for
    each information agent a reveal followed by a round of probability-agent
    moves.  With `outcome` None the rewards are expectations over the event,
    whose probability is the posterior of the intersected *true* signals.
    """
    n1, n2 = len(info_scripts), len(prob_policies)
    full = scenario.space.full_mask
    if initial is None:
        initial = posterior(scenario, full)
    if not (0.0 <= initial <= 1.0):
        raise DomainError("initial probability must be in [0, 1]")
    for p in prob_policies:
        if isinstance(p, FixedSequencePolicy) and len(p.moves) != n1 + 1:
            raise ValueError(
                f"fixed-sequence policy needs one move per round ({n1 + 1}), got {len(p.moves)}"
            )

    rngs = {
        j: np.random.Generator(np.random.Philox(p.seed))
        for j, p in enumerate(prob_policies)
        if isinstance(p, NoisyPolicy)
    }

    def belief(j: int, round_idx: int, revealed_mask: int, current: float) -> float:
        policy = prob_policies[j]
        if isinstance(policy, FixedSequencePolicy):
            return policy.moves[round_idx]
        exact = posterior(scenario, revealed_mask)
        if isinstance(policy, PosteriorPolicy):
            return exact
        noisy = exact + rngs[j].normal(0.0, policy.sigma)
        return min(max(noisy, 0.0), 1.0)

    moves: list[Move] = []
    grid: list[list[float]] = []
    current = initial
    revealed_mask = full
    for round_idx in range(n1 + 1):
        if round_idx > 0:
            script = info_scripts[round_idx - 1]
            revealed_mask &= script.revealed()
            moves.append(
                Move(f"info-{round_idx}", "information", current, script.revealed(), script.label)
            )
        row = [current]
        for j in range(n2):
            current = belief(j, round_idx, revealed_mask, current)
            moves.append(Move(f"prob-{j + 1}", "probability", current))
            row.append(current)
        grid.append(row)

    if outcome is None:
        true_mask = full
        for script in info_scripts:
            true_mask &= script.signal
        q = posterior(scenario, true_mask)
        outcome_probability = q
        weights = ((1, q), (0, 1.0 - q))
    else:
        if outcome not in (0, 1):
            raise DomainError("outcome must be 0 or 1")
        outcome_probability = None
        weights = ((outcome, 1.0),)

    def settle(x: int) -> tuple[list[float], list[float]]:
        info = []
        for i in range(1, n1 + 1):
            info.append(score(rule_info, grid[i][n2], x) - score(rule_info, grid[i - 1][n2], x))
        prob = []
        for j in range(1, n2 + 1):
            total = 0.0
            for i in range(n1 + 1):
                total += score(rule_prob, grid[i][j], x) - score(rule_prob, grid[i][j - 1], x)
            prob.append(total)
        return info, prob

    info_rewards = [0.0] * n1
    prob_rewards = [0.0] * n2
    for x, w in weights:
        info, prob = settle(x)
        for i in range(n1):
            info_rewards[i] += w * info[i]
        for j in range(n2):
            prob_rewards[j] += w * prob[j]

    return MarketTranscript(
        initial,
        tuple(tuple(row) for row in grid),
        tuple(moves),
        outcome,
        outcome_probability,
        tuple(info_rewards),
        tuple(prob_rewards),
        rule_info.describe(),
        rule_prob.describe(),
    )


# ---------------------------------------------------------------------------
# The "do the opposite" manipulation demo
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ManipulationReport:
    """Expected MSR profits of agent 1 in the two-bit XOR market.

    World: x and y independent bits, x fair, P(y=1) = p_y1; the market
    predicts z = [x == y] starting from price 0.5 (= the prior of z for any
    p_y1, since x is fair).  Agent 1 observes x and moves first; agent 2
    observes y, inverts agent 1's move assuming truthful play, and moves to
    the event indicator she deduces; agent 1 then moves to her true
    posterior, which is the actual indicator of z (she knows how agent 2 was
    misled, so the reply reveals y to her).

    `advantage` is manipulative minus truthful total profit.
    `first_move_sacrifice` is how much expected first-move payment the lie
    gives up; it vanishes quadratically as p_y1 approaches 1/2 while the
    later correction gain does not, which is what makes near-knife-edge
    manipulation nearly free.
    """

    p_y1: float
    rule: str
    truthful_profit: float
    manipulative_profit: float
    advantage: float
    truthful_first_move: float
    manipulative_first_move: float
    first_move_sacrifice: float
    correction_gain: float
    outcomes: tuple[dict, ...]  # one row per (x, y) world


def demo_manipulation(p_y1: float, rule: ScoringRule) -> ManipulationReport:
    """Exactly enumerate the four (x, y) worlds under truth and manipulation."""
    if not (0.0 < p_y1 < 1.0):
        raise DomainError(f"P(y=1) must be strictly inside (0, 1), got {p_y1}")
    if p_y1 == 0.5:
        raise DomainError(
            "P(y=1) = 0.5 is the knife edge: agent 1's posterior is 0.5 regardless of x, "
            "so the price would remain stuck at 0.5 and there is nothing to manipulate"
        )
    p0 = 0.5  # prior of z = [x == y] with fair x, for any p_y1

    truthful_total = 0.0
    manip_total = 0.0
    truthful_first = 0.0
    manip_first = 0.0
    correction = 0.0
    rows = []
    for x in (0, 1):
        for y in (0, 1):
            prob = 0.5 * (p_y1 if y == 1 else 1.0 - p_y1)
            z = 1 if x == y else 0
            q_truth = p_y1 if x == 1 else 1.0 - p_y1  # P(z=1 | x)
            q_lie = p_y1 if x == 0 else 1.0 - p_y1  # the move x=1-x would have produced

            # Truthful: 0.5 -> q_truth; agent 2 infers x, moves to z; nothing to correct.
            t_first = score(rule, q_truth, z) - score(rule, p0, z)
            t_total = t_first

            # Manipulative: 0.5 -> q_lie; agent 2 infers 1-x, moves to 1-z;
            # agent 1 corrects to z.
            m_first = score(rule, q_lie, z) - score(rule, p0, z)
            m_corr = score(rule, float(z), z) - score(rule, float(1 - z), z)
            m_total = m_first + m_corr

            truthful_first += prob * t_first
            truthful_total += prob * t_total
            manip_first += prob * m_first
            correction += prob * m_corr
            manip_total += prob * m_total
            rows.append(
                {
                    "x": x,
                    "y": y,
                    "probability": prob,
                    "z": z,
                    "truthful_payment": t_total,
                    "manipulative_payment": m_total,
                }
            )

    return ManipulationReport(
        p_y1,
        rule.describe(),
        truthful_total,
        manip_total,
        manip_total - truthful_total,
        truthful_first,
        manip_first,
        truthful_first - manip_first,
        correction,
        tuple(rows),
    )
