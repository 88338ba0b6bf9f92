"""Finite probabilistic world model for direct-revelation prediction markets.

States are opaque identifiers with a common prior; the event is a subset of
states; each agent's information is a subset of states she cannot rule out.
State subsets are canonicalized as bitmasks over the fixed state ordering,
so set algebra on them is exact.

Signals may be deterministic (a fixed partition of the state space, one cell
per realization) or stochastic (a per-state distribution over state subsets,
every positive-probability subset containing the generating state).  Agents'
stochastic signals are drawn independently of each other given the state;
that conditional independence is the joint model implied by the per-agent
tables and is what the lifting construction enumerates.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ScenarioFormatError,
    TooLargeToEnumerate,
    ZeroProbabilityInformation,
    ZeroProbabilitySignal,
)

PROB_SUM_TOL = 1e-12
DEFAULT_CONSISTENCY_TOL = 1e-9
DEFAULT_MAX_EXHAUSTIVE = 1_000_000


@dataclass(frozen=True)
class StateSpace:
    """Ordered states with a common prior over them."""

    states: tuple[str, ...]
    prior: tuple[float, ...]

    def __post_init__(self):
        if len(self.states) == 0:
            raise ValueError("state space must contain at least one state")
        if len(self.states) != len(self.prior):
            raise ValueError("states and prior must have equal length")
        if len(set(self.states)) != len(self.states):
            raise ValueError("state identifiers must be unique")
        for p in self.prior:
            if not (p >= 0.0):
                raise ValueError(f"prior entries must be >= 0, got {p}")
        if abs(sum(self.prior) - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"prior must sum to 1 within {PROB_SUM_TOL}, got {sum(self.prior)}")

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def index_of(self, state_id: str) -> int:
        try:
            return self.states.index(state_id)
        except ValueError:
            raise KeyError(f"unknown state identifier {state_id!r}") from None

    def mask_of(self, ids) -> int:
        m = 0
        for sid in ids:
            m |= 1 << self.index_of(sid)
        return m

    def ids_of(self, mask: int) -> tuple[str, ...]:
        return tuple(s for i, s in enumerate(self.states) if mask >> i & 1)

    def prob_of(self, mask: int) -> float:
        return sum(p for i, p in enumerate(self.prior) if mask >> i & 1)


@dataclass(frozen=True)
class Event:
    """The event whose probability the market elicits, as a state-subset bitmask."""

    members: int

    def __post_init__(self):
        if self.members < 0:
            raise ValueError("event mask must be nonnegative")


@dataclass(frozen=True)
class Deterministic:
    """Partition of the state space; the signal is the cell containing the true state."""

    cells: tuple[int, ...]

    def __post_init__(self):
        seen = 0
        for c in self.cells:
            if c == 0:
                raise ValueError("partition cells must be nonempty")
            if seen & c:
                raise ValueError("partition cells must be pairwise disjoint")
            seen |= c

    def cell_containing(self, state_index: int) -> int:
        bit = 1 << state_index
        for c in self.cells:
            if c & bit:
                return c
        raise ValueError(f"state index {state_index} not covered by partition")

    def support(self) -> tuple[int, ...]:
        return self.cells


@dataclass(frozen=True)
class Stochastic:
    """Per-state distribution over signal subsets.

    ``rows[s]`` is a tuple of ``(signal_mask, prob)`` pairs for state index s.
    Rows for zero-prior states may be empty; positive-prior rows must sum to 1
    and every positive-probability signal must contain its generating state.
    """

    rows: tuple[tuple[tuple[int, float], ...], ...]

    def prob_in_state(self, state_index: int, signal_mask: int) -> float:
        return sum(p for m, p in self.rows[state_index] if m == signal_mask)

    def support(self) -> tuple[int, ...]:
        masks = {m for row in self.rows for m, p in row if p > 0.0}
        return tuple(sorted(masks))


Signals = Deterministic | Stochastic


@dataclass(frozen=True)
class Scenario:
    """A world model: state space, event, and one signal structure per agent."""

    space: StateSpace
    event: Event
    signals: tuple[Signals, ...]

    def __post_init__(self):
        full = self.space.full_mask
        if self.event.members & ~full:
            raise ValueError("event references states outside the state space")
        if len(self.signals) == 0:
            raise ValueError("scenario needs at least one agent")
        for a, sig in enumerate(self.signals):
            if isinstance(sig, Deterministic):
                union = 0
                for c in sig.cells:
                    union |= c
                if union != full:
                    raise ValueError(f"agent {a}: partition cells must cover the state space")
            else:
                if len(sig.rows) != self.space.size:
                    raise ValueError(f"agent {a}: stochastic table must have one row per state")
                for s, row in enumerate(sig.rows):
                    total = sum(p for _, p in row)
                    for m, p in row:
                        if p < 0.0:
                            raise ValueError(f"agent {a}: negative signal probability in state {s}")
                        if m & ~full:
                            raise ValueError(f"agent {a}: signal references unknown states")
                        if p > 0.0 and not (m >> s & 1):
                            raise ValueError(
                                f"agent {a}: positive-probability signal in state "
                                f"{self.space.states[s]} does not contain that state"
                            )
                    if self.space.prior[s] > 0.0 and abs(total - 1.0) > PROB_SUM_TOL:
                        raise ValueError(
                            f"agent {a}: signal distribution in state {self.space.states[s]} "
                            f"sums to {total}, expected 1"
                        )

    @property
    def n_agents(self) -> int:
        return len(self.signals)

    @property
    def prior_array(self) -> np.ndarray:
        return np.asarray(self.space.prior, dtype=float)

    @property
    def event_indicator(self) -> np.ndarray:
        return np.array([float(self.event.members >> i & 1) for i in range(self.space.size)])

    def signal_prob_vector(self, agent: int, signal_mask: int) -> np.ndarray:
        """P(agent receives `signal_mask` | state), as a vector over states."""
        sig = self.signals[agent]
        n = self.space.size
        if isinstance(sig, Deterministic):
            if signal_mask not in sig.cells:
                return np.zeros(n)
            return np.array([float(signal_mask >> s & 1) for s in range(n)])
        return np.array([sig.prob_in_state(s, signal_mask) for s in range(n)])

    def signal_support(self, agent: int) -> tuple[int, ...]:
        return self.signals[agent].support()

    def deterministic_profile_for_state(self, state_index: int) -> tuple[int, ...]:
        """The (unique) signal profile in a deterministic-signal scenario."""
        profile = []
        for sig in self.signals:
            if not isinstance(sig, Deterministic):
                raise ValueError("scenario has stochastic signals")
            profile.append(sig.cell_containing(state_index))
        return tuple(profile)

    def all_deterministic(self) -> bool:
        return all(isinstance(s, Deterministic) for s in self.signals)


@dataclass(frozen=True)
class SignalProfile:
    """Realized signals for a coalition of agents, plus an optional true state.

    ``entries`` maps agent index -> signal mask; agents absent from the map are
    outside the coalition.
    """

    entries: tuple[tuple[int, int], ...]
    true_state: int | None = None

    @classmethod
    def of(cls, signals: dict[int, int], true_state: int | None = None) -> "SignalProfile":
        return cls(tuple(sorted(signals.items())), true_state)

    @property
    def agents(self) -> tuple[int, ...]:
        return tuple(a for a, _ in self.entries)

    def mask_for(self, agent: int) -> int:
        for a, m in self.entries:
            if a == agent:
                return m
        raise KeyError(f"agent {agent} not in profile")

    def intersection(self, full_mask: int) -> int:
        m = full_mask
        for _, sig in self.entries:
            m &= sig
        return m

    def validate_against(self, scenario: Scenario) -> None:
        for a, m in self.entries:
            if not 0 <= a < scenario.n_agents:
                raise ValueError(f"profile references unknown agent {a}")
            if m & ~scenario.space.full_mask:
                raise ValueError(f"agent {a}: signal references unknown states")
        if self.true_state is not None:
            bit = 1 << self.true_state
            for a, m in self.entries:
                if not (m & bit):
                    raise ValueError(f"agent {a}: signal does not contain the true state")


# ---------------------------------------------------------------------------
# Core operations
# ---------------------------------------------------------------------------


def posterior(scenario: Scenario, info: int) -> float:
    """P(E | info) for a state-subset bitmask with positive prior probability."""
    if info & ~scenario.space.full_mask:
        raise ValueError("info mask references states outside the state space")
    if info == 0:
        raise ZeroProbabilityInformation("empty information set (contradictory intersection)")
    p = scenario.space.prob_of(info)
    if p <= 0.0:
        raise ZeroProbabilityInformation(
            f"information set {scenario.space.ids_of(info)} has zero prior probability"
        )
    pe = scenario.space.prob_of(info & scenario.event.members)
    return pe / p


def joint_signal_weights(scenario: Scenario, profile: SignalProfile) -> np.ndarray:
    """Per-state weights P(state) * prod_i P(signal_i | state) for agents in the profile."""
    w = scenario.prior_array.copy()
    for a, m in profile.entries:
        w *= scenario.signal_prob_vector(a, m)
    return w


def signal_posterior(scenario: Scenario, profile: SignalProfile) -> float:
    """P(E | the coalition's realized signals), enumerating states x realizations."""
    profile.validate_against(scenario)
    w = joint_signal_weights(scenario, profile)
    total = float(w.sum())
    if total <= 0.0:
        raise ZeroProbabilitySignal("signal combination has zero probability")
    pe = float((w * scenario.event_indicator).sum())
    return pe / total


@dataclass(frozen=True)
class ConsistencyWitness:
    coalition: tuple[int, ...]
    signals: tuple[int, ...]
    signal_posterior: float
    intersection_posterior: float

    @property
    def gap(self) -> float:
        return abs(self.signal_posterior - self.intersection_posterior)


@dataclass(frozen=True)
class ConsistencyReport:
    passed: bool
    tolerance: float
    checked: int
    witnesses: tuple[ConsistencyWitness, ...] = field(default_factory=tuple)

    @property
    def worst_gap(self) -> float:
        return max((w.gap for w in self.witnesses), default=0.0)


def enumeration_size(scenario: Scenario) -> int:
    """Number of (coalition, signal-combination) pairs a full consistency sweep visits."""
    total = 1
    for a in range(scenario.n_agents):
        total *= 1 + len(scenario.signal_support(a))
    return total


def check_consistency(
    scenario: Scenario,
    tolerance: float = DEFAULT_CONSISTENCY_TOL,
    max_exhaustive: int = DEFAULT_MAX_EXHAUSTIVE,
) -> ConsistencyReport:
    """Compare P(E | signals) against P(E | intersection) for every coalition.

    Passes iff the two agree within `tolerance` for every positive-probability
    signal combination of every coalition.
    """
    if enumeration_size(scenario) > max_exhaustive:
        raise TooLargeToEnumerate(
            f"consistency sweep would visit {enumeration_size(scenario)} combinations "
            f"(cap {max_exhaustive})"
        )
    full = scenario.space.full_mask
    witnesses = []
    checked = 0
    supports = [scenario.signal_support(a) for a in range(scenario.n_agents)]
    for coalition_mask in range(1, 1 << scenario.n_agents):
        agents = [a for a in range(scenario.n_agents) if coalition_mask >> a & 1]
        for combo in itertools.product(*(supports[a] for a in agents)):
            profile = SignalProfile.of(dict(zip(agents, combo)))
            w = joint_signal_weights(scenario, profile)
            total = float(w.sum())
            if total <= 0.0:
                continue
            checked += 1
            p_sig = float((w * scenario.event_indicator).sum()) / total
            inter = full
            for m in combo:
                inter &= m
            p_int = posterior(scenario, inter)
            if abs(p_sig - p_int) > tolerance:
                witnesses.append(
                    ConsistencyWitness(tuple(agents), tuple(combo), p_sig, p_int)
                )
    return ConsistencyReport(not witnesses, tolerance, checked, tuple(witnesses))


def lift_to_deterministic(scenario: Scenario) -> Scenario:
    """Fold signal randomness into the state space.

    The lifted states are (original state, full signal profile) pairs with
    positive joint probability; the event membership is inherited from the
    original state; each agent's lifted signal is the deterministic partition
    induced by her signal coordinate.  Zero-probability combinations are
    dropped, so the lifted prior has no dead states.
    """
    space = scenario.space
    n = scenario.n_agents
    lifted = []  # (orig_index, profile, joint_prob)
    for s in range(space.size):
        ps = space.prior[s]
        if ps <= 0.0:
            continue
        options = []
        for a in range(n):
            sig = scenario.signals[a]
            if isinstance(sig, Deterministic):
                options.append([(sig.cell_containing(s), 1.0)])
            else:
                options.append([(m, p) for m, p in sig.rows[s] if p > 0.0])
        for combo in sorted(itertools.product(*options), key=lambda c: tuple(m for m, _ in c)):
            prob = ps
            for _, p in combo:
                prob *= p
            if prob <= 0.0:
                continue
            lifted.append((s, tuple(m for m, _ in combo), prob))

    # Sequential per-original-state numbering; fall back to a separator on collision.
    ids = []
    counter: dict[int, int] = {}
    for s, _, _ in lifted:
        counter[s] = counter.get(s, 0) + 1
        ids.append(f"{space.states[s]}{counter[s]}")
    if len(set(ids)) != len(ids):
        ids = []
        counter = {}
        for s, _, _ in lifted:
            counter[s] = counter.get(s, 0) + 1
            ids.append(f"{space.states[s]}#{counter[s]}")

    new_space = StateSpace(tuple(ids), tuple(prob for _, _, prob in lifted))
    event_mask = 0
    for i, (s, _, _) in enumerate(lifted):
        if scenario.event.members >> s & 1:
            event_mask |= 1 << i

    new_signals = []
    for a in range(n):
        cells: dict[int, int] = {}
        for i, (_, profile, _) in enumerate(lifted):
            cells.setdefault(profile[a], 0)
            cells[profile[a]] |= 1 << i
        new_signals.append(Deterministic(tuple(cells[m] for m in sorted(cells))))

    return Scenario(new_space, Event(event_mask), tuple(new_signals))


# ---------------------------------------------------------------------------
# Scenario file format
# ---------------------------------------------------------------------------


def scenario_to_dict(scenario: Scenario) -> dict:
    space = scenario.space
    agents = []
    for sig in scenario.signals:
        if isinstance(sig, Deterministic):
            agents.append({"deterministic": [list(space.ids_of(c)) for c in sig.cells]})
        else:
            table = {}
            for s, row in enumerate(sig.rows):
                if not row:
                    continue
                table[space.states[s]] = [
                    {"signal": list(space.ids_of(m)), "prob": p} for m, p in row
                ]
            agents.append({"stochastic": table})
    return {
        "states": [{"id": sid, "prior": p} for sid, p in zip(space.states, space.prior)],
        "event": list(space.ids_of(scenario.event.members)),
        "agents": agents,
    }


def _fail(path: str, message: str):
    raise ScenarioFormatError(path, message)


def scenario_from_dict(doc: dict) -> Scenario:
    """Parse and validate a scenario document, reporting the offending field path."""
    if not isinstance(doc, dict):
        _fail("$", "document must be a JSON object")
    states = doc.get("states")
    if not isinstance(states, list) or not states:
        _fail("states", "must be a non-empty array")
    ids, prior = [], []
    for i, st in enumerate(states):
        if not isinstance(st, dict) or "id" not in st or "prior" not in st:
            _fail(f"states[{i}]", "must be an object with 'id' and 'prior'")
        if not isinstance(st["id"], str):
            _fail(f"states[{i}].id", "must be a string")
        if not isinstance(st["prior"], (int, float)) or isinstance(st["prior"], bool):
            _fail(f"states[{i}].prior", "must be a number")
        if st["prior"] < 0:
            _fail(f"states[{i}].prior", "must be >= 0")
        ids.append(st["id"])
        prior.append(float(st["prior"]))
    if len(set(ids)) != len(ids):
        _fail("states[*].id", "state identifiers must be unique")
    if abs(sum(prior) - 1.0) > PROB_SUM_TOL:
        _fail("states[*].prior", f"prior must sum to 1 within {PROB_SUM_TOL}, got {sum(prior)}")
    space = StateSpace(tuple(ids), tuple(prior))

    event = doc.get("event")
    if not isinstance(event, list):
        _fail("event", "must be an array of state ids")
    event_mask = 0
    for i, sid in enumerate(event):
        if not isinstance(sid, str) or sid not in ids:
            _fail(f"event[{i}]", f"unknown state id {sid!r}")
        event_mask |= 1 << space.index_of(sid)

    agents_doc = doc.get("agents")
    if not isinstance(agents_doc, list) or not agents_doc:
        _fail("agents", "must be a non-empty array")
    signals: list[Signals] = []
    for a, entry in enumerate(agents_doc):
        base = f"agents[{a}]"
        if not isinstance(entry, dict) or len(entry) != 1:
            _fail(base, "must be an object with exactly one of 'deterministic'/'stochastic'")
        if "deterministic" in entry:
            cells_doc = entry["deterministic"]
            if not isinstance(cells_doc, list) or not cells_doc:
                _fail(f"{base}.deterministic", "must be a non-empty array of state-id arrays")
            cells, seen = [], 0
            for c, cell in enumerate(cells_doc):
                here = f"{base}.deterministic[{c}]"
                if not isinstance(cell, list) or not cell:
                    _fail(here, "cells must be non-empty arrays of state ids")
                mask = 0
                for sid in cell:
                    if not isinstance(sid, str) or sid not in ids:
                        _fail(here, f"unknown state id {sid!r}")
                    mask |= 1 << space.index_of(sid)
                if seen & mask:
                    _fail(here, "cells must be pairwise disjoint")
                seen |= mask
                cells.append(mask)
            if seen != space.full_mask:
                _fail(f"{base}.deterministic", "cells must cover the whole state space")
            signals.append(Deterministic(tuple(cells)))
        elif "stochastic" in entry:
            table = entry["stochastic"]
            if not isinstance(table, dict):
                _fail(f"{base}.stochastic", "must map state ids to signal distributions")
            rows: list[tuple[tuple[int, float], ...]] = [() for _ in ids]
            for sid, dist in table.items():
                here = f"{base}.stochastic.{sid}"
                if sid not in ids:
                    _fail(here, f"unknown state id {sid!r}")
                if not isinstance(dist, list) or not dist:
                    _fail(here, "must be a non-empty array of {signal, prob}")
                s = space.index_of(sid)
                row = []
                for k, item in enumerate(dist):
                    ent = f"{here}[{k}]"
                    if not isinstance(item, dict) or "signal" not in item or "prob" not in item:
                        _fail(ent, "must be an object with 'signal' and 'prob'")
                    p = item["prob"]
                    if not isinstance(p, (int, float)) or isinstance(p, bool) or p < 0:
                        _fail(f"{ent}.prob", "must be a number >= 0")
                    mask = 0
                    for sid2 in item["signal"]:
                        if not isinstance(sid2, str) or sid2 not in ids:
                            _fail(f"{ent}.signal", f"unknown state id {sid2!r}")
                        mask |= 1 << space.index_of(sid2)
                    if p > 0 and not (mask >> s & 1):
                        _fail(f"{ent}.signal", f"positive-probability signal must contain {sid!r}")
                    row.append((mask, float(p)))
                total = sum(p for _, p in row)
                if prior[s] > 0 and abs(total - 1.0) > PROB_SUM_TOL:
                    _fail(here, f"distribution sums to {total}, expected 1")
                rows[s] = tuple(row)
            for s in range(space.size):
                if prior[s] > 0 and not rows[s]:
                    _fail(f"{base}.stochastic", f"missing distribution for state {ids[s]!r}")
            signals.append(Stochastic(tuple(rows)))
        else:
            _fail(base, "must contain 'deterministic' or 'stochastic'")
    try:
        return Scenario(space, Event(event_mask), tuple(signals))
    except ValueError as exc:
        _fail("$", str(exc))


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError("$", f"not valid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def dump_scenario(scenario: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=2, sort_keys=True)
        fh.write("\n")
