"""Characteristic function games built from pooled-information scores.

A coalition's value is the score improvement its pooled reports produce over
the no-information baseline.  The module also inverts the construction: given
any table of coalition-conditional event probabilities with entries strictly
inside (0,1), `realize` builds a scenario whose truthful binary signals
reproduce the table exactly.

Coalitions are indexed by bitmask: bit i set means agent i (0-based) is in
the coalition, so a dense table has 2**n entries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import NotRealizable, ScenarioFormatError, TooManyAgentsForExact
from .scoring import ScoringRule, score
from .state_model import Deterministic, Event, Scenario, StateSpace, posterior

DENSE_TABLE_MAX_AGENTS = 20
REALIZE_MAX_AGENTS = 12


@dataclass(frozen=True)
class CharacteristicGame:
    n: int
    values: tuple[float, ...]  # indexed by coalition bitmask

    def __post_init__(self):
        if not 1 <= self.n <= DENSE_TABLE_MAX_AGENTS:
            raise ValueError(f"agent count must be in 1..{DENSE_TABLE_MAX_AGENTS}")
        if len(self.values) != 1 << self.n:
            raise ValueError(f"expected {1 << self.n} coalition values, got {len(self.values)}")
        if abs(self.values[0]) > 1e-12:
            raise ValueError(f"v(empty coalition) must be 0, got {self.values[0]}")

    def value(self, coalition: int) -> float:
        return self.values[coalition]

    @property
    def grand(self) -> float:
        return self.values[-1]


@dataclass(frozen=True)
class PreCharacteristic:
    """Coalition-indexed event probabilities P(E | pooled reports of C)."""

    n: int
    values: tuple[float, ...]

    def __post_init__(self):
        if not 1 <= self.n <= DENSE_TABLE_MAX_AGENTS:
            raise ValueError(f"agent count must be in 1..{DENSE_TABLE_MAX_AGENTS}")
        if len(self.values) != 1 << self.n:
            raise ValueError(f"expected {1 << self.n} entries, got {len(self.values)}")
        for v in self.values:
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"entries must be probabilities, got {v}")

    @property
    def realizable(self) -> bool:
        """True iff every entry lies strictly inside (0,1)."""
        return all(0.0 < v < 1.0 for v in self.values)

    def boundary_coalitions(self) -> tuple[int, ...]:
        return tuple(c for c, v in enumerate(self.values) if v <= 0.0 or v >= 1.0)


@dataclass(frozen=True)
class PotentialPair:
    """Unnormalized joint weights over binary signal vectors.

    ``chi[t]`` is proportional to P(signal vector t); ``chi_event[t]/chi[t]``
    is P(E | signal vector t).  Both tables are indexed by the signal bitmask.
    """

    chi: tuple[float, ...]
    chi_event: tuple[float, ...]

    def __post_init__(self):
        if len(self.chi) != len(self.chi_event):
            raise ValueError("chi and chi_event must have equal length")
        if not any(x > 0.0 for x in self.chi):
            raise ValueError("chi must not be identically zero")
        for x, xe in zip(self.chi, self.chi_event):
            if not (0.0 <= xe <= x):
                raise ValueError("need 0 <= chi_event <= chi pointwise")

    @property
    def normalizer(self) -> float:
        return sum(self.chi)


# ---------------------------------------------------------------------------
# Scenario -> game
# ---------------------------------------------------------------------------


def coalition_intersections(scenario: Scenario, reports: tuple[int, ...]) -> list[int]:
    """Intersection mask of every coalition's reports (empty coalition -> S)."""
    n = scenario.n_agents
    inter = [0] * (1 << n)
    inter[0] = scenario.space.full_mask
    for c in range(1, 1 << n):
        low = c & -c
        inter[c] = inter[c ^ low] & reports[low.bit_length() - 1]
    return inter


def to_characteristic(
    scenario: Scenario,
    rule: ScoringRule,
    reports: tuple[int, ...],
    outcome: int,
) -> CharacteristicGame:
    """v(C) = score of C's pooled report minus the no-information score."""
    inter = coalition_intersections(scenario, reports)
    base = score(rule, posterior(scenario, inter[0]), outcome)
    values = [0.0] * len(inter)
    for c in range(1, len(inter)):
        values[c] = score(rule, posterior(scenario, inter[c]), outcome) - base
    return CharacteristicGame(scenario.n_agents, tuple(values))


def pre_characteristic(scenario: Scenario, reports: tuple[int, ...]) -> PreCharacteristic:
    """The coalition-indexed posterior table underlying the game."""
    inter = coalition_intersections(scenario, reports)
    return PreCharacteristic(
        scenario.n_agents, tuple(posterior(scenario, m) for m in inter)
    )


# ---------------------------------------------------------------------------
# Solution concepts on raw games
# ---------------------------------------------------------------------------


def marginal_vector(game: CharacteristicGame, order: tuple[int, ...]) -> tuple[float, ...]:
    """Telescoping allocations along `order`; they sum to v(grand) by construction."""
    if sorted(order) != list(range(game.n)):
        raise ValueError("order must be a permutation of the agents")
    alloc = [0.0] * game.n
    mask = 0
    prev = game.values[0]
    for agent in order:
        mask |= 1 << agent
        here = game.values[mask]
        alloc[agent] = here - prev
        prev = here
    return tuple(alloc)


@dataclass(frozen=True)
class ShapleyAllocation:
    values: tuple[float, ...]
    std_errors: tuple[float, ...] | None = None


def _popcounts(size: int) -> np.ndarray:
    return np.bitwise_count(np.arange(size, dtype=np.uint64)).astype(np.int64)


def shapley(
    game: CharacteristicGame,
    samples: int | None = None,
    seed: int = 0,
) -> ShapleyAllocation:
    """Shapley allocation of v(grand).

    Exact mode (default) evaluates the coalition-weighted sum over the dense
    table with numpy.  Sampled mode (`samples` given) averages marginal
    vectors over seeded uniform shuffles and reports standard errors.
    """
    n = game.n
    values = np.asarray(game.values)
    if samples is None:
        if n > DENSE_TABLE_MAX_AGENTS:
            raise TooManyAgentsForExact(f"exact mode supports up to {DENSE_TABLE_MAX_AGENTS} agents")
        counts = _popcounts(1 << n)
        fact = np.array([math.factorial(k) for k in range(n + 1)], dtype=float)
        idx = np.arange(1 << n)
        out = []
        for i in range(n):
            without = idx[(idx >> i) & 1 == 0]
            w = fact[counts[without]] * fact[n - counts[without] - 1] / fact[n]
            out.append(float(np.sum(w * (values[without | (1 << i)] - values[without]))))
        return ShapleyAllocation(tuple(out))

    if samples <= 0:
        raise ValueError("sample count must be positive")
    rng = np.random.Generator(np.random.Philox(seed))
    draws = np.empty((samples, n))
    for k in range(samples):
        order = rng.permutation(n)
        mask = 0
        prev = game.values[0]
        for agent in order:
            mask |= 1 << int(agent)
            here = game.values[mask]
            draws[k, int(agent)] = here - prev
            prev = here
    means = draws.mean(axis=0)
    errs = draws.std(axis=0, ddof=1) / math.sqrt(samples) if samples > 1 else np.zeros(n)
    return ShapleyAllocation(
        tuple(float(x) for x in means), tuple(float(e) for e in errs)
    )


# ---------------------------------------------------------------------------
# The realizer: an instance for any interior coalition-probability table
# ---------------------------------------------------------------------------


def realize(psi: PreCharacteristic) -> tuple[Scenario, PotentialPair]:
    """Construct a scenario whose truthful reports reproduce `psi`.

    Each agent receives a binary signal.  Joint signal weights chi and event
    weights chi_event are fixed top-down by the number of 1-bits: when vector
    t is processed, every strictly-greater vector is already set, and the one
    remaining degree of freedom in

        (chi_event[t] + B) / (chi[t] + A) = psi(ones(t))

    (A, B the strictly-greater sums) is resolved by choosing

        chi[t] = max(1, (B - psi*A)/psi, (psi*A - B)/(1 - psi)) + 1

    which leaves strict slack 0 < chi_event[t] < chi[t].  The scenario has two
    states per signal vector (event and non-event), each agent's partition
    splits states on her own signal bit, and truthful reports are the
    "signal = 1" cells.
    """
    if not psi.realizable:
        raise NotRealizable(
            f"entries for coalition masks {psi.boundary_coalitions()} are not strictly inside (0,1)"
        )
    n = psi.n
    if n > REALIZE_MAX_AGENTS:
        raise TooManyAgentsForExact(f"realizer supports up to {REALIZE_MAX_AGENTS} agents")

    size = 1 << n
    chi = [0.0] * size
    chi_event = [0.0] * size
    # Descending 1-count; ascending mask within a level (the recursion only
    # reads strictly-greater vectors, so within-level order is free).
    for t in sorted(range(size), key=lambda t: (-t.bit_count(), t)):
        above = [u for u in range(size) if u != t and (u & t) == t]
        a = sum(chi[u] for u in above)
        b = sum(chi_event[u] for u in above)
        target = psi.values[t]
        chi[t] = max(1.0, (b - target * a) / target, (target * a - b) / (1.0 - target)) + 1.0
        chi_event[t] = target * (a + chi[t]) - b
    potentials = PotentialPair(tuple(chi), tuple(chi_event))

    z = potentials.normalizer
    states: list[str] = []
    prior: list[float] = []
    event_mask = 0
    index_of: dict[tuple[int, bool], int] = {}
    for t in range(size):
        bits = "".join(str(t >> i & 1) for i in range(n))
        for in_event, weight in ((True, chi_event[t]), (False, chi[t] - chi_event[t])):
            if weight <= 0.0:
                continue  # drop zero-probability states
            index_of[(t, in_event)] = len(states)
            states.append(f"x{bits}:{'E' if in_event else 'N'}")
            prior.append(weight / z)
            if in_event:
                event_mask |= 1 << (len(states) - 1)
    space = StateSpace(tuple(states), tuple(prior))

    signals = []
    for i in range(n):
        ones = 0
        zeros = 0
        for (t, _e), idx in index_of.items():
            if t >> i & 1:
                ones |= 1 << idx
            else:
                zeros |= 1 << idx
        cells = tuple(c for c in (zeros, ones) if c)
        signals.append(Deterministic(cells))

    scenario = Scenario(space, Event(event_mask), tuple(signals))
    return scenario, potentials


def truthful_reports(scenario: Scenario, potentials: PotentialPair | None = None) -> tuple[int, ...]:
    """The 'signal = 1' report profile for a realized scenario.

    Realized state ids encode the signal vector as x<bits>:E/N with bit i
    being agent i's signal; agent i's truthful informative report is the set
    of states whose bit i is 1.
    """
    masks = []
    for i in range(scenario.n_agents):
        m = 0
        for idx, sid in enumerate(scenario.space.states):
            if not sid.startswith("x"):
                raise ValueError("scenario does not look like a realizer output")
            bits = sid[1:].split(":")[0]
            if bits[i] == "1":
                m |= 1 << idx
        masks.append(m)
    return tuple(masks)


# ---------------------------------------------------------------------------
# Game / table file formats
# ---------------------------------------------------------------------------


def _table_from_dict(doc: dict, what: str) -> tuple[int, tuple[float, ...]]:
    if not isinstance(doc, dict):
        raise ScenarioFormatError("$", f"{what} document must be a JSON object")
    n = doc.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ScenarioFormatError("n", "must be a positive integer")
    values = doc.get("values")
    if not isinstance(values, list):
        raise ScenarioFormatError("values", "must be an array")
    if len(values) != 1 << n:
        raise ScenarioFormatError("values", f"expected {1 << n} entries for n={n}, got {len(values)}")
    out = []
    for i, v in enumerate(values):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ScenarioFormatError(f"values[{i}]", "must be a number")
        out.append(float(v))
    return n, tuple(out)


def game_from_dict(doc: dict) -> CharacteristicGame:
    n, values = _table_from_dict(doc, "game")
    try:
        return CharacteristicGame(n, values)
    except ValueError as exc:
        raise ScenarioFormatError("values", str(exc)) from exc


def psi_from_dict(doc: dict) -> PreCharacteristic:
    n, values = _table_from_dict(doc, "psi")
    try:
        return PreCharacteristic(n, values)
    except ValueError as exc:
        raise ScenarioFormatError("values", str(exc)) from exc


def table_to_dict(n: int, values: tuple[float, ...], metadata: dict | None = None) -> dict:
    doc = {"n": n, "values": list(values)}
    if metadata:
        doc["metadata"] = metadata
    return doc


def load_psi(path) -> PreCharacteristic:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError("$", f"not valid JSON: {exc}") from exc
    return psi_from_dict(doc)


def load_game(path) -> CharacteristicGame:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError("$", f"not valid JSON: {exc}") from exc
    return game_from_dict(doc)
