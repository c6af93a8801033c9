"""Repeated-game machinery: strategy automata, discounting, populations.

Discounted average payoffs come in two forms that must agree: an exact
closed form that detects the cycle of the joint automaton and sums the
geometric series in rational arithmetic, and a truncated simulation whose
error bound delta^K * max|u| is reported alongside the value.

Population play matches players uniformly at random each round under a
seeded RNG; with visible reputations, reputation-conditioned players defect
against anyone flagged bad, and a flag turns bad permanently the first time
its owner defects against a good-flagged opponent.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .games import Action, PayoffMatrix2x2

GOOD, BAD = "good", "bad"


@dataclass(frozen=True)
class StrategyAutomaton:
    """Deterministic finite-state strategy for the repeated stage game.

    `actions` maps each state to the action played there; `transitions`
    maps (state, opponent's last action) to the next state.  When
    `reputation_rule` is set and public reputations are visible, the player
    ignores its internal state and cooperates exactly with good-flagged
    opponents.
    """

    name: str
    initial: str
    actions: Mapping[str, Action]
    transitions: Mapping[tuple[str, Action], str]
    reputation_rule: bool = False

    def __post_init__(self):
        states = set(self.actions)
        if self.initial not in states:
            raise ValueError(f"initial state {self.initial!r} unknown")
        for s in states:
            for a in (Action.C, Action.D):
                nxt = self.transitions.get((s, a))
                if nxt is None:
                    raise ValueError(f"transition missing for ({s!r}, {a})")
                if nxt not in states:
                    raise ValueError(f"transition target {nxt!r} unknown")

    def action(self, state: str) -> Action:
        return self.actions[state]

    def step(self, state: str, opponent_action: Action) -> str:
        return self.transitions[(state, opponent_action)]


def grim() -> StrategyAutomaton:
    """Cooperate until the opponent's first defection, then defect forever.

    The cooperative state is absorbing under opponent cooperation; the
    punishment state is absorbing under all inputs.
    """
    return StrategyAutomaton(
        name="grim",
        initial="cooperating",
        actions={"cooperating": Action.C, "punishing": Action.D},
        transitions={
            ("cooperating", Action.C): "cooperating",
            ("cooperating", Action.D): "punishing",
            ("punishing", Action.C): "punishing",
            ("punishing", Action.D): "punishing",
        },
    )


def all_c() -> StrategyAutomaton:
    """Unconditional cooperator."""
    return StrategyAutomaton(
        name="allc",
        initial="c",
        actions={"c": Action.C},
        transitions={("c", Action.C): "c", ("c", Action.D): "c"},
    )


def all_d() -> StrategyAutomaton:
    """Unconditional defector."""
    return StrategyAutomaton(
        name="alld",
        initial="d",
        actions={"d": Action.D},
        transitions={("d", Action.C): "d", ("d", Action.D): "d"},
    )


def reputation_grim() -> StrategyAutomaton:
    """Grim trigger keyed to public reputation when reputations are visible."""
    base = grim()
    return StrategyAutomaton(
        name="reputation-grim",
        initial=base.initial,
        actions=base.actions,
        transitions=base.transitions,
        reputation_rule=True,
    )


AUTOMATON_FACTORIES = {
    "grim": grim,
    "allc": all_c,
    "alld": all_d,
    "reputation-grim": reputation_grim,
}


def automaton_by_name(name: str) -> StrategyAutomaton:
    try:
        return AUTOMATON_FACTORIES[name]()
    except KeyError:
        raise ValueError(f"unknown strategy {name!r}") from None


def _check_delta(delta: float) -> Fraction:
    if not 0 < delta < 1:
        raise ValueError(f"discount factor must lie in (0, 1), got {delta}")
    return Fraction(delta)


# ---------------------------------------------------------------------------
# Transcripts and discounting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MatchTranscript:
    """Per-round record of a two-player match.

    Each round is (action_a, action_b, payoff_a, payoff_b) with payoffs
    equal to the stage game evaluated at the recorded actions.
    """

    rounds: tuple[tuple[Action, Action, Fraction, Fraction], ...]

    def __len__(self) -> int:
        return len(self.rounds)


def play_match(
    strategy_a: StrategyAutomaton,
    strategy_b: StrategyAutomaton,
    game: PayoffMatrix2x2,
    rounds: int,
) -> MatchTranscript:
    """Run the two automata against each other for a fixed number of rounds."""
    if rounds < 1:
        raise ValueError("a match needs at least one round")
    sa, sb = strategy_a.initial, strategy_b.initial
    log = []
    for _ in range(rounds):
        aa, ab = strategy_a.action(sa), strategy_b.action(sb)
        ua, ub = game.payoff(aa, ab)
        log.append((aa, ab, ua, ub))
        sa = strategy_a.step(sa, ab)
        sb = strategy_b.step(sb, aa)
    return MatchTranscript(tuple(log))


@dataclass(frozen=True)
class DiscountedPayoff:
    """Truncated discounted average plus its truncation error bound."""

    value: float
    truncation_bound: float


def discounted_average_payoff(
    transcript: MatchTranscript, delta: float, player: str = "a"
) -> DiscountedPayoff:
    """(1 - d) * sum d^k u_k over the recorded rounds, for player "a" or "b".

    Truncating the infinite sum at K rounds leaves at most
    d^K * max|u| unaccounted for; that bound is returned with the value.
    """
    if not transcript.rounds:
        raise ValueError("transcript is empty")
    d = _check_delta(delta)
    idx = {"a": 2, "b": 3}[player]
    total = Fraction(0)
    weight = Fraction(1)
    max_abs = Fraction(0)
    for row in transcript.rounds:
        u = row[idx]
        total += weight * u
        weight *= d
        max_abs = max(max_abs, abs(u))
    value = (1 - d) * total
    bound = weight * max_abs  # weight is now d^K
    return DiscountedPayoff(float(value), float(bound))


def _joint_cycle(
    strategy_a: StrategyAutomaton,
    strategy_b: StrategyAutomaton,
    game: PayoffMatrix2x2,
) -> tuple[list[Fraction], int]:
    """Player A's stage payoffs until the joint state repeats.

    Returns the payoff sequence and the index where the cycle starts.
    """
    seen: dict[tuple[str, str], int] = {}
    payoffs: list[Fraction] = []
    sa, sb = strategy_a.initial, strategy_b.initial
    while (sa, sb) not in seen:
        seen[(sa, sb)] = len(payoffs)
        aa, ab = strategy_a.action(sa), strategy_b.action(sb)
        payoffs.append(game.row_payoff(aa, ab))
        sa = strategy_a.step(sa, ab)
        sb = strategy_b.step(sb, aa)
    return payoffs, seen[(sa, sb)]


def _closed_form_exact(
    strategy_a: StrategyAutomaton,
    strategy_b: StrategyAutomaton,
    game: PayoffMatrix2x2,
    d: Fraction,
) -> Fraction:
    payoffs, start = _joint_cycle(strategy_a, strategy_b, game)
    tail, cycle = payoffs[:start], payoffs[start:]
    total = Fraction(0)
    weight = Fraction(1)
    for u in tail:
        total += weight * u
        weight *= d
    cycle_sum = Fraction(0)
    w = Fraction(1)
    for u in cycle:
        cycle_sum += w * u
        w *= d
    # weight is d^start here; the cycle repeats with ratio d^len(cycle).
    total += weight * cycle_sum / (1 - d ** len(cycle))
    return (1 - d) * total


def closed_form_payoff(
    strategy_a: StrategyAutomaton,
    strategy_b: StrategyAutomaton,
    game: PayoffMatrix2x2,
    delta: float,
) -> float:
    """Exact infinite-horizon discounted average payoff for player A.

    The joint automaton is deterministic, hence eventually periodic; the
    tail is summed directly and the cycle by geometric series, all in
    rational arithmetic, with no truncation.
    """
    return float(_closed_form_exact(strategy_a, strategy_b, game, _check_delta(delta)))


def cooperation_sustained(game: PayoffMatrix2x2, delta: float) -> bool:
    """Whether grim-on-grim cooperation beats the best one-shot deviation.

    The deviation benchmark is defecting immediately and facing grim
    punishment forever, i.e. the unconditional defector.  The comparison is
    exact; the boundary counts as sustained.
    """
    c_payoff = game.row_payoff(Action.C, Action.C)
    d_payoff = game.row_payoff(Action.D, Action.D)
    temptation = game.row_payoff(Action.D, Action.C)
    if not (c_payoff > d_payoff and temptation > c_payoff):
        raise ValueError("game is not a social dilemma of the required shape")
    d = _check_delta(delta)
    u_c = _closed_form_exact(grim(), grim(), game, d)
    u_d = _closed_form_exact(all_d(), grim(), game, d)
    return u_c >= u_d


def cooperation_threshold_population(n: int, reputation_shared: bool) -> float:
    """Minimum patience that sustains cooperation among n + 1 players.

    With reputations known only privately the bar rises with population
    size, 1 - 1/(2n); a shared reputation brings it back to the two-player
    value 1/2.
    """
    if n < 1:
        raise ValueError("population parameter must be >= 1")
    if reputation_shared:
        return 0.5
    return 1 - 1 / (2 * n)


# ---------------------------------------------------------------------------
# Population play with random matching
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PopulationConfig:
    """Configuration of one seeded population run.

    `strategies` assigns an automaton to every player index 0..size-1.
    `delta` weights round payoffs in the discounted aggregate (runs stay
    fixed-length for reproducibility).  With an odd population one player
    sits out each round, chosen by the RNG.
    """

    size: int
    strategies: Mapping[int, StrategyAutomaton]
    delta: float
    reputation_visible: bool
    rng_seed: int
    horizon: int

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("population needs at least two players")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        _check_delta(self.delta)
        missing = [p for p in range(self.size) if p not in self.strategies]
        if missing:
            raise ValueError(f"players without a strategy: {missing}")


@dataclass(frozen=True)
class RoundRecord:
    round: int
    player: int
    action: Action
    stage_payoff: Fraction
    reputation: str


@dataclass(frozen=True)
class PopulationReport:
    """Deterministic outcome of a population run."""

    seed: int
    delta: float
    horizon: int
    rows: tuple[RoundRecord, ...]
    discounted_payoffs: Mapping[int, float]
    cooperation_rates: tuple[float, ...]

    def to_csv(self) -> str:
        lines = ["round,player,action,stage_payoff,reputation"]
        for r in self.rows:
            lines.append(
                f"{r.round},{r.player},{r.action.value},{r.stage_payoff},{r.reputation}"
            )
        return "\n".join(lines) + "\n"

    def summary_json(self) -> str:
        payload = {
            "seed": self.seed,
            "delta": self.delta,
            "horizon": self.horizon,
            "discounted_payoffs": {
                str(p): self.discounted_payoffs[p]
                for p in sorted(self.discounted_payoffs)
            },
            "cooperation_rates": list(self.cooperation_rates),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def run_population(
    config: PopulationConfig, game: PayoffMatrix2x2
) -> PopulationReport:
    """Play the stage game under uniform random matching for `horizon` rounds.

    Every participant is scored with the row-player payoff function, so the
    stage game must be symmetric.  Automata step on the observed opponent
    action; reputation flags are monotone good-to-bad and recorded per row
    as of the end of the round.
    """
    if not game.is_symmetric():
        raise ValueError("population play needs a symmetric stage game")
    rng = random.Random(config.rng_seed)
    automata = {p: config.strategies[p] for p in range(config.size)}
    states = {p: automata[p].initial for p in automata}
    good = {p: True for p in automata}
    stage_payoffs: dict[int, list[tuple[int, Fraction]]] = {p: [] for p in automata}
    rows: list[RoundRecord] = []
    coop_rates: list[float] = []

    def choose(p: int, opponent: int) -> Action:
        aut = automata[p]
        if config.reputation_visible and aut.reputation_rule:
            return Action.C if good[opponent] else Action.D
        return aut.action(states[p])

    for k in range(config.horizon):
        order = list(range(config.size))
        rng.shuffle(order)
        if config.size % 2:
            order = order[:-1]  # the shuffled-out last player sits this round out
        played: list[tuple[int, Action, Fraction]] = []
        flag_drops: list[int] = []
        for i in range(0, len(order), 2):
            p, q = order[i], order[i + 1]
            ap, aq = choose(p, q), choose(q, p)
            up, uq = game.row_payoff(ap, aq), game.row_payoff(aq, ap)
            played.append((p, ap, up))
            played.append((q, aq, uq))
            if ap is Action.D and good[q]:
                flag_drops.append(p)
            if aq is Action.D and good[p]:
                flag_drops.append(q)
            states[p] = automata[p].step(states[p], aq)
            states[q] = automata[q].step(states[q], ap)
        for p in flag_drops:
            good[p] = False
        for p, action, payoff in sorted(played):
            stage_payoffs[p].append((k, payoff))
            rows.append(
                RoundRecord(k, p, action, payoff, GOOD if good[p] else BAD)
            )
        n_coop = sum(1 for _, action, _ in played if action is Action.C)
        coop_rates.append(n_coop / len(played))

    delta = config.delta
    discounted = {
        p: (1 - delta) * sum(float(u) * delta**k for k, u in per_round)
        for p, per_round in stage_payoffs.items()
    }
    return PopulationReport(
        seed=config.rng_seed,
        delta=config.delta,
        horizon=config.horizon,
        rows=tuple(rows),
        discounted_payoffs=discounted,
        cooperation_rates=tuple(coop_rates),
    )
