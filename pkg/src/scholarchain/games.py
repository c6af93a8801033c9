"""One-shot 2x2 games of scholarly publishing and their equilibria.

The module builds the stage games that motivate the platform's incentive
design -- the review commons, its two-player prisoner's-dilemma form, and
the publication game in biased and debiased variants -- and analyzes them:
pure equilibria by exhaustive best-response checks, the indifference mixed
equilibrium, and dominance.

All payoffs are exact `fractions.Fraction` values.  Equilibrium membership
is a discrete property; float ties would corrupt it, so float payoffs are
rejected at construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping, Optional, Union

RationalLike = Union[int, str, Fraction]

#: Publication-probability keys: first char is the player's own effort level
#: ("0" = honest, "e" = hyped), second char the opponent's.
PROB_KEYS = ("00", "0e", "e0", "ee")


class Action(Enum):
    """The two stage-game actions: cooperate or defect."""

    C = "C"
    D = "D"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


ACTIONS = (Action.C, Action.D)

_CELL_ORDER = (
    (Action.C, Action.C),
    (Action.C, Action.D),
    (Action.D, Action.C),
    (Action.D, Action.D),
)


def as_rational(value: RationalLike) -> Fraction:
    """Coerce ints, Fractions and "p/q" strings to an exact Fraction.

    Floats are refused: game payoffs must not carry binary rounding noise.
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f"exact rational required, got {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"exact rational required, got {value!r}")


def format_rational(value: Fraction) -> str:
    """Inverse of :func:`as_rational` for JSON/CSV output ("p/q" or "p")."""
    return str(value)


@dataclass(frozen=True)
class PayoffMatrix2x2:
    """Bimatrix game over actions {C, D} with exact rational payoffs.

    Cells are stored in (C,C), (C,D), (D,C), (D,D) order; each cell is the
    (row-player, column-player) payoff pair.
    """

    cells: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        if len(self.cells) != 4:
            raise ValueError("a 2x2 game has exactly four cells")
        coerced = tuple(
            (as_rational(r), as_rational(c)) for r, c in self.cells
        )
        object.__setattr__(self, "cells", coerced)

    @classmethod
    def from_cells(
        cls,
        cells: Mapping[tuple[Action, Action], tuple[RationalLike, RationalLike]],
    ) -> "PayoffMatrix2x2":
        missing = [p for p in _CELL_ORDER if p not in cells]
        if missing:
            raise ValueError(f"cells missing for profiles {missing}")
        return cls(tuple(tuple(cells[p]) for p in _CELL_ORDER))

    def payoff(self, row: Action, col: Action) -> tuple[Fraction, Fraction]:
        return self.cells[_CELL_ORDER.index((row, col))]

    def row_payoff(self, row: Action, col: Action) -> Fraction:
        return self.payoff(row, col)[0]

    def col_payoff(self, row: Action, col: Action) -> Fraction:
        return self.payoff(row, col)[1]

    def is_symmetric(self) -> bool:
        """True when both players face the same game (u_row(a,b) == u_col(b,a))."""
        return all(
            self.row_payoff(a, b) == self.col_payoff(b, a)
            for a in ACTIONS
            for b in ACTIONS
        )

    def shifted(self, offset: RationalLike) -> "PayoffMatrix2x2":
        """Add a constant to every payoff; equilibria are invariant under this."""
        d = as_rational(offset)
        return PayoffMatrix2x2(tuple((r + d, c + d) for r, c in self.cells))


@dataclass(frozen=True)
class CommonsParams:
    """Review-commons game parameters.

    `benefit` is the value of drawing a review from the commons, `effort`
    the cost of contributing one; `threshold` is how many other cooperators
    are needed for the commons to function, within a population of `size`.
    """

    benefit: Fraction
    effort: Fraction
    threshold: int
    size: int

    def __post_init__(self):
        object.__setattr__(self, "benefit", as_rational(self.benefit))
        object.__setattr__(self, "effort", as_rational(self.effort))
        if not self.effort > 0:
            raise ValueError("effort must be positive")
        if not self.benefit - self.effort > 0:
            raise ValueError("benefit must exceed effort")
        if self.threshold < 1:
            raise ValueError("cooperator threshold must be >= 1")
        if self.size < self.threshold:
            raise ValueError("population must be at least the threshold")


def build_commons_payoff(
    params: CommonsParams, coop_count: int, own_action: Action
) -> Fraction:
    """Stage payoff in the review commons.

    `coop_count` counts cooperators among the *other* players.  The
    boundary case `coop_count == threshold` counts as "enough cooperators".
    """
    if not 0 <= coop_count <= params.size:
        raise ValueError(
            f"coop_count {coop_count} outside [0, {params.size}]"
        )
    enough = coop_count >= params.threshold
    if own_action is Action.C:
        return params.benefit - params.effort if enough else -params.effort
    return params.benefit if enough else Fraction(0)


def two_player_commons_game(
    benefit: RationalLike, effort: RationalLike
) -> PayoffMatrix2x2:
    """Two-player form of the review commons: a prisoner's dilemma.

    Mutual cooperation pays benefit-effort each; a lone defector free-rides
    for the full benefit while the cooperator eats the effort cost; mutual
    defection pays nothing.
    """
    b, e = as_rational(benefit), as_rational(effort)
    return PayoffMatrix2x2.from_cells(
        {
            (Action.C, Action.C): (b - e, b - e),
            (Action.C, Action.D): (-e, b),
            (Action.D, Action.C): (b, -e),
            (Action.D, Action.D): (Fraction(0), Fraction(0)),
        }
    )


@dataclass(frozen=True)
class PublicationParams:
    """Publication-race game parameters.

    Cooperating means reporting honestly (zero extra effort); defecting
    means spending `effort` to hype the paper.  `publish_prob` maps the
    joint effort profile to the probability the player's paper gets
    published; keys are two-character strings, own effort first ("0" or
    "e").  The probabilities need not sum to one across players -- a biased
    review process can favor hype outright.
    """

    reward: Fraction
    effort: Fraction
    publish_prob: Mapping[str, Fraction]

    def __post_init__(self):
        object.__setattr__(self, "reward", as_rational(self.reward))
        object.__setattr__(self, "effort", as_rational(self.effort))
        if self.reward < 0:
            raise ValueError("reward must be non-negative")
        if self.effort <= 0:
            raise ValueError("effort must be positive")
        probs = {k: as_rational(v) for k, v in dict(self.publish_prob).items()}
        missing = [k for k in PROB_KEYS if k not in probs]
        if missing:
            raise ValueError(f"publish_prob missing keys {missing}")
        for key, p in probs.items():
            if key not in PROB_KEYS:
                raise ValueError(f"unknown publish_prob key {key!r}")
            if not 0 <= p <= 1:
                raise ValueError(f"publish_prob[{key!r}]={p} outside [0,1]")
        object.__setattr__(self, "publish_prob", probs)


def _effort_char(action: Action) -> str:
    # C = honest reporting at zero extra effort, D = hyping at cost `effort`.
    return "0" if action is Action.C else "e"


def build_publication_game(params: PublicationParams) -> PayoffMatrix2x2:
    """Expected-payoff matrix of the publication race.

    A player's cell value is publish_prob(own, other) * reward minus the
    player's *own* effort spend.
    """

    def u(own: Action, other: Action) -> Fraction:
        p = params.publish_prob[_effort_char(own) + _effort_char(other)]
        spent = params.effort if own is Action.D else Fraction(0)
        return p * params.reward - spent

    return PayoffMatrix2x2.from_cells(
        {
            (a, b): (u(a, b), u(b, a))
            for a in ACTIONS
            for b in ACTIONS
        }
    )


@dataclass(frozen=True)
class EquilibriumSet:
    """Pure equilibria plus the interior mixed equilibrium when one exists.

    Mixed probabilities are the chance each player plays D.
    """

    pure: tuple[tuple[Action, Action], ...]
    mixed: Optional[tuple[Fraction, Fraction]]

    def __post_init__(self):
        if self.mixed is not None:
            p_row, p_col = self.mixed
            if not (0 <= p_row <= 1 and 0 <= p_col <= 1):
                raise ValueError("mixed probabilities must lie in [0,1]")


def pure_equilibria(game: PayoffMatrix2x2) -> list[tuple[Action, Action]]:
    """All pure Nash profiles, by exhaustive best-response check.

    A profile is an equilibrium when no unilateral deviation strictly
    improves either player; ties count as best responses.
    """
    result = []
    for a, b in _CELL_ORDER:
        other_a = Action.D if a is Action.C else Action.C
        other_b = Action.D if b is Action.C else Action.C
        row_ok = game.row_payoff(a, b) >= game.row_payoff(other_a, b)
        col_ok = game.col_payoff(a, b) >= game.col_payoff(a, other_b)
        if row_ok and col_ok:
            result.append((a, b))
    return result


def mixed_equilibrium(
    game: PayoffMatrix2x2,
) -> Optional[tuple[Fraction, Fraction]]:
    """Interior mixed equilibrium (probability of D for row and column).

    Each player's mix solves the opponent's indifference equation, exactly
    in rationals.  Returns None unless both solutions exist and lie
    strictly inside (0, 1); degenerate games (an indifference equation with
    zero coefficient) also return None.
    """
    # Column's C-probability q makes the row player indifferent.
    a = game.row_payoff(Action.C, Action.C)
    b = game.row_payoff(Action.C, Action.D)
    c = game.row_payoff(Action.D, Action.C)
    d = game.row_payoff(Action.D, Action.D)
    denom_q = a - b - c + d
    # Row's C-probability p makes the column player indifferent.
    a2 = game.col_payoff(Action.C, Action.C)
    b2 = game.col_payoff(Action.C, Action.D)
    c2 = game.col_payoff(Action.D, Action.C)
    d2 = game.col_payoff(Action.D, Action.D)
    denom_p = a2 - b2 - c2 + d2
    if denom_q == 0 or denom_p == 0:
        return None
    q_c = Fraction(d - b, denom_q)
    p_c = Fraction(d2 - c2, denom_p)
    if not (0 < q_c < 1 and 0 < p_c < 1):
        return None
    return (1 - p_c, 1 - q_c)


def dominant_action(game: PayoffMatrix2x2, player: str) -> Optional[Action]:
    """The strictly dominant action for "row" or "col", if any."""
    better = _dominance_profile(game, player)
    if all(cmp > 0 for cmp in better):
        return Action.C
    if all(cmp < 0 for cmp in better):
        return Action.D
    return None


def weakly_dominant_action(game: PayoffMatrix2x2, player: str) -> Optional[Action]:
    """Weakly dominant action: never worse, strictly better somewhere."""
    better = _dominance_profile(game, player)
    if all(cmp >= 0 for cmp in better) and any(cmp > 0 for cmp in better):
        return Action.C
    if all(cmp <= 0 for cmp in better) and any(cmp < 0 for cmp in better):
        return Action.D
    return None


def _dominance_profile(game: PayoffMatrix2x2, player: str) -> list[Fraction]:
    """Per-opponent-action payoff gaps u(C, .) - u(D, .) for one player."""
    if player == "row":
        return [
            game.row_payoff(Action.C, b) - game.row_payoff(Action.D, b)
            for b in ACTIONS
        ]
    if player == "col":
        return [
            game.col_payoff(a, Action.C) - game.col_payoff(a, Action.D)
            for a in ACTIONS
        ]
    raise ValueError(f"player must be 'row' or 'col', got {player!r}")


def equilibrium_set(game: PayoffMatrix2x2) -> EquilibriumSet:
    """Pure and mixed equilibria bundled together."""
    return EquilibriumSet(
        pure=tuple(pure_equilibria(game)), mixed=mixed_equilibrium(game)
    )


# ---------------------------------------------------------------------------
# JSON scenario interface
# ---------------------------------------------------------------------------

def game_from_json(obj: Mapping) -> PayoffMatrix2x2:
    """Build a game from a scenario dict; rationals are "p/q" strings.

    Supported shapes::

        {"type": "publication", "R": "4", "e": "1",
         "P": {"e0": "1", "0e": "0", "ee": "1/2", "00": "1/2"}}
        {"type": "commons2", "B": "2", "e": "1"}
        {"type": "matrix", "cells": {"CC": ["1","1"], "CD": ["-1","2"],
                                     "DC": ["2","-1"], "DD": ["0","0"]}}
    """
    kind = obj.get("type")
    if kind == "publication":
        params = PublicationParams(
            reward=as_rational(obj["R"]),
            effort=as_rational(obj["e"]),
            publish_prob={k: as_rational(v) for k, v in obj["P"].items()},
        )
        return build_publication_game(params)
    if kind == "commons2":
        return two_player_commons_game(obj["B"], obj["e"])
    if kind == "matrix":
        cells = obj["cells"]
        def cell(key: str) -> tuple[Fraction, Fraction]:
            r, c = cells[key]
            return (as_rational(r), as_rational(c))
        return PayoffMatrix2x2.from_cells(
            {
                (Action.C, Action.C): cell("CC"),
                (Action.C, Action.D): cell("CD"),
                (Action.D, Action.C): cell("DC"),
                (Action.D, Action.D): cell("DD"),
            }
        )
    raise ValueError(f"unknown game type {kind!r}")


def game_to_json(game: PayoffMatrix2x2) -> dict:
    """Serialize a game as an explicit-matrix scenario object."""
    keys = ("CC", "CD", "DC", "DD")
    return {
        "type": "matrix",
        "cells": {
            k: [format_rational(r), format_rational(c)]
            for k, (r, c) in zip(keys, game.cells)
        },
    }
