"""The one-shot games behind publish-or-perish.

Walks through the review commons, its two-player prisoner's-dilemma form,
and the publication race in biased and debiased variants, printing each
payoff matrix with its equilibria.
"""

from fractions import Fraction

from scholarchain import (
    Action,
    CommonsParams,
    PublicationParams,
    build_commons_payoff,
    build_publication_game,
    dominant_action,
    equilibrium_set,
    two_player_commons_game,
)

C, D = Action.C, Action.D


def show(game, title):
    print(f"\n{title}")
    print(f"              B: C          B: D")
    for a in (C, D):
        cells = "   ".join(
            f"({game.row_payoff(a, b)!s:>4},{game.col_payoff(a, b)!s:>4})"
            for b in (C, D)
        )
        print(f"  A: {a.value}   {cells}")
    es = equilibrium_set(game)
    pure = ", ".join(f"({a.value},{b.value})" for a, b in es.pure) or "none"
    print(f"  pure equilibria : {pure}")
    if es.mixed is not None:
        print(f"  mixed equilibrium: P(D) = {es.mixed[0]} for each player")
    row_dom = dominant_action(game, "row")
    print(f"  dominant action : {row_dom.value if row_dom else 'none'}")


# --- the review commons -----------------------------------------------------
# Contributing reviews costs effort e; drawing on the pool of diligent
# reviews is worth B.  With too few contributors the pool collapses.

params = CommonsParams(benefit=2, effort=1, threshold=3, size=10)
print("Review commons, B=2, e=1, needs 3 cooperators among 10:")
for coop_count in (5, 3, 0):
    row = {
        action: build_commons_payoff(params, coop_count, action)
        for action in (C, D)
    }
    print(f"  {coop_count} other cooperators -> C pays {row[C]}, D pays {row[D]}")
print("Free-riding beats contributing in every column: the commons dies.")

# --- two players ------------------------------------------------------------
show(two_player_commons_game(2, 1), "Two-player review dilemma (B=2, e=1):")

# --- the publication race ----------------------------------------------------
# Honest reporting is C (no extra effort); hyping the paper is D (effort 1).
# P(own, other) is the chance the community publishes your paper.

biased = PublicationParams(
    reward=4,
    effort=1,
    publish_prob={"e0": 1, "0e": 0, "ee": Fraction(1, 2), "00": Fraction(1, 2)},
)
show(
    build_publication_game(biased),
    "Publication race, hype always beats honesty (reward 4, effort 1):",
)
print("  A dilemma: mutual honesty pays better, yet hyping dominates.")

debiased = PublicationParams(
    reward=4,
    effort=1,
    publish_prob={
        "e0": Fraction(1, 2),
        "0e": 0,
        "ee": Fraction(1, 2),
        "00": Fraction(1, 2),
    },
)
show(
    build_publication_game(debiased),
    "Same race after halving the hype advantage:",
)
print(
    "  Now a coordination game: honest-and-flourish (C,C) is an equilibrium,\n"
    "  and the platform's job is to make the community coordinate on it."
)
