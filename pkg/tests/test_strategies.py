"""Tests for repeated-game analytics and population play."""

import itertools

import pytest
from hypothesis import given, strategies as st

from scholarchain.games import Action, two_player_commons_game
from scholarchain.strategies import (
    DiscountedPayoff,
    MatchTranscript,
    PopulationConfig,
    all_c,
    all_d,
    automaton_by_name,
    closed_form_payoff,
    cooperation_sustained,
    cooperation_threshold_population,
    discounted_average_payoff,
    grim,
    play_match,
    reputation_grim,
    run_population,
)

C, D = Action.C, Action.D

DILEMMA = two_player_commons_game(2, 1)


class TestAutomata:
    def test_grim_transition_structure(self):
        g = grim()
        assert g.action(g.initial) is C
        # Cooperative state absorbs under opponent cooperation.
        assert g.step("cooperating", C) == "cooperating"
        assert g.step("cooperating", D) == "punishing"
        # Punishment state absorbs under every input.
        assert g.step("punishing", C) == "punishing"
        assert g.step("punishing", D) == "punishing"

    @given(st.lists(st.sampled_from([C, D]), min_size=1, max_size=50))
    def test_grim_defects_forever_after_first_defection(self, opponent_actions):
        g = grim()
        state = g.initial
        betrayed = False
        for opp in opponent_actions:
            action = g.action(state)
            if betrayed:
                assert action is D
            betrayed = betrayed or opp is D
            state = g.step(state, opp)

    def test_reputation_grim_flag(self):
        assert reputation_grim().reputation_rule
        assert not grim().reputation_rule

    def test_lookup_by_name(self):
        assert automaton_by_name("alld").name == "alld"
        with pytest.raises(ValueError):
            automaton_by_name("tit-for-tat")

    def test_incomplete_transitions_rejected(self):
        from scholarchain.strategies import StrategyAutomaton

        with pytest.raises(ValueError):
            StrategyAutomaton(
                name="broken",
                initial="s",
                actions={"s": C},
                transitions={("s", C): "s"},
            )


class TestPlayMatch:
    def test_transcript_payoffs_match_stage_game(self):
        t = play_match(all_d(), grim(), DILEMMA, 4)
        assert [r[:2] for r in t.rounds] == [(D, C), (D, D), (D, D), (D, D)]
        for aa, ab, ua, ub in t.rounds:
            assert (ua, ub) == DILEMMA.payoff(aa, ab)

    def test_zero_rounds_rejected(self):
        with pytest.raises(ValueError):
            play_match(grim(), grim(), DILEMMA, 0)


class TestDiscountedAverage:
    def test_mutual_grim_cooperation(self):
        t = play_match(grim(), grim(), DILEMMA, 500)
        result = discounted_average_payoff(t, 0.9)
        assert result.value == pytest.approx(1.0, abs=1e-10)

    def test_defector_against_grim(self):
        t = play_match(all_d(), grim(), DILEMMA, 500)
        result = discounted_average_payoff(t, 0.6)
        assert result.value == pytest.approx(2 * (1 - 0.6), abs=1e-10)

    def test_single_zero_round(self):
        t = MatchTranscript(((D, D, DILEMMA.row_payoff(D, D), DILEMMA.col_payoff(D, D)),))
        assert discounted_average_payoff(t, 0.3).value == 0.0

    def test_bound_is_delta_pow_k_times_max(self):
        t = play_match(all_d(), all_c(), DILEMMA, 10)
        result = discounted_average_payoff(t, 0.5)
        assert result.truncation_bound == pytest.approx(0.5**10 * 2)

    def test_player_b_view(self):
        t = play_match(all_d(), all_c(), DILEMMA, 50)
        assert discounted_average_payoff(t, 0.5, player="b").value == pytest.approx(
            -1, abs=1e-10
        )

    def test_empty_transcript_rejected(self):
        with pytest.raises(ValueError):
            discounted_average_payoff(MatchTranscript(()), 0.5)

    def test_delta_domain(self):
        t = play_match(grim(), grim(), DILEMMA, 3)
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                discounted_average_payoff(t, bad)


class TestClosedForm:
    @pytest.mark.parametrize("delta", [i / 10 for i in range(1, 10)])
    def test_mutual_grim_is_exactly_one(self, delta):
        assert closed_form_payoff(grim(), grim(), DILEMMA, delta) == 1.0

    @pytest.mark.parametrize("delta", [i / 10 for i in range(1, 10)])
    def test_defect_against_grim(self, delta):
        assert closed_form_payoff(all_d(), grim(), DILEMMA, delta) == pytest.approx(
            2 * (1 - delta), abs=1e-15
        )

    def test_sucker_payoff_constant(self):
        for delta in (0.1, 0.5, 0.9):
            assert closed_form_payoff(all_c(), all_d(), DILEMMA, delta) == -1.0

    @pytest.mark.parametrize(
        "pair", list(itertools.product(["grim", "allc", "alld"], repeat=2))
    )
    @pytest.mark.parametrize("delta", [0.1, 0.5, 0.9])
    def test_agrees_with_truncated_simulation(self, pair, delta):
        a, b = automaton_by_name(pair[0]), automaton_by_name(pair[1])
        exact = closed_form_payoff(a, b, DILEMMA, delta)
        sim = discounted_average_payoff(play_match(a, b, DILEMMA, 500), delta)
        assert abs(exact - sim.value) <= sim.truncation_bound + 1e-12


class TestCooperationSustained:
    def test_boundary_patience_sustains(self):
        assert cooperation_sustained(DILEMMA, 0.5) is True

    def test_just_below_boundary_fails(self):
        assert cooperation_sustained(DILEMMA, 0.49) is False

    def test_patient_limit(self):
        assert cooperation_sustained(DILEMMA, 0.99) is True

    def test_non_dilemma_rejected(self):
        from scholarchain.games import PayoffMatrix2x2

        harmony = PayoffMatrix2x2.from_cells(
            {(C, C): (3, 3), (C, D): (1, 1), (D, C): (1, 1), (D, D): (0, 0)}
        )
        with pytest.raises(ValueError):
            cooperation_sustained(harmony, 0.9)


class TestPopulationThreshold:
    def test_two_player_case(self):
        assert cooperation_threshold_population(1, False) == 0.5

    def test_grows_with_population(self):
        assert cooperation_threshold_population(4, False) == 0.875

    def test_shared_reputation_restores_two_player_bar(self):
        assert cooperation_threshold_population(100, True) == 0.5
        assert cooperation_threshold_population(7, True) == 0.5

    def test_domain(self):
        with pytest.raises(ValueError):
            cooperation_threshold_population(0, False)


def population(size, overrides=None, *, delta=0.9, visible=True, seed=7, horizon=60):
    strategies = {p: reputation_grim() for p in range(size)}
    for p, name in (overrides or {}).items():
        strategies[p] = automaton_by_name(name)
    return PopulationConfig(
        size=size,
        strategies=strategies,
        delta=delta,
        reputation_visible=visible,
        rng_seed=seed,
        horizon=horizon,
    )


class TestRunPopulation:
    def test_all_grim_population_cooperates_forever(self):
        config = population(8, {p: "grim" for p in range(8)}, visible=False, seed=3)
        report = run_population(config, DILEMMA)
        assert all(rate == 1.0 for rate in report.cooperation_rates)

    def test_same_seed_reproduces_bytes(self):
        config = population(9, {0: "alld"}, seed=11)
        r1 = run_population(config, DILEMMA)
        r2 = run_population(config, DILEMMA)
        assert r1.to_csv() == r2.to_csv()
        assert r1.summary_json() == r2.summary_json()

    def test_different_seed_changes_matching(self):
        a = run_population(population(9, {0: "alld"}, seed=1), DILEMMA)
        b = run_population(population(9, {0: "alld"}, seed=2), DILEMMA)
        assert a.to_csv() != b.to_csv()

    def test_odd_population_sits_one_out(self):
        report = run_population(population(5, seed=13), DILEMMA)
        per_round = {}
        for row in report.rows:
            per_round.setdefault(row.round, []).append(row.player)
        assert all(len(players) == 4 for players in per_round.values())

    def test_reputation_flags_never_recover(self):
        config = population(10, {0: "alld", 1: "alld"}, seed=5)
        report = run_population(config, DILEMMA)
        seen_bad = set()
        for row in report.rows:
            if row.player in seen_bad:
                assert row.reputation == "bad"
            elif row.reputation == "bad":
                seen_bad.add(row.player)

    def test_defector_loses_under_patience(self):
        config = population(10, {0: "alld"}, delta=0.9, seed=21, horizon=120)
        report = run_population(config, DILEMMA)
        defector = report.discounted_payoffs[0]
        cooperators = [report.discounted_payoffs[p] for p in range(1, 10)]
        assert defector < sum(cooperators) / len(cooperators)

    def test_defector_wins_under_impatience(self):
        config = population(10, {0: "alld"}, delta=0.1, seed=21, horizon=120)
        report = run_population(config, DILEMMA)
        defector = report.discounted_payoffs[0]
        cooperators = [report.discounted_payoffs[p] for p in range(1, 10)]
        assert defector > sum(cooperators) / len(cooperators)

    def test_asymmetric_game_rejected(self):
        from scholarchain.games import PayoffMatrix2x2

        lopsided = PayoffMatrix2x2.from_cells(
            {(C, C): (1, 5), (C, D): (0, 0), (D, C): (0, 0), (D, D): (1, 1)}
        )
        with pytest.raises(ValueError):
            run_population(population(4, seed=1), lopsided)

    def test_csv_shape(self):
        report = run_population(population(4, seed=2, horizon=3), DILEMMA)
        lines = report.to_csv().strip().splitlines()
        assert lines[0] == "round,player,action,stage_payoff,reputation"
        assert len(lines) == 1 + 3 * 4

    def test_config_validation(self):
        with pytest.raises(ValueError):
            population(1)
        with pytest.raises(ValueError):
            PopulationConfig(
                size=2,
                strategies={0: grim()},
                delta=0.5,
                reputation_visible=False,
                rng_seed=0,
                horizon=5,
            )
