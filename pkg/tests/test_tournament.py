"""Round-robin tournament scoring, ranking, profiling, and dump files."""

import pytest

from ipdlab import (
    TournamentConfig,
    cooperation_rates,
    median_ranking,
    read_history_dump,
    run_tournament,
    write_history_dump,
    write_ranking_csv,
)
from ipdlab.tournament import render_history_dump, render_ranking_csv


def _run(roster, **kw):
    defaults = dict(turns=5, repetitions=1, noise=0.0, master_seed=0)
    defaults.update(kw)
    return run_tournament(TournamentConfig(roster=tuple(roster), **defaults))


class TestConfigValidation:
    def test_turns_must_be_positive(self):
        with pytest.raises(ValueError, match="turns"):
            TournamentConfig(roster=("Cooperator", "Defector"), turns=0)

    def test_repetitions_must_be_positive(self):
        with pytest.raises(ValueError, match="repetitions"):
            TournamentConfig(roster=("Cooperator", "Defector"), repetitions=0)

    def test_noise_range(self):
        with pytest.raises(ValueError, match="noise"):
            TournamentConfig(roster=("Cooperator", "Defector"), noise=1.5)

    def test_roster_size(self):
        with pytest.raises(ValueError, match="two entrants"):
            TournamentConfig(roster=("Cooperator",))

    def test_duplicate_roster_entries_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            _run(["Cooperator", "Cooperator"])


class TestThreePlayerOracle:
    """Cooperator/Defector/TitForTat at five turns, worked by hand.

    Coop: 0 vs Def, 15 vs TFT -> 15/10 = 1.5
    Def: 25 vs Coop, 9 vs TFT -> 34/10 = 3.4
    TFT: 15 vs Coop, 4 vs Def -> 19/10 = 1.9
    """

    ROSTER = ("Cooperator", "Defector", "TitForTat")

    def test_normalized_scores(self):
        result = _run(self.ROSTER)
        assert result.scores["Cooperator"] == [1.5]
        assert result.scores["Defector"] == [3.4]
        assert result.scores["TitForTat"] == [1.9]

    def test_ranking_order(self):
        result = _run(self.ROSTER)
        assert [(r.rank, r.name) for r in result.ranking] == [
            (1, "Defector"),
            (2, "TitForTat"),
            (3, "Cooperator"),
        ]
        assert median_ranking(result) == result.ranking

    def test_csv_text(self):
        text = render_ranking_csv(_run(self.ROSTER))
        lines = text.splitlines()
        assert lines[0] == "Rank,Name,Median Score"
        assert lines[1] == "1,Defector,3.400000000"
        assert len(lines) == 4
        assert text.endswith("\n")

    def test_csv_writer_reports_line_count(self, tmp_path):
        out = tmp_path / "ranking.csv"
        assert write_ranking_csv(_run(self.ROSTER), out) == 4
        assert out.read_text().splitlines()[1] == "1,Defector,3.400000000"


class TestDeterminismContract:
    def test_rerun_is_identical(self):
        roster = ["TitForTat", "Random", "EvolvedFSM6", "Grudger"]
        one = _run(roster, turns=30, repetitions=3, noise=0.05, master_seed=9)
        two = _run(roster, turns=30, repetitions=3, noise=0.05, master_seed=9)
        assert one.scores == two.scores
        assert one.ranking == two.ranking
        assert one.histories == two.histories

    def test_roster_order_does_not_move_scores(self):
        roster = ["Random", "TitForTat", "Defector", "EvolvedFSM8"]
        forward = _run(roster, turns=25, repetitions=4, noise=0.1, master_seed=3)
        backward = _run(list(reversed(roster)), turns=25, repetitions=4, noise=0.1, master_seed=3)
        assert forward.scores == backward.scores
        assert forward.histories == backward.histories

    def test_tie_breaks_follow_roster_position(self):
        # mutual cooperators tie exactly at 3.0; position decides
        ab = _run(["Cooperator", "TitForTat"], turns=10)
        assert [r.name for r in ab.ranking] == ["Cooperator", "TitForTat"]
        ba = _run(["TitForTat", "Cooperator"], turns=10)
        assert [r.name for r in ba.ranking] == ["TitForTat", "Cooperator"]
        assert ab.ranking[0].median == ba.ranking[0].median == 3.0


class TestSelfMatches:
    def test_seat_normalization_includes_self_play(self):
        # Coop: self 3t+3t, vs Def 0 over 3 seats -> 2.0
        # Def: self t+t, vs Coop 5t over 3 seats -> 7/3
        result = _run(["Cooperator", "Defector"], turns=12, include_self_matches=True)
        assert result.scores["Cooperator"] == [pytest.approx(2.0)]
        assert result.scores["Defector"] == [pytest.approx(7 / 3)]
        assert ("Cooperator", "Cooperator", 0) in result.histories
        assert ("Defector", "Defector", 0) in result.histories


@pytest.mark.parametrize("noise", [0.0, 0.07])
def test_normalized_scores_stay_on_payoff_scale(noise):
    roster = ["Random", "Alternator", "WinStayLoseShift", "FourthPrac", "Defector"]
    result = _run(roster, turns=30, repetitions=2, noise=noise, master_seed=11)
    for per_rep in result.scores.values():
        for value in per_rep:
            assert 0.0 <= value <= 5.0


class TestCooperationRates:
    def test_mutual_cooperation_has_one_context(self):
        result = _run(["Cooperator", "TitForTat"], turns=10)
        report = cooperation_rates(result.histories, "Cooperator")
        assert set(report.contexts) == {"CC"}
        assert report.contexts["CC"].rate == 1.0
        assert report.contexts["CC"].count == 9

    def test_alternator_against_cooperator(self):
        result = _run(["Alternator", "Cooperator"], turns=9)
        report = cooperation_rates(result.histories, "Alternator")
        assert set(report.contexts) == {"CC", "DC"}
        assert report.contexts["CC"].rate == 0.0
        assert report.contexts["DC"].rate == 1.0
        assert report.contexts["CC"].count == 4
        assert report.contexts["DC"].count == 4

    def test_counts_sum_to_observed_turns(self):
        result = _run(
            ["Random", "TitForTat", "Grudger"], turns=40, repetitions=3, master_seed=5
        )
        report = cooperation_rates(result.histories, "Random")
        # Random sits in 2 matches x 3 reps, each contributing turns-1 samples
        assert sum(s.count for s in report.contexts.values()) == 2 * 3 * 39

    def test_punish_then_probe_profile(self):
        # the 6-state machine against Defector over 21 turns: defect from
        # every CD context, come back to C on a quarter of DD contexts
        result = _run(["EvolvedFSM6", "Defector"], turns=21)
        report = cooperation_rates(result.histories, "EvolvedFSM6")
        assert set(report.contexts) == {"CD", "DD"}
        assert report.contexts["CD"].count == 4
        assert report.contexts["CD"].rate == 0.0
        assert report.contexts["DD"].count == 16
        assert report.contexts["DD"].rate == 0.25

    def test_unknown_player_raises(self):
        result = _run(["Cooperator", "Defector"])
        with pytest.raises(ValueError, match="Mystery"):
            cooperation_rates(result.histories, "Mystery")


def test_evolved_six_state_sustains_cooperation_with_titfortat():
    result = _run(["EvolvedFSM6", "TitForTat"], turns=50, repetitions=2)
    assert result.scores["EvolvedFSM6"] == [3.0, 3.0]
    assert result.scores["TitForTat"] == [3.0, 3.0]


class TestHistoryDump:
    def test_round_trip(self, tmp_path):
        result = _run(
            ["Random", "TitForTat", "EvolvedFSM8"], turns=15, repetitions=2, master_seed=2
        )
        path = tmp_path / "histories.txt"
        lines = write_history_dump(result, path)
        assert lines == 3 * 2  # three pairs, two reps
        assert read_history_dump(path) == result.histories

    def test_render_places_scores_last(self):
        result = _run(["Cooperator", "Defector"], turns=3)
        line = render_history_dump(result).splitlines()[0]
        assert line == "Cooperator|Defector|0|CCC|DDD|0|15"

    def test_fractional_payoffs_survive(self, tmp_path):
        result = _run(["Cooperator", "Defector"], turns=3)
        # tamper a payoff to a non-integer and round-trip it
        path = tmp_path / "h.txt"
        text = render_history_dump(result).replace("|0|15", "|0.5|15.25")
        path.write_text(text)
        record = read_history_dump(path)[("Cooperator", "Defector", 0)]
        assert record.payoff_a == 0.5
        assert record.payoff_b == 15.25

    def test_reader_reports_field_count_with_line_number(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("A|B|0|CC|CC|6|6\nA|B|1|CC\n")
        with pytest.raises(ValueError, match="line 2.*7 pipe-separated"):
            read_history_dump(path)

    def test_reader_rejects_bad_action_characters(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("A|B|0|CX|CC|6|6\n")
        with pytest.raises(ValueError, match="line 1"):
            read_history_dump(path)

    def test_reader_rejects_uneven_action_strings(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("A|B|0|CCC|CC|9|9\n")
        with pytest.raises(ValueError, match="differ in length"):
            read_history_dump(path)

    def test_blank_lines_are_skipped(self, tmp_path):
        path = tmp_path / "h.txt"
        path.write_text("A|B|0|CC|DD|2|10\n\n")
        assert len(read_history_dump(path)) == 1
