"""Genome operators, fitness evaluation, and the elitist search loop."""

import io
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ipdlab import (
    EvolutionParams,
    GenerationRecord,
    behaviorally_equivalent,
    evolve,
    fitness,
    generation_deltas,
    mutate_fsm,
    random_genome,
    read_generation_log,
    roster_default,
    validate_fsm,
)
from ipdlab.evolution import _pad_genome, genome_key, render_generation_line
from ipdlab.rng import SplitMix64
from ipdlab.strategies import CLASSIC_FSMS

from conftest import fsm_specs


def _params(**kw):
    defaults = dict(generations=0, opponent_roster=("Cooperator", "Defector"))
    defaults.update(kw)
    return EvolutionParams(**defaults)


class TestParamsValidation:
    def test_defaults_carry_the_full_roster(self):
        params = EvolutionParams(generations=1)
        assert params.opponent_roster == tuple(s.name for s in roster_default())
        assert params.population_size == 40
        assert params.bottleneck == 10
        assert params.mutation_rate == 0.1
        assert params.turns == 20
        assert params.repetitions == 10
        assert params.noise == 0.0

    @pytest.mark.parametrize(
        "kw, message",
        [
            (dict(generations=-1), "generations"),
            (dict(num_states=0), "num_states"),
            (dict(bottleneck=0), "bottleneck"),
            (dict(bottleneck=50), "bottleneck"),
            (dict(mutation_rate=1.5), "mutation_rate"),
            (dict(turns=0), "turns"),
            (dict(repetitions=0), "repetitions"),
            (dict(noise=-0.1), "noise"),
            (dict(opponent_roster=()), "opponent_roster"),
        ],
    )
    def test_rejects_bad_values(self, kw, message):
        merged = dict(generations=1)
        merged.update(kw)
        with pytest.raises(ValueError, match=message):
            EvolutionParams(**merged)


class TestMutation:
    def test_rate_zero_is_identity(self, e8):
        out = mutate_fsm(e8, 0.0, SplitMix64(42))
        assert out == e8

    def test_rate_one_on_a_single_state_machine(self):
        spec = CLASSIC_FSMS["TitForTat"]  # one state, both targets stuck at 1
        out = mutate_fsm(spec, 1.0, SplitMix64(7))
        # every entry's action flips; retargets can only land on state 1
        assert out.transitions[(1, 0)] == (1, spec.transitions[(1, 0)][1].flip())
        assert out.transitions[(1, 1)] == (1, spec.transitions[(1, 1)][1].flip())
        assert out.initial_action == spec.initial_action.flip()

    def test_same_stream_same_child(self, fourthprac):
        assert mutate_fsm(fourthprac, 0.3, SplitMix64(11)) == mutate_fsm(
            fourthprac, 0.3, SplitMix64(11)
        )
        assert mutate_fsm(fourthprac, 0.3, SplitMix64(11)) != mutate_fsm(
            fourthprac, 0.3, SplitMix64(12)
        )

    def test_invalid_rate_rejected(self, e6):
        with pytest.raises(ValueError, match="rate"):
            mutate_fsm(e6, -0.2, SplitMix64(0))

    def test_flip_fraction_tracks_the_rate(self, secondprac):
        rng = SplitMix64(2024)
        flips = entries = 0
        for _ in range(2000):
            child = mutate_fsm(secondprac, 0.1, rng)
            for key, (_, own) in secondprac.transitions.items():
                entries += 1
                flips += int(child.transitions[key][1] != own)
        assert abs(flips / entries - 0.1) < 0.01

    @given(spec=fsm_specs(), rate=st.floats(0.0, 1.0), seed=st.integers(0, 2**32))
    @settings(max_examples=60, deadline=None)
    def test_mutants_are_always_valid(self, spec, rate, seed):
        child = mutate_fsm(spec, rate, SplitMix64(seed))
        assert validate_fsm(child) == []
        assert child.states == spec.states
        assert child.start_state == spec.start_state


class TestRandomGenome:
    @given(num_states=st.integers(1, 12), seed=st.integers(0, 2**32))
    @settings(max_examples=40, deadline=None)
    def test_always_valid_with_dense_state_ids(self, num_states, seed):
        spec = random_genome(num_states, SplitMix64(seed), name="r")
        assert validate_fsm(spec) == []
        assert spec.states == tuple(range(1, num_states + 1))

    def test_deterministic_per_stream(self):
        assert random_genome(8, SplitMix64(3), "x") == random_genome(8, SplitMix64(3), "x")


class TestPadding:
    def test_exact_size_passes_through(self, e8):
        assert _pad_genome(e8, 8, SplitMix64(0)) is e8

    def test_padding_preserves_behavior(self, e6):
        padded = _pad_genome(e6, 10, SplitMix64(5))
        assert len(padded.states) == 10
        assert validate_fsm(padded) == []
        assert behaviorally_equivalent(padded, e6)
        for key, value in e6.transitions.items():
            assert padded.transitions[key] == value

    def test_oversized_genome_rejected(self, secondprac):
        with pytest.raises(ValueError, match="more than"):
            _pad_genome(secondprac, 6, SplitMix64(0))


class TestGenomeKey:
    def test_name_does_not_matter(self, e6):
        assert genome_key(e6) == genome_key(replace(e6, name="Imposter"))

    def test_content_does(self, e6, e8):
        assert genome_key(e6) != genome_key(e8)


class TestFitness:
    def test_cooperation_scores_three(self):
        params = _params(opponent_roster=("Cooperator",), turns=10, repetitions=2)
        assert fitness(CLASSIC_FSMS["Cooperator"], params) == 3.0

    def test_exploited_cooperator_scores_zero(self):
        params = _params(opponent_roster=("Defector",), turns=10, repetitions=2)
        assert fitness(CLASSIC_FSMS["Cooperator"], params) == 0.0

    def test_exploiting_defector_scores_five(self):
        params = _params(opponent_roster=("Cooperator",), turns=10, repetitions=2)
        assert fitness(CLASSIC_FSMS["Defector"], params) == 5.0

    def test_pure_function_of_content_and_params(self, e8):
        params = _params(
            opponent_roster=("Random", "TitForTat"), turns=30, repetitions=5, seed=4
        )
        first = fitness(e8, params)
        assert fitness(e8, params) == first
        assert fitness(replace(e8, name="Imposter"), params) == first

    def test_full_roster_value_is_on_payoff_scale(self, e6):
        value = fitness(e6, EvolutionParams(generations=0, turns=20, repetitions=3))
        assert 0.0 <= value <= 5.0


class TestEvolve:
    def test_zero_generations_scores_the_seeds_once(self, e6):
        params = _params(generations=0, population_size=3, bottleneck=1, seed=8)
        best, records = evolve([e6], params)
        assert len(records) == 1
        assert records[0].index == 0
        assert genome_key(best) == genome_key(records[0].best_genome)

    def test_rerun_produces_identical_logs(self, secondprac):
        params = _params(
            generations=4, population_size=6, bottleneck=2, turns=10,
            repetitions=2, seed=21,
        )
        _, one = evolve([secondprac], params)
        _, two = evolve([secondprac], params)
        assert [render_generation_line(r) for r in one] == [
            render_generation_line(r) for r in two
        ]

    def test_best_fitness_never_drops(self):
        params = EvolutionParams(
            generations=6, num_states=6, population_size=8, bottleneck=2,
            turns=10, repetitions=2, seed=13,
        )
        _, records = evolve([], params)
        best = [r.best_fitness for r in records]
        assert best == sorted(best)
        assert len(records) == 7

    def test_rate_zero_is_pure_selection(self, e6):
        params = _params(
            generations=3, population_size=3, bottleneck=1,
            mutation_rate=0.0, turns=10, repetitions=1, seed=2,
        )
        _, records = evolve([e6], params)
        keys = {genome_key(r.best_genome) for r in records}
        assert len(keys) == 1  # the champion is copied forever

    def test_too_many_seed_genomes_rejected(self, e6, e8):
        with pytest.raises(ValueError, match="exceed population size"):
            evolve([e6, e8], _params(population_size=1, bottleneck=1))

    def test_invalid_seed_genome_rejected(self, e6):
        broken = replace(e6, start_state=99)
        with pytest.raises(ValueError, match="invalid"):
            evolve([broken], _params())

    def test_log_stream_receives_each_record(self, e6):
        stream = io.StringIO()
        params = _params(
            generations=2, population_size=4, bottleneck=1, turns=5,
            repetitions=1, seed=6,
        )
        _, records = evolve([e6], params, log_stream=stream)
        expected = "".join(render_generation_line(r) + "\n" for r in records)
        assert stream.getvalue() == expected

    def test_first_generation_index_shifts_numbering(self, e6):
        params = _params(
            generations=2, population_size=3, bottleneck=1, turns=5,
            repetitions=1, seed=6,
        )
        _, records = evolve([e6], params, first_generation_index=5)
        assert [r.index for r in records] == [5, 6, 7]


class TestGenerationLog:
    def test_round_trip(self, tmp_path, e6, e8):
        params = _params(
            generations=3, population_size=4, bottleneck=2, turns=8,
            repetitions=2, seed=3,
        )
        _, records = evolve([e6, e8], params)
        path = tmp_path / "gen.log"
        path.write_text("".join(render_generation_line(r) + "\n" for r in records))
        loaded = read_generation_log(path)
        assert [render_generation_line(r) for r in loaded] == [
            render_generation_line(r) for r in records
        ]
        assert [r.index for r in loaded] == [0, 1, 2, 3]

    def test_reader_rejects_short_lines(self, tmp_path):
        path = tmp_path / "gen.log"
        path.write_text("0,1.0\n")
        with pytest.raises(ValueError, match="line 1"):
            read_generation_log(path)

    def test_reader_rejects_broken_fsm_field(self, tmp_path):
        path = tmp_path / "gen.log"
        path.write_text("0,1.0,1.0,not a machine\n")
        with pytest.raises(ValueError, match="line 1"):
            read_generation_log(path)

    def test_reader_rejects_empty_log(self, tmp_path):
        path = tmp_path / "gen.log"
        path.write_text("\n\n")
        with pytest.raises(ValueError, match="no generation records"):
            read_generation_log(path)


class TestGenerationDeltas:
    @staticmethod
    def _log(means):
        spec = CLASSIC_FSMS["TitForTat"]
        return [
            GenerationRecord(index=i, best_fitness=m, mean_fitness=m, best_genome=spec)
            for i, m in enumerate(means)
        ]

    def test_recorded_jump_pair(self):
        jumps = generation_deltas(self._log([2.871814908, 2.885947477]), 0.01)
        assert len(jumps) == 1
        pos, delta = jumps[0]
        assert pos == 1
        assert abs(delta - 0.014132569) < 1e-12

    def test_constant_means_report_nothing(self):
        assert generation_deltas(self._log([2.0, 2.0, 2.0]), 0.001) == []

    def test_threshold_zero_reports_every_non_drop(self):
        jumps = generation_deltas(self._log([1.0, 1.5, 1.5, 1.2]), 0.0)
        assert [pos for pos, _ in jumps] == [1, 2]

    def test_single_record_log_rejected(self):
        with pytest.raises(ValueError, match="at least two"):
            generation_deltas(self._log([2.0]), 0.1)
