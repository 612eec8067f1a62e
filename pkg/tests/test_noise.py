import csv
import itertools
import statistics

import pytest

from taxoprobe.errors import InputError
from taxoprobe.noise import NoiseSpec, degrade, sweep, write_sweep_csv
from taxoprobe.scoring import score_taxonomy
from taxoprobe.taxonomy import parse_edge_list

from conftest import P3B, oracle_backend


def chain_taxonomy(n_edges: int, name: str = "synthetic"):
    lines = "".join(f"p{i:02d}\tc{i:02d}\n" for i in range(n_edges))
    return parse_edge_list(lines, name=name)


SPEC = NoiseSpec(levels=(0.0, 0.25, 0.5, 0.75, 1.0), seed=42)


class TestDegrade:
    def test_identity_at_zero(self):
        tax = chain_taxonomy(10)
        assert degrade(tax, 0.0, 1, SPEC) is tax

    def test_full_replacement_child_only(self):
        tax = chain_taxonomy(10)
        noisy = degrade(tax, 1.0, 1, SPEC)
        originals = dict(tax.edge_set())
        for parent, child in noisy.edge_set():
            assert child != originals[parent]
        # parents untouched under child_only
        assert [p for p, _ in noisy.edge_set()] == [p for p, _ in tax.edge_set()]

    def test_half_replacement_exact_count(self):
        tax = chain_taxonomy(10)
        noisy = degrade(tax, 0.5, 7, SPEC)
        changed = sum(
            a != b for a, b in zip(tax.edge_set(), noisy.edge_set())
        )
        assert changed == 5

    def test_deterministic(self):
        tax = chain_taxonomy(10)
        assert degrade(tax, 0.5, 7, SPEC).edge_set() == degrade(tax, 0.5, 7, SPEC).edge_set()

    def test_seed_changes_outcome(self):
        tax = chain_taxonomy(10)
        outcomes = {tuple(degrade(tax, 0.5, seed, SPEC).edge_set()) for seed in range(5)}
        assert len(outcomes) > 1

    def test_counts_preserved(self):
        tax = chain_taxonomy(12)
        noisy = degrade(tax, 0.75, 3, SPEC)
        assert len(noisy.nodes) == len(tax.nodes)
        assert noisy.n_edges == tax.n_edges

    def test_replacement_draws_from_pool(self):
        tax = chain_taxonomy(6)
        spec = NoiseSpec(levels=(1.0,), seed=0, pool=("alpha", "beta"))
        noisy = degrade(tax, 1.0, 0, spec)
        assert all(c in {"alpha", "beta"} for _, c in noisy.edge_set())

    def test_small_pool_rejected(self):
        tax = chain_taxonomy(4)
        spec = NoiseSpec(levels=(1.0,), seed=0, pool=("only",))
        with pytest.raises(InputError, match="pool"):
            degrade(tax, 0.5, 0, spec)

    def test_any_node_can_touch_parents(self):
        tax = chain_taxonomy(10)
        spec = NoiseSpec(levels=(1.0,), seed=0, replace_target="any_node")
        noisy = degrade(tax, 1.0, 0, spec)
        assert [p for p, _ in noisy.edge_set()] != [p for p, _ in tax.edge_set()]

    def test_fraction_validated(self):
        with pytest.raises(InputError):
            degrade(chain_taxonomy(4), 1.5, 0, SPEC)

    def test_levels_validated(self):
        with pytest.raises(InputError):
            NoiseSpec(levels=(0.5, 0.25))
        with pytest.raises(InputError):
            NoiseSpec(levels=(0.0, 2.0))


class TestSweep:
    def test_level_zero_equals_plain_score(self):
        tax = chain_taxonomy(8)
        backend = oracle_backend(tax)
        spec = NoiseSpec(levels=(0.0,), seed=1)
        points = sweep(tax, spec, backend, templates=[P3B], repeats=5)
        plain = score_taxonomy(tax, backend, templates=[P3B]).score.score
        assert points[0].scores == tuple([plain] * 5)

    def test_oracle_mean_matches_enumeration(self):
        # independent oracle: enumerate every replacement subset of the six
        # children and average the resulting scores
        tax = chain_taxonomy(6)
        backend = oracle_backend(tax)
        level = 0.5
        n_replace = round(level * 6)
        enumerated = []
        children = [c for _, c in tax.edge_set()]
        for subset in itertools.combinations(range(6), n_replace):
            replaced = {
                tax.nodes[tax.child_node_ids()[i]].node_id: f"zz{i:02d}" for i in subset
            }
            candidate = tax.with_surfaces(replaced)
            result = score_taxonomy(candidate, backend, templates=[P3B])
            enumerated.append(result.score.score)
        expectation = statistics.fmean(enumerated)

        spec = NoiseSpec(levels=(level,), seed=9)
        points = sweep(tax, spec, backend, templates=[P3B], repeats=30)
        assert points[0].mean == pytest.approx(expectation, abs=1e-9)
        assert expectation == pytest.approx(1 - level)

    def test_mean_curve_tracks_one_minus_level(self):
        tax = chain_taxonomy(20)
        backend = oracle_backend(tax)
        points = sweep(tax, SPEC, backend, templates=[P3B], repeats=20)
        for point in points:
            assert point.mean == pytest.approx(1 - point.level, abs=0.05)
        means = [p.mean for p in points]
        assert all(a >= b - 0.02 for a, b in zip(means, means[1:]))

    def test_repeats_validated(self):
        tax = chain_taxonomy(4)
        with pytest.raises(InputError):
            sweep(tax, SPEC, oracle_backend(tax), templates=[P3B], repeats=0)


class TestSweepCsv:
    def test_sections(self, tmp_path):
        tax = chain_taxonomy(6)
        backend = oracle_backend(tax)
        spec = NoiseSpec(levels=(0.0, 0.5), seed=2)
        points = sweep(tax, spec, backend, templates=[P3B], repeats=3)
        path = tmp_path / "curve.csv"
        write_sweep_csv(str(path), points)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["level", "repeat", "score"]
        header2 = rows.index(["level", "mean", "std"])
        per_repeat = rows[1:header2]
        aggregates = rows[header2 + 1 :]
        assert len(per_repeat) == 6  # 2 levels x 3 repeats
        assert len(aggregates) == 2
        assert float(aggregates[0][1]) == pytest.approx(1.0)
