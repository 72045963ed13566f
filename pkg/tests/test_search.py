import json
from math import comb

import pytest

from cyclebound.algebra import canonicalize_cycle, check_admissible, verify_certificate
from cyclebound.maps import Variant
from cyclebound.search import (
    CheckpointMismatch,
    SearchConfig,
    admissible_compositions,
    compositions,
    run,
    scan_chunk,
    search_exponent_sequences,
    search_negative_cycles,
    search_positive_cycles,
)
from oracle import reference_scan

POS, NEG = Variant.POS, Variant.NEG
NEG_CYCLES = {
    ((1,), (1,)),
    ((7, 5), (1, 2)),
    ((25, 37, 55, 41, 61, 91, 17), (1, 1, 1, 2, 1, 1, 4)),
}


def cycle_set(report):
    return {(c.elements, c.exponents) for c in report.cycles}


@pytest.mark.parametrize("k, horizon, candidates", [(2, 4, 2), (3, 20, 10), (7, 3828, 1914)])
def test_positive_examples(k, horizon, candidates):
    rep = search_positive_cycles(k)
    (r,) = rep.results
    assert (r.horizon, r.candidates, r.cycles, r.complete) == (horizon, candidates, [], True)


def test_positive_loose_horizon():
    (r,) = search_positive_cycles(4, loose_horizon=True).results
    assert r.horizon == 107 and r.complete


def test_positive_rejects_k1():
    with pytest.raises(ValueError):
        search_positive_cycles(1)


def test_negative_examples():
    assert cycle_set(search_negative_cycles(100, 10)) == NEG_CYCLES
    assert cycle_set(search_negative_cycles(1, 1)) == {((1,), (1,))}
    rep = search_negative_cycles(3, 10)
    assert cycle_set(rep) == {((1,), (1,))}
    assert not rep.complete


@pytest.mark.parametrize("k", range(2, 5))
def test_positive_matches_reference_scan(k):
    # beyond the horizon too, so the comparison is not only of empty sets at the horizon
    rep = run(SearchConfig(POS, k, k, limit_override=3001, chunk_size=97))
    assert cycle_set(rep) == reference_scan(1, k, 3001)
    assert rep.results[0].complete


def test_negative_matches_reference_scan():
    rep = run(SearchConfig(NEG, 1, 10, limit_override=1000, chunk_size=50))
    expected = set()
    for k in range(1, 11):
        expected |= reference_scan(-1, k, 1000)
    assert cycle_set(rep) == expected == NEG_CYCLES


def test_scan_chunk_matches_naive_without_early_exit():
    from oracle import f_naive, period
    for k in range(1, 9):
        naive = []
        for a in range(1, 400, 2):
            x = a
            for _ in range(k):
                x, _ = f_naive(x, -1)
            if x == a and period(a, -1, k) == k and all(
                    e >= a for e in _orbit(a, k)):
                naive.append(a)
        assert scan_chunk((1, 401, k, -1)) == naive


def _orbit(a, k):
    from oracle import f_naive
    out, x = [], a
    for _ in range(k):
        x, _ = f_naive(x, -1)
        out.append(x)
    return out


@pytest.mark.parametrize("k", range(2, 12))
def test_fixed_point_never_certified(k):
    assert scan_chunk((1, 3, k, 1)) == []


def test_exponent_sequence_examples():
    rep = search_exponent_sequences(1, POS, 2, 8)
    assert cycle_set(rep) == {((1,), (2,))}
    assert search_exponent_sequences(2, POS, 4, 8).cycles == []
    rep = search_exponent_sequences(7, NEG, 11, 11)
    assert cycle_set(rep) == {((25, 37, 55, 41, 61, 91, 17), (1, 1, 1, 2, 1, 1, 4))}
    # all 7 rotations of the sequence solve the equation but report one cycle
    assert rep.results[0].candidates == comb(10, 6)


def test_exponent_sequence_notes():
    rep = search_exponent_sequences(3, POS, 2, 4)
    r = rep.results[0]
    assert r.candidates == 0 and r.cycles == []
    assert any("empty effective range" in n for n in r.notes)
    assert any("N=4 skipped" in n for n in r.notes)


def test_cross_method_agreement_negative():
    by_iter = cycle_set(search_negative_cycles(100, 10))
    by_seq = set()
    for k, total in [(1, 1), (2, 3), (7, 11)]:
        by_seq |= cycle_set(search_exponent_sequences(k, NEG, total, total))
    assert by_iter == by_seq


def test_negative_exponent_search_wider_ranges():
    # every N with 2^N < 3^k, k <= 7: only the known cycles appear
    found = set()
    for k in range(1, 8):
        n_max = (3**k).bit_length() - 1
        found |= cycle_set(search_exponent_sequences(k, NEG, k, n_max))
    assert found == NEG_CYCLES


def test_compositions_lexicographic_and_counted():
    for total in range(1, 10):
        for k in range(1, total + 1):
            cs = list(compositions(total, k))
            assert len(cs) == comb(total - 1, k - 1)
            assert cs == sorted(cs)
            assert all(sum(c) == total and min(c) >= 1 for c in cs)


def test_admissible_compositions_equal_filtered():
    for total in range(1, 16):
        for k in range(1, 9):
            brute = [c for c in compositions(total, k) if not check_admissible(c)]
            assert list(admissible_compositions(total, k)) == brute


def test_certificate_hygiene():
    rep = search_negative_cycles(1000, 12)
    keys = [c.rotation_key() for c in rep.cycles]
    assert len(keys) == len(set(keys))
    assert all(verify_certificate(c).ok for c in rep.cycles)


def test_determinism_across_workers_and_chunks():
    base = run(SearchConfig(POS, 2, 8, worker_count=1, chunk_size=1000)).dumps()
    assert run(SearchConfig(POS, 2, 8, worker_count=3, chunk_size=37)).dumps() == base
    neg = run(SearchConfig(NEG, 1, 8, 500, worker_count=1, chunk_size=500)).dumps()
    assert run(SearchConfig(NEG, 1, 8, 500, worker_count=4, chunk_size=3)).dumps() == neg


def test_config_validation():
    with pytest.raises(ValueError, match="explicit limit"):
        SearchConfig(NEG, 1, 3).validate()
    with pytest.raises(ValueError):
        SearchConfig(POS, 1, 3).validate()
    with pytest.raises(ValueError):
        SearchConfig(POS, 4, 3).validate()
    with pytest.raises(ValueError):
        SearchConfig(POS, 2, 3, worker_count=0).validate()


def test_config_hash_ignores_execution_settings():
    a = SearchConfig(POS, 2, 5, worker_count=1, chunk_size=10)
    b = SearchConfig(POS, 2, 5, worker_count=8, chunk_size=999)
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != SearchConfig(POS, 2, 6).config_hash()
    assert a.config_hash() != SearchConfig(POS, 2, 5, loose_horizon=True).config_hash()


@pytest.mark.parametrize("stop_after", [1, 5, 23, 60])
def test_resume_after_interrupt(tmp_path, stop_after):
    ck = tmp_path / "ck.jsonl"
    full = run(SearchConfig(NEG, 1, 9, 2000, chunk_size=40)).dumps()
    part = run(SearchConfig(NEG, 1, 9, 2000, chunk_size=40, checkpoint_path=ck), max_chunks=stop_after)
    assert part.interrupted
    lines = ck.read_text().splitlines()
    assert 1 <= len(lines) <= stop_after
    rec = json.loads(lines[-1])
    assert set(rec) == {"config_hash", "k", "next_candidate", "found"}
    assert isinstance(rec["next_candidate"], str)
    # resume with different execution settings
    resumed = run(SearchConfig(NEG, 1, 9, 2000, worker_count=2, chunk_size=17, checkpoint_path=ck),
                  resume=True)
    assert resumed.dumps() == full
    assert not (tmp_path / "ck.jsonl.tmp").exists()


def test_checkpoint_keeps_finding_records(tmp_path):
    ck = tmp_path / "ck.jsonl"
    run(SearchConfig(NEG, 1, 7, 200, chunk_size=5, checkpoint_path=ck))
    recs = [json.loads(line) for line in ck.read_text().splitlines()]
    found = {(r["k"], c["min"]) for r in recs for c in r["found"]}
    assert found == {(1, "1"), (2, "5"), (7, "17")}
    # one trailing record per k plus the records that carried finds
    assert len(recs) <= 7 + 3
    for k in range(1, 8):
        assert max(int(r["next_candidate"]) for r in recs if r["k"] == k) == 201


def test_resume_of_finished_run_is_noop(tmp_path):
    ck = tmp_path / "ck.jsonl"
    first = run(SearchConfig(POS, 2, 6, chunk_size=50, checkpoint_path=ck))
    n = len(ck.read_text().splitlines())
    again = run(SearchConfig(POS, 2, 6, chunk_size=50, checkpoint_path=ck), resume=True)
    assert again.dumps() == first.dumps()
    assert len(ck.read_text().splitlines()) == n


def test_resume_refuses_foreign_checkpoint(tmp_path):
    ck = tmp_path / "ck.jsonl"
    run(SearchConfig(POS, 2, 5, checkpoint_path=ck))
    with pytest.raises(CheckpointMismatch):
        run(SearchConfig(POS, 2, 6, checkpoint_path=ck), resume=True)


def test_fresh_run_overwrites_checkpoint(tmp_path):
    ck = tmp_path / "ck.jsonl"
    run(SearchConfig(POS, 2, 5, checkpoint_path=ck))
    run(SearchConfig(POS, 2, 6, checkpoint_path=ck))
    assert run(SearchConfig(POS, 2, 6, checkpoint_path=ck), resume=True).complete


def test_limit_override_below_horizon_is_incomplete():
    (r,) = run(SearchConfig(POS, 5, 5, limit_override=100)).results
    assert r.horizon == 100 and not r.complete


def test_known_negative_cycles_canonical():
    c = canonicalize_cycle((37, 55, 41, 61, 91, 17, 25), None, NEG)
    assert (c.elements, c.exponents) in NEG_CYCLES
