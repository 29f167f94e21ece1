import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from icrbc import linalg
from icrbc.channel import (CsitPattern, CsitState, enumerate_synergistic_patterns,
                           group_patterns, icr_pattern, per_user_perfect_fraction,
                           relabel, sample_channel, state_fractions)
from icrbc.dof import scheme_gammas, theorem1_distribution
from icrbc.errors import UnsupportedError

# Synergistic 3-user patterns grouped as (phase 1, phase 2). The 36
# sequences are every phase-1 entry paired with every phase-2 entry.
GROUPED_PATTERNS = {
    ("NDD,DND,DDN", "PPN,PNP"),
    ("NDD,DDN,DND", "PNP,PPN"),
    ("DND,NDD,DDN", "PPN,NPP"),
    ("DND,DDN,NDD", "NPP,PPN"),
    ("DDN,DND,NDD", "NPP,PNP"),
    ("DDN,NDD,DND", "PNP,NPP"),
}


def test_state_ordering():
    assert CsitState.PERFECT < CsitState.DELAYED < CsitState.NONE
    assert sorted([CsitState.NONE, CsitState.PERFECT, CsitState.DELAYED]) == list(CsitState)


def test_pattern_round_trip_and_validation():
    text = "NDD,DND,DDN,PPN,PNP"
    p = CsitPattern.parse(text)
    assert str(p) == text and p.K == 3 and p.n == 5
    assert CsitPattern.parse("(NDD, DND)").n == 2
    with pytest.raises(ValueError):
        CsitPattern.parse("NDX")
    with pytest.raises(ValueError):
        CsitPattern.parse("ND,DDN")


def test_sample_channel_is_reproducible():
    a, b = sample_channel(3, 5, 42), sample_channel(3, 5, 42)
    np.testing.assert_array_equal(a.H, b.H)
    assert not np.array_equal(a.H, sample_channel(3, 5, 43).H)
    with pytest.raises(ValueError):
        sample_channel(0, 5, 1)
    with pytest.raises(ValueError):
        sample_channel(3, 0, 1)


def test_channel_cells_do_not_depend_on_grid_size():
    small, big = sample_channel(3, 5, 7), sample_channel(3, 9, 7)
    np.testing.assert_array_equal(small.H, big.H[:5])


def test_channel_entries_have_unit_power():
    H = sample_channel(10, 1000, 2024).H
    assert H.size == 10**5
    assert abs(np.mean(np.abs(H) ** 2) - 1.0) < 0.02
    assert abs(np.mean(H)) < 0.01


def test_stacked_rows_are_full_rank():
    for seed in range(1000):
        H = sample_channel(3, 1, seed).H[0]
        assert linalg.rank(H) == 3


def test_channel_csv(tmp_path):
    ch = sample_channel(2, 3, 1)
    path = tmp_path / "h.csv"
    ch.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "slot,rx,tx,re,im"
    assert len(lines) == 1 + 3 * 2 * 2
    slot, rx, tx, re, im = lines[1].split(",")
    assert (slot, rx, tx) == ("1", "1", "1")
    assert complex(float(re), float(im)) == pytest.approx(ch.H[0, 0, 0], abs=1e-11)


def test_state_fractions():
    assert state_fractions(CsitPattern.parse("PP,PP")) == (1, 0, 0)
    assert state_fractions(CsitPattern.parse("NDD,DND,DDN,PPN,PNP")) == (F(4, 15), F(6, 15), F(5, 15))


def test_per_user_fraction():
    p = icr_pattern(3)
    assert [per_user_perfect_fraction(p, i) for i in range(3)] == [F(2, 5), F(1, 5), F(1, 5)]
    assert per_user_perfect_fraction(CsitPattern.parse("PD,PN"), 0) == 1
    with pytest.raises(ValueError):
        per_user_perfect_fraction(p, 3)


def test_icr_pattern_small_cases():
    assert str(icr_pattern(3)) == "NDD,DND,DDN,PPN,PNP"
    assert str(icr_pattern(2)) == "ND,DN,PN"
    assert state_fractions(icr_pattern(2)) == (F(1, 6), F(1, 3), F(1, 2))
    with pytest.raises(ValueError):
        icr_pattern(1)


@pytest.mark.parametrize("K", range(2, 17))
def test_icr_pattern_structure(K):
    p = icr_pattern(K)
    assert p.n == 2 * K - 1
    assert state_fractions(p) == theorem1_distribution(K)
    counts = p.counts()
    assert counts[CsitState.PERFECT] == (K - 1) ** 2
    assert counts[CsitState.DELAYED] == K * (K - 1)
    assert counts[CsitState.NONE] == 2 * K - 1
    for t in range(K):
        assert len(p.users_in(t, CsitState.NONE)) == 1
        assert not p.users_in(t, CsitState.PERFECT)
    for t in range(K, 2 * K - 1):
        assert len(p.users_in(t, CsitState.NONE)) == 1
        assert len(p.users_in(t, CsitState.PERFECT)) == K - 1
    assert all(p.state(0, t) is CsitState.PERFECT for t in range(K, 2 * K - 1))


@given(st.lists(st.text("PDN", min_size=4, max_size=4), min_size=1, max_size=8))
def test_mean_user_perfect_fraction_equals_lambda_p(slots):
    p = CsitPattern.parse(",".join(slots))
    gammas = [per_user_perfect_fraction(p, i) for i in range(p.K)]
    assert sum(gammas) / p.K == state_fractions(p)[0]
    assert sum(state_fractions(p)) == 1


def test_enumeration_matches_grouped_fixture():
    patterns = enumerate_synergistic_patterns(3)
    assert len(patterns) == 36
    assert len({str(p) for p in patterns}) == 36
    first, second = group_patterns(patterns)
    assert first == {p1 for p1, _ in GROUPED_PATTERNS}
    assert second == {p2 for _, p2 in GROUPED_PATTERNS}
    expected = {f"{p1},{p2}" for p1, p2 in itertools.product(first, second)}
    assert {str(p) for p in patterns} == expected
    assert "NDD,DND,DDN,PPN,PNP" in expected
    for p in patterns:
        assert state_fractions(p) == (F(4, 15), F(6, 15), F(5, 15))


def test_grouped_rows_are_relabelings_of_the_scheme_pattern():
    base = icr_pattern(3)
    rows = set()
    for perm in itertools.permutations(range(3)):
        text = str(relabel(base, perm)).split(",")
        rows.add((",".join(text[:3]), ",".join(text[3:])))
    assert rows == GROUPED_PATTERNS


def test_enumeration_rejects_other_sizes():
    with pytest.raises(UnsupportedError):
        enumerate_synergistic_patterns(4)


@pytest.mark.parametrize("K", range(2, 12))
def test_scheme_gammas_are_the_pattern_fractions(K):
    p = icr_pattern(K)
    assert tuple(per_user_perfect_fraction(p, i) for i in range(K)) == scheme_gammas(K)
