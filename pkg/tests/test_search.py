import json
import re
from dataclasses import asdict, replace

import pytest

from skdesign.infofield import VerdictKind
from skdesign.kernels import Kind, ValidationError
from skdesign.search import (
    SK_ALPHABET,
    DesignCandidate,
    SearchConfig,
    concretize,
    enumerate_sequences,
    evaluate_candidate,
    identify_known,
    is_repeated,
    raw_sequence_count,
    run_search,
    sequence_chars,
    sequence_name,
    _evaluate_sequence,
)

GC, DW, PW, PWG = Kind.GROUP, Kind.DEPTHWISE, Kind.POINTWISE, Kind.POINTWISE_GROUP

REPEAT_RE = re.compile(r"(.+?)\1+")


@pytest.fixture(scope="module")
def default_result():
    return run_search(SearchConfig())


def _all_sequences(max_len):
    import itertools

    for n in range(1, max_len + 1):
        yield from itertools.product(SK_ALPHABET, repeat=n)


def test_is_repeated_examples():
    assert is_repeated((GC,) * 6)
    assert is_repeated((GC, DW) * 3)
    assert is_repeated((GC, DW, PW, GC, DW, PW))
    assert not is_repeated((GC, DW, PW, GC, DW))
    assert not is_repeated((GC,))


def test_is_repeated_agrees_with_regex_on_all_5460():
    total = checked = removed = 0
    for seq in _all_sequences(6):
        total += 1
        by_tiling = is_repeated(seq)
        by_regex = REPEAT_RE.fullmatch(sequence_chars(seq)) is not None
        assert by_tiling == by_regex, seq
        checked += 1
        removed += by_tiling
    assert total == 5460
    assert checked == 5460
    assert removed == 104


def test_enumerate_sequence_counts():
    assert raw_sequence_count(6) == 5460
    short = list(enumerate_sequences(SearchConfig(max_length=1)))
    assert len(short) == 4
    two = list(enumerate_sequences(SearchConfig(max_length=2)))
    assert len(two) == 4 + 12  # the four doubled symbols are removed


def test_concretize_group_enumeration():
    cfg = SearchConfig(reference_channels=8, reference_out_channels=8)
    cands = list(concretize((GC, PWG), cfg))
    assert len(cands) == 6
    assert {(c.groups[0], c.groups[1]) for c in cands} == {
        (m, n) for m in (2, 4) for n in (2, 4, 8)
    }


def test_concretize_bottleneck_variants_need_three_kernels():
    cfg = SearchConfig()
    cands = list(concretize((PW, DW, PW), cfg))
    assert len(cands) == 2
    plain, bneck = cands
    assert not plain.bottleneck and bneck.bottleneck
    assert bneck.channel_plan == ((64, 16), (16, 16), (16, 64))
    # two-kernel sequences only get the plain plan
    assert all(not c.bottleneck for c in concretize((DW, PW), cfg))


def test_concretize_depthwise_pair_single_candidate():
    cfg = SearchConfig()
    cands = list(concretize((DW, DW), cfg))
    assert len(cands) == 1
    v = evaluate_candidate(cands[0], cfg).verdict
    assert v.kind is VerdictKind.SPATIAL_MISMATCH


def test_fused_evaluation_matches_naive_path():
    cfg = SearchConfig(reference_channels=8, reference_out_channels=8, max_length=3)
    for seq in _all_sequences(3):
        valid_fast = {
            (c.groups, c.bottleneck)
            for c in _evaluate_sequence(seq, cfg)[0]
        }
        valid_naive = set()
        for cand in concretize(seq, cfg):
            if evaluate_candidate(cand, cfg).verdict.is_valid:
                valid_naive.add((cand.groups, cand.bottleneck))
        assert valid_fast == valid_naive, seq


def test_fused_counts_tie_out():
    cfg = SearchConfig(reference_channels=16, reference_out_channels=16)
    for seq in [(GC, PWG), (PWG, DW, PWG), (PW, PW, PW), (GC, PWG, PWG)]:
        valid, counts, enumerated = _evaluate_sequence(seq, cfg)
        assert sum(counts.values()) == enumerated
        assert counts.get("valid", 0) == len(valid)


def test_default_search_finds_the_four_families(default_result):
    result = default_result
    names = [(f.name, f.bottleneck) for f in result.families]
    assert names == [
        ("dw+pw", False),
        ("gc+pwg", False),
        ("pw+dw+pw", True),
        ("pwg+dw+pwg", True),
    ]


def test_search_audit_counts_are_frozen_and_monotone(default_result):
    result = default_result
    counts = dict(result.stage_counts)
    assert counts["sequences_raw"] == 5460
    assert counts["sequences_after_composition"] == 5356
    assert counts["candidates_enumerated"] == 5_523_742
    assert counts["candidates_valid"] == 9602
    assert counts["families"] == 31
    assert counts["families_after_domination"] == 4
    assert counts["sequences_raw"] >= counts["sequences_after_composition"]
    assert counts["candidates_enumerated"] >= counts["candidates_valid"]
    assert counts["families"] >= counts["families_after_domination"]
    # verdict attribution covers every enumerated candidate exactly
    assert sum(n for _, n in result.verdict_counts) == counts["candidates_enumerated"]


def test_search_without_domination_keeps_four_with_valid_audits():
    result = run_search(SearchConfig(enable_domination_filter=False))
    names = set(result.family_names())
    assert {"dw+pw", "gc+pwg", "pw+dw+pw", "pwg+dw+pwg"} <= names
    cfg = result.config
    for fam in result.families:
        for w in fam.witnesses:
            v = evaluate_candidate(w, cfg).verdict
            assert v.is_valid, (fam.name, w.describe(), v)


def test_families_differing_only_in_groups_collapse(default_result):
    result = default_result
    gcpwg = next(f for f in result.families if f.name == "gc+pwg")
    assignments = {w.groups for w in gcpwg.witnesses}
    assert len(assignments) > 1
    assert len({w.sequence for w in gcpwg.witnesses}) <= 2  # both orders collapse


def test_search_is_deterministic_and_parallel_safe():
    cfg = SearchConfig(max_length=4)
    a = run_search(cfg)
    b = run_search(cfg)
    c = run_search(replace(cfg, jobs=2))

    def doc(res):
        return json.dumps(
            {
                "families": [
                    (f.name, f.bottleneck, [w.describe() for w in f.witnesses])
                    for f in res.families
                ],
                "counts": list(res.stage_counts),
                "verdicts": list(res.verdict_counts),
                "removed": [(r.name, r.rule) for r in res.removed],
            },
            sort_keys=True,
        )

    assert doc(a) == doc(b)
    assert doc(a) == doc(c)


def test_max_len_two_keeps_only_pairs():
    result = run_search(SearchConfig(max_length=2))
    assert result.family_names() == ("dw+pw", "gc+pwg")


def test_gc_pwg_dw_never_survives_with_all_kernels_contributing():
    cfg = SearchConfig()
    valid, counts, _ = _evaluate_sequence((GC, PWG, DW), cfg)
    assert valid == []
    assert counts.get("valid", 0) == 0
    assert counts.get("inferior-early-full", 0) > 0


def test_identify_known(default_result):
    result = default_result
    fams = {f.name: f for f in result.families}
    assert identify_known(fams["pwg+dw+pwg"], (4, None, 4)) == {"ShuffleNet"}
    assert identify_known(fams["pwg+dw+pwg"], (8, None, 2)) == frozenset()
    assert identify_known(fams["pw+dw+pw"]) == {"ResNeXt-extreme"}
    assert identify_known(fams["dw+pw"]) == {"MobileNet", "Xception"}
    assert identify_known(fams["gc+pwg"], (2, 2)) == frozenset()
    assert identify_known(fams["gc+pwg"], (64, 1), input_channels=64) == {
        "MobileNet",
        "Xception",
    }


def test_config_validation():
    with pytest.raises(ValidationError):
        SearchConfig(max_length=0)
    with pytest.raises(ValidationError):
        SearchConfig(reference_channels=0)


def test_four_families_survive_at_another_divisor_rich_config():
    result = run_search(
        SearchConfig(reference_channels=32, reference_out_channels=32, max_length=3)
    )
    assert {"dw+pw", "gc+pwg", "pw+dw+pw", "pwg+dw+pwg"} <= set(result.family_names())
