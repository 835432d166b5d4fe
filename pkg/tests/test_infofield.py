from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from skdesign.infofield import (
    FieldVerdict,
    InfoField,
    VerdictKind,
    classify,
    field_of,
    propagate,
    trace,
)
from skdesign.kernels import (
    Kind,
    LayerSpec,
    ValidationError,
    depthwise,
    group_conv,
    pointwise,
    pointwise_group,
    standard,
)

REF3 = InfoField.reference(3)


def _dw(c):
    return LayerSpec(depthwise(3), c, c)


def _pw(c, f):
    return LayerSpec(pointwise(), c, f)


def test_propagate_standard_reaches_full_field():
    start = InfoField.initial(64)
    out = propagate(start, LayerSpec(standard(3), 64, 64), 64)
    assert out == InfoField(3, 3, Fraction(1))


def test_propagate_depthwise_keeps_one_channel():
    out = propagate(InfoField.initial(64), _dw(64), 64)
    assert out == InfoField(3, 3, Fraction(1, 64))


def test_propagate_grouped_chain_toy():
    # C=8: GC(4) covers a quarter, PWG(2) multiplies coverage by 4
    f = InfoField.initial(8)
    f = propagate(f, LayerSpec(group_conv(4), 8, 8), 8)
    assert f == InfoField(3, 3, Fraction(1, 4))
    f = propagate(f, LayerSpec(pointwise_group(2), 8, 8), 8)
    assert f == InfoField(3, 3, Fraction(1))


def test_field_of_examples():
    c = 64
    assert field_of([_dw(c), _pw(c, c)], c) == InfoField(3, 3, Fraction(1))
    k = c // 4
    bneck = [_pw(c, k), LayerSpec(depthwise(3), k, k), _pw(k, c)]
    assert field_of(bneck, c) == InfoField(3, 3, Fraction(1))
    assert field_of([_dw(c)], c) == InfoField(3, 3, Fraction(1, c))


def test_field_of_channel_mismatch_names_boundary():
    with pytest.raises(ValidationError, match="boundary 0"):
        field_of([_pw(64, 32), _pw(64, 64)], 64)


def test_classify_pointwise_pair_no_growth():
    v = classify([_pw(64, 64), _pw(64, 64)], 64, REF3)
    assert v.kind is VerdictKind.INFERIOR_NO_GROWTH
    assert v.at_index == 1


def test_classify_early_full_before_depthwise():
    seq = [
        LayerSpec(group_conv(8), 64, 64),
        LayerSpec(pointwise_group(8), 64, 64),
        _dw(64),
    ]
    v = classify(seq, 64, REF3)
    assert v.kind is VerdictKind.INFERIOR_EARLY_FULL
    assert v.at_index == 1


def test_classify_insufficient_coverage():
    seq = [LayerSpec(group_conv(4), 8, 8), LayerSpec(pointwise_group(4), 8, 8)]
    v = classify(seq, 8, REF3)
    assert v.kind is VerdictKind.INSUFFICIENT_FIELD
    assert v.final.coverage == Fraction(1, 2)


def test_classify_bottleneck_sandwich_survives_plain_dies():
    c = 64
    k = 16
    bneck = [_pw(c, k), LayerSpec(depthwise(3), k, k), _pw(k, c)]
    assert classify(bneck, c, REF3).is_valid
    plain = [_pw(c, c), _dw(c), _pw(c, c)]
    v = classify(plain, c, REF3)
    assert v.kind is VerdictKind.INFERIOR_NO_GROWTH
    assert v.at_index == 2


def test_classify_spatial_overshoot():
    v = classify([_dw(64), _dw(64)], 64, REF3)
    assert v.kind is VerdictKind.SPATIAL_MISMATCH


def test_classify_spatial_undershoot_is_insufficient():
    v = classify([_pw(64, 64)], 64, REF3)
    assert v.kind is VerdictKind.INSUFFICIENT_FIELD
    assert v.final == InfoField(1, 1, Fraction(1))


def test_trace_lists_every_step():
    c = 8
    seq = [LayerSpec(group_conv(4), c, c), LayerSpec(pointwise_group(2), c, c)]
    steps = trace(seq, c)
    assert len(steps) == 3
    assert steps[0] == InfoField.initial(c)
    assert steps[-1] == InfoField(3, 3, Fraction(1))


def test_coverage_is_exact_rational():
    f = propagate(InfoField.initial(12), LayerSpec(pointwise_group(3), 12, 12), 12)
    assert isinstance(f.coverage, Fraction)
    assert f.coverage == Fraction(1, 3)


@st.composite
def _field_and_layer(draw):
    original = draw(st.sampled_from([4, 8, 12, 16, 24, 32]))
    num = draw(st.integers(min_value=1, max_value=original))
    fld = InfoField(
        draw(st.integers(min_value=1, max_value=5)),
        draw(st.integers(min_value=1, max_value=5)),
        Fraction(num, original),
    )
    c = draw(st.sampled_from([4, 8, 12, 16, 24, 32]))
    kind = draw(st.sampled_from(list(Kind)))
    if kind is Kind.DEPTHWISE:
        layer = LayerSpec(depthwise(3), c, c)
    elif kind is Kind.STANDARD:
        layer = LayerSpec(standard(3), c, c)
    elif kind is Kind.POINTWISE:
        layer = LayerSpec(pointwise(), c, c)
    elif kind is Kind.GROUP:
        g = draw(st.sampled_from([d for d in range(2, c) if c % d == 0]))
        layer = LayerSpec(group_conv(g), c, c)
    else:
        g = draw(st.sampled_from([d for d in range(2, c + 1) if c % d == 0]))
        layer = LayerSpec(pointwise_group(g), c, c)
    return fld, layer, original


@given(_field_and_layer())
def test_propagate_never_shrinks_the_field(case):
    fld, layer, original = case
    out = propagate(fld, layer, original)
    assert out.spatial_x >= fld.spatial_x
    assert out.spatial_y >= fld.spatial_y
    assert out.coverage >= fld.coverage
