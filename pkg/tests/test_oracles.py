import itertools

import pytest

from skdesign.kernels import (
    Kind,
    LayerSpec,
    TensorShape,
    ValidationError,
    depthwise,
    group_conv,
    pointwise,
    pointwise_group,
    standard,
)
from skdesign.oracles import (
    best_permutation_channel_count,
    divisor_grid_min,
    feasible_pairs,
    gc_pwg_params,
    graph_information_field,
    interleave,
    pwg_dw_pwg_params,
    reachable_channel_triple,
)

SHAPE8 = TensorShape(8, 9, 9)


def test_interleave_is_a_group_transpose():
    assert interleave(8, 4) == (0, 2, 4, 6, 1, 3, 5, 7)
    assert interleave(8, 1) == tuple(range(8))
    assert sorted(interleave(12, 3)) == list(range(12))


def test_graph_field_standard():
    assert graph_information_field([LayerSpec(standard(3), 8, 8)], SHAPE8) == (3, 3, 8)


def test_graph_field_grouped_pair_reaches_full():
    des = [LayerSpec(group_conv(4), 8, 8), LayerSpec(pointwise_group(2), 8, 8)]
    assert graph_information_field(des, SHAPE8) == (3, 3, 8)


def test_graph_field_depthwise_single_channel():
    assert graph_information_field([LayerSpec(depthwise(3), 8, 8)], SHAPE8) == (3, 3, 1)


def test_graph_field_refuses_oversize():
    with pytest.raises(ValidationError):
        graph_information_field([LayerSpec(standard(3), 32, 32)], TensorShape(32, 9, 9))
    with pytest.raises(ValidationError):
        graph_information_field(
            [LayerSpec(depthwise(3), 8, 8)] * 5, TensorShape(8, 9, 9)
        )  # field extent 11 exceeds the 9x9 input


def test_factored_oracle_matches_node_level_walk():
    kinds = (Kind.GROUP, Kind.DEPTHWISE, Kind.POINTWISE, Kind.POINTWISE_GROUP)
    checked = 0
    for c in (4, 8):
        shape = TensorShape(c, 9, 9)
        for length in (1, 2, 3):
            for seq in itertools.product(kinds, repeat=length):
                choice_sets = []
                for kind in seq:
                    if kind is Kind.GROUP:
                        choice_sets.append([d for d in range(2, c) if c % d == 0])
                    elif kind is Kind.POINTWISE_GROUP:
                        choice_sets.append([d for d in range(2, c + 1) if c % d == 0])
                    else:
                        choice_sets.append([1])
                for groups in itertools.product(*choice_sets):
                    layers = []
                    for kind, g in zip(seq, groups):
                        k = 1 if kind in (Kind.POINTWISE, Kind.POINTWISE_GROUP) else 3
                        from skdesign.kernels import Kernel

                        layers.append(LayerSpec(Kernel(kind, spatial=k, groups=g), c, c))
                    assert reachable_channel_triple(layers) == graph_information_field(
                        layers, shape
                    )
                    checked += 1
    assert checked > 200


def test_best_permutation_never_below_interleave():
    des = [LayerSpec(pointwise_group(4), 8, 8), LayerSpec(pointwise_group(4), 8, 8)]
    inter = reachable_channel_triple(des)[2]
    best = best_permutation_channel_count(des)
    assert best >= inter
    assert best == 4  # 2 sources per output, 2 originals per source


def test_best_permutation_capped():
    with pytest.raises(ValidationError):
        best_permutation_channel_count([LayerSpec(pointwise_group(4), 16, 16)])


def test_grid_min_gc_pwg_at_8():
    res = divisor_grid_min("gc+pwg", 8, 8)
    assert res.minimizers == ((4, 2),)
    assert res.value == 176
    assert gc_pwg_params(8, 8, 2, 4) == 304  # the runner-up pair


def test_grid_min_product_condition_at_36():
    res = divisor_grid_min("gc+pwg", 36, 36)
    assert all(m * n == 36 for m, n in res.minimizers)


def test_grid_min_bottleneck_family():
    res = divisor_grid_min("pwg+dw+pwg", 64, 64, constraint="eq")
    assert res.minimizers == ((4, 4),)
    assert res.value == pwg_dw_pwg_params(64, 64, 4, 4) == 656


def test_grid_min_callable_objective():
    pairs = [(m, n) for m in (2, 4) for n in (2, 4)]
    res = divisor_grid_min(lambda c, f, m, n: m + n, 8, 8, pairs=pairs)
    assert res.minimizers == ((2, 2),)
    assert res.value == 4


def test_grid_min_empty_feasible_set():
    with pytest.raises(ValidationError):
        divisor_grid_min("gc+pwg", 5, 5)  # prime channel count has no groups
    with pytest.raises(ValidationError):
        divisor_grid_min("gc+pwg", 8192, 8192)  # above the grid cap


def test_feasible_pairs_obey_constraint_modes():
    le_pairs = feasible_pairs("gc+pwg", 16, 16, "le")
    assert all(m * n <= 16 for m, n in le_pairs)
    eq_pairs = feasible_pairs("gc+pwg", 16, 16, "eq")
    assert all(m * n == 16 for m, n in eq_pairs)
    assert set(eq_pairs) <= set(le_pairs)
    none_pairs = feasible_pairs("gc+pwg", 16, 16, "none")
    assert set(le_pairs) < set(none_pairs)
