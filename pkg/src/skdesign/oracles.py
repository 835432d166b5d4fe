"""Independent brute-force verifiers for the calculus and the closed forms.

Two oracles live here and deliberately share no machinery with the modules
they check:

* a dependency-graph information-field oracle that wires up every
  activation of a small network literally, inserts interleave channel
  shuffles between layers, and measures the set of input activations one
  central output activation can reach;

* an exhaustive divisor-grid optimizer that evaluates exact integer
  parameter counts at every feasible group-number pair and returns all
  minimizers.

Both are desk-scale by construction and refuse oversized inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence, Union

from .kernels import Kind, LayerSpec, TensorShape, ValidationError

MAX_ORACLE_CHANNELS = 16
MAX_ORACLE_SPATIAL = 9
MAX_GRID_CHANNELS = 4096
FULL_PERMUTATION_LIMIT = 8


def interleave(n: int, groups: int) -> tuple[int, ...]:
    """Group-transpose channel shuffle: position j holds old channel perm[j].

    With `groups` rows of n/groups columns, reading the matrix column-wise
    produces the classic channel-shuffle order.  Identity when groups <= 1
    or groups does not tile n.
    """
    if groups <= 1 or n % groups:
        return tuple(range(n))
    cols = n // groups
    return tuple(r * cols + c for c in range(cols) for r in range(groups))


def _input_groups(layer: LayerSpec) -> list[list[int]]:
    """For each output channel, the 0-based input channels it reads."""
    c, f, g = layer.in_channels, layer.out_channels, layer.kernel.groups
    kind = layer.kernel.kind
    if kind in (Kind.STANDARD, Kind.POINTWISE):
        full = list(range(c))
        return [full for _ in range(f)]
    if kind is Kind.DEPTHWISE:
        return [[i] for i in range(f)]
    # grouped kinds: output channel j belongs to group floor(j * g / f) and
    # reads the matching slice of c/g input channels
    size = c // g
    out: list[list[int]] = []
    for j in range(f):
        grp = j * g // f
        out.append(list(range(grp * size, (grp + 1) * size)))
    return out


def _shuffle_group(layer: LayerSpec) -> int:
    """Group count used for the interleave shuffle after a layer."""
    if layer.kernel.kind is Kind.DEPTHWISE:
        return layer.out_channels
    return layer.kernel.groups


def _window(k: int) -> range:
    return range(-(k // 2), k - k // 2)


def _check_caps(design: Sequence[LayerSpec]) -> None:
    for layer in design:
        if max(layer.in_channels, layer.out_channels) > MAX_ORACLE_CHANNELS:
            raise ValidationError(
                f"oracle caps exceeded: channels > {MAX_ORACLE_CHANNELS} in {layer}"
            )
        if layer.kernel.spatial > MAX_ORACLE_SPATIAL:
            raise ValidationError(
                f"oracle caps exceeded: spatial > {MAX_ORACLE_SPATIAL} in {layer}"
            )


def _backward_channel_sets(
    design: Sequence[LayerSpec], start: frozenset[int], permutations: Sequence[Sequence[int]]
) -> frozenset[int]:
    """Original channels reachable backward from `start` output channels.

    permutations[i] is the shuffle applied to the input tensor of layer i
    (permutations[0] is unused and identity by convention).
    """
    current = start
    for i in range(len(design) - 1, -1, -1):
        reads = _input_groups(design[i])
        inputs = set()
        for ch in current:
            inputs.update(reads[ch])
        if i > 0:
            perm = permutations[i]
            inputs = {perm[j] for j in inputs}
        current = frozenset(inputs)
    return current


def _interleave_permutations(design: Sequence[LayerSpec]) -> list[tuple[int, ...]]:
    perms: list[tuple[int, ...]] = [tuple(range(design[0].in_channels))]
    for i in range(1, len(design)):
        perms.append(interleave(design[i].in_channels, _shuffle_group(design[i - 1])))
    return perms


def graph_information_field(
    design: Sequence[LayerSpec], input_shape: TensorShape
) -> tuple[int, int, int]:
    """Literal reachability on the activation dependency graph.

    Builds the node set (channel, x, y) layer by layer with interleave
    shuffles between layers, walks backward from one central output
    activation, and returns the bounding-box spatial extents and the number
    of distinct original channels reached.  The input spatial size must
    cover the full field so no window is clipped at a border.
    """
    if not design:
        raise ValidationError("empty design")
    _check_caps(design)
    if design[0].in_channels != input_shape.channels:
        raise ValidationError("input shape does not match the first layer")
    if max(input_shape.height, input_shape.width) > MAX_ORACLE_SPATIAL:
        raise ValidationError(f"oracle caps exceeded: spatial > {MAX_ORACLE_SPATIAL}")
    extent = 1 + sum(layer.kernel.spatial - 1 for layer in design)
    if input_shape.height < extent or input_shape.width < extent:
        raise ValidationError(
            f"input spatial size {input_shape.height}x{input_shape.width} smaller "
            f"than the total field extent {extent}"
        )
    perms = _interleave_permutations(design)
    # central output activation of channel 0; coordinates are absolute
    cx = input_shape.height // 2
    cy = input_shape.width // 2
    nodes: set[tuple[int, int, int]] = {(0, cx, cy)}
    for i in range(len(design) - 1, -1, -1):
        layer = design[i]
        reads = _input_groups(layer)
        win = _window(layer.kernel.spatial)
        prev: set[tuple[int, int, int]] = set()
        for ch, x, y in nodes:
            for c in reads[ch]:
                for dx in win:
                    for dy in win:
                        prev.add((c, x + dx, y + dy))
        if i > 0:
            perm = perms[i]
            prev = {(perm[c], x, y) for c, x, y in prev}
        nodes = prev
    xs = [x for _, x, _ in nodes]
    ys = [y for _, _, y in nodes]
    channels = {c for c, _, _ in nodes}
    return (max(xs) - min(xs) + 1, max(ys) - min(ys) + 1, len(channels))


def reachable_channel_triple(design: Sequence[LayerSpec]) -> tuple[int, int, int]:
    """Factored form of the graph oracle.

    For stride-1 layers with uniform windows the reachable node set is
    always a product of one channel set and one spatial box, so channels
    and extents can be tracked separately.  Agreement with the node-level
    walk is asserted in the test suite.
    """
    if not design:
        raise ValidationError("empty design")
    _check_caps(design)
    perms = _interleave_permutations(design)
    channels = _backward_channel_sets(design, frozenset([0]), perms)
    extent = 1 + sum(layer.kernel.spatial - 1 for layer in design)
    return (extent, extent, len(channels))


def best_permutation_channel_count(design: Sequence[LayerSpec]) -> int:
    """Maximum reachable original-channel count over all inter-layer shuffles.

    A permutation gap can relabel the backward set into any subset of equal
    size, so the exhaustive search over permutations collapses to a search
    over equal-size channel subsets per gap.  Exact, and only allowed at
    small channel counts.
    """
    if not design:
        raise ValidationError("empty design")
    for layer in design:
        if max(layer.in_channels, layer.out_channels) > FULL_PERMUTATION_LIMIT:
            raise ValidationError(
                f"full permutation search capped at {FULL_PERMUTATION_LIMIT} channels"
            )
    reads_per_layer = [_input_groups(layer) for layer in design]

    @lru_cache(maxsize=None)
    def best(layer_idx: int, mask: int) -> int:
        if layer_idx < 0:
            return bin(mask).count("1")
        reads = reads_per_layer[layer_idx]
        inputs = 0
        ch = mask
        pos = 0
        while ch:
            if ch & 1:
                for c in reads[pos]:
                    inputs |= 1 << c
            ch >>= 1
            pos += 1
        if layer_idx == 0:
            return bin(inputs).count("1")
        # free permutation before this layer: any equal-size subset of the
        # previous layer's outputs is reachable
        size = bin(inputs).count("1")
        n = design[layer_idx - 1].out_channels
        result = 0
        for subset in _subsets_of_size(n, size):
            result = max(result, best(layer_idx - 1, subset))
        return result

    return best(len(design) - 1, 1)


@lru_cache(maxsize=None)
def _subsets_of_size(n: int, size: int) -> tuple[int, ...]:
    from itertools import combinations

    return tuple(
        sum(1 << i for i in combo) for combo in combinations(range(n), size)
    )


@dataclass(frozen=True)
class GridMinResult:
    minimizers: tuple[tuple[int, int], ...]
    value: int
    evaluated: int


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def gc_pwg_params(c: int, f: int, m: int, n: int) -> int:
    """9*C^2/M + C*F/N: grouped spatial kernel at width C, grouped 1x1 to F."""
    return 9 * c * c // m + c * f // n


def pwg_dw_pwg_params(c: int, f: int, m: int, n: int) -> int:
    """(C/M)*K + 9K + (K/N)*F with bottleneck width K = F/4."""
    k = f // 4
    return (c // m) * k + 9 * k + (k // n) * f


def feasible_pairs(
    family: str, c: int, f: int, constraint: str = "le"
) -> list[tuple[int, int]]:
    """All (M, N) group pairs legal for a family at channel counts (C, F).

    constraint "le" keeps pairs with M*N <= bound (the information-field
    feasibility bound: C for gc+pwg, K for pwg+dw+pwg); "eq" keeps only
    pairs meeting it exactly; "none" applies divisibility only.
    """
    if family == "gc+pwg":
        ms = [d for d in _divisors(c) if 2 <= d <= c - 1]
        ns = [d for d in _divisors(c) if d >= 2]
        bound = c
    elif family == "pwg+dw+pwg":
        if f % 4:
            raise ValidationError(f"bottleneck width requires 4 | F, got F={f}")
        k = f // 4
        ms = [d for d in _divisors(c) if d >= 2]
        ns = [d for d in _divisors(k) if d >= 2]
        bound = k
    else:
        raise ValidationError(f"family {family!r} has no group freedom")
    pairs = []
    for m in ms:
        for n in ns:
            if constraint == "le" and m * n > bound:
                continue
            if constraint == "eq" and m * n != bound:
                continue
            pairs.append((m, n))
    return pairs


Objective = Union[str, Callable[[int, int, int, int], int]]


def divisor_grid_min(
    objective: Objective,
    c: int,
    f: int,
    constraint: str = "le",
    pairs: Iterable[tuple[int, int]] | None = None,
) -> GridMinResult:
    """Exhaustive minimum of an integer parameter formula over group pairs.

    `objective` is a family name ("gc+pwg" or "pwg+dw+pwg") or a callable
    (C, F, M, N) -> exact integer count.  Returns every minimizer.
    """
    if max(c, f) > MAX_GRID_CHANNELS:
        raise ValidationError(f"grid capped at {MAX_GRID_CHANNELS} channels")
    if isinstance(objective, str):
        if objective not in ("gc+pwg", "pwg+dw+pwg"):
            raise ValidationError(f"unknown objective {objective!r}")
        fn = gc_pwg_params if objective == "gc+pwg" else pwg_dw_pwg_params
        if pairs is None:
            pairs = feasible_pairs(objective, c, f, constraint)
    else:
        fn = objective
        if pairs is None:
            raise ValidationError("callable objectives need an explicit pair set")
    pairs = list(pairs)
    if not pairs:
        raise ValidationError(f"no feasible (M, N) pairs for C={c}, F={f}")
    values = [(fn(c, f, m, n), (m, n)) for m, n in pairs]
    best = min(v for v, _ in values)
    mins = tuple(sorted(pair for v, pair in values if v == best))
    return GridMinResult(minimizers=mins, value=best, evaluated=len(pairs))
