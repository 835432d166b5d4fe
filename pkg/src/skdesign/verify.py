"""Oracle verification sweeps, shared by the CLI and the acceptance tests.

Two suites:

* theorem1: over an even-channel grid, every minimizer of the grouped-pair
  parameter count under the feasibility constraint M*N <= C must satisfy
  M*N = C exactly.  Exact integer arithmetic, zero tolerance.

* infofield: over all kernel sequences up to a length cap at small channel
  counts, the calculus triple must equal the dependency-graph reachability
  triple exactly.  The graph uses the deterministic interleave shuffle; if
  that misses the calculus value at eight channels or fewer, the full
  permutation space is searched before declaring a disagreement.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import oracles
from .infofield import field_of
from .kernels import Kernel, Kind, LayerSpec
from .search import SK_ALPHABET, sequence_name

INFOFIELD_CHANNELS = (4, 8, 12, 16)


@dataclass
class VerifyResult:
    name: str
    checked: int = 0
    counterexamples: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.counterexamples

    def render(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        head = f"{self.name}: {status} ({self.checked} cases)"
        if self.passed:
            return head
        return head + "".join(f"\n  counterexample: {c}" for c in self.counterexamples)

    def as_doc(self) -> dict:
        return {
            "passed": self.passed,
            "checked": self.checked,
            "counterexamples": list(self.counterexamples),
        }


def verify_theorem1(c_max: int = 64) -> VerifyResult:
    """Exhaustive check that grouped-pair minimizers use M*N = C."""
    result = VerifyResult("theorem1")
    for c in range(4, c_max + 1, 2):
        for f in (c, 2 * c, 4 * c):
            grid = oracles.divisor_grid_min("gc+pwg", c, f, constraint="le")
            result.checked += 1
            bad = [(m, n) for m, n in grid.minimizers if m * n != c]
            if bad:
                result.counterexamples.append(
                    f"C={c}, F={f}: minimizers {bad} have M*N != C "
                    f"(min value {grid.value})"
                )
    return result


def _group_choices(kind: Kind, c: int) -> tuple[int, ...]:
    if kind is Kind.GROUP:
        return tuple(d for d in range(2, c) if c % d == 0)
    if kind is Kind.POINTWISE_GROUP:
        return tuple(d for d in range(2, c + 1) if c % d == 0)
    return (1,)


def _constant_width_layers(
    seq: tuple[Kind, ...], groups: tuple[int, ...], c: int, spatial: int = 3
) -> list[LayerSpec]:
    out = []
    for kind, g in zip(seq, groups):
        k = 1 if kind in (Kind.POINTWISE, Kind.POINTWISE_GROUP) else spatial
        out.append(LayerSpec(Kernel(kind, spatial=k, groups=g), c, c))
    return out


def verify_infofield(c_max: int = 16, len_max: int = 4) -> VerifyResult:
    """Calculus triple vs dependency-graph triple, all sequences and groups."""
    result = VerifyResult("infofield")
    channels = [c for c in INFOFIELD_CHANNELS if c <= c_max]
    for c in channels:
        for length in range(1, len_max + 1):
            for seq in itertools.product(SK_ALPHABET, repeat=length):
                choice_sets = [_group_choices(kind, c) for kind in seq]
                for groups in itertools.product(*choice_sets):
                    layers = _constant_width_layers(seq, groups, c)
                    calc = field_of(layers, c)
                    want = (
                        calc.spatial_x,
                        calc.spatial_y,
                        int(calc.coverage * c),
                    )
                    got = oracles.reachable_channel_triple(layers)
                    result.checked += 1
                    if got == want:
                        continue
                    if c <= oracles.FULL_PERMUTATION_LIMIT:
                        best = oracles.best_permutation_channel_count(layers)
                        if (got[0], got[1], best) == want:
                            continue
                        got = (got[0], got[1], best)
                    result.counterexamples.append(
                        f"C={c}, {sequence_name(seq)} groups={groups}: "
                        f"calculus {want}, graph {got}"
                    )
    return result
