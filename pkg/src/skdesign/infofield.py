"""Information-field calculus: what one output activation can see of the input.

The information field of an output activation after a sequence of layers is
the region of the ORIGINAL input tensor it depends on, written as a triple
(spatial_x, spatial_y, coverage) where coverage is the fraction of original
input channels reached.  Coverage is kept as an exact rational so equality
tests are exact.

Channel coverage is tracked under a best-case channel-permutation
assumption: between layers channels may be reordered so that grouped layers
combine disjoint dependency sets.  This reproduces the feasibility
constraint M*N <= C for a grouped spatial kernel followed by a grouped 1x1
kernel.  For depth > 2 the rule is an optimistic upper bound; the
dependency-graph oracle in `oracles` verifies achievability at small scale.

Propagation rules, with a = coverage * original_channels and C the layer's
input channel count:

    depthwise              a' = a           (spatial grows, channels don't mix)
    standard / pointwise   a' = min(original, C * a)
    grouped (GC, PWG)      a' = min(original, (C / groups) * a)

Spatial extents grow by k-1 per layer of spatial size k (stride 1 assumed
throughout the calculus).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .kernels import Kind, LayerSpec, ValidationError


@dataclass(frozen=True)
class InfoField:
    spatial_x: int
    spatial_y: int
    coverage: Fraction

    def __post_init__(self) -> None:
        if self.spatial_x < 1 or self.spatial_y < 1:
            raise ValidationError("spatial field extents must be >= 1")
        if not 0 < self.coverage <= 1:
            raise ValidationError(f"coverage must lie in (0, 1], got {self.coverage}")

    @staticmethod
    def initial(input_channels: int) -> "InfoField":
        """The field of a raw input activation: one point, one channel."""
        return InfoField(1, 1, Fraction(1, input_channels))

    @staticmethod
    def reference(spatial: int) -> "InfoField":
        """The field of one standard k x k convolution: (k, k, all channels)."""
        return InfoField(spatial, spatial, Fraction(1))

    def channels(self, original_channels: int) -> Fraction:
        """Absolute channel coverage with respect to the original input."""
        return self.coverage * original_channels

    def __str__(self) -> str:
        return f"({self.spatial_x}, {self.spatial_y}, {self.coverage})"


class VerdictKind(enum.Enum):
    VALID = "valid"
    INFERIOR_NO_GROWTH = "inferior-no-growth"
    INFERIOR_EARLY_FULL = "inferior-early-full"
    INSUFFICIENT_FIELD = "insufficient-field"
    SPATIAL_MISMATCH = "spatial-mismatch"


@dataclass(frozen=True)
class FieldVerdict:
    kind: VerdictKind
    at_index: Optional[int] = None
    final: Optional[InfoField] = None

    @property
    def is_valid(self) -> bool:
        return self.kind is VerdictKind.VALID

    def __str__(self) -> str:
        if self.at_index is not None:
            return f"{self.kind.value}@{self.at_index}"
        if self.final is not None:
            return f"{self.kind.value}{self.final}"
        return self.kind.value


def propagate(field: InfoField, layer: LayerSpec, original_channels: int) -> InfoField:
    """Push a field through one layer.  Total on valid inputs."""
    k = layer.kernel.spatial
    sx = field.spatial_x + (k - 1)
    sy = field.spatial_y + (k - 1)
    a = field.coverage * original_channels
    kind = layer.kernel.kind
    if kind is Kind.DEPTHWISE:
        a2 = a
    elif kind in (Kind.STANDARD, Kind.POINTWISE):
        a2 = min(Fraction(original_channels), layer.in_channels * a)
    else:  # GROUP, POINTWISE_GROUP
        a2 = min(
            Fraction(original_channels),
            Fraction(layer.in_channels, layer.kernel.groups) * a,
        )
    return InfoField(sx, sy, a2 / original_channels)


def _check_chaining(design: Sequence[LayerSpec]) -> None:
    for i in range(len(design) - 1):
        if design[i].out_channels != design[i + 1].in_channels:
            raise ValidationError(
                f"channel mismatch at layer boundary {i}: "
                f"{design[i].out_channels} -> {design[i + 1].in_channels}"
            )


def field_of(design: Sequence[LayerSpec], input_channels: int) -> InfoField:
    """Left fold of `propagate` over a kernel sequence."""
    if not design:
        raise ValidationError("empty design")
    if design[0].in_channels != input_channels:
        raise ValidationError(
            f"design expects {design[0].in_channels} input channels, got {input_channels}"
        )
    _check_chaining(design)
    field = InfoField.initial(input_channels)
    for layer in design:
        field = propagate(field, layer, input_channels)
    return field


def trace(design: Sequence[LayerSpec], input_channels: int) -> list[InfoField]:
    """Field after each kernel, starting from the initial field."""
    _check_chaining(design)
    fields = [InfoField.initial(input_channels)]
    for layer in design:
        fields.append(propagate(fields[-1], layer, input_channels))
    return fields


def classify(
    design: Sequence[LayerSpec], input_channels: int, reference: InfoField
) -> FieldVerdict:
    """Early-stop walk of a design against the standard-convolution field.

    A kernel contributes when it grows the field or changes the channel
    count (the latter exempts the thin ends of bottleneck structures).
    Verdicts, in the order they are detected:

    * INFERIOR_NO_GROWTH   some kernel contributed nothing;
    * INFERIOR_EARLY_FULL  the reference field was complete before a
      non-contributing tail kernel (index reported is where the field first
      reached the reference);
    * SPATIAL_MISMATCH     the spatial extent overshot the reference (the
      field can never shrink, so this is detected as soon as it happens);
    * VALID / INSUFFICIENT_FIELD on the final comparison.
    """
    if not design:
        raise ValidationError("empty design")
    _check_chaining(design)
    field = InfoField.initial(input_channels)
    first_full: Optional[int] = None
    for i, layer in enumerate(design):
        new = propagate(field, layer, input_channels)
        changes_channels = layer.in_channels != layer.out_channels
        if new == field and not changes_channels:
            return FieldVerdict(VerdictKind.INFERIOR_NO_GROWTH, at_index=i)
        if field == reference and not changes_channels:
            return FieldVerdict(VerdictKind.INFERIOR_EARLY_FULL, at_index=first_full)
        if new.spatial_x > reference.spatial_x or new.spatial_y > reference.spatial_y:
            return FieldVerdict(VerdictKind.SPATIAL_MISMATCH, final=new)
        if new == reference and first_full is None:
            first_full = i
        field = new
    if field == reference:
        return FieldVerdict(VerdictKind.VALID, final=field)
    if field.coverage < reference.coverage:
        return FieldVerdict(VerdictKind.INSUFFICIENT_FIELD, final=field)
    # coverage complete but the spatial extent fell short of the reference
    return FieldVerdict(VerdictKind.INSUFFICIENT_FIELD, final=field)
