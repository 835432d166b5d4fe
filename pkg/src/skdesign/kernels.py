"""Sparse convolution kernel kinds and exact per-layer parameter/MAC counting.

Five kernel kinds are modelled: the dense k x k standard convolution and the
four sparse kinds derived from it by grouping channels and/or shrinking the
spatial extent to 1x1:

    standard        k x k, every output channel reads every input channel
    group (GC)      k x k, M disjoint channel groups
    depthwise (DW)  k x k, one group per channel, channel count preserved
    pointwise (PW)  1 x 1, full channel mixing
    pointwise group (PWG)  1 x 1, N channel groups

Group-number ranges are chosen so the kinds stay disjoint: a GC with M=1
would be the standard convolution and M=C would be depthwise, a PWG with
N=1 would be pointwise.  Counts exclude biases and normalisation parameters
throughout; whole-model conventions live in `sizer`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class ValidationError(ValueError):
    """A kernel, layer or configuration violates a structural constraint."""


class Kind(enum.Enum):
    STANDARD = "standard"
    GROUP = "gc"
    DEPTHWISE = "dw"
    POINTWISE = "pw"
    POINTWISE_GROUP = "pwg"

    @property
    def is_spatial(self) -> bool:
        """True for kinds whose spatial extent may exceed 1x1."""
        return self in (Kind.STANDARD, Kind.GROUP, Kind.DEPTHWISE)

    @property
    def is_grouped(self) -> bool:
        """True for kinds carrying a free group-number parameter."""
        return self in (Kind.GROUP, Kind.POINTWISE_GROUP)


@dataclass(frozen=True)
class Kernel:
    """One convolution kernel: a kind plus its spatial size and group number."""

    kind: Kind
    spatial: int = 3
    groups: int = 1

    def __post_init__(self) -> None:
        if self.kind in (Kind.POINTWISE, Kind.POINTWISE_GROUP):
            if self.spatial != 1:
                raise ValidationError(
                    f"{self.kind.value} kernels have spatial size fixed to 1, got {self.spatial}"
                )
        elif self.kind is Kind.DEPTHWISE:
            # a 1x1 depthwise would be an identity-shaped no-op; reject it
            if self.spatial < 2:
                raise ValidationError("depthwise spatial size must be >= 2")
        elif self.spatial < 1:
            raise ValidationError("spatial size must be >= 1")
        if self.kind.is_grouped:
            if self.groups < 2:
                raise ValidationError(
                    f"{self.kind.value} group number must be >= 2, got {self.groups}"
                )
        elif self.groups != 1:
            raise ValidationError(f"{self.kind.value} kernels carry no group number")

    def __str__(self) -> str:
        if self.kind.is_grouped:
            return f"{self.kind.value}({self.groups})"
        return self.kind.value


def standard(spatial: int = 3) -> Kernel:
    return Kernel(Kind.STANDARD, spatial=spatial)


def group_conv(groups: int, spatial: int = 3) -> Kernel:
    return Kernel(Kind.GROUP, spatial=spatial, groups=groups)


def depthwise(spatial: int = 3) -> Kernel:
    return Kernel(Kind.DEPTHWISE, spatial=spatial)


def pointwise() -> Kernel:
    return Kernel(Kind.POINTWISE, spatial=1)


def pointwise_group(groups: int) -> Kernel:
    return Kernel(Kind.POINTWISE_GROUP, spatial=1, groups=groups)


@dataclass(frozen=True)
class LayerSpec:
    """A kernel applied at concrete input/output channel counts."""

    kernel: Kernel
    in_channels: int
    out_channels: int

    def __post_init__(self) -> None:
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValidationError("channel counts must be positive")
        kind = self.kernel.kind
        g = self.kernel.groups
        if kind is Kind.DEPTHWISE and self.out_channels != self.in_channels:
            raise ValidationError(
                f"depthwise layers preserve the channel count "
                f"({self.in_channels} -> {self.out_channels} requested)"
            )
        if kind is Kind.GROUP:
            if self.in_channels % g:
                raise ValidationError(
                    f"group number {g} does not divide in_channels {self.in_channels}"
                )
            if self.out_channels % g:
                raise ValidationError(
                    f"group number {g} does not divide out_channels {self.out_channels}"
                )
            if g > self.in_channels - 1:
                raise ValidationError(
                    f"group number {g} must be <= in_channels-1 ({self.in_channels - 1}); "
                    f"one group per channel is the depthwise kind"
                )
        if kind is Kind.POINTWISE_GROUP and self.in_channels % g:
            raise ValidationError(
                f"group number {g} does not divide in_channels {self.in_channels}"
            )

    def __str__(self) -> str:
        return f"{self.kernel}[{self.in_channels}->{self.out_channels}]"


@dataclass(frozen=True)
class TensorShape:
    """Channels x height x width of a feature tensor."""

    channels: int
    height: int
    width: int

    def __post_init__(self) -> None:
        if min(self.channels, self.height, self.width) < 1:
            raise ValidationError("tensor dimensions must be positive")


def param_count(layer: LayerSpec) -> int:
    """Exact weight count of one layer (no biases, no normalisation)."""
    k2 = layer.kernel.spatial * layer.kernel.spatial
    c, f, g = layer.in_channels, layer.out_channels, layer.kernel.groups
    kind = layer.kernel.kind
    if kind is Kind.STANDARD:
        return k2 * c * f
    if kind is Kind.GROUP:
        return k2 * (c // g) * f
    if kind is Kind.DEPTHWISE:
        return k2 * c
    if kind is Kind.POINTWISE:
        return c * f
    return (c // g) * f  # pointwise group


def flop_count(layer: LayerSpec, out_spatial: tuple[int, int]) -> int:
    """Multiply-accumulate count: one MAC per weight per output position.

    Strides are the caller's concern and must already be folded into the
    output spatial size.
    """
    u, v = out_spatial
    if u < 1 or v < 1:
        raise ValidationError("output spatial size must be positive")
    return param_count(layer) * u * v


def out_channels(layer: LayerSpec) -> int:
    """Output channel count of a layer."""
    if layer.kernel.kind is Kind.DEPTHWISE and layer.out_channels != layer.in_channels:
        raise ValidationError("depthwise layers preserve the channel count")
    return layer.out_channels


def _kernel_unchecked(kind: Kind, spatial: int, groups: int) -> Kernel:
    """Build a Kernel bypassing validation.  Test-suite use only."""
    k = object.__new__(Kernel)
    object.__setattr__(k, "kind", kind)
    object.__setattr__(k, "spatial", spatial)
    object.__setattr__(k, "groups", groups)
    return k


def _layer_unchecked(kernel: Kernel, in_channels: int, out_channels: int) -> LayerSpec:
    """Build a LayerSpec bypassing validation.  Test-suite use only."""
    layer = object.__new__(LayerSpec)
    object.__setattr__(layer, "kernel", kernel)
    object.__setattr__(layer, "in_channels", in_channels)
    object.__setattr__(layer, "out_channels", out_channels)
    return layer
