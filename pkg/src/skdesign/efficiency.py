"""Closed-form parameter efficiency of the four surviving compositions.

For each design family this module provides the exact parameter ratio
against a same-size standard convolution, the group numbers minimizing it,
and the greatest width reachable under a parameter budget.  Continuous
optima are reported as analytic references; the authoritative answer is
always the discrete divisor-constrained optimum, because real layers need
integer group counts dividing channel counts.

Ratio formulas (K = F/4 wherever a bottleneck is involved):

    dw+pw          1/F + 1/9
    gc+pwg         C/(M*F) + 1/(9*N)          with M*N <= C
    pw+dw+pw       (C + F + 9) / (36*C)
    pwg+dw+pwg     (C/M + 4*M + 9) / (36*C)   assuming K = M*N

The pwg+dw+pwg form builds in the best-efficiency condition that the
product of the two group numbers equals the intermediate channel count;
`theorem1_condition` tests that product condition and the divisor-grid
oracle verifies it exhaustively.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import oracles
from .kernels import (
    LayerSpec,
    ValidationError,
    depthwise,
    group_conv,
    param_count,
    pointwise,
    pointwise_group,
    standard,
)


class Family(enum.Enum):
    DW_PW = "dw+pw"
    GC_PWG = "gc+pwg"
    PW_DW_PW = "pw+dw+pw"
    PWG_DW_PWG = "pwg+dw+pwg"

    @property
    def kernel_count(self) -> int:
        return 2 if self in (Family.DW_PW, Family.GC_PWG) else 3

    @property
    def has_group_freedom(self) -> bool:
        return self in (Family.GC_PWG, Family.PWG_DW_PWG)

    @property
    def bottlenecked(self) -> bool:
        return self in (Family.PW_DW_PW, Family.PWG_DW_PWG)

    @staticmethod
    def parse(name: str) -> "Family":
        try:
            return Family(name.lower())
        except ValueError:
            valid = ", ".join(f.value for f in Family)
            raise ValidationError(f"unknown family {name!r}; expected one of: {valid}")


class UnderBudgetError(ValidationError):
    """The parameter budget is below the smallest legal design."""


def layers_for(
    family: Family, c: int, f: int, groups: Optional[tuple[int, int]] = None, spatial: int = 3
) -> list[LayerSpec]:
    """Concrete layer stack of a family at channel counts (C, F).

    Grouped families require groups=(M, N).  Bottleneck families use
    K = F/4 and require 4 | F.
    """
    if family.has_group_freedom:
        if groups is None:
            raise ValidationError(f"{family.value} needs group numbers (M, N)")
        m, n = groups
    elif groups is not None:
        raise ValidationError(f"{family.value} carries no group numbers")
    if family is Family.DW_PW:
        return [LayerSpec(depthwise(spatial), c, c), LayerSpec(pointwise(), c, f)]
    if family is Family.GC_PWG:
        # channel count unchanged after the grouped spatial kernel
        return [
            LayerSpec(group_conv(m, spatial), c, c),
            LayerSpec(pointwise_group(n), c, f),
        ]
    if f % 4:
        raise ValidationError(f"bottleneck families require 4 | F, got F={f}")
    k = f // 4
    if family is Family.PW_DW_PW:
        return [
            LayerSpec(pointwise(), c, k),
            LayerSpec(depthwise(spatial), k, k),
            LayerSpec(pointwise(), k, f),
        ]
    return [
        LayerSpec(pointwise_group(m), c, k),
        LayerSpec(depthwise(spatial), k, k),
        LayerSpec(pointwise_group(n), k, f),
    ]


def family_params(
    family: Family, c: int, f: int, groups: Optional[tuple[int, int]] = None
) -> int:
    """Exact parameter total of a family instance, summed layer by layer."""
    return sum(param_count(layer) for layer in layers_for(family, c, f, groups))


def ratio(
    family: Family, c: int, f: int, groups: Optional[tuple[int, int]] = None
) -> Fraction:
    """Parameters of the design over parameters of a standard convolution.

    Exact rational.  Must equal family_params / (9*C*F) wherever both are
    defined, which the test suite checks as an integer identity.
    """
    if family is Family.DW_PW:
        if groups is not None:
            raise ValidationError("dw+pw carries no group numbers")
        return Fraction(1, f) + Fraction(1, 9)
    if family is Family.PW_DW_PW:
        if groups is not None:
            raise ValidationError("pw+dw+pw carries no group numbers")
        if f % 4:
            raise ValidationError(f"bottleneck ratio requires 4 | F, got F={f}")
        return Fraction(c + f + 9, 36 * c)
    if groups is None:
        raise ValidationError(f"{family.value} needs group numbers (M, N)")
    m, n = groups
    if family is Family.GC_PWG:
        layers_for(family, c, f, groups)  # divisibility validation
        if m * n > c:
            raise ValidationError(
                f"infeasible groups: M*N = {m * n} exceeds C = {c}, the field "
                f"cannot stay complete"
            )
        return Fraction(c, m * f) + Fraction(1, 9 * n)
    # pwg+dw+pwg: the closed form assumes K = M*N exactly
    layers_for(family, c, f, groups)
    k = f // 4
    if m * n != k:
        raise ValidationError(
            f"the pwg+dw+pwg ratio form assumes M*N = K; got M*N = {m * n}, K = {k}"
        )
    return Fraction(c // m + 4 * m + 9, 36 * c)


@dataclass(frozen=True)
class GroupOptimum:
    family: Family
    continuous: tuple[float, float]
    continuous_condition: str
    discrete: tuple[tuple[int, int], ...]
    discrete_params: int
    continuous_bound_params: float

    @property
    def gap(self) -> float:
        """Relative excess of the discrete optimum over the continuous bound."""
        if self.continuous_bound_params == 0:
            return 0.0
        return self.discrete_params / self.continuous_bound_params - 1.0


def optimal_group_numbers(family: Family, c: int, f: int) -> GroupOptimum:
    """Continuous optimum and exact discrete divisor-grid minimizers."""
    if not family.has_group_freedom:
        raise ValidationError(f"{family.value} has no group numbers to optimize")
    if family is Family.GC_PWG:
        n_cont = math.sqrt(f) / 3.0
        m_cont = c / n_cont if n_cont else float("inf")
        grid = oracles.divisor_grid_min("gc+pwg", c, f, constraint="le")
        # 9CN + CF/N at the M*N = C boundary, minimized at N = sqrt(F)/3
        bound = 6.0 * c * math.sqrt(f)
        return GroupOptimum(
            family=family,
            continuous=(m_cont, n_cont),
            continuous_condition="M*N = C and N = sqrt(F)/3",
            discrete=grid.minimizers,
            discrete_params=grid.value,
            continuous_bound_params=bound,
        )
    if f % 4:
        raise ValidationError(f"bottleneck families require 4 | F, got F={f}")
    k = f // 4
    m_cont = math.sqrt(c) / 2.0
    n_cont = k / m_cont if m_cont else float("inf")
    grid = oracles.divisor_grid_min("pwg+dw+pwg", c, f, constraint="le")
    # K*(C/M + 4M + 9) at the K = M*N boundary, minimized at M = sqrt(C)/2
    bound = k * (4.0 * math.sqrt(c) + 9.0)
    return GroupOptimum(
        family=family,
        continuous=(m_cont, n_cont),
        continuous_condition="M*N = K and M = sqrt(C)/2",
        discrete=grid.minimizers,
        discrete_params=grid.value,
        continuous_bound_params=bound,
    )


@dataclass(frozen=True)
class WidthReport:
    family: Family
    budget: int
    alpha: Fraction
    greatest_width_real: float
    width: int
    params_at_width: int
    optimality_condition: str


def _continuous_width(family: Family, p: int, alpha: Fraction) -> tuple[float, str]:
    a = float(alpha)
    if family is Family.DW_PW:
        return (-9.0 + math.sqrt(81.0 + 4.0 * a * p)) / (2.0 * a), "fixed by P and alpha"
    if family is Family.GC_PWG:
        return (p / (6.0 * math.sqrt(a))) ** (2.0 / 3.0), "9*N = alpha*M"
    if family is Family.PW_DW_PW:
        disc = 81.0 * a * a + 16.0 * a * a * p + 16.0 * a * p
        return (-9.0 * a + math.sqrt(disc)) / (2.0 * (a * a + a)), "fixed by P and alpha"
    # pwg+dw+pwg: invert P = (alpha/4) * C * (9 + 4*sqrt(C)) by bisection;
    # the right side is strictly increasing in C
    def cost(c: float) -> float:
        return (a / 4.0) * c * (9.0 + 4.0 * math.sqrt(c))

    lo, hi = 0.0, 1.0
    while cost(hi) < p:
        hi *= 2.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if cost(mid) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0, "alpha*M = N (with K = M*N)"


def _min_params_at_width(family: Family, c: int, alpha: Fraction) -> Optional[int]:
    """Best achievable parameter count at integer width c, or None if infeasible."""
    fa = alpha * c
    if fa.denominator != 1:
        return None
    f = int(fa)
    if f < 1:
        return None
    try:
        if family is Family.DW_PW:
            return family_params(family, c, f)
        if family is Family.PW_DW_PW:
            if f % 4:
                return None
            return family_params(family, c, f)
        grid = oracles.divisor_grid_min(family.value, c, f, constraint="le")
        return grid.value
    except ValidationError:
        return None


def greatest_width(family: Family, budget: int, alpha: Fraction | int) -> WidthReport:
    """Closed-form real greatest width plus the best feasible integer width.

    The integer width is the largest C (respecting divisibility, and 4 | F
    for bottleneck families) whose optimal-group parameter count fits the
    budget.  Ties between equal-parameter widths resolve to the larger
    width because the scan runs downward.
    """
    alpha = Fraction(alpha)
    if alpha <= 0:
        raise ValidationError("alpha must be positive")
    if budget < 1:
        raise UnderBudgetError("budget must be a positive parameter count")
    g_real, condition = _continuous_width(family, budget, alpha)
    # the continuous bound dominates every discrete configuration, so no
    # feasible width can exceed floor(G); the +1 guards rounding noise
    start = int(math.floor(g_real)) + 1
    for c in range(start, 0, -1):
        params = _min_params_at_width(family, c, alpha)
        if params is not None and params <= budget:
            return WidthReport(
                family=family,
                budget=budget,
                alpha=alpha,
                greatest_width_real=g_real,
                width=c,
                params_at_width=params,
                optimality_condition=condition,
            )
    raise UnderBudgetError(
        f"budget {budget} is below the smallest legal {family.value} design"
    )


def theorem1_condition(c: int, m: int, n: int) -> bool:
    """Best-efficiency condition: the group-number product equals the
    intermediate layer's channel count."""
    if m < 1 or n < 1:
        raise ValidationError("group numbers must be >= 1")
    return m * n == c


def _standard_params(c: int, f: int, spatial: int = 3) -> int:
    return param_count(LayerSpec(standard(spatial), c, f))
