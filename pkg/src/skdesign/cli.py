"""Command-line front end: search, analyze, size, width, verify, graph.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 oracle
disagreement.  Every command accepts --format {table,json}; json documents
are deterministic (sorted keys, versioned schema) so diffs are meaningful
in CI.  Exact rationals are printed verbatim alongside a 6-significant-
figure decimal rendering.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Any, Optional

from . import __version__, efficiency, oracles, search, sizer
from .efficiency import Family
from .infofield import field_of
from .kernels import Kind, TensorShape, ValidationError

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_ORACLE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fraction_doc(x: Fraction) -> dict[str, Any]:
    return {"exact": f"{x.numerator}/{x.denominator}", "decimal": float(f"{float(x):.6g}")}


def _fmt_fraction(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator} ({float(x):.6g})"


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _groups_arg(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected two group numbers, e.g. 4,4")
    return int(parts[0]), int(parts[1])


def _emit(doc: dict[str, Any], lines: list[str], fmt: str) -> None:
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, **doc}
        print(json.dumps(doc, sort_keys=True, indent=2))
    else:
        for line in lines:
            print(line)


def _cmd_search(args: argparse.Namespace) -> int:
    out_channels = args.out_channels
    if out_channels is None:
        if args.alpha is not None:
            scaled = Fraction(args.alpha) * args.channels
            if scaled.denominator != 1 or scaled < 1:
                raise ValidationError(
                    f"alpha {args.alpha} does not yield a whole output width "
                    f"at {args.channels} channels"
                )
            out_channels = int(scaled)
        else:
            out_channels = args.channels
    config = search.SearchConfig(
        max_length=args.max_len,
        reference_channels=args.channels,
        reference_out_channels=out_channels,
        enable_bottleneck_variants=not args.no_bottleneck,
        enable_domination_filter=not args.no_domination,
        jobs=args.jobs,
    )
    result = search.run_search(config)
    doc: dict[str, Any] = {
        "command": "search",
        "config": {
            "max_length": config.max_length,
            "channels": config.reference_channels,
            "out_channels": config.reference_out_channels,
            "bottleneck_variants": config.enable_bottleneck_variants,
            "domination_filter": config.enable_domination_filter,
        },
        "families": [
            {
                "name": fam.name,
                "bottleneck": fam.bottleneck,
                "witnesses": len(fam.witnesses),
                "min_params_at_reference": fam.min_params(),
                "example_witness": fam.witnesses[0].describe(),
                "known_architectures": sorted(
                    search.identify_known(fam, fam.witnesses[0].groups)
                ),
            }
            for fam in result.families
        ],
        "stage_counts": dict(result.stage_counts),
        "removed": [
            {"name": r.name, "rule": r.rule, "detail": r.detail}
            for r in result.removed
        ],
    }
    lines = [f"surviving design families ({len(result.families)}):"]
    for fam in result.families:
        tag = " [bottleneck]" if fam.bottleneck else ""
        known = sorted(search.identify_known(fam, fam.witnesses[0].groups))
        suffix = f"  (matches: {', '.join(known)})" if known else ""
        lines.append(
            f"  {fam.name}{tag}  witnesses={len(fam.witnesses)} "
            f"min_params={fam.min_params()}{suffix}"
        )
    if args.audit:
        lines.append("pipeline audit:")
        for name, count in result.stage_counts:
            lines.append(f"  {name}: {count}")
        for r in result.removed:
            lines.append(f"  removed {r.name}: {r.rule} ({r.detail})")
    else:
        doc.pop("removed")
    _emit(doc, lines, args.format)
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace) -> int:
    family = Family.parse(args.family)
    c, f = args.c, args.f
    doc: dict[str, Any] = {
        "command": "analyze",
        "config": {"family": family.value, "C": c, "F": f},
    }
    lines = [f"family {family.value} at C={c}, F={f}"]
    groups = args.groups
    if family.has_group_freedom:
        opt = efficiency.optimal_group_numbers(family, c, f)
        doc["optimal_groups"] = {
            "continuous": {"M": opt.continuous[0], "N": opt.continuous[1]},
            "condition": opt.continuous_condition,
            "discrete": [list(p) for p in opt.discrete],
            "discrete_params": opt.discrete_params,
            "continuous_bound_params": opt.continuous_bound_params,
            "relative_gap": opt.gap,
        }
        lines.append(
            f"  continuous optimum: M={opt.continuous[0]:.6g}, N={opt.continuous[1]:.6g} "
            f"({opt.continuous_condition})"
        )
        lines.append(
            f"  discrete optimum: {', '.join(f'(M={m}, N={n})' for m, n in opt.discrete)} "
            f"at {opt.discrete_params} parameters "
            f"(continuous bound {opt.continuous_bound_params:.6g}, gap {opt.gap:.3%})"
        )
        if groups is None:
            groups = opt.discrete[0]
    r = efficiency.ratio(family, c, f, groups if family.has_group_freedom else None)
    doc["ratio"] = _fraction_doc(r)
    lines.append(f"  parameter ratio vs standard 3x3: {_fmt_fraction(r)}")
    if groups is not None:
        k = f // 4 if family.bottlenecked else c
        ok = efficiency.theorem1_condition(k, groups[0], groups[1])
        doc["groups"] = {"M": groups[0], "N": groups[1], "theorem1_product_condition": ok}
        lines.append(
            f"  groups M={groups[0]}, N={groups[1]}: M*N "
            f"{'=' if ok else '!='} intermediate channels {k}"
        )
    fam_obj = _family_stub(family)
    known = sorted(search.identify_known(fam_obj, groups, input_channels=c))
    doc["known_architectures"] = known
    if known:
        lines.append(f"  coincides with: {', '.join(known)}")
    _emit(doc, lines, args.format)
    return EXIT_OK


def _family_stub(family: Family) -> search.DesignFamily:
    kinds = {
        Family.DW_PW: (Kind.DEPTHWISE, Kind.POINTWISE),
        Family.GC_PWG: (Kind.GROUP, Kind.POINTWISE_GROUP),
        Family.PW_DW_PW: (Kind.POINTWISE, Kind.DEPTHWISE, Kind.POINTWISE),
        Family.PWG_DW_PWG: (Kind.POINTWISE_GROUP, Kind.DEPTHWISE, Kind.POINTWISE_GROUP),
    }[family]
    return search.DesignFamily(
        canonical_sequence=kinds,
        bottleneck=family.bottlenecked,
        multiset=tuple(sorted(k.value for k in kinds)),
        witnesses=(),
    )


def _block_from_args(args: argparse.Namespace) -> sizer.BlockSpec:
    return sizer.BlockSpec(args.family, args.groups)


def _conventions_from_args(args: argparse.Namespace) -> sizer.Conventions:
    return sizer.Conventions(
        include_projections=not args.no_projections,
        include_batchnorm=args.include_bn,
        include_bias=args.include_bias,
    )


def _report_doc(report: sizer.SizingReport) -> dict[str, Any]:
    return {
        "width": report.width,
        "depth": report.depth,
        "total_params": report.total_params,
        "total_macs": report.total_macs,
        "breakdown": dict(report.breakdown()),
        "conventions": report.conventions.describe(),
        "block": report.block,
    }


def _report_lines(report: sizer.SizingReport) -> list[str]:
    lines = [
        f"block {report.block}, width {report.width}, depth {report.depth}",
        f"  total parameters: {report.total_params:,} "
        f"({report.total_params / 1e6:.6g}M)",
        f"  total MACs: {report.total_macs:,}",
        f"  conventions: {report.conventions.describe()}",
    ]
    for name, value in report.breakdown():
        lines.append(f"    {name}: {value:,}")
    return lines


def _cmd_size(args: argparse.Namespace) -> int:
    layout = sizer.NetworkLayout(
        width=args.width,
        blocks_per_stage=args.blocks,
        conventions=_conventions_from_args(args),
    )
    report = sizer.model_params(layout, _block_from_args(args))
    _emit({"command": "size", "report": _report_doc(report)}, _report_lines(report), args.format)
    return EXIT_OK


def _cmd_width(args: argparse.Namespace) -> int:
    report = sizer.solve_width(
        args.budget,
        _block_from_args(args),
        blocks_per_stage=args.blocks,
        conventions=_conventions_from_args(args),
    )
    lines = [f"largest width within budget {args.budget:,}: {report.width}"]
    lines += _report_lines(report)
    _emit({"command": "width", "budget": args.budget, "report": _report_doc(report)}, lines, args.format)
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    from .verify import verify_infofield, verify_theorem1

    any_requested = args.theorem1 or args.infofield
    run_theorem1 = args.theorem1 or not any_requested
    run_infofield = args.infofield or not any_requested
    failures = []
    doc: dict[str, Any] = {"command": "verify", "checks": {}}
    lines: list[str] = []
    if run_theorem1:
        res = verify_theorem1(c_max=args.c_max)
        doc["checks"]["theorem1"] = res.as_doc()
        lines.append(res.render())
        if not res.passed:
            failures.append("theorem1")
    if run_infofield:
        res = verify_infofield(c_max=min(args.c_max, 16), len_max=args.len_max)
        doc["checks"]["infofield"] = res.as_doc()
        lines.append(res.render())
        if not res.passed:
            failures.append("infofield")
    _emit(doc, lines, args.format)
    return EXIT_ORACLE if failures else EXIT_OK


_GRAPH_DESIGNS = {
    "standard": (Kind.STANDARD,),
    "dw+pw": (Kind.DEPTHWISE, Kind.POINTWISE),
    "gc+pwg": (Kind.GROUP, Kind.POINTWISE_GROUP),
    "pw+dw+pw": (Kind.POINTWISE, Kind.DEPTHWISE, Kind.POINTWISE),
    "pwg+dw+pwg": (Kind.POINTWISE_GROUP, Kind.DEPTHWISE, Kind.POINTWISE_GROUP),
}


def _cmd_graph(args: argparse.Namespace) -> int:
    if args.design not in _GRAPH_DESIGNS:
        raise ValidationError(
            f"unknown design {args.design!r}; expected one of: "
            + ", ".join(sorted(_GRAPH_DESIGNS))
        )
    kinds = _GRAPH_DESIGNS[args.design]
    c = args.channels
    groups = list(args.groups) if args.groups else []
    layers = []
    gi = 0
    for kind in kinds:
        if kind.is_grouped:
            if gi >= len(groups):
                raise ValidationError(
                    f"design {args.design} needs --groups with "
                    f"{sum(1 for k in kinds if k.is_grouped)} numbers"
                )
            g = groups[gi]
            gi += 1
        else:
            g = 1
        from .kernels import Kernel, LayerSpec

        spatial = 1 if kind in (Kind.POINTWISE, Kind.POINTWISE_GROUP) else 3
        layers.append(LayerSpec(Kernel(kind, spatial=spatial, groups=g), c, c))
    dot = render_dot(layers, name=args.design)
    doc = {
        "command": "graph",
        "config": {"design": args.design, "channels": c, "groups": groups},
        "dot": dot,
    }
    _emit(doc, [dot], args.format)
    return EXIT_OK


def render_dot(layers, name: str = "design") -> str:
    """DOT drawing of channel connectivity at one spatial slice.

    One node per (layer, channel); edges from each output channel to the
    input channels it reads, through the interleave shuffle.  Edges of
    spatial kernels are green (they also carry spatial context), 1x1 edges
    are blue.
    """
    from .oracles import _input_groups, _shuffle_group, interleave

    safe = name.replace("+", "_")
    out = [f'digraph "{safe}" {{', "  rankdir=LR;", "  node [shape=circle, fontsize=10];"]
    for li, layer in enumerate(layers):
        col = li
        n = layer.in_channels
        out.append(f"  subgraph cluster_{col} {{")
        label = "input" if li == 0 else f"after {layers[li - 1].kernel}"
        out.append(f'    label="{label}";')
        for ch in range(n):
            out.append(f'    t{col}_c{ch} [label="{ch}"];')
        out.append("  }")
    last = len(layers)
    out.append(f"  subgraph cluster_{last} {{")
    out.append(f'    label="after {layers[-1].kernel}";')
    for ch in range(layers[-1].out_channels):
        out.append(f'    t{last}_c{ch} [label="{ch}"];')
    out.append("  }")
    for li, layer in enumerate(layers):
        color = "green" if layer.kernel.spatial > 1 else "blue"
        reads = _input_groups(layer)
        if li > 0:
            perm = interleave(layer.in_channels, _shuffle_group(layers[li - 1]))
        else:
            perm = tuple(range(layer.in_channels))
        for ch, ins in enumerate(reads):
            for src in ins:
                out.append(f"  t{li}_c{perm[src]} -> t{li + 1}_c{ch} [color={color}];")
    out.append("}")
    return "\n".join(out)


def build_parser() -> _Parser:
    parser = _Parser(prog="skdesign", description=__doc__)
    parser.add_argument("--version", action="version", version=f"skdesign {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run the pruning pipeline")
    p.add_argument("--max-len", type=_positive_int, default=6)
    p.add_argument("--channels", type=_positive_int, default=64)
    p.add_argument("--out-channels", type=_positive_int, default=None)
    p.add_argument("--alpha", type=Fraction, default=None,
                   help="output/input width ratio, used when --out-channels is absent")
    p.add_argument("--no-bottleneck", action="store_true")
    p.add_argument("--no-domination", action="store_true")
    p.add_argument("--audit", action="store_true")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("analyze", help="closed-form efficiency of one family")
    p.add_argument("family")
    p.add_argument("--c", type=_positive_int, required=True)
    p.add_argument("--f", type=_positive_int, required=True)
    p.add_argument("--groups", type=_groups_arg, default=None)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("size", help="whole-model parameter/MAC accounting")
    p.add_argument("--family", required=True)
    p.add_argument("--width", type=_positive_int, required=True)
    p.add_argument("--blocks", type=_positive_int, default=8)
    p.add_argument("--groups", type=_groups_arg, default=None)
    p.add_argument("--include-bn", action="store_true")
    p.add_argument("--include-bias", action="store_true")
    p.add_argument("--no-projections", action="store_true")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=_cmd_size)

    p = sub.add_parser("width", help="largest width under a parameter budget")
    p.add_argument("--family", required=True)
    p.add_argument("--budget", type=_positive_int, required=True)
    p.add_argument("--blocks", type=_positive_int, default=8)
    p.add_argument("--groups", type=_groups_arg, default=None)
    p.add_argument("--include-bn", action="store_true")
    p.add_argument("--include-bias", action="store_true")
    p.add_argument("--no-projections", action="store_true")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=_cmd_width)

    p = sub.add_parser("verify", help="run the brute-force oracle suites")
    p.add_argument("--theorem1", action="store_true")
    p.add_argument("--infofield", action="store_true")
    p.add_argument("--c-max", type=_positive_int, default=64)
    p.add_argument("--len-max", type=_positive_int, default=4)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("graph", help="emit a DOT connectivity drawing")
    p.add_argument("design")
    p.add_argument("--channels", type=_positive_int, default=4)
    p.add_argument("--groups", type=_groups_arg, default=None)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=_cmd_graph)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValidationError as err:
        print(f"validation error: {err}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
