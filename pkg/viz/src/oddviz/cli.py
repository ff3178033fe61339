"""Command-line entry point: one verb per plot kind."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotSpec, SchemaError, render


def _parser():
    p = argparse.ArgumentParser(prog="oddviz",
                                description="render scenario run artifacts")
    sub = p.add_subparsers(dest="kind", required=True)
    help_by_kind = {
        "growth": "log-scale growth curve from diagnostics.csv",
        "trajectory": "particle path from trajectory.csv",
        "diagnostics": "four-panel overview from diagnostics.csv",
        "heatmap": "vorticity heatmap from a snapshot .npz",
    }
    for kind in KINDS:
        sp = sub.add_parser(kind, help=help_by_kind[kind])
        sp.add_argument("input", help="artifact file to plot")
        sp.add_argument("-o", "--output", default=f"{kind}.png",
                        help="image path (extension selects format)")
        sp.add_argument("--summary", help="run summary.json for annotations")
        sp.add_argument("--dpi", type=int, default=150)
        sp.add_argument("--title")
        if kind == "growth":
            sp.add_argument("--quantity", default="grad_sup",
                            help="diagnostics column to plot")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        spec = PlotSpec(kind=args.kind, inputs=[args.input],
                        output=args.output, summary=args.summary,
                        dpi=args.dpi, title=args.title,
                        quantity=getattr(args, "quantity", "grad_sup"))
        meta = render(spec)
    except SchemaError as e:
        print(f"schema error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {meta['output']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
