"""quenchwork-plot --manifest <path> --preset <fig1|fig3|fig4|fig5|fig6|fig7> --out <dir>"""

import argparse
import json
import sys

from .formats import read_manifest
from .render import RenderError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="quenchwork-plot", description=__doc__)
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--preset", required=True,
                        choices=["fig1", "fig3", "fig4", "fig5", "fig6", "fig7"])
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        manifest = read_manifest(args.manifest)
        layout = render(manifest, args.preset, args.out)
    except (RenderError, OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    print(json.dumps({"out": args.out, "panels": len(layout["panels"])}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
