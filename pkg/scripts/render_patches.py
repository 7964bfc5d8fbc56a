"""SVG renders of small windows of each builtin."""
import argparse
from pathlib import Path

from selfsim import builtin
from selfsim.config import BUILTINS
from selfsim.svg import patch_svg
from selfsim.tiling import make_window

LEVELS = {"table": 4, "sym95": 3, "ab42": 4}

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/patches"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name in BUILTINS:
        sub = builtin(name)
        for root in range(sub.m):
            path = args.out / f"{name}_{sub.labels[root]}_{LEVELS[name]}.svg"
            path.write_text(patch_svg(make_window(sub, root, LEVELS[name])))
            print(path)
