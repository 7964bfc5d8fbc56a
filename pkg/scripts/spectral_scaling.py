"""log G(lam^N) against log lam^N for the builtins that satisfy the hypothesis, plus eta profiles."""
import argparse
import json
from pathlib import Path

from selfsim import builtin
from selfsim.ergodic import default_function
from selfsim.spectral import KernelSpec, eta_dilation_check, eta_profile, scaling_profile
from selfsim.substitution import spectral_data
from selfsim.tiling import make_window

RUNS = {"ab42": dict(levels=range(1, 8), n=9, anchors=64, eta_n=(3, 4, 5), eta_window=10),
        "sym95": dict(levels=range(1, 6), n=8, anchors=32, eta_n=(2,), eta_window=8)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/spectral"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--tau", type=float, default=6.0)
    ap.add_argument("--only", choices=sorted(RUNS))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    kernel = KernelSpec(tau=args.tau)
    for name, run in RUNS.items():
        if args.only and name != args.only:
            continue
        sub = builtin(name)
        sd = spectral_data(sub)
        f = default_function(sub, sd)
        prof = scaling_profile(f, make_window(sub, 0, run["n"]), sd, run["levels"], kernel, run["anchors"],
                               args.seed, args.threads)
        cols = ("example", "function", "N", "R", "G", "stderr", "anchors", "kernel", "tau", "seed")
        (args.out / f"{name}.csv").write_text(prof.series.to_csv(cols, aliases={"G": "value"}))
        W = make_window(sub, 0, run["eta_window"])
        grid = [0.25, 0.5, 1.0, 2.0, 4.0]
        eta = []
        for N in run["eta_n"]:
            rows = eta_profile(f, W, sd, grid, N, kernel, run["anchors"], args.seed, args.threads)
            dil = eta_dilation_check(f, W, sd, grid[:-1], N, kernel, run["anchors"], args.seed, args.threads)
            eta.append({"N": N, "profile": [r.__dict__ for r in rows],
                        "dilation": [{**c.__dict__, "ok": c.ok} for c in dil]})
        out = {"example": name, "slope": prof.fit.slope, "stderr": prof.fit.stderr, "expected": prof.expected,
               "ratios": prof.ratios, "eta": eta}
        (args.out / f"{name}.json").write_text(json.dumps(out, indent=2) + "\n")
        print(json.dumps({k: out[k] for k in ("example", "slope", "stderr", "expected")}))


if __name__ == "__main__":
    main()
