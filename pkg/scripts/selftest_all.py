"""Run the exact invariant suite on every builtin and print one line per check."""
import sys

from selfsim import builtin
from selfsim.config import BUILTINS
from selfsim.experiments import selftest

if __name__ == "__main__":
    bad = 0
    for name in BUILTINS:
        for c in selftest(builtin(name)):
            bad += not c["pass"]
            extra = {k: v for k, v in c.items() if k not in ("check", "pass")}
            print(f"{name:6s} {'ok  ' if c['pass'] else 'FAIL'} {c['check']:28s} {extra}")
    sys.exit(1 if bad else 0)
