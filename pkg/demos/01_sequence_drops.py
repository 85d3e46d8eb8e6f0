"""Walk drops and good partitions: the discrete optimization at the core.

A sequence sigma of per-step increments in [-1, 1] defines a walk
P_0 = 0, P_n = sigma_1 + ... + sigma_n.  A *good* partition chops the index
range (0, L] into blocks that at most double in length as they move right;
the *retained drop* M is the sum over blocks of how far the walk falls
below its value at the block's left edge.  mtau(sigma, tau) minimizes M
over tau-good partitions (blocks must also grow by a factor >= 1 + tau).

Run:  python3 demos/01_sequence_drops.py
"""

import numpy as np

from pindrop import drop_M, drop_S, mtau, mtau_bruteforce

rng = np.random.default_rng(7)

print("=== a hand-made sequence ===")
sigma = [1, -1, 1, -1]
value, part = mtau(sigma, tau=0.1)
print(f"sigma = {sigma}")
print(f"optimal tau-good partition: {list(part.points)} retains drop {value}")
print(f"single-block drop would be {drop_S(sigma):.3f} (walk floor), "
      f"partitioning cannot create drop, only retain less of it")

print()
print("=== the dynamic program agrees with exhaustive search ===")
for trial in range(5):
    ell = int(rng.integers(4, 13))
    sig = rng.uniform(-1.0, 1.0, size=ell)
    for tau in (0.0, 0.2):
        fast, p_fast = mtau(sig, tau)
        slow, p_slow = mtau_bruteforce(sig, tau)
        match = "==" if fast == slow else "!="
        print(f"  ell={ell:2d} tau={tau}: dp {fast:.6f} {match} brute force {slow:.6f}"
              f"   partition {list(p_fast.points)}")
        assert fast == slow

print()
print("=== relaxing tau never helps, tightening it never hurts ===")
sig = rng.uniform(-1.0, 1.0, size=16)
prev = None
for tau in (0.0, 0.05, 0.2, 0.45):
    value, part = mtau(sig, tau)
    mark = "" if prev is None or value >= prev - 1e-12 else "  <-- impossible"
    print(f"  tau={tau:4.2f}: min retained drop {value:.6f} over {len(part.points)-1} blocks{mark}")
    prev = value

print()
print("=== any partition re-evaluates to its reported value exactly ===")
value, part = mtau(sig, 0.05)
print(f"  mtau value {value!r}")
print(f"  drop_M     {drop_M(sig, part)!r}  (bit-identical by construction)")
assert drop_M(sig, part) == value
