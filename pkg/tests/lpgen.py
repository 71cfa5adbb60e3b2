"""Seeded random packing LPs shared by the acceptance suite and the
script that freezes their exact optima.

All data are small integers so the exact rational simplex stays fast;
sizes reach 200 in each dimension (many-variable LPs are cheap for the
exact oracle, many-row ones are kept narrow)."""

import numpy as np

from coalloc.packing import PackingLp, packing_lp


def random_packing_lp(seed: int) -> PackingLp:
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x9acc)))
    if rng.random() < 0.85:
        n = int(rng.integers(10, 201))
        m = int(rng.integers(10, 71))
    else:
        n = int(rng.integers(10, 31))
        m = int(rng.integers(70, 201))
    c = rng.integers(1, 51, size=n)
    a = np.zeros((m, n))
    for i in range(m):
        k = int(rng.integers(3, 11))
        cols = rng.choice(n, size=min(k, n), replace=False)
        a[i, cols] = rng.integers(1, 51, size=len(cols))
    # every variable needs a positive coefficient somewhere or the LP
    # is unbounded
    for j in range(n):
        if not a[:, j].any():
            a[int(rng.integers(m)), j] = float(rng.integers(1, 51))
    b = rng.integers(50, 501, size=m)
    return packing_lp(c.astype(float), a, b.astype(float))
