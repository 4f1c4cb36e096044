"""Secret-key rate against QBER for a few dimensions, plus the QBER at which the rate reaches zero."""

import numpy as np
from scipy.optimize import brentq

from modesort.sorter import key_rate

DIMS = (2, 3, 5, 7)

print("qber," + ",".join(f"d={d}" for d in DIMS))
for e in np.arange(0, 0.21, 0.02):
    print(f"{e:.2f}," + ",".join(f"{key_rate(d, e):.4f}" for d in DIMS))
for d in DIMS:
    print(f"d={d}: rate vanishes at qber {brentq(lambda e: key_rate(d, e), 1e-6, 1 - 1 / d - 1e-6):.4f}")
