"""Empirical mode decomposition on a two-tone signal.

Sifting peels off oscillatory components (IMFs) from fast to slow;
the residual carries the trend.  The decomposition is exact: the sum
of IMFs plus the residual reconstructs the input to machine precision.

    python3 demos/02_emd_decomposition.py
"""

import numpy as np

from pdhw.emd import sift
from pdhw.nonlinear import conventional_energy, shannon_entropy

t = np.linspace(0, 1, 1000)
fast = 0.6 * np.sin(2 * np.pi * 24 * t)
slow = np.sin(2 * np.pi * 3 * t)
trend = 0.8 * t
signal = fast + slow + trend

d = sift(signal)
print(f"{len(d.imfs)} IMFs extracted")
print(f"reconstruction error: {np.max(np.abs(d.reconstruct() - signal)):.2e}\n")

# IMF1 should track the fast tone, IMF2 the slow one
print(f"{'component':<10} {'energy':>10} {'entropy':>10} {'corr fast':>10} {'corr slow':>10}")
for i, imf in enumerate(d.imfs, 1):
    cf = np.corrcoef(imf, fast)[0, 1]
    cs = np.corrcoef(imf, slow)[0, 1]
    print(f"IMF{i:<7} {conventional_energy(imf):>10.4f} "
          f"{shannon_entropy(imf):>10.4f} {cf:>10.2f} {cs:>10.2f}")
print(f"{'residual':<10} {conventional_energy(d.residual):>10.4f}")
