"""How often does ||ZJ||^2 exceed (L+1)(|b|^2+|d|^2+||c||^2) over random draws?

Prints the fraction of violations of that bound and of the rigorous
(L+1)((|b|+|d|)^2+||c||^2) bound, by clutter length.
"""

import numpy as np

from radarlab.analysis import ZJOperator
from radarlab.scene import DelayDoppler
from radarlab.signal_core import WaveformSpec
from radarlab.synth import NodeScenario


def main(n_draws=400, seed=0):
    rng = np.random.default_rng(seed)
    spec = WaveformSpec(8e6, 25e6, 32, 6)
    print(" L  loose-bound violations  rigorous-bound violations  worst ratio (loose)")
    for L in range(0, 5):
        loose = rigorous = 0
        worst = 0.0
        for _ in range(n_draws):
            b, d = (rng.standard_normal(2) + 1j * rng.standard_normal(2)) * rng.uniform(0, 3, 2)
            c = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) * rng.uniform(0, 1)
            omega = rng.choice([0.0, rng.uniform(-4, 4)]) * spec.doppler_bin
            sc = NodeScenario(1.0, b, d, c, 0.0, 0.0, spec, DelayDoppler(2 * spec.dt, omega))
            n2 = np.linalg.svd(ZJOperator(sc).matrix, compute_uv=False)[0] ** 2
            cs = np.sum(np.abs(c) ** 2)
            lb = (L + 1) * (abs(b) ** 2 + abs(d) ** 2 + cs)
            rb = (L + 1) * ((abs(b) + abs(d)) ** 2 + cs)
            loose += n2 > lb * (1 + 1e-12)
            rigorous += n2 > rb * (1 + 1e-12)
            worst = max(worst, n2 / lb)
        print(f"{L:2d}  {loose / n_draws:22.3f}  {rigorous / n_draws:25.3f}  {worst:19.3f}")


if __name__ == "__main__":
    main()
