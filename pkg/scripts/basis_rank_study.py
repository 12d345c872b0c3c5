"""Conditioning of the Toeplitz interference basis against the spectral floor.

Shows why a strictly bandlimited waveform cannot support L = 16 or L = 70 at
B/fs = 0.32, and how an out-of-band floor restores full rank.
"""

import numpy as np

from radarlab.signal_core import WaveformSpec, generate_waveform


def ratio(spec, L, seed=1):
    w = generate_waveform(spec, seed)
    N = spec.n_samples
    s = w.samples(-L, N - 1)
    B = np.lib.stride_tricks.sliding_window_view(s, N)[L::-1].T
    sv = np.linalg.svd(B, compute_uv=False)
    return sv[-1] / sv[0]


def main():
    print("floor_db      L=8        L=16       L=70")
    for floor in (None, -60.0, -40.0, -30.0, -20.0):
        spec = WaveformSpec(8e6, 25e6, 2048, 80, floor_db=floor)
        vals = [ratio(spec, L) for L in (8, 16, 70)]
        print(f"{str(floor):>8}  " + "  ".join(f"{v:9.2e}" for v in vals))


if __name__ == "__main__":
    main()
