"""Independent reference computations for the test-suite.

Nothing here imports the simulator's optics; each oracle rebuilds what it
needs from first principles with plain loops.
"""

import cmath
import math


def dft_entry(d, j, k):
    return cmath.exp(2j * math.pi * j * k / d) / math.sqrt(d)


def time_bin_bin_powers(d, amplitudes, bob_phases):
    """Enumerate all d*d (time bin, interferometer arm) combinations.

    Arm s of Bob's interferometer delays by s slots.  Returns
    {arrival_slot: [power at each output]}.
    """
    by_slot = {}
    for n in range(d):
        for s in range(d):
            split = dft_entry(d, s, 0)
            phase = cmath.exp(-1j * bob_phases[d - 1 - s])
            for k in range(d):
                recombine = dft_entry(d, s, k).conjugate()
                amp = amplitudes[n] * split * phase * recombine
                slot = by_slot.setdefault(n + s, [0j] * d)
                slot[k] += amp
    return {m: [abs(a) ** 2 for a in amps] for m, amps in by_slot.items()}


def time_bin_sift_transmission(d):
    amps = [1 / math.sqrt(d)] * d
    powers = time_bin_bin_powers(d, amps, [0.0] * d)
    total = sum(sum(p) for p in powers.values())
    return sum(powers[d - 1]) / total


def mat_mul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def binary_entropy(q):
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)
