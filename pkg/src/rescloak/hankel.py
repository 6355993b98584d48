"""First-kind Hankel functions of order 0 and 1 for positive real argument.

Three evaluation regimes cover [1e-3, 50+] at better than 1e-10 relative
accuracy in double precision:

* ascending power series below z = 8,
* backward (Miller) recurrence with the logarithmic Neumann series for
  the Y parts on [8, 17) -- the plain large-argument expansion cannot
  reach 1e-10 until z is around 17, so this band bridges the gap,
* the large-argument expansion from z = 17 on, truncated at its
  smallest term.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

__all__ = ["hankel1_0", "hankel1_1", "hankel1_pair"]

_EULER_GAMMA = 0.5772156649015328606
_SERIES_CUT = 8.0
_ASYMPTOTIC_CUT = 17.0


def _series_pair(z: float):
    """(J0, Y0, J1, Y1) by ascending series; accurate for z below ~8."""
    q = 0.25 * z * z
    log_term = np.log(0.5 * z) + _EULER_GAMMA

    j0 = 1.0
    y0s = 0.0  # sum (-1)^{m+1} H_m q^m / (m!)^2
    term = 1.0
    harmonic = 0.0
    m = 0
    while True:
        m += 1
        term *= -q / (m * m)
        harmonic += 1.0 / m
        j0 += term
        y0s -= term * harmonic
        if abs(term) < 1e-18 * (abs(j0) + 1.0) and m > 4:
            break
    y0 = (2.0 / np.pi) * (log_term * j0 + y0s)

    # J1 = (z/2) sum (-1)^m q^m / (m! (m+1)!)
    # Y1 = (2/pi) log_term J1 - 2/(pi z)
    #      - (1/pi) sum (-1)^m (H_m + H_{m+1}) (z/2)^{2m+1} / (m! (m+1)!)
    half = 0.5 * z
    term = half
    j1 = term
    y1s = term * 1.0  # m = 0: H_0 + H_1 = 1
    hm = 0.0
    hm1 = 1.0
    m = 0
    while True:
        m += 1
        term *= -q / (m * (m + 1))
        hm += 1.0 / m
        hm1 += 1.0 / (m + 1)
        j1 += term
        y1s += term * (hm + hm1)
        if abs(term) < 1e-18 * (abs(j1) + 1.0) and m > 4:
            break
    y1 = (2.0 / np.pi) * log_term * j1 - 2.0 / (np.pi * z) - y1s / np.pi
    return j0, y0, j1, y1


def _miller_pair(z: float):
    """(J0, Y0, J1, Y1) via backward recurrence and Neumann series."""
    start = int(1.3 * z) + 42
    if start % 2:
        start += 1
    jp1 = 0.0
    j = 1e-30
    js = np.zeros(start + 1)
    js[start] = j
    for n in range(start, 0, -1):
        jm1 = (2.0 * n / z) * j - jp1
        jp1 = j
        j = jm1
        js[n - 1] = j
        if abs(j) > 1e250:
            js[n - 1 :] /= 1e250
            j /= 1e250
            jp1 /= 1e250
    norm = js[0] + 2.0 * np.sum(js[2::2])
    js /= norm

    log_term = np.log(0.5 * z) + _EULER_GAMMA
    # Y0 = (2/pi)(log_term J0) + (4/pi) sum (-1)^{k+1} J_{2k}/k
    acc0 = 0.0
    for k in range(1, start // 2):
        acc0 += ((-1.0) ** (k + 1)) * js[2 * k] / k
    y0 = (2.0 / np.pi) * log_term * js[0] + (4.0 / np.pi) * acc0
    # Y1 = -Y0' = (2/pi)(log_term J1 - J0/z)
    #      - (2/pi) sum (-1)^{k+1} (J_{2k-1} - J_{2k+1})/k
    acc1 = 0.0
    for k in range(1, start // 2):
        acc1 += ((-1.0) ** (k + 1)) * (js[2 * k - 1] - js[2 * k + 1]) / k
    y1 = (2.0 / np.pi) * (log_term * js[1] - js[0] / z) - (2.0 / np.pi) * acc1
    return js[0], y0, js[1], y1


def _asymptotic(z: float, nu: int) -> complex:
    """Large-argument expansion, truncated at the smallest term."""
    mu = 4.0 * nu * nu
    chi = z - 0.5 * nu * np.pi - 0.25 * np.pi
    term = 1.0 + 0.0j
    total = term
    prev = np.inf
    for k in range(1, 40):
        term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * z) * 1j
        if abs(term) >= prev:
            break
        total += term
        prev = abs(term)
        if prev < 1e-17 * abs(total):
            break
    return np.sqrt(2.0 / (np.pi * z)) * np.exp(1j * chi) * total


def hankel1_pair(z: float):
    """(H0, H1) of the first kind at real z > 0."""
    z = float(z)
    if not z > 0.0:
        raise DomainError(f"Hankel argument must be positive, got {z}")
    if z >= _ASYMPTOTIC_CUT:
        return _asymptotic(z, 0), _asymptotic(z, 1)
    if z < _SERIES_CUT:
        j0, y0, j1, y1 = _series_pair(z)
    else:
        j0, y0, j1, y1 = _miller_pair(z)
    return complex(j0, y0), complex(j1, y1)


def hankel1_0(z: float) -> complex:
    return hankel1_pair(z)[0]


def hankel1_1(z: float) -> complex:
    return hankel1_pair(z)[1]
