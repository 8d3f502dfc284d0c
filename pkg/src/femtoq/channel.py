"""Propagation models, SINR, and capacity for the macro/femto downlink.

All link budgets are computed in the linear (milliwatt) domain; decibel
quantities appear only at the conversion boundary.
"""

from __future__ import annotations

import math

import numpy as np

_LN2 = math.log(2.0)


def dbm_to_mw(dbm: float) -> float:
    """Convert a power level in dBm to milliwatts."""
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    """Convert a power in milliwatts to dBm."""
    if mw <= 0.0:
        raise ValueError(f"power must be positive to express in dBm, got {mw}")
    return 10.0 * math.log10(mw)


def residential_pathloss_db(
    d: float, pl0: float = 62.3, exponent: float = 4.0, d0: float = 5.0
) -> float:
    """Log-distance path loss (dB) for outdoor residential links.

    ``pl0`` is the loss at the reference distance ``d0`` and ``exponent``
    the decay exponent; monotone nondecreasing in ``d`` for positive
    exponents.
    """
    if d <= 0.0:
        raise ValueError(f"distance must be positive, got {d}")
    if d0 <= 0.0:
        raise ValueError(f"reference distance must be positive, got {d0}")
    return pl0 + 10.0 * exponent * math.log10(d / d0)


def indoor_to_outdoor_pathloss_db(d: float, f_ghz: float) -> float:
    """Empirical femtocell indoor-to-outdoor path loss (dB).

    Combines a frequency-dependent penetration term with a log-distance
    term anchored at 5 m.
    """
    if d <= 0.0:
        raise ValueError(f"distance must be positive, got {d}")
    if f_ghz <= 0.0:
        raise ValueError(f"frequency must be positive, got {f_ghz}")
    frequency_term = -1.8 * f_ghz * f_ghz + 10.6 * f_ghz + 6.1
    distance_term = 62.3 + 32.0 * math.log10(d / 5.0)
    return frequency_term + distance_term


def gain_from_pathloss_db(pl_db: float) -> float:
    """Linear power gain corresponding to a path loss in dB."""
    return 10.0 ** (-pl_db / 10.0)


class GainMatrix:
    """Linear channel gains for every transmitter-receiver pair.

    Row 0 is the macro base station, rows ``1..M`` the femto base
    stations; column 0 is the macro user, columns ``1..M`` the femto
    users. Entries are dimensionless power ratios in ``(0, 1]``.
    """

    __slots__ = ("_gains",)

    def __init__(self, gains: np.ndarray):
        g = np.asarray(gains, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 2:
            raise ValueError(f"gain matrix must be square with M >= 1, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("gain matrix entries must be finite")
        if np.any(g <= 0.0) or np.any(g > 1.0):
            raise ValueError("gains must lie in (0, 1]; check node separations")
        g = g.copy()
        g.setflags(write=False)
        self._gains = g

    @property
    def m(self) -> int:
        """Number of femto base stations."""
        return self._gains.shape[0] - 1

    def as_array(self) -> np.ndarray:
        """Read-only (M+1) x (M+1) array, transmitter-major."""
        return self._gains

    def mbs_to_mue(self) -> float:
        return float(self._gains[0, 0])

    def fbs_to_mue(self, i: int) -> float:
        self._check_index(i)
        return float(self._gains[1 + i, 0])

    def mbs_to_fue(self, i: int) -> float:
        self._check_index(i)
        return float(self._gains[0, 1 + i])

    def fbs_to_fue(self, j: int, i: int) -> float:
        """Gain from femto station ``j`` to the user served by station ``i``."""
        self._check_index(j)
        self._check_index(i)
        return float(self._gains[1 + j, 1 + i])

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.m:
            raise IndexError(f"femto index {i} out of range for M={self.m}")


def build_gain_matrix(
    topology,
    *,
    pl0: float = 62.3,
    exponent: float = 4.0,
    d0: float = 5.0,
    f_ghz: float = 2.4,
) -> GainMatrix:
    """Compute the full gain matrix for a topology.

    Serving links (macro station to macro user, each femto station to its
    own user) and the macro-to-femto-user interference links use the
    residential model; femto-to-macro-user and femto-to-other-user links
    use the indoor-to-outdoor model.
    """
    from .topology import distance  # local import avoids a cycle

    m = topology.m
    gains = np.empty((m + 1, m + 1), dtype=float)

    def _residential(a, b) -> float:
        d = distance(a, b)
        if d == 0.0:
            raise ValueError("coincident transmitter/receiver positions")
        return gain_from_pathloss_db(residential_pathloss_db(d, pl0, exponent, d0))

    def _indoor_outdoor(a, b) -> float:
        d = distance(a, b)
        if d == 0.0:
            raise ValueError("coincident transmitter/receiver positions")
        return gain_from_pathloss_db(indoor_to_outdoor_pathloss_db(d, f_ghz))

    gains[0, 0] = _residential(topology.mbs, topology.mue)
    for i in range(m):
        gains[0, 1 + i] = _residential(topology.mbs, topology.fue[i])
        gains[1 + i, 0] = _indoor_outdoor(topology.fbs[i], topology.mue)
        for j in range(m):
            if i == j:
                gains[1 + i, 1 + i] = _residential(topology.fbs[i], topology.fue[i])
            else:
                gains[1 + j, 1 + i] = _indoor_outdoor(topology.fbs[j], topology.fue[i])
    return GainMatrix(gains)


def mue_sinr(
    p_bs_mw: float, fbs_powers_mw, gains: GainMatrix, noise_mw: float
) -> float:
    """SINR at the macro user under the given joint transmit powers."""
    powers = np.asarray(fbs_powers_mw, dtype=float)
    _check_powers(p_bs_mw, powers, gains, noise_mw)
    interference = float(powers @ gains.as_array()[1:, 0])
    return p_bs_mw * gains.mbs_to_mue() / (interference + noise_mw)


def fue_sinr(
    i: int, p_bs_mw: float, fbs_powers_mw, gains: GainMatrix, noise_mw: float
) -> float:
    """SINR at femto user ``i`` under the given joint transmit powers."""
    powers = np.asarray(fbs_powers_mw, dtype=float)
    _check_powers(p_bs_mw, powers, gains, noise_mw)
    if not 0 <= i < gains.m:
        raise IndexError(f"femto index {i} out of range for M={gains.m}")
    signal = powers[i] * gains.fbs_to_fue(i, i)
    cross = sum(powers[j] * gains.fbs_to_fue(j, i) for j in range(gains.m) if j != i)
    denom = p_bs_mw * gains.mbs_to_fue(i) + cross + noise_mw
    return signal / denom


def capacity_bps_hz(sinr: float) -> float:
    """Normalized Shannon capacity log2(1 + SINR) in b/s/Hz."""
    if sinr < 0.0:
        raise ValueError(f"SINR must be nonnegative, got {sinr}")
    return math.log1p(sinr) / _LN2


def evaluate_capacities(
    p_bs_mw: float, fbs_powers_mw, gains: GainMatrix, noise_mw: float
) -> tuple[float, np.ndarray]:
    """Vectorized capacities (macro user, all femto users) for a joint action.

    Matches the scalar ``mue_sinr``/``fue_sinr``/``capacity_bps_hz`` chain.
    """
    powers = np.asarray(fbs_powers_mw, dtype=float)
    _check_powers(p_bs_mw, powers, gains, noise_mw)
    g = gains.as_array()
    i_mue = float(powers @ g[1:, 0])
    c_mue = math.log1p(p_bs_mw * g[0, 0] / (i_mue + noise_mw)) / _LN2
    received = powers @ g[1:, 1:]  # received_i = sum_j p_j g[j -> fue_i]
    signal = powers * np.diag(g[1:, 1:])
    denom = received - signal + p_bs_mw * g[0, 1:] + noise_mw
    c_fue = np.log1p(signal / denom) / _LN2
    return c_mue, c_fue


def _check_powers(p_bs_mw: float, powers: np.ndarray, gains: GainMatrix, noise_mw: float) -> None:
    if noise_mw <= 0.0:
        raise ValueError(f"noise power must be positive, got {noise_mw}")
    if p_bs_mw < 0.0:
        raise ValueError(f"macro transmit power must be nonnegative, got {p_bs_mw}")
    if powers.shape != (gains.m,):
        raise ValueError(f"expected {gains.m} femto powers, got shape {powers.shape}")
    if np.any(powers < 0.0):
        raise ValueError("femto transmit powers must be nonnegative")
