"""User placement, distance pathloss and time/frequency-selective fading.

Every drop owns one :class:`FadingProcess`. Each call to
:func:`next_realization` advances it by one 1 ms slot and samples the
tap-delay-line frequency response at the subband centres.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import j0

__all__ = [
    "SPEED_OF_LIGHT",
    "SLOT_DURATION_S",
    "ETU_DELAYS_S",
    "ETU_POWERS_DB",
    "CellGeometry",
    "UserPlacement",
    "ChannelRealization",
    "FadingProcess",
    "doppler_hz",
    "pathloss_db",
    "pathloss_linear",
    "place_users",
    "next_realization",
]

SPEED_OF_LIGHT = 299_792_458.0
SLOT_DURATION_S = 1e-3

# 3GPP TS 36.104 Annex B.2, extended typical urban
ETU_DELAYS_S = np.array([0, 50, 120, 200, 230, 500, 1600, 2300, 5000]) * 1e-9
ETU_POWERS_DB = np.array([-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0])


@dataclass(frozen=True)
class CellGeometry:
    """Single-cell radio parameters.

    Power is given in dBm and converted to mW once, on construction; all
    downstream math uses ``p_max_mw``.
    """

    radius_m: float = 500.0
    bs_power_dbm: float = 46.0
    bandwidth_hz: float = 10e6
    num_subbands: int = 128
    noise_psd: float = 4e-18  # mW/Hz
    carrier_hz: float = 2e9
    min_distance_m: float = 35.0
    p_max_mw: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.radius_m > 0:
            raise ValueError(f"radius_m must be positive, got {self.radius_m}")
        if not 0 < self.min_distance_m < self.radius_m:
            raise ValueError(
                f"min_distance_m must lie in (0, radius_m), got {self.min_distance_m}")
        if int(self.num_subbands) != self.num_subbands or self.num_subbands < 1:
            raise ValueError(f"num_subbands must be an integer >= 1, got {self.num_subbands}")
        if not self.bandwidth_hz > 0:
            raise ValueError(f"bandwidth_hz must be positive, got {self.bandwidth_hz}")
        if not self.noise_psd > 0:
            raise ValueError(f"noise_psd must be positive, got {self.noise_psd}")
        if not self.carrier_hz > 0:
            raise ValueError(f"carrier_hz must be positive, got {self.carrier_hz}")
        object.__setattr__(self, "p_max_mw", 10.0 ** (self.bs_power_dbm / 10.0))

    @property
    def subband_hz(self) -> float:
        return self.bandwidth_hz / self.num_subbands

    @property
    def noise_power_mw(self) -> float:
        """Thermal noise power on one subband."""
        return self.noise_psd * self.subband_hz

    def subband_centers_hz(self) -> np.ndarray:
        """Baseband centre frequency of each subband, symmetric around DC."""
        s = np.arange(self.num_subbands)
        return (s + 0.5) * self.subband_hz - self.bandwidth_hz / 2


@dataclass(frozen=True)
class UserPlacement:
    user_id: int
    distance_m: float
    pathloss_db: float


@dataclass(frozen=True)
class ChannelRealization:
    """Channel state of one slot.

    ``gain2`` and ``noise_power`` have shape ``(S, K)``: squared channel
    magnitude including pathloss, and noise power in mW.
    """

    slot: int
    gain2: np.ndarray
    noise_power: np.ndarray

    @property
    def normalized_gain(self) -> np.ndarray:
        return self.gain2 / self.noise_power


def doppler_hz(velocity_kmh: float, carrier_hz: float) -> float:
    """Maximum Doppler shift ``v * f_c / c``."""
    return velocity_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT


def pathloss_db(distance_m):
    """Macro-cell pathloss ``128.1 + 37.6 log10(d_km)`` in dB."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = 128.1 + 37.6 * np.log10(d / 1000.0)
    return float(out) if out.ndim == 0 else out


def pathloss_linear(distance_m):
    """Linear power gain ``10^(-PL/10)``; strictly decreasing in distance."""
    return np.power(10.0, -pathloss_db(distance_m) / 10.0)


def place_users(num_users: int, geometry: CellGeometry,
                rng: np.random.Generator) -> list[UserPlacement]:
    """Drop users uniformly over the annulus ``[min_distance, radius]``.

    Uniform area density means ``r**2`` is uniform on
    ``[min_distance**2, radius**2]``.
    """
    if num_users < 1:
        raise ValueError(f"num_users must be >= 1, got {num_users}")
    r0, r1 = geometry.min_distance_m, geometry.radius_m
    u = rng.random(num_users)
    d = np.sqrt(r0 ** 2 + u * (r1 ** 2 - r0 ** 2))
    pl = pathloss_db(d)
    return [UserPlacement(k, float(d[k]), float(np.atleast_1d(pl)[k]))
            for k in range(num_users)]


class FadingProcess:
    """Per-user tap-delay-line Rayleigh fading, one step per slot.

    Parameters
    ----------
    num_users : int
        Number of independent user links.
    geometry : CellGeometry
        Supplies subband centre frequencies.
    doppler : float
        Maximum Doppler shift in Hz.
    rng : numpy.random.Generator
        Consumed exclusively by this process.
    method : {"ar1", "sos"}
        ``"ar1"`` evolves each tap as a first-order Gauss-Markov process whose
        lag-1 correlation is ``J0(2 pi f_d dt)``. ``"sos"`` uses a
        sum-of-sinusoids (Clarke/Jakes) generator with ``num_sinusoids``
        rays per tap.
    tap_delays, tap_powers_db : array_like, optional
        Power-delay profile; defaults to ETU. Powers are normalised to sum 1.
    """

    def __init__(self, num_users: int, geometry: CellGeometry, doppler: float,
                 rng: np.random.Generator, method: str = "ar1",
                 tap_delays=None, tap_powers_db=None, num_sinusoids: int = 16,
                 slot_duration: float = SLOT_DURATION_S):
        if method not in ("ar1", "sos"):
            raise ValueError(f"unknown fading method {method!r}")
        if doppler < 0:
            raise ValueError("doppler must be nonnegative")
        delays = ETU_DELAYS_S if tap_delays is None else np.asarray(tap_delays, float)
        pdb = ETU_POWERS_DB if tap_powers_db is None else np.asarray(tap_powers_db, float)
        if delays.shape != pdb.shape:
            raise ValueError("tap_delays and tap_powers_db must have equal length")
        powers = 10.0 ** (pdb / 10.0)
        self.tap_powers = powers / powers.sum()
        self.tap_delays = delays
        self.doppler_hz = float(doppler)
        self.slot_duration = slot_duration
        self.method = method
        self.num_users = num_users
        self.slot = 0
        self._rng = rng
        # (S, L) steering from tap delays to subband centres
        f = geometry.subband_centers_hz()
        self._freq_response = np.exp(-2j * np.pi * np.outer(f, delays))
        self.rho = float(j0(2 * np.pi * self.doppler_hz * slot_duration))
        shape = (num_users, delays.size)
        if method == "ar1":
            self._taps = _cn(rng, shape)
        else:
            n = num_sinusoids
            self._cos_angles = np.cos(rng.uniform(-np.pi, np.pi, shape + (n,)))
            self._phases = rng.uniform(-np.pi, np.pi, shape + (n,))
            self._taps = self._sos_taps(0.0)

    def _sos_taps(self, t: float) -> np.ndarray:
        n = self._phases.shape[-1]
        arg = 2 * np.pi * self.doppler_hz * self._cos_angles * t + self._phases
        return np.exp(1j * arg).sum(axis=-1) / np.sqrt(n)

    def step(self) -> np.ndarray:
        """Advance one slot and return the complex fade, shape ``(S, K)``."""
        if self.slot > 0:
            if self.method == "ar1":
                innov = _cn(self._rng, self._taps.shape)
                self._taps = self.rho * self._taps + np.sqrt(1.0 - self.rho ** 2) * innov
            else:
                self._taps = self._sos_taps(self.slot * self.slot_duration)
        self.slot += 1
        amp = self._taps * np.sqrt(self.tap_powers)
        return self._freq_response @ amp.T


def _cn(rng, shape):
    """Unit-power circular complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def next_realization(state: FadingProcess, placements, geometry: CellGeometry) -> ChannelRealization:
    """Advance ``state`` by one slot and build the slot's channel matrix."""
    fade = state.step()
    pl = np.array([10.0 ** (-p.pathloss_db / 10.0) for p in placements])
    gain2 = pl[None, :] * (fade.real ** 2 + fade.imag ** 2)
    # floor keeps a deep fade strictly positive for SIC ordering and log2
    gain2 = np.maximum(gain2, np.finfo(float).tiny)
    noise = np.full_like(gain2, geometry.noise_power_mw)
    return ChannelRealization(state.slot, gain2, noise)
