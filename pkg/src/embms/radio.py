"""Parametric link model: path loss, SINR, CQI and RB accounting.

Path loss follows the classic macro-cell law ``128.1 + 37.6 log10(d_km)``;
links are deterministic (no shadowing, no fading). Power and noise are
expressed per resource block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .topology import CellGrid

# SINR (dB) needed for CQI 1..15 at ~10% BLER
CQI_SINR_THRESHOLDS_DB = np.array([
    -6.7, -4.7, -2.3, 0.2, 2.4, 4.3, 5.9, 8.1, 10.3, 11.7, 14.1, 16.3, 18.7, 21.0, 22.7,
])

# bits per modulation symbol for CQI 0..15
CQI_SPECTRAL_EFFICIENCY = np.array([
    0.0, 0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766,
    1.9141, 2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
])

DATA_RES_PER_RB = 144
MIN_DISTANCE_M = 25.0


@dataclass(frozen=True)
class RadioConfig:
    tx_power_dbm: float = 43.0
    enb_antenna_gain_dbi: float = 14.0
    ue_antenna_gain_dbi: float = 0.0
    enb_height_m: float = 25.0
    ue_height_m: float = 1.5
    bandwidth_mhz: float = 10.0
    carrier_ghz: float = 2.6
    noise_figure_db: float = 9.0
    rb_bandwidth_hz: float = 180e3
    rbs_per_slot: int = 50
    mimo_gain_db: float = 3.0
    rbs_per_frame: int = 500
    subframes_per_frame: int = 10
    mbsfn_capable_subframes: int = 6
    frame_ms: int = 10

    def __post_init__(self):
        if self.rbs_per_frame % self.subframes_per_frame:
            raise ValueError("rbs_per_frame must be divisible by subframes_per_frame")
        if not 0 < self.mbsfn_capable_subframes <= self.subframes_per_frame:
            raise ValueError("mbsfn_capable_subframes out of range")

    @property
    def rbs_per_subframe(self) -> int:
        return self.rbs_per_frame // self.subframes_per_frame

    @property
    def broadcast_cap(self) -> int:
        # constraint (iii): 60% of the frame
        return self.rbs_per_subframe * self.mbsfn_capable_subframes

    @property
    def tx_power_per_rb_dbm(self) -> float:
        return self.tx_power_dbm - 10.0 * math.log10(self.rbs_per_slot)

    @property
    def noise_dbm(self) -> float:
        return -174.0 + 10.0 * math.log10(self.rb_bandwidth_hz) + self.noise_figure_db


@dataclass(frozen=True)
class LinkQuality:
    sinr_db: float
    cqi: int
    bits_per_rb: int


def path_loss_db(distance, config: RadioConfig | None = None):
    """Macro-cell path loss in dB; distances below 25 m are clamped."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    d = np.maximum(d, MIN_DISTANCE_M)
    pl = 128.1 + 37.6 * np.log10(d / 1000.0)
    return float(pl) if pl.ndim == 0 else pl


def rx_power_mw(positions, centers, config: RadioConfig) -> np.ndarray:
    """Received per-RB power (mW), shape (n_positions, n_cells)."""
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    ctr = np.atleast_2d(np.asarray(centers, dtype=float))
    d = np.hypot(pos[:, None, 0] - ctr[None, :, 0], pos[:, None, 1] - ctr[None, :, 1])
    d = np.maximum(d, MIN_DISTANCE_M)
    gain_db = config.tx_power_per_rb_dbm + config.enb_antenna_gain_dbi + config.ue_antenna_gain_dbi
    return 10.0 ** ((gain_db - path_loss_db(d)) / 10.0)


def noise_mw(config: RadioConfig) -> float:
    return 10.0 ** (config.noise_dbm / 10.0)


def sinr_db_from_powers(signal, total, config: RadioConfig):
    """SINR when ``signal`` is the useful part of ``total`` received power."""
    interference = np.maximum(np.asarray(total) - np.asarray(signal), 0.0)
    return 10.0 * np.log10(np.asarray(signal) / (noise_mw(config) + interference))


def sinr_broadcast(ue_position, area_cells, grid: CellGrid, config: RadioConfig) -> float:
    """MBSFN-combined SINR: every cell of the area contributes useful power."""
    area = sorted(set(area_cells))
    if not area:
        raise ValueError("area_cells must be non-empty")
    for c in area:
        if not 0 <= c < len(grid):
            raise KeyError(f"unknown cell id {c}")
    p = rx_power_mw([ue_position], grid.centers, config)[0]
    signal = p[area].sum()
    return float(sinr_db_from_powers(signal, p.sum(), config))


def sinr_unicast(ue_position, serving_cell: int, grid: CellGrid, config: RadioConfig) -> float:
    return sinr_broadcast(ue_position, [serving_cell], grid, config)


def cqi_from_sinr(sinr_db):
    """Step mapping; 0 below the CQI-1 threshold."""
    cqi = np.searchsorted(CQI_SINR_THRESHOLDS_DB, np.asarray(sinr_db, dtype=float), side="right")
    return int(cqi) if np.ndim(cqi) == 0 else cqi


BITS_PER_RB = np.floor(CQI_SPECTRAL_EFFICIENCY * DATA_RES_PER_RB).astype(np.int64)


def bits_per_rb(cqi):
    c = np.asarray(cqi)
    if np.any((c < 0) | (c > 15)):
        raise ValueError(f"cqi out of range 0..15: {cqi}")
    out = BITS_PER_RB[c]
    return int(out) if out.ndim == 0 else out


def link_quality(sinr_db: float, config: RadioConfig) -> LinkQuality:
    """CQI and bits/RB seen by a receiver, MIMO bonus included."""
    cqi = cqi_from_sinr(sinr_db + config.mimo_gain_db)
    return LinkQuality(float(sinr_db), cqi, bits_per_rb(cqi))


def bits_from_sinr(sinr_db, config: RadioConfig):
    return bits_per_rb(cqi_from_sinr(np.asarray(sinr_db) + config.mimo_gain_db))


def rb_demand_per_frame(service_rate: int, bits: int, frame_ms: int = 10) -> int | None:
    """RBs per frame needed to carry ``service_rate`` (bit/s); None when infeasible."""
    if service_rate < 0 or bits < 0:
        raise ValueError("service_rate and bits_per_rb must be non-negative")
    if service_rate == 0:
        return 0
    if bits == 0:
        return None
    # exact integer ceil of rate * frame / bits
    return -(-int(service_rate) * frame_ms // (1000 * int(bits)))


def demand_bits_per_frame(service_rate: int, frame_ms: int = 10) -> float:
    return service_rate * frame_ms / 1000.0
