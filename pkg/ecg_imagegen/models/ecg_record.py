"""
ECG record model - multi-lead time series used as rendering ground truth
"""
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from .validation import ParameterError, require


STANDARD_LEADS: Tuple[str, ...] = (
    'I', 'II', 'III', 'aVR', 'aVL', 'aVF', 'V1', 'V2', 'V3', 'V4', 'V5', 'V6'
)


@dataclass(frozen=True, eq=False)
class EcgRecord:
    """Multi-lead ECG in millivolts

    ``samples`` has shape (n_leads, n_samples) and is stored read-only so a
    record can be shared between workers without copying.
    """

    lead_names: Tuple[str, ...]
    samples: np.ndarray
    fs: float
    record_id: str = ""

    def __post_init__(self):
        names = tuple(self.lead_names)
        data = np.array(self.samples, dtype=np.float64, copy=True)
        if data.ndim == 1:
            data = data[np.newaxis, :]
        require(self.fs > 0, 'fs', f"sampling rate must be positive, got {self.fs}")
        require(len(names) >= 1, 'lead_names', "at least one lead is required")
        require(len(set(names)) == len(names), 'lead_names', f"lead names must be unique: {names}")
        require(data.ndim == 2 and data.shape[0] == len(names), 'samples',
                f"expected {len(names)} lead rows, got shape {data.shape}")
        require(bool(np.all(np.isfinite(data))), 'samples', "all samples must be finite")
        data.setflags(write=False)
        object.__setattr__(self, 'lead_names', names)
        object.__setattr__(self, 'samples', data)
        object.__setattr__(self, 'fs', float(self.fs))

    @property
    def n_samples(self) -> int:
        return int(self.samples.shape[1])

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs

    def lead(self, name: str) -> np.ndarray:
        """Return the samples of one lead

        Raises:
            KeyError: If the lead is not part of the record
        """
        try:
            return self.samples[self.lead_names.index(name)]
        except ValueError:
            raise KeyError(f"Lead {name!r} not in record {self.record_id or '<unnamed>'}")

    def with_samples(self, samples: np.ndarray, fs: float = None) -> "EcgRecord":
        """Copy of this record with new sample data (and optionally a new rate)"""
        return EcgRecord(self.lead_names, samples, self.fs if fs is None else fs, self.record_id)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EcgRecord):
            return NotImplemented
        return (self.lead_names == other.lead_names and self.fs == other.fs
                and self.samples.shape == other.samples.shape
                and bool(np.array_equal(self.samples, other.samples)))

    def __hash__(self):
        return hash((self.lead_names, self.fs, self.samples.tobytes()))


class SignalNoiseKind(str, Enum):
    NONE = 'none'
    AWGN = 'awgn'
    BASELINE_WANDER = 'baseline_wander'
    BOTH = 'both'

    @property
    def has_awgn(self) -> bool:
        return self in (SignalNoiseKind.AWGN, SignalNoiseKind.BOTH)

    @property
    def has_wander(self) -> bool:
        return self in (SignalNoiseKind.BASELINE_WANDER, SignalNoiseKind.BOTH)


@dataclass(frozen=True)
class SignalNoiseSpec:
    """Time-series contamination parameters"""

    kind: SignalNoiseKind = SignalNoiseKind.NONE
    snr_db: float = 30.0
    wander_freq_hz: float = 0.3
    wander_amp_mv: float = 0.05

    def __post_init__(self):
        try:
            object.__setattr__(self, 'kind', SignalNoiseKind(self.kind))
        except ValueError:
            raise ParameterError('kind', f"unknown noise kind {self.kind!r}")
        if self.kind.has_awgn:
            require(bool(np.isfinite(self.snr_db)), 'snr_db', "must be finite when AWGN is requested")
        require(0 < self.wander_freq_hz <= 1, 'wander_freq_hz', f"must be in (0, 1] Hz, got {self.wander_freq_hz}")
        require(self.wander_amp_mv >= 0, 'wander_amp_mv', f"must be >= 0, got {self.wander_amp_mv}")

