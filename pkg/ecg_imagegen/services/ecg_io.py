"""
ECG I/O Service - Parse, cut, resample and contaminate multi-lead records
"""
import csv
import io
import logging
import re
from enum import Enum
from pathlib import Path
from typing import BinaryIO, Dict, Optional, Union

import numpy as np

from ..models.ecg_record import EcgRecord, SignalNoiseSpec
from ..models.validation import ParameterError


logger = logging.getLogger(__name__)


class EcgIOError(Exception):
    """Base exception for record ingestion and signal preparation"""
    pass


class EcgFormatError(EcgIOError):
    """Malformed header, token or document"""
    pass


class LengthMismatchError(EcgIOError):
    """Ragged rows or a sample count that disagrees with the header"""
    pass


class EcgValueError(EcgIOError):
    """Non-finite sample value"""
    pass


class WindowRangeError(EcgIOError):
    """Segment window outside the record"""
    pass


class DegeneratePowerError(EcgIOError):
    """AWGN requested on a lead with zero signal power"""
    pass


class RecordFormat(str, Enum):
    CSV = 'csv'
    WFDB_LIKE = 'wfdb_like'


Source = Union[bytes, str, Path, BinaryIO]

_HEADER_KEY = re.compile(r'(\w+)=(\S*)')


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, (str, Path)):
        with open(source, 'rb') as f:
            data = f.read()
    else:
        data = source.read()
    try:
        return data.decode('utf-8-sig')
    except UnicodeDecodeError as e:
        raise EcgFormatError(f"Record is not valid UTF-8: {e}")


def _make_record(names, samples, fs, record_id: str) -> EcgRecord:
    try:
        return EcgRecord(tuple(names), samples, fs, record_id)
    except ParameterError as e:
        raise EcgFormatError(f"Invalid record: {e}")


def _parse_csv(text: str, fs: Optional[float], record_id: str) -> EcgRecord:
    if fs is None or fs <= 0:
        raise EcgFormatError("CSV records need a positive sampling rate (fs argument)")
    rows = [row for row in csv.reader(io.StringIO(text)) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise EcgFormatError("Empty CSV record")
    names = [cell.strip() for cell in rows[0]]
    if any(not name for name in names):
        raise EcgFormatError(f"Header contains an empty lead name: {rows[0]}")
    if len(rows) < 2:
        raise EcgFormatError("CSV record has a header but no samples")

    samples = np.empty((len(rows) - 1, len(names)), dtype=np.float64)
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(names):
            raise LengthMismatchError(f"Row {i} has {len(row)} values, header lists {len(names)} leads")
        try:
            samples[i - 2] = [float(cell) for cell in row]
        except ValueError:
            raise EcgFormatError(f"Row {i} contains a non-numeric value: {row}")
        if not np.all(np.isfinite(samples[i - 2])):
            raise EcgValueError(f"Row {i} contains a non-finite value: {row}")

    return _make_record(names, samples.T, fs, record_id)


def _parse_header(line: str) -> Dict[str, str]:
    pairs = dict(_HEADER_KEY.findall(line))
    if not pairs:
        raise EcgFormatError(f"Expected key=value pairs, got {line!r}")
    return pairs


def _parse_wfdb_like(text: str, record_id: str) -> EcgRecord:
    lines = [line.strip() for line in text.splitlines()]
    lines = [line for line in lines if line and not line.startswith('#')]
    if not lines:
        raise EcgFormatError("Empty wfdb_like record")

    header = _parse_header(lines[0])
    body_start = 1
    if 'gain' not in header and len(lines) > 1 and lines[1].startswith('gain='):
        header.update(_parse_header(lines[1]))
        body_start = 2
    missing = [key for key in ('fs', 'n', 'leads', 'gain') if key not in header]
    if missing:
        raise EcgFormatError(f"wfdb_like header is missing: {', '.join(missing)}")

    try:
        fs = float(header['fs'])
        n = int(header['n'])
        gain = float(header['gain'])
    except ValueError:
        raise EcgFormatError(f"Malformed wfdb_like header values: {header}")
    if not (np.isfinite(fs) and fs > 0) or n < 1:
        raise EcgFormatError(f"wfdb_like header needs fs > 0 and n >= 1, got fs={fs}, n={n}")
    if not (np.isfinite(gain) and gain > 0):
        raise EcgFormatError(f"gain must be positive, got {header['gain']}")
    names = [name.strip() for name in header['leads'].split(',') if name.strip()]
    if not names:
        raise EcgFormatError("wfdb_like header lists no leads")

    tokens = ' '.join(lines[body_start:]).split()
    try:
        values = np.array([int(token) for token in tokens], dtype=np.int64)
    except ValueError:
        raise EcgFormatError("wfdb_like body must contain whitespace-separated signed integers")
    if values.size != n * len(names):
        raise LengthMismatchError(
            f"wfdb_like body holds {values.size} integers, header implies {n} x {len(names)} = {n * len(names)}"
        )

    samples = values.reshape(n, len(names)).T.astype(np.float64) / gain
    return _make_record(names, samples, fs, record_id)


def parse_record(source: Source, fmt: Union[RecordFormat, str], fs: Optional[float] = None,
                 record_id: str = "") -> EcgRecord:
    """
    Parse a record from bytes, a path or a binary stream

    Args:
        source: Record content
        fmt: ``csv`` (header of lead names, one row per sample, mV) or
            ``wfdb_like`` (``fs= n= leads=`` header, ``gain=`` line, sample-major integers)
        fs: Sampling rate for csv records (wfdb_like carries its own)
        record_id: Identifier stored on the record

    Returns:
        Validated EcgRecord in millivolts

    Raises:
        EcgFormatError: Malformed header or token
        LengthMismatchError: Ragged rows or wrong integer count
        EcgValueError: Non-finite sample
    """
    try:
        fmt = RecordFormat(fmt)
    except ValueError:
        raise EcgFormatError(f"Unknown record format: {fmt!r}")
    if not record_id and isinstance(source, (str, Path)):
        record_id = Path(source).stem

    text = _read_text(source)
    if fmt is RecordFormat.CSV:
        record = _parse_csv(text, fs, record_id)
    else:
        record = _parse_wfdb_like(text, record_id)
    logger.debug("Parsed %s record %s: %d leads, %d samples at %g Hz",
                 fmt.value, record_id or '<unnamed>', len(record.lead_names), record.n_samples, record.fs)
    return record


def write_record(rec: EcgRecord, fmt: Union[RecordFormat, str] = RecordFormat.CSV, gain: float = 1000.0) -> bytes:
    """
    Serialize a record in a format ``parse_record`` reads back

    csv keeps full float precision; wfdb_like quantizes to 1/gain mV.
    """
    fmt = RecordFormat(fmt)
    out = io.StringIO()
    if fmt is RecordFormat.CSV:
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(rec.lead_names)
        for row in rec.samples.T:
            writer.writerow([repr(float(v)) for v in row])
    else:
        out.write(f"fs={rec.fs:g} n={rec.n_samples} leads={','.join(rec.lead_names)}\n")
        out.write(f"gain={gain:g}\n")
        values = np.rint(rec.samples.T * gain).astype(np.int64)
        for row in values:
            out.write(' '.join(str(v) for v in row))
            out.write('\n')
    return out.getvalue().encode('utf-8')


def segment_and_resample(rec: EcgRecord, start_s: float, dur_s: float, target_fs: float) -> EcgRecord:
    """
    Cut a window out of a record and resample it by linear interpolation

    Output sample k sits at ``start_s + k / target_fs``; the output holds
    ``round(dur_s * target_fs)`` samples.

    Raises:
        WindowRangeError: If the window leaves the record
        ParameterError: If target_fs is not positive
    """
    if not target_fs > 0:
        raise ParameterError('target_fs', f"must be positive, got {target_fs}")
    eps = 1e-9 * max(1.0, rec.duration_s)
    if start_s < 0 or dur_s <= 0 or start_s + dur_s > rec.duration_s + eps:
        raise WindowRangeError(
            f"Window [{start_s}, {start_s + dur_s}] s is outside record {rec.record_id or '<unnamed>'} "
            f"of {rec.duration_s:g} s"
        )

    n_out = int(round(dur_s * target_fs))
    if n_out < 1:
        raise WindowRangeError(f"Window of {dur_s} s holds no sample at {target_fs} Hz")

    offset = start_s * rec.fs
    if target_fs == rec.fs and abs(offset - round(offset)) < 1e-9:
        first = int(round(offset))
        if first + n_out <= rec.n_samples:
            return rec.with_samples(rec.samples[:, first:first + n_out])

    t_src = np.arange(rec.n_samples) / rec.fs
    t_out = start_s + np.arange(n_out) / target_fs
    out = np.vstack([np.interp(t_out, t_src, lead) for lead in rec.samples])
    return rec.with_samples(out, fs=target_fs)


def add_signal_noise(rec: EcgRecord, spec: SignalNoiseSpec, seed: int) -> EcgRecord:
    """
    Add white Gaussian noise and/or sinusoidal baseline wander

    AWGN variance per lead is ``mean(x**2) / 10**(snr_db / 10)``; wander is
    ``wander_amp_mv * sin(2*pi*wander_freq_hz*t)``.

    Raises:
        DegeneratePowerError: If AWGN is requested on an all-zero lead
    """
    if not spec.kind.has_awgn and not spec.kind.has_wander:
        return rec

    rng = np.random.default_rng(seed)
    out = np.array(rec.samples, dtype=np.float64)
    if spec.kind.has_awgn:
        for i, name in enumerate(rec.lead_names):
            power = float(np.mean(out[i] ** 2))
            if power == 0.0:
                raise DegeneratePowerError(f"Lead {name} has zero power; AWGN at {spec.snr_db} dB is undefined")
            sigma = np.sqrt(power / 10.0 ** (spec.snr_db / 10.0))
            out[i] += rng.normal(0.0, sigma, rec.n_samples)
    if spec.kind.has_wander:
        t = np.arange(rec.n_samples) / rec.fs
        out += spec.wander_amp_mv * np.sin(2.0 * np.pi * spec.wander_freq_hz * t)
    return rec.with_samples(out)


def read_record(path: Union[str, Path], fmt: Union[RecordFormat, str], fs: Optional[float] = None) -> EcgRecord:
    """Parse a record file, using its stem as record id"""
    path = Path(path)
    return parse_record(path, fmt, fs=fs, record_id=path.stem)
