"""Shared fixtures: small pages and synthetic 12-lead records"""
from pathlib import Path

import numpy as np
import pytest

from ecg_imagegen.core.config import DistortionConfig, WrinklesConfig
from ecg_imagegen.models import EcgRecord, PaperSpec, STANDARD_LEADS
from ecg_imagegen.services.ecg_io import RecordFormat, write_record


def sine_record(fs: float = 500.0, duration_s: float = 10.0, amp_mv: float = 0.5, freq_hz: float = 1.0,
                record_id: str = "sine") -> EcgRecord:
    """12 leads of phase-shifted sinusoids"""
    t = np.arange(int(round(fs * duration_s))) / fs
    samples = np.vstack([amp_mv * np.sin(2 * np.pi * freq_hz * t + 0.4 * i) for i in range(len(STANDARD_LEADS))])
    return EcgRecord(STANDARD_LEADS, samples, fs, record_id)


def constant_record(value_mv: float, fs: float = 500.0, duration_s: float = 10.0,
                    record_id: str = "flat") -> EcgRecord:
    n = int(round(fs * duration_s))
    return EcgRecord(STANDARD_LEADS, np.full((len(STANDARD_LEADS), n), value_mv), fs, record_id)


def write_csv(path: Path, rec: EcgRecord) -> Path:
    path.write_bytes(write_record(rec, RecordFormat.CSV))
    return path


@pytest.fixture
def small_paper() -> PaperSpec:
    """US letter at 100 dpi"""
    return PaperSpec(dpi=100.0, width_px=1100, height_px=850)


@pytest.fixture
def paper_200() -> PaperSpec:
    return PaperSpec()


@pytest.fixture
def record() -> EcgRecord:
    return sine_record()


@pytest.fixture
def clean_config(small_paper) -> DistortionConfig:
    """Every artifact stage off, 100 dpi page"""
    return DistortionConfig(master_seed=7, paper=small_paper).without_distortions()


@pytest.fixture
def full_config(small_paper) -> DistortionConfig:
    """Every stage on with a cheap wrinkle texture"""
    return DistortionConfig(master_seed=7, paper=small_paper,
                            wrinkles=WrinklesConfig(block_px=24, candidates=8, seed_texture_px=64))


@pytest.fixture
def record_dir(tmp_path) -> Path:
    """Three small csv records"""
    directory = tmp_path / "records"
    directory.mkdir()
    for i in range(3):
        write_csv(directory / f"rec{i}.csv", sine_record(amp_mv=0.3 + 0.2 * i, record_id=f"rec{i}"))
    return directory
