"""Quick tester for the full generation pipeline.

Renders one synthetic 12-lead record (sums of sinusoids) with the default
recipe and writes the page and its sidecar.

Usage:
    python scripts/render_sample.py /path/to/out_dir [seed]
"""
import sys
from pathlib import Path

import numpy as np

from ecg_imagegen.core import Config
from ecg_imagegen.models import STANDARD_LEADS, EcgRecord
from ecg_imagegen.services import generate_one


def synthetic_record(fs: float = 500.0, duration_s: float = 10.0) -> EcgRecord:
    t = np.arange(int(fs * duration_s)) / fs
    samples = np.vstack([
        0.8 * np.sin(2 * np.pi * 1.2 * t + k) + 0.2 * np.sin(2 * np.pi * 7.0 * t + 2 * k)
        for k in range(len(STANDARD_LEADS))
    ])
    return EcgRecord(STANDARD_LEADS, samples, fs, record_id="sample")


def main():
    if len(sys.argv) < 2:
        print("Usage: python scripts/render_sample.py /path/to/out_dir [seed]")
        return

    out_dir = Path(sys.argv[1])
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
    cfg = Config.get_default().with_seed(seed)

    print("Rendering...")
    image, meta = generate_one(synthetic_record(), cfg, 0)
    image.save(out_dir / "sample.png", dpi=cfg.paper.dpi)
    meta.save(out_dir / "sample.json")
    print("Stage timings (s):")
    for name, seconds in meta.timings.items():
        print(f"  {name:<16} {seconds:.3f}")


if __name__ == '__main__':
    main()
