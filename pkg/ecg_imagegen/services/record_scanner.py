"""
Record Scanner - Discover ECG record files in a directory
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .ecg_io import RecordFormat


logger = logging.getLogger(__name__)


class RecordScanner:
    """Scanner for discovering record files in a directory"""

    # Supported record extensions
    SUPPORTED_EXTENSIONS: Dict[str, RecordFormat] = {
        '.csv': RecordFormat.CSV,
        '.ecg': RecordFormat.WFDB_LIKE,
    }

    @classmethod
    def format_of(cls, filepath: Path) -> Optional[RecordFormat]:
        """
        Record format implied by a file extension

        Args:
            filepath: Path to the file

        Returns:
            RecordFormat, or None for unsupported files
        """
        return cls.SUPPORTED_EXTENSIONS.get(filepath.suffix.lower())

    @classmethod
    def is_supported_record(cls, filepath: Path) -> bool:
        return cls.format_of(filepath) is not None

    @classmethod
    def scan_directory(cls, directory: Path) -> List[Tuple[Path, RecordFormat]]:
        """
        Scan a directory (not recursively) for record files

        Ground-truth CSVs written by the generator (``*_gt.csv``) are skipped
        so an output directory can be fed back as input.

        Args:
            directory: Path to the directory to scan

        Returns:
            (path, format) pairs sorted by file name
        """
        records: List[Tuple[Path, RecordFormat]] = []
        directory = Path(directory)
        if not directory.exists() or not directory.is_dir():
            logger.warning("Record directory %s does not exist", directory)
            return records

        for file_path in sorted(directory.iterdir()):
            fmt = cls.format_of(file_path)
            if not file_path.is_file() or fmt is None:
                continue
            if file_path.name.endswith('_gt.csv'):
                continue
            records.append((file_path, fmt))
        logger.debug("Found %d record file(s) in %s", len(records), directory)
        return records
