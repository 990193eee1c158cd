"""Cache management for resumable simulation runs."""

import json
import logging
import hashlib
from pathlib import Path
from typing import Dict, Any, Optional

from .models import ReplicateReport


logger = logging.getLogger(__name__)


class ReplicateCache:
    """Stores one JSON file per finished (scenario, method, replicate) cell."""

    def __init__(self, cache_dir: str, enabled: bool = True):
        """
        Initialize the cache.

        Args:
            cache_dir: Directory to store cache files
            enabled: Whether caching is enabled
        """
        self.cache_dir = Path(cache_dir)
        self.enabled = enabled

        if self.enabled:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            logger.info(f"Cache enabled at: {self.cache_dir}")
        else:
            logger.info("Cache disabled")

    def _cell_path(self, fingerprint: str, replicate: int, method_key: str) -> Path:
        """
        Path of the cache file for one cell.

        Args:
            fingerprint: Scenario fingerprint
            replicate: Replicate index
            method_key: Method label (with its concentration, if any)

        Returns:
            Cache file path
        """
        digest = hashlib.sha256(f"{fingerprint}|{method_key}|{replicate}".encode()).hexdigest()[:16]
        return self.cache_dir / f"cell_{fingerprint}_{digest}.json"

    def get(self, fingerprint: str, replicate: int, method_key: str) -> Optional[ReplicateReport]:
        """
        Get a cached replicate result.

        Args:
            fingerprint: Scenario fingerprint
            replicate: Replicate index
            method_key: Method label (with its concentration, if any)

        Returns:
            ReplicateReport if cached, None otherwise
        """
        if not self.enabled:
            return None

        cache_path = self._cell_path(fingerprint, replicate, method_key)
        if not cache_path.exists():
            return None

        try:
            with open(cache_path, 'r') as f:
                data = json.load(f)
            report = ReplicateReport.from_dict(data['report'])
            logger.debug(f"Cache hit: {method_key} replicate {replicate}")
            return report
        except Exception as e:
            logger.warning(f"Failed to load cache file {cache_path}: {e}")
            return None

    def save(self, fingerprint: str, method_key: str, report: ReplicateReport) -> None:
        """
        Save a finished replicate result.

        Args:
            fingerprint: Scenario fingerprint
            method_key: Method label (with its concentration, if any)
            report: Successful replicate report
        """
        if not self.enabled:
            return

        cache_path = self._cell_path(fingerprint, report.replicate, method_key)
        try:
            with open(cache_path, 'w') as f:
                json.dump({'fingerprint': fingerprint, 'method_key': method_key, 'report': report.to_dict()}, f, indent=2)
            logger.debug(f"Cached {method_key} replicate {report.replicate}")
        except Exception as e:
            logger.warning(f"Failed to save cache file {cache_path}: {e}")

    def clear(self) -> int:
        """
        Delete every cached cell.

        Returns:
            Number of files removed
        """
        if not self.cache_dir.exists():
            return 0
        count = 0
        for cache_file in self.cache_dir.glob('cell_*.json'):
            try:
                cache_file.unlink()
                count += 1
            except OSError as e:
                logger.warning(f"Failed to delete {cache_file}: {e}")
        logger.info(f"Cleared {count} cache file(s)")
        return count

    def get_cache_stats(self) -> Dict[str, Any]:
        """
        Get cache statistics.

        Returns:
            Dictionary with enabled flag, directory, file count and size
        """
        if not self.enabled or not self.cache_dir.exists():
            return {'enabled': self.enabled, 'cells': 0, 'total_size_mb': 0.0}

        files = list(self.cache_dir.glob('cell_*.json'))
        total_size = sum(f.stat().st_size for f in files)
        return {
            'enabled': True,
            'cache_dir': str(self.cache_dir),
            'cells': len(files),
            'total_size_mb': round(total_size / (1024 * 1024), 2),
        }
