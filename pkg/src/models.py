"""Data models for simulation scenarios, replicate results and fit reports."""

import hashlib
import json
import math
from dataclasses import dataclass, asdict, field
from typing import List, Dict, Any, Optional, Tuple

import numpy as np

from .distributions import METHOD_SLOTS
from .errors import ValidationError
from .gibbs import BlHyper, ChainConfig


METHOD_KINDS = ('dl', 'dl-grid', 'bl', 'hs')


@dataclass(frozen=True)
class MethodSpec:
    """One estimator of a scenario, parsed from a label such as 'dl', 'dl:0.5', 'dl-grid', 'bl' or 'hs'."""

    label: str
    kind: str
    a: Optional[float] = None  # only for fixed-a DL; None means 1/n

    @classmethod
    def parse(cls, label: str) -> 'MethodSpec':
        """
        Parse a method label.

        Args:
            label: Method label

        Returns:
            MethodSpec

        Raises:
            ValidationError: For unknown labels or a malformed DL concentration
        """
        text = label.strip().lower()
        if text.startswith('dl:'):
            try:
                a = float(text[3:])
            except ValueError:
                raise ValidationError(f"Invalid DL concentration in method '{label}'")
            if not 0.0 < a < 1.0:
                raise ValidationError(f"DL concentration must lie in (0, 1), got '{label}'")
            return cls(label=text, kind='dl', a=a)
        if text not in METHOD_KINDS:
            raise ValidationError(f"Unknown method '{label}' (expected one of dl, dl:<a>, dl-grid, bl, hs)")
        return cls(label=text, kind=text)

    def to_dict(self) -> Dict[str, Any]:
        """Convert MethodSpec to dictionary."""
        return asdict(self)


def parse_methods(labels) -> Tuple[MethodSpec, ...]:
    """Parse a list (or comma-separated string) of method labels, rejecting duplicates."""
    if isinstance(labels, str):
        labels = [part for part in labels.split(',') if part.strip()]
    methods = tuple(MethodSpec.parse(label) for label in labels)
    seen = [m.label for m in methods]
    if len(set(seen)) != len(seen):
        raise ValidationError(f"Duplicate methods in {seen}")
    if len(methods) >= METHOD_SLOTS:
        raise ValidationError(f"At most {METHOD_SLOTS - 1} methods per scenario")
    return methods


@dataclass(frozen=True)
class Scenario:
    """A simulation design: truth, replicate count, estimators and chain settings."""

    n: int
    q: int
    signal: float
    replicates: int = 20
    methods: Tuple[MethodSpec, ...] = ()
    chain: ChainConfig = ChainConfig()
    base_seed: int = 0
    signal_blocks: Optional[Tuple[Tuple[int, float], ...]] = None  # (count, value) runs from index 0
    a_grid: Optional[Tuple[float, ...]] = None
    bl: BlHyper = BlHyper()

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"n must be positive, got {self.n}")
        if self.replicates < 1:
            raise ValidationError(f"replicates must be positive, got {self.replicates}")
        if self.signal_blocks is None:
            if not 0 <= self.q < self.n:
                raise ValidationError(f"q must satisfy 0 <= q < n, got q={self.q}, n={self.n}")
            if self.q > 0 and not self.signal > 0:
                raise ValidationError(f"signal must be positive, got {self.signal}")
        else:
            blocks = tuple((int(count), float(value)) for count, value in self.signal_blocks)
            if any(count < 0 for count, _ in blocks) or sum(c for c, _ in blocks) > self.n:
                raise ValidationError(f"signal blocks {blocks} do not fit in n={self.n}")
            object.__setattr__(self, 'signal_blocks', blocks)
        if not 0 <= self.base_seed < 2 ** 64:
            raise ValidationError(f"base_seed must be a 64-bit unsigned integer, got {self.base_seed}")
        if len(self.methods) >= METHOD_SLOTS:
            raise ValidationError(f"At most {METHOD_SLOTS - 1} methods per scenario")

    def truth(self) -> np.ndarray:
        """theta_0: q leading entries at the signal level, or the block structure."""
        theta0 = np.zeros(self.n)
        if self.signal_blocks is None:
            theta0[: self.q] = self.signal
            return theta0
        start = 0
        for count, value in self.signal_blocks:
            theta0[start:start + count] = value
            start += count
        return theta0

    def to_dict(self) -> Dict[str, Any]:
        """Convert Scenario to dictionary."""
        return {
            'n': self.n,
            'q': self.q,
            'signal': self.signal,
            'signal_blocks': [list(b) for b in self.signal_blocks] if self.signal_blocks else None,
            'replicates': self.replicates,
            'methods': [m.label for m in self.methods],
            'chain': self.chain.to_dict(),
            'base_seed': self.base_seed,
            'a_grid': list(self.a_grid) if self.a_grid else None,
            'bl': {'r': self.bl.r, 'delta': self.bl.delta},
        }

    def fingerprint(self, guards: Optional[Dict[str, float]] = None) -> str:
        """
        Stable hash of everything that determines replicate results except the replicate count.

        Methods are left out; each cell key carries its own method and stream slot.

        Args:
            guards: Numerical floors the chains run with, if they differ by run

        Returns:
            16-character hex digest
        """
        payload = self.to_dict()
        payload.pop('replicates')
        payload.pop('methods')
        if guards is not None:
            payload['guards'] = dict(guards)
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class ReplicateReport:
    """Result of one (replicate, method) cell."""

    replicate: int
    method: str
    squared_error: float = float('nan')
    min_ess: float = float('nan')
    mean_ess: float = float('nan')
    coverage: float = float('nan')  # fraction of theta_0 inside the 95% bands
    wall_time: float = 0.0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self, include_timings: bool = True) -> Dict[str, Any]:
        """Convert ReplicateReport to dictionary (non-finite floats become null)."""
        data = {k: finite_or_none(v) if isinstance(v, float) else v for k, v in asdict(self).items()}
        if not include_timings:
            data.pop('wall_time')
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ReplicateReport':
        values = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        for k in ('squared_error', 'min_ess', 'mean_ess', 'coverage'):
            if values.get(k) is None:
                values[k] = float('nan')
        return cls(**values)


@dataclass
class MethodSummary:
    """Per-method aggregate over replicates."""

    method: str
    mean_squared_error: float
    mc_se: float
    mean_ess: float
    mean_wall_time: float
    replicates: int
    failures: int

    def to_dict(self, include_timings: bool = True) -> Dict[str, Any]:
        """Convert MethodSummary to dictionary."""
        data = {k: finite_or_none(v) if isinstance(v, float) else v for k, v in asdict(self).items()}
        if not include_timings:
            data.pop('mean_wall_time')
        return data


@dataclass
class ScenarioReport:
    """Everything a simulate run produces, ordered by method then replicate."""

    scenario: Scenario
    methods: List[MethodSummary]
    replicates: List[ReplicateReport] = field(default_factory=list)

    @property
    def failures(self) -> List[ReplicateReport]:
        return [r for r in self.replicates if not r.ok]

    def to_dict(self, include_timings: bool = False) -> Dict[str, Any]:
        """Convert ScenarioReport to dictionary; timings are left out unless asked for."""
        return {
            'scenario': self.scenario.to_dict(),
            'methods': [m.to_dict(include_timings) for m in self.methods],
            'replicates': [r.to_dict(include_timings) for r in self.replicates],
            'failures': len(self.failures),
        }

    def table_rows(self, include_timings: bool = False) -> List[Dict[str, Any]]:
        """Flat rows for the CSV table, one per method."""
        return [m.to_dict(include_timings) for m in self.methods]


@dataclass
class FitReport:
    """Posterior summary of one fitted data file."""

    coordinates: List[Dict[str, Any]]
    metadata: Dict[str, Any]
    selection: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        """Convert FitReport to dictionary."""
        return {
            'metadata': self.metadata,
            'selection': self.selection,
            'coordinates': self.coordinates,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'FitReport':
        return cls(
            coordinates=list(data['coordinates']),
            metadata=dict(data['metadata']),
            selection=dict(data['selection']),
        )


def finite_or_none(value: float) -> Optional[float]:
    """JSON has no NaN; map non-finite floats to None."""
    return value if value is not None and math.isfinite(value) else None
