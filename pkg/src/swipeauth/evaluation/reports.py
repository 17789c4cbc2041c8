import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd


logger = logging.getLogger(__name__)

FEATURE_SET_COLUMNS = ['Touch', 'Motion', 'Fusion']


@dataclass
class UserResult:
    user: str
    eer: float
    threshold: float
    percentile_i: int
    n_genuine_windows: int
    n_impostor_windows: int


@dataclass
class EvalReport:
    protocol: Dict[str, Any]
    label: str
    per_user: List[UserResult] = field(default_factory=list)
    skipped: List[Tuple[str, str]] = field(default_factory=list)
    manifest_hash: Optional[str] = None

    @property
    def eers(self) -> np.ndarray:
        return np.array([r.eer for r in self.per_user], dtype=float)

    @property
    def mean_eer(self) -> Optional[float]:
        return float(np.mean(self.eers)) if self.per_user else None

    @property
    def std_eer(self) -> Optional[float]:
        # population std across users
        return float(np.std(self.eers)) if self.per_user else None

    @property
    def feature_set(self) -> str:
        return str(self.protocol.get('feature_set', '')).capitalize()

    def cell(self) -> str:
        if not self.per_user:
            return "n/a"
        return f"{100 * self.mean_eer:.1f}% ({100 * self.std_eer:.1f})"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'label': self.label,
            'protocol': self.protocol,
            'per_user': [asdict(r) for r in self.per_user],
            'skipped': [{'user': u, 'reason': reason} for u, reason in self.skipped],
            'mean_eer': self.mean_eer,
            'std_eer': self.std_eer,
            'manifest_hash': self.manifest_hash,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EvalReport':
        return cls(
            protocol=data['protocol'],
            label=data['label'],
            per_user=[UserResult(**r) for r in data.get('per_user', [])],
            skipped=[(s['user'], s['reason']) for s in data.get('skipped', [])],
            manifest_hash=data.get('manifest_hash'),
        )


def write_json(payload: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write('\n')
    return path


def export_reports_json(reports: Sequence[EvalReport], path: Union[str, Path],
                        manifest_hash: Optional[str] = None) -> Path:
    payload = {
        'manifest_hash': manifest_hash,
        'reports': [r.to_dict() for r in reports],
    }
    return write_json(payload, path)


def load_reports_json(path: Union[str, Path]) -> List[EvalReport]:
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    return [EvalReport.from_dict(r) for r in data['reports']]


def report_table(reports: Sequence[EvalReport]) -> pd.DataFrame:
    """Rows keyed by label in first-seen order, one column per feature set, cells 'mean% (std)'."""
    rows: Dict[str, Dict[str, str]] = {}
    for report in reports:
        rows.setdefault(report.label, {})[report.feature_set] = report.cell()
    columns = [c for c in FEATURE_SET_COLUMNS if any(c in r for r in rows.values())]
    table = pd.DataFrame([{'row': label, **{c: cells.get(c, '') for c in columns}}
                          for label, cells in rows.items()], columns=['row'] + columns)
    return table


def export_table_csv(reports: Sequence[EvalReport], path: Union[str, Path],
                     manifest_hash: Optional[str] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = report_table(reports)
    table['manifest_hash'] = manifest_hash or ''
    table.to_csv(path, index=False, lineterminator='\n')
    logger.info(f"Table written to {path}")
    return path


def export_per_user_csv(report: EvalReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([asdict(r) for r in report.per_user],
                         columns=['user', 'eer', 'threshold', 'percentile_i',
                                  'n_genuine_windows', 'n_impostor_windows'])
    frame['manifest_hash'] = report.manifest_hash or ''
    frame.to_csv(path, index=False, lineterminator='\n')
    return path
