import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .types import (
    ACCEL_COLUMNS, TOUCH_COLUMNS, Context, SessionId, TouchAction, validate_stream
)
from ..errors import (
    EmptyStream, InvalidConfig, InvalidDataset, LabelMissing, MissingColumn, ParseError
)


logger = logging.getLogger(__name__)

TOUCH_FIELDS = ('t', 'x', 'y', 'pressure', 'action')
ACCEL_FIELDS = ('t', 'ax', 'ay', 'az')
TIMESTAMP_UNITS = ('ms', 'ns', 's')
LABEL_COLUMNS = ['user_id', 'session_dir', 'session_index', 'context']

ColumnRef = Union[str, int]


@dataclass
class ColumnMap:
    touch: Dict[str, ColumnRef]
    accel: Dict[str, ColumnRef]
    timestamp_unit: str = 'ms'
    action_codes: Dict[int, TouchAction] = field(default_factory=lambda: {
        0: TouchAction.DOWN, 1: TouchAction.UP, 2: TouchAction.MOVE
    })
    touch_file: str = 'touch.csv'
    accel_file: str = 'accel.csv'
    has_header: bool = True
    primary_pointer: int = 0

    def __post_init__(self):
        self._check_fields('touch', self.touch, TOUCH_FIELDS)
        self._check_fields('accel', self.accel, ACCEL_FIELDS)
        if self.timestamp_unit not in TIMESTAMP_UNITS:
            raise InvalidConfig(f"timestamp_unit must be one of {TIMESTAMP_UNITS}, got {self.timestamp_unit!r}")
        if not self.action_codes:
            raise InvalidConfig("action_codes must map at least one source code")

    @staticmethod
    def _check_fields(kind: str, mapping: Dict[str, ColumnRef], required: Tuple[str, ...]):
        missing = [f for f in required if f not in mapping]
        if missing:
            raise InvalidConfig(f"Column map '{kind}' does not map required fields: {missing}")
        sources = [mapping[f] for f in required]
        if len(set(sources)) != len(sources):
            raise InvalidConfig(f"Column map '{kind}' maps two fields to the same source column")

    @classmethod
    def default(cls) -> 'ColumnMap':
        """Direct mapping for the normalized layout written by write_dataset."""
        return cls(touch={f: f for f in TOUCH_FIELDS}, accel={f: f for f in ACCEL_FIELDS})

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ColumnMap':
        try:
            codes = {int(code): TouchAction[str(name).upper()]
                     for code, name in data.get('action_codes', {'0': 'Down', '1': 'Up', '2': 'Move'}).items()}
        except (KeyError, ValueError) as e:
            raise InvalidConfig(f"Invalid action_codes entry: {e}")
        try:
            return cls(
                touch=dict(data['touch']),
                accel=dict(data['accel']),
                timestamp_unit=data.get('timestamp_unit', 'ms'),
                action_codes=codes,
                touch_file=data.get('touch_file', 'touch.csv'),
                accel_file=data.get('accel_file', 'accel.csv'),
                has_header=bool(data.get('has_header', True)),
                primary_pointer=int(data.get('primary_pointer', 0)),
            )
        except KeyError as e:
            raise InvalidConfig(f"Column map is missing section {e}")

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> 'ColumnMap':
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidConfig(f"Error loading column map {path}: {e}")
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'touch': dict(self.touch),
            'accel': dict(self.accel),
            'timestamp_unit': self.timestamp_unit,
            'action_codes': {str(code): action.name.capitalize() for code, action in sorted(self.action_codes.items())},
            'touch_file': self.touch_file,
            'accel_file': self.accel_file,
            'has_header': self.has_header,
            'primary_pointer': self.primary_pointer,
        }

    def fields_for(self, kind: str) -> Dict[str, ColumnRef]:
        return self.touch if kind == 'touch' else self.accel


@dataclass
class SessionRecord:
    session: SessionId
    touch: pd.DataFrame
    accel: pd.DataFrame
    source: str = ''


@dataclass
class UserRecord:
    user: str
    sessions: List[SessionRecord] = field(default_factory=list)


@dataclass
class Dataset:
    users: List[UserRecord] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def user_ids(self) -> List[str]:
        return [u.user for u in self.users]

    @property
    def n_sessions(self) -> int:
        return sum(len(u.sessions) for u in self.users)

    def sessions(self) -> List[SessionRecord]:
        return [s for u in self.users for s in u.sessions]

    def contexts(self) -> List[Context]:
        present = {s.session.context for s in self.sessions()}
        return [c for c in Context if c in present]

    def check(self):
        for user in self.users:
            counts: Dict[Context, int] = {}
            for record in user.sessions:
                counts[record.session.context] = counts.get(record.session.context, 0) + 1
            for context, count in counts.items():
                if count > 4:
                    raise InvalidDataset(f"User {user.user} has {count} sessions in {context.value} (max 4)")


def _convert_timestamps(values: np.ndarray, unit: str) -> np.ndarray:
    if unit == 'ns':
        values = values / 1e6
    elif unit == 's':
        values = values * 1000.0
    return np.rint(values).astype(np.int64)


def _column(raw: pd.DataFrame, ref: ColumnRef, path: str) -> pd.Series:
    if isinstance(ref, int) or (isinstance(ref, str) and ref.isdigit() and ref not in raw.columns):
        index = int(ref)
        if index >= raw.shape[1]:
            raise MissingColumn(index, path)
        return raw.iloc[:, index]
    if ref not in raw.columns:
        raise MissingColumn(ref, path)
    return raw[ref]


def _numeric(series: pd.Series, name: str, path: str) -> np.ndarray:
    try:
        # python float() per value keeps CSV round-trips exact
        return series.astype(float).to_numpy()
    except ValueError:
        bad = pd.to_numeric(series, errors='coerce').isna().to_numpy().nonzero()[0]
        row = int(bad[0]) if len(bad) else -1
        raise ParseError(row, name, series.iloc[row] if row >= 0 else None, path)


def _infer_kind(path: Path, column_map: ColumnMap) -> str:
    if path.name == column_map.accel_file:
        return 'accel'
    if path.name == column_map.touch_file:
        return 'touch'
    raise ValueError(f"Cannot infer stream kind of {path}; pass kind='touch' or kind='accel'")


def read_events(path: Union[str, Path], column_map: ColumnMap, kind: Optional[str] = None) -> pd.DataFrame:
    """Read a touch or accelerometer CSV into a validated stream frame."""
    path = Path(path)
    kind = kind or _infer_kind(path, column_map)
    spath = str(path)

    try:
        raw = pd.read_csv(path, header=0 if column_map.has_header else None,
                          dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise EmptyStream(f"{spath} has no rows")

    if column_map.has_header:
        raw.columns = [str(c).strip() for c in raw.columns]
    mapping = column_map.fields_for(kind)
    if raw.empty:
        for ref in mapping.values():
            _column(raw, ref, spath)
        raise EmptyStream(f"{spath} has no data rows")

    columns = {name: _column(raw, ref, spath) for name, ref in mapping.items()}

    data: Dict[str, np.ndarray] = {}
    data['t'] = _convert_timestamps(_numeric(columns['t'], 't', spath), column_map.timestamp_unit)

    if kind == 'touch':
        for name in ('x', 'y', 'pressure'):
            data[name] = _numeric(columns[name], name, spath)
        codes = _numeric(columns['action'], 'action', spath).astype(np.int64)
        keep = np.isin(codes, list(column_map.action_codes.keys()))
        if 'pointer_id' in columns:
            pointers = _numeric(columns['pointer_id'], 'pointer_id', spath).astype(np.int64)
            keep &= pointers == column_map.primary_pointer
        lookup = {code: action.value for code, action in column_map.action_codes.items()}
        data['action'] = np.array([lookup.get(int(c), -1) for c in codes], dtype=np.int64)
        frame = pd.DataFrame(data, columns=TOUCH_COLUMNS)[keep]
        if int((~keep).sum()):
            logger.debug(f"{spath}: dropped {int((~keep).sum())} multi-finger or unmapped rows")
    else:
        for name in ('ax', 'ay', 'az'):
            data[name] = _numeric(columns[name], name, spath)
        frame = pd.DataFrame(data, columns=ACCEL_COLUMNS)

    if frame.empty:
        raise EmptyStream(f"{spath} has no usable rows")
    return validate_stream(frame)


def read_labels(path: Union[str, Path]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        return pd.DataFrame(columns=LABEL_COLUMNS)
    labels = pd.read_csv(path, dtype=str, keep_default_na=False)
    labels.columns = [str(c).strip() for c in labels.columns]
    for column in LABEL_COLUMNS:
        if column not in labels.columns:
            raise MissingColumn(column, str(path))
    return labels[LABEL_COLUMNS]


def _read_session(args) -> Tuple[Optional[SessionRecord], Optional[str]]:
    session_id, session_path, column_map = args
    try:
        touch = read_events(session_path / column_map.touch_file, column_map, 'touch')
        accel = read_events(session_path / column_map.accel_file, column_map, 'accel')
    except (EmptyStream, FileNotFoundError) as e:
        return None, f"Session {session_path} unusable: {e}"
    return SessionRecord(session_id, touch, accel, str(session_path)), None


def assemble_dataset(root: Union[str, Path], column_map: Optional[ColumnMap] = None,
                     labels: Optional[pd.DataFrame] = None, workers: int = 1) -> Dataset:
    """
    Discover <root>/<user>/<session_dir>/ sessions and read them into a Dataset.

    Sessions are read in parallel and merged in (user, context, session_index) order.
    """
    root = Path(root)
    column_map = column_map or ColumnMap.default()
    if labels is None:
        labels = read_labels(root / 'labels.csv')

    table: Dict[Tuple[str, str], Tuple[int, Context]] = {}
    for row in labels.itertuples(index=False):
        table[(str(row.user_id), str(row.session_dir))] = (int(row.session_index), Context.parse(row.context))

    jobs = []
    if root.exists():
        for user_dir in sorted(p for p in root.iterdir() if p.is_dir()):
            for session_dir in sorted(p for p in user_dir.iterdir() if p.is_dir()):
                if not (session_dir / column_map.touch_file).exists():
                    continue
                key = (user_dir.name, session_dir.name)
                if key not in table:
                    raise LabelMissing(f"No context label for session {user_dir.name}/{session_dir.name}")
                index, context = table[key]
                jobs.append((SessionId(user_dir.name, index, context), session_dir, column_map))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        results = list(executor.map(_read_session, jobs))

    dataset = Dataset()
    by_user: Dict[str, List[SessionRecord]] = {}
    for (session_id, _, _), (record, warning) in zip(jobs, results):
        by_user.setdefault(session_id.user, [])
        if warning:
            logger.warning(warning)
            dataset.warnings.append(warning)
            continue
        by_user[session_id.user].append(record)

    for user in sorted(by_user):
        sessions = sorted(by_user[user], key=lambda r: r.session.key)
        if not sessions:
            message = f"User {user} excluded: no usable sessions"
            logger.warning(message)
            dataset.warnings.append(message)
            continue
        dataset.users.append(UserRecord(user, sessions))

    dataset.check()
    logger.info(f"Dataset assembled from {root}: {len(dataset.users)} users, {dataset.n_sessions} sessions")
    return dataset


def session_dir_name(session: SessionId) -> str:
    return f"{session.context.value}_session{session.session_index}"


def write_dataset(dataset: Dataset, root: Union[str, Path]) -> Path:
    """Write a Dataset in the normalized layout readable with ColumnMap.default()."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rows = []
    for record in dataset.sessions():
        name = session_dir_name(record.session)
        session_path = root / record.session.user / name
        session_path.mkdir(parents=True, exist_ok=True)
        record.touch[TOUCH_COLUMNS].to_csv(session_path / 'touch.csv', index=False, lineterminator='\n')
        record.accel[ACCEL_COLUMNS].to_csv(session_path / 'accel.csv', index=False, lineterminator='\n')
        rows.append({
            'user_id': record.session.user,
            'session_dir': name,
            'session_index': record.session.session_index,
            'context': record.session.context.value,
        })
    pd.DataFrame(rows, columns=LABEL_COLUMNS).to_csv(root / 'labels.csv', index=False, lineterminator='\n')
    return root
