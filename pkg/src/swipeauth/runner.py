import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
import scipy

from . import __version__
from .data.ingest import ColumnMap, Dataset, assemble_dataset
from .data.types import ALL_CONTEXTS, Context
from .errors import InvalidConfig
from .evaluation.protocol import Protocol, run_direction_ablation, run_protocol, run_table1, run_table2
from .evaluation.reports import EvalReport, export_per_user_csv, export_reports_json, export_table_csv, write_json
from .features.catalog import FeatureSet
from .features.extractor import build_feature_table, read_feature_table
from .model.classifier import DISTANCE_MODES, EmSettings
from .utils.logger import ExperimentLogger, setup_logger


EXPERIMENTS = ('table1', 'table2', 'ablation')


@dataclass
class RunConfig:
    seed: int = 0
    log_level: str = 'INFO'
    workers: int = 1
    dataset_root: Optional[str] = None
    column_map: Optional[str] = None
    features: Optional[str] = None
    k: int = 3
    top_k: int = 40
    percentile: float = 95
    distance_mode: str = 'min'
    em_tol: float = 1e-6
    em_max_iter: int = 100
    covariance_floor: float = 1e-6
    window: int = 25
    m: int = 4
    feature_set: str = 'fusion'
    train_contexts: List[str] = field(default_factory=lambda: [c.value for c in ALL_CONTEXTS])
    test_context: str = 'S1'
    train_sessions: List[int] = field(default_factory=lambda: [1, 2])
    test_sessions: List[int] = field(default_factory=lambda: [3, 4])
    max_gap_ms: int = 2000
    min_points: int = 6
    window_ms: int = 500
    output_dir: str = 'results'

    @classmethod
    def from_dict(cls, config: Dict[str, Any]) -> 'RunConfig':
        dataset = config.get('dataset', {})
        model = config.get('model', {})
        evaluation = config.get('evaluation', {})
        segmentation = config.get('segmentation', {})
        output = config.get('output', {})
        defaults = cls()
        return cls(
            seed=config.get('seed', defaults.seed),
            log_level=config.get('log_level', defaults.log_level),
            workers=config.get('workers', defaults.workers),
            dataset_root=dataset.get('root', defaults.dataset_root),
            column_map=dataset.get('column_map', defaults.column_map),
            features=dataset.get('features', defaults.features),
            k=model.get('k', defaults.k),
            top_k=model.get('top_k', defaults.top_k),
            percentile=model.get('percentile', defaults.percentile),
            distance_mode=model.get('distance_mode', defaults.distance_mode),
            em_tol=model.get('em_tol', defaults.em_tol),
            em_max_iter=model.get('em_max_iter', defaults.em_max_iter),
            covariance_floor=model.get('covariance_floor', defaults.covariance_floor),
            window=evaluation.get('window', defaults.window),
            m=evaluation.get('m', defaults.m),
            feature_set=evaluation.get('feature_set', defaults.feature_set),
            train_contexts=list(evaluation.get('train_contexts', defaults.train_contexts)),
            test_context=evaluation.get('test_context', defaults.test_context),
            train_sessions=list(evaluation.get('train_sessions', defaults.train_sessions)),
            test_sessions=list(evaluation.get('test_sessions', defaults.test_sessions)),
            max_gap_ms=segmentation.get('max_gap_ms', defaults.max_gap_ms),
            min_points=segmentation.get('min_points', defaults.min_points),
            window_ms=segmentation.get('window_ms', defaults.window_ms),
            output_dir=output.get('dir', defaults.output_dir),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seed': self.seed,
            'log_level': self.log_level,
            'workers': self.workers,
            'dataset': {'root': self.dataset_root, 'column_map': self.column_map, 'features': self.features},
            'model': {
                'k': self.k, 'top_k': self.top_k, 'percentile': self.percentile,
                'distance_mode': self.distance_mode, 'em_tol': self.em_tol,
                'em_max_iter': self.em_max_iter, 'covariance_floor': self.covariance_floor,
            },
            'evaluation': {
                'window': self.window, 'm': self.m, 'feature_set': self.feature_set,
                'train_contexts': list(self.train_contexts), 'test_context': self.test_context,
                'train_sessions': list(self.train_sessions), 'test_sessions': list(self.test_sessions),
            },
            'segmentation': {
                'max_gap_ms': self.max_gap_ms, 'min_points': self.min_points, 'window_ms': self.window_ms,
            },
            'output': {'dir': self.output_dir},
        }

    def canonical(self) -> Dict[str, Any]:
        """Config keys that shape results; execution-only keys are left out."""
        data = self.to_dict()
        data.pop('workers')
        data.pop('log_level')
        data.pop('output')
        return data

    def manifest_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(text.encode('utf-8')).hexdigest()

    def protocol(self, **overrides) -> Protocol:
        settings = dict(
            train_contexts=tuple(Context.parse(c) for c in self.train_contexts),
            test_context=Context.parse(self.test_context),
            feature_set=FeatureSet.parse(self.feature_set),
            train_sessions=tuple(self.train_sessions),
            test_sessions=tuple(self.test_sessions),
            window=self.window,
            m=self.m,
            k=self.k,
            top_k=self.top_k,
            seed=self.seed,
            percentile=self.percentile,
            distance_mode=self.distance_mode,
            em=EmSettings(self.em_tol, self.em_max_iter, self.covariance_floor),
        )
        settings.update(overrides)
        return Protocol(**settings)


class ExperimentRunner:
    def __init__(self, config: Union[str, Path, Dict[str, Any], RunConfig], log_dir: Optional[str] = 'logs'):
        if isinstance(config, RunConfig):
            self.config = config
        elif isinstance(config, dict):
            self.config = RunConfig.from_dict(config)
        else:
            self.config = RunConfig.from_dict(self._load_config(config))
        self.log_dir = log_dir
        self.logger: Optional[logging.Logger] = None
        self.events: Optional[ExperimentLogger] = None
        self.reports: Dict[str, List[EvalReport]] = {}
        self._table: Optional[pd.DataFrame] = None
        self.stats = {
            'reports': 0,
            'users_evaluated': 0,
            'users_skipped': 0,
            'errors_count': 0,
            'last_error': None,
        }

    @staticmethod
    def _load_config(config_path: Union[str, Path]) -> Dict[str, Any]:
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidConfig(f"Error loading configuration {config_path}: {e}")

    def _validate_config(self):
        c = self.config
        problems = []
        if not 1 <= c.k <= 8:
            problems.append(f"model.k must be in 1..8, got {c.k}")
        if c.top_k < 2:
            problems.append(f"model.top_k must be >= 2, got {c.top_k}")
        if not 50 <= c.percentile <= 100:
            problems.append(f"model.percentile must be in [50, 100], got {c.percentile}")
        if c.distance_mode not in DISTANCE_MODES:
            problems.append(f"model.distance_mode must be one of {DISTANCE_MODES}")
        if c.window < 1 or c.m < 1:
            problems.append("evaluation.window and evaluation.m must be positive")
        if c.workers < 1:
            problems.append(f"workers must be >= 1, got {c.workers}")
        if set(c.train_sessions) & set(c.test_sessions):
            problems.append("evaluation.train_sessions and evaluation.test_sessions overlap")
        try:
            FeatureSet.parse(c.feature_set)
            for ctx in list(c.train_contexts) + [c.test_context]:
                Context.parse(ctx)
        except ValueError as e:
            problems.append(str(e))
        if problems:
            raise InvalidConfig("; ".join(problems))

    def initialize(self) -> 'ExperimentRunner':
        self.logger = setup_logger('swipeauth', self.config.log_level, log_dir=self.log_dir)
        self.events = ExperimentLogger(self.logger)
        self._validate_config()
        self.logger.debug(f"Run configuration: {json.dumps(self.config.to_dict(), sort_keys=True)}")
        return self

    def _ensure_initialized(self):
        if self.events is None:
            self.initialize()

    def load_dataset(self) -> Dataset:
        self._ensure_initialized()
        if not self.config.dataset_root:
            raise InvalidConfig("dataset.root is not set")
        column_map = ColumnMap.from_json(self.config.column_map) if self.config.column_map else None
        dataset = assemble_dataset(self.config.dataset_root, column_map, workers=self.config.workers)
        for warning in dataset.warnings:
            self.logger.warning(warning)
        return dataset

    def feature_table(self) -> pd.DataFrame:
        self._ensure_initialized()
        if self._table is None:
            if self.config.features:
                self._table = read_feature_table(self.config.features)
            else:
                dataset = self.load_dataset()
                self._table = build_feature_table(dataset, workers=self.config.workers,
                                                  min_points=self.config.min_points,
                                                  max_gap_ms=self.config.max_gap_ms,
                                                  window_ms=self.config.window_ms)
            table = self._table
            self.events.log_dataset(table['user'].nunique(),
                                    len(table[['user', 'context', 'session_index']].drop_duplicates()),
                                    len(table))
        return self._table

    def _record(self, name: str, reports: List[EvalReport]) -> List[EvalReport]:
        hash_value = self.config.manifest_hash()
        for report in reports:
            report.manifest_hash = hash_value
            self.stats['reports'] += 1
            self.stats['users_evaluated'] += len(report.per_user)
            self.stats['users_skipped'] += len(report.skipped)
        self.reports[name] = reports
        return reports

    def run_evaluation(self, **overrides) -> EvalReport:
        table = self.feature_table()
        protocol = self.config.protocol(**overrides)
        if not protocol.label:
            protocol = replace(protocol, label=f"{protocol.train_label}->{protocol.test_context.value}")
        report = run_protocol(table, protocol, self.config.workers, self.events)
        return self._record('eval', [report])[0]

    def run_experiment(self, name: str) -> List[EvalReport]:
        if name not in EXPERIMENTS:
            raise InvalidConfig(f"Unknown experiment {name!r}; expected one of {EXPERIMENTS}")
        table = self.feature_table()
        template = self.config.protocol()
        try:
            if name == 'table1':
                reports = run_table1(table, template, self.config.workers, self.events)
            elif name == 'table2':
                reports = run_table2(table, template, self.config.workers, self.events)
            else:
                reports = list(run_direction_ablation(table, template, self.config.workers, self.events))
        except Exception as e:
            self.stats['errors_count'] += 1
            self.stats['last_error'] = str(e)
            self.events.log_error(type(e).__name__, str(e))
            raise
        return self._record(name, reports)

    def manifest(self) -> Dict[str, Any]:
        return {
            'config': self.config.canonical(),
            'seed': self.config.seed,
            'versions': {
                'swipeauth': __version__,
                'numpy': np.__version__,
                'pandas': pd.__version__,
                'scipy': scipy.__version__,
            },
            'manifest_hash': self.config.manifest_hash(),
        }

    def write_manifest(self, out_dir: Union[str, Path]) -> Path:
        return write_json(self.manifest(), Path(out_dir) / 'manifest.json')

    def write_outputs(self, name: str, out_dir: Union[str, Path]) -> List[Path]:
        out_dir = Path(out_dir)
        reports = self.reports[name]
        hash_value = self.config.manifest_hash()
        paths = [export_reports_json(reports, out_dir / f"{name}.json", hash_value),
                 export_table_csv(reports, out_dir / f"{name}.csv", hash_value)]
        if name == 'eval':
            paths.append(export_per_user_csv(reports[0], out_dir / 'per_user.csv'))
        paths.append(self.write_manifest(out_dir))
        return paths

    @staticmethod
    def _best(reports: List[EvalReport]) -> Optional[EvalReport]:
        scored = [r for r in reports if r.mean_eer is not None]
        return min(scored, key=lambda r: r.mean_eer) if scored else None

    def summary(self) -> Dict[str, Any]:
        """Ordinal findings of the experiments run so far."""
        findings: Dict[str, Any] = {'stats': dict(self.stats)}

        if 'table1' in self.reports:
            scenarios = {}
            for context in ALL_CONTEXTS:
                rows = {regime: [r for r in self.reports['table1'] if r.label == f"{context.value} {regime}"]
                        for regime in ('context-specific', 'general')}
                specific, general = self._best(rows['context-specific']), self._best(rows['general'])
                entry = {
                    'best_feature_set': specific.feature_set if specific else None,
                    'specific_mean_eer': specific.mean_eer if specific else None,
                    'general_mean_eer': general.mean_eer if general else None,
                }
                if specific and general:
                    entry['specific_minus_general'] = specific.mean_eer - general.mean_eer
                    entry['specific_beats_general'] = specific.mean_eer < general.mean_eer
                scenarios[context.value] = entry
            findings['table1'] = scenarios

        if 'table2' in self.reports:
            pairs = {}
            for label in dict.fromkeys(r.label for r in self.reports['table2']):
                best = self._best([r for r in self.reports['table2'] if r.label == label])
                pairs[label] = {'best_feature_set': best.feature_set if best else None,
                                'mean_eer': best.mean_eer if best else None}
            findings['table2'] = pairs

        if 'ablation' in self.reports:
            all_swipes, vertical = self.reports['ablation']
            entry = {'all_swipes': all_swipes.mean_eer, 'vertical_only': vertical.mean_eer}
            if all_swipes.mean_eer is not None and vertical.mean_eer is not None:
                entry['delta'] = vertical.mean_eer - all_swipes.mean_eer
            findings['ablation'] = entry

        return findings
