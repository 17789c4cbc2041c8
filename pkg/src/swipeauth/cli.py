"""
swipeauth command line.

    swipeauth synth --seed 7 --users 5 --out data/
    swipeauth extract --data data/ --out features.csv
    swipeauth experiment table1 --data data/ --out results/
    swipeauth viz pca --features features.csv --channel touch --out fig1a.json

Exit codes: 0 success, 1 data/model errors, 2 usage errors.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from .data.ingest import write_dataset
from .data.synthetic import SynthConfig, generate_synthetic
from .data.types import Context
from .errors import InvalidConfig, SwipeAuthError
from .evaluation.pca import export_pca_gmm
from .evaluation.reports import write_json
from .features.catalog import FeatureSet, catalog_json, feature_indices, feature_names
from .features.extractor import META_COLUMNS, session_swipes, write_feature_table
from .model.classifier import build_user_model, decide_window, load_model, save_model, score_matrix, stream_windows
from .model.ranking import TrainingSplit, apply_normalizer, fit_normalizer, rank_features
from .runner import EXPERIMENTS, ExperimentRunner, RunConfig


def _contexts(value: str) -> List[str]:
    return [Context.parse(v).value for v in value.split(',') if v.strip()]


def _add_common(parser: argparse.ArgumentParser, data: bool = True):
    parser.add_argument('--config', help='JSON run configuration')
    if data:
        parser.add_argument('--data', help='dataset root (normalized or mapped layout)')
        parser.add_argument('--features', help='pre-extracted feature table CSV')
        parser.add_argument('--map', dest='column_map', help='column map JSON for raw datasets')
    parser.add_argument('--seed', type=int)
    parser.add_argument('--workers', type=int)
    parser.add_argument('--log-level')
    parser.add_argument('--log-dir', default='logs')
    parser.add_argument('--quiet', action='store_true', help='console warnings only, no log file')


def _add_model(parser: argparse.ArgumentParser):
    parser.add_argument('--k', type=int)
    parser.add_argument('--top-k', type=int)
    parser.add_argument('--percentile', type=float)
    parser.add_argument('--distance-mode', choices=['min', 'sum'])
    parser.add_argument('--window', type=int)
    parser.add_argument('--m', type=int)
    parser.add_argument('--feature-set', choices=[f.value for f in FeatureSet])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='swipeauth', description='Swipe-gesture continuous authentication')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('synth', help='generate a synthetic dataset')
    _add_common(p, data=False)
    p.add_argument('--users', type=int, default=20)
    p.add_argument('--swipes', type=int, default=50)
    p.add_argument('--separation', type=float, default=1.0)
    p.add_argument('--walk-noise', type=float, default=1.5)
    p.add_argument('--context-shift', type=float, default=0.25)
    p.add_argument('--contexts', type=_contexts, default=None)
    p.add_argument('--out', required=True)

    p = sub.add_parser('catalog', help='dump the feature registry')
    _add_common(p, data=False)
    p.add_argument('--out')

    p = sub.add_parser('segment', help='dump segmented swipes as JSON')
    _add_common(p)
    p.add_argument('--out', required=True)

    p = sub.add_parser('extract', help='build the feature table')
    _add_common(p)
    p.add_argument('--out', required=True)

    p = sub.add_parser('rank', help='per-user feature rankings')
    _add_common(p)
    _add_model(p)
    p.add_argument('--contexts', type=_contexts)
    p.add_argument('--user')
    p.add_argument('--out', required=True)

    p = sub.add_parser('train', help='train one user model')
    _add_common(p)
    _add_model(p)
    p.add_argument('--contexts', type=_contexts)
    p.add_argument('--user', required=True)
    p.add_argument('--out', required=True)

    p = sub.add_parser('score', help='score swipes and windows with a trained model')
    _add_common(p)
    p.add_argument('--model', required=True)
    p.add_argument('--user')
    p.add_argument('--context')
    p.add_argument('--sessions', default='3,4')
    p.add_argument('--out', required=True)

    p = sub.add_parser('eval', help='run one protocol')
    _add_common(p)
    _add_model(p)
    p.add_argument('--train', type=_contexts)
    p.add_argument('--test')
    p.add_argument('--out', required=True)

    p = sub.add_parser('experiment', help='scenario tables and the direction ablation')
    p.add_argument('name', choices=EXPERIMENTS)
    _add_common(p)
    _add_model(p)
    p.add_argument('--out', required=True)

    p = sub.add_parser('viz', help='plot data exports')
    p.add_argument('kind', choices=['pca'])
    _add_common(p)
    p.add_argument('--channel', choices=['touch', 'motion'], default='touch')
    p.add_argument('--group-by', choices=['usage', 'activity', 'context'])
    p.add_argument('--k', type=int, default=3)
    p.add_argument('--out', required=True)
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    """Config file first, then every flag that was given."""
    config = RunConfig.from_dict(ExperimentRunner._load_config(args.config)) if getattr(args, 'config', None) \
        else RunConfig()
    overrides = {
        'dataset_root': getattr(args, 'data', None),
        'features': getattr(args, 'features', None),
        'column_map': getattr(args, 'column_map', None),
        'seed': getattr(args, 'seed', None),
        'workers': getattr(args, 'workers', None),
        'log_level': getattr(args, 'log_level', None),
        'k': getattr(args, 'k', None),
        'top_k': getattr(args, 'top_k', None),
        'percentile': getattr(args, 'percentile', None),
        'distance_mode': getattr(args, 'distance_mode', None),
        'window': getattr(args, 'window', None),
        'm': getattr(args, 'm', None),
        'feature_set': getattr(args, 'feature_set', None),
        'train_contexts': getattr(args, 'train', None) or getattr(args, 'contexts', None),
        'test_context': getattr(args, 'test', None),
        'output_dir': getattr(args, 'out', None),
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    if getattr(args, 'quiet', False):
        config.log_level = 'WARNING'
    return config


def _runner(args: argparse.Namespace) -> ExperimentRunner:
    log_dir = None if getattr(args, 'quiet', False) else getattr(args, 'log_dir', 'logs')
    return ExperimentRunner(_run_config(args), log_dir=log_dir).initialize()


def _out_dir(path: str) -> Path:
    path = Path(path)
    return path if not path.suffix else path.parent


def cmd_synth(args) -> int:
    runner = _runner(args)
    cfg = SynthConfig(
        n_users=args.users,
        swipes_per_session=args.swipes,
        user_separation=args.separation,
        walk_noise=args.walk_noise,
        rng_seed=runner.config.seed,
        context_shift=args.context_shift,
    )
    if args.contexts:
        cfg.contexts = tuple(Context.parse(c) for c in args.contexts)
    root = write_dataset(generate_synthetic(cfg), args.out)
    write_json({'synthetic': cfg.to_dict(), **runner.manifest()}, root / 'manifest.json')
    runner.logger.info(f"Synthetic dataset written to {root}")
    return 0


def cmd_catalog(args) -> int:
    text = catalog_json()
    if not args.out:
        sys.stdout.write(text + '\n')
        return 0
    runner = _runner(args)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text + '\n', encoding='utf-8')
    runner.write_manifest(_out_dir(args.out))
    return 0


def cmd_segment(args) -> int:
    runner = _runner(args)
    dataset = runner.load_dataset()
    c = runner.config
    swipes = []
    for record in dataset.sessions():
        swipes.extend(s.to_dict() for s in session_swipes(record, c.min_points, c.max_gap_ms, c.window_ms))
    write_json({'manifest_hash': c.manifest_hash(), 'swipes': swipes}, args.out)
    runner.write_manifest(_out_dir(args.out))
    runner.logger.info(f"{len(swipes)} swipes written to {args.out}")
    return 0


def cmd_extract(args) -> int:
    runner = _runner(args)
    table = runner.feature_table()
    write_feature_table(table, args.out)
    runner.write_manifest(_out_dir(args.out))
    return 0


def _training_rows(table: pd.DataFrame, config: RunConfig):
    return table[table['context'].isin([Context.parse(c).value for c in config.train_contexts])
                 & table['session_index'].isin(config.train_sessions)]


def cmd_rank(args) -> int:
    runner = _runner(args)
    config = runner.config
    table = runner.feature_table()
    train = _training_rows(table, config)
    names = feature_names()
    users = [args.user] if args.user else sorted(train['user'].astype(str).unique().tolist())
    rows = []
    for user in users:
        own = train['user'].astype(str) == user
        if not own.any() or own.all():
            raise InvalidConfig(f"User {user} needs both genuine and impostor training swipes")
        normalizer = fit_normalizer(train[names].to_numpy(dtype=float))
        split = TrainingSplit(apply_normalizer(normalizer, train.loc[own, names].to_numpy(dtype=float)),
                              apply_normalizer(normalizer, train.loc[~own, names].to_numpy(dtype=float)))
        ranked = rank_features(split, feature_indices(config.feature_set))
        for rank, (feature, score) in enumerate(ranked.entries(), start=1):
            rows.append({'user': user, 'rank': rank, 'feature': feature.name, 'score': score})
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(rows, columns=['user', 'rank', 'feature', 'score'])
    frame['manifest_hash'] = config.manifest_hash()
    frame.to_csv(out, index=False, lineterminator='\n')
    runner.write_manifest(_out_dir(args.out))
    return 0


def cmd_train(args) -> int:
    runner = _runner(args)
    config = runner.config
    train = _training_rows(runner.feature_table(), config)
    names = feature_names()
    own = train['user'].astype(str) == args.user
    if not own.any():
        raise InvalidConfig(f"No training swipes for user {args.user}")
    protocol = config.protocol()
    model, _ = build_user_model(
        args.user, train.loc[own, names].to_numpy(dtype=float), train.loc[~own, names].to_numpy(dtype=float),
        protocol.train_contexts, protocol.feature_set, k=protocol.k, top_k=protocol.top_k, seed=protocol.seed,
        percentile=protocol.percentile, em=protocol.em, distance_mode=protocol.distance_mode,
    )
    save_model(model, args.out)
    runner.write_manifest(_out_dir(args.out))
    runner.logger.info(f"Model for {args.user} written to {args.out} (threshold {model.threshold:.4f})")
    return 0


def cmd_score(args) -> int:
    runner = _runner(args)
    config = runner.config
    model = load_model(args.model)
    table = runner.feature_table()
    sessions = [int(s) for s in args.sessions.split(',') if s.strip()]
    rows = table[table['session_index'].isin(sessions)]
    if args.user:
        rows = rows[rows['user'].astype(str) == args.user]
    if args.context:
        rows = rows[rows['context'] == Context.parse(args.context).value]
    rows = rows.sort_values(['user', 'context', 'session_index', 't_start'], kind='mergesort')
    scores = score_matrix(model, rows[feature_names()].to_numpy(dtype=float))

    swipes = rows[META_COLUMNS].copy()
    swipes['D'] = scores
    windows = []
    for (user, context, session), group in swipes.groupby(['user', 'context', 'session_index'], sort=True):
        for start, window in enumerate(stream_windows(group['D'].to_numpy(), config.window, config.m)):
            verdict, statistic = decide_window(model, window.values, config.m)
            windows.append({'user': user, 'context': context, 'session_index': session,
                            'window_start': start, 'statistic': statistic, 'verdict': verdict.value})

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    swipes.to_csv(out / 'scores.csv', index=False, lineterminator='\n')
    pd.DataFrame(windows, columns=['user', 'context', 'session_index', 'window_start', 'statistic', 'verdict']) \
        .to_csv(out / 'windows.csv', index=False, lineterminator='\n')
    runner.write_manifest(out)
    return 0


def cmd_eval(args) -> int:
    runner = _runner(args)
    runner.run_evaluation()
    runner.write_outputs('eval', args.out)
    return 0


def cmd_experiment(args) -> int:
    runner = _runner(args)
    runner.run_experiment(args.name)
    runner.write_outputs(args.name, args.out)
    write_json(runner.summary(), Path(args.out) / f"{args.name}_summary.json")
    return 0


def _group_labels(contexts: Sequence[str], group_by: str) -> List[str]:
    parsed = [Context.parse(c) for c in contexts]
    if group_by == 'usage':
        return [c.usage for c in parsed]
    if group_by == 'activity':
        return [c.activity for c in parsed]
    return [c.value for c in parsed]


def cmd_viz(args) -> int:
    runner = _runner(args)
    table = runner.feature_table()
    feature_set = FeatureSet.TOUCH if args.channel == 'touch' else FeatureSet.MOTION
    group_by = args.group_by or ('usage' if args.channel == 'touch' else 'activity')
    names = [feature_names()[i] for i in feature_indices(feature_set)]
    pooled = table[names].to_numpy(dtype=float)
    pooled = apply_normalizer(fit_normalizer(pooled), pooled)
    payload = export_pca_gmm(pooled, _group_labels(table['context'].tolist(), group_by), k=args.k,
                             seed=runner.config.seed, path=args.out)
    runner.write_manifest(_out_dir(args.out))
    runner.logger.info(f"PCA explained variance: {np.round(payload['explained_variance_ratio'], 3).tolist()}")
    return 0


COMMANDS = {
    'synth': cmd_synth,
    'catalog': cmd_catalog,
    'segment': cmd_segment,
    'extract': cmd_extract,
    'rank': cmd_rank,
    'train': cmd_train,
    'score': cmd_score,
    'eval': cmd_eval,
    'experiment': cmd_experiment,
    'viz': cmd_viz,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else 2

    try:
        return COMMANDS[args.command](args)
    except (SwipeAuthError, OSError, ValueError) as e:
        logging.getLogger('swipeauth').debug(f"ERROR | {type(e).__name__} | {e}", exc_info=True)
        sys.stderr.write(f"swipeauth: {type(e).__name__}: {e}\n")
        return 1


if __name__ == '__main__':
    sys.exit(main())
