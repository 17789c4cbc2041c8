"""
Seeded synthetic swipe datasets.

Every user gets a latent style (swipe length, speed, pressure level, curvature,
hand anchor, grip tremor, swipe jolt, gait intensity). Styles are assigned by
Latin-hypercube sampling: each dimension is split into n_users strata and a
random permutation hands one stratum to each user, so `user_separation` sets the
minimum gap between any two users on every dimension.

How much of that style reaches the data depends on the context. Sitting users
hold the phone still, so their accelerometer trace carries the population's
tremor and tap jolt (`sit_motion_identity`). Walking adds a gait oscillation
whose amplitude is user-specific and makes gestures sloppy: touch style is
pulled toward the population (`walk_touch_identity`) while swipe-to-swipe noise
(`walk_touch_noise`) and start-point scatter (`walk_anchor_jitter`) grow.
Horizontal navigation gestures keep only part of the user's style
(`horizontal_identity`).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Tuple

import numpy as np
import pandas as pd

from .ingest import Dataset, SessionRecord, UserRecord
from .types import ACCEL_COLUMNS, ALL_CONTEXTS, TOUCH_COLUMNS, Context, SessionId, TouchAction
from ..errors import InvalidConfig


logger = logging.getLogger(__name__)

GRAVITY = 9.81
SAMPLE_INTERVAL_MS = 16
ACCEL_INTERVAL_MS = 10
SENSOR_NOISE = 0.02
SIT_TOUCH_NOISE = 0.08
ANCHOR_JITTER_PX = 20.0
TREMOR_HZ = 8.0
GAIT_HZ = 2.0
GAIT_SESSION_JITTER = 0.05

# base value, log-spread per unit of separation
STYLE_DIMS: Dict[str, Tuple[float, float]] = {
    'length': (420.0, 0.4),
    'speed': (1.6, 0.35),
    'pressure': (0.45, 0.4),
    'curvature': (0.08, 0.6),
    'anchor_x': (540.0, 0.25),
    'anchor_y': (1100.0, 0.25),
    'tremor': (0.05, 0.6),
    'jolt': (0.35, 0.6),
    'gait': (1.0, 0.5),
}


@dataclass
class SynthConfig:
    n_users: int = 20
    swipes_per_session: int = 50
    contexts: Tuple[Context, ...] = ALL_CONTEXTS
    user_separation: float = 1.0
    walk_noise: float = 1.5
    rng_seed: int = 0
    context_shift: float = 0.25
    sessions_per_context: int = 4
    horizontal_identity: float = 0.6
    walk_touch_identity: float = 0.5
    walk_touch_noise: float = 0.35
    walk_anchor_jitter: float = 50.0
    sit_motion_identity: float = 0.0

    def validate(self):
        if self.n_users < 2:
            raise InvalidConfig(f"n_users must be >= 2, got {self.n_users}")
        if self.swipes_per_session < 25:
            raise InvalidConfig(f"swipes_per_session must be >= 25, got {self.swipes_per_session}")
        if self.user_separation < 0 or self.walk_noise < 0 or self.context_shift < 0:
            raise InvalidConfig("user_separation, walk_noise and context_shift must be >= 0")
        if not self.contexts:
            raise InvalidConfig("contexts must not be empty")
        if not 1 <= self.sessions_per_context <= 4:
            raise InvalidConfig(f"sessions_per_context must be in 1..4, got {self.sessions_per_context}")
        for name in ('horizontal_identity', 'walk_touch_identity', 'sit_motion_identity'):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidConfig(f"{name} must be in [0, 1], got {getattr(self, name)}")
        if self.walk_touch_noise < 0 or self.walk_anchor_jitter < 0:
            raise InvalidConfig("walk_touch_noise and walk_anchor_jitter must be >= 0")

    def to_dict(self) -> Dict:
        return {
            'n_users': self.n_users,
            'swipes_per_session': self.swipes_per_session,
            'contexts': [c.value for c in self.contexts],
            'user_separation': self.user_separation,
            'walk_noise': self.walk_noise,
            'rng_seed': self.rng_seed,
            'context_shift': self.context_shift,
            'sessions_per_context': self.sessions_per_context,
            'horizontal_identity': self.horizontal_identity,
            'walk_touch_identity': self.walk_touch_identity,
            'walk_touch_noise': self.walk_touch_noise,
            'walk_anchor_jitter': self.walk_anchor_jitter,
            'sit_motion_identity': self.sit_motion_identity,
        }


@dataclass
class UserStyle:
    values: Dict[str, float]
    tremor_hz: float
    gait_hz: float
    grip: np.ndarray
    context_factors: Dict[Context, Dict[str, float]] = field(default_factory=dict)

    def for_context(self, context: Context) -> Dict[str, float]:
        factors = self.context_factors.get(context, {})
        return {k: v * factors.get(k, 1.0) for k, v in self.values.items()}


def population_style() -> Dict[str, float]:
    return {name: base for name, (base, _) in STYLE_DIMS.items()}


def blend(population: float, own: float, identity: float) -> float:
    """Geometric blend: identity 1 keeps the user's value, 0 gives the population's."""
    if identity >= 1.0:
        return own
    if identity <= 0.0:
        return population
    return population ** (1.0 - identity) * own ** identity


def blend_style(population: Dict[str, float], own: Dict[str, float], identity: float) -> Dict[str, float]:
    return {name: blend(population[name], value, identity) for name, value in own.items()}


def gait_amplitude(cfg: SynthConfig, style: UserStyle, context: Context) -> float:
    """
    Gait oscillation amplitude of a walking session before its session jitter.

    The user's gait factor scales `walk_noise`; Latin-hypercube levels are
    symmetric around zero, so the geometric mean over users is `walk_noise`
    when `context_shift` is 0. Sitting contexts have no gait.
    """
    if context.activity != 'walk':
        return 0.0
    return cfg.walk_noise * style.for_context(context)['gait']


def _draw_styles(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """Latin-hypercube levels in (-1, 1), one row per user, one column per style dimension."""
    n = cfg.n_users
    levels = np.empty((n, len(STYLE_DIMS)))
    for j in range(len(STYLE_DIMS)):
        strata = rng.permutation(n)
        levels[:, j] = 2.0 * ((strata + 0.5) / n - 0.5)
    return levels


def _make_user_style(cfg: SynthConfig, levels: np.ndarray, rng: np.random.Generator) -> UserStyle:
    values = {}
    for j, (name, (base, spread)) in enumerate(STYLE_DIMS.items()):
        values[name] = base * float(np.exp(spread * cfg.user_separation * levels[j]))

    grip = np.array([rng.normal(0, 0.05), 0.6 + rng.normal(0, 0.1), 0.8])
    grip = grip / np.linalg.norm(grip)
    style = UserStyle(
        values=values,
        tremor_hz=TREMOR_HZ * float(np.exp(0.1 * levels[list(STYLE_DIMS).index('tremor')])),
        gait_hz=GAIT_HZ * (1.0 + 0.08 * float(rng.normal())),
        grip=grip,
    )
    for context in ALL_CONTEXTS:
        shifts = rng.normal(0.0, 1.0, len(STYLE_DIMS))
        style.context_factors[context] = {
            name: float(np.exp(cfg.context_shift * s)) for name, s in zip(STYLE_DIMS, shifts)
        }
    return style


def _context_adjust(style: Dict[str, float], context: Context) -> Dict[str, float]:
    style = dict(style)
    if context.usage == 'map':
        style['length'] *= 0.8
    if context.activity == 'walk':
        style['speed'] *= 1.1
    return style


def _swipe_points(style: Dict[str, float], vertical: bool, sign: float, walking: bool, cv: float,
                  anchor_jitter: float,
                  rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    noisy = {k: v * float(np.exp(rng.normal(0.0, cv))) for k, v in style.items()}

    length = noisy['length']
    duration = length / noisy['speed']
    n = max(8, int(round(duration / SAMPLE_INTERVAL_MS)) + 1)
    intervals = SAMPLE_INTERVAL_MS + rng.integers(-1, 2, n - 1)
    t_rel = np.concatenate([[0], np.cumsum(intervals)]).astype(np.int64)
    tau = t_rel / t_rel[-1]
    progress = 10 * tau ** 3 - 15 * tau ** 4 + 6 * tau ** 5

    drift = rng.normal(0.0, 0.08)
    if vertical:
        chord = np.array([np.sin(drift), sign * np.cos(drift)])
    else:
        chord = np.array([sign * np.cos(drift), np.sin(drift)])
    normal = np.array([-chord[1], chord[0]])

    start = np.array([style['anchor_x'] + rng.normal(0, anchor_jitter),
                      style['anchor_y'] + rng.normal(0, anchor_jitter)])
    bow = noisy['curvature'] * length * np.sin(np.pi * progress)
    points = start + np.outer(progress * length, chord) + np.outer(bow, normal)
    if walking:
        points = points + rng.normal(0.0, 3.0, points.shape)

    pressure = noisy['pressure'] * (1.0 + 0.2 * np.sin(np.pi * tau)) + rng.normal(0.0, 0.01, n)
    pressure = np.clip(pressure, 0.01, None)
    return t_rel, np.round(points, 2), np.round(pressure, 4), tau


def _generate_session(cfg: SynthConfig, session: SessionId, user_style: UserStyle,
                      rng: np.random.Generator) -> SessionRecord:
    context = session.context
    walking = context.activity == 'walk'
    own = _context_adjust(user_style.for_context(context), context)
    shared = _context_adjust(population_style(), context)
    touch_identity = cfg.walk_touch_identity if walking else 1.0
    vertical_style = blend_style(shared, own, touch_identity)
    horizontal_style = blend_style(shared, own, touch_identity * cfg.horizontal_identity)
    cv = cfg.walk_touch_noise if walking else SIT_TOUCH_NOISE
    anchor_jitter = cfg.walk_anchor_jitter if walking else ANCHOR_JITTER_PX
    motion_identity = 1.0 if walking else cfg.sit_motion_identity
    tremor = blend(shared['tremor'], own['tremor'], motion_identity)
    tremor_hz = blend(TREMOR_HZ, user_style.tremor_hz, motion_identity)
    jolt_level = blend(shared['jolt'], own['jolt'], motion_identity)
    vertical_share = 0.96 if context.usage == 'read' else 0.5

    touch_parts: List[pd.DataFrame] = []
    spans: List[Tuple[int, int, float]] = []
    cursor = 1000
    for _ in range(cfg.swipes_per_session):
        vertical = bool(rng.random() < vertical_share)
        if context.usage == 'read':
            sign = -1.0 if rng.random() < 0.8 else 1.0
        else:
            sign = -1.0 if rng.random() < 0.5 else 1.0
        style = vertical_style if vertical else horizontal_style
        t_rel, points, pressure, _ = _swipe_points(style, vertical, sign, walking, cv, anchor_jitter, rng)

        t0 = cursor + int(rng.integers(700, 1600))
        t = t0 + t_rel
        actions = np.full(len(t), TouchAction.MOVE.value, dtype=np.int64)
        actions[0] = TouchAction.DOWN.value
        actions[-1] = TouchAction.UP.value
        touch_parts.append(pd.DataFrame({
            't': t, 'x': points[:, 0], 'y': points[:, 1], 'pressure': pressure, 'action': actions
        }, columns=TOUCH_COLUMNS))
        jolt = jolt_level * float(np.exp(rng.normal(0.0, 0.1)))
        spans.append((int(t[0]), int(t[-1]), jolt))
        cursor = int(t[-1])

    t_acc = np.arange(0, cursor + 1000, ACCEL_INTERVAL_MS, dtype=np.int64)
    seconds = t_acc / 1000.0
    signal = tremor * np.sin(2 * np.pi * tremor_hz * seconds + rng.uniform(0, 2 * np.pi))
    if walking:
        gait = gait_amplitude(cfg, user_style, context) * float(np.exp(rng.normal(0.0, GAIT_SESSION_JITTER)))
        signal = signal + gait * np.sin(2 * np.pi * user_style.gait_hz * seconds + rng.uniform(0, 2 * np.pi))
    for start, end, jolt in spans:
        lo = np.searchsorted(t_acc, start, side='left')
        hi = np.searchsorted(t_acc, end, side='right')
        signal[lo:hi] += jolt * np.sin(np.pi * (t_acc[lo:hi] - start) / (end - start))
    signal = signal + rng.normal(0.0, SENSOR_NOISE, len(t_acc))

    components = np.outer(GRAVITY + signal, user_style.grip) + rng.normal(0.0, 0.01, (len(t_acc), 3))
    components = np.round(components, 4)
    accel = pd.DataFrame({
        't': t_acc, 'ax': components[:, 0], 'ay': components[:, 1], 'az': components[:, 2]
    }, columns=ACCEL_COLUMNS)

    touch = pd.concat(touch_parts, ignore_index=True)
    return SessionRecord(session, touch, accel, source='synthetic')


def separable_config(n_users: int = 5, swipes_per_session: int = 50, rng_seed: int = 0) -> SynthConfig:
    """Users far apart on every style dimension, no context drift, full identity in every context."""
    return SynthConfig(
        n_users=n_users,
        swipes_per_session=swipes_per_session,
        user_separation=5.0,
        walk_noise=1.5,
        rng_seed=rng_seed,
        context_shift=0.0,
        horizontal_identity=1.0,
        walk_touch_identity=1.0,
        walk_touch_noise=0.14,
        walk_anchor_jitter=ANCHOR_JITTER_PX,
        sit_motion_identity=1.0,
    )


def _users(cfg: SynthConfig) -> Iterator[Tuple[str, UserStyle, np.random.Generator]]:
    """Per-user id, style and the generator that continues into that user's sessions."""
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.n_users + 1)
    levels = _draw_styles(cfg, np.random.default_rng(seeds[0]))
    for u in range(cfg.n_users):
        rng = np.random.default_rng(seeds[u + 1])
        yield f"user{u + 1:03d}", _make_user_style(cfg, levels[u], rng), rng


def user_styles(cfg: SynthConfig) -> Dict[str, UserStyle]:
    """Latent styles generate_synthetic would use for cfg, keyed by user id."""
    cfg.validate()
    return {user_id: style for user_id, style, _ in _users(cfg)}


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    """Generate a Dataset deterministically from cfg.rng_seed."""
    cfg.validate()
    contexts = [c for c in ALL_CONTEXTS if c in set(cfg.contexts)]

    dataset = Dataset()
    for user_id, style, rng in _users(cfg):
        sessions = []
        for context in contexts:
            for index in range(1, cfg.sessions_per_context + 1):
                sessions.append(_generate_session(cfg, SessionId(user_id, index, context), style, rng))
        dataset.users.append(UserRecord(user_id, sessions))

    logger.info(f"Synthetic dataset: {cfg.n_users} users, {len(contexts)} contexts, "
                f"{cfg.swipes_per_session} swipes/session, separation {cfg.user_separation}")
    return dataset
