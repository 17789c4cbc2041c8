import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy.stats import trim_mean

from .catalog import CHECKPOINTS, N_FEATURES, N_MOTION, N_TOUCH, feature_names
from .segment import MAX_GAP_MS, MIN_SWIPE_POINTS, MOTION_WINDOW_MS, Swipe, attach_motion, segment_swipes
from ..data.ingest import Dataset, SessionRecord


logger = logging.getLogger(__name__)

META_COLUMNS = ['user', 'session_index', 'context', 't_start', 'direction']
WINDOW_PERCENTILES = (5, 10, 25, 50, 75, 90, 95)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    source: Optional[Swipe] = None

    def __len__(self):
        return len(self.values)


def wrap_degrees(angle: float) -> float:
    """Map an angle in degrees to (-180, 180]."""
    wrapped = (angle + 180.0) % 360.0 - 180.0
    if wrapped <= -180.0:
        wrapped += 360.0
    return wrapped


class SwipeFeatures:
    @staticmethod
    def stats9(values: np.ndarray) -> List[float]:
        if len(values) == 0:
            return [0.0] * 9
        p5, p25, p50, p75, p95 = np.percentile(values, [5, 25, 50, 75, 95])
        std = float(np.std(values)) if len(values) > 1 else 0.0
        return [float(np.mean(values)), std, float(np.min(values)), float(np.max(values)),
                float(p5), float(p25), float(p50), float(p75), float(p95)]

    @staticmethod
    def derivative(values: np.ndarray, t: np.ndarray) -> np.ndarray:
        """Central differences inside, one-sided at both ends."""
        n = len(values)
        if n < 2:
            return np.zeros(n)
        d = np.empty(n)
        d[0] = (values[1] - values[0]) / (t[1] - t[0])
        d[-1] = (values[-1] - values[-2]) / (t[-1] - t[-2])
        if n > 2:
            d[1:-1] = (values[2:] - values[:-2]) / (t[2:] - t[:-2])
        return d

    @staticmethod
    def curvature(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Menger curvature at interior points; 0 where the triangle is degenerate."""
        if len(x) < 3:
            return np.zeros(0)
        ux, uy = x[1:-1] - x[:-2], y[1:-1] - y[:-2]
        wx, wy = x[2:] - x[1:-1], y[2:] - y[1:-1]
        cx, cy = x[2:] - x[:-2], y[2:] - y[:-2]
        a = np.sqrt(ux * ux + uy * uy)
        b = np.sqrt(wx * wx + wy * wy)
        c = np.sqrt(cx * cx + cy * cy)
        cross = ux * wy - uy * wx
        denom = a * b * c
        result = np.zeros(len(denom))
        ok = denom > 0
        result[ok] = 2.0 * np.abs(cross[ok]) / denom[ok]
        return result

    @staticmethod
    def sign_changes(deltas: np.ndarray) -> int:
        signs = np.sign(deltas)
        signs = signs[signs != 0]
        if len(signs) < 2:
            return 0
        return int(np.count_nonzero(signs[1:] != signs[:-1]))

    @staticmethod
    def window_features(window: np.ndarray) -> List[float]:
        """28 statistics of one (t, magnitude) window; an empty window yields zeros."""
        if len(window) == 0:
            return [0.0] * 28
        t = window[:, 0] - window[0, 0]
        v = window[:, 1]
        n = len(v)
        constant = bool(np.max(v) == np.min(v))

        mean = float(v[0]) if constant else float(np.mean(v))
        c = v - mean
        var = float(np.mean(c * c)) if n > 1 else 0.0
        std = float(np.sqrt(var))
        mad = float(np.mean(np.abs(c)))
        trimmed = float(trim_mean(v, 0.1))

        vmin, vmax = float(np.min(v)), float(np.max(v))
        argmin_pos = float(np.argmin(v)) / (n - 1) if n > 1 else 0.0
        argmax_pos = float(np.argmax(v)) / (n - 1) if n > 1 else 0.0

        pct = [float(p) for p in np.percentile(v, WINDOW_PERCENTILES)]
        iqr = pct[4] - pct[2]

        mean_square = float(np.mean(v * v))
        rms = float(np.sqrt(mean_square))
        mean_abs_diff = float(np.mean(np.abs(np.diff(v)))) if n > 1 else 0.0

        denom = float(np.sum(c * c))
        autocorr = float(np.sum(c[:-1] * c[1:]) / denom) if (n > 1 and denom > 0) else 0.0

        slope = 0.0
        if n > 1:
            seconds = t / 1000.0
            sc = seconds - np.mean(seconds)
            sxx = float(np.sum(sc * sc))
            if sxx > 0:
                slope = float(np.sum(sc * c) / sxx)

        above = c >= 0
        crossing_rate = float(np.count_nonzero(above[1:] != above[:-1])) / (n - 1) if n > 1 else 0.0

        if n > 2:
            peaks = (v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])
            peak_values = v[1:-1][peaks]
        else:
            peak_values = np.zeros(0)
        peak_count = float(len(peak_values))
        peak_height = float(np.mean(peak_values)) if len(peak_values) else 0.0

        first_last = float(v[-1] - v[0])
        skew_proxy = mean - pct[3]

        return [
            mean, std, var, mad, trimmed,
            vmin, vmax, vmax - vmin, argmin_pos, argmax_pos,
            *pct, iqr,
            rms, mean_square, mean_abs_diff,
            autocorr, slope, crossing_rate, peak_count, peak_height, first_last, skew_proxy,
        ]


def extract_touch(swipe: Swipe) -> np.ndarray:
    t = (swipe.t - swipe.t[0]).astype(float)
    x = np.asarray(swipe.x, dtype=float)
    y = np.asarray(swipe.y, dtype=float)
    p = np.asarray(swipe.pressure, dtype=float)
    f = SwipeFeatures
    values: List[float] = []

    # position, pressure
    values += f.stats9(x) + f.stats9(y)
    values += f.stats9(p)

    # kinematics
    vx, vy = f.derivative(x, t), f.derivative(y, t)
    speed = np.sqrt(vx * vx + vy * vy)
    ax, ay = f.derivative(vx, t), f.derivative(vy, t)
    acc = np.sqrt(ax * ax + ay * ay)
    values += f.stats9(vx) + f.stats9(vy) + f.stats9(speed) + f.stats9(acc)

    # geometry
    rx, ry = x - x[0], y - y[0]
    dx, dy = float(rx[-1]), float(ry[-1])
    displacement = float(np.sqrt(dx * dx + dy * dy))
    sdx, sdy = np.diff(x), np.diff(y)
    seg_len = np.sqrt(sdx * sdx + sdy * sdy)
    path = float(np.sum(seg_len))
    straightness = displacement / path if path > 0 else 0.0
    x_range, y_range = float(np.max(x) - np.min(x)), float(np.max(y) - np.min(y))
    longest = max(x_range, y_range)
    aspect = min(x_range, y_range) / longest if longest > 0 else 0.0
    if displacement > 0:
        deviation = np.abs(rx * dy - ry * dx) / displacement
    else:
        deviation = np.sqrt(rx * rx + ry * ry)
    std_dev = float(np.std(deviation)) if len(deviation) > 1 else 0.0
    chord_area = 0.5 * float(np.sum(rx[:-1] * ry[1:] - rx[1:] * ry[:-1]))
    curv = f.curvature(x, y)
    if len(curv):
        curv_stats = [float(np.mean(curv)), float(np.std(curv)) if len(curv) > 1 else 0.0, float(np.max(curv))]
    else:
        curv_stats = [0.0, 0.0, 0.0]
    values += [float(x[0]), float(y[0]), float(x[-1]), float(y[-1]), dx, dy, displacement, path,
               straightness, x_range, y_range, aspect,
               float(np.max(deviation)), float(np.mean(deviation)), std_dev, chord_area,
               *curv_stats, x_range * y_range]

    # direction
    chord_rad = float(np.arctan2(dy, dx))
    angle = wrap_degrees(float(np.degrees(chord_rad)))
    first3 = wrap_degrees(float(np.degrees(np.arctan2(y[2] - y[0], x[2] - x[0]))))
    last3 = wrap_degrees(float(np.degrees(np.arctan2(y[-1] - y[-3], x[-1] - x[-3]))))
    moving = seg_len > 0
    if np.any(moving):
        theta = np.arctan2(sdy[moving], sdx[moving])
        mc, ms = float(np.mean(np.cos(theta))), float(np.mean(np.sin(theta)))
        seg_mean = wrap_degrees(float(np.degrees(np.arctan2(ms, mc))))
        r = min(float(np.sqrt(mc * mc + ms * ms)), 1.0)
        seg_std = float(np.degrees(np.sqrt(-2.0 * np.log(r)))) if r > 0 else 0.0
    else:
        seg_mean, seg_std = 0.0, 0.0
    values += [angle, float(np.sin(chord_rad)), float(np.cos(chord_rad)), first3, last3,
               wrap_degrees(last3 - first3), seg_mean, seg_std,
               float(f.sign_changes(sdx)), float(f.sign_changes(sdy))]

    # temporal
    duration = float(t[-1])
    intervals = np.diff(t)
    interval_std = float(np.std(intervals)) if len(intervals) > 1 else 0.0
    peak_speed = float(t[int(np.argmax(speed))]) / duration if duration > 0 else 0.0
    peak_pressure = float(t[int(np.argmax(p))]) / duration if duration > 0 else 0.0
    values += [duration, float(len(t)), float(np.mean(intervals)), interval_std, peak_speed, peak_pressure]

    # checkpoints
    at = np.array([c / 100.0 for c in CHECKPOINTS]) * duration
    values += [float(v) for v in np.interp(at, t, speed)]
    values += [float(v) for v in np.interp(at, t, p)]
    if len(curv):
        values += [float(v) for v in np.interp(at, t[1:-1], curv)]
    else:
        values += [0.0] * len(CHECKPOINTS)

    # transition
    jx, jy = f.derivative(ax, t), f.derivative(ay, t)
    jerk = np.sqrt(jx * jx + jy * jy)
    values += [float(p[-1] - p[0]), float(speed[-1] - speed[0]), float(np.mean(jerk))]

    return np.array(values, dtype=float)


def extract_motion(swipe: Swipe) -> np.ndarray:
    blocks = [SwipeFeatures.window_features(w) for w in (swipe.mag_pre, swipe.mag_during, swipe.mag_post)]
    pre, during, post = blocks
    # mean, std, rms, max, range positions inside a window block
    picks = (0, 1, 18, 6, 7)
    cross = [during[i] - pre[i] for i in picks] + [during[i] - post[i] for i in picks]
    return np.array(pre + during + post + cross, dtype=float)


def extract(swipe: Swipe) -> FeatureVector:
    values = np.concatenate([extract_touch(swipe), extract_motion(swipe)])
    if not np.all(np.isfinite(values)):
        logger.debug(f"Non-finite feature values replaced by 0.0 for swipe at t={swipe.t_start}")
        values = np.nan_to_num(values, nan=0.0, posinf=0.0, neginf=0.0)
    if len(values) != N_FEATURES:
        raise RuntimeError(f"Extracted {len(values)} values, expected {N_FEATURES}")
    return FeatureVector(values, swipe)


def extract_table(swipes: Sequence[Swipe]) -> pd.DataFrame:
    names = feature_names()
    if not swipes:
        return pd.DataFrame(columns=META_COLUMNS + names)
    matrix = np.vstack([extract(s).values for s in swipes])
    meta = pd.DataFrame({
        'user': [s.session.user if s.session else '' for s in swipes],
        'session_index': [s.session.session_index if s.session else 0 for s in swipes],
        'context': [s.session.context.value if s.session else '' for s in swipes],
        't_start': [s.t_start for s in swipes],
        'direction': [s.direction.value for s in swipes],
    })
    return pd.concat([meta, pd.DataFrame(matrix, columns=names)], axis=1)


def session_swipes(record: SessionRecord, min_points: int = MIN_SWIPE_POINTS,
                   max_gap_ms: int = MAX_GAP_MS, window_ms: int = MOTION_WINDOW_MS) -> List[Swipe]:
    swipes = segment_swipes(record.touch, record.session, min_points=min_points, max_gap_ms=max_gap_ms)
    return attach_motion(swipes, record.accel, window_ms=window_ms)


def build_feature_table(dataset: Dataset, workers: int = 1, min_points: int = MIN_SWIPE_POINTS,
                        max_gap_ms: int = MAX_GAP_MS, window_ms: int = MOTION_WINDOW_MS) -> pd.DataFrame:
    """Segment, attach motion and extract every session; rows keep dataset order."""
    records = dataset.sessions()

    def work(record: SessionRecord) -> pd.DataFrame:
        return extract_table(session_swipes(record, min_points, max_gap_ms, window_ms))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        tables = list(executor.map(work, records))

    tables = [t for t in tables if not t.empty]
    if not tables:
        return extract_table([])
    table = pd.concat(tables, ignore_index=True)
    logger.info(f"Extracted {len(table)} swipes x {N_TOUCH}+{N_MOTION} features from {len(records)} sessions")
    return table


def write_feature_table(table: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, lineterminator='\n')
    return path


def read_feature_table(path: Union[str, Path]) -> pd.DataFrame:
    table = pd.read_csv(path, dtype={'user': str, 'context': str, 'direction': str},
                        float_precision='round_trip')
    missing = [c for c in META_COLUMNS + feature_names() if c not in table.columns]
    if missing:
        raise ValueError(f"Feature table {path} lacks columns: {missing[:5]}")
    return table
