"""
Reference feature computation in plain Python (math + lists only).

Used by the test-suite to check the vectorized extractor on the golden fixtures.
Definitions follow the feature catalog order: 117 touch values, then 94 motion values.
"""

import math
from typing import List, Sequence, Tuple


def mean(v: Sequence[float]) -> float:
    return math.fsum(v) / len(v)


def pstd(v: Sequence[float]) -> float:
    if len(v) < 2:
        return 0.0
    m = mean(v)
    return math.sqrt(math.fsum((x - m) ** 2 for x in v) / len(v))


def percentile(v: Sequence[float], q: float) -> float:
    s = sorted(v)
    pos = q / 100.0 * (len(s) - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (s[hi] - s[lo]) * (pos - lo)


def median(v: Sequence[float]) -> float:
    return percentile(v, 50)


def stats9(v: Sequence[float]) -> List[float]:
    if not v:
        return [0.0] * 9
    return [mean(v), pstd(v), min(v), max(v)] + [percentile(v, q) for q in (5, 25, 50, 75, 95)]


def derivative(v: Sequence[float], t: Sequence[float]) -> List[float]:
    n = len(v)
    if n < 2:
        return [0.0] * n
    d = [0.0] * n
    d[0] = (v[1] - v[0]) / (t[1] - t[0])
    d[-1] = (v[-1] - v[-2]) / (t[-1] - t[-2])
    for i in range(1, n - 1):
        d[i] = (v[i + 1] - v[i - 1]) / (t[i + 1] - t[i - 1])
    return d


def interp(x: float, xs: Sequence[float], ys: Sequence[float]) -> float:
    if x <= xs[0]:
        return ys[0]
    if x >= xs[-1]:
        return ys[-1]
    for i in range(len(xs) - 1):
        if xs[i] <= x <= xs[i + 1]:
            if xs[i + 1] == xs[i]:
                return ys[i]
            return ys[i] + (ys[i + 1] - ys[i]) * (x - xs[i]) / (xs[i + 1] - xs[i])
    return ys[-1]


def wrap(angle: float) -> float:
    w = (angle + 180.0) % 360.0 - 180.0
    return w + 360.0 if w <= -180.0 else w


def sign_changes(deltas: Sequence[float]) -> int:
    signs = [1 if d > 0 else -1 for d in deltas if d != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def touch_features(points: Sequence[Tuple[int, float, float, float]]) -> List[float]:
    """points: (t, x, y, pressure) in chronological order."""
    t0 = points[0][0]
    t = [float(p[0] - t0) for p in points]
    x = [p[1] for p in points]
    y = [p[2] for p in points]
    pr = [p[3] for p in points]
    n = len(points)
    out: List[float] = []

    out += stats9(x) + stats9(y) + stats9(pr)

    vx, vy = derivative(x, t), derivative(y, t)
    speed = [math.sqrt(a * a + b * b) for a, b in zip(vx, vy)]
    ax, ay = derivative(vx, t), derivative(vy, t)
    acc = [math.sqrt(a * a + b * b) for a, b in zip(ax, ay)]
    out += stats9(vx) + stats9(vy) + stats9(speed) + stats9(acc)

    rx = [v - x[0] for v in x]
    ry = [v - y[0] for v in y]
    dx, dy = rx[-1], ry[-1]
    disp = math.sqrt(dx * dx + dy * dy)
    sdx = [x[i + 1] - x[i] for i in range(n - 1)]
    sdy = [y[i + 1] - y[i] for i in range(n - 1)]
    seg = [math.sqrt(a * a + b * b) for a, b in zip(sdx, sdy)]
    path = math.fsum(seg)
    x_range, y_range = max(x) - min(x), max(y) - min(y)
    longest = max(x_range, y_range)
    if disp > 0:
        dev = [abs(a * dy - b * dx) / disp for a, b in zip(rx, ry)]
    else:
        dev = [math.sqrt(a * a + b * b) for a, b in zip(rx, ry)]
    area = 0.5 * math.fsum(rx[i] * ry[i + 1] - rx[i + 1] * ry[i] for i in range(n - 1))
    curv = []
    for i in range(1, n - 1):
        ux, uy = x[i] - x[i - 1], y[i] - y[i - 1]
        wx, wy = x[i + 1] - x[i], y[i + 1] - y[i]
        cx, cy = x[i + 1] - x[i - 1], y[i + 1] - y[i - 1]
        denom = math.sqrt(ux * ux + uy * uy) * math.sqrt(wx * wx + wy * wy) * math.sqrt(cx * cx + cy * cy)
        curv.append(2.0 * abs(ux * wy - uy * wx) / denom if denom > 0 else 0.0)
    out += [x[0], y[0], x[-1], y[-1], dx, dy, disp, path,
            disp / path if path > 0 else 0.0, x_range, y_range,
            min(x_range, y_range) / longest if longest > 0 else 0.0,
            max(dev), mean(dev), pstd(dev), area,
            mean(curv), pstd(curv), max(curv), x_range * y_range]

    chord = math.atan2(dy, dx)
    first3 = wrap(math.degrees(math.atan2(y[2] - y[0], x[2] - x[0])))
    last3 = wrap(math.degrees(math.atan2(y[-1] - y[-3], x[-1] - x[-3])))
    thetas = [math.atan2(b, a) for a, b, s in zip(sdx, sdy, seg) if s > 0]
    mc = mean([math.cos(v) for v in thetas])
    ms = mean([math.sin(v) for v in thetas])
    r = min(math.sqrt(mc * mc + ms * ms), 1.0)
    out += [wrap(math.degrees(chord)), math.sin(chord), math.cos(chord), first3, last3,
            wrap(last3 - first3), wrap(math.degrees(math.atan2(ms, mc))),
            math.degrees(math.sqrt(-2.0 * math.log(r))) if r > 0 else 0.0,
            float(sign_changes(sdx)), float(sign_changes(sdy))]

    duration = t[-1]
    intervals = [t[i + 1] - t[i] for i in range(n - 1)]
    peak_speed = t[speed.index(max(speed))] / duration
    peak_pressure = t[pr.index(max(pr))] / duration
    out += [duration, float(n), mean(intervals), pstd(intervals), peak_speed, peak_pressure]

    at = [c / 100.0 * duration for c in (20, 35, 50, 65, 80)]
    out += [interp(a, t, speed) for a in at]
    out += [interp(a, t, pr) for a in at]
    out += [interp(a, t[1:-1], curv) for a in at]

    jx, jy = derivative(ax, t), derivative(ay, t)
    jerk = [math.sqrt(a * a + b * b) for a, b in zip(jx, jy)]
    out += [pr[-1] - pr[0], speed[-1] - speed[0], mean(jerk)]
    return out


def window_features(window: Sequence[Tuple[float, float]]) -> List[float]:
    if not window:
        return [0.0] * 28
    t = [w[0] - window[0][0] for w in window]
    v = [w[1] for w in window]
    n = len(v)
    constant = max(v) == min(v)
    m = v[0] if constant else mean(v)
    c = [x - m for x in v]
    var = math.fsum(d * d for d in c) / n if n > 1 else 0.0
    mad = mean([abs(d) for d in c])
    cut = int(0.1 * n)
    trimmed = mean(sorted(v)[cut:n - cut])

    out = [m, math.sqrt(var), var, mad, trimmed]
    out += [min(v), max(v), max(v) - min(v),
            v.index(min(v)) / (n - 1) if n > 1 else 0.0,
            v.index(max(v)) / (n - 1) if n > 1 else 0.0]
    pct = [percentile(v, q) for q in (5, 10, 25, 50, 75, 90, 95)]
    out += pct + [pct[4] - pct[2]]
    mean_square = mean([x * x for x in v])
    out += [math.sqrt(mean_square), mean_square,
            mean([abs(v[i + 1] - v[i]) for i in range(n - 1)]) if n > 1 else 0.0]

    denom = math.fsum(d * d for d in c)
    autocorr = math.fsum(c[i] * c[i + 1] for i in range(n - 1)) / denom if (n > 1 and denom > 0) else 0.0
    slope = 0.0
    if n > 1:
        s = [ti / 1000.0 for ti in t]
        sm = mean(s)
        sxx = math.fsum((a - sm) ** 2 for a in s)
        if sxx > 0:
            slope = math.fsum((a - sm) * d for a, d in zip(s, c)) / sxx
    above = [d >= 0 for d in c]
    crossing = sum(1 for a, b in zip(above, above[1:]) if a != b) / (n - 1) if n > 1 else 0.0
    peaks = [v[i] for i in range(1, n - 1) if v[i] > v[i - 1] and v[i] > v[i + 1]]
    out += [autocorr, slope, crossing, float(len(peaks)), mean(peaks) if peaks else 0.0,
            v[-1] - v[0], m - pct[3]]
    return out


def motion_features(accel: Sequence[Tuple[int, float, float, float]], t_start: int, t_end: int,
                    window_ms: int = 500) -> List[float]:
    """accel: (t, ax, ay, az) in chronological order."""
    mag = [(float(t), math.sqrt(a * a + b * b + c * c)) for t, a, b, c in accel]
    pre = [m for m in mag if t_start - window_ms <= m[0] < t_start]
    during = [m for m in mag if t_start <= m[0] <= t_end]
    post = [m for m in mag if t_end < m[0] <= t_end + window_ms]
    blocks = [window_features(w) for w in (pre, during, post)]
    picks = (0, 1, 18, 6, 7)
    cross = [blocks[1][i] - blocks[0][i] for i in picks] + [blocks[1][i] - blocks[2][i] for i in picks]
    return blocks[0] + blocks[1] + blocks[2] + cross
