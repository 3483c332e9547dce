"""Independent reference implementations used as test oracles.

Everything here is written as the slowest, most direct transliteration of
the definitions — plain Python loops, no vectorization, no shared code with
the package under test — so the optimized implementations have something
honest to be checked against.
"""

from __future__ import annotations

import math


def naive_xcorr(x, y, max_shift: int) -> float:
    """Brute-force normalized cross-correlation over shifts, O(S*T*D).

    x and y are sequences of equal-width feature rows. For shift s, row t of
    x is aligned with row t+s of y; shifts whose overlap is shorter than
    min(10, min(Tx, Ty)) rows are skipped; a zero norm on either side of an
    admissible shift scores 0.
    """
    tx, ty = len(x), len(y)
    dims = len(x[0])
    min_overlap = min(10, tx, ty)
    best = None
    for s in range(-max_shift, max_shift + 1):
        t_lo = max(0, -s)
        t_hi = min(tx, ty - s)
        if t_hi - t_lo < min_overlap:
            continue
        num = 0.0
        nx = 0.0
        ny = 0.0
        for t in range(t_lo, t_hi):
            for d in range(dims):
                a = float(x[t][d])
                b = float(y[t + s][d])
                num += a * b
                nx += a * a
                ny += b * b
        if nx == 0.0 or ny == 0.0:
            r = 0.0
        else:
            r = num / (math.sqrt(nx) * math.sqrt(ny))
        if best is None or r > best:
            best = r
    if best is None:
        raise AssertionError("oracle: no admissible shift")
    return best


def ema_closed_form(prior: float, outcomes, alpha: float) -> float:
    """Closed form of the exponential moving average after a run of outcomes.

    p_n = (1-a)^n * prior + a * sum_i (1-a)^(n-1-i) * o_i,  o_i in {0, 1}.
    """
    n = len(outcomes)
    value = (1.0 - alpha) ** n * prior
    for i, outcome in enumerate(outcomes):
        value += alpha * (1.0 - alpha) ** (n - 1 - i) * (1.0 if outcome else 0.0)
    return value


def projectile_position(angle_deg: float, speed: float, t: float,
                        launch_height: float, gravity: float) -> tuple[float, float]:
    """Textbook constant-gravity trajectory from (0, launch_height)."""
    theta = math.radians(angle_deg)
    vx = speed * math.cos(theta)
    vy = speed * math.sin(theta)
    return vx * t, launch_height + vy * t - 0.5 * gravity * t * t


def stepped_projectile(angle_deg: float, speed: float, n_ticks: int, dt: float,
                       launch_height: float, gravity: float) -> list[tuple[float, float]]:
    """Tick-by-tick positions from independent per-step kinematics.

    Each step applies the exact constant-acceleration update, so position
    after k steps must equal the closed form at t = k*dt up to rounding.
    """
    theta = math.radians(angle_deg)
    x, y = 0.0, launch_height
    vx = speed * math.cos(theta)
    vy = speed * math.sin(theta)
    out = []
    for _ in range(n_ticks):
        x += vx * dt
        y += vy * dt - 0.5 * gravity * dt * dt
        vy -= gravity * dt
        out.append((x, y))
    return out


def zcr_of(samples) -> float:
    """Fraction of adjacent sample pairs with a strict sign flip (product < 0)."""
    if len(samples) < 2:
        return 0.0
    flips = 0
    for a, b in zip(samples, samples[1:]):
        if float(a) * float(b) < 0.0:
            flips += 1
    return flips / (len(samples) - 1)
