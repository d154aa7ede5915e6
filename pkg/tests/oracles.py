"""Independent brute-force oracle for the SPS candidate selection, plus a
random-history generator shared by the unit and acceptance suites.

The oracle is a literal rendering of the stated rule: exclude candidates that
collide with projected reservations at or above the RSRP threshold (relaxing
the threshold by 3 dB while fewer than 20% of the pool survives), score each
candidate by the mean RSSI of its period-congruent sensed slots (own-TX slots
count as the window average, idle slots as the noise floor), sort ascending,
and keep the lowest 20% of the original pool, at least one, ties broken by
ascending (subframe, first subchannel).
"""

import math

import numpy as np

from platoonsim.mac_sps import Candidate, ReservationRecord, SensingHistory

NOISE_DBM = -116.0


def brute_force_sense(history, sel_start, sel_end, needed, thr0, period_ms, now):
    win_lo = now - history.window_ms
    win_hi = now - 1
    own = {t for t in history.own_tx if win_lo <= t <= win_hi}
    busy = {t: r for t, r in history.busy if win_lo <= t <= win_hi}

    cells = []
    for t in range(win_lo, win_hi + 1):
        if t in own:
            continue
        for c in range(history.n_subchannels):
            cells.append(busy[t][c] if t in busy else history.noise_mw)
    avg = sum(cells) / len(cells) if cells else history.noise_mw

    def score(cand):
        total, count = 0.0, 0
        t = cand.subframe - period_ms
        while t >= win_lo:
            if t <= win_hi:
                for c in cand.subchannels:
                    if t in own:
                        total += avg
                    elif t in busy:
                        total += busy[t][c]
                    else:
                        total += history.noise_mw
                    count += 1
            t -= period_ms
        return total / count if count else avg

    pool = [
        Candidate(t, tuple(range(s, s + needed)))
        for t in range(sel_start, sel_end + 1)
        for s in range(history.n_subchannels - needed + 1)
    ]
    projected = []
    for rec in history.reservations:
        t = rec.subframe + rec.period_ms
        while t <= sel_end:
            if t >= sel_start:
                projected.append((t, set(rec.subchannels), rec.rsrp_dbm))
            t += rec.period_ms

    thr = thr0
    while True:
        survivors = [
            cand
            for cand in pool
            if not any(
                t == cand.subframe and rsrp >= thr and subs & set(cand.subchannels)
                for t, subs, rsrp in projected
            )
        ]
        if len(survivors) >= 0.2 * len(pool):
            break
        thr += 3.0

    ranked = sorted(survivors, key=lambda c: (score(c), c.subframe, c.subchannels[0]))
    return ranked[: max(1, math.floor(0.2 * len(pool)))]


def random_history(rng: np.random.Generator):
    """Random sensing state on a dyadic mW grid.

    Dyadic values keep every float sum exact, so the implementation and the
    oracle agree bit for bit and ordering ties are broken identically.
    """
    n_subch = int(rng.integers(1, 5))
    window = int(rng.integers(10, 60))
    history = SensingHistory(n_subch, window, NOISE_DBM)
    history.noise_mw = 2.0**-40
    now = int(rng.integers(window, window + 40))

    frames = list(range(now - window, now))
    rng.shuffle(frames)
    n_busy = int(rng.integers(0, 9))
    n_own = int(rng.integers(0, 4))
    for t in sorted(frames[:n_busy]):
        rssi = [float(rng.integers(1, 2**20)) * 2.0**-44 for _ in range(n_subch)]
        history.observe_busy(t, rssi)
    for t in sorted(frames[n_busy : n_busy + n_own]):
        history.observe_own_tx(t)

    for _ in range(int(rng.integers(0, 4))):
        width = int(rng.integers(1, n_subch + 1))
        start = int(rng.integers(0, n_subch - width + 1))
        history.add_reservation(
            ReservationRecord(
                subframe=int(rng.integers(now - window, now)),
                subchannels=tuple(range(start, start + width)),
                tx_id=99,
                period_ms=int(rng.choice([5, 10, 20])),
                rsrp_dbm=float(rng.uniform(-120.0, -80.0)),
            )
        )

    needed = int(rng.integers(1, n_subch + 1))
    starts = n_subch - needed + 1
    max_frames = max(1, 20 // starts)
    sel_start = now + 1
    sel_end = sel_start + int(rng.integers(1, max_frames + 1)) - 1
    period_ms = int(rng.choice([5, 10, 20]))
    return history, now, sel_start, sel_end, needed, period_ms
