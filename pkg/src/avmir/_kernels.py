"""Hot numeric kernels with two interchangeable backends.

Every kernel exists twice: a loop version compiled with numba's @njit and a
vectorized pure-numpy version.  The active backend is chosen at import time;
set AVMIR_PURE_NUMPY=1 to force the numpy path (or it is used automatically
when numba is not installed).  Both variants of a kernel compute bit-identical
results; tests/test_kernels.py asserts the parity and benchmarks/bench_kernels.py
compares their speed.

The min-cost-flow solver for the earth mover's distance has no vectorized
form; its "numpy" fallback is the same loop code running uncompiled, which is
slow but correct.
"""

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("AVMIR_PURE_NUMPY", "").strip() not in ("", "0")

if not _FORCE_NUMPY:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _FORCE_NUMPY = True

NUMBA_ENABLED = not _FORCE_NUMPY

if not NUMBA_ENABLED:
    def njit(*args, **kwargs):
        # identity decorator so the loop kernels stay importable without numba
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


# ---------------------------------------------------------------------------
# local binary pattern codes
# ---------------------------------------------------------------------------

# neighbor offsets clockwise from top-left; first offset becomes the MSB
_LBP_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1),
                (1, 1), (1, 0), (1, -1), (0, -1))


@njit(cache=True)
def _lbp_codes_loop(gray):
    h, w = gray.shape
    codes = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            c = gray[y, x]
            code = 0
            for k in range(8):
                dy, dx = _LBP_OFFSETS[k]
                ny = min(max(y + dy, 0), h - 1)
                nx = min(max(x + dx, 0), w - 1)
                code = code << 1
                if gray[ny, nx] >= c:
                    code |= 1
            codes[y, x] = code
    return codes


def _lbp_codes_numpy(gray):
    padded = np.pad(gray, 1, mode="edge")
    h, w = gray.shape
    codes = np.zeros((h, w), dtype=np.uint8)
    for dy, dx in _LBP_OFFSETS:
        neigh = padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
        codes = (codes << 1) | (neigh >= gray).astype(np.uint8)
    return codes


def lbp_codes(gray):
    """8-bit LBP code per pixel (neighbor >= center sets the bit, clockwise
    from top-left, borders edge-replicated)."""
    gray = np.ascontiguousarray(gray, dtype=np.int32)
    if NUMBA_ENABLED:
        return _lbp_codes_loop(gray)
    return _lbp_codes_numpy(gray)


# ---------------------------------------------------------------------------
# CLAHE
# ---------------------------------------------------------------------------

def _clahe_maps(img, n_ty, n_tx, tile_h, tile_w, clip_limit):
    """Per-tile 256-entry lookup tables from clipped, equalized histograms."""
    h, w = img.shape
    maps = np.zeros((n_ty, n_tx, 256), dtype=np.float64)
    for ty in range(n_ty):
        y0 = ty * tile_h
        y1 = min(y0 + tile_h, h)
        for tx in range(n_tx):
            x0 = tx * tile_w
            x1 = min(x0 + tile_w, w)
            tile = img[y0:y1, x0:x1]
            hist = np.bincount(tile.ravel(), minlength=256).astype(np.float64)
            if np.count_nonzero(hist) == 1:
                # flat tile: equalization is the identity
                maps[ty, tx] = np.arange(256, dtype=np.float64)
                continue
            area = float((y1 - y0) * (x1 - x0))
            if clip_limit > 0:
                limit = max(1.0, clip_limit * area / 256.0)
                excess = np.maximum(hist - limit, 0.0).sum()
                hist = np.minimum(hist, limit) + excess / 256.0
            cdf = np.cumsum(hist) / hist.sum()
            cdf_min = cdf[np.nonzero(hist)[0][0]]
            maps[ty, tx] = (cdf - cdf_min) / (1.0 - cdf_min) * 255.0
    return maps


@njit(cache=True)
def _clahe_interp_loop(img, maps, n_ty, n_tx, tile_h, tile_w):
    h, w = img.shape
    out = np.empty((h, w), dtype=np.uint8)
    for y in range(h):
        fy = (y + 0.5) / tile_h - 0.5
        ty0 = int(np.floor(fy))
        wy = fy - ty0
        if ty0 < 0:
            ty0, wy = 0, 0.0
        ty1 = ty0 + 1
        if ty1 >= n_ty:
            ty1, wy = n_ty - 1, 0.0 if ty0 == n_ty - 1 else wy
        for x in range(w):
            fx = (x + 0.5) / tile_w - 0.5
            tx0 = int(np.floor(fx))
            wx = fx - tx0
            if tx0 < 0:
                tx0, wx = 0, 0.0
            tx1 = tx0 + 1
            if tx1 >= n_tx:
                tx1, wx = n_tx - 1, 0.0 if tx0 == n_tx - 1 else wx
            v = img[y, x]
            m = ((1.0 - wy) * (1.0 - wx) * maps[ty0, tx0, v]
                 + (1.0 - wy) * wx * maps[ty0, tx1, v]
                 + wy * (1.0 - wx) * maps[ty1, tx0, v]
                 + wy * wx * maps[ty1, tx1, v])
            out[y, x] = np.uint8(int(m + 0.5))
    return out


def _clahe_interp_numpy(img, maps, n_ty, n_tx, tile_h, tile_w):
    h, w = img.shape
    fy = (np.arange(h) + 0.5) / tile_h - 0.5
    ty0 = np.floor(fy).astype(np.int64)
    wy = fy - ty0
    wy[ty0 < 0] = 0.0
    ty0 = np.clip(ty0, 0, n_ty - 1)
    ty1 = np.minimum(ty0 + 1, n_ty - 1)
    wy[ty1 == ty0] = 0.0

    fx = (np.arange(w) + 0.5) / tile_w - 0.5
    tx0 = np.floor(fx).astype(np.int64)
    wx = fx - tx0
    wx[tx0 < 0] = 0.0
    tx0 = np.clip(tx0, 0, n_tx - 1)
    tx1 = np.minimum(tx0 + 1, n_tx - 1)
    wx[tx1 == tx0] = 0.0

    ty0 = ty0[:, None]
    ty1 = ty1[:, None]
    wy = wy[:, None]
    tx0 = tx0[None, :]
    tx1 = tx1[None, :]
    wx = wx[None, :]

    m = ((1.0 - wy) * (1.0 - wx) * maps[ty0, tx0, img]
         + (1.0 - wy) * wx * maps[ty0, tx1, img]
         + wy * (1.0 - wx) * maps[ty1, tx0, img]
         + wy * wx * maps[ty1, tx1, img])
    return np.floor(m + 0.5).astype(np.uint8)


def clahe_u8(img, tile_w, tile_h, clip_limit):
    """Contrast-limited adaptive histogram equalization of a uint8 raster."""
    img = np.ascontiguousarray(img, dtype=np.uint8)
    h, w = img.shape
    tile_h = min(tile_h, h)
    tile_w = min(tile_w, w)
    n_ty = (h + tile_h - 1) // tile_h
    n_tx = (w + tile_w - 1) // tile_w
    maps = _clahe_maps(img, n_ty, n_tx, tile_h, tile_w, clip_limit)
    if NUMBA_ENABLED:
        return _clahe_interp_loop(img, maps, n_ty, n_tx, tile_h, tile_w)
    return _clahe_interp_numpy(img, maps, n_ty, n_tx, tile_h, tile_w)


# ---------------------------------------------------------------------------
# ordered dithering
# ---------------------------------------------------------------------------

@njit(cache=True)
def _dither_loop(rgb, palette, tmap, spread):
    h, w, _ = rgb.shape
    n = tmap.shape[0]
    p = palette.shape[0]
    out = np.empty((h, w), dtype=np.int32)
    for y in range(h):
        for x in range(w):
            off = spread * (tmap[y % n, x % n] - 0.5)
            r = rgb[y, x, 0] + off
            g = rgb[y, x, 1] + off
            b = rgb[y, x, 2] + off
            best = 0
            best_d = (r - palette[0, 0]) ** 2 + (g - palette[0, 1]) ** 2 \
                + (b - palette[0, 2]) ** 2
            for k in range(1, p):
                d = (r - palette[k, 0]) ** 2 + (g - palette[k, 1]) ** 2 \
                    + (b - palette[k, 2]) ** 2
                if d < best_d:
                    best_d = d
                    best = k
            out[y, x] = best
    return out


def _dither_numpy(rgb, palette, tmap, spread):
    h, w, _ = rgb.shape
    n = tmap.shape[0]
    reps = ((h + n - 1) // n, (w + n - 1) // n)
    tiled = np.tile(tmap, reps)[:h, :w]
    perturbed = rgb + (spread * (tiled - 0.5))[:, :, None]
    diff = perturbed[:, :, None, :] - palette[None, None, :, :]
    dist = (diff ** 2).sum(axis=-1)
    return dist.argmin(axis=-1).astype(np.int32)


def dither_indices(rgb, palette, tmap, spread):
    """Ordered-dither quantization: per-pixel threshold offset, then nearest
    palette color by squared RGB distance (ties to the lowest index)."""
    rgb = np.ascontiguousarray(rgb, dtype=np.float64)
    palette = np.ascontiguousarray(palette, dtype=np.float64)
    tmap = np.ascontiguousarray(tmap, dtype=np.float64)
    if NUMBA_ENABLED:
        return _dither_loop(rgb, palette, tmap, float(spread))
    return _dither_numpy(rgb, palette, tmap, float(spread))


# ---------------------------------------------------------------------------
# earth mover's distance (transportation problem)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _emd_ssp(supply, demand, cost):
    """Exact EMD by successive shortest augmenting paths with potentials.

    supply and demand must have equal totals; returns sum(flow * cost).
    Node layout: 0..n-1 sources, n..n+m-1 sinks.
    """
    n = supply.shape[0]
    m = demand.shape[0]
    big = 1e30
    eps = 1e-12

    rem_s = supply.copy()
    rem_d = demand.copy()
    flow = np.zeros((n, m), dtype=np.float64)
    pot = np.zeros(n + m, dtype=np.float64)

    total = 0.0
    for i in range(n):
        total += supply[i]

    pushed = 0.0
    while pushed < total - eps:
        dist = np.full(n + m, big, dtype=np.float64)
        parent = np.full(n + m, -1, dtype=np.int64)
        done = np.zeros(n + m, dtype=np.bool_)
        for i in range(n):
            if rem_s[i] > eps:
                dist[i] = 0.0

        target = -1
        while True:
            u = -1
            best = big
            for v in range(n + m):
                if not done[v] and dist[v] < best:
                    best = dist[v]
                    u = v
            if u < 0:
                break
            done[u] = True
            if u >= n and rem_d[u - n] > eps:
                target = u
                break
            if u < n:
                # forward arcs source u -> every sink; float drift in the
                # potentials is clamped so Dijkstra's invariant holds
                for j in range(m):
                    rc = cost[u, j] + pot[u] - pot[n + j]
                    if rc < 0.0:
                        rc = 0.0
                    nd = dist[u] + rc
                    if nd < dist[n + j] - 1e-15:
                        dist[n + j] = nd
                        parent[n + j] = u
            else:
                # backward arcs sink u -> sources with flow
                j = u - n
                for i in range(n):
                    if flow[i, j] > eps:
                        rc = -cost[i, j] + pot[u] - pot[i]
                        if rc < 0.0:
                            rc = 0.0
                        nd = dist[u] + rc
                        if nd < dist[i] - 1e-15:
                            dist[i] = nd
                            parent[i] = u
        if target < 0:
            break  # numerically exhausted

        # bottleneck along the augmenting path
        bottleneck = rem_d[target - n]
        v = target
        while parent[v] >= 0:
            u = parent[v]
            if v >= n:
                pass  # forward arc, capacity unbounded
            else:
                if flow[v, u - n] < bottleneck:
                    bottleneck = flow[v, u - n]
            v = u
        if rem_s[v] < bottleneck:
            bottleneck = rem_s[v]

        # apply flow
        v = target
        while parent[v] >= 0:
            u = parent[v]
            if v >= n:
                flow[u, v - n] += bottleneck
            else:
                flow[v, u - n] -= bottleneck
            v = u
        rem_s[v] -= bottleneck
        rem_d[target - n] -= bottleneck
        pushed += bottleneck

        # potentials update with min(dist, dist_target) for every node keeps
        # all residual reduced costs nonnegative for the next Dijkstra pass
        dt = dist[target]
        for v in range(n + m):
            pot[v] += dist[v] if dist[v] < dt else dt

    out = 0.0
    for i in range(n):
        for j in range(m):
            out += flow[i, j] * cost[i, j]
    return out


def emd(supply, demand, cost):
    """Earth mover's distance between two nonnegative distributions.

    Totals are normalized to 1 before solving, so inputs may be unnormalized
    histograms.  cost[i, j] is the ground distance from supply cell i to
    demand cell j.
    """
    supply = np.ascontiguousarray(supply, dtype=np.float64)
    demand = np.ascontiguousarray(demand, dtype=np.float64)
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    s_tot = supply.sum()
    d_tot = demand.sum()
    if s_tot <= 0 or d_tot <= 0:
        raise ValueError("supply and demand must each have positive total")
    return _emd_ssp(supply / s_tot, demand / d_tot, cost)
