"""
Brute-force reference implementations written straight from the definitions,
with explicit loops and no shared code paths with the package.
"""

import math

import numpy as np
import torch

FOUR_NEIGHBOURS = ((-1, 0), (1, 0), (0, -1), (0, 1))


####################################################################################################
# KEY POINTS
####################################################################################################


def oracle_weights(mask):
    h, w = mask.shape
    weights = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            if not mask[i, j]:
                continue
            edge = False
            for di, dj in FOUR_NEIGHBOURS:
                ii, jj = i + di, j + dj
                if 0 <= ii < h and 0 <= jj < w and not mask[ii, jj]:
                    edge = True
            weights[i, j] = 0.5 if edge else 1.0
    return weights


def oracle_proportion(weights, row, col, r):
    h, w = weights.shape
    lesion, count = 0.0, 0
    for di in range(-r, r + 1):
        for dj in range(-r, r + 1):
            if di * di + dj * dj > r * r:
                continue
            ii, jj = row + di, col + dj
            if 0 <= ii < h and 0 <= jj < w:
                lesion += weights[ii, jj]
                count += 1
    return lesion / count


# Neighbour offsets in clockwise order (rows grow downwards), starting east
CLOCKWISE = ((0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1))


def _follow_border(f, i, j, i2, j2, nbd):
    """
    Walks one border from (i, j), entered from its 0-neighbour (i2, j2),
    labelling visited pixels in `f`. Returns the visited pixels in order.
    """
    start = CLOCKWISE.index((i2 - i, j2 - j))
    first = None
    for s in range(8):
        di, dj = CLOCKWISE[(start + s) % 8]
        if f[i + di, j + dj] != 0:
            first = (i + di, j + dj)
            break
    if first is None:
        f[i, j] = -nbd
        return [(i, j)]
    i2, j2 = first
    i3, j3 = i, j
    points = []
    while True:
        points.append((i3, j3))
        d = CLOCKWISE.index((i2 - i3, j2 - j3))
        east_zero = False
        for s in range(1, 9):
            di, dj = CLOCKWISE[(d - s) % 8]
            if f[i3 + di, j3 + dj] != 0:
                i4, j4 = i3 + di, j3 + dj
                break
            if (di, dj) == (0, 1):
                east_zero = True
        if east_zero:
            f[i3, j3] = -nbd
        elif f[i3, j3] == 1:
            f[i3, j3] = nbd
        if (i4, j4) == (i, j) and (i3, j3) == first:
            return points
        i2, j2, i3, j3 = i3, j3, i4, j4


def oracle_outer_borders(mask):
    """
    Raster-scan border following on a zero-padded copy of the mask. Hole
    borders are walked too so their pixels are labelled, but only outer
    borders are returned.
    """
    h, w = mask.shape
    f = np.zeros((h + 2, w + 2), dtype=int)
    f[1:-1, 1:-1] = mask != 0
    nbd = 1
    out = []
    for i in range(1, h + 1):
        for j in range(1, w + 1):
            if f[i, j] == 1 and f[i, j - 1] == 0:
                nbd += 1
                points = _follow_border(f, i, j, i, j - 1, nbd)
                out.append([(a - 1, b - 1) for a, b in points])
            elif f[i, j] >= 1 and f[i, j + 1] == 0:
                nbd += 1
                _follow_border(f, i, j, i, j + 1, nbd)
    return out


def oracle_select(scores, k):
    n = len(scores)
    if n <= 2 * k:
        top = max(scores)
        winners = [i for i in range(n) if scores[i] == top]
        return winners if len(winners) == 1 else []
    selected = []
    for i in range(n):
        if all(scores[i] > scores[(i + d) % n] for d in range(-k, k + 1) if d != 0):
            selected.append(i)
    return selected


def oracle_keypoint_map(mask, r, k):
    weights = oracle_weights(mask)
    kp_map = np.zeros(mask.shape, dtype=np.uint8)
    for points in oracle_outer_borders(mask):
        scores = [abs(oracle_proportion(weights, i, j, r) - 0.5) for i, j in points]
        for idx in oracle_select(scores, k):
            kp_map[points[idx]] = 1
    return kp_map


####################################################################################################
# METRICS
####################################################################################################


def oracle_boundary(mask):
    h, w = mask.shape
    points = []
    for i in range(h):
        for j in range(w):
            if not mask[i, j]:
                continue
            for di, dj in FOUR_NEIGHBOURS:
                ii, jj = i + di, j + dj
                if not (0 <= ii < h and 0 <= jj < w) or not mask[ii, jj]:
                    points.append((i, j))
                    break
    return points


def oracle_directed(src, dst):
    return [min(math.hypot(a[0] - b[0], a[1] - b[1]) for b in dst) for a in src]


def oracle_assd(pred, gt):
    p, g = oracle_boundary(pred), oracle_boundary(gt)
    d_pg, d_gp = oracle_directed(p, g), oracle_directed(g, p)
    return (sum(d_pg) + sum(d_gp)) / (len(d_pg) + len(d_gp))


def oracle_hd95(pred, gt):
    p, g = oracle_boundary(pred), oracle_boundary(gt)

    def p95(d):
        d = sorted(d)
        return d[-(-95 * len(d) // 100) - 1]

    return max(p95(oracle_directed(p, g)), p95(oracle_directed(g, p)))


####################################################################################################
# ATTENTION
####################################################################################################


def oracle_attention(mha, q, k, v):
    """Nested-loop softmax attention with the module's own weights, (n, C) inputs."""
    wq, bq = mha.q_proj.weight.double(), mha.q_proj.bias.double()
    wk, bk = mha.k_proj.weight.double(), mha.k_proj.bias.double()
    wv, bv = mha.v_proj.weight.double(), mha.v_proj.bias.double()
    wo, bo = mha.out_proj.weight.double(), mha.out_proj.bias.double()
    q, k, v = q.double(), k.double(), v.double()
    n_q, n_k = q.shape[0], k.shape[0]
    d = mha.head_dim
    Q = [[float((wq[c] @ q[i]) + bq[c]) for c in range(mha.dim)] for i in range(n_q)]
    K = [[float((wk[c] @ k[j]) + bk[c]) for c in range(mha.dim)] for j in range(n_k)]
    V = [[float((wv[c] @ v[j]) + bv[c]) for c in range(mha.dim)] for j in range(n_k)]
    concat = [[0.0] * mha.dim for _ in range(n_q)]
    for head in range(mha.heads):
        cols = range(head * d, (head + 1) * d)
        for i in range(n_q):
            logits = [sum(Q[i][c] * K[j][c] for c in cols) / math.sqrt(d) for j in range(n_k)]
            top = max(logits)
            exps = [math.exp(x - top) for x in logits]
            total = sum(exps)
            for c in cols:
                concat[i][c] = sum(exps[j] / total * V[j][c] for j in range(n_k))
    out = torch.tensor(concat, dtype=torch.float64)
    return out @ wo.T + bo


####################################################################################################
# FINITE DIFFERENCES
####################################################################################################


def check_gradients(fn, params, n_samples=None, step=1e-5, tol=1e-4, atol=1e-8, seed=0):
    """
    Compares autograd gradients of the scalar `fn()` with central differences.

    `params` are float64 tensors requiring grad. Every entry is checked unless
    `n_samples` is given, in which case that many random entries are drawn.
    An entry passes when its relative error is below `tol` or its absolute
    error is below `atol`, which sits above the truncation error of the
    difference quotient. Returns the worst relative error among entries
    above `atol`.
    """
    loss = fn()
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    entries = [(pi, ei) for pi, p in enumerate(params) for ei in range(p.numel())]
    if n_samples is not None and n_samples < len(entries):
        rng = np.random.default_rng(seed)
        entries = [entries[i] for i in rng.choice(len(entries), n_samples, replace=False)]
    worst = 0.0
    for pi, ei in entries:
        flat = params[pi].data.view(-1)
        orig = flat[ei].item()
        with torch.no_grad():
            flat[ei] = orig + step
            plus = fn().item()
            flat[ei] = orig - step
            minus = fn().item()
            flat[ei] = orig
        numeric = (plus - minus) / (2 * step)
        grad = grads[pi]
        analytic = 0.0 if grad is None else grad.reshape(-1)[ei].item()
        diff = abs(analytic - numeric)
        err = diff / max(abs(analytic), abs(numeric), 1e-300)
        if diff >= atol:
            worst = max(worst, err)
        assert err < tol or diff < atol, (
            f"param {pi} entry {ei}: analytic {analytic:.6e} vs numeric {numeric:.6e}"
        )
    return worst
