"""Pure numpy fallback for the compiled coordinate-target kernels.

Every reduction over samples is an explicit left-to-right accumulation so
results match ``_kernels.pyx`` bit for bit.
"""

import numpy as np

BACKEND = "python"

GRADIENT = 0
LINE_SEARCH = 1
NO_CHANGE = 2


def half_sq_sum(res):
    acc = 0.0
    for v in res:
        v = float(v)
        acc += v * v
    return 0.5 * acc


def _relu(v):
    return np.where(v > 0.0, v, 0.0)


def perturbed_loss(z, x, res, coef, delta):
    acc = 0.0
    for zs, xs, rs in zip(z.tolist(), x.tolist(), res.tolist()):
        shifted = zs + delta * xs
        t = rs + coef * ((shifted if shifted > 0.0 else 0.0) - (zs if zs > 0.0 else 0.0))
        acc += t * t
    return 0.5 * acc


def _probe_columns(z, relu_z, cols, res, coef, delta):
    """Losses for several coordinates of one neuron.

    ``cols`` is (k, n): the feature column of each probed coordinate.
    ``delta`` is (k,).
    """
    # (n, k) terms, then a sequential sum over samples
    t = res[:, None] + coef * (_relu(z[:, None] + delta[None, :] * cols.T) - relu_z[:, None])
    t = t * t
    acc = np.zeros(t.shape[1])
    for s in range(t.shape[0]):
        acc += t[s]
    return 0.5 * acc


def line_search(z, x, res, coef, w, base, dw, max_probes):
    value, rule, probes = _line_search_columns(
        np.asarray(z), _relu(np.asarray(z)), np.asarray(x)[None, :], np.asarray(res),
        float(coef), np.array([w], dtype=np.float64), base, dw, max_probes,
    )
    return float(value[0]), int(rule[0]), int(probes[0])


def _line_search_columns(z, relu_z, cols, res, coef, w, base, dw, max_probes):
    k_cols = cols.shape[0]
    lp = _probe_columns(z, relu_z, cols, res, coef, np.full(k_cols, dw))
    lm = _probe_columns(z, relu_z, cols, res, coef, np.full(k_cols, -dw))
    probes = np.full(k_cols, 2, dtype=np.int64)
    rule = np.full(k_cols, NO_CHANGE, dtype=np.int8)
    value = w.copy()

    still = ~((lp == lm) | (np.minimum(lp, lm) >= base))
    sigma = np.where(lp < lm, 1.0, -1.0)
    prev = np.where(lp < lm, lp, lm)
    best_k = np.ones(k_cols, dtype=np.int64)
    rule[still] = LINE_SEARCH

    active = np.flatnonzero(still & (probes < max_probes))
    k = 1
    while active.size:
        k += 1
        cur = _probe_columns(z, relu_z, cols[active], res, coef, sigma[active] * k * dw)
        probes[active] += 1
        improved = cur < prev[active]
        winners = active[improved]
        prev[winners] = cur[improved]
        best_k[winners] = k
        active = winners[probes[winners] < max_probes]

    walked = np.flatnonzero(still)
    value[walked] = w[walked] + sigma[walked] * best_k[walked] * dw
    return value, rule, probes


def coordinate_targets(W, Z, XT, res, coef, grad, base, dw, max_probes, r0, r1,
                       target, rule, probes):
    for r in range(r0, r1):
        g = grad[r]
        w = W[r]
        by_grad = np.abs(g) >= dw
        target[r, by_grad] = w[by_grad] - g[by_grad]
        rule[r, by_grad] = GRADIENT
        probes[r, by_grad] = 0

        idx = np.flatnonzero(~by_grad)
        if idx.size == 0:
            continue
        z = Z[r]
        value, codes, used = _line_search_columns(
            z, _relu(np.asarray(z)), XT[idx], res, float(coef[r]), w[idx],
            base, dw, max_probes,
        )
        target[r, idx] = value
        rule[r, idx] = codes
        probes[r, idx] = used
