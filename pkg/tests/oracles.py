"""Independent reference implementations used as test oracles.

Nothing here calls into the code paths it checks: ranks are enumerated with
plain Python loops, gradients come from central finite differences.
"""

import math

import numpy as np

from eventkg.models.params import SparseGrad


def l_norm(vec, norm):
    if norm == "L1":
        return sum(abs(x) for x in vec)
    return math.sqrt(sum(x * x for x in vec))


def loop_distance(E, R, h, r, t, norm):
    return l_norm([E[h][k] + R[r][k] - E[t][k] for k in range(len(E[h]))], norm)


def brute_force_ranks(E, R, test, all_triples, norm="L1", candidates=None):
    """Filtered head/tail ranks by explicit enumeration.

    ``candidates(side, r)`` optionally restricts the candidate list; ties are
    resolved in favour of the lower entity id.
    """
    E, R = np.asarray(E).tolist(), np.asarray(R).tolist()
    known = {tuple(x) for x in np.asarray(all_triples).tolist()}
    n = len(E)
    heads, tails = [], []
    for h, r, t in np.asarray(test).tolist():
        for side in ("head", "tail"):
            cand = range(n) if candidates is None else candidates(side, r)
            scored = []
            for e in cand:
                trip = (e, r, t) if side == "head" else (h, r, e)
                target = h if side == "head" else t
                if e != target and trip in known:
                    continue
                scored.append((loop_distance(E, R, *trip, norm), e))
            scored.sort()
            target = h if side == "head" else t
            rank = [e for _, e in scored].index(target) + 1
            (heads if side == "head" else tails).append(rank)
    return heads, tails


def dense_grads(params, grads):
    out = {}
    for name, g in grads.items():
        shape = params.arrays[name].shape
        out[name] = g.dense(shape) if isinstance(g, SparseGrad) else np.asarray(g)
    return out


FD_FLOOR = 1e-4


def finite_difference_errors(loss_fn, params, grads, n_coords, rng, eps=1e-5):
    """Relative errors between analytic and central-difference gradients.

    ``|a - n| / max(|a|, |n|, FD_FLOOR)``: coordinates whose gradient is
    (near) zero are compared on an absolute 1e-8 scale, above the roundoff
    noise of a central difference on a summed batch loss.

    ``loss_fn()`` must re-evaluate the loss from ``params`` in place. Up to
    ``n_coords`` coordinates are sampled without replacement across all arrays
    that carry a gradient.
    """
    dense = dense_grads(params, grads)
    names = sorted(dense)
    sizes = [params.arrays[n].size for n in names]
    total = sum(sizes)
    picks = rng.choice(total, size=min(n_coords, total), replace=False)
    offsets = np.cumsum([0] + sizes)
    errors = []
    for flat in picks.tolist():
        k = int(np.searchsorted(offsets, flat, side="right") - 1)
        name = names[k]
        arr = params.arrays[name]
        idx = np.unravel_index(flat - offsets[k], arr.shape)
        orig = arr[idx]
        arr[idx] = orig + eps
        up = loss_fn()
        arr[idx] = orig - eps
        down = loss_fn()
        arr[idx] = orig
        numeric = (up - down) / (2 * eps)
        analytic = dense[name][idx]
        denom = max(abs(numeric), abs(analytic), FD_FLOOR)
        errors.append(abs(numeric - analytic) / denom)
    return np.array(errors)


def brute_force_pairs(seq, window):
    pairs = []
    m = len(seq)
    for k in range(m):
        for j in range(m):
            if j != k and abs(j - k) <= window:
                pairs.append((seq[k], seq[j]))
    return pairs


def tally_degrees(names, classes, triples):
    """Per-class (count, avg_in, avg_out) by walking every triple."""
    indeg = {e: 0 for e in names}
    outdeg = {e: 0 for e in names}
    for h, _, t in triples:
        outdeg[h] += 1
        indeg[t] += 1
    out = {}
    for cls in set(classes.values()):
        members = [e for e in names if classes[e] == cls]
        out[cls] = (len(members), sum(indeg[e] for e in members) / len(members),
                    sum(outdeg[e] for e in members) / len(members))
    return out
