"""Event-sequence objectives sharing the KG entity embeddings as input vectors.

* skipgram: predict a context event from a center event (negative sampling)
* concat: predict the next event from the concatenation of its ``w`` predecessors
* rnn: predict the next event from the last state of a tanh RNN over the prefix

Prefix batches are ``(n, T)`` int arrays left-padded with ``-1``; the padding
contributes a zero input block. All losses are sums over the batch.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit, log_softmax, softmax

from .params import ModelParams, SparseGrad


def _event_rows(params: ModelParams, entity_ids: np.ndarray) -> np.ndarray:
    rows = params.event_index[entity_ids]
    if (rows < 0).any():
        raise ValueError("sequence objectives only accept Event-class entities")
    return rows


def skipgram_loss_and_grad(params: ModelParams, pairs: np.ndarray, k: int,
                           rng: np.random.Generator | None = None,
                           negatives: np.ndarray | None = None):
    """Negative-sampling skipgram loss.

    ``-log s(u_ctx . v_c) - sum_k log s(-u_neg . v_c)`` where ``v`` rows come from
    ``entity_emb`` and ``u`` rows from ``context_emb``. Negatives are drawn
    uniformly over the event table unless given as an ``(n, k)`` array of
    event-table rows.
    """
    pairs = np.asarray(pairs).reshape(-1, 2)
    centers = pairs[:, 0]
    _event_rows(params, centers)
    ctx = _event_rows(params, pairs[:, 1])
    U = params.context_emb
    if negatives is None:
        negatives = rng.integers(len(params.event_ids), size=(len(pairs), k))
    negatives = np.asarray(negatives).reshape(len(pairs), -1)

    v = params.entity_emb[centers]
    u_c = U[ctx]
    u_n = U[negatives]
    s_p = np.einsum("nd,nd->n", u_c, v)
    s_n = np.einsum("nkd,nd->nk", u_n, v)
    loss = float(np.logaddexp(0.0, -s_p).sum() + np.logaddexp(0.0, s_n).sum())

    g_p = expit(s_p) - 1.0
    g_n = expit(s_n)
    dv = g_p[:, None] * u_c + np.einsum("nk,nkd->nd", g_n, u_n)
    du_c = g_p[:, None] * v
    du_n = g_n[:, :, None] * v[:, None, :]
    d = v.shape[1]
    grads = {
        "entity_emb": SparseGrad(centers, dv),
        "context_emb": SparseGrad(np.concatenate([ctx, negatives.ravel()]),
                                  np.concatenate([du_c, du_n.reshape(-1, d)])),
    }
    return loss, grads


def _gather_inputs(E: np.ndarray, prefixes: np.ndarray):
    mask = prefixes >= 0
    x = E[np.where(mask, prefixes, 0)]
    x[~mask] = 0.0
    return x, mask


def _concat_forward(params: ModelParams, prefixes: np.ndarray):
    prefixes = np.asarray(prefixes)
    n, w = prefixes.shape
    W = params.concat_proj
    if W.shape[1] != w * params.dim:
        raise ValueError(f"prefix width {w} does not match projection {W.shape}")
    x, mask = _gather_inputs(params.entity_emb, prefixes)
    x = x.reshape(n, w * params.dim)
    z = x @ W.T + params.concat_bias
    logits = z @ params.concat_out.T
    return x, mask, z, logits


def concat_proba(params: ModelParams, prefixes: np.ndarray) -> np.ndarray:
    """Next-event distribution over the event table, one row per prefix."""
    return softmax(_concat_forward(params, prefixes)[3], axis=1)


def concat_loss_and_grad(params: ModelParams, prefixes: np.ndarray, targets: np.ndarray):
    prefixes = np.asarray(prefixes)
    n, w = prefixes.shape
    tgt = _event_rows(params, np.asarray(targets))
    x, mask, z, logits = _concat_forward(params, prefixes)
    logp = log_softmax(logits, axis=1)
    loss = float(-logp[np.arange(n), tgt].sum())

    dlogits = np.exp(logp)
    dlogits[np.arange(n), tgt] -= 1.0
    O, W = params.concat_out, params.concat_proj
    dz = dlogits @ O
    dx = (dz @ W).reshape(n, w, params.dim)
    grads = {
        "entity_emb": SparseGrad(prefixes[mask], dx[mask]),
        "concat_proj": dz.T @ x,
        "concat_bias": dz.sum(axis=0),
        "concat_out": dlogits.T @ z,
    }
    return loss, grads


def _rnn_forward(params: ModelParams, prefixes: np.ndarray):
    prefixes = np.asarray(prefixes)
    x, mask = _gather_inputs(params.entity_emb, prefixes)
    if len(prefixes) and not mask.any(axis=1).all():
        raise ValueError("every RNN instance needs at least one predecessor")
    Wx, Wh, b = params.rnn_wxh, params.rnn_whh, params.rnn_bh
    n, T = prefixes.shape
    states = [np.zeros((n, Wh.shape[0]))]
    acts = []
    for t in range(T):
        a = np.tanh(x[:, t] @ Wx.T + states[-1] @ Wh.T + b)
        acts.append(a)
        states.append(np.where(mask[:, t, None], a, states[-1]))
    logits = states[-1] @ params.rnn_out.T + params.rnn_out_bias
    return x, mask, states, acts, logits


def rnn_proba(params: ModelParams, prefixes: np.ndarray) -> np.ndarray:
    return softmax(_rnn_forward(params, prefixes)[4], axis=1)


def rnn_loss_and_grad(params: ModelParams, prefixes: np.ndarray, targets: np.ndarray):
    """Many-to-one tanh RNN, full softmax on the last state, exact BPTT."""
    prefixes = np.asarray(prefixes)
    n, T = prefixes.shape
    tgt = _event_rows(params, np.asarray(targets))
    x, mask, states, acts, logits = _rnn_forward(params, prefixes)
    logp = log_softmax(logits, axis=1)
    loss = float(-logp[np.arange(n), tgt].sum())

    dlogits = np.exp(logp)
    dlogits[np.arange(n), tgt] -= 1.0
    Wx, Wh = params.rnn_wxh, params.rnn_whh
    d_out = dlogits.T @ states[-1]
    d_out_bias = dlogits.sum(axis=0)
    dh = dlogits @ params.rnn_out
    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    db = np.zeros_like(params.rnn_bh)
    dx = np.zeros_like(x)
    for t in range(T - 1, -1, -1):
        m = mask[:, t, None]
        da = np.where(m, dh * (1.0 - acts[t] ** 2), 0.0)
        dWx += da.T @ x[:, t]
        dWh += da.T @ states[t]
        db += da.sum(axis=0)
        dx[:, t] = da @ Wx
        dh = da @ Wh + np.where(m, 0.0, dh)
    grads = {
        "entity_emb": SparseGrad(prefixes[mask], dx[mask]),
        "rnn_wxh": dWx,
        "rnn_whh": dWh,
        "rnn_bh": db,
        "rnn_out": d_out,
        "rnn_out_bias": d_out_bias,
    }
    return loss, grads
