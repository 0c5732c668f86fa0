"""Random small problems for finite-difference gradient checks.

Each builder returns ``(params, loss_fn, grad_fn)`` where both closures read
``params`` in place, so perturbing an array entry changes the next loss.
"""

import numpy as np

from eventkg.models.params import ModelParams
from eventkg.models.sequence import (concat_loss_and_grad, rnn_loss_and_grad,
                                     skipgram_loss_and_grad)
from eventkg.models.transe import corrupt_batch, kg_loss_and_grad


def transe_case(rng, norm="L1"):
    n_ent, n_rel, d = 20, 4, 5
    params = ModelParams("transe", [], {
        "entity_emb": rng.normal(size=(n_ent, d)),
        "relation_emb": rng.normal(size=(n_rel, d)),
    })
    pos = np.stack([rng.integers(n_ent, size=12), rng.integers(n_rel, size=12),
                    rng.integers(n_ent, size=12)], axis=1)
    neg = corrupt_batch(rng, n_ent, pos)
    # a wide margin keeps most hinges active so the check exercises every path
    margin = 4.0

    def loss_fn():
        return kg_loss_and_grad(params, pos, neg, margin, norm)[0]

    def grad_fn():
        return kg_loss_and_grad(params, pos, neg, margin, norm)[1]

    return params, loss_fn, grad_fn


def skipgram_case(rng, k=3):
    n_ent, d = 16, 5
    events = np.arange(3, 13)
    params = ModelParams("ekl-skip", events, {
        "entity_emb": rng.normal(size=(n_ent, d)),
        "relation_emb": rng.normal(size=(2, d)),
        "context_emb": rng.normal(size=(len(events), d)),
    })
    pairs = rng.choice(events, size=(15, 2))
    negatives = rng.integers(len(events), size=(15, k))

    def loss_fn():
        return skipgram_loss_and_grad(params, pairs, k, negatives=negatives)[0]

    def grad_fn():
        return skipgram_loss_and_grad(params, pairs, k, negatives=negatives)[1]

    return params, loss_fn, grad_fn


def concat_case(rng, w=2, d=4):
    n_ent = 12
    events = np.arange(6, 12)
    params = ModelParams("ekl-concat", events, {
        "entity_emb": rng.normal(size=(n_ent, d)),
        "relation_emb": rng.normal(size=(2, d)),
        "concat_proj": rng.normal(size=(d, w * d)),
        "concat_bias": rng.normal(size=d),
        "concat_out": rng.normal(size=(len(events), d)),
    })
    prefixes = rng.choice(events, size=(5, w))
    prefixes[0, 0] = -1  # one left-padded instance
    targets = rng.choice(events, size=5)

    def loss_fn():
        return concat_loss_and_grad(params, prefixes, targets)[0]

    def grad_fn():
        return concat_loss_and_grad(params, prefixes, targets)[1]

    return params, loss_fn, grad_fn


def rnn_case(rng, d=3, hidden=4, length=5):
    n_ent = 14
    events = np.arange(8, 14)
    params = ModelParams("ekl-rnn", events, {
        "entity_emb": rng.normal(size=(n_ent, d)),
        "relation_emb": rng.normal(size=(2, d)),
        "rnn_wxh": rng.normal(scale=0.7, size=(hidden, d)),
        "rnn_whh": rng.normal(scale=0.7, size=(hidden, hidden)),
        "rnn_bh": rng.normal(scale=0.3, size=hidden),
        "rnn_out": rng.normal(size=(len(events), hidden)),
        "rnn_out_bias": rng.normal(size=len(events)),
    })
    prefixes = rng.choice(events, size=(4, length))
    prefixes[1, :2] = -1  # shorter prefix, left-padded
    targets = rng.choice(events, size=4)

    def loss_fn():
        return rnn_loss_and_grad(params, prefixes, targets)[0]

    def grad_fn():
        return rnn_loss_and_grad(params, prefixes, targets)[1]

    return params, loss_fn, grad_fn


CASES = {
    "transe-L1": lambda rng: transe_case(rng, "L1"),
    "transe-L2": lambda rng: transe_case(rng, "L2"),
    "skipgram": skipgram_case,
    "concat": concat_case,
    "rnn": rnn_case,
}
