"""
Does the event log help link prediction?
========================================

Hide half of the hasSource links, train TransE with and without the skipgram
objective over the event log, and compare filtered mean ranks. Then hold out
a quarter of the events entirely.  One seed, well under a minute on one core.
"""

# %%
import time

from eventkg.events import sessionize
from eventkg.evaluation import (evaluate, make_link_removal_split, make_validation_hook,
                                make_zero_shot_split)
from eventkg.factory import generate
from eventkg.models import TrainConfig, train

world = generate()
seqs = sessionize(world.log)
cfg = TrainConfig(d=50, alpha=1.0, lr=0.01, margin=1.0, seed=1)


def compare(split):
    hook = make_validation_hook(split)
    for kind in ("transe", "ekl-skip"):
        t = time.time()
        res = train(kind, split.train_kg(), None if kind == "transe" else seqs, cfg, hook)
        rep = evaluate(res.params, split)
        print(f"{kind:9s} mean rank {rep.mean_rank:7.1f}  (best epoch {res.best_epoch}, "
              f"{time.time() - t:.0f}s)")


# %%
# 50% of hasSource links removed
split = make_link_removal_split(world.kg, "hasSource", 0.5, seed=1)
print(len(split.train), "train /", len(split.valid), "valid /", len(split.test), "test")
compare(split)

# %%
# zero-shot: 25% of events have no triples at training time, only log context
split = make_zero_shot_split(world.kg, 0.25, seed=1)
print(len(split.held_out), "held-out events")
compare(split)

# %%
# same thing from the shell:
#   eventkg generate --out world
#   eventkg scenario --kg world --mode remove-links --relation hasSource --proportion 0.5 --seed 1 --out split
#   eventkg train --model ekl-skip --split split --sequences world/occurrences.csv --seed 1 --out model
#   eventkg eval --checkpoint model --split split --out report
