"""
A synthetic digital factory
===========================

Generate the default world and look at what ends up in the graph and the log.
"""

# %%
import numpy as np

from eventkg.events import prefix_instances, sessionize, skipgram_pairs
from eventkg.factory import FactoryConfig, generate
from eventkg.kg import degree_stats

world = generate(FactoryConfig())
kg = world.kg
print(kg)

# %%
# class sizes and average degrees
for cls, st in degree_stats(kg).items():
    print(f"{cls.value:10s} n={st.count:5d}  in={st.avg_in:6.2f}  out={st.avg_out:6.2f}")

# %%
# triples per relation
counts = np.bincount(kg.triples[:, 1], minlength=kg.n_relations)
for name, c in sorted(zip(kg.relations, counts), key=lambda x: -x[1]):
    print(f"{name:18s} {c}")

# %%
# events only point outwards: one isA, one hasSource each
ev = kg.event_ids()[0]
print([(kg.entities[h], kg.relations[r], kg.entities[t])
       for h, r, t in kg.triples[kg.triples[:, 0] == ev].tolist()])

# %%
# the log walks each production line in connectedTo order; a gap in the
# timestamps closes a session
seqs = sessionize(world.log)
print(len(seqs), "sessions, lengths", np.unique(seqs.lengths))
first = seqs[0][:8]
print([kg.entities[e] for e in first])
print([world.ground_truth.event_source[kg.entities[e]] for e in first])

# %%
# training instances derived from the sessions
print("skipgram pairs (window 5):", len(skipgram_pairs(seqs, 5)))
print("next-event instances:", len(prefix_instances(seqs, 3)))
