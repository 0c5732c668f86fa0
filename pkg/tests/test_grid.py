import numpy as np
import pytest

from eventkg.evaluation import GridSpec, grid_search, make_link_removal_split
from eventkg.evaluation.ranking import make_validation_hook
from eventkg.models import train


@pytest.fixture(scope="module")
def split(small_world):
    return make_link_removal_split(small_world.kg, "hasSource", 0.5, seed=1)


def one_point(**kw):
    base = dict(d=[6], alpha=[1.0], lr=[0.01], margin=[1.0])
    base.update(kw)
    return GridSpec(**base)


def test_configurations_enumeration_order():
    grid = GridSpec(d=[10, 20], lr=[0.1, 0.01], margin=[1.0], alpha=[0.5, 1.0])
    cfgs = grid.configurations("transe")
    assert [(c.d, c.lr) for c in cfgs] == [(10, 0.1), (10, 0.01), (20, 0.1), (20, 0.01)]
    assert len(grid.configurations("ekl-skip")) == 8
    skip = grid.configurations("ekl-skip")
    assert [(c.d, c.alpha, c.lr) for c in skip[:3]] == [(10, 0.5, 0.1), (10, 0.5, 0.01),
                                                        (10, 1.0, 0.1)]


def test_grid_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError):
        GridSpec.from_dict({"dim": [3]})
    with pytest.raises(ValueError):
        GridSpec(d=[])


def test_single_point_grid_equals_direct_training(split):
    res = grid_search(split, None, one_point(), "transe")
    cfg = one_point().configurations("transe")[0]
    direct = train("transe", split.train_kg(), None, cfg, make_validation_hook(split))
    assert res.best_config == cfg
    assert res.best.best_metric == direct.best_metric
    assert np.array_equal(res.best.params.entity_emb, direct.params.entity_emb)


def test_two_point_grid_picks_lower_validation_rank(split):
    grid = one_point(lr=[0.01, 0.2])
    res = grid_search(split, None, grid, "transe")
    ranks = []
    for cfg in grid.configurations("transe"):
        ranks.append(train("transe", split.train_kg(), None, cfg,
                           make_validation_hook(split)).best_metric)
    assert [t.valid_mean_rank for t in res.trials] == ranks
    assert res.best_config == grid.configurations("transe")[int(np.argmin(ranks))]


def test_failed_trials_are_recorded(split):
    grid = one_point(margin=[float("inf"), 1.0])
    res = grid_search(split, None, grid, "transe")
    assert res.trials[0].error is not None and "TrainingError" in res.trials[0].error
    assert res.best_config.margin == 1.0
