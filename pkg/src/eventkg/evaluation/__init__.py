from .grid import GridResult, GridSearchError, GridSpec, Trial, grid_search
from .ranking import (POLICIES, EvaluationError, KnownTriples, RankingReport, build_report,
                      candidate_mask, evaluate, filtered_rank, make_validation_hook, rank_triples, score_all_candidates)
from .splits import (LINK_REMOVAL, ZERO_SHOT, ScenarioSplit, SplitError, make_link_removal_split,
                     make_zero_shot_split, read_split, write_split)

__all__ = [
    "GridSpec", "GridResult", "GridSearchError", "Trial", "grid_search",
    "POLICIES", "EvaluationError", "KnownTriples", "RankingReport", "build_report",
    "candidate_mask", "evaluate", "filtered_rank",
    "make_validation_hook", "rank_triples", "score_all_candidates",
    "LINK_REMOVAL", "ZERO_SHOT", "ScenarioSplit", "SplitError", "make_link_removal_split",
    "make_zero_shot_split", "read_split", "write_split",
]
