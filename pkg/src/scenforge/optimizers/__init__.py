from .base import ArityError, Budget, CampaignReport, Evaluation, evaluate_batch, stream
from .ga import GaConfig, ga
from .nsga2 import Nsga2Config, crowding_distance, non_dominated_sort, normalized_hypervolume, nsga2
from .ppo_search import GaussianPolicy, PpoConfig, ppo_search, ppo_update
from .pso import PsoConfig, pso
from .random_search import random_search
from .stats import CampaignStats, campaign_stats, relative_t_critic

ALGORITHMS = ("rs", "pso", "ga", "ppo", "nsga2")

__all__ = [
    "ALGORITHMS",
    "ArityError",
    "Budget",
    "CampaignReport",
    "CampaignStats",
    "Evaluation",
    "GaConfig",
    "GaussianPolicy",
    "Nsga2Config",
    "PpoConfig",
    "PsoConfig",
    "campaign_stats",
    "crowding_distance",
    "evaluate_batch",
    "ga",
    "non_dominated_sort",
    "normalized_hypervolume",
    "nsga2",
    "ppo_search",
    "ppo_update",
    "pso",
    "random_search",
    "relative_t_critic",
    "stream",
]
