from beem.baselines.em import (
    DaemConfig,
    EmConfig,
    GmmParams,
    InitMode,
    daem_fit_gmm,
    em_fit_gmm,
    em_restarts,
)
from beem.baselines.init import beem_init_B, random_hmms, smyth_init
from beem.baselines.kmeans import KMeansResult, kmeans
from beem.baselines.mhmm import em_fit_mhmm

__all__ = [
    "DaemConfig", "EmConfig", "GmmParams", "InitMode", "daem_fit_gmm", "em_fit_gmm",
    "em_restarts", "beem_init_B", "random_hmms", "smyth_init", "KMeansResult", "kmeans",
    "em_fit_mhmm",
]
