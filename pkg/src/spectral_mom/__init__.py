"""Spectral (method-of-moments) parameter extraction for multi-label text."""

from ._accel import HAVE_NUMBA, backend
from .corpus import (
    LabelSet,
    MomentScales,
    SparseCorpus,
    corpus_stats,
    parse_corpus,
    read_corpus,
    serialize_corpus,
    write_corpus,
)
from .errors import SpectralMomError
from .evaluation import MetricReport, doc_auc, macro_auc
from .model import (
    LabelScores,
    SpectralModel,
    assemble_model,
    load_model,
    posterior_topics,
    predict_labels,
    predict_scores,
    save_model,
)
from .moments import PassCounter, estimate_m2, estimate_raw_q, whitened_third_moment
from .pipeline import TrainConfig, TrainResult, train
from .spectral import EigPairs, WhiteningBasis, truncated_eig, whitening_from_eig
from .synth import (
    BoundInputs,
    GroundTruth,
    align_and_error,
    convergence_experiment,
    generate_corpus,
    sample_params,
    theorem_bounds,
)
from .tensorpm import TensorEigs, deflate, tensor_power_method

__version__ = "0.1.0"
