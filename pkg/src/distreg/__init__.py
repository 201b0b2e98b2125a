"""Distribution-aligned training for deep imbalanced regression.

The package couples a differentiable sorting operator with pseudo-label
sequences drawn from a kernel density estimate of the training labels, so a
regressor can be penalized for the gap between its prediction distribution and
the label distribution while also fitting individual samples. A small MLP with
hand-written gradients, a synthetic-dataset generator, shot-region evaluation,
and a reproducible CLI round out the toolkit.
"""

from .config import RunConfig, resolve_config
from .dataset import (
    DatasetSpec,
    RegressionDataset,
    ShotRegions,
    assign_regions,
    load_csv,
    save_csv,
    synth_imbalanced,
)
from .evaluation import (
    RegionReport,
    RegionStats,
    emit_report,
    gm,
    mae,
    read_report,
    region_metrics,
    wasserstein1_hist,
)
from .label_space import (
    LabelDensity,
    LabelSpace,
    bin_index,
    histogram_density,
    kde_density,
    make_label_space,
)
from .loss import DistLossConfig, LossOutput, SeqLossKind, dist_loss, inverse_weights, weighted_seq_loss
from .nnet import (
    AdamState,
    MlpParams,
    TrainConfig,
    TrainResult,
    adam_step,
    backward,
    forward,
    init_adam,
    init_params,
    predict,
    train,
)
from .pseudo import (
    FrequencyPlan,
    PseudoLabelCache,
    PseudoSequence,
    expand_pseudo_labels,
    expected_frequencies,
    make_pseudo_labels,
    round_frequencies,
)
from .softsort import SoftSortConfig, SoftSortResult, isotonic_regression, soft_sort, soft_sort_vjp

__version__ = "0.1.0"
