"""ts2img: time series to images, plus small transfer-learning CNNs.

The package turns windowed multivariate signals into Gramian angular field
and Markov transition field images, writes them deterministically as PNG
and TSIM tensors, and trains compact convolutional models on either the
raw windows or the encoded images, including head-transfer and two-branch
fusion protocols. Everything is seeded and reproducible.
"""

__version__ = "0.1.0"

from .encode import (
    GADF,
    GASF,
    GRAY_SINGLE,
    LAYOUTS,
    METHODS,
    MTF,
    PLANES_XYZA,
    RGB_XYZ,
    EncodedImage,
    ImageStack,
    MarkovModel,
    PolarSeries,
    compose_stack,
    encode_series,
    fit_markov,
    gadf,
    gasf,
    mtf,
    to_polar,
)
from .errors import (
    ConfigError,
    CorruptionError,
    DivergenceError,
    DomainError,
    FormatError,
    PlanError,
    RowError,
    SchemaError,
    ShapeError,
    StateError,
    Ts2ImgError,
)
from .evaluate import EvalReport, Split, holdout_split, loocv_folds, score, score_confusion
from .imageio import png_bytes, quantize_plane, read_tensor, render_png, write_tensor
from .ingest import (
    ACTIVITY_LABELS,
    ActivityRecord,
    ChannelSpec,
    ParseStats,
    PhysioFrame,
    SynthConfig,
    WisdmRun,
    generate_synthetic,
    group_wisdm_runs,
    parse_physio_csv,
    parse_wisdm,
    windows_from_frames,
    wisdm_windows,
    write_physio_csv,
)
from .series import (
    DEFAULT_STEP,
    DEFAULT_WINDOW,
    MultiChannelSeries,
    RescaledSeries,
    Series,
    Window,
    rescale_minmax,
    segment_windows,
    window_label,
    windows_to_arrays,
)
from .transfer import (
    ArchSpec1D,
    ArchSpec2D,
    FusionSpec,
    TransferPlan,
    build_cnn1d,
    build_cnn2d,
    build_fusion,
    freeze_model,
    make_feature_branch,
    pretrain_source_2d,
    transfer_head,
)
from . import nn
