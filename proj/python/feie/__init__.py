"""Multi-task affect extraction and masked recurrent aggregation.

The compiled core lives in ``feie._feie``; this package re-exports it.
"""

from ._feie import (  # noqa: F401
    ConfigError,
    Error,
    IoError,
    NumericError,
    ShapeError,
    ValidationError,
    action_units,
    ccc,
    evaluate,
    expression_names,
    gen_videos,
    gradcheck,
    init_mrnn,
    intensity_names,
    load_checkpoint,
    loss_bce,
    loss_ccc,
    loss_cce,
    loss_dm,
    loss_mse,
    loss_pearson,
    macro_f1,
    mask_and_route,
    mrnn_predict,
    pearson,
    pseudo_au,
    relatedness,
    resolve_config,
    train,
)

__version__ = "0.1.0"
