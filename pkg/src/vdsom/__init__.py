"""Self-organizing maps with a variationally adapted neighborhood radius."""

from .data import StreamSpec, load_idx_images, open_stream
from .dsom import DsomState, dsom_step
from .grid import Grid, GridSpec, build_grid
from .metrics import TrainLog, distortion, organization_score
from .optim import AdamState, adam_step, sgd_step
from .runner import RunConfig, run_sweep, run_train
from .variational import (
    MapState,
    VdsomConfig,
    VdsomGradient,
    gradient,
    per_sample_objective,
    responsibilities,
)

__version__ = "0.1.0"
