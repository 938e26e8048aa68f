"""Multi-track temporal video grounding toolkit.

Pipeline commands take ``config`` as a dict, a JSON string, or None for defaults.
"""

import json as _json

from . import _core
from ._core import (
    ClipGrid,
    Error,
    Interval,
    InvalidArgument,
    NumericError,
    ParseError,
    ShapeError,
    best_candidate,
    combine_score,
    combine_scores,
    evaluate,
    intra_fuse,
    load_bundle,
    pool_to_grid,
    save_bundle,
    temporal_iou,
    temporal_nms,
)

__all__ = [
    "ClipGrid",
    "Error",
    "Interval",
    "InvalidArgument",
    "NumericError",
    "ParseError",
    "ShapeError",
    "best_candidate",
    "combine_score",
    "combine_scores",
    "default_config",
    "eval",
    "evaluate",
    "fuse",
    "gen_fixtures",
    "intra_fuse",
    "load_bundle",
    "pool_to_grid",
    "predict",
    "save_bundle",
    "temporal_iou",
    "temporal_nms",
    "train",
]


def _config(config):
    if config is None or isinstance(config, str):
        return config
    return _json.dumps(config)


def default_config():
    return _json.loads(_core.default_config())


def gen_fixtures(config=None):
    _core.gen_fixtures(_config(config))


def train(checkpoint, config=None, split="train", log=None, init_checkpoint=None):
    return _core.train(_config(config), split, checkpoint, log, init_checkpoint)


def predict(checkpoint, out, config=None, split="test", dump=None, candidates=None):
    return _core.predict(_config(config), checkpoint, split, out, dump, candidates)


def fuse(inputs, out, config=None, dump=None):
    return _core.fuse(_config(config), list(inputs), out, dump)


def eval(predictions, config=None, split="test"):  # noqa: A001
    return _core.eval(_config(config), predictions, split)
