"""Adaptive per-frame image scaling for video object detection."""

from ._core import (
    Annotation,
    BoundingBox,
    Detection,
    DetectorProfile,
    Frame,
    GeneratorConfig,
    ImageSize,
    InvalidArgument,
    LabeledFrame,
    MalformedInput,
    RegressorModel,
    SyntheticDetector,
    VideoSnippet,
    average_precision,
    compare_policies,
    decode_scale,
    encode_scale_target,
    generate_corpus,
    generate_corpus_with,
    generate_scale_labels,
    iou,
    mean_squared_error,
    nms,
    read_corpus,
    run_policy,
    train,
    workload,
    write_corpus,
)

REGRESSION_SCALES = (600, 480, 360, 240, 128)

__all__ = [name for name in dir() if not name.startswith("_")]
