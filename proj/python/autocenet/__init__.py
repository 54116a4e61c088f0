from ._core import (
    ConfigError,
    DimensionError,
    Error,
    Network,
    NumericError,
    ablations,
    evaluate,
    f1_from,
    gradient_suite,
    make_phantom,
    read_volume,
    relative_reduction,
    window_normalize,
    write_volume,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "Error",
    "Network",
    "NumericError",
    "ablations",
    "evaluate",
    "f1_from",
    "gradient_suite",
    "make_phantom",
    "read_volume",
    "relative_reduction",
    "window_normalize",
    "write_volume",
]
