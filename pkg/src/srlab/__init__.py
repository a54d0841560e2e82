"""Support/resistance level discovery and statistical evaluation."""

__version__ = "0.1.0"

RNG_ALGORITHM = "PCG64"

from srlab.series import (  # noqa: E402,F401
    Ar1Spec,
    PriceSeries,
    ShuffleSpec,
    load_series,
    mean_abs_increment,
    save_series,
    shuffle_returns,
    simulate_ar1,
)
from srlab.engine import (  # noqa: E402,F401
    DetectorConfig,
    DetectionResult,
    EntryEvent,
    ExitClass,
    Kind,
    Outcome,
    SrLevel,
    classify_exit,
    count_resistance_bounces,
    count_support_bounces,
    detect_events,
)
from srlab.bayes import (  # noqa: E402,F401
    BounceCell,
    BouncePosterior,
    aggregate,
    posterior,
)
