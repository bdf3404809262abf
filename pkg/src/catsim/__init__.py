"""catsim: trace-driven simulator for DRAM wordline-crosstalk mitigation.

Implements an adaptive counter tree (CAT) with periodically reset (PRCAT) and
dynamically reconfigured (DRCAT) variants next to static counter assignment
(SCA) and probabilistic row activation (PRA), plus refresh-power accounting,
a reliability model and synthetic workload generators.
"""

from .model import (
    AccessEvent,
    BankConfig,
    ConfigError,
    RefreshEvent,
    Trace,
    TraceFormatError,
    dump_trace,
    load_trace,
    save_trace,
    validate_config,
)
from .thresholds import (
    CostInputs,
    SplitThresholds,
    UnsupportedConfigError,
    cost_cat,
    cost_sca,
    critical_bias,
    heuristic_thresholds,
    load_threshold_table,
    paper_thresholds,
    resolve_thresholds,
)
from .cattree import CatTree

__version__ = "0.1.0"

__all__ = [
    "AccessEvent",
    "BankConfig",
    "CatTree",
    "ConfigError",
    "CostInputs",
    "RefreshEvent",
    "SplitThresholds",
    "Trace",
    "TraceFormatError",
    "UnsupportedConfigError",
    "cost_cat",
    "cost_sca",
    "critical_bias",
    "dump_trace",
    "heuristic_thresholds",
    "load_threshold_table",
    "load_trace",
    "paper_thresholds",
    "resolve_thresholds",
    "save_trace",
    "validate_config",
    "__version__",
]
