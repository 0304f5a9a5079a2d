"""Triple gamma shrinkage for time-varying parameter regressions and VARs."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DataError,
    DomainError,
    NumericalAccuracyError,
    SamplerError,
    ShrinkTGError,
    UnsupportedCaseError,
)
from .prior_tg import HyperPriorSpec, TripleGammaPrior, special_case  # noqa: E402
from .rand_dist import RngStream  # noqa: E402
from .drawstore import DrawStore  # noqa: E402
from .gibbs_tvp import GibbsConfig, run_chain  # noqa: E402
from .ssm import TvpData  # noqa: E402
from .var_tvp import VarConfig, VarData, run_var_chain  # noqa: E402

__all__ = [
    "__version__",
    "ConfigError",
    "DataError",
    "DomainError",
    "NumericalAccuracyError",
    "SamplerError",
    "ShrinkTGError",
    "UnsupportedCaseError",
    "HyperPriorSpec",
    "TripleGammaPrior",
    "special_case",
    "RngStream",
    "DrawStore",
    "GibbsConfig",
    "run_chain",
    "TvpData",
    "VarConfig",
    "VarData",
    "run_var_chain",
]
