"""
Exception types raised across the harness. The CLI maps ConfigError to
exit code 2 and everything else to exit code 1.
"""


class ConfigError(ValueError):
    """Invalid or unknown configuration value"""


class ContractError(ValueError):
    """Precondition of an operation violated by the caller"""


class DimensionError(ContractError):
    """Tensor shapes do not line up"""


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function"""


class CapacityError(ValueError):
    """Requested enumeration is too large"""


class UnsupportedMetricError(ValueError):
    """Metric cannot be computed for this sampler or objective"""


class TrainingFault(RuntimeError):
    """Numerical failure during training or sampling"""


class SuiteFailure(RuntimeError):
    """Every member of a benchmark suite failed"""
