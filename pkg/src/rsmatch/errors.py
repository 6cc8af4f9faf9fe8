"""Exception types shared across the package."""


class RSMatchError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RSMatchError):
    """Malformed or invalid training configuration."""


class ManifestError(RSMatchError):
    """Malformed dataset manifest or sidecar."""


class BenchmarkError(RSMatchError):
    """Benchmark construction cannot proceed (bad plan, roster, or counts)."""


class GenerationError(RSMatchError):
    """A generator adapter failed while producing images."""


class CheckpointError(RSMatchError):
    """Checkpoint file is missing, corrupted, or has an unsupported version."""


class NonFiniteLossError(RSMatchError):
    """A loss term became NaN/Inf during training.

    Carries the name and value of the offending term plus the iteration
    at which it occurred so runs can be diagnosed post-mortem.
    """

    def __init__(self, term: str, value: float, iteration: int, detail: str = ""):
        self.term = term
        self.value = value
        self.iteration = iteration
        msg = f"non-finite loss term {term!r} = {value} at iteration {iteration}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class AblationError(RSMatchError):
    """Invalid ablation grid (unknown or conflicting axes)."""
