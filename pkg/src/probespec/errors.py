"""Exception hierarchy shared by every module.

The CLI maps each class to a stable exit code, so new error types should
subclass one of these rather than raising bare built-ins.
"""


class ProbeSpecError(Exception):
    """Base class for all library errors."""

    code = "error"


class ParseError(ProbeSpecError, ValueError):
    code = "parse"


class StructureError(ProbeSpecError, ValueError):
    """Operands have incompatible widths or shapes."""

    code = "structure"


class DimensionError(StructureError):
    code = "dimension"


class NotHermitianError(ProbeSpecError, ValueError):
    code = "validation"


class ResourceLimitError(ProbeSpecError, RuntimeError):
    """A dense realization would exceed the configured qubit cap."""

    code = "resource"


class ProjectionError(ProbeSpecError, ValueError):
    code = "projection"


class PropagationError(ProbeSpecError, RuntimeError):
    code = "propagation"


class ChainAbortedError(ProbeSpecError, RuntimeError):
    code = "chain-aborted"

    def __init__(self, step: int, probability: float, message: str = ""):
        self.step = step
        self.probability = probability
        super().__init__(
            message
            or f"preparation step {step} flipped the probe with probability "
            f"{probability:.3g}, below the abort threshold"
        )


class SweepError(ProbeSpecError, RuntimeError):
    """One or more sweep points failed; ``failures`` maps k to the exception."""

    code = "propagation"

    def __init__(self, failures: dict):
        self.failures = dict(sorted(failures.items()))
        codes = {getattr(exc, "code", None) for exc in self.failures.values()}
        if len(codes) == 1 and None not in codes:
            # a failure common to every point (e.g. the size cap) keeps its own code
            self.code = codes.pop()
        detail = "; ".join(f"k={k}: {exc}" for k, exc in self.failures.items())
        super().__init__(f"{len(self.failures)} sweep point(s) failed: {detail}")
