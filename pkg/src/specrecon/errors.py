"""Exception and warning types raised across the package."""


class SpecReconError(Exception):
    """Base class for all errors raised by specrecon."""


class DimensionMismatch(SpecReconError, ValueError):
    pass


class DegenerateSpectrum(SpecReconError, ValueError):
    pass


class NormalizedInput(SpecReconError, ValueError):
    """Augmentation was asked to perturb an already normalized signal."""


class ConstantSignal(SpecReconError, ValueError):
    pass


class NonPositive(SpecReconError, ValueError):
    pass


class ZeroWavelength(SpecReconError, ValueError):
    pass


class ZeroIntensity(SpecReconError, ValueError):
    pass


class NoForwardContext(SpecReconError, RuntimeError):
    """backward() called without a preceding forward()."""


class CheckpointError(SpecReconError, ValueError):
    pass


class BadMagic(CheckpointError):
    pass


class VersionMismatch(CheckpointError):
    pass


class TruncatedFile(CheckpointError):
    pass


class BadConfig(SpecReconError, ValueError):
    pass


class IoError(SpecReconError, OSError):
    pass


class MaxIterExceeded(RuntimeWarning):
    """An iterative solver hit max_iter; the best iterate is still returned."""
