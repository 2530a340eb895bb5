"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for all engine-level failures."""


class IrregularPoint(EngineError):
    """The induced metric failed the rank / positive-definiteness test."""


class NullFrame(EngineError):
    """Gram-Schmidt hit a (near-)null vector while building a frame."""


class StencilError(EngineError):
    """A finite-difference stencil left the chart domain or produced a
    non-finite value."""


class InvalidFrame(EngineError):
    """A codimension-2 normal frame was requested where it does not exist
    (wrong codimension, or H = 0)."""


class ChartError(EngineError):
    """Chart construction failed a parameter constraint or a membership,
    minimality or parallelism oracle."""


class SceneError(EngineError):
    """A scene file failed schema validation or refers to unknown names."""
