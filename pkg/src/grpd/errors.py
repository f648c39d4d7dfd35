"""Exception hierarchy shared by all grpd modules."""


class GrpdError(Exception):
    """Base class for all library errors."""


class DomainError(GrpdError):
    """Coordinates are invalid for the model (off-grid, a <= 0, bad shape)."""


class ModelMismatchError(GrpdError):
    """Two objects that must live on the same model do not."""


class ComposabilityError(GrpdError):
    """A pair fed to a partial multiplication is not composable."""


class TransversalityError(GrpdError):
    """No transversal route is available for the requested convolution."""


class ConeConditionError(GrpdError):
    """The wave-front gate W1 x W2 meets ker m_Gamma; gated product refused."""


class OrderCapError(GrpdError):
    """Requested fiber-derivative order exceeds the supported cap."""


class ModelUnsupportedError(GrpdError):
    """The operation is not defined for this model kind."""


class SerializationError(GrpdError):
    """Malformed on-disk data (bad magic, truncated payload, schema error)."""
