"""Exception types shared across the package."""


class CityAlertError(Exception):
    """Base class for all package errors."""


class EmptyAfterCleaning(CityAlertError):
    """Raised when a post has no tokens left after the cleaning stage."""


class EmptyVocabulary(CityAlertError):
    """Raised when no document yields a single n-gram feature."""


class MissingClass(CityAlertError):
    """Raised when a declared class has no training examples."""


class SingleClass(CityAlertError):
    """Raised when binary training data contains only one label."""


class DimensionMismatch(CityAlertError):
    """Raised when a feature vector does not match a model's vocabulary size."""


class VocabularyMismatch(CityAlertError):
    """Raised when a model is paired with a vocabulary it was not trained on."""


class TooFewExamples(CityAlertError):
    """Raised when a dataset is too small for the requested fold count."""


class GeocoderUnavailable(CityAlertError):
    """Raised when the configured external geocoding backend cannot be reached."""


class CorruptLog(CityAlertError):
    """Raised when a non-trailing log record fails its checksum."""


class StorageFull(CityAlertError):
    """Raised when an append cannot be made durable."""


class SourceClosed(CityAlertError):
    """Raised by post sources to signal an orderly end of stream."""
