class ExtractorError(Exception):
    """Base for everything this package raises on purpose."""


class JobError(ExtractorError):
    """An extraction job cannot run: undecodable input, unknown backbone, ..."""


class EncoderError(ExtractorError):
    """The H.264 encoder helper failed or cannot be built."""
