"""Error types: job-level aborts vs per-utterance failures."""


class ExtractorError(Exception):
    """Base for everything embext raises deliberately."""


class ModelLoadError(ExtractorError):
    """The encoder could not be constructed; the whole job aborts."""


class UtteranceError(ExtractorError):
    """One utterance could not be processed; listed, job continues."""
