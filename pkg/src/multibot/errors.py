"""Exception hierarchy shared by every stage of the pipeline."""


class BotDetectorError(Exception):
    """Base class for all errors raised by multibot."""


class DataError(BotDetectorError):
    """Input data could not be used (exit code 2 at the command line)."""


# ingest
class MissingUserId(DataError):
    pass


class TypeCoercionFailure(DataError):
    pass


class UnreadableStream(DataError):
    pass


class ParseError(DataError):
    pass


class MappingError(DataError):
    pass


# features
class EmptyCorpus(DataError):
    pass


class EmptyVocabulary(DataError):
    pass


# learners / calibration
class EmptyTrainingSet(DataError):
    pass


class InconsistentDimensions(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class SingleClassTraining(DataError):
    pass


class SingleClassCalibration(DataError):
    pass


class NonFiniteScore(DataError):
    pass


class TooFewSamples(DataError):
    pass


# evaluation
class SingleClassDataset(DataError):
    pass


class TooFewPerClass(TooFewSamples):
    pass


class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


# ensemble
class EmptyResults(DataError):
    pass


# modelstore
class VersionMismatch(DataError):
    pass


class CorruptModel(DataError):
    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


# synth
class InvalidConfig(DataError):
    pass


class ModelIOError(DataError):
    """Model file could not be written or read."""
