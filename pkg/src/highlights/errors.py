"""Exception hierarchy shared across the toolkit.

Every error carries enough context (field name, frame index, video id)
to be actionable without a debugger.
"""


class HighlightsError(Exception):
    """Base class for all toolkit errors."""


# --- manifest / core validation ---


class MissingField(HighlightsError):
    def __init__(self, field: str):
        self.field = field
        super().__init__(f"missing required field: {field!r}")


class NonPositiveDimension(HighlightsError):
    def __init__(self, field: str):
        self.field = field
        super().__init__(f"field {field!r} must be positive")


class BadPattern(HighlightsError):
    def __init__(self, pattern: str):
        self.pattern = pattern
        super().__init__(f"frame pattern has no index placeholder: {pattern!r}")


class UnknownCode(HighlightsError):
    def __init__(self, code: int):
        self.code = code
        super().__init__(f"unknown scene code: {code}")


# --- corpus ---


class SpecInvariantViolation(HighlightsError):
    pass


class IoError(HighlightsError):
    pass


class FormatVersionMismatch(HighlightsError):
    def __init__(self, found: int, supported: int):
        self.found = found
        self.supported = supported
        super().__init__(f"format version {found} not supported (expected <= {supported})")


class TooFewVideos(HighlightsError):
    pass


class BadRatios(HighlightsError):
    pass


# --- pipeline ---


class BadStreamHeader(HighlightsError):
    pass


class PipelineFrameError(HighlightsError):
    """Wraps a downstream failure with the frame index it occurred on."""

    def __init__(self, frame_index: int, cause: BaseException):
        self.frame_index = frame_index
        self.cause = cause
        super().__init__(f"frame {frame_index}: {cause}")


# --- nnet ---


class ShapeMismatch(HighlightsError):
    def __init__(self, layer: str, detail: str = ""):
        self.layer = layer
        msg = f"shape mismatch at layer {layer!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class EmptyDataset(HighlightsError):
    pass


class LabelOutOfRange(HighlightsError):
    pass


class DivergedLoss(HighlightsError):
    pass


class WeightShapeMismatch(HighlightsError):
    pass


# --- cascade ---


class MissingArtifact(HighlightsError):
    pass


class ClassCountMismatch(HighlightsError):
    pass


# --- postprocess ---


class UnsortedSamples(HighlightsError):
    pass


class CoverageGap(HighlightsError):
    pass


# --- eval ---


class NoPositives(HighlightsError):
    pass


# --- annotation ---


class ZeroTotalVariance(HighlightsError):
    pass


class TooFewAnnotators(HighlightsError):
    pass


class AllSubsetsDegenerate(HighlightsError):
    pass


class EmptySubset(HighlightsError):
    pass


class IncompleteCorrections(HighlightsError):
    def __init__(self, video_id: str):
        self.video_id = video_id
        super().__init__(f"corrections missing for video {video_id!r}")


class LengthMismatch(HighlightsError):
    pass
