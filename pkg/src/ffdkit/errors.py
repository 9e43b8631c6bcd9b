"""Exception taxonomy shared across the pipeline."""


class FfdError(Exception):
    """Base class for all errors raised by this package."""


class ManifestError(FfdError):
    """Manifest cannot be parsed or violates a structural invariant."""


class DuplicateSequenceError(ManifestError):
    """Two manifest entries share a sequence_id."""


class SubjectOverlapError(ManifestError):
    """A subject contributes sequences to more than one split."""

    def __init__(self, violations):
        self.violations = list(violations)
        detail = "; ".join(
            f"subject '{v.subject_id}' appears in splits {', '.join(sorted(v.splits))}"
            for v in self.violations
        )
        super().__init__(f"subject-disjointness violated: {detail}")


class DegenerateClassError(FfdError):
    """A class count is zero where a positive count is required."""


class ScoreValidationError(FfdError):
    """A score vector is out of range or not normalized."""


class ScoreFileError(FfdError):
    """A score CSV row is malformed or fails validation."""


class MissingScoreError(FfdError):
    """A playback source has no row for the requested frame."""


class ParameterError(FfdError, ValueError):
    """An operation was called with an out-of-contract parameter."""


class ImageShapeError(FfdError):
    """Image dimensions are incompatible with the requested operation."""


class GeometryError(FfdError):
    """Synthetic geometry does not fit inside the frame."""


class ShapeError(FfdError):
    """Tensor shapes are incompatible."""


class WeightsError(FfdError):
    """A weight bundle is missing tensors, malformed, or invalid."""


class EmptySequenceError(FfdError):
    """A frame sequence with no frames was passed where one is required."""


class EmptyInputError(FfdError):
    """An empty collection was passed where at least one element is required."""


class DegenerateDataError(FfdError):
    """Evaluation input lacks both positive and negative items."""
