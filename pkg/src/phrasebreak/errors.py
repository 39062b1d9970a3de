"""Exception types shared across the toolkit."""


class PhraseBreakError(Exception):
    """Base class for all toolkit errors."""


class AlignmentParseError(PhraseBreakError):
    """Malformed alignment file; carries the offending line number."""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"{message} (line {line_number})"
        super().__init__(message)


class EmptyInputError(PhraseBreakError):
    """Input contained no usable content (no words, no segments, ...)."""


class SplitSpecError(PhraseBreakError):
    """Invalid or overlapping train/dev/test split assignment."""


class CheckpointError(PhraseBreakError):
    """Checkpoint file is unreadable, corrupt, or shape-incompatible."""


class TrainingDivergedError(PhraseBreakError):
    """Loss became non-finite during training."""

    def __init__(self, epoch, step, message="training loss is non-finite"):
        self.epoch = epoch
        self.step = step
        super().__init__(f"{message} (epoch {epoch}, step {step})")
