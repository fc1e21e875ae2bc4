"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid model/run configuration. Carries all messages, not just the first."""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class InputError(ValueError):
    """Caller passed data violating an operation's precondition."""


class FormatError(RuntimeError):
    """Corrupt or malformed file."""


class VersionError(FormatError):
    """File carries an unsupported version tag."""


class ParseError(FormatError):
    """Malformed text row; carries the 1-based line number."""

    def __init__(self, message, line):
        self.line = line
        super().__init__(f"line {line}: {message}")


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during training; carries the offending epoch."""

    def __init__(self, epoch, loss):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"training diverged at epoch {epoch} (loss={loss!r})")


class SamplingStarvedError(RuntimeError):
    """Band rejection sampling exhausted its attempt budget."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or hit contaminated input."""


class DegenerateModeError(ValueError):
    """An edit put weight on an eigenmode below the rank threshold."""
