class ConfigurationError(ValueError):
    """Invalid scenario or experiment configuration."""


class ScheduleValidationError(RuntimeError):
    """A scheduler produced a schedule that breaks a scheduling constraint."""

    def __init__(self, violations, context: str = ""):
        self.violations = list(violations)
        self.context = context
        head = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"{context}schedule violates constraints: {head}{more}")

    def __reduce__(self):
        # keep the violation list when raised inside a worker process
        return (type(self), (self.violations, self.context))
