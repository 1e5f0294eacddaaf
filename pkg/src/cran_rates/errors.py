"""Exception taxonomy mirrored by the CLI exit-code contract."""


class SchemaError(ValueError):
    """Malformed model document or run configuration (CLI exit 2)."""


class PreconditionError(ValueError):
    """An evaluator precondition does not hold (CLI exit 3)."""


class MarkovViolationError(PreconditionError):
    """Channel outputs are not conditionally independent given the inputs."""

    def __init__(self, relay: int, leakage_bits: float):
        self.relay = relay
        self.leakage_bits = leakage_bits
        super().__init__(
            f"relay {relay} violates the conditional-independence chain "
            f"(I(Y_{relay};Y_rest|X) = {leakage_bits:.3e} bits)"
        )


class DomainError(ValueError):
    """Model outside the supported domain (CLI exit 4)."""
