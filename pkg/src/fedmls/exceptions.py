"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violated a documented precondition."""


class DimensionMismatchError(InvalidInputError):
    """Model and data dimensions disagree."""


class ProtocolError(RuntimeError):
    """A simulated round violated the communication contract."""


class ClientFailureError(RuntimeError):
    """A client's local phase failed; names the client and round."""

    def __init__(self, client_id: int, round_index: int, cause: Exception):
        self.client_id = client_id
        self.round_index = round_index
        self.cause = cause
        super().__init__(
            f"client {client_id} failed at round {round_index}: {cause!r}"
        )


class ParseError(ValueError):
    """A data file could not be parsed; carries row/column location."""


class SweepError(RuntimeError):
    """Every point of a hyper-parameter sweep failed."""
