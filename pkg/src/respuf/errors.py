"""Exception types raised across the package.

Argument and domain violations raise plain ``ValueError``; the classes here
mark failures a caller is expected to handle.
"""


class EmptyPopulationError(ValueError):
    """A population of zero devices was requested."""


class CsvParseError(ValueError):
    """A reading CSV did not match the schema."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class HelperFormatError(ValueError):
    """A helper-data file is malformed or uses unsupported parameters."""


class RegenerationError(Exception):
    """The enrolled PUF ID could not be reconstructed.

    Raised when the BCH decoder gives up or when the corrected ID fails the
    stored check value. No key material may be derived after this.
    """


class PaddingError(ValueError):
    """PKCS#7 padding is malformed."""


class ChannelError(Exception):
    """Framing, transport or decryption failure on the secure channel."""
