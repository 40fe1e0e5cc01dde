"""Exception types shared across the toolkit."""


class AvmirError(Exception):
    """Base class for toolkit errors."""


class InputError(AvmirError):
    """Bad user input: missing files, malformed formats, invalid flags.

    The CLI maps this (and ValueError/OSError) to exit code 2.
    """


class WavFormatError(InputError):
    """Malformed or unsupported WAV payload; carries the offending byte offset."""

    def __init__(self, message, byte_offset):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


class ArffFormatError(InputError):
    """Malformed ARFF header or data row; carries the offending line number."""

    def __init__(self, message, line_number):
        super().__init__(f"{message} (line {line_number})")
        self.line_number = line_number


class InternalError(AvmirError):
    """An internal invariant was violated; the CLI maps this to exit code 3."""
