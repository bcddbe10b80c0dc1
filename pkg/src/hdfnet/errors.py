"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called with inputs outside its declared contract."""


class PgmParseError(ValueError):
    """Malformed PGM data. ``offset`` is the byte position where parsing failed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset
