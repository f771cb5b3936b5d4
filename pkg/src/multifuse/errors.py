"""Exception types shared across the package."""


class MultifuseError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(MultifuseError):
    """A value violates a documented precondition."""


class InvalidParameter(MultifuseError):
    """A tuning parameter is outside its legal range."""


class DimensionError(MultifuseError):
    """Operands have incompatible dimensions or labels."""


class SingularMatrix(MultifuseError):
    """A matrix lacks the definiteness the operation requires."""


class DegenerateGroup(MultifuseError):
    """An empty group cannot be similarity-scored."""


class DegenerateSpectrum(MultifuseError):
    """The leading eigenvalue is not simple, so no canonical eigenvector exists."""


class ParseError(MultifuseError):
    """An input file does not follow the expected format."""


class EmptyTable(ParseError):
    """An input table has a header but no data rows."""


class EmptyAfterFilter(MultifuseError):
    """Entity filtering removed every entity."""
