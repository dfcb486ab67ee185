"""Exception types shared across the taxolint package."""


class TaxolintError(Exception):
    """Base class for all taxolint errors."""


class UnknownEntityError(TaxolintError):
    """An entity id was queried that is not present in the graph."""

    def __init__(self, entity: int):
        super().__init__(f"unknown entity Q{entity}")
        self.entity = entity


class RootMissingError(TaxolintError):
    """The configured root entity is absent from the graph."""

    def __init__(self, root: int):
        super().__init__(f"root entity Q{root} not in graph")
        self.root = root


class MalformedLineError(TaxolintError):
    """A dump line could not be parsed; callers count and skip."""


class NetworkError(TaxolintError):
    """Live fetch failed or network use is disabled."""


class UnknownQidError(TaxolintError):
    """The remote API reports the requested entity as missing."""

    def __init__(self, entity: int):
        super().__init__(f"Q{entity} does not exist")
        self.entity = entity


class RateLimitedError(TaxolintError):
    """The remote API rejected the request for exceeding its rate limit."""


class ProviderUnavailableError(TaxolintError):
    """The embedding provider cannot serve requests."""


class EmptyTextError(TaxolintError):
    """Both label and description are empty; nothing to embed."""


class TooFewParentsError(TaxolintError):
    """Drift needs at least two parent vectors."""
