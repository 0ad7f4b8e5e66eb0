"""Exception hierarchy shared by all pipeline stages."""


class MetabographError(Exception):
    pass


class UnknownPrefix(MetabographError, KeyError):
    def __init__(self, prefix):
        super().__init__(prefix)
        self.prefix = prefix

    def __str__(self):
        return f"unknown namespace prefix {self.prefix!r}"


class InvalidSpec(MetabographError, ValueError):
    pass


class EmptyIdentity(MetabographError, ValueError):
    pass


class MalformedUai(MetabographError, ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class EmptyQuery(MetabographError, ValueError):
    pass


class NetworkUnavailable(MetabographError):
    pass


class MalformedResponse(MetabographError):
    pass


class MissingHeader(MetabographError):
    pass


class DuplicateColumn(MetabographError):
    pass


class EmptyInput(MetabographError, ValueError):
    pass


class UnparseableMixture(MetabographError, ValueError):
    pass


class UnmappedColumn(MetabographError):
    pass


class UnknownLayout(MetabographError):
    pass


class MissingMandatoryColumn(MetabographError):
    pass


class EndpointUnreachable(MetabographError):
    pass


class QueryFailure(MetabographError):
    pass


class LoadMismatch(MetabographError):
    pass


class IOFailure(MetabographError, OSError):
    pass
