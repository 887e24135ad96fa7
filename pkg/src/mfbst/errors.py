"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    pass


class KeyNotFound(KeyError):
    pass


class ResourceLimit(RuntimeError):
    pass


class EmptyContainer(IndexError):
    pass
