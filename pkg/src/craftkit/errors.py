"""Exception hierarchy shared across the pipeline stages."""


class CraftError(Exception):
    """Base class for all errors raised by this package."""


class IoError(CraftError):
    pass


class ParseError(CraftError):
    pass


class JsonSyntaxError(ParseError):
    pass


class DuplicateId(CraftError):
    pass


class DimensionOutOfRange(CraftError):
    pass


class UnknownObject(CraftError):
    def __init__(self, object_id):
        super().__init__(f"unknown object id: {object_id!r}")
        self.object_id = object_id


class PlacementError(CraftError):
    pass


class Unplaceable(PlacementError):
    def __init__(self, part):
        super().__init__(f"part {part!r} has no connection to any placed part")
        self.part = part


class InconsistentConnection(PlacementError):
    def __init__(self, part, to_part, detail=""):
        msg = f"connection {part!r} -> {to_part!r} is inconsistent with the part's pose"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.part = part
        self.to_part = to_part


class HoleNotCarvedYet(PlacementError):
    def __init__(self, part, to_part, modification):
        super().__init__(
            f"part {part!r} inserts into {modification!r} of {to_part!r}, "
            "which is not placed yet"
        )
        self.part = part
        self.to_part = to_part
        self.modification = modification


class HoleExceedsOwner(CraftError):
    def __init__(self, part, modification):
        super().__init__(f"hole {modification!r} exits the bounds of part {part!r}")
        self.part = part
        self.modification = modification


class DisconnectedError(CraftError):
    def __init__(self, components):
        super().__init__(
            f"assembly splits into {len(components)} components: "
            + "; ".join(",".join(sorted(c)) for c in components)
        )
        self.components = [sorted(c) for c in components]


class NumericalDivergence(CraftError):
    pass


class EmptyMesh(CraftError):
    pass


class DegenerateExtent(CraftError):
    pass


class CannotReachCount(CraftError):
    pass


class ClientError(CraftError):
    """Transport or auth failure talking to the language-model backend."""
