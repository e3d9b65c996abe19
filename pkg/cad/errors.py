"""Geometry kernel failures. Each one counts the sample as invalid."""
from typing import Optional


class KernelError(ValueError):
    """Base kernel failure; part_index and loop_index locate it when known."""

    def __init__(self, message: str, part_index: Optional[int] = None, loop_index: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.part_index = part_index
        self.loop_index = loop_index

    @property
    def code(self) -> str:
        return type(self).__name__

    def __str__(self) -> str:
        where = f"part {self.part_index}: " if self.part_index is not None else ""
        return f"{where}{self.code}: {self.message}"


class DegenerateCurve(KernelError):
    pass


class SelfIntersectingLoop(KernelError):
    pass


class HoleOutsideOuter(KernelError):
    pass


class OverlappingHoles(KernelError):
    pass


class TriangulationFailure(KernelError):
    pass


class ZeroExtent(KernelError):
    pass


class BooleanFailure(KernelError):
    pass


class EmptyResult(KernelError):
    pass


class EmptyMesh(KernelError):
    pass
