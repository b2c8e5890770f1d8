"""Exception hierarchy shared across the package."""


class FvgradError(Exception):
    """Base class for all fvgrad errors."""

    code = "fvgrad"


class SingularSystem(FvgradError):
    """2x2 system is singular (or numerically indistinguishable from singular)."""

    code = "numerics.singular"


class DegenerateCell(FvgradError):
    """A cell has non-positive area or a zero-length face."""

    code = "mesh.degenerate-cell"


class NoNeighbour(FvgradError):
    """A neighbour-dependent query was made on a boundary face."""

    code = "mesh.no-neighbour"


class MeshFormatError(FvgradError):
    """Mesh interchange file is malformed."""

    code = "mesh.format"


class FoldedMesh(FvgradError):
    """A generated mesh contains an inverted (non-positive area) cell."""

    code = "meshgen.folded"


class BadPatch(FvgradError):
    """Refinement patches are not nested or not aligned to coarse cells."""

    code = "meshgen.bad-patch"


class InsufficientFaces(FvgradError):
    """Too few usable faces remain for a gradient stencil."""

    code = "gradients.insufficient-faces"


class NonPositiveError(FvgradError):
    """Observed-order computation received a non-positive error value."""

    code = "study.non-positive-error"


class ConfigConflict(FvgradError):
    """Mutually inconsistent configuration options."""

    code = "cli.config-conflict"


class UsageError(FvgradError):
    """Bad command-line usage."""

    code = "cli.usage"
