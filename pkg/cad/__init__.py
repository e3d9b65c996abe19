"""CAD construction sequences: schema, geometry kernel, mesh exchange."""
from cad.errors import KernelError
from cad.kernel import (
    Polygon2D,
    boolean,
    build_model,
    build_profile,
    extrude_profile,
    sample_surface,
    triangulate,
)
from cad.mesh import TriangleMesh
from cad.schema import (
    CadSchemaError,
    InvariantViolation,
    MalformedJson,
    SchemaViolation,
    Violation,
    load_sequence,
    parse_sequence,
    serialize_sequence,
    validate,
)
from cad.sequence import CadSequence, Operation
from cad.tessellate import TessellationParams, tessellate_curve
