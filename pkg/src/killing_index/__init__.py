"""Morse index and nullity of minimal and CMC surfaces in 3-manifolds with a
global orthonormal Killing frame, and an executable certificate for the bound
``Ind + Null >= ceil(g / 3)``.
"""

from .ambient import AmbientSpace, killing_frame, ricci_normal
from .fem import (
    DiscreteOperators,
    Spectrum,
    assemble_jacobi_operators,
    cmc_spectrum,
    default_tol_zero,
    index_nullity,
    jacobi_spectrum,
    rayleigh_quotient,
)
from .generators import GENERATORS, GeneratorOutput
from .geometry import SurfaceGeometry, face_frames, shape_operator
from .hodge import HarmonicBasis, dec_operators, harmonic_basis, rotate90
from .kernels import BACKEND
from .killing_tests import (
    Certificate,
    KillingTestSet,
    cmc_certificate,
    lemma1_residuals,
    lemma2_residual,
    test_functions,
    theorem_certificate,
)
from .mesh import Mesh, TopologyReport, load_mesh, topology, write_mesh

__version__ = "0.1.0"

__all__ = [
    "AmbientSpace",
    "BACKEND",
    "Certificate",
    "DiscreteOperators",
    "GENERATORS",
    "GeneratorOutput",
    "HarmonicBasis",
    "KillingTestSet",
    "Mesh",
    "Spectrum",
    "SurfaceGeometry",
    "TopologyReport",
    "assemble_jacobi_operators",
    "cmc_certificate",
    "cmc_spectrum",
    "dec_operators",
    "default_tol_zero",
    "face_frames",
    "harmonic_basis",
    "index_nullity",
    "jacobi_spectrum",
    "killing_frame",
    "lemma1_residuals",
    "lemma2_residual",
    "load_mesh",
    "rayleigh_quotient",
    "ricci_normal",
    "rotate90",
    "shape_operator",
    "test_functions",
    "theorem_certificate",
    "topology",
    "write_mesh",
]
