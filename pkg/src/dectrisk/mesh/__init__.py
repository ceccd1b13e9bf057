from .topology import MeshTopology, induce_twisted_orientation
from .geometry import MeshGeometry, compute_geometry
from .pair import MeshPair, assemble_mesh, build_mesh, build_periodic_quad, build_periodic_trihex
from .validate import validate_mesh
from .io import load_mesh, parse_mesh, save_mesh
