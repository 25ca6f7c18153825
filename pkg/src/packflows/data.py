"""Bundled example meshes.

These back the test suite and make the command line usable out of the box:

    tetrahedron   sphere, 4 vertices (boundary of the 3-simplex)
    octahedron    sphere, 6 vertices
    icosahedron   sphere, 12 vertices
    torus_7       flat torus, 7 vertices, all degrees 6
    genus2_11     orientable genus-2 surface, 11 vertices, min degree 7
    cell5         3-sphere, boundary of the 4-simplex
    cell16        3-sphere, boundary of the 4-dimensional cross-polytope
    torus3_27     3-torus, 27 vertices, 24 tetrahedra per vertex
"""

import json
from importlib import resources

from .mesh import mesh_from_dict

_NAMES = ("tetrahedron", "octahedron", "icosahedron", "torus_7", "genus2_11",
          "cell5", "cell16", "torus3_27")


def available():
    return list(_NAMES)


def load(name):
    if name not in _NAMES:
        raise KeyError(f"unknown example mesh {name!r}; "
                       f"available: {', '.join(_NAMES)}")
    ref = resources.files("packflows").joinpath(f"data/{name}.json")
    return mesh_from_dict(json.loads(ref.read_text()))
