"""Hot kernels with a compiled (Cython) core and a pure-Python fallback.

The compiled module is used when it was built and imports cleanly; set
``GEOFLOW_PURE_PYTHON=1`` to force the fallback. ``BACKEND`` names the
active implementation.
"""

import os

from . import _pykernels as python

compiled = None
if os.environ.get("GEOFLOW_PURE_PYTHON", "") != "1":
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

_active = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

pav = _active.pav
label_periodic = _active.label_periodic
plane_velocity = _active.plane_velocity
halfplane_velocity = _active.halfplane_velocity
sphere_velocity = _active.sphere_velocity
torus_velocity = _active.torus_velocity
torus_pair_potential = _active.torus_pair_potential

__all__ = [
    "BACKEND",
    "compiled",
    "python",
    "pav",
    "label_periodic",
    "plane_velocity",
    "halfplane_velocity",
    "sphere_velocity",
    "torus_velocity",
    "torus_pair_potential",
]
