"""beamsim: design math and a deterministic closed-loop simulator for
steered-projection near-eye displays.

Subpackages / modules:

* geometry  - frames, rigid transforms, homographies and their estimation
* optics    - relay optics, diffraction spot size, tunable lens, eyepiece FoV
* steering  - mirror quantization / settling and the pointing controller
* simkit    - the simulated world and the discrete-event tracking pipeline
* imaging   - raster warping, slanted-edge synthesis, MTF analysis
* cli       - the `beamsim` command-line tool
"""

from . import errors, geometry, imaging, optics, steering
from . import simkit

__version__ = "0.1.0"

__all__ = ["errors", "geometry", "imaging", "optics", "simkit", "steering",
           "__version__"]
