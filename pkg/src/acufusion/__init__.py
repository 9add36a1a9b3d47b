"""acufusion: needle-tissue simulation and force/IMU/visual fusion for
quantifying acupuncture manipulation parameters.

The package simulates ground-truth needle dynamics, synthesizes noisy
sensor streams, and recovers the six key parameters (force, acceleration,
velocity, displacement, angular velocity, angle) plus per-cycle features
through a conditioning / attitude / state-fusion / segmented-integration
chain.  Hot kernels run compiled when the extension is available; set
ACUFUSION_PURE=1 to force the pure-Python fallback.
"""

from ._kernels import BACKEND
from .core import (ForceCalibration, ManipulationType, RecordingSession,
                   SampledSeries, resample_cubic_spline, rmse)

__version__ = "0.1.0"
__all__ = [
    "BACKEND", "ForceCalibration", "ManipulationType", "RecordingSession",
    "SampledSeries", "resample_cubic_spline", "rmse", "__version__",
]
