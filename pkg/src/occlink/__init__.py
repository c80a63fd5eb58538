"""Simulator of LED-to-camera vehicular links.

Modules: ``channel`` (optical IM/DD channel), ``modem`` (camera-side
modulation schemes), ``scene`` (synthetic frame rendering), ``detect``
(transmitter regions, keypoints, registration), ``ranging`` (stereo
geometry), ``controller`` (sampling policy and fast-path decoder) and
``harness`` (sweeps, reports, CLI).
"""

__version__ = "0.1.0"
