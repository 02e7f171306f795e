"""
BSDM - Background Suppression Diffusion Model for Hyperspectral Anomaly Detection

Learns a latent background distribution of a hyperspectral cube through a diffusion
process driven by pseudo background noise, then suppresses the background of cubes at
inference so downstream detectors (RX, autoencoder) separate anomalies better.

Version: 1.0.0
License: MIT
"""

__version__ = "1.0.0"
__license__ = "MIT"
