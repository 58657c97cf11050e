"""Two-photon quantum Rabi model with a quartic regulator."""
