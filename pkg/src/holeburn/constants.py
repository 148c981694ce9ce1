"""Physical constants (CODATA 2018, exact by definition)."""

PLANCK_CONSTANT = 6.62607015e-34  # J s
SPEED_OF_LIGHT = 299792458.0  # m/s


def photon_energy(wavelength):
    """Photon energy h*c0/lambda in joules for a vacuum wavelength in meters."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    return PLANCK_CONSTANT * SPEED_OF_LIGHT / wavelength
