"""Kibble-Zurek ramps of temperature and parameter in open quadratic chains."""
from .bath import (BathParams, bose_einstein, fermi_dirac, jump_rates,
                   relaxation_rate, thermal_occupation)
from .model import (DegeneratePointError, KitaevParams, ModelSpec,
                    bogoliubov_angle, bogoliubov_angle_rate, dispersion, gap,
                    kitaev, local_angle, local_dispersion, local_dos)
from .protocol import (RampClass, RampSpec, SchemeParams, classify,
                       predicted_exponent, ramp_velocities, ramp_values,
                       rescale_parameters, scheme_params)

__version__ = "0.1.0"
