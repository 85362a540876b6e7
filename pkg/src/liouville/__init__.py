"""Numerical toolkit for curvature-one conformal metrics e^{2u}|dz|^2 on the plane (-Δu = e^{2u})."""

__version__ = "0.1.0"

from .developing import (DevelopingMap, ExpFamily, Mobius, OdeQuotient, local_univalence_check, rotate, schwarzian,
                         spherical_derivative)
from .errors import (ConservationViolation, DerivativeBreakdown, FitDegenerate, IntegrationFailure, LiouvilleError,
                     QuadratureNonConvergence, SnapAmbiguous, StepUnderflow, UnivalenceViolation, WindowTooSmall,
                     WronskianDrift)
from .metric import (ConformalGrid, Curve, DiameterSettings, curve_length, diameter_estimate, distances_from,
                     geodesic_distance, nevanlinna_A, nevanlinna_T)
from .ode import fit_asymptotics, integrate_ray, quotient_field, stokes_directions, stokes_growth, subdominance_check
from .polynomial import PolynomialP
from .rays import IntegratorSettings
from .solution import (Constant, FromMap, OneDim, Radial, SolutionField, TFamily, Transform, classify_growth,
                       concavity_report, decay_check, make_solution, one_dim_check, pde_residual)
from .sphere import INFINITY, ComplexPoint, MobiusMap, SphereRotation, spherical_distance, stereographic_lift
