from app.integrate.integrator import IntegratorConfig, Trajectory, integrate
from app.integrate.poincare import map_jacobian_fd, period_map, poincare_map
