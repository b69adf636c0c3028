"""Sign and coordinate conventions shared by every module.

* The half-space is ``x_{n+1} > 0``; ``e = (0, ..., 0, -1)`` points out of it.
* ``nu`` is the outward unit normal of the hypersurface.
* ``H`` is the trace of the Weingarten map (sum of principal curvatures), so a
  sphere of radius ``r`` has ``H = n / r``.
* Points of the closed upper half-sphere are written ``X(beta, xi)``, with the
  polar angle ``beta`` in ``[0, pi/2]`` measured from the ``x_{n+1}`` axis and
  ``xi`` the azimuth (only used for ``n = 2`` full grids).
* A star-shaped surface is the radial graph ``rho(X) X`` and the state variable
  is ``phi = log(rho)``.
* The contact angle ``theta`` is in radians internally. Configuration files
  and the command line use degrees; conversion happens at that boundary only.
"""
import math

import numpy as np

#: Default admissible contact-angle margin from 0 and pi.
THETA_MIN_DEFAULT = math.radians(5.0)


def sphere_measure(k):
    """Surface measure ``|S^k|`` of the unit ``k``-sphere."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


def ball_volume(k):
    """Volume of the unit ``k``-ball."""
    return math.pi ** (k / 2.0) / math.gamma(k / 2.0 + 1.0)


def embed(rho, beta, xi=None):
    """Cartesian points ``rho * X`` for ``n = 2`` (returns an ``(..., 3)`` array)."""
    rho = np.asarray(rho, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if xi is None:
        xi = np.zeros_like(beta)
    xi = np.asarray(xi, dtype=float)
    s = np.sin(beta)
    return np.stack([rho * s * np.cos(xi), rho * s * np.sin(xi), rho * np.cos(beta)], axis=-1)
