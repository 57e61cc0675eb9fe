"""Channel synthesis for one Monte-Carlo user drop.

The UE-BS (``H_d``, M x K) and UE-RIS (``H_ru``, N x K) channels are a LOS
steering vector plus a sum of clustered scattered rays. The RIS-BS channel
(``H_br``, M x N) is either a pure LOS outer product or a dominant LOS path
with narrow-spread scattering. All randomness comes from an explicit
``numpy.random.Generator``.

Phase vectors ``x`` hold the *conjugated* RIS coefficients ``exp(-j phi)``;
``assemble_global`` undoes the conjugation.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import is_pure_los
from .errors import DomainError, ValidationError

DEG = np.pi / 180.0

# H_br LOS geometry: departure elevation range and azimuth half-width, degrees.
BR_DEPARTURE_EL = (70.0, 90.0)
BR_AZ_HALFWIDTH = 30.0


def los_weights(kappa):
    """``(eta, zeta)`` amplitude split for a K-factor; exact for pure LOS."""
    if is_pure_los(kappa):
        return 1.0, 0.0
    return np.sqrt(kappa / (1.0 + kappa)), np.sqrt(1.0 / (1.0 + kappa))


def steering_matrix(geom, theta, phi):
    """Steering vectors for many directions at once.

    Parameters
    ----------
    geom : ArrayGeometry
    theta, phi : array_like
        Elevation (from the z axis) and azimuth in radians, same shape.

    Returns
    -------
    ndarray, (geom.size, L)
        Column ``l`` is ``a_y(theta_l, phi_l) kron a_z(theta_l)``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
    phi = np.atleast_1d(np.asarray(phi, dtype=float)).ravel()
    k = 2.0 * np.pi * geom.spacing
    ay = np.exp(1j * k * np.arange(geom.n_y)[:, None] * (np.sin(theta) * np.sin(phi))[None, :])
    az = np.exp(1j * k * np.arange(geom.n_z)[:, None] * np.cos(theta)[None, :])
    return (ay[:, None, :] * az[None, :, :]).reshape(geom.size, theta.size)


def steering_vector(geom, theta, phi):
    """Unit-modulus array response; the first entry is exactly 1."""
    return steering_matrix(geom, theta, phi)[:, 0]


@dataclass(frozen=True)
class UserDrop:
    """Geometry of one drop. Distances in metres, angles in radians.

    Per-user arrays have length K. ``br_*`` are the RIS-BS LOS angles:
    arrival at the BS (``theta_a``, ``phi_a``) and departure from the RIS
    (``theta_dep``, ``phi_dep``).
    """

    d_d: np.ndarray
    d_ru: np.ndarray
    theta_d: np.ndarray
    phi_d: np.ndarray
    theta_ru: np.ndarray
    phi_ru: np.ndarray
    d_br: float
    br_theta_a: float
    br_phi_a: float
    br_theta_dep: float
    br_phi_dep: float
    positions: np.ndarray = None


def _place_user(rng, r_min, r_max, ris_xy):
    # uniform over the annulus around the BS, rejecting the disc around the RIS
    while True:
        r = np.sqrt(rng.uniform(r_min ** 2, r_max ** 2))
        ang = rng.uniform(0.0, 2.0 * np.pi)
        p = np.array([r * np.cos(ang), r * np.sin(ang)])
        if np.hypot(*(p - ris_xy)) >= r_min:
            return p


def draw_user_drop(rng, config):
    """Draw user positions and all LOS angles for one drop.

    The BS sits at the origin and the RIS at ``(ris_distance, 0)``. Users are
    uniform over the cell area outside the exclusion radius of both.
    """
    k = config.users
    ris_xy = np.array([config.ris_distance, 0.0])
    pos = np.array([_place_user(rng, config.exclusion_radius, config.cell_radius, ris_xy)
                    for _ in range(k)])
    d_d = np.hypot(pos[:, 0], pos[:, 1])
    d_ru = np.hypot(pos[:, 0] - ris_xy[0], pos[:, 1] - ris_xy[1])
    theta_d = rng.uniform(0.0, np.pi, k)
    phi_d = rng.uniform(-np.pi / 2, np.pi / 2, k)
    theta_ru = rng.uniform(0.0, np.pi, k)
    phi_ru = rng.uniform(-np.pi / 2, np.pi / 2, k)
    theta_dep = rng.uniform(*BR_DEPARTURE_EL) * DEG
    phi_dep = rng.uniform(-BR_AZ_HALFWIDTH, BR_AZ_HALFWIDTH) * DEG
    phi_a = rng.uniform(-BR_AZ_HALFWIDTH, BR_AZ_HALFWIDTH) * DEG
    return UserDrop(
        d_d=d_d, d_ru=d_ru,
        theta_d=theta_d, phi_d=phi_d, theta_ru=theta_ru, phi_ru=phi_ru,
        d_br=float(config.ris_distance),
        br_theta_a=np.pi - theta_dep, br_phi_a=phi_a,
        br_theta_dep=theta_dep, br_phi_dep=phi_dep,
        positions=pos,
    )


def link_gain(params, d, rng=None):
    """Linear power gain ``P * X * d**(-gamma)`` with log-normal shadowing ``X``.

    ``d`` may be a scalar or an array. No random numbers are drawn when the
    shadowing std is zero.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise DomainError("distance must be > 0")
    gain = 10.0 ** (params.reference_power_db / 10.0) * d ** (-params.pathloss_exponent)
    if params.shadow_std_db > 0:
        gain = gain * 10.0 ** (rng.normal(0.0, params.shadow_std_db, d.shape) / 10.0)
    return gain if gain.ndim else float(gain)


def draw_ray_angles(rng, ray, count, diagnostics=None):
    """Sample ``(theta, phi)`` of shape ``(count, C, S)`` in radians.

    Central azimuths are Gaussian, everything else Laplacian. Elevations are
    clamped to ``[0, pi]``; the number of clamped rays is added to
    ``diagnostics['elevation_clamps']``.
    """
    c, s = ray.clusters, ray.subrays
    phi_c = rng.normal(ray.central_az_mean, ray.central_az_std, (count, c, 1))
    phi = phi_c + rng.laplace(0.0, ray.subray_az_std, (count, c, s))
    theta_c = ray.central_el_mean + rng.laplace(0.0, ray.central_el_scale, (count, c, 1))
    theta = theta_c + rng.laplace(0.0, ray.subray_el_scale, (count, c, s))
    theta *= DEG
    phi *= DEG
    clamped = np.count_nonzero((theta < 0) | (theta > np.pi))
    if diagnostics is not None:
        diagnostics["elevation_clamps"] = diagnostics.get("elevation_clamps", 0) + clamped
    return np.clip(theta, 0.0, np.pi), phi


def equal_ray_powers(total, clusters, subrays):
    """Split ``total`` power equally over all ``clusters * subrays`` rays."""
    return np.full((clusters, subrays), total / (clusters * subrays))


def _ray_sum(rng, geom, theta, phi, powers):
    # sum_{c,s} sqrt(beta) e^{j psi} a(theta, phi) for one column
    psi = rng.uniform(0.0, 2.0 * np.pi, powers.shape)
    coeff = np.sqrt(powers) * np.exp(1j * psi)
    return steering_matrix(geom, theta, phi) @ coeff.ravel()


def synth_ray_channel(rng, geom, ray, gains, los_theta, los_phi, kappa,
                      ray_powers=equal_ray_powers, diagnostics=None):
    """Clustered-ray channel with one column per user.

    Column ``k`` is ``eta sqrt(B_k) a(los_k) + zeta sum_{c,s} gamma_cs a(ray_cs)``
    with ray powers summing to ``B_k``.
    """
    gains = np.atleast_1d(np.asarray(gains, dtype=float))
    los_theta = np.atleast_1d(los_theta)
    los_phi = np.atleast_1d(los_phi)
    k = gains.size
    if not kappa >= 0:
        raise ValidationError("kappa must be >= 0")
    eta, zeta = los_weights(kappa)
    h = np.zeros((geom.size, k), dtype=complex)
    if eta > 0:
        h += eta * np.sqrt(gains)[None, :] * steering_matrix(geom, los_theta, los_phi)
    if zeta > 0:
        theta, phi = draw_ray_angles(rng, ray, k, diagnostics)
        for j in range(k):
            powers = ray_powers(gains[j], ray.clusters, ray.subrays)
            h[:, j] += zeta * _ray_sum(rng, geom, theta[j], phi[j], powers)
    return h


def synth_hbr(rng, bs, ris, drop, ray, kappa_br, ray_powers=equal_ray_powers,
              diagnostics=None):
    """RIS-BS channel (M x N).

    Pure LOS: ``sqrt(beta) a_b a_r^H`` with ``beta = d_br**-2``. Dominant LOS:
    ``beta = d_br**-2 / eta**2`` and a scattered part whose ray powers sum to
    ``beta``, each ray an outer product of arrival and departure responses.
    """
    if not kappa_br > 0:
        raise ValidationError("kappa_br must be > 0 or pure LOS")
    a_b = steering_vector(bs, drop.br_theta_a, drop.br_phi_a)
    a_r = steering_vector(ris, drop.br_theta_dep, drop.br_phi_dep)
    base = drop.d_br ** -2.0
    if is_pure_los(kappa_br):
        return np.sqrt(base) * np.outer(a_b, a_r.conj())
    eta, zeta = los_weights(kappa_br)
    beta = base / eta ** 2
    h = eta * np.sqrt(beta) * np.outer(a_b, a_r.conj())
    th_a, ph_a = draw_ray_angles(rng, ray, 1, diagnostics)
    th_d, ph_d = draw_ray_angles(rng, ray, 1, diagnostics)
    powers = ray_powers(beta, ray.clusters, ray.subrays).ravel()
    psi = rng.uniform(0.0, 2.0 * np.pi, powers.size)
    arr = steering_matrix(bs, th_a, ph_a)
    dep = steering_matrix(ris, th_d, ph_d)
    coeff = np.sqrt(powers) * np.exp(1j * psi)
    h += zeta * (arr * coeff[None, :]) @ dep.conj().T
    return h


@dataclass(frozen=True)
class ChannelSet:
    h_d: np.ndarray
    h_ru: np.ndarray
    h_br: np.ndarray
    drop: UserDrop = None
    kappa_d: float = None
    kappa_ru: float = None
    kappa_br: float = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def shape(self):
        """``(M, N, K)``."""
        return self.h_d.shape[0], self.h_ru.shape[0], self.h_d.shape[1]

    @property
    def pure_los(self):
        return self.kappa_br is not None and is_pure_los(self.kappa_br)


def synth_channels(rng, config):
    """One full drop: geometry, path gains and the three channel matrices."""
    diag = {}
    drop = draw_user_drop(rng, config)
    b_d = link_gain(config.gain_d, drop.d_d, rng)
    b_ru = link_gain(config.gain_ru, drop.d_ru, rng)
    h_d = synth_ray_channel(rng, config.bs, config.rays_ue, b_d, drop.theta_d, drop.phi_d,
                            config.kappa_d, diagnostics=diag)
    h_ru = synth_ray_channel(rng, config.ris, config.rays_ue, b_ru, drop.theta_ru, drop.phi_ru,
                             config.kappa_ru, diagnostics=diag)
    h_br = synth_hbr(rng, config.bs, config.ris, drop, config.rays_br, config.kappa_br,
                     diagnostics=diag)
    diag["b_d"] = b_d
    diag["b_ru"] = b_ru
    return ChannelSet(h_d, h_ru, h_br, drop, config.kappa_d, config.kappa_ru,
                      config.kappa_br, diag)


def assemble_global(ch, x):
    """Global uplink channel ``H_d + H_br diag(conj(x)) H_ru``."""
    x = np.asarray(x, dtype=complex)
    m, n, k = ch.shape
    if ch.h_br.shape != (m, n) or ch.h_ru.shape[1] != k or x.shape != (n,):
        raise ValidationError(
            f"dimension mismatch: H_d {ch.h_d.shape}, H_ru {ch.h_ru.shape}, "
            f"H_br {ch.h_br.shape}, x {x.shape}")
    return ch.h_d + (ch.h_br * np.conj(x)[None, :]) @ ch.h_ru
