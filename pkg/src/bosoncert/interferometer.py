"""Mode unitaries: Haar draws, trapped-ion chain evolution, noise models.

The ion chain follows the usual harmonic-trap picture: equilibrium positions
minimise the axial potential, phonons hop between ions with amplitude
t_ij = t0 / |z_i - z_j|^3 where t0 = e^2 / (8 pi eps0 m omega_x), and the
site-basis evolution over time tau is U = exp(-i h tau).

All constructors return an Interferometer whose matrix is unitary to
1e-10 in max norm; anything that cannot guarantee that raises instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .seeds import stream

# CODATA exact / defined values
ELEMENTARY_CHARGE = 1.602176634e-19  # C
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
ATOMIC_MASS = 1.66053906660e-27  # kg

# species -> mass in atomic mass units (nominal isotope mass)
SPECIES_MASS_AMU = {
    "171Yb+": 171.0,
}

UNITARITY_TOL = 1e-10
_INPUT_UNITARITY_TOL = 1e-8
_HERMITICITY_TOL = 1e-12
_BRANCH_NUDGE = 1e-9


@dataclass(frozen=True, eq=False)
class Interferometer:
    """A linear-optical network: mode count, unitary matrix, origin tag."""

    m: int
    u: np.ndarray
    provenance: str

    def unitarity_residual(self) -> float:
        eye = np.eye(self.m)
        return float(np.abs(self.u.conj().T @ self.u - eye).max())


def _as_unitary(u: np.ndarray, provenance: str, tol: float = UNITARITY_TOL) -> Interferometer:
    u = np.ascontiguousarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"unitary must be square, got {u.shape}")
    out = Interferometer(m=u.shape[0], u=u, provenance=provenance)
    res = out.unitarity_residual()
    if res > tol:
        raise ValueError(f"matrix is not unitary (residual {res:.3e} > {tol:.1e})")
    return out


def haar_unitary(m: int, seed) -> Interferometer:
    """Haar-random unitary via QR of a complex Ginibre matrix.

    The R-diagonal phases are folded back into Q (q_k <- q_k * r_kk/|r_kk|)
    so the distribution is exactly Haar rather than QR-convention biased.
    """
    if m < 1:
        raise ValueError(f"need m >= 1 modes, got {m}")
    rng = seed if isinstance(seed, np.random.Generator) else stream(int(seed), 0, "haar")
    g = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2.0)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    label = f"haar(m={m}, seed={seed})" if not isinstance(seed, np.random.Generator) else f"haar(m={m})"
    return _as_unitary(q, label)


def equilibrium_positions(m: int, max_iter: int = 200, tol: float = 1e-12) -> np.ndarray:
    """Dimensionless equilibrium positions of m ions in a harmonic trap.

    Solves u_i = sum_{j<i} (u_i-u_j)^-2 - sum_{j>i} (u_i-u_j)^-2 by Newton
    iteration with the analytic Jacobian, starting from uniformly spaced
    ions at the 2.018/m^0.559 spacing ansatz.  Physical positions are these
    values times the length scale (e^2 / (4 pi eps0 M omega_z^2))^(1/3).
    """
    if m < 1:
        raise ValueError(f"need m >= 1 ions, got {m}")
    if m == 1:
        return np.zeros(1)
    spacing = 2.018 / m**0.559
    u = spacing * (np.arange(1, m + 1) - (m + 1) / 2.0)
    for _ in range(max_iter):
        diff = u[:, None] - u[None, :]
        np.fill_diagonal(diff, 1.0)  # masked by the zeroed diagonal below
        inv3 = 1.0 / np.abs(diff) ** 3
        np.fill_diagonal(inv3, 0.0)
        force = u - (diff * inv3).sum(axis=1)
        if np.abs(force).max() < tol:
            if np.any(np.diff(u) <= 0):
                raise RuntimeError("equilibrium positions collapsed out of order")
            return u
        jac = -2.0 * inv3
        np.fill_diagonal(jac, 1.0 + 2.0 * inv3.sum(axis=1))
        u = u - np.linalg.solve(jac, force)
    raise RuntimeError(f"ion equilibrium did not converge in {max_iter} Newton steps")


def ion_length_scale(omega_z: float, mass_kg: float) -> float:
    """Coulomb-vs-trap length (e^2 / (4 pi eps0 M omega_z^2))^(1/3), metres."""
    if omega_z <= 0 or mass_kg <= 0:
        raise ValueError("trap frequency and mass must be positive")
    return (
        ELEMENTARY_CHARGE**2 / (4.0 * np.pi * VACUUM_PERMITTIVITY * mass_kg * omega_z**2)
    ) ** (1.0 / 3.0)


def hopping_matrix(positions_m: np.ndarray, omega_x: float, mass_kg: float) -> np.ndarray:
    """Phonon hopping matrix in rad/s for ions at the given axial positions.

    Off-diagonal h_ij = t0 / |z_i - z_j|^3 with t0 = e^2/(8 pi eps0 M omega_x);
    the diagonal carries the site shifts h_ii = -sum_{j != i} h_ij, so every
    row sums to zero and the total phonon number is conserved.
    """
    z = np.asarray(positions_m, dtype=np.float64)
    if z.ndim != 1 or z.size < 1:
        raise ValueError("positions must be a nonempty 1-d array")
    if omega_x <= 0 or mass_kg <= 0:
        raise ValueError("trap frequency and mass must be positive")
    t0 = ELEMENTARY_CHARGE**2 / (8.0 * np.pi * VACUUM_PERMITTIVITY * mass_kg * omega_x)
    dz = z[:, None] - z[None, :]
    np.fill_diagonal(dz, np.inf)
    h = t0 / np.abs(dz) ** 3
    np.fill_diagonal(h, 0.0)
    np.fill_diagonal(h, -h.sum(axis=1))
    return h


@dataclass(frozen=True, eq=False)
class IonChain:
    """A linear chain of identical ions with its phonon hopping matrix."""

    m: int
    omega_z: float
    omega_x: float
    mass_kg: float
    species: str
    positions: np.ndarray  # metres
    hopping: np.ndarray  # rad/s

    @property
    def label(self) -> str:
        return (
            f"ion(m={self.m}, species={self.species}, omega_z={self.omega_z!r},"
            f" omega_x={self.omega_x!r})"
        )


def ion_chain(
    m: int,
    omega_z: float,
    omega_x: float,
    species: str = "171Yb+",
    mass_amu: float | None = None,
) -> IonChain:
    """Build the chain for m ions: equilibrium positions plus hopping matrix.

    omega_z and omega_x are angular frequencies in rad/s.  The species sets
    the mass unless mass_amu overrides it.
    """
    if mass_amu is None:
        if species not in SPECIES_MASS_AMU:
            raise ValueError(
                f"unknown species {species!r}; pass mass_amu or one of {sorted(SPECIES_MASS_AMU)}"
            )
        mass_amu = SPECIES_MASS_AMU[species]
    mass_kg = float(mass_amu) * ATOMIC_MASS
    u = equilibrium_positions(m)
    z = u * ion_length_scale(omega_z, mass_kg)
    h = hopping_matrix(z, omega_x, mass_kg)
    return IonChain(
        m=m,
        omega_z=float(omega_z),
        omega_x=float(omega_x),
        mass_kg=mass_kg,
        species=species,
        positions=z,
        hopping=h,
    )


def _check_hermitian(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"generator must be square, got {h.shape}")
    scale = max(1.0, float(np.abs(h).max()))
    res = float(np.abs(h - h.conj().T).max())
    if res > _HERMITICITY_TOL * scale:
        raise ValueError(f"generator is not Hermitian (residual {res:.3e})")
    return h


def evolve(h: np.ndarray, tau: float, label: str = "evolve") -> Interferometer:
    """Mode unitary exp(-i h tau) of a Hermitian generator, via eigh.

    h is in rad/s and tau in seconds (any consistent inverse pair works).
    """
    h = _check_hermitian(h)
    if tau < 0:
        raise ValueError(f"negative evolution time tau={tau}")
    w, v = np.linalg.eigh(h)
    u = (v * np.exp(-1j * w * tau)) @ v.conj().T
    return _as_unitary(u, f"{label}, tau={tau!r}")


def perturb_timing(h: np.ndarray, tau: float, epsilon: float, label: str = "evolve") -> Interferometer:
    """Evolution with a relative timing error: exp(-i h tau (1 + epsilon)).

    Equivalent to scaling the hopping matrix by (1 + epsilon).  A perturbed
    time below zero is rejected.
    """
    tau_eff = tau * (1.0 + epsilon)
    if tau_eff < 0:
        raise ValueError(f"perturbed time tau(1+eps) = {tau_eff} is negative")
    return evolve(h, tau_eff, label=f"noisy(model=timing, strength={epsilon!r}, base={label}")


def hermitian_log(u_in) -> np.ndarray:
    """Hermitian H with exp(-i H) = U, principal eigenphase branch.

    Eigenphases within 1e-9 of -pi are nudged up by 1e-9 so the branch cut
    cannot flip under the noise applied by perturb_hamiltonian.
    """
    interf = u_in if isinstance(u_in, Interferometer) else _as_unitary(
        np.asarray(u_in), "adhoc", tol=_INPUT_UNITARITY_TOL
    )
    if interf.unitarity_residual() > _INPUT_UNITARITY_TOL:
        raise ValueError("cannot take the Hermitian log of a non-unitary matrix")
    lam, vec = np.linalg.eig(interf.u)
    theta = np.angle(lam / np.abs(lam))
    theta = np.where(theta < -np.pi + _BRANCH_NUDGE, theta + _BRANCH_NUDGE, theta)
    # exp(-i H) = U  <=>  H has eigenvalues -theta in U's eigenbasis
    h = (vec * (-theta)) @ np.linalg.inv(vec)
    return 0.5 * (h + h.conj().T)


def perturb_hamiltonian(
    base: Interferometer,
    eta: float,
    seed,
    law: str = "gaussian",
) -> Interferometer:
    """Multiplicative noise on the Hermitian generator of a unitary.

    H = hermitian_log(U); each independent entry (upper triangle including
    the diagonal) is scaled to H_ij (1 + eta xi) with xi drawn per real and
    imaginary part, then mirrored to keep H' Hermitian; the result is
    exp(-i H').  eta = 0 reproduces U up to roundoff.  law picks the xi
    distribution: standard normal, or uniform on [-1, 1].
    """
    if eta < 0:
        raise ValueError(f"noise strength eta={eta} must be nonnegative")
    rng = seed if isinstance(seed, np.random.Generator) else stream(int(seed), 0, "hamiltonian-noise")
    h = hermitian_log(base)
    m = h.shape[0]
    if law == "gaussian":
        xr = rng.standard_normal((m, m))
        xi = rng.standard_normal((m, m))
    elif law == "uniform":
        xr = rng.uniform(-1.0, 1.0, (m, m))
        xi = rng.uniform(-1.0, 1.0, (m, m))
    else:
        raise ValueError(f"unknown noise law {law!r}")
    pert_re = h.real * (1.0 + eta * xr)
    pert_im = h.imag * (1.0 + eta * xi)
    upper = np.triu(pert_re) + 1j * np.triu(pert_im, 1)
    hp = upper + np.triu(upper, 1).conj().T
    w, v = np.linalg.eigh(hp)
    u = (v * np.exp(-1j * w)) @ v.conj().T
    return _as_unitary(
        u, f"noisy(model=hamiltonian, strength={eta!r}, law={law}, base={base.provenance})"
    )


def _phase_mixed_unitary(h: np.ndarray, phases: np.ndarray) -> np.ndarray:
    """V diag(e^{i phases}) V† in the eigenbasis V of the generator h."""
    h = _check_hermitian(h)
    _, v = np.linalg.eigh(h)
    return (v * np.exp(1j * np.asarray(phases, dtype=np.float64))) @ v.conj().T


def random_phase_unitary(h: np.ndarray, seed) -> Interferometer:
    """Fully dephased evolution: random phases on the eigenmodes of h.

    Commutes with h and models evolution for a large unknown time.
    """
    rng = seed if isinstance(seed, np.random.Generator) else stream(int(seed), 0, "phase-noise")
    h = _check_hermitian(h)
    phases = rng.uniform(0.0, 2.0 * np.pi, h.shape[0])
    return _as_unitary(_phase_mixed_unitary(h, phases), f"random-phase(m={h.shape[0]})")


def save_interferometer(path, interf: Interferometer) -> None:
    """Write the unitary as JSON; floats survive the round trip bit-exactly."""
    payload = {
        "m": interf.m,
        "provenance": interf.provenance,
        "re": [[float(x) for x in row] for row in interf.u.real],
        "im": [[float(x) for x in row] for row in interf.u.imag],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_interferometer(path) -> Interferometer:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    try:
        m = int(payload["m"])
        re = np.array(payload["re"], dtype=np.float64)
        im = np.array(payload["im"], dtype=np.float64)
        provenance = str(payload["provenance"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed interferometer file {path}: {exc}") from None
    if re.shape != (m, m) or im.shape != (m, m):
        raise ValueError(f"interferometer file {path} has shape {re.shape}, expected ({m}, {m})")
    return _as_unitary(re + 1j * im, provenance, tol=_INPUT_UNITARITY_TOL)
