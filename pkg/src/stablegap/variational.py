"""Ground-state-transformed Dirichlet form and the variational gap characterisation.

With phi the discrete ground state and f a cell vector, the conditioned form

    Q(f) = 1/2 sum_{i != j} w_ij phi_i phi_j (f_i - f_j)^2

satisfies Q(f) = E_h(f phi) - lambda_1 ||f phi||^2 exactly, so that the gap
is the minimum of Q over f with sum f phi^2 m = 0 and sum f^2 phi^2 m = 1,
attained at f = phi_2 / phi_1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CenteringError

ADMISSIBLE_TOL = 1e-10
CONSTANT_TOL = 1e-20  # centred norm^2 relative to the raw norm^2


def conditioned_form(form, spectrum, f):
    """Q(f), summed pairwise so that constant f gives exactly zero."""
    f = np.asarray(f, dtype=float)
    phi = spectrum.phi1
    total = 0.0
    for rows in form._row_blocks():
        diff = f[rows, None] - f[None, :]
        total += np.sum(form.weights(rows) * (phi[rows, None] * phi[None, :]) * diff * diff)
    return 0.5 * float(total)


def conditioned_forms(form, spectrum, F):
    """Q for every column of F via Q(f) = sum_i f_i^2 phi_i (W phi)_i - (f phi)^T W (f phi)."""
    F = np.asarray(F, dtype=float)
    phi = spectrum.phi1
    G = F * phi[:, None]
    deg = form.degree()
    # W g = deg * g - (K g - kappa m g)
    kappa_m = form.kappa * form.mass
    WG = deg[:, None] * G - (form.apply_stiffness(G) - kappa_m[:, None] * G)
    Wphi = deg * phi - (form.apply_stiffness(phi) - kappa_m * phi)
    return np.einsum("ij,i->j", F * F, phi * Wphi) - np.einsum("ij,ij->j", G, WG)


def transformed_energy(form, spectrum, f):
    """E_h(f phi) - lambda_1 <f phi, f phi>_mass, the other side of the identity."""
    g = np.asarray(f, dtype=float) * spectrum.phi1
    return form.energy(g) - spectrum.values[0] * form.inner(g, g)


@dataclass(eq=False)
class WeightedTestFunction:
    """Cell vector f measured against the weight phi_1^2 dx."""

    f: np.ndarray
    spectrum: object

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)

    @property
    def _w(self):
        return self.spectrum.phi1**2 * self.spectrum.mass

    def mean(self):
        return float(self.f @ self._w)

    def norm2(self):
        return float((self.f * self.f) @ self._w)

    def is_admissible(self, tol=ADMISSIBLE_TOL):
        return abs(self.mean()) <= tol and abs(self.norm2() - 1.0) <= tol

    def centered(self):
        return WeightedTestFunction(self.f - self.mean() / float(np.sum(self._w)), self.spectrum)

    def is_constant(self):
        return self.centered().norm2() <= CONSTANT_TOL * self.norm2()

    def admissible(self):
        """Centered and normalised copy."""
        if self.is_constant():
            raise CenteringError("test function is constant; it cannot be normalised")
        c = self.centered()
        return WeightedTestFunction(c.f / np.sqrt(c.norm2()), self.spectrum)


def trial_upper_bound(form, spectrum, f):
    """Rayleigh quotient Q(f_c) / int f_c^2 phi^2 after centering f; always >= the gap."""
    g = WeightedTestFunction(f, spectrum)
    if g.is_constant():
        raise CenteringError("test function is constant")
    c = g.centered()
    n2 = c.norm2()
    return conditioned_form(form, spectrum, c.f) / n2


def random_trials(grid, n, rng, modes=4):
    """Random trial functions mixing white noise with low-frequency trigonometric fields."""
    x = grid.centers
    scale = np.abs(x).max(axis=0) + grid.h
    out = rng.standard_normal((grid.n, n))
    smooth = np.zeros_like(out)
    for _ in range(modes):
        k = rng.uniform(0, np.pi, size=(2, n)) / scale[:, None]
        ph = rng.uniform(0, 2 * np.pi, size=n)
        smooth += rng.standard_normal(n) * np.cos(x @ k + ph)
    mix = rng.uniform(0, 1, size=n)
    return mix * out + (1 - mix) * smooth


@dataclass
class VariationalReport:
    gap: float
    identity_value: float
    identity_error: float  # relative
    trials: int
    min_trial: float
    worst_deficit: float  # max(gap - Q(f)) over admissible trials
    coordinate_bounds: dict = field(default_factory=dict)

    def passed(self, identity_tol=1e-8, deficit_tol=1e-10):
        return self.identity_error < identity_tol and self.worst_deficit <= deficit_tol

    def to_dict(self):
        return {k: (float(v) if isinstance(v, (float, np.floating)) else v)
                for k, v in self.__dict__.items()}


def verify_variational(form, spectrum, n_random=100, seed=0):
    gap = spectrum.gap
    ratio = spectrum.phi2 / spectrum.phi1
    ident = conditioned_form(form, spectrum, ratio)
    rng = np.random.default_rng(seed)
    raw = random_trials(form.grid, n_random, rng)
    w = spectrum.phi1**2 * spectrum.mass
    raw -= (w @ raw) / w.sum()
    raw /= np.sqrt(w @ (raw * raw))
    values = conditioned_forms(form, spectrum, raw) if n_random else np.array([np.inf])
    x = form.grid.centers
    coord = {
        "x1": trial_upper_bound(form, spectrum, x[:, 0]),
        "x2": trial_upper_bound(form, spectrum, x[:, 1]),
    }
    return VariationalReport(
        gap=gap,
        identity_value=ident,
        identity_error=abs(ident - gap) / abs(gap),
        trials=n_random,
        min_trial=float(values.min()),
        worst_deficit=float(gap - min(values.min(), *coord.values())),
        coordinate_bounds=coord,
    )
