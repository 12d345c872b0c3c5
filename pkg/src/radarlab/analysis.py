"""First-order covariance of the reference-based estimator.

The covariance of the (tau, omega) or (x, y, vx, vy) estimate is

    CRB + H^-1 Q H^-1,   CRB = sigma_e^2 H^-1,
    H = 2 sum_k |d_k|^2 Re{D_k^H Pt_k D_k},
    Q = 2 sigma_n^2 sum_k |d_k|^2/|a_k|^2 Re{D_k^H Pt_k Z_k J_k J_k^T Z_k^H Pt_k D_k},

where D_k stacks steering-vector derivatives, Pt_k projects onto the
complement of [S_I, a] and Z_k J_k maps reference-waveform errors to the
resulting interference and steering perturbations in the surveillance data.
All N x N and N x N(L+1) objects are applied matrix-free; dense forms exist
for small-N checks only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import ConfigError, IdentifiabilityError, TargetInClutterSpanError
from .estimator import STEERING_EPS, ReferenceInterpolator
from .signal_core import InterferenceBasis, IoWaveform, clutter_basis, doppler_vector, steering
from .synth import NodeScenario

VARIANTS = ("verbatim", "shifted")


def noise_free_basis(w: IoWaveform, L: int) -> InterferenceBasis:
    """S_I = [s, S] built from exact waveform samples at n = -L..N-1."""
    N = w.spec.n_samples
    return clutter_basis(w.samples(-L, N - 1), N, L)


@dataclass(frozen=True)
class ProjectorTilde:
    """Projector onto the complement of span([S_I, a]), i.e. Pi_perp - P.

    Stored in operator form: ``Q`` is an orthonormal basis of span(S_I)
    and ``u`` the unit vector along Pi_perp a.
    """

    Q: np.ndarray
    u: np.ndarray

    def apply(self, v: np.ndarray) -> np.ndarray:
        Q, u = self.Q, self.u
        w = v - Q @ (Q.conj().T @ v)
        if w.ndim == 1:
            return w - u * np.vdot(u, w)
        return w - np.outer(u, u.conj() @ w)

    @property
    def matrix(self) -> np.ndarray:
        return self.apply(np.eye(self.Q.shape[0], dtype=complex))


def projector_tilde(basis: InterferenceBasis, a: np.ndarray) -> ProjectorTilde:
    Q, _ = np.linalg.qr(basis.matrix)
    pa = a - Q @ (Q.conj().T @ a)
    nn = np.vdot(pa, pa).real
    if nn <= STEERING_EPS * np.vdot(a, a).real:
        raise TargetInClutterSpanError(
            "noise-free steering vector lies in the interference span", value=float(np.sqrt(nn))
        )
    return ProjectorTilde(Q, pa / np.sqrt(nn))


@dataclass(frozen=True)
class SelectionJ:
    """Index table realising vec(S_I) = J s_I, s_I covering n = -L..N-1."""

    mapping: np.ndarray
    n_samples: int
    n_clutter_taps: int

    def apply(self, s_I: np.ndarray) -> np.ndarray:
        return np.asarray(s_I)[self.mapping]

    def apply_transpose(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n_samples + self.n_clutter_taps, dtype=np.result_type(v, complex))
        np.add.at(out, self.mapping, v)
        return out

    @property
    def matrix(self) -> np.ndarray:
        J = np.zeros((self.mapping.size, self.n_samples + self.n_clutter_taps))
        J[np.arange(self.mapping.size), self.mapping] = 1.0
        return J


def selection_J(N: int, L: int) -> SelectionJ:
    n = np.arange(N)
    # column l of S_I holds s(t_{n-l}), stored at position (n - l) + L of s_I
    mapping = np.concatenate([n - l + L for l in range(L + 1)])
    return SelectionJ(mapping, N, L)


@dataclass(frozen=True)
class ZMatrix:
    """Z = [b I + d diag(v(omega)),  c^T kron I] in structured form."""

    dpi_diag: np.ndarray
    c: np.ndarray

    @classmethod
    def from_scenario(cls, sc: NodeScenario) -> "ZMatrix":
        spec = sc.waveform_spec
        v = doppler_vector(sc.target.omega, spec.n_samples, spec.dt)
        return cls(sc.b + sc.d * v, sc.c)

    @property
    def n_samples(self) -> int:
        return self.dpi_diag.size

    def apply(self, vec_s: np.ndarray) -> np.ndarray:
        N = self.n_samples
        blocks = np.asarray(vec_s).reshape(self.c.size + 1, N)
        return self.dpi_diag * blocks[0] + self.c @ blocks[1:]

    @property
    def matrix(self) -> np.ndarray:
        N = self.n_samples
        return np.hstack([np.diag(self.dpi_diag), np.kron(self.c[None, :], np.eye(N))])


class ZJOperator:
    """Matrix-free Z J: reference-waveform error -> surveillance-domain perturbation.

    ``verbatim`` uses the mapping exactly as written (the target term acts on
    the undelayed error samples, domain n = -L..N-1). ``shifted`` delays the
    target-term error by tau through the same interpolator the estimator
    uses (domain n = -M..N-1).
    """

    def __init__(self, sc: NodeScenario, variant: str = "verbatim"):
        if variant not in VARIANTS:
            raise ConfigError(f"unknown Z/J variant {variant!r}; expected one of {VARIANTS}")
        spec = sc.waveform_spec
        self.variant = variant
        self.N = spec.n_samples
        self.L = sc.n_clutter_taps
        self.c = sc.c
        self.b, self.d = sc.b, sc.d
        self.v = doppler_vector(sc.target.omega, self.N, spec.dt)
        self.tau = sc.target.tau
        if variant == "verbatim":
            self.offset = self.L
            self.dpi = self.b + self.d * self.v
        else:
            self.offset = spec.max_delay_samples
            self.dpi = np.full(self.N, complex(self.b))
            self._interp = ReferenceInterpolator(
                np.zeros(spec.period_samples, dtype=complex), self.N, spec.dt
            )
        self.domain = self.N + self.offset

    def matvec(self, delta: np.ndarray) -> np.ndarray:
        N, o = self.N, self.offset
        out = self.dpi * delta[o : o + N]
        for l, cl in enumerate(self.c, start=1):
            out = out + cl * delta[o - l : o - l + N]
        if self.variant == "shifted":
            out = out + self.d * self.v * self._interp.apply_delay(delta, self.tau)
        return out

    def rmatvec(self, g: np.ndarray) -> np.ndarray:
        N, o = self.N, self.offset
        out = np.zeros(self.domain, dtype=complex)
        out[o : o + N] += self.dpi.conj() * g
        for l, cl in enumerate(self.c, start=1):
            out[o - l : o - l + N] += np.conj(cl) * g
        if self.variant == "shifted":
            out += self._interp.apply_delay_adjoint(np.conj(self.d * self.v) * g, self.tau)
        return out

    @property
    def matrix(self) -> np.ndarray:
        return np.column_stack([self.matvec(e) for e in np.eye(self.domain, dtype=complex)])

    def spectral_norm2(self, tol: float = 1e-8) -> float:
        """Largest squared singular value via Lanczos on (ZJ)(ZJ)^H."""
        N = self.N
        if self.L == 0 and self.variant == "verbatim":
            return float(np.max(np.abs(self.dpi)) ** 2)
        if N <= 64:
            G = np.column_stack([self.matvec(self.rmatvec(e)) for e in np.eye(N, dtype=complex)])
            return float(np.linalg.eigvalsh(G).max())
        op = LinearOperator((N, N), matvec=lambda x: self.matvec(self.rmatvec(np.ravel(x))), dtype=complex)
        v0 = np.random.default_rng(0).standard_normal(N) + 0j
        return float(eigsh(op, k=1, which="LA", tol=tol, v0=v0, return_eigenvectors=False)[0])


@dataclass(frozen=True)
class AnalysisNode:
    """Noise-free description of one node for the covariance computation.

    ``jacobian`` (2 x 4) switches the node to global (x, y, vx, vy) mode.
    """

    waveform: IoWaveform
    scenario: NodeScenario
    jacobian: np.ndarray | None = None

    @property
    def n_params(self) -> int:
        return 2 if self.jacobian is None else 4


def build_D(w: IoWaveform, tau: float, omega: float, jacobian: np.ndarray | None = None) -> np.ndarray:
    """Derivatives of a(tau, omega): [da/dtau, da/domega], chain-ruled when a Jacobian is given."""
    ctx = steering(w, tau, omega)
    D = np.column_stack([ctx.d_tau, ctx.d_omega])
    if jacobian is not None:
        D = D @ np.asarray(jacobian, dtype=float)
    return D


class _NodeTerms:
    """Cached per-node quantities P~ D and Z J."""

    def __init__(self, node: AnalysisNode, variant: str = "verbatim"):
        sc = node.scenario
        w = node.waveform
        self.sc = sc
        tau, omega = sc.target.tau, sc.target.omega
        self.D = build_D(w, tau, omega, node.jacobian)
        a = steering(w, tau, omega).values
        self.ptilde = projector_tilde(noise_free_basis(w, sc.n_clutter_taps), a)
        self.PD = self.ptilde.apply(self.D)
        self.zj = ZJOperator(sc, variant)

    def h_term(self) -> np.ndarray:
        return 2.0 * abs(self.sc.d) ** 2 * np.real(self.D.conj().T @ self.PD)

    def q_term(self) -> np.ndarray:
        sc = self.sc
        if sc.a == 0:
            raise ConfigError("reference amplitude a must be non-zero")
        W = np.column_stack([self.zj.rmatvec(col) for col in self.PD.T])
        return 2.0 * abs(sc.d) ** 2 / abs(sc.a) ** 2 * np.real(W.conj().T @ W)


def _check_nodes(nodes: Sequence[AnalysisNode]) -> None:
    if len(nodes) < 1:
        raise ConfigError("at least one node is required")
    if len({n.n_params for n in nodes}) != 1:
        raise ConfigError("nodes mix single-node and global parameterisations")


def _scaled_inverse(H: np.ndarray) -> np.ndarray:
    """Inverse after symmetric diagonal scaling; raises when H is singular.

    Delay (s) and Doppler (rad/s) entries differ by ~20 orders of magnitude,
    so the scaling keeps the factorisation well conditioned.
    """
    d = np.sqrt(np.abs(np.diag(H)))
    if np.any(d == 0):
        raise IdentifiabilityError("H has a zero diagonal entry: parameter does not affect the data")
    Hs = H / np.outer(d, d)
    eig = np.linalg.eigvalsh(Hs)
    if eig[0] <= 1e-12 * eig[-1]:
        raise IdentifiabilityError(f"H is singular (scaled eigenvalues {eig})")
    inv = np.linalg.inv(Hs) / np.outer(d, d)
    return 0.5 * (inv + inv.T)


def hessian_H(nodes: Sequence[AnalysisNode]) -> np.ndarray:
    _check_nodes(nodes)
    H = sum(_NodeTerms(n).h_term() for n in nodes)
    H = 0.5 * (H + H.T)
    _scaled_inverse(H)
    return H


def crb(nodes: Sequence[AnalysisNode], sigma_e2: float | None = None) -> np.ndarray:
    """sigma_e^2 H^-1; sigma_e2 defaults to the first node's SC noise variance."""
    s2 = nodes[0].scenario.sigma_e2 if sigma_e2 is None else sigma_e2
    return s2 * _scaled_inverse(hessian_H(nodes))


def excess_Q(
    nodes: Sequence[AnalysisNode], sigma_n2: float | None = None, variant: str = "verbatim"
) -> np.ndarray:
    _check_nodes(nodes)
    s2 = nodes[0].scenario.sigma_n2 if sigma_n2 is None else sigma_n2
    Q = s2 * sum(_NodeTerms(n, variant).q_term() for n in nodes)
    return 0.5 * (Q + Q.T)


@dataclass(frozen=True)
class CorollaryMargin:
    lhs: float
    rhs: float
    zj_spectral: float

    @property
    def margin_db(self) -> float:
        if self.lhs == 0:
            return float("inf")
        if self.rhs == 0:
            return float("-inf")
        return float(10.0 * np.log10(self.rhs / self.lhs))


def corollary_margin(
    node: AnalysisNode,
    sigma_e2: float | None = None,
    sigma_n2: float | None = None,
    variant: str = "verbatim",
) -> CorollaryMargin:
    """Interference-to-noise bound (lhs) versus reference SNR (rhs), plus ||ZJ||_2^2."""
    sc = node.scenario
    se2 = sc.sigma_e2 if sigma_e2 is None else sigma_e2
    sn2 = sc.sigma_n2 if sigma_n2 is None else sigma_n2
    lhs, rhs = _lhs_rhs(sc, se2, sn2)
    return CorollaryMargin(lhs, rhs, ZJOperator(sc, variant).spectral_norm2())


@dataclass(frozen=True)
class CovarianceReport:
    crb: np.ndarray
    excess: np.ndarray
    total: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    corollary_lhs: np.ndarray
    corollary_rhs: np.ndarray
    zj_norm2: np.ndarray

    @property
    def margin_db(self) -> np.ndarray:
        return np.array(
            [CorollaryMargin(l, r, 0.0).margin_db for l, r in zip(self.corollary_lhs, self.corollary_rhs)]
        )

    def to_dict(self, satisfied_margin_db: float = 10.0) -> dict:
        margin = self.margin_db
        return {
            "crb": self.crb.tolist(),
            "excess": self.excess.tolist(),
            "total": self.total.tolist(),
            "H": self.H.tolist(),
            "Q": self.Q.tolist(),
            "corollary": [
                {
                    "lhs": float(l),
                    "rhs": float(r),
                    "margin_db": float(m),
                    "zj_norm2": float(z),
                    "satisfied": bool(m >= satisfied_margin_db),
                }
                for l, r, m, z in zip(self.corollary_lhs, self.corollary_rhs, margin, self.zj_norm2)
            ],
            "corollary_satisfied": bool(np.all(margin >= satisfied_margin_db)),
        }


def total_covariance(
    nodes: Sequence[AnalysisNode],
    sigma_e2: float | None = None,
    sigma_n2: float | None = None,
    variant: str = "verbatim",
    with_spectral: bool = True,
) -> CovarianceReport:
    """CRB + H^-1 Q H^-1 together with the per-node corollary quantities."""
    _check_nodes(nodes)
    se2 = nodes[0].scenario.sigma_e2 if sigma_e2 is None else sigma_e2
    sn2 = nodes[0].scenario.sigma_n2 if sigma_n2 is None else sigma_n2
    terms = [_NodeTerms(n, variant) for n in nodes]
    H = sum(t.h_term() for t in terms)
    H = 0.5 * (H + H.T)
    Hinv = _scaled_inverse(H)
    Q = sn2 * sum(t.q_term() for t in terms)
    Q = 0.5 * (Q + Q.T)
    excess = Hinv @ Q @ Hinv
    excess = 0.5 * (excess + excess.T)
    bound = se2 * Hinv
    margins = [
        corollary_margin(n, se2, sn2, variant)
        if with_spectral
        else CorollaryMargin(*_lhs_rhs(n.scenario, se2, sn2), np.nan)
        for n in nodes
    ]
    return CovarianceReport(
        crb=bound,
        excess=excess,
        total=bound + excess,
        H=H,
        Q=Q,
        corollary_lhs=np.array([m.lhs for m in margins]),
        corollary_rhs=np.array([m.rhs for m in margins]),
        zj_norm2=np.array([m.zj_spectral for m in margins]),
    )


def _lhs_rhs(sc: NodeScenario, se2: float, sn2: float) -> tuple[float, float]:
    power = abs(sc.b) ** 2 + abs(sc.d) ** 2 + float(np.sum(np.abs(sc.c) ** 2))
    num = (sc.n_clutter_taps + 1) * power
    lhs = 0.0 if num == 0 else (np.inf if se2 == 0 else num / se2)
    rhs = np.inf if sn2 == 0 else abs(sc.a) ** 2 / sn2
    return float(lhs), float(rhs)
