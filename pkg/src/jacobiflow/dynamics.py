"""Flows of extended Hamiltonian systems.

The extended vector field is (v, f, r, 1) with v = dH/dp, f = -dH/dq,
r = dH/dt: positions and momenta follow Hamilton's equations, the energy
coordinate integrates the power, and time advances at unit rate.  Time is
never integrated numerically: the t component of every stored state is
computed as t0 + k*dt, which keeps the time metric invariant by
construction.

`integrate_flow` optionally co-integrates the variational Jacobian
J' = A(z(tau)) J alongside the state with the same one-step method, where
A is the Jacobian of the field.  A's time row is identically zero and its
energy column is identically zero, so J keeps an exact (0, ..., 0, 1) time
row and e_eps energy column; the certification layer factors these J into
the matrix group.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.interpolate import CubicSpline

from .forms import Dimension, PhasePoint, MapHandle, default_step


def _as_state(z):
    if isinstance(z, PhasePoint):
        return z.to_array()
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or len(z) < 4 or len(z) % 2:
        raise ValueError(f"expected a state vector of even length >= 4, got shape {z.shape}")
    return z.copy()


def _split(z):
    k = len(z) - 2
    return z[0:k:2], z[1:k:2], z[-2], z[-1]


def extended_vector_field(sys, z):
    """Field (v, f, r, 1) at z, in canonical ordering."""
    z = _as_state(z)
    q, p, _, t = _split(z)
    v = np.asarray(sys.grad_p(q, p, t), dtype=float)
    f = -np.asarray(sys.grad_q(q, p, t), dtype=float)
    r = float(sys.d_t(q, p, t))
    X = np.empty(len(z))
    k = len(z) - 2
    X[0:k:2] = v
    X[1:k:2] = f
    X[-2] = r
    X[-1] = 1.0
    if not np.all(np.isfinite(X)):
        raise ValueError("Hamiltonian gradients evaluated to non-finite values")
    return X


def reduced_vector_field(sys, y):
    """(q, p) block of the field for an autonomous system."""
    if not sys.autonomous:
        raise ValueError("reduced vector field is only defined for autonomous systems")
    y = np.asarray(y, dtype=float)
    q, p = y[0::2], y[1::2]
    v = np.asarray(sys.grad_p(q, p, 0.0), dtype=float)
    f = -np.asarray(sys.grad_q(q, p, 0.0), dtype=float)
    Y = np.empty_like(y)
    Y[0::2] = v
    Y[1::2] = f
    return Y


def field_jacobian(sys, z):
    """Jacobian A = dX/dz of the extended field: analytic if the system has one."""
    z = _as_state(z)
    if sys.vf_jacobian is not None:
        return np.asarray(sys.vf_jacobian(z), dtype=float)
    return _fd_field_jacobian(sys, z)


def _fd_field_jacobian(sys, z):
    h = default_step(z)
    d = len(z)
    A = np.empty((d, d))
    for c in range(d):
        e = np.zeros(d)
        e[c] = h
        A[:, c] = (extended_vector_field(sys, z + e) - extended_vector_field(sys, z - e)) / (2 * h)
    return A


@dataclass(frozen=True)
class Trajectory:
    """Sampled flow with pointwise (v, f, r) and optional variational Jacobians.

    tau equals the time column of z bitwise (the flow parameter is time).
    """

    tau: np.ndarray
    z: np.ndarray
    v: np.ndarray
    f: np.ndarray
    r: np.ndarray
    dt: float
    method: str
    n: Dimension
    jac: np.ndarray = None

    @property
    def q(self):
        return self.z[:, 0 : self.n.reduced : 2]

    @property
    def p(self):
        return self.z[:, 1 : self.n.reduced : 2]

    @property
    def eps(self):
        return self.z[:, -2]

    @property
    def t(self):
        return self.z[:, -1]

    @property
    def n_samples(self):
        return self.z.shape[0]

    def point(self, k):
        return PhasePoint.from_array(self.z[k])


def _rk4_step(sys, z, t0, k, dt, J, with_var):
    K1 = extended_vector_field(sys, z)
    z2 = z + (0.5 * dt) * K1
    K2 = extended_vector_field(sys, z2)
    z3 = z + (0.5 * dt) * K2
    K3 = extended_vector_field(sys, z3)
    z4 = z + dt * K3
    K4 = extended_vector_field(sys, z4)
    zn = z + (dt / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
    zn[-1] = t0 + (k + 1) * dt
    Jn = None
    if with_var:
        A1 = field_jacobian(sys, z)
        A2 = field_jacobian(sys, z2)
        A3 = field_jacobian(sys, z3)
        A4 = field_jacobian(sys, z4)
        L1 = A1 @ J
        L2 = A2 @ (J + (0.5 * dt) * L1)
        L3 = A3 @ (J + (0.5 * dt) * L2)
        L4 = A4 @ (J + dt * L3)
        Jn = J + (dt / 6.0) * (L1 + 2.0 * L2 + 2.0 * L3 + L4)
    return zn, Jn


def _leapfrog_step(sys, z, t0, k, dt, J, with_var):
    kred = len(z) - 2
    q, p, eps, t = z[0:kred:2].copy(), z[1:kred:2].copy(), z[-2], z[-1]
    t1 = t0 + (k + 1) * dt
    # half kick on (p, eps) from the potential at the old endpoint
    p_h = p - (0.5 * dt) * np.asarray(sys.grad_q(q, p, t), dtype=float)
    eps_h = eps + (0.5 * dt) * float(sys.d_t(q, p, t))
    # full drift from the kinetic part
    q1 = q + dt * np.asarray(sys.grad_p(q, p_h, t), dtype=float)
    # closing half kick at the new endpoint
    p1 = p_h - (0.5 * dt) * np.asarray(sys.grad_q(q1, p_h, t1), dtype=float)
    eps1 = eps_h + (0.5 * dt) * float(sys.d_t(q1, p_h, t1))
    zn = np.empty_like(z)
    zn[0:kred:2] = q1
    zn[1:kred:2] = p1
    zn[-2] = eps1
    zn[-1] = t1
    Jn = None
    if with_var:
        # trapezoidal (Heun) update of the matrix equation, order matched
        A0 = field_jacobian(sys, z)
        A1 = field_jacobian(sys, zn)
        L0 = A0 @ J
        Jn = J + (0.5 * dt) * (L0 + A1 @ (J + dt * L0))
    return zn, Jn


def integrate_flow(sys, z0, t_end, dt, method="rk4", with_variational=False):
    """Integrate the extended flow from z0 up to t_end.

    Parameters
    ----------
    sys : HamiltonianSystem
    z0 : PhasePoint or array
        Initial state; its time component is the start time.
    t_end : float
        Final time; the step count is round((t_end - t0)/dt) and the actual
        step is (t_end - t0)/n_steps (recorded on the trajectory).
    dt : float
        Requested step, > 0.
    method : {"rk4", "leapfrog"}
        Leapfrog requires a separable system.
    with_variational : bool
        Also propagate the Jacobian J of the flow map (J0 = identity) with
        the same one-step method.

    Returns
    -------
    Trajectory
    """
    z = _as_state(z0)
    t0 = z[-1]
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not t_end > t0:
        raise ValueError(f"t_end ({t_end}) must exceed the initial time ({t0})")
    method = method.lower()
    if method not in ("rk4", "leapfrog"):
        raise ValueError(f"unknown method {method!r}")
    if method == "leapfrog" and not sys.separable:
        raise ValueError("leapfrog requires a separable system")
    if 2 * sys.n.n + 2 != len(z):
        raise ValueError(f"state length {len(z)} does not match system n={sys.n.n}")

    n_steps = max(1, round((t_end - t0) / dt))
    dt = (t_end - t0) / n_steps
    d = len(z)
    nn = sys.n.n
    Z = np.empty((n_steps + 1, d))
    V = np.empty((n_steps + 1, nn))
    F = np.empty((n_steps + 1, nn))
    R = np.empty(n_steps + 1)
    Z[0] = z
    J = np.eye(d) if with_variational else None
    Js = np.empty((n_steps + 1, d, d)) if with_variational else None
    if with_variational:
        Js[0] = J
    step = _rk4_step if method == "rk4" else _leapfrog_step
    for k in range(n_steps):
        X = extended_vector_field(sys, Z[k])
        V[k] = X[0 : 2 * nn : 2]
        F[k] = X[1 : 2 * nn : 2]
        R[k] = X[-2]
        zn, Jn = step(sys, Z[k], t0, k, dt, J, with_variational)
        if not np.all(np.isfinite(zn)):
            raise ValueError(f"flow blew up: non-finite state at step {k + 1} (last valid step {k})")
        Z[k + 1] = zn
        if with_variational:
            J = Jn
            Js[k + 1] = J
    X = extended_vector_field(sys, Z[-1])
    V[-1] = X[0 : 2 * nn : 2]
    F[-1] = X[1 : 2 * nn : 2]
    R[-1] = X[-2]
    return Trajectory(
        tau=Z[:, -1].copy(),
        z=Z,
        v=V,
        f=F,
        r=R,
        dt=dt,
        method=method,
        n=sys.n,
        jac=Js,
    )


def write_csv(traj, path):
    """Trajectory CSV: tau, q1..qn, p1..pn, eps, t, v1..vn, f1..fn, r at 17 significant digits."""
    nn = traj.n.n
    cols = (
        ["tau"]
        + [f"q{i + 1}" for i in range(nn)]
        + [f"p{i + 1}" for i in range(nn)]
        + ["eps", "t"]
        + [f"v{i + 1}" for i in range(nn)]
        + [f"f{i + 1}" for i in range(nn)]
        + ["r"]
    )
    body = np.column_stack(
        [traj.tau, traj.q, traj.p, traj.eps, traj.t, traj.v, traj.f, traj.r]
    )
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for row in body:
            fh.write(",".join("%.17g" % x for x in row) + "\n")


@dataclass(frozen=True)
class RhoTransform:
    """Shift transform built from one reference trajectory.

    Maps (q, p, eps, t) to (q + xi(t), p + pi(t), eps + H(q, p, t), t) with
    xi, pi cubic-spline interpolants of the reference position/momentum
    shifts.  Defined for t inside the tabulated range only.
    """

    sys: object
    t0: float
    t1: float
    q0: np.ndarray
    p0: np.ndarray
    _sq: object
    _sp: object
    n: Dimension = dc_field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n", self.sys.n)

    def _check_t(self, t):
        if not (self.t0 <= t <= self.t1):
            raise ValueError(f"t={t} outside the tabulated range [{self.t0}, {self.t1}]")

    def xi(self, t):
        self._check_t(t)
        return self._sq(t) - self.q0

    def pi(self, t):
        self._check_t(t)
        return self._sp(t) - self.p0

    def xi_dot(self, t):
        self._check_t(t)
        return self._sq(t, 1)

    def pi_dot(self, t):
        self._check_t(t)
        return self._sp(t, 1)

    def __call__(self, z):
        z = _as_state(z)
        q, p, eps, t = _split(z)
        self._check_t(t)
        zt = z.copy()
        k = len(z) - 2
        zt[0:k:2] = q + (self._sq(t) - self.q0)
        zt[1:k:2] = p + (self._sp(t) - self.p0)
        zt[-2] = eps + float(self.sys.value(q, p, t))
        return zt

    def jacobian(self, z):
        """Analytic Jacobian: identity block, gradient row, shift-rate column."""
        z = _as_state(z)
        q, p, _, t = _split(z)
        self._check_t(t)
        d = len(z)
        k = d - 2
        J = np.eye(d)
        J[0:k:2, -1] = self._sq(t, 1)
        J[1:k:2, -1] = self._sp(t, 1)
        J[k, 0:k:2] = np.asarray(self.sys.grad_q(q, p, t), dtype=float)
        J[k, 1:k:2] = np.asarray(self.sys.grad_p(q, p, t), dtype=float)
        J[k, -1] = float(self.sys.d_t(q, p, t))
        return J

    def as_map(self):
        # certification goes through finite differences on purpose, so the
        # handle carries no analytic Jacobian
        return MapHandle(func=self.__call__, n=self.n, name="rho")


def make_rho(traj, sys):
    """Build the shift transform from a trajectory of sys.

    xi(t) and pi(t) are natural cubic splines through the sampled position
    and momentum shifts relative to the initial state.
    """
    t = traj.t
    if traj.n_samples < 4:
        raise ValueError("need at least 4 samples to build the spline tables")
    sq = CubicSpline(t, traj.q, axis=0, bc_type="natural")
    sp = CubicSpline(t, traj.p, axis=0, bc_type="natural")
    return RhoTransform(
        sys=sys,
        t0=float(t[0]),
        t1=float(t[-1]),
        q0=traj.q[0].copy(),
        p0=traj.p[0].copy(),
        _sq=sq,
        _sp=sp,
    )
