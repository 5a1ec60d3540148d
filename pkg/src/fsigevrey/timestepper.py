"""
Backward Euler integration of the coupled fluid/plate system.

One step solves the monolithic saddle-point system::

    (M + dt K) x_new - dt C^T lam = M x_old + dt F
                        -dt C x_new = 0

where ``x = [alpha1, alpha2, omega1, omega2]`` and ``lam = [p, c_tilde]``.
The omega1 rows of ``M + dt K`` read ``S (omega1_new - dt omega2_new) = S omega1_old``.
"""

import logging
import re
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .linsolve import Factorization, SingularMatrixError

log = logging.getLogger(__name__)


class ConfigurationError(RuntimeError):
    pass


class BlowUpError(FloatingPointError):
    def __init__(self, step, t):
        super().__init__(f"non-finite state at step {step} (t={t:.6g})")
        self.step = step
        self.t = t


@dataclass(frozen=True)
class FsiState:
    """Coefficient vectors of the discrete solution at time ``t``.

    ``pressure`` holds the P1 pressure at the mesh vertices and ``c_tilde``
    the constant plate-load multiplier that enforces a mean-free plate velocity.
    """

    alpha1: np.ndarray
    alpha2: np.ndarray
    omega1: np.ndarray
    omega2: np.ndarray
    pressure: np.ndarray
    c_tilde: float = 0.0
    t: float = 0.0

    def vector(self):
        return np.concatenate([self.alpha1, self.alpha2, self.omega1, self.omega2])

    def multipliers(self):
        return np.concatenate([self.pressure, [self.c_tilde]])

    @classmethod
    def from_vector(cls, system, x, lam=None, t=0.0):
        s = system.slices
        x = np.asarray(x, dtype=float)
        if lam is None:
            lam = np.zeros(system.n_multipliers)
        return cls(
            alpha1=x[s["alpha1"]].copy(),
            alpha2=x[s["alpha2"]].copy(),
            omega1=x[s["omega1"]].copy(),
            omega2=x[s["omega2"]].copy(),
            pressure=np.asarray(lam[:-1], dtype=float).copy(),
            c_tilde=float(lam[-1]),
            t=float(t),
        )

    def is_finite(self):
        return bool(np.all(np.isfinite(self.vector())) and np.all(np.isfinite(self.multipliers())))


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    plate_potential: float
    plate_kinetic: float
    fluid_kinetic: float
    total: float
    dissipation: float


def energy(system, state):
    x = state.vector()
    s = system.slices
    w1, w2 = x[s["omega1"]], x[s["omega2"]]
    pot = 0.5 * w1 @ system.plate_stiffness @ w1
    pkin = 0.5 * w2 @ system.plate_mass @ w2
    vel = x.copy()
    vel[s["omega1"]] = 0.0
    kin_all = 0.5 * vel @ (system.mass @ vel)
    fkin = kin_all - pkin
    diss = float(vel @ (system.dissipation @ vel))
    return EnergyRecord(state.t, float(pot), float(pkin), float(fkin), float(pot + kin_all), diss)


def divergence_residual(system, state):
    """Max-norm of the discrete divergence of the velocity (interface included)."""
    return float(np.abs(system.divergence.T @ state.vector()).max(initial=0.0))


def plate_mean(system, omega):
    return float(system.plate_mean @ omega)


# ------------------------------------------------------------------ stepping

@dataclass(frozen=True, eq=False)
class BackwardEulerOperator:
    system: object
    dt: float
    matrix: sp.csc_matrix
    factorization: Factorization


def monolithic_parts(system):
    """``(Mblk, Ktot)`` with the step matrix equal to ``Mblk + dt * Ktot``."""
    nc = system.n_multipliers
    C = system.constraint
    mblk = sp.block_diag([system.mass, sp.csr_matrix((nc, nc))]).tocsr()
    ktot = sp.bmat([[system.stiffness, -C.T], [-C, None]]).tocsr()
    return mblk, ktot


def build_backward_euler_operator(system, dt):
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt!r}")
    mblk, ktot = monolithic_parts(system)
    a = (mblk + dt * ktot).tocsc()
    try:
        fact = Factorization(a)
    except SingularMatrixError as exc:
        raise ConfigurationError(_diagnose_rank_loss(system, exc)) from exc
    return BackwardEulerOperator(system, float(dt), a, fact)


def _diagnose_rank_loss(system, exc):
    blocks = {
        "divergence": system.divergence.T.toarray(),
        "plate mean": system.constraint[-1:].toarray(),
        "divergence+plate mean": system.constraint.toarray(),
    }
    lost = []
    for name, blk in blocks.items():
        if blk.size == 0:
            continue
        r = np.linalg.matrix_rank(blk)
        if r < blk.shape[0]:
            lost.append(f"{name} (rank {r} < {blk.shape[0]})")
    what = ", ".join(lost) if lost else "unknown block"
    return f"singular Backward Euler system ({exc}); rank-deficient constraint: {what}"


def backward_euler_step(state, op, forcing=None):
    """Advance ``state`` by one step of ``op.dt``.

    ``forcing`` is an optional state-space load vector, or a callable of the
    new time returning one.
    """
    system = op.system
    dt = op.dt
    x = state.vector()
    t_new = state.t + dt
    rhs_x = system.mass @ x
    if forcing is not None:
        f = forcing(t_new) if callable(forcing) else forcing
        rhs_x = rhs_x + dt * np.asarray(f, dtype=float)
    rhs = np.concatenate([rhs_x, np.zeros(system.n_multipliers)])
    sol = op.factorization.solve(rhs)
    n = system.n_state
    return FsiState.from_vector(system, sol[:n], sol[n:], t_new)


# ------------------------------------------------------------- initial data

_SPEC = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


def parse_initial_spec(spec):
    """``"sawtooth(5)"`` -> ("sawtooth", 5); ``"randomized(3)"`` -> ("randomized", 3)."""
    m = _SPEC.match(str(spec))
    if not m or m.group(1) not in ("sawtooth", "hat", "randomized", "zero"):
        raise ValueError(f"unknown initial data spec {spec!r}")
    name, arg = m.group(1), m.group(2)
    if arg in (None, ""):
        return name, None
    try:
        return name, int(arg)
    except ValueError:
        raise ValueError(f"bad argument in initial data spec {spec!r}") from None


def sawtooth(k):
    """Rising ramps with ``k`` teeth on [0, 1]; value jumps at x = j/k."""
    k = int(k)
    if k < 1:
        raise ValueError("sawtooth needs at least one tooth")

    def f(x):
        return np.mod(k * np.asarray(x, dtype=float), 1.0) - 0.5

    def df(x):
        return np.full(np.shape(x), float(k))

    return f, df


def hat():
    """Tent of unit height centred at 1/2 with support [1/4, 3/4]."""

    def f(x):
        return np.maximum(0.0, 1.0 - 4.0 * np.abs(np.asarray(x, dtype=float) - 0.5))

    def df(x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x - 0.5) < 0.25
        return np.where(inside, -4.0 * np.sign(x - 0.5), 0.0)

    return f, df


def project_state(system, x):
    """Project a raw state onto the constrained, invariant subspace.

    Velocity components are projected in the kinetic-energy inner product onto
    ``constraint @ v = 0`` (discretely divergence-free, mean-free plate
    velocity). omega1 is projected in the plate L2 inner product onto the
    annihilator of the plate mean and interface-flux functionals.
    """
    x = np.array(x, dtype=float)
    s = system.slices
    vel = system.velocity_mask()

    Mv = system.mass[vel][:, vel]
    Cv = system.constraint[:, vel]
    nc = Cv.shape[0]
    kkt = sp.bmat([[Mv, Cv.T], [Cv, None]]).tocsc()
    rhs = np.concatenate([Mv @ x[vel], np.zeros(nc)])
    x[vel] = Factorization(kkt).solve(rhs)[: vel.sum()]

    P = np.vstack([system.plate_mean, system.plate_flux])
    Ms = system.plate_mass
    w1 = x[s["omega1"]]
    MiPt = np.linalg.solve(Ms, P.T)
    x[s["omega1"]] = w1 - MiPt @ np.linalg.solve(P @ MiPt, P @ w1)
    return x


def make_initial_data(system, spec="sawtooth(5)", seed=0, fluid=None):
    """Build a consistent initial state.

    Plate displacement and velocity are Hermite interpolants of the requested
    profile (clamped DOFs dropped). ``fluid``, if given, is a callable
    ``(x, y) -> (u1, u2)`` for the initial fluid field; otherwise the fluid
    starts from rest before projection. ``randomized`` draws every coefficient
    from a seeded normal distribution.
    """
    name, arg = parse_initial_spec(spec)
    n = system.n_state
    s = system.slices
    x = np.zeros(n)
    if name == "zero":
        return FsiState.from_vector(system, x)

    plate = system.plate
    free = plate.free_dofs()
    if name == "randomized":
        rng = np.random.default_rng(seed if arg is None else arg)
        x = rng.standard_normal(n)
    else:
        f, df = sawtooth(5 if arg is None else arg) if name == "sawtooth" else hat()
        coeffs = plate.interpolate(f, df)[free]
        x[s["omega1"]] = coeffs
        x[s["omega2"]] = coeffs

    if fluid is not None:
        dm = system.dofmap
        u1, u2 = fluid(system.mesh.nodes[:, 0], system.mesh.nodes[:, 1])
        m1, m2 = dm.fluid_u1 >= 0, dm.fluid_u2 >= 0
        x[s["alpha1"]][dm.fluid_u1[m1]] = np.asarray(u1)[m1]
        x[s["alpha2"]][dm.fluid_u2[m2]] = np.asarray(u2)[m2]
    return FsiState.from_vector(system, project_state(system, x))


# ---------------------------------------------------------------- driver

@dataclass
class SimulationResult:
    system: object
    dt: float
    energies: list = field(default_factory=list)
    div_residual: list = field(default_factory=list)
    es_omega2: list = field(default_factory=list)
    es_omega1_drift: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    final: FsiState = None

    @property
    def times(self):
        return np.array([e.t for e in self.energies])

    @property
    def total_energy(self):
        return np.array([e.total for e in self.energies])


def simulate(system, state, dt, T, snapshot_times=(), forcing=None, op=None, callback=None):
    """Step ``state`` from its time to ``T``; record energies and snapshots.

    The step count is ``round((T - t0) / dt)``; the step is shrunk slightly so
    that the run ends exactly at ``T``.
    """
    t0 = state.t
    span = T - t0
    if span < 0:
        raise ValueError("terminal time precedes initial time")
    nsteps = int(round(span / dt)) if span > 0 else 0
    if nsteps == 0 and span > 0:
        nsteps = 1
    if nsteps:
        dt = span / nsteps
        if op is None or abs(op.dt - dt) > 1e-15 * dt:
            op = build_backward_euler_operator(system, dt)
    snap_steps = {}
    for ts in snapshot_times:
        k = int(round((ts - t0) / dt)) if nsteps else 0
        snap_steps.setdefault(min(max(k, 0), nsteps), []).append(ts)

    res = SimulationResult(system, dt)
    e1_0 = plate_mean(system, state.omega1)

    def record(step, st):
        if not st.is_finite():
            raise BlowUpError(step, st.t)
        res.energies.append(energy(system, st))
        res.div_residual.append(divergence_residual(system, st))
        res.es_omega2.append(plate_mean(system, st.omega2))
        res.es_omega1_drift.append(plate_mean(system, st.omega1) - e1_0)
        if step in snap_steps:
            res.snapshots[step] = st
        if callback is not None:
            callback(step, st)

    record(0, state)
    for step in range(1, nsteps + 1):
        state = backward_euler_step(state, op, forcing)
        record(step, state)
    res.final = state
    return res


def run_simulation(config, initial_state=None, forcing=None, fluid=None):
    """Run the experiment described by a :class:`~fsigevrey.config.SimulationConfig`."""
    from .assembly import apply_constraints
    from .mesh import build_plate_mesh, build_unit_square_mesh

    system = apply_constraints(
        build_unit_square_mesh(config.n), build_plate_mesh(config.plate_elements)
    )
    if initial_state is None:
        initial_state = make_initial_data(system, config.initial, config.seed, fluid)
    log.info("simulating n=%d L_s=%d dt=%g T=%g", config.n, config.plate_elements, config.dt, config.T)
    return simulate(
        system, initial_state, config.dt, config.T, config.snapshot_times, forcing=forcing
    )


def with_time(state, t):
    return replace(state, t=float(t))


# ------------------------------------------------------------- diagnostics

def plate_modes(system):
    """Generalized eigenpairs of (S, Ms) on the free plate DOFs, ascending."""
    import scipy.linalg as la

    return la.eigh(system.plate_stiffness, system.plate_mass)


def high_frequency_fraction(system, state, modes=None, top=0.5):
    """Share of plate energy carried by the upper ``top`` fraction of plate modes."""
    lam, V = plate_modes(system) if modes is None else modes
    Ms = system.plate_mass
    c1 = V.T @ (Ms @ state.omega1)
    c2 = V.T @ (Ms @ state.omega2)
    e = 0.5 * (lam * c1**2 + c2**2)
    k = int(np.floor(len(lam) * (1.0 - top)))
    total = e.sum()
    return float(e[k:].sum() / total) if total > 0 else 0.0
