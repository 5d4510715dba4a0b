"""Time evolution: oracle, regularized linear flow, Kato iteration.

Three solvers share one time grid and CFL rule:

* ``oracle_solve`` -- direct method-of-lines RK4 on the real system
  (y, y_t, theta, theta_t) using pseudo-spectral derivatives and de-aliased
  pointwise nonlinearities; it never touches the paradifferential machinery
  and serves as the independent validator.
* ``linear_solve`` -- Strang splitting for the regularized frozen-coefficient
  system d_t V = (frakA + frakB + R)(V~) V + forcing - eps Delta V: exact
  half-step heat factors around an explicit RK4 step of the frozen
  paradifferential part.
* ``kato_solve`` -- the iteration (P)_n: sweep n solves the linear system
  with coefficients frozen along V_{n-1} and inhomogeneity
  remainder(V_{n-1}) + G(t), stopping when the L^inf H^{s1} Cauchy increment
  falls below tolerance.  The V-independent order-zero part R is kept inside
  the frozen generator, so for a trivial (linear, constant-coefficient)
  system sweep one already solves the full problem and the first increment
  vanishes identically.

Frozen backgrounds are evaluated at step midpoints (average of the two
enclosing nodes), making the coefficient freezing second-order accurate; the
RK4 step then dominates the error budget.
"""

import csv
import json

import numpy as np

from .errors import NumericalError, PreconditionError
from .grid import RegularityLadder
from .paralin import ParalinearizedSystem
from .state import StateVector, complexify, stacked_norm

RK4_IMAG_LIMIT = 2.8  # stability interval of classical RK4 on the imaginary axis


class SolverConfig:
    """Time-stepping and iteration parameters."""

    def __init__(
        self,
        dt=None,
        T_final=0.1,
        eps=0.0,
        cfl_safety=0.9,
        kato_tol=1e-10,
        kato_max_iter=25,
        rebuild_every=1,
        ladder=None,
    ):
        if T_final <= 0:
            raise PreconditionError("T_final must be positive")
        if eps < 0:
            raise PreconditionError("eps must be nonnegative")
        if not (0.0 < cfl_safety <= 1.0):
            raise PreconditionError("cfl_safety must lie in (0, 1]")
        if dt is not None and dt <= 0:
            raise PreconditionError("dt must be positive")
        self.dt = dt
        self.T_final = float(T_final)
        self.eps = float(eps)
        self.cfl_safety = float(cfl_safety)
        self.kato_tol = float(kato_tol)
        self.kato_max_iter = int(kato_max_iter)
        self.rebuild_every = max(1, int(rebuild_every))
        self.ladder = ladder if ladder is not None else RegularityLadder()

    def max_stable_dt(self, grid, b_max):
        """dt <= cfl_safety * 2.8 / (sqrt(max b) j_max^2)."""
        j_max = grid.n // 2
        return self.cfl_safety * RK4_IMAG_LIMIT / (np.sqrt(b_max) * j_max**2)

    def resolve_dt(self, grid, b_max):
        """The actual step: validated config dt, or the largest stable step
        dividing T_final into an integer number of steps."""
        limit = self.max_stable_dt(grid, b_max)
        if self.dt is not None:
            if self.dt > limit * (1.0 + 1e-12):
                raise PreconditionError(
                    "CFL violation: dt = %.3e exceeds stable limit %.3e" % (self.dt, limit)
                )
            dt = self.dt
        else:
            dt = limit
        steps = max(1, int(np.ceil(self.T_final / dt - 1e-12)))
        return self.T_final / steps, steps

    def to_json_dict(self):
        return {
            "dt": self.dt,
            "T_final": self.T_final,
            "eps": self.eps,
            "cfl_safety": self.cfl_safety,
            "kato_tol": self.kato_tol,
            "kato_max_iter": self.kato_max_iter,
            "rebuild_every": self.rebuild_every,
            "ladder": {
                "s0": self.ladder.s0,
                "s1": self.ladder.s1,
                "s2": self.ladder.s2,
                "s": self.ladder.s,
            },
        }


class RunResult:
    """Trajectory, norm time series, iteration record, termination cause."""

    def __init__(self, grid, times, trajectory, norms, termination, increments=None):
        self.grid = grid
        self.times = np.asarray(times, dtype=float)
        self.trajectory = np.asarray(trajectory, dtype=complex)
        self.norms = {k: np.asarray(v, dtype=float) for k, v in norms.items()}
        self.termination = termination
        self.increments = list(increments) if increments is not None else []

    @property
    def final(self):
        return self.trajectory[-1]

    def final_state(self):
        return StateVector.from_stacked(self.grid, self.trajectory[-1])

    def sup_norm(self, s):
        return float(max(stacked_norm(self.grid, v, s) for v in self.trajectory))

    def fitted_growth(self, key=None):
        """Least-squares slope of log ||V(t)||; the measured growth constant."""
        key = key if key is not None else sorted(self.norms)[0]
        vals = self.norms[key]
        mask = vals > 0
        if np.sum(mask) < 2:
            return 0.0
        return float(np.polyfit(self.times[mask], np.log(vals[mask]), 1)[0])

    def increment_ratios(self):
        inc = [x for x in self.increments if x > 0]
        return [inc[i + 1] / inc[i] for i in range(len(inc) - 1)]

    def to_json_dict(self, config=None):
        out = {
            "n": self.grid.n,
            "steps": len(self.times) - 1,
            "T_final": float(self.times[-1]) if len(self.times) else 0.0,
            "termination": self.termination,
            "increments": [float(x) for x in self.increments],
            "increment_ratios": [float(r) for r in self.increment_ratios()],
            "final_norms": {k: float(v[-1]) for k, v in self.norms.items()},
            "fitted_growth": self.fitted_growth(),
        }
        if config is not None:
            out["config"] = config.to_json_dict()
        return out

    def write_csv(self, path):
        """Time series: one row per node, columns t then each recorded norm."""
        keys = sorted(self.norms)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + ["norm_H%s" % k for k in keys])
            for i, t in enumerate(self.times):
                w.writerow(["%.12g" % t] + ["%.12g" % self.norms[k][i] for k in keys])

    def write_manifest(self, path, config=None, extra=None):
        doc = self.to_json_dict(config)
        if extra:
            doc.update(extra)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def heat_factor(grid, eps, tau):
    """Diagonal heat multipliers on the stacked state: e^{-eps tau j^4} on the
    beam pair, e^{-eps tau j^2} on the wave pair."""
    if eps < 0 or tau < 0:
        raise PreconditionError("heat factor requires eps, tau >= 0")
    j = grid.modes.astype(float)
    beam = np.exp(-eps * tau * j**4)
    wave = np.exp(-eps * tau * j**2)
    return np.concatenate([beam, beam, wave, wave])


def duhamel_smoothing_ratio(grid, eps, t, kind="beam"):
    """Sharp constant of the Duhamel heat bound: the H^{sigma} norm of
    int_0^t e^{-eps(t-t') D} f dt' per unit sup-norm of f in the stated
    weaker space (H^{sigma-2} beam, H^{sigma-1/2} wave), maximized over
    single modes.  Scales as t^{1/2} eps^{-1/2} (beam), t^{3/4} eps^{-1/4}
    (wave) once the saturating mode is resolved."""
    j = np.abs(grid.modes.astype(float))
    br = grid.brackets
    if kind == "beam":
        rate = eps * j**4
        gain = br**2
    elif kind == "wave":
        rate = eps * j**2
        gain = br**0.5
    else:
        raise ValueError("kind must be 'beam' or 'wave'")
    with np.errstate(divide="ignore", invalid="ignore"):
        integral = np.where(rate > 0, (1.0 - np.exp(-rate * t)) / np.where(rate > 0, rate, 1.0), t)
    return float(np.max(integral * gain))


def _norm_record(grid, vec, ladder):
    return {
        "s0": stacked_norm(grid, vec, ladder.s0),
        "s1": stacked_norm(grid, vec, ladder.s1),
    }


def _check_finite(grid, vec, initial_norm, s):
    if not np.all(np.isfinite(vec)):
        raise NumericalError("non-finite state encountered")
    if stacked_norm(grid, vec, s) > 1e6 * max(initial_norm, 1e-300):
        raise NumericalError("blow-up guard: norm exceeded 1e6 x initial")


def linear_solve(para, background_path, V0, forcing_path, config, include_R=True):
    """Strang splitting for the frozen-coefficient regularized linear system.

    ``background_path``: None (coefficients at the zero background), a single
    stacked vector (constant background), or an array of node values with
    one row per time node.  ``forcing_path``: None, a callable t -> stacked
    vector, or an array of node values.  With ``include_R=False`` the
    order-zero coupling R is dropped, leaving the decoupled model flow whose
    H^s norms are exact isometries.
    """
    grid = para.grid
    b_max = float(np.max(para.source.b.values().real))
    dt, steps = config.resolve_dt(grid, b_max)
    ladder = config.ladder
    n4 = 4 * grid.n

    V0 = np.asarray(V0, dtype=complex)
    if V0.shape != (n4,):
        raise PreconditionError("initial state must be a stacked 4n vector")

    bg = background_path
    bg_nodes = None
    if bg is not None:
        bg = np.asarray(bg, dtype=complex)
        if bg.ndim == 1:
            bg_nodes = np.broadcast_to(bg, (steps + 1, n4))
        else:
            if bg.shape != (steps + 1, n4):
                raise PreconditionError(
                    "background path must have %d node values" % (steps + 1)
                )
            bg_nodes = bg

    f_nodes = None
    f_callable = None
    if callable(forcing_path):
        f_callable = forcing_path
    elif forcing_path is not None:
        f_nodes = np.asarray(forcing_path, dtype=complex)
        if f_nodes.shape != (steps + 1, n4):
            raise PreconditionError("forcing path must have %d node values" % (steps + 1))

    half = heat_factor(grid, config.eps, dt / 2.0)
    R = para.R_operator().matrix if include_R else 0.0

    def generator(step):
        if bg_nodes is None:
            frozen = None
        else:
            frozen = 0.5 * (bg_nodes[step] + bg_nodes[step + 1])
        return (para.frak_A(frozen).matrix + para.frak_B(frozen).matrix) + R

    def forcing_at(step, stage):
        """stage 0: node, 1: midpoint, 2: next node."""
        t = (step + 0.5 * stage) * dt
        if f_callable is not None:
            return f_callable(t)
        if f_nodes is not None:
            if stage == 0:
                return f_nodes[step]
            if stage == 2:
                return f_nodes[step + 1]
            return 0.5 * (f_nodes[step] + f_nodes[step + 1])
        return None

    V = V0.copy()
    times = [0.0]
    traj = [V.copy()]
    rec = _norm_record(grid, V, ladder)
    norms = {k: [v] for k, v in rec.items()}
    initial = max(rec["s1"], 1e-300)

    A = None
    for step in range(steps):
        if step % config.rebuild_every == 0 or A is None:
            A = generator(step)
        f0 = forcing_at(step, 0)
        fm = forcing_at(step, 1)
        f1 = forcing_at(step, 2)

        u = half * V
        k1 = A @ u
        if f0 is not None:
            k1 = k1 + f0
        k2 = A @ (u + 0.5 * dt * k1)
        if fm is not None:
            k2 = k2 + fm
        k3 = A @ (u + 0.5 * dt * k2)
        if fm is not None:
            k3 = k3 + fm
        k4 = A @ (u + dt * k3)
        if f1 is not None:
            k4 = k4 + f1
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        V = half * u

        _check_finite(grid, V, initial, ladder.s1)
        times.append((step + 1) * dt)
        traj.append(V.copy())
        for k, v in _norm_record(grid, V, ladder).items():
            norms[k].append(v)

    return RunResult(grid, times, traj, norms, "completed")


def _initial_radius(sys, y, y_t, theta, theta_t):
    """Sup of the realified jet entries; the radius fed to the smallness check."""
    jets = sys.jets(y.coeffs, theta.coeffs)
    worst = float(np.max(np.abs(jets)))
    worst = max(worst, float(np.max(np.abs(y_t.values()))))
    worst = max(worst, float(np.max(np.abs(theta_t.values()))))
    return worst


def kato_solve(sys, V0, config, check_radius=True):
    """The iteration (P)_n on the paralinearized complex system.

    Sweep 1 solves the linear system at the zero background with forcing
    G(t); sweep n freezes the coefficients along V_{n-1} and adds the
    measured quadratic remainder of V_{n-1} as inhomogeneity.  Stops when
    the L^inf H^{s1} increment drops below ``kato_tol``.
    """
    grid = sys.grid
    para = ParalinearizedSystem(sys, grid)
    if isinstance(V0, StateVector):
        V0 = V0.stacked()
    V0 = np.asarray(V0, dtype=complex)

    from .state import realify

    y, y_t, th, th_t = realify(StateVector.from_stacked(grid, V0))
    sys.check_ellipticity()
    if check_radius:
        R0 = _initial_radius(sys, y, y_t, th, th_t)
        sys.check_radius_condition(2.0 * max(R0, 1e-12))

    b_max = float(np.max(sys.b.values().real))
    dt, steps = config.resolve_dt(grid, b_max)
    ladder = config.ladder
    Rop = para.R_operator().matrix

    def forcing_nodes(prev_traj):
        """remainder(V_{n-1}) + G at every node: full_rhs - (frakA+frakB+R)V."""
        out = np.empty_like(prev_traj)
        for k in range(prev_traj.shape[0]):
            t = k * dt
            vk = prev_traj[k]
            out[k] = para.kato_forcing(vk, t) - Rop @ vk
        return out

    g_path = lambda t: para.forcing_G(t)
    result = linear_solve(para, None, V0, g_path, config)
    increments = []
    prev_inc = None
    for sweep in range(2, config.kato_max_iter + 2):
        forcing = forcing_nodes(result.trajectory)
        for k in range(forcing.shape[0]):
            forcing[k] = forcing[k] + para.forcing_G(k * dt)
        nxt = linear_solve(para, result.trajectory, V0, forcing, config)
        inc = float(
            max(
                stacked_norm(grid, nxt.trajectory[k] - result.trajectory[k], ladder.s1)
                for k in range(steps + 1)
            )
        )
        increments.append(inc)
        result = nxt
        if inc < config.kato_tol:
            return RunResult(
                grid, result.times, result.trajectory, result.norms, "converged", increments
            )
        if prev_inc is not None and inc > 1.2 * prev_inc and inc > 10.0 * config.kato_tol:
            raise NumericalError(
                "Kato iteration diverging: increment %.3e after %.3e" % (inc, prev_inc)
            )
        prev_inc = inc
    raise NumericalError(
        "Kato iteration did not converge in %d sweeps (last increment %.3e)"
        % (config.kato_max_iter, increments[-1] if increments else float("nan"))
    )


def oracle_solve(sys, y0, y1, theta0, theta1, config):
    """Direct RK4 on the real system; the independent validator.

    State (y, y_t, theta, theta_t) as Fourier coefficient arrays; spectral
    derivatives and de-aliased pointwise nonlinearities through
    ``sys.real_rhs``.  Snapshots are stored complexified so they compare
    directly with the paradifferential solvers.
    """
    grid = sys.grid
    sys.check_ellipticity()
    b_max = float(np.max(sys.b.values().real))
    dt, steps = config.resolve_dt(grid, b_max)
    ladder = config.ladder

    y = np.asarray(y0.coeffs, dtype=complex).copy()
    yt = np.asarray(y1.coeffs, dtype=complex).copy()
    th = np.asarray(theta0.coeffs, dtype=complex).copy()
    tht = np.asarray(theta1.coeffs, dtype=complex).copy()

    from .grid import SpectralFunction

    def pack(yc, ytc, thc, thtc):
        return complexify(
            SpectralFunction(grid, yc, is_real=True),
            SpectralFunction(grid, ytc, is_real=True),
            SpectralFunction(grid, thc, is_real=True),
            SpectralFunction(grid, thtc, is_real=True),
        ).stacked()

    def rhs(state, t):
        yc, ytc, thc, thtc = state
        ytt, thtt = sys.real_rhs(yc, ytc, thc, thtc, t)
        return (ytc, ytt, thtc, thtt)

    def axpy(state, h, deriv):
        return tuple(s + h * d for s, d in zip(state, deriv))

    state = (y, yt, th, tht)
    V = pack(*state)
    times = [0.0]
    traj = [V]
    rec = _norm_record(grid, V, ladder)
    norms = {k: [v] for k, v in rec.items()}
    initial = max(rec["s1"], 1e-300)

    for step in range(steps):
        t = step * dt
        k1 = rhs(state, t)
        k2 = rhs(axpy(state, 0.5 * dt, k1), t + 0.5 * dt)
        k3 = rhs(axpy(state, 0.5 * dt, k2), t + 0.5 * dt)
        k4 = rhs(axpy(state, dt, k3), t + dt)
        state = tuple(
            s + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + d)
            for s, a, b, c, d in zip(state, k1, k2, k3, k4)
        )
        V = pack(*state)
        _check_finite(grid, V, initial, ladder.s1)
        times.append((step + 1) * dt)
        traj.append(V)
        for k, v in _norm_record(grid, V, ladder).items():
            norms[k].append(v)

    return RunResult(grid, times, traj, norms, "completed")


def trajectory_gap(grid, run_a, run_b, s):
    """sup_t ||V_a(t) - V_b(t)||_{H^s} on the common time grid."""
    if len(run_a.times) != len(run_b.times):
        raise PreconditionError("runs must share a time grid")
    return float(
        max(
            stacked_norm(grid, run_a.trajectory[k] - run_b.trajectory[k], s)
            for k in range(len(run_a.times))
        )
    )


def _project_stacked(grid, vec, N):
    """Zero all modes with |j| > N in each component."""
    n = grid.n
    keep = np.abs(grid.modes) <= N
    out = vec.copy().reshape(4, n)
    out[:, ~keep] = 0.0
    return out.reshape(4 * n)


def bona_smith_experiment(sys, V0, N_list, config, perturbation_sizes=()):
    """Kato runs from frequency-truncated data Pi_N V0, compared against the
    finest truncation; optionally perturbed-data runs for the continuity
    modulus of the solution map."""
    grid = sys.grid
    V0 = np.asarray(V0, dtype=complex)
    N_list = sorted(N_list)
    s = config.ladder.s1
    runs = {N: kato_solve(sys, _project_stacked(grid, V0, N), config) for N in N_list}
    ref = runs[N_list[-1]]
    gaps = {N: trajectory_gap(grid, runs[N], ref, s) for N in N_list[:-1]}
    report = {
        "N_list": list(N_list),
        "gaps": {str(N): float(g) for N, g in gaps.items()},
        "monotone": all(
            gaps[N_list[i]] >= gaps[N_list[i + 1]] - 1e-12 for i in range(len(N_list) - 2)
        ),
    }
    if perturbation_sizes:
        base = kato_solve(sys, V0, config)
        direction = _random_direction(grid, seed=7)
        moduli = {}
        for delta in perturbation_sizes:
            pert = kato_solve(sys, V0 + delta * direction, config)
            moduli[delta] = trajectory_gap(grid, pert, base, s) / delta
        report["perturbation_moduli"] = {("%g" % d): float(m) for d, m in moduli.items()}
    return report


def _random_direction(grid, seed=0):
    """Unit-H^{s} smooth conjugate-pair direction for perturbation studies."""
    rng = np.random.default_rng(seed)
    n = grid.n
    decay = grid.bracket_power(-6.0)
    z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * decay
    w = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * decay
    if n % 2 == 0:
        z[n // 2] = 0.0
        w[n // 2] = 0.0
    idx = (-np.arange(n)) % n
    vec = np.concatenate([z, np.conj(z[idx]), w, np.conj(w[idx])])
    return vec / stacked_norm(grid, vec, 2.5)


def epsilon_continuation(sys, V0, eps_list, config):
    """Kato runs at decreasing regularization strengths; pairwise trajectory
    gaps in H^{s1} decay linearly in eps for band-limited data."""
    if any(e < 0 for e in eps_list):
        raise PreconditionError("eps values must be nonnegative")
    eps_list = sorted(eps_list, reverse=True)
    grid = sys.grid
    s = config.ladder.s1
    runs = []
    for eps in eps_list:
        cfg = SolverConfig(
            dt=config.dt,
            T_final=config.T_final,
            eps=eps,
            cfl_safety=config.cfl_safety,
            kato_tol=config.kato_tol,
            kato_max_iter=config.kato_max_iter,
            rebuild_every=config.rebuild_every,
            ladder=config.ladder,
        )
        runs.append((eps, kato_solve(sys, V0, cfg)))
    gaps = []
    for (ea, ra), (eb, rb) in zip(runs[:-1], runs[1:]):
        gaps.append((ea, eb, trajectory_gap(grid, ra, rb, s)))
    pos = [(ea, gap) for ea, eb, gap in gaps if gap > 0 and ea > 0]
    slope = float("nan")
    if len(pos) >= 2:
        xs = np.log([p[0] for p in pos])
        ys = np.log([p[1] for p in pos])
        slope = float(np.polyfit(xs, ys, 1)[0])
    return {
        "eps_list": list(eps_list),
        "gaps": [(float(a), float(b), float(g)) for a, b, g in gaps],
        "slope": slope,
        "runs": runs,
    }
