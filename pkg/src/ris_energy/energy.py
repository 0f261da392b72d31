"""UE energy for pilot + payload transmission and its minimization over (N, P_pilot)."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .channel import ChannelScenario, check_subarrays
from .snr import INF, required_data_power

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class TransmissionPlan:
    """What the UE must deliver.

    Attributes:
        L: payload length in symbols.
        gamma_d: average SNR needed to decode the payload (linear).
        gamma_p: per-subarray pilot SNR assumed to give perfect CSI (linear),
            used only by the perfect-CSI analysis.
        p_circuit: UE circuit power while active [W].
        K: number of phase states at the RIS, ``math.inf`` for continuous.
    """

    L: float
    gamma_d: float
    gamma_p: float = 100.0
    p_circuit: float = 0.01
    K: float = 2

    def __post_init__(self):
        if not self.L >= 0:
            raise ValueError(f"L must be >= 0, got {self.L}")
        if not self.gamma_d > 0:
            raise ValueError(f"gamma_d must be > 0, got {self.gamma_d}")
        if not self.gamma_p > 0:
            raise ValueError(f"gamma_p must be > 0, got {self.gamma_p}")
        if not self.p_circuit >= 0:
            raise ValueError(f"p_circuit must be >= 0, got {self.p_circuit}")
        if not (math.isinf(self.K) or self.K >= 2):
            raise ValueError(f"K must be >= 2 or inf, got {self.K}")

    def with_payload(self, L) -> "TransmissionPlan":
        return TransmissionPlan(L, self.gamma_d, self.gamma_p, self.p_circuit, self.K)


@dataclass
class EnergyBreakdown:
    pilot_energy: float
    data_energy: float
    circuit_energy: float
    total: float
    p_data_used: float


@dataclass
class JointOptions:
    max_iter: int = 200
    n_init: float | None = None  # defaults to M/2
    p_init: float = 0.01
    p_bounds: tuple[float, float] = (1e-7, 10.0)
    fd_step: float = 1e-4
    armijo: float = 1e-4
    grad_tol: float = 1e-7  # on d ln(E) / d ln(.)
    x_tol: float = 1e-9
    f_tol: float = 1e-13
    pilot_tol: float = 1e-9  # golden-section bracket width in ln(P)
    verify: bool = False
    pilot_snr: float | None = None  # tie P_pilot to a per-subarray pilot SNR instead of optimizing it


@dataclass
class OptimizationResult:
    n_star: int
    p_pilot_star: float
    energy_star: float
    n_continuous: float
    iterations: int
    case: str | None = None
    p_pilot_continuous: float | None = None
    converged: bool = True
    breakdown: EnergyBreakdown | None = None
    trajectory: list[tuple[float, float, float]] = field(default_factory=list, repr=False)
    oracle_n: int | None = None
    oracle_energy: float | None = None


@dataclass
class PayloadPoint:
    L: float
    n_star: int
    p_pilot_star: float
    p_data: float
    pilot_energy: float
    energy: float


def feasible_subarrays(M: int) -> list[int]:
    """All N with M/N integer, ascending."""
    small = [d for d in range(1, math.isqrt(M) + 1) if M % d == 0]
    return sorted(set(small + [M // d for d in small]))


def _energy(scenario: ChannelScenario, plan: TransmissionPlan, N, p_pilot) -> EnergyBreakdown:
    p_data = required_data_power(scenario, N, p_pilot, plan.K, plan.gamma_d)
    pilot = (N + 1) * p_pilot / scenario.B
    data = plan.L * p_data / scenario.B
    circuit = (plan.L + N + 1) * plan.p_circuit / scenario.B
    return EnergyBreakdown(pilot, data, circuit, pilot + data + circuit, p_data)


def energy(scenario: ChannelScenario, plan: TransmissionPlan, N: int, p_pilot: float) -> EnergyBreakdown:
    """Energy [J] to send N+1 pilots and L data symbols, with P_data set to reach gamma_d."""
    N = check_subarrays(scenario.M, N)
    if not p_pilot >= 0:
        raise ValueError(f"pilot power must be >= 0, got {p_pilot}")
    return _energy(scenario, plan, N, p_pilot)


def energy_relaxed(scenario, plan, N: float, p_pilot: float) -> float:
    """Total energy with N treated as a positive real."""
    return _energy(scenario, plan, N, p_pilot).total


def pilot_power_for_snr(scenario: ChannelScenario, N, pilot_snr: float) -> float:
    """P_pilot that gives each subarray channel the requested pilot SNR."""
    return pilot_snr * N * scenario.sigma2 / ((N + 1) * scenario.cascade_gain)


def golden_section(f, lo: float, hi: float, tol: float = 1e-9, max_iter: int = 200):
    """Minimize a unimodal ``f`` on [lo, hi]. Returns (x, f(x))."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def optimal_pilot_power(scenario, plan, N, bounds=(1e-7, 10.0), tol=1e-9) -> tuple[float, float]:
    """Best P_pilot for fixed N by golden-section search in ln(P). Returns (P, E)."""
    lo, hi = math.log(bounds[0]), math.log(bounds[1])
    x, e = golden_section(lambda x: energy_relaxed(scenario, plan, N, math.exp(x)), lo, hi, tol)
    # P = 0 (no CSI at all) is feasible and sits outside the log bracket
    e0 = energy_relaxed(scenario, plan, N, 0.0)
    if e0 < e:
        return 0.0, e0
    return math.exp(x), e


def _neighbours(divisors: list[int], n: float) -> list[int]:
    below = [d for d in divisors if d <= n]
    above = [d for d in divisors if d >= n]
    out = []
    if below:
        out.append(below[-1])
    if above and above[0] not in out:
        out.append(above[0])
    return out


def _projected_descent(f, x0, lo, hi, opts: JointOptions):
    """Steepest descent with central-difference gradients, Armijo backtracking and box projection."""
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    fx = f(x)
    path = [x.copy()]
    step = 1.0
    converged = False
    it = 0
    x_prev = g_prev = None
    for it in range(1, opts.max_iter + 1):
        g = np.empty_like(x)
        for i in range(x.size):
            h = opts.fd_step * max(1.0, abs(x[i]))
            e = np.zeros_like(x)
            e[i] = h
            g[i] = (f(x + e) - f(x - e)) / (2 * h)
        # projected gradient: drop components pushing against an active bound
        free = ~(((x <= lo) & (g > 0)) | ((x >= hi) & (g < 0)))
        if not np.any(free) or np.max(np.abs(g[free])) < opts.grad_tol:
            converged = True
            break
        # Barzilai-Borwein trial step over the free coordinates; plain doubling stalls
        # in zig-zags across narrow valleys
        t = step * 2.0
        if x_prev is not None:
            s, y = (x - x_prev)[free], (g - g_prev)[free]
            if s @ y > 0:
                t = float(s @ s / (s @ y))
        x_prev, g_prev = x.copy(), g.copy()
        while True:
            x_new = np.clip(x - t * g, lo, hi)
            f_new = f(x_new)
            if f_new <= fx + opts.armijo * g @ (x_new - x) or t < 1e-16:
                break
            t /= 2
        step = t
        moved = np.max(np.abs(x_new - x))
        gained = fx - f_new
        x, fx = x_new, f_new
        path.append(x.copy())
        if moved < opts.x_tol or 0 <= gained < opts.f_tol:
            converged = True
            break
    return x, fx, it, converged, path


def exhaustive_scan(scenario, plan, pilot_snr: float | None = None, p_bounds=(1e-7, 10.0)):
    """Reference solution: every divisor of M, each with its own 1-D pilot optimization.

    Uses a log-spaced grid to bracket and scipy's bounded Brent search to refine,
    so it shares no search code with :func:`optimize_joint`.
    Returns (n, p_pilot, energy).
    """
    best = None
    lo, hi = math.log(p_bounds[0]), math.log(p_bounds[1])
    grid = np.linspace(lo, hi, 81)
    for N in feasible_subarrays(scenario.M):
        if pilot_snr is not None:
            P = pilot_power_for_snr(scenario, N, pilot_snr)
            E = energy_relaxed(scenario, plan, N, P)
        else:
            vals = [energy_relaxed(scenario, plan, N, math.exp(x)) for x in grid]
            k = int(np.argmin(vals))
            a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
            res = minimize_scalar(
                lambda x: energy_relaxed(scenario, plan, N, math.exp(x)),
                bounds=(a, b), method="bounded", options={"xatol": 1e-10},
            )
            P, E = math.exp(res.x), float(res.fun)
            E0 = energy_relaxed(scenario, plan, N, 0.0)
            if E0 < E:
                P, E = 0.0, E0
        if best is None or E < best[2]:
            best = (N, P, E)
    return best


def optimize_joint(scenario: ChannelScenario, plan: TransmissionPlan, options: JointOptions | None = None) -> OptimizationResult:
    """Minimize the energy over subarray count and pilot power.

    Steepest descent runs on the continuous relaxation in (ln N, ln P_pilot)
    with N confined to [1, M]. The relaxed optimum is then rounded to the
    feasible divisors of M just below and above, the pilot power is re-tuned
    for each by golden-section search, and the cheaper one is kept. If an
    adjacent divisor is cheaper still, the search steps there and repeats.
    """
    opts = options or JointOptions()
    M = scenario.M
    divisors = feasible_subarrays(M)
    n0 = opts.n_init if opts.n_init is not None else max(M / 2, 1.0)
    plo, phi = math.log(opts.p_bounds[0]), math.log(opts.p_bounds[1])

    if opts.pilot_snr is None:
        def f(x):
            return math.log(energy_relaxed(scenario, plan, math.exp(x[0]), math.exp(x[1])))
        x0 = [math.log(n0), math.log(opts.p_init)]
        lo, hi = np.array([0.0, plo]), np.array([math.log(M), phi])
    else:
        def pilot(N):
            return pilot_power_for_snr(scenario, N, opts.pilot_snr)

        def f(x):
            N = math.exp(x[0])
            return math.log(energy_relaxed(scenario, plan, N, pilot(N)))
        x0 = [math.log(n0)]
        lo, hi = np.array([0.0]), np.array([math.log(M)])

    x, _, iters, converged, path = _projected_descent(f, x0, lo, hi, opts)
    if not converged:
        log.warning("steepest descent stopped after %d iterations without converging", iters)

    n_cont = math.exp(x[0])
    if opts.pilot_snr is None:
        p_cont = math.exp(x[1])
        trajectory = [(math.exp(v[0]), math.exp(v[1]), math.exp(f(v))) for v in path]
    else:
        p_cont = pilot(n_cont)
        trajectory = [(math.exp(v[0]), pilot(math.exp(v[0])), math.exp(f(v))) for v in path]

    cache = {}

    def evaluate(N):
        if N not in cache:
            if opts.pilot_snr is None:
                P, E = optimal_pilot_power(scenario, plan, N, opts.p_bounds, opts.pilot_tol)
            else:
                P = pilot(N)
                E = energy_relaxed(scenario, plan, N, P)
            cache[N] = (E, N, P)
        return cache[N]

    E, N, P = min(evaluate(n) for n in _neighbours(divisors, n_cont))
    # walk along adjacent divisors while that helps, so n_star beats both neighbours
    while True:
        k = divisors.index(N)
        best = min(evaluate(n) for n in divisors[max(k - 1, 0):k + 2])
        if best[1] == N:
            break
        E, N, P = best

    result = OptimizationResult(
        n_star=N,
        p_pilot_star=P,
        energy_star=E,
        n_continuous=n_cont,
        p_pilot_continuous=p_cont,
        iterations=iters,
        converged=converged,
        breakdown=energy(scenario, plan, N, P),
        trajectory=trajectory,
    )
    if opts.verify:
        n_o, _, e_o = exhaustive_scan(scenario, plan, opts.pilot_snr, opts.p_bounds)
        result.oracle_n, result.oracle_energy = n_o, e_o
        if E > e_o * 1.005:
            log.warning("optimizer energy %.6g J exceeds divisor-scan optimum %.6g J", E, e_o)
    return result


def payload_sweep(
    scenario: ChannelScenario,
    plan: TransmissionPlan,
    L_values,
    options: JointOptions | None = None,
    workers: int = 1,
) -> list[PayloadPoint]:
    """Joint optimum for each payload length.

    ``pilot_energy`` counts everything spent during the pilot phase,
    (N + 1)(P_pilot + P_circuit) / B.
    """
    L_values = list(L_values)
    if not L_values:
        raise ValueError("L_values is empty")

    def solve(L):
        res = optimize_joint(scenario, plan.with_payload(L), options)
        b = res.breakdown
        return PayloadPoint(
            L=L,
            n_star=res.n_star,
            p_pilot_star=res.p_pilot_star,
            p_data=b.p_data_used,
            pilot_energy=(res.n_star + 1) * (res.p_pilot_star + plan.p_circuit) / scenario.B,
            energy=b.total,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(solve, L_values))
    return [solve(L) for L in L_values]


# --- perfect CSI, Jensen-bound SNR, no circuit power -------------------------------------


@dataclass
class CaseReport:
    case: str
    ratio: float  # sqrt(rho / (alpha beta M))
    threshold_single: float  # E'(1) < 0  <=>  ratio < threshold_single
    threshold_all: float  # E'(M) > 0  <=>  ratio > threshold_all


def energy_perfect_csi(scenario: ChannelScenario, plan: TransmissionPlan, N) -> float:
    """E(N) with pilot power fixed by gamma_p and data power by the Jensen bound."""
    if not N > 0:
        raise ValueError(f"N must be positive, got {N}")
    a = scenario.cascade_gain
    s2, B = scenario.sigma2, scenario.B
    pilot = s2 * plan.gamma_p * N / (B * a)
    data = s2 * plan.gamma_d * plan.L / B / (math.pi / 4 * (math.sqrt(scenario.rho) + math.sqrt(a * N)) ** 2)
    return pilot + data


def derivative_perfect_csi(scenario: ChannelScenario, plan: TransmissionPlan, N) -> tuple[float, float]:
    """First and second derivative of :func:`energy_perfect_csi` in N."""
    if not N > 0:
        raise ValueError(f"N must be positive, got {N}")
    a = scenario.cascade_gain
    s2, B = scenario.sigma2, scenario.B
    sa, sr = math.sqrt(a), math.sqrt(scenario.rho)
    root = sr + math.sqrt(a * N)
    c = s2 * plan.gamma_d * plan.L / B
    d1 = s2 * plan.gamma_p / (B * a) - c * sa / (math.pi / 4 * root**3 * math.sqrt(N))
    d2 = c * sa * (sr + 4 * math.sqrt(a * N)) / (math.pi / 2 * root**4 * N**1.5)
    return d1, d2


def classify_case(scenario: ChannelScenario, plan: TransmissionPlan) -> CaseReport:
    """Where the minimum of the convex E(N) sits: single_subarray, interior or all_individual.

    Compares sqrt(rho / (alpha beta M)) with the two thresholds equivalent to
    E'(1) < 0 and E'(M) > 0.
    """
    M = scenario.M
    ratio = math.sqrt(scenario.rho / scenario.cascade_gain)
    c = 4 * plan.gamma_d * plan.L / (math.pi * plan.gamma_p)
    t1 = c ** (1 / 3) - 1
    tM = (c / math.sqrt(M)) ** (1 / 3) - math.sqrt(M)
    if not ratio < t1:
        case = "single_subarray"
    elif ratio > tM:
        case = "interior"
    else:
        case = "all_individual"
    return CaseReport(case, ratio, t1, tM)


def optimize_special_case(scenario: ChannelScenario, plan: TransmissionPlan, max_iter: int = 60) -> OptimizationResult:
    """Minimize :func:`energy_perfect_csi` over feasible N.

    The sign of E' at N = 1 and N = M selects the case; in the interior case the
    root of E' is bracketed by bisection and the two nearest divisors of M are
    compared.
    """
    if not scenario.cascade_gain > 0:
        raise ValueError("alpha * beta * M must be positive")
    M = scenario.M
    d1_lo = derivative_perfect_csi(scenario, plan, 1)[0]
    d1_hi = derivative_perfect_csi(scenario, plan, M)[0]

    def pilot(N):
        return pilot_power_for_snr(scenario, N, plan.gamma_p)

    def finish(N, n_cont, iters, case):
        return OptimizationResult(
            n_star=N,
            p_pilot_star=pilot(N),
            energy_star=energy_perfect_csi(scenario, plan, N),
            n_continuous=n_cont,
            p_pilot_continuous=pilot(n_cont),
            iterations=iters,
            case=case,
        )

    if d1_lo >= 0:
        return finish(1, 1.0, 0, "single_subarray")
    if d1_hi <= 0:
        return finish(M, float(M), 0, "all_individual")

    lo, hi = 1.0, float(M)
    target = 1e-3 * abs(d1_lo)
    it = 0
    mid = (lo + hi) / 2
    for it in range(1, max_iter + 1):
        mid = (lo + hi) / 2
        d = derivative_perfect_csi(scenario, plan, mid)[0]
        if d < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 0.5 and abs(d) < target:
            break
    root = mid
    best = min(
        _neighbours(feasible_subarrays(M), root),
        key=lambda n: energy_perfect_csi(scenario, plan, n),
    )
    return finish(best, root, it, "interior")
