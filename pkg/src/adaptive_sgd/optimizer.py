"""SGD drivers: fixed step and adaptive step size control, traces and ensembles."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .controller import (
    MAX_SHRINKS,
    ControllerState,
    Limits,
    Phase,
    PhasePolicy,
    accept_step,
    line_search,
    phase_of,
    propose_step,
)
from .errors import ContractError, DegenerateDirection, InvalidSpec, OracleUnavailable, RunError
from .estimators import observe_grad_norm, observe_lipschitz, observe_variance
from .hilbert import InnerProductOperator, Point, axpy, dual_pair, primal_norm_sq, riesz_inverse
from .sop import SampleStream, Sop, make_problem, problem_from_dict, problem_to_dict

__all__ = [
    "RunConfig",
    "IterationRecord",
    "Trace",
    "EnsembleResult",
    "sgd_fixed",
    "sgd_adaptive",
    "run",
    "run_ensemble",
    "aggregate_traces",
    "initial_point",
    "make_preconditioner",
    "TRACE_COLUMNS",
    "ORACLE_COLUMNS",
    "AGGREGATE_COLUMNS",
]


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run.

    ``alpha`` is the constant step in ``fixed`` mode and the first trial step
    of the initial line search in ``adaptive`` mode.
    """

    problem: object
    mode: str = "adaptive"
    alpha: float = 1.0
    iterations: int = 100_000
    eta: float = 0.7
    eta_alpha: float = 0.5
    switch_fraction: float = 0.0
    smooth_alpha: bool = True
    seed: int = 0
    trace_every: int = 1
    preconditioner: Optional[tuple] = None
    limits: Limits = field(default_factory=Limits)
    max_shrinks: int = MAX_SHRINKS

    def validate(self):
        if isinstance(self.problem, dict):
            raise InvalidSpec("problem must be a parsed spec; use RunConfig.from_dict")
        if self.mode not in ("adaptive", "fixed"):
            raise InvalidSpec(f"mode must be 'adaptive' or 'fixed', got {self.mode!r}")
        if self.mode == "fixed" and not self.alpha >= 0:
            raise InvalidSpec("fixed mode needs alpha >= 0")
        if self.mode == "adaptive" and not self.alpha > 0:
            raise InvalidSpec("adaptive mode needs an initial alpha > 0")
        if not (isinstance(self.iterations, int) and self.iterations >= 1):
            raise InvalidSpec("iterations must be an integer >= 1")
        if not 0.5 <= self.eta < 1:
            raise InvalidSpec("eta must lie in [1/2, 1)")
        if not 0 < self.eta_alpha < 1:
            raise InvalidSpec("eta_alpha must lie in (0, 1)")
        if not 0 <= self.switch_fraction <= 1:
            raise InvalidSpec("switch_fraction must lie in [0, 1]")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise InvalidSpec("seed must be a non-negative integer")
        if not (isinstance(self.trace_every, int) and self.trace_every >= 1):
            raise InvalidSpec("trace_every must be a positive integer")
        return self

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["problem"] = problem_to_dict(self.problem)
        d["limits"] = asdict(self.limits)
        if self.preconditioner is not None:
            d["preconditioner"] = [list(r) for r in self.preconditioner]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise InvalidSpec(f"unknown run fields {sorted(unknown)}")
        if "problem" not in d:
            raise InvalidSpec("run config needs a 'problem' block")
        d["problem"] = problem_from_dict(d["problem"])
        if d.get("limits") is not None:
            try:
                d["limits"] = Limits(**d["limits"])
            except (TypeError, ContractError) as exc:
                raise InvalidSpec(f"invalid limits: {exc}") from exc
        else:
            d.pop("limits", None)
        if d.get("preconditioner") is not None:
            d["preconditioner"] = tuple(tuple(float(x) for x in row) for row in d["preconditioner"])
        for key in ("alpha", "eta", "eta_alpha", "switch_fraction"):
            if key in d and isinstance(d[key], int) and not isinstance(d[key], bool):
                d[key] = float(d[key])
        return cls(**d).validate()

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


@dataclass(frozen=True)
class IterationRecord:
    """One row of a trace.

    ``alpha_k``, ``f_curr = f_xi_k(w_k)``, ``f_next = f_xi_k(w_{k+1})`` and
    ``grad_norm_sq`` describe the step taken at iteration k; the estimator
    columns hold the values after the iteration's updates; ``D_k`` and
    ``dist_sq`` are evaluated at w_k.
    """

    k: int
    alpha_k: float
    f_curr: float
    f_next: float
    grad_norm_sq: float
    L_est: float
    var_est: float
    g_est: float
    accepted: bool
    phase: str
    D_k: Optional[float] = None
    dist_sq: Optional[float] = None


TRACE_COLUMNS = tuple(f.name for f in fields(IterationRecord))
ORACLE_COLUMNS = ("D_k", "dist_sq")
AGGREGATE_COLUMNS = ("D_k", "dist_sq", "alpha_k", "L_est", "var_est", "g_est")


class Trace:
    """Ordered iteration records plus a run summary, stored column-wise."""

    def __init__(self, config, rows, summary, has_oracles):
        self.config = config
        self.has_oracles = has_oracles
        self.summary = summary
        self.columns = {}
        names = self.column_names
        if rows:
            cols = list(zip(*rows))
        else:
            cols = [[] for _ in TRACE_COLUMNS]
        for name, col in zip(TRACE_COLUMNS, cols):
            if name not in names:
                continue
            if name == "phase":
                self.columns[name] = np.array(col, dtype=object)
            elif name == "accepted":
                self.columns[name] = np.array(col, dtype=bool)
            elif name == "k":
                self.columns[name] = np.array(col, dtype=np.int64)
            else:
                self.columns[name] = np.array(col, dtype=np.float64)

    @property
    def column_names(self):
        if self.has_oracles:
            return TRACE_COLUMNS
        return tuple(c for c in TRACE_COLUMNS if c not in ORACLE_COLUMNS)

    def __len__(self):
        return len(self.columns["k"])

    def column(self, name):
        return self.columns[name]

    @property
    def records(self):
        names = self.column_names
        out = []
        for i in range(len(self)):
            vals = {n: self.columns[n][i] for n in names}
            vals["k"] = int(vals["k"])
            vals["accepted"] = bool(vals["accepted"])
            out.append(IterationRecord(**vals))
        return out

    def to_csv(self, path_or_buf=None):
        """Header row plus one row per record; floats with 17 significant digits."""
        buf = io.StringIO()
        names = self.column_names
        buf.write(",".join(names) + "\n")
        cols = [self.columns[n] for n in names]
        for i in range(len(self)):
            parts = []
            for n, c in zip(names, cols):
                v = c[i]
                if n == "k":
                    parts.append(str(int(v)))
                elif n == "accepted":
                    parts.append("1" if v else "0")
                elif n == "phase":
                    parts.append(str(v))
                else:
                    parts.append(_fmt(v))
            buf.write(",".join(parts) + "\n")
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path, config=None):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        has_oracles = "D_k" in header
        out = []
        for r in rows:
            vals = dict(zip(header, r))
            out.append(tuple(
                int(vals["k"]) if n == "k"
                else vals[n] == "1" if n == "accepted"
                else vals[n] if n == "phase"
                else float(vals[n]) if n in vals
                else None
                for n in TRACE_COLUMNS
            ))
        return cls(config, out, {}, has_oracles)


def _fmt(v):
    return "%.17g" % v


def initial_point(n, seed):
    """Seeded standard Gaussian vector scaled to unit Euclidean norm."""
    gen = np.random.default_rng(np.random.SeedSequence([int(seed), 0x30]))
    v = gen.standard_normal(n)
    return Point(v / np.linalg.norm(v))


def make_preconditioner(config: RunConfig, n):
    if config.preconditioner is None:
        return InnerProductOperator.identity(n)
    H = InnerProductOperator.from_matrix(np.array(config.preconditioner))
    if H.n != n:
        raise InvalidSpec(f"preconditioner has size {H.n}, problem has n={n}")
    return H


class _Oracles:
    def __init__(self, sop, H):
        try:
            self.w_star = sop.minimizer()
            self.f_star = sop.mean_value(self.w_star)
            self.available = True
        except OracleUnavailable:
            self.available = False
        self.sop = sop
        self.H = H

    def __call__(self, w):
        if not self.available:
            return None, None
        D = self.sop.mean_value(w) - self.f_star
        return D, primal_norm_sq(self.H, w - self.w_star)


def sgd_fixed(sop: Sop, H: InnerProductOperator, alpha: float, w0: Point, K: int,
              stream: SampleStream, trace_every: int = 1, config=None) -> Trace:
    """Plain SGD, w_{k+1} = w_k - alpha H^{-1} f'_xi_k(w_k), for k = 0..K-1."""
    if alpha < 0:
        raise ContractError("alpha must be non-negative")
    oracle = _Oracles(sop, H)
    rows = []
    w = w0
    nan = math.nan
    for k in range(K):
        sample = stream.draw(sop)
        f_curr, d = sop.value_and_derivative(sample, w)
        grad = riesz_inverse(H, d)
        gn = dual_pair(d, grad)
        try:
            w_next = axpy(w, -alpha, grad)
        except ContractError as exc:
            raise RunError(f"non-finite iterate at k={k}", k=k) from exc
        if k % trace_every == 0 or k == K - 1:
            f_next = sop.value(sample, w_next)
            D, dist = oracle(w)
            rows.append((k, alpha, f_curr, f_next, gn, nan, nan, nan, True, "fixed", D, dist))
        w = w_next
    D, dist = oracle(w)
    summary = {"iterations": K, "final_D": D, "final_dist_sq": dist, "rejections": 0,
               "line_searches": 0, "line_search_trials": 0}
    return Trace(config, rows, summary, oracle.available)


def sgd_adaptive(sop: Sop, H: InnerProductOperator, config: RunConfig, stream: SampleStream = None,
                 w0: Point = None) -> Trace:
    """SGD with adaptive step size control.

    Iteration 0 is a line search on the first samples; it sets L = 1/alpha_0,
    var = 0 and g = ||f'_xi_0(w_0)||^2. Iterations 1..K then take the SGD step,
    reject it if the sampled objective increased (line search next time), and
    otherwise update the L, variance and gradient-norm estimates and the step.
    """
    K = config.iterations
    if stream is None:
        stream = SampleStream(config.seed)
    if w0 is None:
        w0 = initial_point(sop.n, config.seed)
    policy = PhasePolicy(config.switch_fraction)
    oracle = _Oracles(sop, H)
    every = config.trace_every
    rows = []
    w = w0
    n_rejected = n_ls = ls_trials = 0

    ls = line_search(sop, H, config.alpha, w, config.eta_alpha, stream, config.max_shrinks)
    n_ls += 1
    ls_trials += ls.trials
    state = ControllerState.initial(ls.alpha, ls.grad_norm_sq, config.eta, config.limits, config.smooth_alpha)
    state.phase = phase_of(0, K, policy)
    D, dist = oracle(w)
    rows.append((0, ls.alpha, ls.f_curr, ls.f_next, ls.grad_norm_sq, state.L.value, state.var.value,
                 state.g.value, True, state.phase.value, D, dist))
    w = ls.w_next
    prev_f_next = ls.f_next
    cache_valid = False

    for k in range(1, K + 1):
        state.k = k
        state.phase = phase_of(k, K, policy)
        record = k % every == 0 or k == K
        if state.line_search_pending:
            ls = line_search(sop, H, state.alpha.value, w, config.eta_alpha, stream, config.max_shrinks)
            n_ls += 1
            ls_trials += ls.trials
            state.line_search_pending = False
            alpha_k, f_curr, f_next, gn, w_next = ls.alpha, ls.f_curr, ls.f_next, ls.grad_norm_sq, ls.w_next
            state.alpha.value = state.limits.clamp_alpha(alpha_k)
            skip_var = True
            from_ls = True
        else:
            sample = stream.draw(sop)
            f_curr, d = sop.value_and_derivative(sample, w)
            grad = riesz_inverse(H, d)
            gn = dual_pair(d, grad)
            alpha_k = state.alpha.value
            try:
                w_next = axpy(w, -alpha_k, grad)
                f_next = sop.value(sample, w_next)
            except ContractError:
                w_next, f_next = None, math.inf
            if not accept_step(f_curr, f_next):
                n_rejected += 1
                state.line_search_pending = True
                cache_valid = False
                if record:
                    D, dist = oracle(w)
                    rows.append((k, alpha_k, f_curr, f_next, gn, state.L.value, state.var.value,
                                 state.g.value, False, state.phase.value, D, dist))
                continue
            skip_var = not cache_valid
            from_ls = False

        if not skip_var:
            state.var.update(observe_variance(f_curr, prev_f_next, state.last_alpha), k)
        try:
            state.L.update(observe_lipschitz(f_next, f_curr, alpha_k, gn), k)
            state.L.value = state.limits.clamp_L(state.L.value)
        except DegenerateDirection:
            pass
        state.g.update(observe_grad_norm(gn), k)
        propose_step(state)

        if record:
            D, dist = oracle(w)
            rows.append((k, alpha_k, f_curr, f_next, gn, state.L.value, state.var.value,
                         state.g.value, True, state.phase.value, D, dist))
        prev_f_next = f_next
        state.last_alpha = alpha_k
        cache_valid = not from_ls
        w = w_next

    D, dist = oracle(w)
    summary = {"iterations": K, "final_D": D, "final_dist_sq": dist, "rejections": n_rejected,
               "line_searches": n_ls, "line_search_trials": ls_trials,
               "final_alpha": state.alpha.value, "final_L": state.L.value}
    trace = Trace(config, rows, summary, oracle.available)
    trace.final_point = w
    return trace


def run(config: RunConfig, sop: Sop = None) -> Trace:
    """Execute one configured run (problem built from the config unless given)."""
    config.validate()
    if sop is None:
        sop = make_problem(config.problem)
    H = make_preconditioner(config, sop.n)
    stream = SampleStream(config.seed)
    w0 = initial_point(sop.n, config.seed)
    if config.mode == "fixed":
        return sgd_fixed(sop, H, config.alpha, w0, config.iterations, stream, config.trace_every, config)
    return sgd_adaptive(sop, H, config, stream, w0)


@dataclass
class EnsembleResult:
    traces: dict
    failures: list
    aggregate: dict

    @property
    def seeds(self):
        return sorted(self.traces)

    def aggregate_csv(self, path_or_buf=None):
        agg = self.aggregate
        names = ["k"] + [c for c in agg if c != "k"]
        buf = io.StringIO()
        buf.write(",".join(names) + "\n")
        for i in range(len(agg["k"])):
            buf.write(",".join(str(int(agg["k"][i])) if n == "k" else _fmt(agg[n][i]) for n in names) + "\n")
        text = buf.getvalue()
        if path_or_buf is not None:
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(text)
        return text


def _safe_log10(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log10(x)
    out[~(x > 0)] = np.nan
    return out


def aggregate_traces(traces):
    """Per-k arithmetic mean, and mean/std of log10, across traces.

    Non-positive values are excluded from the log statistics.
    """
    traces = list(traces)
    if not traces:
        return {"k": np.array([], dtype=np.int64)}
    k = traces[0].column("k")
    for t in traces[1:]:
        if not np.array_equal(t.column("k"), k):
            raise ContractError("traces are recorded on different iteration grids")
    out = {"k": k}
    for name in AGGREGATE_COLUMNS:
        if name not in traces[0].columns:
            continue
        M = np.stack([t.column(name) for t in traces])
        logs = _safe_log10(M)
        with np.errstate(invalid="ignore"), _quiet():
            out[f"{name}_mean"] = M.mean(axis=0)
            # moments of deviations from a reference trace: identical replicas give exactly 0
            ref = np.nanmax(logs, axis=0)
            ref = np.where(np.isfinite(logs[0]), logs[0], ref)
            dev = logs - ref
            m = np.nanmean(dev, axis=0)
            out[f"{name}_log10_mean"] = ref + m
            out[f"{name}_log10_std"] = np.sqrt(np.maximum(np.nanmean(dev * dev, axis=0) - m * m, 0.0))
    return out


class _quiet:
    def __enter__(self):
        import warnings
        self._cm = warnings.catch_warnings()
        self._cm.__enter__()
        warnings.simplefilter("ignore", RuntimeWarning)

    def __exit__(self, *exc):
        return self._cm.__exit__(*exc)


def _run_one(config):
    try:
        return config.seed, run(config), None
    except Exception as exc:  # reported per seed
        return config.seed, None, f"{type(exc).__name__}: {exc}"


def run_ensemble(config: RunConfig, n_seeds: int, jobs: int = 1, seeds=None) -> EnsembleResult:
    """Independent replicas with seeds ``config.seed + i`` (or the given seeds)."""
    if n_seeds < 1:
        raise ContractError("n_seeds must be >= 1")
    if seeds is None:
        seeds = [config.seed + i for i in range(n_seeds)]
    configs = [config.with_seed(s) for s in seeds]
    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, configs))
    else:
        results = [_run_one(c) for c in configs]
    traces = {s: t for s, t, err in results if t is not None}
    failures = [(s, err) for s, t, err in results if err is not None]
    agg = aggregate_traces(traces[s] for s in sorted(traces))
    return EnsembleResult(traces, failures, agg)
