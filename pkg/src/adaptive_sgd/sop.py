"""Stochastic optimization problems: samplers, evaluators and oracles.

A :class:`Sop` couples a sampler of random payloads with value and
derivative evaluators of the sampled functions. Concrete families:

* :class:`QuadraticSop` -- random quadratics with a prescribed mean spectrum,
* :class:`QuadraticAtomsSop` -- finitely many quadratics with uniform weights
  (single-atom deterministic problems and the rotation pair),
* :class:`ParetoSop` -- a diagonal quadratic with a heavy-tailed curvature,
* :class:`QuarticPairSop` -- a nonconvex two-atom finite sum used as a smoke test.

All randomness for iterations flows through :class:`SampleStream`, which is
counter based: sample ``i`` of stream ``key`` can be regenerated on its own.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from .errors import ContractError, InvalidSpec, OracleUnavailable
from .hilbert import Covector, InnerProductOperator, Point

__all__ = [
    "Sample",
    "SampleStream",
    "Sop",
    "QuadraticSopSpec",
    "RotationPairSpec",
    "ParetoSpec",
    "QuarticPairSpec",
    "QuadraticSop",
    "QuadraticAtomsSop",
    "ParetoSop",
    "QuarticPairSop",
    "quadratic_make",
    "quadratic_sample",
    "rotation_pair_make",
    "pareto_make",
    "quartic_pair_make",
    "single_atom_quadratic",
    "eval_value",
    "eval_derivative",
    "exact_variance",
    "monte_carlo_moments",
    "min_sampled_eigenvalue",
    "problem_from_dict",
    "problem_to_dict",
    "make_problem",
]


# --------------------------------------------------------------------------
# sampling


@dataclass(frozen=True, eq=False)
class Sample:
    """One draw of xi: the family payload plus the stream position it came from."""

    payload: Any
    key: int
    index: int


class SampleStream:
    """Counter-based stream of samples.

    Sample ``i`` is drawn from a Philox generator keyed by ``key`` with its
    counter positioned at block ``i``, so any sample can be replayed without
    regenerating its predecessors.
    """

    def __init__(self, key):
        key = int(key)
        if key < 0:
            raise ContractError("stream key must be non-negative")
        self.key = key
        self._bitgen = np.random.Philox(key=key)
        self._gen = np.random.Generator(self._bitgen)
        self._key_words = self._bitgen.state["state"]["key"].copy()
        self.index = 0

    def generator_at(self, index):
        self._bitgen.state = {
            "bit_generator": "Philox",
            "state": {
                "counter": np.array([0, 0, index, 0], dtype=np.uint64),
                "key": self._key_words,
            },
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        return self._gen

    def draw(self, sop):
        i = self.index
        self.index += 1
        return Sample(sop.draw_payload(self.generator_at(i)), self.key, i)

    def replay(self, sop, index):
        return Sample(sop.draw_payload(self.generator_at(index)), self.key, index)


# --------------------------------------------------------------------------
# base class


def _as_array(w):
    if isinstance(w, Point):
        return w.entries
    raise ContractError(f"expected a Point, got {type(w).__name__}")


class Sop:
    """Base class for stochastic optimization problems over R^n.

    Subclasses implement :meth:`draw_payload`, :meth:`_value_grad` and,
    where available, the analytic oracles. Oracles that a family does not
    provide raise :class:`OracleUnavailable`.
    """

    n: int
    family = "abstract"

    # -- sampling and evaluation ------------------------------------------

    def draw_payload(self, gen):
        raise NotImplementedError

    def sample(self, stream: SampleStream) -> Sample:
        return stream.draw(self)

    def _value_grad(self, payload, w):
        """Return (f(w), f'(w)) as (float, ndarray) for a raw array w."""
        raise NotImplementedError

    def _check(self, w):
        a = _as_array(w)
        if a.shape[0] != self.n:
            raise ContractError(f"dimension mismatch: problem has n={self.n}, point has {a.shape[0]}")
        return a

    def value(self, sample: Sample, w: Point) -> float:
        return float(self._value_grad(sample.payload, self._check(w))[0])

    def derivative(self, sample: Sample, w: Point) -> Covector:
        return Covector(self._value_grad(sample.payload, self._check(w))[1])

    def value_and_derivative(self, sample: Sample, w: Point):
        f, d = self._value_grad(sample.payload, self._check(w))
        return float(f), Covector(d)

    # -- batched draws for Monte-Carlo oracles ------------------------------

    def draw_batch(self, gen, size):
        return [self.draw_payload(gen) for _ in range(size)]

    def derivatives_batch(self, batch, w):
        a = self._check(w)
        return np.stack([self._value_grad(p, a)[1] for p in batch])

    # -- analytic oracles --------------------------------------------------

    def mean_value(self, w: Point) -> float:
        raise OracleUnavailable(f"{self.family}: no mean-value oracle")

    def mean_derivative(self, w: Point) -> Covector:
        raise OracleUnavailable(f"{self.family}: no mean-derivative oracle")

    def minimizer(self) -> Point:
        raise OracleUnavailable(f"{self.family}: no minimizer oracle")

    def exact_variance(self, w: Point, H: InnerProductOperator | None = None) -> float:
        raise OracleUnavailable(f"{self.family}: no exact variance oracle")

    def noise_at_minimizer(self, H: InnerProductOperator | None = None) -> float:
        """E ||f'_xi(w*)||^2 in X*."""
        raise OracleUnavailable(f"{self.family}: no noise-at-minimizer oracle")

    @property
    def strong_convexity(self) -> float:
        raise OracleUnavailable(f"{self.family}: strong convexity of the mean unknown")

    @property
    def smoothness(self) -> float:
        raise OracleUnavailable(f"{self.family}: smoothness of the mean unknown")

    def sample_smoothness(self, sample: Sample) -> float:
        """L_xi of one sampled function (Euclidean geometry)."""
        raise OracleUnavailable(f"{self.family}: no per-sample smoothness oracle")

    def smoothness_moments(self, n_probe=1000, seed=None):
        """Return (E[L_xi^2], Lmax); exact where possible, else from probe samples."""
        raise OracleUnavailable(f"{self.family}: no per-sample smoothness oracle")

    @property
    def has_oracles(self) -> bool:
        try:
            self.minimizer()
            self.mean_value(self.minimizer())
        except OracleUnavailable:
            return False
        return True

    def optimal_value(self) -> float:
        return self.mean_value(self.minimizer())


def _variance_from_derivatives(D, mean, H):
    dev = D - mean
    if H is None or H.is_identity:
        return np.einsum("ij,ij->i", dev, dev)
    return np.einsum("ij,ij->i", dev, H.solve(dev.T).T)


def _norm_sq_rows(D, H):
    if H is None or H.is_identity:
        return np.einsum("ij,ij->i", D, D)
    return np.einsum("ij,ij->i", D, H.solve(D.T).T)


def _dual_sq(d, H):
    if H is None or H.is_identity:
        return float(d @ d)
    return float(d @ H.solve(d))


# --------------------------------------------------------------------------
# specs


def _require(cond, msg):
    if not cond:
        raise InvalidSpec(msg)


def _is_int(x):
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


@dataclass(frozen=True)
class QuadraticSopSpec:
    n: int
    mu: float
    L: float
    sigma_A: float
    sigma_b: float
    seed: int

    def validate(self):
        _require(_is_int(self.n) and self.n >= 2, f"n must be an integer >= 2, got {self.n!r}")
        _require(0 < self.mu <= self.L, f"need 0 < mu <= L, got mu={self.mu}, L={self.L}")
        _require(math.isfinite(self.L), "L must be finite")
        _require(self.sigma_A >= 0 and self.sigma_b >= 0, "noise levels must be non-negative")
        _require(_is_int(self.seed) and self.seed >= 0, "seed must be a non-negative integer")
        return self


@dataclass(frozen=True)
class RotationPairSpec:
    mu: float

    def validate(self):
        _require(0 < self.mu <= 0.5, f"rotation pair needs 0 < mu <= 1/2, got {self.mu}")
        return self


@dataclass(frozen=True)
class ParetoSpec:
    mu: float
    eps: float
    seed: int

    def validate(self):
        _require(0 < self.mu < 1, f"Pareto family needs mu in (0, 1), got {self.mu}")
        _require(self.eps > 0, f"eps must be positive, got {self.eps}")
        _require(_is_int(self.seed) and self.seed >= 0, "seed must be a non-negative integer")
        return self


@dataclass(frozen=True)
class QuarticPairSpec:
    n: int
    shift: float

    def validate(self):
        _require(_is_int(self.n) and self.n >= 1, "n must be a positive integer")
        _require(self.shift > 0, "shift must be positive")
        return self


# --------------------------------------------------------------------------
# random quadratics


def quadratic_spectrum(n, mu, L):
    i = np.arange(n, dtype=np.float64)
    return mu + (i / (n - 1)) ** 2 * (L - mu)


def random_orthogonal(n, gen):
    """Q factor of a Gaussian matrix with the sign of diag(R) fixed positive."""
    q, r = np.linalg.qr(gen.standard_normal((n, n)))
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


class QuadraticSop(Sop):
    """f_xi(w) = 1/2 w^T (A + W) w + b^T w with E[W] = 0 and E[b] = 0.

    The mean Hessian is A = S^T diag(lambda) S for a random orthogonal S.
    ``W = Xi^T Xi - c I`` with i.i.d. uniform entries of Xi on
    [-sigma_A, sigma_A]; ``c = n sigma_A^2 / 3`` centres it.
    """

    family = "quadratic"

    def __init__(self, spec: QuadraticSopSpec):
        self.spec = spec.validate()
        n = spec.n
        self.n = n
        self.eigenvalues = quadratic_spectrum(n, spec.mu, spec.L)
        gen = np.random.default_rng(np.random.SeedSequence([spec.seed, 0x51]))
        self.S = random_orthogonal(n, gen)
        A = self.S.T @ (self.eigenvalues[:, None] * self.S)
        self.A = 0.5 * (A + A.T)
        self.A.flags.writeable = False
        self.centering = n * spec.sigma_A**2 / 3.0
        self._lmoments = None

    def draw_payload(self, gen):
        n, sa, sb = self.n, self.spec.sigma_A, self.spec.sigma_b
        xi = gen.uniform(-sa, sa, (n, n)) if sa > 0 else None
        b = gen.uniform(-sb, sb, n) if sb > 0 else None
        return xi, b

    def sampled_matrix(self, payload):
        """A_xi = A + Xi^T Xi - c I."""
        xi, _ = payload
        if xi is None:
            return np.array(self.A)
        return self.A + xi.T @ xi - self.centering * np.eye(self.n)

    def _value_grad(self, payload, w):
        xi, b = payload
        Aw = self.A @ w
        if xi is not None:
            Aw = Aw + xi.T @ (xi @ w) - self.centering * w
        f = 0.5 * (w @ Aw)
        if b is not None:
            f += b @ w
            Aw = Aw + b
        return f, Aw

    def draw_batch(self, gen, size):
        n, sa, sb = self.n, self.spec.sigma_A, self.spec.sigma_b
        xi = gen.uniform(-sa, sa, (size, n, n)) if sa > 0 else None
        b = gen.uniform(-sb, sb, (size, n)) if sb > 0 else None
        return xi, b, size

    def derivatives_batch(self, batch, w):
        w = self._check(w)
        xi, b, size = batch
        D = np.broadcast_to(self.A @ w, (size, self.n)).copy()
        if xi is not None:
            D += np.einsum("kij,ki->kj", xi, xi @ w) - self.centering * w
        if b is not None:
            D += b
        return D

    def mean_value(self, w):
        a = self._check(w)
        return 0.5 * float(a @ self.A @ a)

    def mean_derivative(self, w):
        return Covector(self.A @ self._check(w))

    def minimizer(self):
        return Point(np.zeros(self.n))

    def exact_variance(self, w, H=None):
        """Closed form for the Euclidean geometry.

        With v = sigma_A^2/3 and m4 = sigma_A^4/5 (moments of the entries),
        E||W w||^2 = n (m4 + (n-2) v^2) ||w||^2 and E||b||^2 = n sigma_b^2/3.
        """
        if H is not None and not H.is_identity:
            raise OracleUnavailable("closed-form quadratic variance needs the identity geometry")
        a = self._check(w)
        n, sa, sb = self.n, self.spec.sigma_A, self.spec.sigma_b
        v, m4 = sa**2 / 3.0, sa**4 / 5.0
        return float(n * (m4 + (n - 2) * v**2) * (a @ a) + n * sb**2 / 3.0)

    def noise_at_minimizer(self, H=None):
        vb = self.spec.sigma_b**2 / 3.0
        if H is None or H.is_identity:
            return self.n * vb
        return vb * float(np.trace(H.solve(np.eye(self.n))))

    @property
    def strong_convexity(self):
        return float(self.eigenvalues[0])

    @property
    def smoothness(self):
        return float(self.eigenvalues[-1])

    def sample_smoothness(self, sample):
        return float(np.linalg.eigvalsh(self.sampled_matrix(sample.payload))[-1])

    def smoothness_moments(self, n_probe=1000, seed=None):
        """Probe-sample estimates of E[L_xi^2] and max L_xi."""
        if self.spec.sigma_A == 0:
            L = self.smoothness
            return L * L, L
        if seed is None and self._lmoments is not None and self._lmoments[0] == n_probe:
            return self._lmoments[1]
        gen = np.random.default_rng(np.random.SeedSequence([self.spec.seed if seed is None else seed, 0x1A]))
        lam = np.empty(n_probe)
        for i in range(n_probe):
            lam[i] = np.linalg.eigvalsh(self.sampled_matrix(self.draw_payload(gen)))[-1]
        out = (float(np.mean(lam**2)), float(lam.max()))
        if seed is None:
            self._lmoments = (n_probe, out)
        return out


def quadratic_make(spec: QuadraticSopSpec) -> QuadraticSop:
    return QuadraticSop(spec)


def quadratic_sample(sop: QuadraticSop, stream: SampleStream) -> Sample:
    return stream.draw(sop)


# --------------------------------------------------------------------------
# finitely many quadratic atoms


class QuadraticAtomsSop(Sop):
    """Uniform mixture of quadratics f_i(w) = 1/2 w^T A_i w + b_i^T w.

    All expectations are exact finite averages.
    """

    family = "atoms"

    def __init__(self, matrices, vectors=None, name="atoms"):
        mats = [np.array(m, dtype=np.float64) for m in matrices]
        if not mats:
            raise InvalidSpec("need at least one atom")
        n = mats[0].shape[0]
        for m in mats:
            if m.shape != (n, n) or not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, np.abs(m).max())):
                raise InvalidSpec("atom matrices must be symmetric and of equal size")
        if vectors is None:
            vecs = [np.zeros(n) for _ in mats]
        else:
            vecs = [np.array(b, dtype=np.float64) for b in vectors]
            if len(vecs) != len(mats) or any(b.shape != (n,) for b in vecs):
                raise InvalidSpec("one vector of length n per atom required")
        self.n = n
        self.name = name
        self.matrices = np.stack(mats)
        self.vectors = np.stack(vecs)
        self.A = self.matrices.mean(axis=0)
        self.b = self.vectors.mean(axis=0)
        self.atom_smoothness = np.array([np.linalg.eigvalsh(m)[-1] for m in mats])
        eig = np.linalg.eigvalsh(self.A)
        self._mu, self._L = float(eig[0]), float(eig[-1])

    @property
    def n_atoms(self):
        return self.matrices.shape[0]

    def draw_payload(self, gen):
        return int(gen.integers(self.n_atoms))

    def _value_grad(self, i, w):
        Aw = self.matrices[i] @ w
        f = 0.5 * (w @ Aw) + self.vectors[i] @ w
        return f, Aw + self.vectors[i]

    def atom_derivatives(self, w):
        a = self._check(w)
        return self.matrices @ a + self.vectors

    def draw_batch(self, gen, size):
        return gen.integers(self.n_atoms, size=size)

    def derivatives_batch(self, batch, w):
        return self.atom_derivatives(w)[batch]

    def mean_value(self, w):
        a = self._check(w)
        return 0.5 * float(a @ self.A @ a) + float(self.b @ a)

    def mean_derivative(self, w):
        return Covector(self.A @ self._check(w) + self.b)

    def minimizer(self):
        if self._mu <= 0:
            raise OracleUnavailable("mean Hessian is singular")
        return Point(np.linalg.solve(self.A, -self.b))

    def exact_variance(self, w, H=None):
        D = self.atom_derivatives(w)
        return float(_variance_from_derivatives(D, D.mean(axis=0), H).mean())

    def second_moment(self, w, H=None):
        """E ||f'_xi(w)||^2, exact."""
        return float(_norm_sq_rows(self.atom_derivatives(w), H).mean())

    def noise_at_minimizer(self, H=None):
        return self.second_moment(self.minimizer(), H)

    @property
    def strong_convexity(self):
        return self._mu

    @property
    def smoothness(self):
        return self._L

    def sample_smoothness(self, sample):
        return float(self.atom_smoothness[sample.payload])

    def smoothness_moments(self, n_probe=None, seed=None):
        return float(np.mean(self.atom_smoothness**2)), float(self.atom_smoothness.max())


def rotation_matrices(mu):
    """The pair A_1, A_2 with eigenvalues {mu, 1}, rotated by +/- arcsin(sqrt(mu))."""
    a = math.asin(math.sqrt(mu))
    c2, s2 = math.cos(a) ** 2, math.sin(a) ** 2
    off = 0.5 * (1.0 - mu) * math.sin(2.0 * a)
    d11 = mu * c2 + s2
    d22 = mu * s2 + c2
    A1 = np.array([[d11, off], [off, d22]])
    A2 = np.array([[d11, -off], [-off, d22]])
    return A1, A2


def rotation_pair_make(spec: RotationPairSpec) -> QuadraticAtomsSop:
    spec.validate()
    sop = QuadraticAtomsSop(rotation_matrices(spec.mu), name="rotation")
    sop.family = "rotation"
    sop.spec = spec
    return sop


def single_atom_quadratic(A, b=None) -> QuadraticAtomsSop:
    """Deterministic problem with a single quadratic atom."""
    A = np.atleast_2d(np.array(A, dtype=np.float64))
    sop = QuadraticAtomsSop([A], None if b is None else [b], name="single")
    sop.family = "single"
    return sop


# --------------------------------------------------------------------------
# heavy-tailed Pareto family


class ParetoSop(Sop):
    """f_xi(w) = 1/2 w^T diag(xi, 1) w with xi ~ Pareto(scale=mu, shape=2+eps)."""

    family = "pareto"
    n = 2

    def __init__(self, spec: ParetoSpec):
        self.spec = spec.validate()
        self.scale = spec.mu
        self.shape = 2.0 + spec.eps

    @property
    def xi_mean(self):
        b = self.shape
        return self.scale * b / (b - 1.0)

    @property
    def xi_variance(self):
        b = self.shape
        return self.scale**2 * b / ((b - 2.0) * (b - 1.0) ** 2)

    def draw_payload(self, gen):
        # inverse CDF; 1 - U lies in (0, 1]
        return self.scale * (1.0 - gen.random()) ** (-1.0 / self.shape)

    def _value_grad(self, xi, w):
        d = np.array([xi * w[0], w[1]])
        return 0.5 * (xi * w[0] ** 2 + w[1] ** 2), d

    def draw_batch(self, gen, size):
        return self.scale * (1.0 - gen.random(size)) ** (-1.0 / self.shape)

    def derivatives_batch(self, batch, w):
        a = self._check(w)
        return np.column_stack([batch * a[0], np.full(batch.shape, a[1])])

    def mean_value(self, w):
        a = self._check(w)
        return 0.5 * (self.xi_mean * a[0] ** 2 + a[1] ** 2)

    def mean_derivative(self, w):
        a = self._check(w)
        return Covector(np.array([self.xi_mean * a[0], a[1]]))

    def minimizer(self):
        return Point(np.zeros(2))

    def exact_variance(self, w, H=None):
        a = self._check(w)
        weight = 1.0 if H is None or H.is_identity else float(H.solve(np.array([1.0, 0.0]))[0])
        return self.xi_variance * a[0] ** 2 * weight

    def noise_at_minimizer(self, H=None):
        return 0.0

    @property
    def strong_convexity(self):
        return min(self.xi_mean, 1.0)

    @property
    def smoothness(self):
        return max(self.xi_mean, 1.0)

    def sample_smoothness(self, sample):
        return max(sample.payload, 1.0)

    def smoothness_moments(self, n_probe=None, seed=None):
        # xi is unbounded, so Lmax is infinite; E[max(xi, 1)^2] is finite for shape > 2
        g, b = self.scale, self.shape
        if g >= 1.0:
            m2 = g * g * b / (b - 2.0)
        else:
            # P(xi <= 1) * 1 + E[xi^2; xi > 1]
            m2 = (1.0 - g**b) + b * g**b / (b - 2.0)
        return m2, math.inf


def pareto_make(spec: ParetoSpec) -> ParetoSop:
    return ParetoSop(spec)


# --------------------------------------------------------------------------
# nonconvex smoke problem


class QuarticPairSop(Sop):
    """Two shifted double wells f_i(w) = 1/4 |w - c_i|^4 - 1/2 |w - c_i|^2, c_i = +/- shift e_1."""

    family = "quartic_pair"

    def __init__(self, spec: QuarticPairSpec):
        self.spec = spec.validate()
        self.n = spec.n
        c = np.zeros(spec.n)
        c[0] = spec.shift
        self.centres = np.stack([c, -c])

    def draw_payload(self, gen):
        return int(gen.integers(2))

    def _value_grad(self, i, w):
        r = w - self.centres[i]
        q = r @ r
        return 0.25 * q * q - 0.5 * q, (q - 1.0) * r

    def mean_value(self, w):
        a = self._check(w)
        return 0.5 * sum(self._value_grad(i, a)[0] for i in range(2))

    def mean_derivative(self, w):
        a = self._check(w)
        return Covector(0.5 * sum(self._value_grad(i, a)[1] for i in range(2)))


def quartic_pair_make(spec: QuarticPairSpec) -> QuarticPairSop:
    return QuarticPairSop(spec)


# --------------------------------------------------------------------------
# module-level operations


def eval_value(sop: Sop, s: Sample, w: Point) -> float:
    return sop.value(s, w)


def eval_derivative(sop: Sop, s: Sample, w: Point) -> Covector:
    return sop.derivative(s, w)


def exact_variance(sop: Sop, w: Point, H: InnerProductOperator | None = None) -> float:
    """Var_xi f'_xi(w) = E ||f'_xi(w) - F'(w)||^2_{X*} from the family's exact oracle."""
    return sop.exact_variance(w, H)


@dataclass(frozen=True)
class MonteCarloMoments:
    mean_derivative: np.ndarray
    mean_derivative_stderr: np.ndarray
    second_moment: float
    second_moment_stderr: float
    variance: float
    variance_stderr: float
    n_samples: int


def monte_carlo_moments(sop: Sop, w: Point, n_samples: int, gen=None, H=None, chunk=4096):
    """Monte-Carlo estimates of E f', E||f'||^2 and Var f' at w, with standard errors.

    The variance is measured around the mean-derivative oracle when the family
    has one, otherwise around the sample mean.
    """
    if gen is None:
        gen = np.random.default_rng()
    try:
        centre = sop.mean_derivative(w).entries
    except OracleUnavailable:
        centre = None
    n = sop.n
    s1 = np.zeros(n)
    s2 = np.zeros(n)
    q_sum = q_sq = 0.0
    v_rows = []
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        D = sop.derivatives_batch(sop.draw_batch(gen, m), w)
        s1 += D.sum(axis=0)
        s2 += (D * D).sum(axis=0)
        q = _norm_sq_rows(D, H)
        q_sum += q.sum()
        q_sq += (q * q).sum()
        if centre is not None:
            v_rows.append(_variance_from_derivatives(D, centre, H))
        else:
            v_rows.append(D)
        done += m
    N = float(n_samples)
    mean = s1 / N
    mean_se = np.sqrt(np.maximum(s2 / N - mean**2, 0.0) / N)
    m2 = q_sum / N
    m2_se = math.sqrt(max(q_sq / N - m2 * m2, 0.0) / N)
    if centre is not None:
        v = np.concatenate(v_rows)
    else:
        v = _variance_from_derivatives(np.concatenate(v_rows), mean, H)
    var = float(v.mean())
    var_se = float(v.std() / math.sqrt(N))
    return MonteCarloMoments(mean, mean_se, m2, m2_se, var, var_se, n_samples)


def min_sampled_eigenvalue(sop: QuadraticSop, n_probe=100, seed=0) -> float:
    """Smallest eigenvalue of A_xi over probe samples (PSD diagnostic)."""
    gen = np.random.default_rng(seed)
    return min(float(np.linalg.eigvalsh(sop.sampled_matrix(sop.draw_payload(gen)))[0]) for _ in range(n_probe))


# --------------------------------------------------------------------------
# JSON problem blocks

_SPECS = {
    "quadratic": QuadraticSopSpec,
    "rotation": RotationPairSpec,
    "pareto": ParetoSpec,
    "quartic_pair": QuarticPairSpec,
}

_MAKERS = {
    QuadraticSopSpec: quadratic_make,
    RotationPairSpec: rotation_pair_make,
    ParetoSpec: pareto_make,
    QuarticPairSpec: quartic_pair_make,
}


def problem_from_dict(d):
    d = dict(d)
    family = d.pop("family", None)
    if family not in _SPECS:
        raise InvalidSpec(f"unknown problem family {family!r}; expected one of {sorted(_SPECS)}")
    cls = _SPECS[family]
    fields = set(cls.__dataclass_fields__)
    missing = fields - set(d)
    extra = set(d) - fields
    if missing:
        raise InvalidSpec(f"{family}: missing fields {sorted(missing)}")
    if extra:
        raise InvalidSpec(f"{family}: unknown fields {sorted(extra)}")
    return cls(**d).validate()


def problem_to_dict(spec):
    for family, cls in _SPECS.items():
        if isinstance(spec, cls):
            return {"family": family, **asdict(spec)}
    raise InvalidSpec(f"not a problem spec: {spec!r}")


def make_problem(spec) -> Sop:
    if isinstance(spec, dict):
        spec = problem_from_dict(spec)
    return _MAKERS[type(spec)](spec)
