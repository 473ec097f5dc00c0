"""Noisy objective functions, evaluation budgets and random streams.

An *oracle* here is any object with ``dim``, ``noise_std`` and a noiseless
``value(x)``; noisy samples are ``value(x) + noise_std * z`` with ``z`` drawn
from a :class:`RandomStream`. Three oracles are provided:
:class:`NoisyQuadraticProblem`, :class:`SphereProblem` and
:class:`AxisRestriction` (a one-dimensional slice of another oracle).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, ContractError, GenerationInfeasible, InvariantError

_SEED_MASK = (1 << 64) - 1
_TOL = 1e-12


class RandomStream:
    """Reproducible Gaussian source keyed by ``(seed, stream_id)``.

    Backed by a counter-based Philox generator; the stream id becomes the
    ``spawn_key`` of the seed sequence, so sibling streams are independent
    and any stream can be rebuilt from its key alone.
    """

    def __init__(self, seed: int, stream_id: tuple[int, ...] | int = ()):
        if isinstance(stream_id, (int, np.integer)):
            stream_id = (int(stream_id),)
        self.seed = int(seed) & _SEED_MASK
        self.stream_id = tuple(int(s) for s in stream_id)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.stream_id)
        self.rng = np.random.Generator(np.random.Philox(seq))

    def child(self, *ids: int) -> RandomStream:
        return RandomStream(self.seed, self.stream_id + tuple(ids))

    def normal(self, size: int | tuple[int, ...]) -> np.ndarray:
        return self.rng.standard_normal(size)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id})"


@dataclass
class EvaluationCounter:
    allotted: int
    consumed: int = 0

    def __post_init__(self):
        if self.allotted < 0:
            raise ContractError(f"allotted budget must be nonnegative, got {self.allotted}")

    @property
    def remaining(self) -> int:
        return self.allotted - self.consumed

    def consume(self, n: int = 1) -> None:
        if n < 0:
            raise ContractError("cannot consume a negative number of evaluations")
        if self.consumed + n > self.allotted:
            raise BudgetError(
                f"budget exhausted: {n} evaluation(s) requested, "
                f"{self.remaining} of {self.allotted} left"
            )
        self.consumed += n


def _frozen(a, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=float, ndmin=ndim)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NoisyQuadraticProblem:
    """``x -> x^T A x + B x + C`` observed through Gaussian noise of std ``D``.

    ``c`` is a lower bound on the eigenvalues of ``A`` (defaults to the
    smallest eigenvalue) and ``epsilon`` the required margin of the optimum
    from the unit sphere; both only matter for :meth:`is_theorem_compliant`.
    """

    A: np.ndarray
    B: np.ndarray
    C: float
    D: float
    c: float | None = None
    epsilon: float | None = None
    attempts: int = 1
    _x_star: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = _frozen(self.A, 2)
        B = _frozen(self.B, 1)
        d = B.shape[0]
        if A.shape != (d, d):
            raise ContractError(f"A has shape {A.shape}, expected {(d, d)}")
        if not np.array_equal(A, A.T):
            raise InvariantError("A must be exactly symmetric")
        if not (self.D > 0 and math.isfinite(self.D)):
            raise ContractError(f"noise std D must be positive, got {self.D}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B)) and math.isfinite(self.C)):
            raise ContractError("problem coefficients must be finite")
        lam_min = float(np.linalg.eigvalsh(A)[0])
        if lam_min <= 0:
            raise InvariantError(f"A must be positive definite (smallest eigenvalue {lam_min:.3g})")
        c = lam_min if self.c is None else float(self.c)
        if not 0 < c <= lam_min + _TOL:
            raise InvariantError(f"eigenvalue bound c={c} exceeds smallest eigenvalue {lam_min}")
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise ContractError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", float(self.C))
        object.__setattr__(self, "D", float(self.D))
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "_x_star", _frozen(-0.5 * np.linalg.solve(A, B), 1))

    @property
    def dim(self) -> int:
        return self.B.shape[0]

    @property
    def noise_std(self) -> float:
        return self.D

    @property
    def x_star(self) -> np.ndarray:
        return self._x_star

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.A @ x + self.B @ x + self.C)

    def eigenvalues_scaled(self) -> np.ndarray:
        """Eigenvalues of ``A / D`` (ascending)."""
        return np.linalg.eigvalsh(self.A / self.D)

    def is_theorem_compliant(self, tol: float = _TOL) -> bool:
        D = self.D
        lam = np.linalg.eigvalsh(self.A)
        margin = 0.0 if self.epsilon is None else self.epsilon
        return bool(
            lam[-1] / D <= 1 + tol
            and np.linalg.norm(self.B) / D <= 1 + tol
            and abs(self.C) / D <= 1
            and lam[0] >= self.c - tol
            and np.linalg.norm(self.x_star) <= 1 - margin + tol
        )


@dataclass(frozen=True, eq=False)
class SphereProblem:
    """``x -> ||x - x_star||^2`` with additive Gaussian noise (unit std by default)."""

    x_star: np.ndarray
    noise_std: float = 1.0

    def __post_init__(self):
        xs = _frozen(self.x_star, 1)
        if np.any(np.abs(xs) > 1 + _TOL):
            raise InvariantError("sphere optimum coordinates must lie in [-1, 1]")
        if xs.shape[0] > 1 and np.linalg.norm(xs) > 1 + _TOL:
            raise InvariantError("sphere optimum must lie in the unit ball")
        if not (self.noise_std >= 0 and math.isfinite(self.noise_std)):
            raise ContractError(f"noise std must be nonnegative, got {self.noise_std}")
        object.__setattr__(self, "x_star", xs)
        object.__setattr__(self, "noise_std", float(self.noise_std))

    @property
    def dim(self) -> int:
        return self.x_star.shape[0]

    def value(self, x) -> float:
        diff = np.asarray(x, dtype=float) - self.x_star
        return float(diff @ diff)


@dataclass(frozen=True, eq=False)
class AxisRestriction:
    """The parent oracle on the line ``t * e_axis`` (``axis`` is 0-based)."""

    parent: object
    axis: int

    def __post_init__(self):
        if not 0 <= self.axis < self.parent.dim:
            raise ContractError(f"axis {self.axis} out of range for dimension {self.parent.dim}")

    dim = 1

    @property
    def noise_std(self) -> float:
        return self.parent.noise_std

    def embed(self, t) -> np.ndarray:
        point = np.zeros(self.parent.dim)
        point[self.axis] = np.asarray(t, dtype=float).reshape(-1)[0]
        return point

    def value(self, t) -> float:
        return self.parent.value(self.embed(t))


def restrict_to_axis(problem, axis: int) -> AxisRestriction:
    return AxisRestriction(problem, axis)


def _check_point(problem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != problem.dim:
        raise ContractError(f"point has dimension {x.shape[0]}, oracle has {problem.dim}")
    if not np.all(np.isfinite(x)):
        raise ContractError("evaluation point must be finite")
    return x


def sample_noisy(problem, x, k: int, stream: RandomStream, counter: EvaluationCounter) -> np.ndarray:
    """``k`` independent noisy evaluations of ``problem`` at ``x``."""
    x = _check_point(problem, x)
    counter.consume(k)
    return problem.value(x) + problem.noise_std * stream.normal(k)


def evaluate_noisy(problem, x, stream: RandomStream, counter: EvaluationCounter) -> float:
    return float(sample_noisy(problem, x, 1, stream, counter)[0])


def evaluate_true(problem, x) -> float:
    return problem.value(_check_point(problem, x))


def optimum(problem) -> np.ndarray:
    return problem.x_star.copy()


def simple_regret(problem, x_hat) -> float:
    """Noiseless gap ``F(x_hat) - F(x*)``, negative rounding noise clamped to 0."""
    gap = evaluate_true(problem, x_hat) - problem.value(problem.x_star)
    return max(gap, 0.0)


def squared_gap_regret(problem, x_hat) -> float:
    return simple_regret(problem, x_hat) ** 2


def _haar_orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def _uniform_ball(rng: np.random.Generator, d: int, radius: float) -> np.ndarray:
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    return u * radius * rng.uniform() ** (1.0 / d)


def generate_problem(
    d: int,
    D: float,
    c: float,
    epsilon: float,
    stream: RandomStream,
    max_attempts: int = 10_000,
) -> NoisyQuadraticProblem:
    """Random quadratic satisfying every hypothesis of the convergence theorem.

    ``A = Q diag(lambda) Q^T`` with Haar ``Q`` and eigenvalues uniform in
    ``[c, D]``; ``B`` uniform in the ball of radius ``D``; ``C`` uniform in
    ``[-D, D]``. Draws whose optimum leaves the ball of radius ``1 - epsilon``
    are rejected.
    """
    if d < 1:
        raise ContractError(f"dimension must be >= 1, got {d}")
    if not D > 0:
        raise ContractError(f"D must be positive, got {D}")
    if not 0 < c <= D:
        raise ContractError(f"need 0 < c <= D, got c={c}, D={D}")
    if not 0 < epsilon < 1:
        raise ContractError(f"epsilon must lie in (0, 1), got {epsilon}")
    rng = stream.rng
    for attempt in range(1, max_attempts + 1):
        q = _haar_orthogonal(rng, d)
        lam = rng.uniform(c, D, size=d)
        A = (q * lam) @ q.T
        A = 0.5 * (A + A.T)
        B = _uniform_ball(rng, d, D)
        C = rng.uniform(-D, D)
        x_star = -0.5 * np.linalg.solve(A, B)
        if np.linalg.norm(x_star) <= 1 - epsilon:
            # eigenvalues drawn in [c, D] can drift by rounding in Q diag Q^T
            eig = np.linalg.eigvalsh(A)
            c_eff = min(c, float(eig[0]))
            return NoisyQuadraticProblem(A, B, C, D, c=c_eff, epsilon=epsilon, attempts=attempt)
    raise GenerationInfeasible("||x*|| <= 1 - epsilon", max_attempts)


def random_sphere_optimum(d: int, stream: RandomStream) -> np.ndarray:
    """Uniform in [-1, 1] for d = 1, uniform in the unit ball otherwise."""
    if d == 1:
        return np.array([stream.rng.uniform(-1.0, 1.0)])
    return _uniform_ball(stream.rng, d, 1.0)


def small_noise_problem(D: float = 0.65) -> NoisyQuadraticProblem:
    """Fixed d=2 problem with ||A||_2 = 1 whose cross-term gap exceeds the default clamp at D=0.65.

    The gap ratio along ``e1 + e2`` is ``(A11 + A22 + 2 A12 + B1 + B2) / D``
    = 3.6 / D, i.e. about 5.54 > 5 for the default noise level.
    """
    A = np.array([[0.8, 0.2], [0.2, 0.8]])
    x_star = np.array([-0.4, -0.4])
    B = -2.0 * A @ x_star
    return NoisyQuadraticProblem(A, B, 0.0, D, epsilon=0.1)


PRESETS = {"small-noise": small_noise_problem}


# -- flat text serialization ------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _fmt_list(values) -> str:
    return ",".join(_fmt(v) for v in np.asarray(values, dtype=float).ravel())


def dump_problem(problem) -> str:
    """Serialize to ``key = value`` lines (matrices row-major, comma separated)."""
    if isinstance(problem, NoisyQuadraticProblem):
        lines = [
            "kind = quadratic",
            f"dim = {problem.dim}",
            f"A = {_fmt_list(problem.A)}",
            f"B = {_fmt_list(problem.B)}",
            f"C = {_fmt(problem.C)}",
            f"D = {_fmt(problem.D)}",
            f"c = {_fmt(problem.c)}",
        ]
        if problem.epsilon is not None:
            lines.append(f"epsilon = {_fmt(problem.epsilon)}")
    elif isinstance(problem, SphereProblem):
        lines = [
            "kind = sphere",
            f"dim = {problem.dim}",
            f"x_star = {_fmt_list(problem.x_star)}",
            f"noise_std = {_fmt(problem.noise_std)}",
        ]
    else:
        raise ContractError(f"cannot serialize {type(problem).__name__}")
    return "\n".join(lines) + "\n"


def load_problem(text: str):
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ContractError(f"line {lineno}: expected 'key = value', got {raw!r}")
        fields[key.strip()] = value.strip()

    def floats(key):
        return np.array([float(v) for v in fields[key].split(",")])

    try:
        kind = fields["kind"]
        d = int(fields["dim"])
        if kind == "quadratic":
            return NoisyQuadraticProblem(
                floats("A").reshape(d, d),
                floats("B"),
                float(fields["C"]),
                float(fields["D"]),
                c=float(fields["c"]) if "c" in fields else None,
                epsilon=float(fields["epsilon"]) if "epsilon" in fields else None,
            )
        if kind == "sphere":
            return SphereProblem(floats("x_star"), float(fields["noise_std"]))
    except KeyError as exc:
        raise ContractError(f"problem file is missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        if isinstance(exc, ContractError):
            raise
        raise ContractError(f"malformed problem file: {exc}") from None
    raise ContractError(f"unknown problem kind {kind!r}")
