"""
Partition norms.

For a kernel ``h`` of order ``d`` and a partition spec ``(K, J)`` the norm
``|h|_{K,J}`` is the supremum of

    E < h(X), g(X_K) > * f_1(X_{J_1}) * ... * f_k(X_{J_k})

over test functions with ``E|g|^2 <= 1`` and ``E f_j^2 <= 1``. When ``K`` is
empty ``g`` is a constant vector ``phi`` with ``|phi| <= 1``. The truncated
norm ``|h|_{K,J,u}`` adds the caps ``sup|g| <= u`` and ``sup|f_j| <= u``;
the constant vector ``phi`` is never capped.

Substituting ``v(x) = f(x) * sqrt(P(x))`` turns every such problem into the
maximization of a multilinear form over a product of convex sets, one per
mode of a tensor:

* mode 0 holds the ``K`` coordinates together with the value axis
  (or the value axis alone when ``K`` is empty);
* mode ``j`` holds the coordinates of block ``J_j``.

Each feasible set is a ball intersected with per-group caps, where a group
is a set of entries whose joint Euclidean norm is capped. The best response
of one mode with all others fixed is therefore exact and cheap: the
water-filling solution of :func:`_water_level`. The solver alternates best
responses over modes (a higher-order power method), restarting from a
spectral start, from the best extreme sign pattern when there are few
enough of them, and from quasi-independent random starts. The best value
wins, ties go to the earliest start.

The same machinery computes the array norms ``|(a_i)|_J`` and the starred
chaos norms ``|(a_i)|*_{K,J,p}``.
"""

import itertools
import logging
import math
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ENUMERATION_CAP, check_cap
from .indexing import Partition, PartitionSpec, enumerate_partition_specs, ground
from .kernel import Kernel, product_law, second_moment
from .lds import SphereN
from .rng import DEFAULT_SEED, stream

_logger = logging.getLogger(__name__)

RESTARTS = 8
MAX_SWEEPS = 500
TOL = 1e-10
SIGN_PATTERN_DIM = 8
ORACLE_PATTERN_DIM = 12
ORACLE_DIM_CAP = 64
_TINY = 1e-300


@dataclass(frozen=True, eq=False)
class TestFunctionBundle:
    """Test functions attaining a norm value, in the original coordinates.

    ``g`` has shape ``(m,)*|K| + (q,)`` and is present iff ``K`` is nonempty;
    otherwise ``phi`` is a vector of length ``q``. ``f`` holds one array of
    shape ``(m,)*|J_j|`` per block. Zero-probability cells carry the value 0.
    """

    __test__ = False

    g: Optional[np.ndarray]
    phi: Optional[np.ndarray]
    f: Tuple[np.ndarray, ...]


@dataclass(frozen=True, eq=False)
class NormResult:
    value: float
    certificate: TestFunctionBundle
    restarts_used: int
    converged: bool
    gap_estimate: float
    spec: PartitionSpec
    u: Optional[float] = None


# ---- one mode: ball with group caps ----


def _water_level(size: np.ndarray, caps: np.ndarray, radius: float) -> np.ndarray:
    """Per-group multipliers ``min(t, cap / |c_G|)`` with ``t`` making the radius tight.

    Groups are sorted by their cap ratio and the number of capped groups is
    read off cumulative sums, as in sort-based projection onto a simplex.

    Examples:
        >>> _water_level(np.array([1.0, 1.0]), np.array([0.5, np.inf]), 1.0).round(6).tolist()
        [0.5, 0.866025]
    """
    scale = np.zeros_like(size)
    active = np.flatnonzero(size > 0.0)
    if active.size == 0:
        return scale
    norm, cap = size[active], caps[active]
    ratio = cap / norm
    total = radius * radius
    if np.sum(cap * cap) <= total:
        scale[active] = ratio
        return scale
    order = np.argsort(ratio, kind="stable")
    r, cap_sq, norm_sq = ratio[order], cap[order] ** 2, norm[order] ** 2
    capped = np.concatenate(([0.0], np.cumsum(cap_sq)[:-1]))
    tail = np.cumsum(norm_sq[::-1])[::-1]
    level = capped + r * r * tail
    j = min(int(np.count_nonzero(level <= total)), r.size - 1)
    t = math.sqrt(max(total - capped[j], 0.0) / tail[j])
    scale[active] = np.minimum(t, ratio)
    return scale


@dataclass(frozen=True, eq=False)
class _Ball:
    """Feasible set ``{v : |v| <= radius and |v_G| <= caps[G] for every group G}``."""

    radius: float
    groups: Optional[np.ndarray] = None
    caps: Optional[np.ndarray] = None

    def _group_norms(self, v: np.ndarray) -> np.ndarray:
        return np.sqrt(np.bincount(self.groups, weights=v * v, minlength=self.caps.size))

    def best_response(self, c: np.ndarray) -> np.ndarray:
        """The maximizer of ``<c, v>`` over the set."""
        if self.groups is None:
            size = float(np.linalg.norm(c))
            return c * (self.radius / size) if size > 0.0 else np.zeros_like(c)
        return c * _water_level(self._group_norms(c), self.caps, self.radius)[self.groups]

    def shrink(self, v: np.ndarray) -> np.ndarray:
        """Rescale ``v`` along its direction onto the boundary of the set."""
        size = float(np.linalg.norm(v))
        if size == 0.0:
            return v
        scale = self.radius / size
        if self.groups is not None:
            gnorm = self._group_norms(v)
            active = gnorm > 0.0
            scale = min(scale, float(np.min(self.caps[active] / gnorm[active])))
        return v * scale


def _capped_ball(cell_probs: np.ndarray, u: Optional[float], width: int = 1) -> _Ball:
    if u is None:
        return _Ball(1.0)
    cells = cell_probs.size
    return _Ball(1.0, np.repeat(np.arange(cells), width), u * np.sqrt(cell_probs))


# ---- alternating maximization ----


@dataclass(frozen=True, eq=False)
class _Problem:
    tensor: np.ndarray
    balls: Tuple[_Ball, ...]

    @property
    def sizes(self) -> List[int]:
        return list(self.tensor.shape)


@dataclass(frozen=True, eq=False)
class _Ascent:
    value: float
    vecs: List[np.ndarray]
    converged: bool
    gap: float


def _contract(tensor: np.ndarray, vecs: Sequence[np.ndarray], skip: Optional[int]) -> np.ndarray:
    """Contract every mode except ``skip``; axes are consumed from the last."""
    out = tensor
    for axis in range(tensor.ndim - 1, -1, -1):
        if axis != skip:
            out = np.tensordot(out, vecs[axis], axes=([axis], [0]))
    return out


def _ascend(problem: _Problem, vecs: Sequence[np.ndarray], tol: float, max_sweeps: int) -> _Ascent:
    vecs = list(vecs)
    value = -math.inf
    improvement = math.inf
    for _ in range(max_sweeps):
        for mode, ball in enumerate(problem.balls):
            c = _contract(problem.tensor, vecs, mode)
            vecs[mode] = ball.best_response(c)
        current = float(np.dot(c, vecs[-1]))
        improvement = current - value
        value = current
        if len(problem.balls) == 1 or improvement <= tol * max(abs(value), _TINY):
            return _Ascent(value, vecs, True, max(improvement, 0.0) if math.isfinite(improvement) else 0.0)
    return _Ascent(value, vecs, False, improvement)


def _sign_patterns(problem: _Problem, limit: int) -> Iterator[Tuple[float, List[np.ndarray]]]:
    """Every sign pattern on modes ``1..k`` mapped to an extreme point, mode 0 best-responded."""
    sizes = problem.sizes
    dim = sum(sizes[1:])
    if dim > limit:
        return
    cuts = np.cumsum(sizes[1:])[:-1]
    for signs in itertools.product((1.0, -1.0), repeat=dim):
        parts = np.split(np.array(signs), cuts) if dim else []
        vecs = [np.zeros(sizes[0])] + [ball.best_response(s) for ball, s in zip(problem.balls[1:], parts)]
        c = _contract(problem.tensor, vecs, 0)
        vecs[0] = problem.balls[0].best_response(c)
        yield float(np.dot(c, vecs[0])), vecs


def _best_pattern(problem: _Problem, limit: int) -> Optional[List[np.ndarray]]:
    best: Optional[Tuple[float, List[np.ndarray]]] = None
    for value, vecs in _sign_patterns(problem, limit):
        if best is None or value > best[0]:
            best = (value, vecs)
    return None if best is None else best[1]


def _spectral_start(problem: _Problem) -> List[np.ndarray]:
    """Top left singular vector of each mode unfolding."""
    tensor = problem.tensor
    vecs = [np.zeros(tensor.shape[0])]
    for mode in range(1, tensor.ndim):
        unfold = np.moveaxis(tensor, mode, 0).reshape(tensor.shape[mode], -1)
        left, _, _ = np.linalg.svd(unfold, full_matrices=False)
        vecs.append(left[:, 0])
    return vecs


def _random_start(problem: _Problem, seed: int, index: int) -> List[np.ndarray]:
    gen = stream(seed, index)
    return [np.zeros(problem.sizes[0])] + [gen.standard_normal(s) for s in problem.sizes[1:]]


def _normalize_signs(vecs: List[np.ndarray]) -> List[np.ndarray]:
    """Make the first significant entry of every mode ``j >= 1`` positive."""
    vecs = [v.copy() for v in vecs]
    for mode in range(1, len(vecs)):
        v = vecs[mode]
        big = np.flatnonzero(np.abs(v) > 1e-12 * np.max(np.abs(v), initial=0.0))
        if big.size and v[big[0]] < 0.0:
            vecs[mode] = -v
            vecs[0] = -vecs[0]
    return vecs


def _solve(
    problem: _Problem,
    seed: int,
    restarts: int,
    tol: float,
    max_sweeps: int,
    workers: int,
    warm: Optional[List[np.ndarray]] = None,
) -> Tuple[_Ascent, int]:
    starts = [_spectral_start(problem)]
    if len(problem.balls) > 1:
        pattern = _best_pattern(problem, SIGN_PATTERN_DIM)
        if pattern is not None:
            starts.append(pattern)
        starts += [_random_start(problem, seed, r) for r in range(restarts)]
        if warm is not None:
            starts.append(warm)
    run = partial(_ascend, problem, tol=tol, max_sweeps=max_sweeps)
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ascents = list(pool.map(run, starts))
    else:
        ascents = [run(start) for start in starts]
    best = ascents[0]
    for ascent in ascents[1:]:
        if ascent.value > best.value:
            best = ascent
    best = replace(best, vecs=_normalize_signs(best.vecs))
    return best, len(ascents)


# ---- kernels ----


def _arrange(values: np.ndarray, spec: PartitionSpec) -> np.ndarray:
    """Reshape ``values`` (argument axes then value axis) into the mode tensor of ``spec``."""
    d = values.ndim - 1
    k_axes = [c - 1 for c in sorted(spec.K)]
    blocks = [[c - 1 for c in sorted(b)] for b in spec.J.blocks]
    order = k_axes + [d] + [a for b in blocks for a in b]
    sizes = values.shape
    shape = [math.prod(sizes[a] for a in k_axes) * sizes[-1]] + [math.prod(sizes[a] for a in b) for b in blocks]
    return np.transpose(values, order).reshape(shape)


def _weighted(h: Kernel) -> np.ndarray:
    return h.values * np.sqrt(product_law(h.probs, h.d))[..., None]


def _kernel_problem(h: Kernel, spec: PartitionSpec, u: Optional[float]) -> _Problem:
    if spec.K:
        mode0 = _capped_ball(product_law(h.probs, len(spec.K)).ravel(), u, width=h.q)
    else:
        mode0 = _Ball(1.0)
    balls = [mode0] + [_capped_ball(product_law(h.probs, len(b)).ravel(), u) for b in spec.J.blocks]
    return _Problem(_arrange(_weighted(h), spec), tuple(balls))


def _unweight(v: np.ndarray, probs: np.ndarray, size: int, tail: Tuple[int, ...] = ()) -> np.ndarray:
    root = np.sqrt(product_law(probs, size)).ravel()
    inverse = np.zeros_like(root)
    inverse[root > 0.0] = 1.0 / root[root > 0.0]
    out = v.reshape((root.size,) + tail) * inverse.reshape((-1,) + (1,) * len(tail))
    return out.reshape((probs.size,) * size + tail)


def _to_bundle(h: Kernel, spec: PartitionSpec, vecs: Sequence[np.ndarray]) -> TestFunctionBundle:
    if spec.K:
        g, phi = _unweight(vecs[0], h.probs, len(spec.K), (h.q,)), None
    else:
        g, phi = None, np.array(vecs[0], dtype=float)
    f = tuple(_unweight(v, h.probs, len(b)) for v, b in zip(vecs[1:], spec.J.blocks))
    return TestFunctionBundle(g, phi, f)


def _from_bundle(h: Kernel, spec: PartitionSpec, bundle: TestFunctionBundle) -> List[np.ndarray]:
    if spec.K:
        root = np.sqrt(product_law(h.probs, len(spec.K)))[..., None]
        mode0 = (bundle.g * root).ravel()
    else:
        mode0 = np.asarray(bundle.phi, dtype=float)
    blocks = [(f * np.sqrt(product_law(h.probs, len(b)))).ravel() for f, b in zip(bundle.f, spec.J.blocks)]
    return [mode0] + blocks


def _check_spec(h: Kernel, spec: PartitionSpec) -> None:
    if spec.d != h.d:
        raise ValueError(f"partition spec of order {spec.d} applied to a kernel of order {h.d}")


def evaluate_objective(h: Kernel, spec: PartitionSpec, bundle: TestFunctionBundle) -> float:
    """``E < h(X), g(X_K) > prod_j f_j(X_{J_j})`` by direct summation.

    Examples:
        >>> h = Kernel.from_function(lambda x: [-1.0, 3.0][x], 1, [0.75, 0.25])
        >>> spec = PartitionSpec.of(1, [], [{1}])
        >>> bundle = TestFunctionBundle(None, np.array([1.0]), (np.array([-1.0, 1.0]),))
        >>> evaluate_objective(h, spec, bundle)
        1.5
    """
    _check_spec(h, spec)
    letters = string.ascii_lowercase[: h.d]
    axis = dict(zip(range(1, h.d + 1), letters))
    operands: List[np.ndarray] = [h.values]
    terms = [letters + "z"]
    for k in range(1, h.d + 1):
        operands.append(h.probs)
        terms.append(axis[k])
    if spec.K:
        operands.append(np.asarray(bundle.g))
        terms.append("".join(axis[k] for k in sorted(spec.K)) + "z")
    else:
        operands.append(np.asarray(bundle.phi))
        terms.append("z")
    for f, block in zip(bundle.f, spec.J.blocks):
        operands.append(np.asarray(f))
        terms.append("".join(axis[k] for k in sorted(block)))
    return float(np.einsum(",".join(terms) + "->", *operands, optimize=True))


def saturation_level(h: Kernel, spec: PartitionSpec) -> float:
    """Level ``u`` beyond which no cap of ``|h|_{K,J,u}`` can bind.

    ``E f^2 <= 1`` already forces ``|f| <= P(x)^{-1/2}``, so the level is the
    largest ``p_min^{-|B|/2}`` over the capped blocks ``B`` (``K`` when
    nonempty, and every block of ``J``).

    Examples:
        >>> h = Kernel.from_function(lambda x: [-1.0, 3.0][x], 1, [0.75, 0.25])
        >>> saturation_level(h, PartitionSpec.of(1, [], [{1}]))
        2.0
    """
    sizes = ([len(spec.K)] if spec.K else []) + [len(b) for b in spec.J.blocks]
    return max(h.law.p_min ** (-s / 2.0) for s in sizes)


def _norm(
    h: Kernel,
    spec: PartitionSpec,
    u: Optional[float],
    warm: Optional[TestFunctionBundle],
    seed: int,
    restarts: int,
    tol: float,
    max_sweeps: int,
    workers: int,
) -> NormResult:
    _check_spec(h, spec)
    problem = _kernel_problem(h, spec, u)
    start = _from_bundle(h, spec, warm) if warm is not None else None
    ascent, used = _solve(problem, seed, restarts, tol, max_sweeps, workers, start)
    if not ascent.converged:
        _logger.warning(
            "norm %s (u=%s) did not converge after %d sweeps, gap %.3g", spec.label(), u, max_sweeps, ascent.gap
        )
    value = max(ascent.value, 0.0)
    return NormResult(value, _to_bundle(h, spec, ascent.vecs), used, ascent.converged, ascent.gap, spec, u)


def norm_kj(
    h: Kernel,
    spec: PartitionSpec,
    *,
    seed: int = DEFAULT_SEED,
    restarts: int = RESTARTS,
    tol: float = TOL,
    max_sweeps: int = MAX_SWEEPS,
    workers: int = 1,
) -> NormResult:
    """The partition norm ``|h|_{K,J}``.

    :param h: kernel of order ``d``
    :param spec: partition spec of order ``d``
    :param seed: master seed of the random restarts
    :param restarts: number of random restarts on top of the deterministic ones
    :param tol: relative improvement below which a restart has converged
    :param max_sweeps: sweep cap per restart
    :param workers: threads running restarts concurrently

    :return: the best value found with its certificate; exact for ``(I_d, {})``
             and for single-block scalar specs

    Examples:
        >>> h = Kernel.from_function(lambda x, y: (-1.0) ** (x + y), 2, [0.5, 0.5])
        >>> norm_kj(h, PartitionSpec.of(2, {1, 2}, [])).value
        1.0
        >>> round(norm_kj(h, PartitionSpec.of(2, [], [{1}, {2}])).value, 12)
        1.0
    """
    if spec.is_full:
        _check_spec(h, spec)
        value = math.sqrt(second_moment(h))
        g = h.values / value if value > 0.0 else np.zeros_like(h.values)
        return NormResult(value, TestFunctionBundle(g, None, ()), 1, True, 0.0, spec)
    return _norm(h, spec, None, None, seed, restarts, tol, max_sweeps, workers)


def norm_kju(
    h: Kernel,
    spec: PartitionSpec,
    u: float,
    *,
    warm: Optional[TestFunctionBundle] = None,
    seed: int = DEFAULT_SEED,
    restarts: int = RESTARTS,
    tol: float = TOL,
    max_sweeps: int = MAX_SWEEPS,
    workers: int = 1,
) -> NormResult:
    """The truncated norm ``|h|_{K,J,u}``.

    ``warm`` is an extra starting bundle, typically the certificate of a
    smaller ``u``; it is feasible for every larger ``u`` so warm-started
    values never drop along an increasing grid.

    Examples:
        >>> h = Kernel.from_function(lambda x: [-1.0, 3.0][x], 1, [0.75, 0.25])
        >>> spec = PartitionSpec.of(1, [], [{1}])
        >>> round(norm_kju(h, spec, 1.0).value, 12)
        1.5
        >>> round(norm_kju(h, spec, 2.0).value ** 2, 12)
        3.0
    """
    if not u > 0.0:
        raise ValueError("truncation level u must be positive")
    _check_spec(h, spec)
    if u >= saturation_level(h, spec):
        if spec.is_full:
            return replace(norm_kj(h, spec), u=u)
        return replace(_norm(h, spec, None, warm, seed, restarts, tol, max_sweeps, workers), u=u)
    return _norm(h, spec, u, warm, seed, restarts, tol, max_sweeps, workers)


def all_norms(h: Kernel, u: Optional[float] = None, **options) -> List[NormResult]:
    """Every partition norm of ``h``, in canonical spec order."""
    if u is None:
        return [norm_kj(h, spec, **options) for spec in enumerate_partition_specs(h.d)]
    return [norm_kju(h, spec, u, **options) for spec in enumerate_partition_specs(h.d)]


def bruteforce_norm_oracle(
    h: Kernel,
    spec: PartitionSpec,
    u: Optional[float] = None,
    samples: int = 256,
    seed: int = DEFAULT_SEED,
) -> float:
    """A certified lower bound on ``|h|_{K,J}`` (or ``|h|_{K,J,u}``).

    The maximum of the objective over ``samples`` quasi-random feasible
    bundles and over every extreme sign pattern of the block modes (when
    there are at most 2**12 of them), with the vector mode best-responded.

    :raises GuardViolation: when the total number of free test-function
                            values exceeds 64

    Examples:
        >>> h = Kernel.from_function(lambda x: [-1.0, 3.0][x], 1, [0.75, 0.25])
        >>> round(bruteforce_norm_oracle(h, PartitionSpec.of(1, [], [{1}]), u=1.0), 12)
        1.5
    """
    if u is not None and not u > 0.0:
        raise ValueError("truncation level u must be positive")
    _check_spec(h, spec)
    problem = _kernel_problem(h, spec, u)
    sizes = problem.sizes
    check_cap("oracle dimension", sum(sizes), ORACLE_DIM_CAP)
    best = 0.0
    sphere = SphereN(sum(sizes))
    sphere.reseed(seed)
    cuts = np.cumsum(sizes)[:-1]
    for _ in range(samples):
        parts = np.split(sphere.pop(), cuts)
        vecs = [ball.shrink(part) for ball, part in zip(problem.balls, parts)]
        best = max(best, abs(float(_contract(problem.tensor, vecs, None))))
    for value, _ in _sign_patterns(problem, ORACLE_PATTERN_DIM):
        best = max(best, value)
    return best


# ---- arrays ----


def _array_result(problem: _Problem, what: str, seed: int, restarts: int, tol: float, max_sweeps: int) -> float:
    ascent, _ = _solve(problem, seed, restarts, tol, max_sweeps, workers=1)
    if not ascent.converged:
        _logger.warning("%s did not converge after %d sweeps, gap %.3g", what, max_sweeps, ascent.gap)
    return max(ascent.value, 0.0)


def array_norm(
    a: np.ndarray,
    J: Partition,
    *,
    seed: int = DEFAULT_SEED,
    restarts: int = RESTARTS,
    tol: float = TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> float:
    """``|(a_i)|_J``: unit-norm coefficient vectors on the blocks of ``J``.

    Examples:
        >>> round(array_norm(np.eye(2), Partition.of([{1}, {2}])), 12)
        1.0
        >>> array_norm(np.ones((2, 2)), Partition.of([{1, 2}]))
        2.0
    """
    a = np.asarray(a, dtype=float)
    if J.support != ground(a.ndim):
        raise ValueError(f"partition {J} does not cover 1..{a.ndim}")
    if J.deg == 1:
        return float(np.linalg.norm(a))
    # a lone value axis of length 1 stands in for mode 0
    spec = PartitionSpec(a.ndim, frozenset(), J)
    tensor = _arrange(a[..., None], spec)
    problem = _Problem(tensor, (_Ball(1.0),) * tensor.ndim)
    return _array_result(problem, f"array norm {J}", seed, restarts, tol, max_sweeps)


def chaos_star_norm(
    a: np.ndarray,
    spec: PartitionSpec,
    p: float,
    *,
    seed: int = DEFAULT_SEED,
    restarts: int = RESTARTS,
    tol: float = TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> float:
    """The starred norm ``|(a_i)|*_{K,J,p}`` of an array of vectors.

    ``a`` has shape ``(n,)*d + (q,)``. The vector coefficients on ``K`` have
    unit norm; the coefficients of block ``J_k`` have squared norm at most
    ``p`` and at most 1 on every slice where the largest coordinate of the
    block is fixed.

    Examples:
        >>> a = np.ones((3, 3, 1))
        >>> spec = PartitionSpec.of(2, [], [{1, 2}])
        >>> round(chaos_star_norm(a, spec, 2.0) ** 2, 9)
        18.0
        >>> chaos_star_norm(np.array([[3.0], [4.0]]), PartitionSpec.of(1, {1}, []), 5.0)
        5.0
    """
    a = np.asarray(a, dtype=float)
    if not p >= 1.0:
        raise ValueError("p must be at least 1")
    if spec.d != a.ndim - 1:
        raise ValueError(f"partition spec of order {spec.d} applied to an array of order {a.ndim - 1}")
    tensor = _arrange(a, spec)
    balls = [_Ball(1.0)]
    for block in spec.J.blocks:
        # cells run in C order, so the largest coordinate of the block varies fastest
        side = a.shape[max(block) - 1]
        cells = math.prod(a.shape[c - 1] for c in block)
        balls.append(_Ball(math.sqrt(p), np.arange(cells) % side, np.ones(side)))
    if len(balls) == 1:
        return float(np.linalg.norm(tensor))
    return _array_result(_Problem(tensor, tuple(balls)), f"chaos norm {spec.label()}", seed, restarts, tol, max_sweeps)


def replicated_array_norm(
    h: Kernel,
    spec: PartitionSpec,
    n: int,
    *,
    seed: int = DEFAULT_SEED,
    restarts: int = RESTARTS,
    tol: float = TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> float:
    """``|(h_i)_{|i| <= n}|_{K,J}`` for the family ``h_i = h``.

    Slot ``k`` of the array tensor runs over the pairs ``(i_k, x_k)``, so the
    family norm is a partition norm of ``h`` tensored with an all-ones array.

    Examples:
        >>> h = Kernel.from_function(lambda x, y: (-1.0) ** (x + y), 2, [0.5, 0.5])
        >>> replicated_array_norm(h, PartitionSpec.of(2, {1, 2}, []), 3)
        3.0
    """
    _check_spec(h, spec)
    if n < 1:
        raise ValueError("n must be at least 1")
    d, m, q = h.d, h.m, h.q
    check_cap("replicated array cells", (n * m) ** d * q, ENUMERATION_CAP)
    interleaved = _weighted(h).reshape(tuple(x for _ in range(d) for x in (1, m)) + (q,))
    family = np.broadcast_to(interleaved, (n, m) * d + (q,)).reshape((n * m,) * d + (q,))
    tensor = _arrange(family, spec)
    if spec.J.deg == 0:
        return float(np.linalg.norm(tensor))
    balls = (_Ball(1.0),) * tensor.ndim
    return _array_result(_Problem(tensor, balls), f"replicated norm {spec.label()}", seed, restarts, tol, max_sweeps)


if __name__ == "__main__":
    import doctest

    doctest.testmod()
