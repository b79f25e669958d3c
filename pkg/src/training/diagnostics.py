"""
Gradient Alignment Diagnostics

gip / gip_linear measure how well per-platform gradients agree. The cosine
experiment checks that the first-order Fish direction G_f lines up with the
gradient of the alignment penalty G_g as the inner learning rate shrinks,
on small analytic toy problems where every expectation is exact.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence

import numpy as np
import pandas as pd

from src.model.classifier import ModelSpec, ParamVector
from src.preprocessing.feature_hashing import EncodedPlatform
from src.training.trainers import cross_entropy_gradient, derive_rng
from src.utils.errors import DegenerateToyError

logger = logging.getLogger(__name__)

PROBE_STREAM = 2
FINITE_DIFFERENCE_STEP = 1e-6


def _stack(grads):
    grads = [np.asarray(g, dtype=np.float64) for g in grads]
    if len({g.shape for g in grads}) > 1:
        raise ValueError("all gradients must have the same length")
    return grads


def gip(grads: Sequence[np.ndarray]) -> float:
    """Mean pairwise inner product 2/(S(S-1)) * sum_{i<j} G_i . G_j"""
    grads = _stack(grads)
    s = len(grads)
    if s < 2:
        raise ValueError(f"gip needs at least 2 gradients, got {s}")
    total = 0.0
    for i, j in itertools.combinations(range(s), 2):
        total += float(grads[i] @ grads[j])
    return 2.0 * total / (s * (s - 1))


def gip_linear(grads: Sequence[np.ndarray]) -> float:
    """G_hat = ||sum_i G_i||^2 - sum_i ||G_i||^2, which equals 2 * sum_{i<j} G_i . G_j"""
    grads = _stack(grads)
    if not grads:
        raise ValueError("gip_linear needs at least one gradient")
    summed = np.sum(grads, axis=0)
    return float(summed @ summed - sum(float(g @ g) for g in grads))


def platform_gradients(params: ParamVector, spec: ModelSpec, platforms: Sequence[EncodedPlatform]):
    """Full-platform mean cross-entropy gradient of every platform"""
    return [cross_entropy_gradient(params, spec, p.features, p.labels)[1] for p in platforms]


def platform_gradient_alignment(
    params: ParamVector, spec: ModelSpec, platforms: Sequence[EncodedPlatform], gip_scale: float = 0.0
):
    """
    Pairwise dot products, G_hat and gip of full-platform gradients.

    The summary also carries the alignment penalty -gip_scale * G_hat.

    Returns (pairs DataFrame with columns platform_a, platform_b, dot; summary dict).
    """
    if len(platforms) < 2:
        raise ValueError(f"gradient alignment needs at least 2 platforms, got {len(platforms)}")
    grads = platform_gradients(params, spec, platforms)
    names = [p.platform for p in platforms]
    pairs = pd.DataFrame(
        [
            {"platform_a": names[i], "platform_b": names[j], "dot": float(grads[i] @ grads[j])}
            for i, j in itertools.combinations(range(len(grads)), 2)
        ]
    )
    s = len(grads)
    g_hat = gip_linear(grads)
    summary = {
        "platforms": names,
        "S": s,
        "gip_hat": g_hat,
        "gip": gip(grads),
        "gip_scale": float(gip_scale),
        "penalty": -float(gip_scale) * g_hat,
        "norms": {name: float(np.linalg.norm(g)) for name, g in zip(names, grads)},
    }
    logger.info(f"G_hat over {s} platforms: {summary['gip_hat']:.6g} (gip {summary['gip']:.6g})")
    return pairs, summary


class GradientAlignmentProbe:
    """
    Fixed per-platform probe subsets; measure() returns G_hat at the given parameters.

    record() is what the trainers call once per iteration: it measures on every
    `every`-th call (the first included) and returns None otherwise.
    """

    def __init__(self, platforms: Sequence[EncodedPlatform], spec: ModelSpec, size: int, seed: int, every: int = 1):
        if every < 1:
            raise ValueError(f"probe interval must be positive, got {every}")
        rng = derive_rng(seed, PROBE_STREAM)
        self.spec = spec
        self.every = every
        self.calls = 0
        self.platforms = [p.subset(np.sort(rng.permutation(len(p))[:size])) for p in platforms]

    def gradients(self, params: ParamVector):
        return platform_gradients(params, self.spec, self.platforms)

    def measure(self, params: ParamVector) -> float:
        return gip_linear(self.gradients(params))

    def record(self, params: ParamVector):
        due = self.calls % self.every == 0
        self.calls += 1
        return self.measure(params) if due else None


# ---------------------------------------------------------------------------
# analytic toy problems for the cosine experiment
# ---------------------------------------------------------------------------

@dataclass
class ToyProblem:
    """Per-domain full-batch gradients of a small differentiable model"""

    name: str
    theta0: np.ndarray
    domain_gradients: List[Callable[[np.ndarray], np.ndarray]]

    @property
    def n_domains(self):
        return len(self.domain_gradients)

    def gradients(self, theta):
        return [grad(theta) for grad in self.domain_gradients]

    def scaled(self, factor: float) -> "ToyProblem":
        """Same problem with every domain loss multiplied by factor"""
        return ToyProblem(
            name=f"{self.name}*{factor:g}",
            theta0=self.theta0,
            domain_gradients=[(lambda g: (lambda theta: factor * g(theta)))(g) for g in self.domain_gradients],
        )


def quadratic_toy(name, curvatures, centers, theta0) -> ToyProblem:
    """Domain d has loss 0.5 (theta - c_d)^T A_d (theta - c_d)"""
    curvatures = [np.asarray(a, dtype=np.float64) for a in curvatures]
    centers = [np.asarray(c, dtype=np.float64) for c in centers]
    grads = [(lambda a, c: (lambda theta: a @ (theta - c)))(a, c) for a, c in zip(curvatures, centers)]
    return ToyProblem(name=name, theta0=np.asarray(theta0, dtype=np.float64), domain_gradients=grads)


def logistic_toy(name, inputs, labels, theta0) -> ToyProblem:
    """Domain d has mean logistic loss of a linear model with bias (last parameter)"""

    def make(x, y):
        design = np.hstack([x, np.ones((x.shape[0], 1))])

        def grad(theta):
            p = 1.0 / (1.0 + np.exp(-(design @ theta)))
            return design.T @ (p - y) / len(y)

        return grad

    grads = [make(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)) for x, y in zip(inputs, labels)]
    return ToyProblem(name=name, theta0=np.asarray(theta0, dtype=np.float64), domain_gradients=grads)


def _build_logistic_toy():
    rng = np.random.default_rng(20230601)
    inputs, labels = [], []
    for shift in (np.array([0.8, -0.4, 0.3, 0.0]), np.array([-0.2, 0.6, 0.0, -0.7])):
        x = rng.normal(size=(40, 4)) + shift
        w = np.array([1.5, -1.0, 0.5, 0.8]) + 0.5 * shift
        y = (x @ w + 0.3 * rng.normal(size=40) > 0).astype(np.float64)
        inputs.append(x)
        labels.append(y)
    return logistic_toy("logistic", inputs, labels, theta0=np.array([0.1, -0.2, 0.05, 0.3, 0.0]))


BUILTIN_TOYS: Dict[str, Callable[[], ToyProblem]] = {
    "twin-quadratic": lambda: quadratic_toy(
        "twin-quadratic",
        curvatures=[np.diag([1.0, 2.0, 0.5])] * 2,
        centers=[np.array([1.0, -1.0, 0.5])] * 2,
        theta0=np.array([0.0, 0.5, -0.5]),
    ),
    "quadratic-pair": lambda: quadratic_toy(
        "quadratic-pair",
        curvatures=[
            np.diag([1.0, 2.0, 0.5, 1.5]),
            np.array([[2.0, 0.3, 0, 0], [0.3, 1.0, 0, 0], [0, 0, 1.0, 0.2], [0, 0, 0.2, 0.5]]),
        ],
        centers=[np.array([1.0, 0.0, -1.0, 0.5]), np.array([-0.5, 1.0, 0.0, 0.0])],
        theta0=np.zeros(4),
    ),
    "logistic": _build_logistic_toy,
}


def get_toy(name: str) -> ToyProblem:
    try:
        return BUILTIN_TOYS[name]()
    except KeyError:
        raise ValueError(f"unknown toy {name!r}; built-in toys: {', '.join(BUILTIN_TOYS)}") from None


def toy_gip_hat(toy: ToyProblem, theta) -> float:
    return gip_linear(toy.gradients(theta))


def expected_fish_displacement(toy: ToyProblem, theta, alpha: float) -> np.ndarray:
    """E[theta - theta_tilde] over every inner-loop platform order, full-batch steps"""
    total = np.zeros_like(theta)
    orders = list(itertools.permutations(range(toy.n_domains)))
    for order in orders:
        theta_tilde = np.array(theta, dtype=np.float64)
        for d in order:
            theta_tilde = theta_tilde - alpha * toy.domain_gradients[d](theta_tilde)
        total += theta - theta_tilde
    return total / len(orders)


def fish_direction(toy: ToyProblem, theta, alpha: float) -> np.ndarray:
    """
    G_f = E[theta - theta_tilde] - alpha S G_bar.

    Accumulated as alpha * sum_d (g_d(theta_tilde before d) - g_d(theta)), the same
    quantity without the cancellation of two nearly equal O(alpha) vectors.
    """
    base = toy.gradients(theta)
    total = np.zeros_like(theta)
    orders = list(itertools.permutations(range(toy.n_domains)))
    for order in orders:
        theta_tilde = np.array(theta, dtype=np.float64)
        for d in order:
            grad = toy.domain_gradients[d](theta_tilde)
            total += alpha * (grad - base[d])
            theta_tilde = theta_tilde - alpha * grad
    return total / len(orders)


def penalty_gradient(toy: ToyProblem, theta, h: float = FINITE_DIFFERENCE_STEP) -> np.ndarray:
    """G_g = -dG_hat/dtheta by central differences (gradient of the alignment penalty -G_hat)"""
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        step = np.zeros_like(theta)
        step[k] = h
        grad[k] = (toy_gip_hat(toy, theta + step) - toy_gip_hat(toy, theta - step)) / (2.0 * h)
    return -grad


def _cosine(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateToyError("zero vector in the cosine experiment; choose a point with non-zero gradients")
    return float(a @ b / (na * nb))


def cosine_convergence_experiment(toy: ToyProblem, alphas: Sequence[float]) -> pd.DataFrame:
    """
    Cosine between G_f = E[theta - theta_tilde] - alpha S G_bar and G_g for each alpha.

    G_bar is the full-batch ERM gradient (mean of the domain gradients).
    """
    if toy.n_domains < 2:
        raise ValueError("the cosine experiment needs at least 2 domains")
    theta = toy.theta0
    g_g = penalty_gradient(toy, theta)

    rows = []
    for alpha in alphas:
        g_f = fish_direction(toy, theta, alpha)
        rows.append({"alpha": float(alpha), "cosine": _cosine(g_f, g_g)})
        logger.info(f"{toy.name}: alpha={alpha:g} cosine={rows[-1]['cosine']:.9f}")
    return pd.DataFrame(rows, columns=["alpha", "cosine"])
