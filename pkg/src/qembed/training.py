"""Adam training of the embedding angles and the overlap classifier."""

import json
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .embedding import EmbeddingParams, cost, feature_states

FD_STEP = 1e-5
TIE_TOL = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    iterations: int = 200
    batch_size: int = 50
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    eval_size: int = 200
    fd_step: float = FD_STEP

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.eval_size < 2:
            raise ValueError("eval_size must be >= 2")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if not self.epsilon > 0 or not self.fd_step > 0:
            raise ValueError("epsilon and fd_step must be > 0")


@dataclass
class TrainTrace:
    seed: int
    config: TrainConfig
    initial_params: EmbeddingParams
    final_params: EmbeddingParams
    cost_trace: list = field(default_factory=list)

    def to_json(self):
        return {
            "seed": self.seed,
            "config": asdict(self.config),
            "initial_params": list(self.initial_params.as_array()),
            "cost_trace": [float(c) for c in self.cost_trace],
            "final_params": list(self.final_params.as_array()),
        }

    @classmethod
    def from_json(cls, d):
        return cls(
            seed=int(d["seed"]),
            config=TrainConfig(**d["config"]),
            initial_params=EmbeddingParams.from_array(d["initial_params"]),
            final_params=EmbeddingParams.from_array(d["final_params"]),
            cost_trace=list(d["cost_trace"]),
        )

    def dumps(self):
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def cost_gradient(batch, params, h=FD_STEP):
    """Central finite-difference gradient of :func:`cost` with respect to the angles."""
    theta = params.as_array()
    grad = np.empty(3)
    for k in range(3):
        step = np.zeros(3)
        step[k] = h
        plus = cost(batch, EmbeddingParams.from_array(theta + step))
        minus = cost(batch, EmbeddingParams.from_array(theta - step))
        grad[k] = (plus - minus) / (2 * h)
    return grad


class Adam:
    """Bias-corrected Adam on a flat parameter vector."""

    def __init__(self, lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8, size=3):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, theta, grad):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return theta - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _balanced_subsample(ds, size, rng):
    """Up to ``size // 2`` points from each class, drawn without replacement."""
    per_class = max(1, size // 2)
    idx = []
    for lab in ("A", "B"):
        pool = np.flatnonzero(ds.labels == lab)
        k = min(per_class, pool.size)
        idx.append(np.sort(rng.choice(pool, size=k, replace=False)))
    return ds.subset(np.concatenate(idx))


def initial_params(seed):
    rng = np.random.default_rng([seed, 0])
    return EmbeddingParams.from_array(np.pi - 2 * np.pi * rng.random(3))


def train(dataset, config=TrainConfig()):
    """Minimise the embedding cost with Adam.

    Seeding: the initial angles come from ``default_rng([seed, 0])``, the
    fixed evaluation batch from ``[seed, 1]`` and the training batch of
    iteration ``k`` from ``[seed, 2, k]``.
    """
    if not dataset.has_both_classes():
        raise ValueError("training set needs both classes")
    seed = config.seed
    start = initial_params(seed)
    eval_batch = _balanced_subsample(dataset, config.eval_size, np.random.default_rng([seed, 1]))
    opt = Adam(config.learning_rate, config.beta1, config.beta2, config.epsilon)
    theta = start.as_array()
    costs = [cost(eval_batch, start)]
    for it in range(config.iterations):
        batch = _balanced_subsample(dataset, config.batch_size, np.random.default_rng([seed, 2, it]))
        grad = cost_gradient(batch, EmbeddingParams.from_array(theta), config.fd_step)
        theta = opt.step(theta, grad)
        costs.append(cost(eval_batch, EmbeddingParams.from_array(theta)))
    return TrainTrace(seed, config, start, EmbeddingParams.from_array(theta), costs)


class Prediction(NamedTuple):
    label: str
    score_a: float
    score_b: float
    tie: bool


def classify(x, params, training_set, embed=None):
    """Assign ``x`` to the class with the larger mean fidelity to its training states.

    ``embed`` overrides the feature map (``embed(xs) -> states``); ties go to A.
    """
    if len(training_set) == 0:
        raise ValueError("empty training set")
    embed = embed or (lambda xs: feature_states(xs, params))
    psi = embed(np.array([float(x)]))[0]
    scores = {}
    for lab in ("A", "B"):
        vals = training_set.class_values(lab)
        if vals.size == 0:
            scores[lab] = -np.inf
            continue
        states = embed(vals)
        scores[lab] = float(np.mean(np.abs(states.conj() @ psi) ** 2))
    tie = abs(scores["A"] - scores["B"]) <= TIE_TOL
    label = "A" if tie or scores["A"] > scores["B"] else "B"
    return Prediction(label, scores["A"], scores["B"], tie)


def evaluate(test_set, params, training_set, embed=None):
    """Fraction of ``test_set`` points whose predicted label matches."""
    if len(test_set) == 0:
        raise ValueError("empty test set")
    hits = [
        classify(x, params, training_set, embed).label == lab for x, lab in zip(test_set.values, test_set.labels)
    ]
    return float(np.mean(hits))

