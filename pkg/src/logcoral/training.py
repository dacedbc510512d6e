"""Training loop, checkpointing and the ablation sweep.

Metrics are JSON-lines ({step, loss_cls, loss_coral, loss_logcoral,
loss_mean, loss_total, target_acc?}); checkpoints are .npz containers that
carry everything needed for a bit-exact resume (parameters, optimizer
velocities, smoothed statistics, rng state, step counter).
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from . import data as D
from .exceptions import InvalidInput, NumericalFailure
from .linalg import SymmetricMatrix
from .losses import LossWeights
from .network import MlpModel, TrainState, evaluate, train_step
from .stats import FeatureBatch, SmoothedStats

CHECKPOINT_VERSION = 1


@dataclass
class RunConfig:
    seed: int = 0
    steps: int = 2000
    batch: int = 64
    lr: float = 1e-3
    weights: LossWeights = field(default_factory=LossWeights)
    epsilon: float = 1e-2         # large enough to damp noise eigendirections
                                  # of low-rank batch covariances; 0 -> scale-
                                  # relative default per covariance
    momentum: float = 0.9         # moving-average momentum of the statistics
    opt_momentum: float = 0.9
    hidden_dims: tuple = (128, 64)
    eval_every: int = 100
    num_classes: int = 5
    dim: int = 16
    samples_per_class: int = 200

    def __post_init__(self):
        if self.steps < 1 or self.batch < 2:
            raise InvalidInput("steps must be >= 1 and batch >= 2")
        if self.lr <= 0:
            raise InvalidInput(f"learning rate must be positive, got {self.lr}")
        if not 0.0 < self.momentum < 1.0:
            raise InvalidInput(f"momentum must be in (0, 1), got {self.momentum}")
        if not 0.0 <= self.opt_momentum < 1.0:
            raise InvalidInput(f"optimizer momentum must be in [0, 1), got {self.opt_momentum}")
        if self.epsilon < 0:
            raise InvalidInput(f"epsilon must be nonnegative, got {self.epsilon}")


def default_dataset(config: RunConfig) -> D.DatasetPair:
    spec = D.make_benchmark_spec(num_classes=config.num_classes, dim=config.dim,
                                 samples_per_class=config.samples_per_class, seed=config.seed)
    return D.generate(spec)


def _sample_batch(batch: FeatureBatch, size: int, rng: np.random.Generator,
                  with_labels: bool) -> FeatureBatch:
    idx = rng.integers(0, batch.n, size=size)
    labels = batch.labels[idx] if (with_labels and batch.labels is not None) else None
    return FeatureBatch(batch.data[idx], labels=labels)


def _stats_to_npz(prefix: str, s: SmoothedStats, out: dict):
    out[f"{prefix}_initialized"] = np.array(s.initialized)
    out[f"{prefix}_momentum"] = np.array(s.momentum)
    if s.initialized:
        out[f"{prefix}_cov"] = s.cov.data
        out[f"{prefix}_mean"] = s.mean


def _stats_from_npz(prefix: str, z) -> SmoothedStats:
    momentum = float(z[f"{prefix}_momentum"])
    if bool(z[f"{prefix}_initialized"]):
        return SmoothedStats(momentum=momentum, cov=SymmetricMatrix(z[f"{prefix}_cov"]),
                             mean=z[f"{prefix}_mean"], initialized=True)
    return SmoothedStats(momentum=momentum)


def save_checkpoint(path, state: TrainState):
    arrays = {"version": np.array(CHECKPOINT_VERSION), "dims": np.array(state.model.dims),
              "step": np.array(state.step)}
    for i, (w, b) in enumerate(zip(state.model.weights, state.model.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
        arrays[f"vw{i}"] = state.velocity_w[i]
        arrays[f"vb{i}"] = state.velocity_b[i]
    _stats_to_npz("cov_s", state.stats_source, arrays)
    _stats_to_npz("cov_t", state.stats_target, arrays)
    _stats_to_npz("mean_s", state.mean_stats_source, arrays)
    _stats_to_npz("mean_t", state.mean_stats_target, arrays)
    meta = {
        "lr": state.lr, "opt_momentum": state.opt_momentum,
        "stats_momentum": state.stats_momentum, "epsilon": state.epsilon,
        "cov_tap": state.cov_tap, "mean_tap": state.mean_tap,
        "rng_state": state.rng.bit_generator.state,
    }
    arrays["meta_json"] = np.array(json.dumps(meta))
    np.savez(path, **arrays)


def load_checkpoint(path) -> TrainState:
    with np.load(path, allow_pickle=False) as z:
        version = int(z["version"])
        if version != CHECKPOINT_VERSION:
            raise InvalidInput(f"unsupported checkpoint version {version}")
        dims = [int(v) for v in z["dims"]]
        n_layers = len(dims) - 1
        model = MlpModel(dims=dims,
                         weights=[z[f"w{i}"] for i in range(n_layers)],
                         biases=[z[f"b{i}"] for i in range(n_layers)])
        meta = json.loads(str(z["meta_json"]))
        rng = np.random.default_rng()
        rng.bit_generator.state = meta["rng_state"]
        return TrainState(
            model=model, lr=meta["lr"], opt_momentum=meta["opt_momentum"],
            velocity_w=[z[f"vw{i}"] for i in range(n_layers)],
            velocity_b=[z[f"vb{i}"] for i in range(n_layers)],
            stats_source=_stats_from_npz("cov_s", z),
            stats_target=_stats_from_npz("cov_t", z),
            mean_stats_source=_stats_from_npz("mean_s", z),
            mean_stats_target=_stats_from_npz("mean_t", z),
            step=int(z["step"]), rng=rng,
            cov_tap=meta["cov_tap"], mean_tap=meta["mean_tap"],
            stats_momentum=meta["stats_momentum"], epsilon=meta["epsilon"],
        )


def init_state(config: RunConfig, feature_dim: int, num_classes: int) -> TrainState:
    rng = np.random.default_rng(config.seed)
    model = MlpModel.init([feature_dim, *config.hidden_dims, num_classes], rng)
    return TrainState(
        model=model, lr=config.lr, opt_momentum=config.opt_momentum,
        velocity_w=[np.zeros_like(w) for w in model.weights],
        velocity_b=[np.zeros_like(b) for b in model.biases],
        stats_source=SmoothedStats(momentum=config.momentum),
        stats_target=SmoothedStats(momentum=config.momentum),
        mean_stats_source=SmoothedStats(momentum=config.momentum),
        mean_stats_target=SmoothedStats(momentum=config.momentum),
        rng=rng,
        cov_tap=f"h{len(config.hidden_dims)}",
        mean_tap=f"h{max(len(config.hidden_dims) - 1, 1)}",
        stats_momentum=config.momentum, epsilon=config.epsilon,
    )


def train(config: RunConfig, dataset: D.DatasetPair, state: TrainState = None,
          metrics_path=None, checkpoint_path=None):
    """Run (or continue) a training run. Returns (state, records) where
    records is the list of per-step metric dicts logged by this call."""
    if dataset.source.labels is None:
        raise InvalidInput("source domain must be labeled")
    num_classes = int(dataset.source.labels.max()) + 1
    if state is None:
        state = init_state(config, dataset.source.d, num_classes)

    records = []
    sink = open(metrics_path, "a", encoding="utf-8") if metrics_path else None
    try:
        while state.step < config.steps:
            src = _sample_batch(dataset.source, config.batch, state.rng, with_labels=True)
            tgt = _sample_batch(dataset.target, config.batch, state.rng, with_labels=False)
            try:
                state, report = train_step(state, src, tgt, config.weights)
            except NumericalFailure:
                if checkpoint_path:
                    save_checkpoint(checkpoint_path, state)
                raise
            record = {"step": state.step, **report}
            # purely step-periodic so an interrupted + resumed run logs the
            # exact same lines as an uninterrupted one
            if state.step % config.eval_every == 0:
                record["target_acc"] = evaluate(state.model, dataset.target)
            records.append(record)
            if sink:
                sink.write(json.dumps(record) + "\n")
    finally:
        if sink:
            sink.close()
    if checkpoint_path:
        save_checkpoint(checkpoint_path, state)
    return state, records


ABLATION_CONFIGS = {
    "baseline": LossWeights.from_multipliers(),
    "coral": LossWeights.from_multipliers(coral=1.0),
    "logcoral": LossWeights.from_multipliers(logcoral=1.0),
    "mean": LossWeights.from_multipliers(mean=1.0),
    "coral+mean": LossWeights.from_multipliers(coral=1.0, mean=1.0),
    "logcoral+mean": LossWeights.from_multipliers(logcoral=1.0, mean=1.0),
}


def ablate(config: RunConfig, seeds, configs=None):
    """Run the ablation grid. Returns {name: {"accs": [...], "mean": m,
    "std": s, "failed": [...]}} with one accuracy per seed."""
    configs = configs or ABLATION_CONFIGS
    table = {}
    for name, weights in configs.items():
        accs, failed = [], []
        for seed in seeds:
            cfg = dataclasses.replace(config, seed=seed, weights=weights)
            dataset = default_dataset(cfg)
            try:
                state, _ = train(cfg, dataset)
                accs.append(evaluate(state.model, dataset.target))
            except NumericalFailure as exc:
                failed.append({"seed": seed, "error": str(exc)})
        table[name] = {
            "accs": accs,
            "mean": float(np.mean(accs)) if accs else float("nan"),
            "std": float(np.std(accs)) if accs else float("nan"),
            "failed": failed,
        }
    return table
