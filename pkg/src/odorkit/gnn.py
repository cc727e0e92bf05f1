"""Graph neural networks over molecular graphs.

Two variants share one trunk shape: message passing layers, a
softmax-projected sum readout (one projection per message layer, summed),
and a fully connected head ending in per-task sigmoid logits.

  gcn   concatenation messages: each atom is updated from itself joined
        with the elementwise max over its neighbors, through a selu dense
        layer. Layer dims default to [15, 20, 27, 36], head [96, 63] with
        relu, batchnorm and dropout 0.47.
  mpnn  edge-conditioned messages: a small learned network maps bond
        features to a matrix that multiplies the neighbor state, messages
        are summed and fed to a per-layer GRU update. Five layers of dim
        43, head of three 392 layers with dropout 0.12 and l1/l2 weight
        penalties. Readout adds residual connections between successive
        per-layer readouts before summation.

The activations feeding the final task layer double as a fixed-length
molecule embedding (63-dimensional for the default gcn).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import tensor as T
from .hashutil import hash_ints
from .metrics import mean_auroc
from .molgraph import BondOrder, MolecularGraph

DEFAULT_ELEMENTS = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
_MAX_DEGREE = 5
_MAX_H = 4
N_BOND_FEATURES = 5   # order one-hot (single/double/triple/aromatic) + ring flag


class FeatureError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


@dataclass
class GnnConfig:
    variant: str = "gcn"
    message_dims: tuple = (15, 20, 27, 36)
    readout_dim: int = 175
    head_dims: tuple = (96, 63)
    dropout: float = 0.47
    n_tasks: int = 138
    l1: float = 0.0
    l2: float = 0.0
    elements: tuple = DEFAULT_ELEMENTS
    epochs: int = 300
    batch_size: int = 32
    seed: int = 0
    base_lr: float = 1e-3
    min_lr: float = 1e-5
    restart_period: int = 50
    period_mult: float = 2.0
    pos_weight_strategy: str = "inverse_frequency"   # or "uniform" / "custom"
    pos_weight_clip: tuple = (1.0, 50.0)

    def __post_init__(self):
        if self.variant not in ("gcn", "mpnn"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.n_tasks < 1:
            raise ValueError("n_tasks must be >= 1")
        if self.variant == "mpnn" and len(set(self.message_dims)) != 1:
            raise ValueError("mpnn message layers must share one dim")

    @staticmethod
    def gcn(n_tasks: int = 138, **overrides) -> "GnnConfig":
        return GnnConfig(variant="gcn", n_tasks=n_tasks, **overrides)

    @staticmethod
    def mpnn(n_tasks: int = 138, **overrides) -> "GnnConfig":
        defaults = dict(
            variant="mpnn",
            message_dims=(43,) * 5,
            readout_dim=197,
            head_dims=(392, 392, 392),
            dropout=0.12,
            l1=1e-6,
            l2=1e-6,
            n_tasks=n_tasks,
        )
        defaults.update(overrides)
        return GnnConfig(**defaults)


# ---------------------------------------------------------------------------
# Featurization and batching
# ---------------------------------------------------------------------------

def n_atom_features(cfg: GnnConfig) -> int:
    return len(cfg.elements) + (_MAX_DEGREE + 1) + 1 + (_MAX_H + 1) + 2


def initial_node_features(g: MolecularGraph, cfg: GnnConfig) -> np.ndarray:
    """Encode atoms as one row each: element one-hot, degree one-hot,
    numeric charge, hydrogen-count one-hot, aromatic and ring flags.

    The model applies its learned linear projection to this matrix to
    produce the first-layer node state.
    """
    n_elem = len(cfg.elements)
    elem_index = {e: i for i, e in enumerate(cfg.elements)}
    out = np.zeros((g.n_atoms, n_atom_features(cfg)))
    for i, atom in enumerate(g.atoms):
        if atom.element not in elem_index:
            raise FeatureError(f"element {atom.element!r} not in feature set")
        col = 0
        out[i, elem_index[atom.element]] = 1.0
        col += n_elem
        out[i, col + min(atom.degree, _MAX_DEGREE)] = 1.0
        col += _MAX_DEGREE + 1
        out[i, col] = float(atom.formal_charge)
        col += 1
        out[i, col + min(atom.total_h, _MAX_H)] = 1.0
        col += _MAX_H + 1
        out[i, col] = float(atom.aromatic)
        out[i, col + 1] = float(atom.in_ring)
    return out


def _bond_features(g: MolecularGraph) -> np.ndarray:
    ring_bonds = set()
    for ring in g.rings:
        for i in range(len(ring)):
            a, b = ring[i], ring[(i + 1) % len(ring)]
            ring_bonds.add((min(a, b), max(a, b)))
    out = np.zeros((len(g.bonds), N_BOND_FEATURES))
    for k, bond in enumerate(g.bonds):
        out[k, int(bond.order) - 1] = 1.0
        out[k, 4] = float((bond.a, bond.b) in ring_bonds)
    return out


@dataclass
class GraphBatch:
    """Several molecules packed as one disjoint graph.

    Edges are directed (each bond appears twice) and never cross
    molecule boundaries, so packed forward passes match per-graph ones.
    """

    node_x: np.ndarray          # [N, F]
    edge_src: np.ndarray        # [E]
    edge_dst: np.ndarray        # [E]
    edge_feat: np.ndarray       # [E, 5]
    graph_ids: np.ndarray       # [N]
    n_graphs: int

    @property
    def n_nodes(self) -> int:
        return len(self.node_x)


def encode_graph(g: MolecularGraph, cfg: GnnConfig):
    """Per-molecule arrays cached once and concatenated per batch."""
    x = initial_node_features(g, cfg)
    src, dst = [], []
    for bond in g.bonds:
        src += [bond.a, bond.b]
        dst += [bond.b, bond.a]
    efeat = np.repeat(_bond_features(g), 2, axis=0)
    return x, np.array(src, dtype=np.intp), np.array(dst, dtype=np.intp), efeat


def make_batch(graphs, cfg: GnnConfig, encoded=None) -> GraphBatch:
    if encoded is None:
        encoded = [encode_graph(g, cfg) for g in graphs]
    xs, srcs, dsts, feats, gids = [], [], [], [], []
    offset = 0
    for gid, (x, src, dst, efeat) in enumerate(encoded):
        xs.append(x)
        srcs.append(src + offset)
        dsts.append(dst + offset)
        feats.append(efeat)
        gids.append(np.full(len(x), gid, dtype=np.intp))
        offset += len(x)
    return GraphBatch(
        node_x=np.concatenate(xs),
        edge_src=np.concatenate(srcs) if srcs else np.zeros(0, dtype=np.intp),
        edge_dst=np.concatenate(dsts) if dsts else np.zeros(0, dtype=np.intp),
        edge_feat=np.concatenate(feats) if feats else np.zeros((0, N_BOND_FEATURES)),
        graph_ids=np.concatenate(gids),
        n_graphs=len(encoded),
    )


# ---------------------------------------------------------------------------
# Layers of the two variants
# ---------------------------------------------------------------------------

def gcn_layer(state: T.Tensor, batch: GraphBatch, dense: T.Dense) -> T.Tensor:
    """selu(dense([h_v || max over neighbors of h_u])); isolated atoms
    aggregate a zero vector."""
    neighbor_max = T.segment_max(
        T.gather_rows(state, batch.edge_src), batch.edge_dst, batch.n_nodes
    )
    return T.selu(dense.forward(T.concat_cols(state, neighbor_max)))


def mpnn_layer(state: T.Tensor, batch: GraphBatch,
               edge_net: T.Dense, gru: T.GruCell) -> T.Tensor:
    """GRU(h_v, sum over incoming edges of A(e_uv) h_u) where A is the
    learned map from bond features to a dim x dim matrix."""
    mats = edge_net.forward(T.Tensor(batch.edge_feat))
    messages = T.edge_matvec(mats, T.gather_rows(state, batch.edge_src))
    pooled = T.segment_sum(messages, batch.edge_dst, batch.n_nodes)
    return gru.forward(pooled, state)


def readout(states, batch: GraphBatch, projections, residual: bool) -> T.Tensor:
    """Per layer: project atoms to the readout dim, softmax each row, sum
    over each molecule's atoms. Per-layer results are summed; with
    residual=True each result first absorbs its predecessor."""
    per_layer = []
    for h, proj in zip(states, projections):
        p = T.softmax_rows(proj.forward(h))
        per_layer.append(T.segment_sum(p, batch.graph_ids, batch.n_graphs))
    if residual:
        for i in range(1, len(per_layer)):
            per_layer[i] = T.add(per_layer[i], per_layer[i - 1])
    total = per_layer[0]
    for r in per_layer[1:]:
        total = T.add(total, r)
    return total


class GnnModel:
    """A built model: config plus all layer parameters."""

    def __init__(self, config: GnnConfig, rng: np.random.Generator | None = None):
        self.config = config
        self.trained_epochs = 0
        rng = rng if rng is not None else np.random.default_rng(config.seed)
        dims = config.message_dims
        feat = n_atom_features(config)
        self.input_proj = T.Dense(feat, dims[0], rng)
        self.message_dense: list[T.Dense] = []
        self.edge_nets: list[T.Dense] = []
        self.grus: list[T.GruCell] = []
        prev = dims[0]
        for d in dims:
            if config.variant == "gcn":
                self.message_dense.append(T.Dense(2 * prev, d, rng))
            else:
                self.edge_nets.append(T.Dense(N_BOND_FEATURES, d * d, rng))
                self.grus.append(T.GruCell(d, rng))
            prev = d
        self.readouts = [T.Dense(d, config.readout_dim, rng) for d in dims]
        self.head: list[tuple[T.Dense, T.BatchNorm, T.Dropout]] = []
        prev = config.readout_dim
        for i, d in enumerate(config.head_dims):
            self.head.append((
                T.Dense(prev, d, rng),
                T.BatchNorm(d),
                T.Dropout(config.dropout, layer_key=i + 1),
            ))
            prev = d
        self.out = T.Dense(prev, config.n_tasks, rng)

    # -- parameter bookkeeping ------------------------------------------

    def parameters(self) -> dict[str, T.Tensor]:
        params = {"input_proj.w": self.input_proj.w, "input_proj.b": self.input_proj.b}
        for i, dense in enumerate(self.message_dense):
            params[f"msg{i}.w"] = dense.w
            params[f"msg{i}.b"] = dense.b
        for i, (enet, gru) in enumerate(zip(self.edge_nets, self.grus)):
            params[f"edge{i}.w"] = enet.w
            params[f"edge{i}.b"] = enet.b
            for name, t in gru.parameters().items():
                params[f"gru{i}.{name}"] = t
        for i, ro in enumerate(self.readouts):
            params[f"readout{i}.w"] = ro.w
            params[f"readout{i}.b"] = ro.b
        for i, (dense, bn, _) in enumerate(self.head):
            params[f"head{i}.w"] = dense.w
            params[f"head{i}.b"] = dense.b
            params[f"head{i}.gamma"] = bn.gamma
            params[f"head{i}.beta"] = bn.beta
        params["out.w"] = self.out.w
        params["out.b"] = self.out.b
        return params

    def buffers(self) -> dict[str, np.ndarray]:
        out = {}
        for i, (_, bn, _) in enumerate(self.head):
            out[f"head{i}.running_mean"] = bn.running_mean
            out[f"head{i}.running_var"] = bn.running_var
        return out

    def head_weights(self):
        """Dense weight matrices the l1/l2 penalty applies to."""
        return [dense.w for dense, _, _ in self.head] + [self.out.w]

    # -- forward --------------------------------------------------------

    def forward(self, batch: GraphBatch, mode: str = "infer",
                rng_key: tuple[int, int] = (0, 0)):
        """Returns (logits, embedding) tensors, one row per molecule."""
        h = self.input_proj.forward(T.Tensor(batch.node_x))
        states = []
        for i in range(len(self.config.message_dims)):
            if self.config.variant == "gcn":
                h = gcn_layer(h, batch, self.message_dense[i])
            else:
                h = mpnn_layer(h, batch, self.edge_nets[i], self.grus[i])
            states.append(h)
        x = readout(states, batch, self.readouts,
                    residual=self.config.variant == "mpnn")
        for dense, bn, drop in self.head:
            x = dense.forward(x)
            x = T.relu(x)
            x = bn.forward(x, mode)
            x = drop.forward(x, mode, rng_key)
        return self.out.forward(x), x

    def predict(self, graphs, batch_size: int = 256):
        """Infer-mode probabilities and embeddings as numpy arrays."""
        probs, embeds = [], []
        for lo in range(0, len(graphs), batch_size):
            batch = make_batch(graphs[lo:lo + batch_size], self.config)
            logits, emb = self.forward(batch, mode="infer")
            probs.append(T._sigmoid(logits.data))
            embeds.append(emb.data)
        return np.concatenate(probs), np.concatenate(embeds)


def gnn_forward(model: GnnModel, g: MolecularGraph, mode: str = "infer",
                rng_key: tuple[int, int] = (0, 0)):
    """Single-molecule forward: (logits vector, embedding vector)."""
    logits, emb = model.forward(make_batch([g], model.config), mode, rng_key)
    return logits.data[0], emb.data[0]


def embed(model: GnnModel, g: MolecularGraph) -> np.ndarray:
    """Infer-mode embedding: the activations feeding the task layer."""
    return gnn_forward(model, g, mode="infer")[1]


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def positive_class_weights(labels: np.ndarray, strategy: str = "inverse_frequency",
                           clip: tuple = (1.0, 50.0),
                           custom: np.ndarray | None = None) -> np.ndarray:
    """Per-task positive-class weights for the cross-entropy loss."""
    n, n_tasks = labels.shape
    if strategy == "uniform":
        return np.ones(n_tasks)
    if strategy == "custom":
        if custom is None or len(custom) != n_tasks:
            raise ValueError("custom strategy needs one weight per task")
        return np.asarray(custom, dtype=np.float64)
    if strategy != "inverse_frequency":
        raise ValueError(f"unknown weight strategy {strategy!r}")
    counts = labels.sum(axis=0)
    with np.errstate(divide="ignore"):
        w = np.where(counts > 0, n / np.maximum(counts, 1), clip[1])
    return np.clip(w, clip[0], clip[1])


@dataclass
class EpochStats:
    epoch: int
    lr: float
    train_loss: float
    val_loss: float
    val_mean_auroc: float


def train(model: GnnModel, graphs, labels: np.ndarray, splits: dict,
          custom_weights: np.ndarray | None = None,
          log_every: int = 0) -> list[EpochStats]:
    """Train with weighted cross entropy, Adam, and cosine warm restarts.

    splits maps "train" and "val" to index arrays; labels is the full
    binary molecule x task matrix. Deterministic given config.seed.
    Raises TrainingError on an empty train split or non-finite loss.
    """
    cfg = model.config
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape[1] != cfg.n_tasks:
        raise ValueError(f"labels have {labels.shape[1]} tasks, config says {cfg.n_tasks}")
    train_idx = np.asarray(splits["train"], dtype=np.intp)
    val_idx = np.asarray(splits.get("val", []), dtype=np.intp)
    if len(train_idx) == 0:
        raise TrainingError("empty train split")

    pos_w = positive_class_weights(labels[train_idx], cfg.pos_weight_strategy,
                                   cfg.pos_weight_clip, custom_weights)
    encoded = {int(i): encode_graph(graphs[i], cfg) for i in np.concatenate([train_idx, val_idx])}
    schedule = T.CosineRestartSchedule(cfg.base_lr, cfg.min_lr,
                                       cfg.restart_period, cfg.period_mult)
    params = model.parameters()
    state = T.AdamState()
    adam_cfg = T.AdamConfig(lr=cfg.base_lr)
    rng = np.random.default_rng(hash_ints((cfg.seed, 0xBA7C4)) % (2 ** 63))
    history = []

    for epoch in range(cfg.epochs):
        lr = T.cosine_warm_restart_lr(epoch, schedule)
        order = train_idx[rng.permutation(len(train_idx))]
        loss_sum = 0.0
        for bi, lo in enumerate(range(0, len(order), cfg.batch_size)):
            idx = order[lo:lo + cfg.batch_size]
            batch = make_batch(None, cfg, encoded=[encoded[int(i)] for i in idx])
            logits, _ = model.forward(batch, mode="train",
                                      rng_key=(cfg.seed, epoch * 100003 + bi))
            loss = T.weighted_bce(logits, labels[idx], pos_w)
            if cfg.l1 or cfg.l2:
                loss = T.add(loss, T.regularization_penalty(model.head_weights(),
                                                            cfg.l1, cfg.l2))
            if not np.isfinite(loss.data):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {bi}")
            for p in params.values():
                p.grad = None
            T.backward(loss)
            grads = {name: p.grad for name, p in params.items() if p.grad is not None}
            T.adam_step(params, grads, state, adam_cfg, lr=lr)
            loss_sum += float(loss.data) * len(idx)
        train_loss = loss_sum / len(order)

        val_loss, val_auroc = float("nan"), float("nan")
        if len(val_idx):
            batch = make_batch(None, cfg, encoded=[encoded[int(i)] for i in val_idx])
            logits, _ = model.forward(batch, mode="infer")
            val_loss = float(T.weighted_bce(logits, labels[val_idx], pos_w).data)
            val_auroc = mean_auroc(T._sigmoid(logits.data), labels[val_idx])
        history.append(EpochStats(epoch, lr, train_loss, val_loss, val_auroc))
        if log_every and epoch % log_every == 0:
            print(f"epoch {epoch:4d} lr {lr:.5f} train {train_loss:.4f} "
                  f"val {val_loss:.4f} auroc {val_auroc:.4f}")
        model.trained_epochs += 1
    return history


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_checkpoint(model: GnnModel, path,
                    optimizer_state: T.AdamState | None = None,
                    extra: dict | None = None):
    """Versioned JSON checkpoint; floats round-trip bit-exactly."""
    blob = {
        "format_version": CHECKPOINT_VERSION,
        "model": "gnn",
        "extra": extra or {},
        "config": asdict(model.config),
        "trained_epochs": model.trained_epochs,
        "rng_seed": model.config.seed,
        "params": {
            name: {"shape": list(t.data.shape), "data": t.data.ravel().tolist()}
            for name, t in model.parameters().items()
        },
        "buffers": {
            name: arr.tolist() for name, arr in model.buffers().items()
        },
        "optimizer": None if optimizer_state is None else {
            "step": optimizer_state.step,
            "m": {k: v.tolist() for k, v in optimizer_state.m.items()},
            "v": {k: v.tolist() for k, v in optimizer_state.v.items()},
        },
    }
    with open(path, "w") as fh:
        json.dump(blob, fh)


def load_checkpoint(path) -> GnnModel:
    with open(path) as fh:
        blob = json.load(fh)
    if blob.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {blob.get('format_version')}")
    cfg_dict = blob["config"]
    for key in ("message_dims", "head_dims", "elements", "pos_weight_clip"):
        cfg_dict[key] = tuple(cfg_dict[key])
    model = GnnModel(GnnConfig(**cfg_dict))
    model.trained_epochs = blob["trained_epochs"]
    params = model.parameters()
    for name, entry in blob["params"].items():
        params[name].data = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
    for i, (_, bn, _) in enumerate(model.head):
        bn.running_mean = np.array(blob["buffers"][f"head{i}.running_mean"], dtype=np.float64)
        bn.running_var = np.array(blob["buffers"][f"head{i}.running_var"], dtype=np.float64)
    return model
