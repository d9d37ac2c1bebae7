"""
Aux-Drop: an online deep network with one output head per hidden layer,
combined by hedge weights, whose first hidden layer is an AuxLayer.

Each haphazard feature owns one aux node of the AuxLayer; the remaining
non-aux nodes read a constant input. Aux nodes of unobserved features are
always dropped, further nodes are dropped at random until a `dropout`
fraction of the layer is off, and survivors are rescaled (inverted dropout).
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from haphazard_bench.exceptions import CapacityExhaustedError, DivergenceError, InvalidInputError

from .base import OnlineLearner, Prediction, register, take

logger = logging.getLogger(__name__)


def bce(logit, label):
    """Binary cross-entropy of a sigmoid head, computed from its logit."""
    return float(np.logaddexp(0.0, logit) - label * logit)


class AuxLayer:
    """Injective map of feature ids onto the first `capacity` nodes of a layer of `size` nodes."""

    def __init__(self, size, capacity):
        if not 0 < capacity <= size:
            raise InvalidInputError(f'aux capacity must lie in [1, {size}], got {capacity}')
        self.size = size
        self.capacity = capacity
        self.nodes = {}

    @property
    def non_aux(self):
        return self.size - self.capacity

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, fid):
        return fid in self.nodes

    def assign(self, fid):
        if len(self.nodes) >= self.capacity:
            raise CapacityExhaustedError(fid, self.capacity)
        self.nodes[fid] = len(self.nodes)
        return self.nodes[fid]

    def inputs(self, features):
        """Per-node input and the nodes forced off: unassigned slots and aux nodes of unobserved features."""
        u = np.zeros(self.size)
        u[self.capacity:] = 1.0
        forced = np.ones(self.size, dtype=bool)
        forced[self.capacity:] = False
        for fid, node in self.nodes.items():
            value = features.get(fid)
            if value is not None:
                u[node] = value
                forced[node] = False
        return u, forced


def drop_mask(forced, dropout, rng):
    """Keep mask with exactly max(ceil(dropout * size), forced count) nodes off."""
    size = len(forced)
    target = math.ceil(dropout * size)
    dropped = forced.copy()
    extra = target - int(forced.sum())
    if extra > 0:
        candidates = np.flatnonzero(~forced)
        dropped[rng.choice(candidates, size=extra, replace=False)] = True
    return ~dropped


@dataclass
class Trace:
    """Everything one forward pass leaves behind for the backward pass."""

    u: np.ndarray
    keep: np.ndarray
    scale: float
    pre: list = field(default_factory=list)
    hidden: list = field(default_factory=list)
    logits: np.ndarray = None


class HedgedNetwork:
    """
    Parameters: AuxLayer slopes `a` and biases `c` (the AuxLayer is linear in
    its single input), dense ReLU layers `W[i]`, `b[i]`, and a sigmoid head
    `V[l]`, `v0[l]` on every hidden layer. `alpha` is the hedge distribution
    over heads.
    """

    def __init__(self, aux_size, n_hidden, width, rng):
        self.a = rng.normal(0.0, 0.1, aux_size)
        self.c = np.zeros(aux_size)
        self.W = []
        self.b = []
        fan_in = aux_size
        for _ in range(n_hidden - 1):
            self.W.append(rng.normal(0.0, math.sqrt(2.0 / fan_in), (width, fan_in)))
            self.b.append(np.zeros(width))
            fan_in = width
        sizes = [aux_size] + [width] * (n_hidden - 1)
        self.V = [rng.normal(0.0, 0.1, size) for size in sizes]
        self.v0 = np.zeros(n_hidden)
        self.alpha = np.full(n_hidden, 1.0 / n_hidden)

    @property
    def n_layers(self):
        return len(self.V)

    def parameters(self):
        return [self.a, self.c, *self.W, *self.b, *self.V, self.v0]

    def forward(self, u, keep, scale):
        trace = Trace(u=u, keep=keep, scale=scale)
        h = (self.a * u + self.c) * keep * scale
        trace.pre.append(None)
        trace.hidden.append(h)
        for W, b in zip(self.W, self.b):
            pre = W @ h + b
            h = np.maximum(pre, 0.0)
            trace.pre.append(pre)
            trace.hidden.append(h)
        trace.logits = np.array([V @ h + v0 for V, h, v0 in zip(self.V, trace.hidden, self.v0)])
        return trace

    def score(self, trace):
        return float(self.alpha @ expit(trace.logits))

    def losses(self, trace, label):
        return np.array([bce(logit, label) for logit in trace.logits])

    def loss(self, trace, label):
        return float(self.alpha @ self.losses(trace, label))

    def gradients(self, trace, label):
        """Gradients of the hedge-weighted loss, in the order of `parameters()`."""
        d_logits = self.alpha * (expit(trace.logits) - label)
        gV = [d * h for d, h in zip(d_logits, trace.hidden)]
        gv0 = d_logits.copy()
        gW = [None] * len(self.W)
        gb = [None] * len(self.b)

        g_h = d_logits[-1] * self.V[-1]
        for layer in range(self.n_layers - 1, 0, -1):
            g_pre = g_h * (trace.pre[layer] > 0)
            gW[layer - 1] = np.outer(g_pre, trace.hidden[layer - 1])
            gb[layer - 1] = g_pre
            g_h = self.W[layer - 1].T @ g_pre + d_logits[layer - 1] * self.V[layer - 1]
        g_aux = g_h * trace.keep * trace.scale
        return [g_aux * trace.u, g_aux, *gW, *gb, *gV, gv0]

    def step(self, trace, label, lr):
        if lr == 0:
            return
        for param, grad in zip(self.parameters(), self.gradients(trace, label)):
            param -= lr * grad

    def hedge(self, losses, discount, smoothing):
        """Discount each head by b ** loss, renormalize, then mix with the uniform floor s / L."""
        alpha = self.alpha * np.power(discount, losses)
        alpha /= alpha.sum()
        self.alpha = smoothing / self.n_layers + (1.0 - smoothing) * alpha


@register
class AuxDrop(OnlineLearner):
    name = 'auxdrop'
    sized = True

    def __init__(self, max_num_hidden_layers=6, neuron_per_hidden_layer=50, n_neuron_aux_layer=100,
                 aux_capacity=None, b=0.99, s=0.2, lr=0.01, dropout_p=0.3, seed=0):
        super().__init__()
        if max_num_hidden_layers < 1:
            raise InvalidInputError('Aux-Drop needs at least the AuxLayer')
        if not 0.0 <= dropout_p < 1.0:
            raise InvalidInputError(f'dropout_p must lie in [0, 1), got {dropout_p}')
        self.rng = np.random.default_rng(seed)
        self.layer = AuxLayer(n_neuron_aux_layer, aux_capacity or max(1, n_neuron_aux_layer // 5))
        self.net = HedgedNetwork(n_neuron_aux_layer, max_num_hidden_layers, neuron_per_hidden_layer, self.rng)
        self.discount = b
        self.smoothing = s
        self.lr = lr
        self.dropout = dropout_p
        self._trace = None

    @classmethod
    def from_params(cls, params, seed=0, n_features=None):
        kwargs = take(params, {key: key for key in (
            'max_num_hidden_layers', 'neuron_per_hidden_layer', 'n_neuron_aux_layer', 'aux_capacity',
            'b', 's', 'lr', 'dropout_p')})
        if n_features:
            kwargs.setdefault('n_neuron_aux_layer', 5 * n_features)
            kwargs.setdefault('aux_capacity', n_features)
        return cls(seed=seed, **kwargs)

    def grow_aux_nodes(self, sudden):
        """Give each new feature a fresh aux node; zeroed outgoing weights keep the network function unchanged."""
        for fid in sorted(sudden):
            node = self.layer.assign(fid)
            self.net.a[node] = self.rng.normal(0.0, 0.1)
            self.net.c[node] = 0.0
            self.net.V[0][node] = 0.0
            if self.net.W:
                self.net.W[0][:, node] = 0.0
        if sudden:
            logger.debug('Aux-Drop grew %d aux nodes (%d/%d used)', len(sudden), len(self.layer), self.layer.capacity)

    def forward(self, features):
        u, forced = self.layer.inputs(features)
        keep = drop_mask(forced, self.dropout, self.rng)
        kept = int(keep.sum())
        scale = self.layer.size / kept if kept else 0.0
        return self.net.forward(u, keep, scale)

    def _predict(self, instance):
        self.grow_aux_nodes([fid for fid in instance.features if fid not in self.layer])
        self._trace = self.forward(instance.features)
        score = self.net.score(self._trace)
        return Prediction(label=1 if score > 0.5 else 0, score=min(max(score, 0.0), 1.0))

    def _update(self, instance, label):
        losses = self.net.losses(self._trace, label)
        if not np.isfinite(losses).all():
            raise DivergenceError(f'Aux-Drop loss became non-finite at t={instance.t}')
        self.net.step(self._trace, label, self.lr)
        self.net.hedge(losses, self.discount, self.smoothing)
        if not all(np.isfinite(param).all() for param in self.net.parameters()):
            raise DivergenceError(f'Aux-Drop parameters became non-finite at t={instance.t}')
