"""
Linear classifiers over varying feature spaces: OLVF and OCDS.

Both threshold a linear margin at 0 and work with labels in {-1, +1}
internally. OLVF keeps sparse dict weights. OCDS needs the pairwise
relatedness of every known feature, so its state is held in dense numpy
arrays indexed by order of first sight and grown on demand.
"""
import logging
import math
from collections import deque

import numpy as np

from haphazard_bench.exceptions import DivergenceError

from .base import OnlineLearner, Prediction, RunningStandardizer, logistic, register, signed, take

logger = logging.getLogger(__name__)

_LOG2 = math.log(2.0)


class _Standardized:
    """Mixin giving a learner an optional running z-score of its inputs."""

    def _setup_scaling(self, standardize):
        self.standardizer = RunningStandardizer() if standardize else None

    def _inputs(self, instance):
        if self.standardizer is None:
            return instance.features
        return self.standardizer.transform(instance.features)

    def _absorb_inputs(self, instance):
        if self.standardizer is not None:
            self.standardizer.absorb(instance.features)


@register
class OLVF(_Standardized, OnlineLearner):
    """
    Online learning from varying feature spaces.

    The instance classifier `w` predicts over the shared features and is
    trained with a PA-I step over shared and new features, followed by an L2
    shrink and truncation to the B fraction of largest weights. The
    feature-space classifier `w_bar` scores which features are present; from a
    zero start its update keeps it at exactly zero, so its loss term rescales
    the instance step by exactly 1.
    """

    name = 'olvf'
    deterministic = True

    def __init__(self, C=1.0, C_bar=1.0, B=1.0, lam=0.0001, standardize=False):
        super().__init__()
        self.C = C
        self.C_bar = C_bar
        self.B = B
        self.lam = lam
        self.w = {}
        self.w_bar = {}
        self._setup_scaling(standardize)
        self._margin = 0.0
        self._label = 0

    @classmethod
    def from_params(cls, params, seed=0):
        return cls(**take(params, {'C': 'C', 'C_bar': 'C_bar', 'B': 'B', 'lambda': 'lam',
                                   'standardize': 'standardize'}))

    def margin(self, features):
        return sum(self.w[fid] * value for fid, value in features.items() if fid in self.w)

    def _predict(self, instance):
        self._margin = self.margin(self._inputs(instance))
        self._label = 1 if self._margin > 0 else 0
        return Prediction(label=self._label, score=logistic(self._margin))

    def _update_feature_space(self, observed, agreement):
        shared = [fid for fid in observed if fid in self.w_bar]
        new = [fid for fid in observed if fid not in self.w_bar]
        z = sum(self.w_bar[fid] for fid in shared)
        loss = float(np.logaddexp(0.0, -agreement * z))
        ratio = (-agreement * z) / loss
        tau = min(self.C_bar, loss / len(observed))
        for fid in shared:
            self.w_bar[fid] = self.w_bar[fid] - tau * ratio * agreement
        for fid in new:
            self.w_bar[fid] = tau * ratio * agreement
        return loss

    def _truncate(self):
        keep = math.ceil(self.B * len(self.w))
        nonzero = [fid for fid, weight in self.w.items() if weight != 0.0]
        if len(nonzero) <= keep:
            return
        nonzero.sort(key=lambda fid: (-abs(self.w[fid]), fid))
        for fid in nonzero[keep:]:
            self.w[fid] = 0.0

    def _update(self, instance, label):
        x = self._inputs(instance)
        self._absorb_inputs(instance)
        if not x:
            return
        y = signed(label)
        agreement = 1.0 if self._label == label else -1.0
        loss = self._update_feature_space(x, agreement)

        hinge = max(0.0, 1.0 - y * self.margin(x))
        squared_norm = sum(value * value for value in x.values())
        if hinge == 0.0 or squared_norm == 0.0:
            return
        tau = min(self.C, hinge / squared_norm) * (loss / _LOG2)
        shrink = 1.0 / (1.0 + self.lam * tau)
        for fid in self.w:
            self.w[fid] *= shrink
        for fid, value in x.items():
            self.w[fid] = self.w.get(fid, 0.0) + tau * y * value
        self._truncate()
        if not all(math.isfinite(weight) for weight in self.w.values()):
            raise DivergenceError(f'OLVF weights became non-finite at t={instance.t}')


class _DenseSpace:
    """Feature id -> row/column index for dense per-feature arrays."""

    def __init__(self):
        self.index = {}

    def __len__(self):
        return len(self.index)

    def indices(self, fids):
        return np.fromiter((self.index[fid] for fid in fids), dtype=np.int64, count=len(fids))


def _grow(array, size):
    if array.ndim == 1:
        grown = np.zeros(size)
        grown[:len(array)] = array
    else:
        grown = np.zeros((size, size))
        grown[:array.shape[0], :array.shape[1]] = array
    return grown


@register
class OCDS(_Standardized, OnlineLearner):
    """
    Online learning from capricious data streams.

    Unobserved known features are reconstructed from observed ones through a
    decayed co-moment graph: each co-observed pair (u, o) carries the
    regression slope of u on o, and x~_u averages slope * x_o over observed o.
    The prediction mixes an observed-space learner W and a learner W~ trained on
    the full reconstructed vector psi; the mix k is re-estimated every T
    instances from the two parts' recent accuracy.
    """

    name = 'ocds'

    def __init__(self, T=8, alpha=0.01, beta0=0.01, beta1=0.0001, beta2=0.0001, k=0.5, decay=0.99,
                 standardize=False):
        super().__init__()
        self.T = T
        self.alpha = alpha
        self.beta0 = beta0
        self.beta1 = beta1
        self.beta2 = beta2
        self.k = k
        self.decay = decay
        self._setup_scaling(standardize)
        self.space = _DenseSpace()
        self.W = np.zeros(0)
        self.W_tilde = np.zeros(0)
        # co-moment of the pair, and second moment of the column feature over the same co-observations
        self.G = np.zeros((0, 0))
        self.H = np.zeros((0, 0))
        self._outcomes = deque(maxlen=max(T, 1))
        self._cache = None

    @classmethod
    def from_params(cls, params, seed=0):
        return cls(**take(params, {'T': 'T', 'alpha': 'alpha', 'beta0': 'beta0', 'beta1': 'beta1',
                                   'beta2': 'beta2', 'k': 'k', 'decay': 'decay', 'standardize': 'standardize'}))

    def _ensure(self, fids):
        for fid in fids:
            if fid not in self.space.index:
                self.space.index[fid] = len(self.space.index)
        size = len(self.space)
        if size > len(self.W):
            capacity = max(size, 2 * len(self.W), 8)
            self.W = _grow(self.W, capacity)
            self.W_tilde = _grow(self.W_tilde, capacity)
            self.G = _grow(self.G, capacity)
            self.H = _grow(self.H, capacity)

    def reconstruct(self, x):
        """Return (observed indices, observed values, unobserved indices, reconstructed values)."""
        known = [fid for fid in x if fid in self.space.index]
        obs = self.space.indices(known)
        x_obs = np.array([x[fid] for fid in known])
        observed = set(known)
        unobs = self.space.indices([fid for fid in self.space.index if fid not in observed])
        if not len(unobs) or not len(obs):
            return obs, x_obs, unobs, np.zeros(len(unobs))
        pair = self.G[np.ix_(unobs, obs)]
        spread = self.H[np.ix_(unobs, obs)]
        valid = spread > 0
        slopes = np.divide(pair, spread, out=np.zeros_like(pair), where=valid)
        support = valid.sum(axis=1)
        totals = slopes @ x_obs
        x_rec = np.divide(totals, support, out=np.zeros(len(unobs)), where=support > 0)
        return obs, x_obs, unobs, x_rec

    def _predict(self, instance):
        x = self._inputs(instance)
        obs, x_obs, unobs, x_rec = self.reconstruct(x)
        observed_margin = float(self.W[obs] @ x_obs) if len(obs) else 0.0
        reconstructed_margin = float(self.W_tilde[unobs] @ x_rec) if len(unobs) else 0.0
        margin = self.k * observed_margin + (1 - self.k) * reconstructed_margin
        self._cache = (x, obs, x_obs, unobs, x_rec, observed_margin, reconstructed_margin)
        return Prediction(label=1 if margin > 0 else 0, score=logistic(margin))

    def laplacian(self, size=None):
        size = len(self.space) if size is None else size
        G = self.G[:size, :size]
        diag = np.sqrt(np.clip(np.diag(G), 0.0, None))
        scale = np.outer(diag, diag)
        A = np.abs(np.divide(G, scale, out=np.zeros_like(G), where=scale > 0))
        np.fill_diagonal(A, 0.0)
        return np.diag(A.sum(axis=1)) - A

    def _reestimate_k(self, label, observed_margin, reconstructed_margin):
        self._outcomes.append((
            (observed_margin > 0) == (label == 1),
            (reconstructed_margin > 0) == (label == 1),
        ))
        if self.T > 0 and (self.instances_seen + 1) % self.T == 0:
            observed_hits = sum(hit for hit, _ in self._outcomes)
            reconstructed_hits = sum(hit for _, hit in self._outcomes)
            self.k = (observed_hits + 1) / (observed_hits + reconstructed_hits + 2)

    def _update(self, instance, label):
        x, _, _, unobs, x_rec, observed_margin, reconstructed_margin = self._cache
        self._absorb_inputs(instance)
        y = signed(label)
        self._reestimate_k(label, observed_margin, reconstructed_margin)

        # sudden features join both learners with zero weight
        self._ensure(x)
        fids = list(x)
        obs = self.space.indices(fids)
        x_obs = np.array([x[fid] for fid in fids])

        # observed-space learner: scaled LMS with an l1 subgradient
        if len(obs):
            residual = y - float(self.W[obs] @ x_obs)
            self.W[obs] -= self.beta0 * (-2.0 * residual * x_obs) + self.beta1 * np.sign(self.W[obs])

        # full-space learner on psi = (observed, alpha-scaled reconstructed)
        size = len(self.space)
        if size:
            psi = np.zeros(size)
            gain = np.zeros(size)
            psi[obs] = x_obs
            gain[obs] = 1.0
            psi[unobs] = x_rec
            gain[unobs] = self.alpha
            w = self.W_tilde[:size]
            residual = y - float(w @ psi)
            L = self.laplacian(size)
            gradient = (self.beta0 * (-2.0 * residual * psi * gain)
                        + self.beta1 * np.sign(w)
                        + self.beta2 * (L + L.T) @ w)
            self.W_tilde[:size] = w - gradient

        self._absorb_graph(x)
        if not (np.isfinite(self.W).all() and np.isfinite(self.W_tilde).all()):
            raise DivergenceError(f'OCDS weights became non-finite at t={instance.t}')

    def _absorb_graph(self, x):
        fids = list(x)
        idx = self.space.indices(fids)
        values = np.array([x[fid] for fid in fids])
        block = np.ix_(idx, idx)
        self.G[block] = self.decay * self.G[block] + np.outer(values, values)
        self.H[block] = self.decay * self.H[block] + np.broadcast_to(values * values, (len(idx), len(idx)))
