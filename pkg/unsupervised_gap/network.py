import base64
import json
import logging
import pathlib

import numpy as np

from unsupervised_gap.gap import DimensionError
from unsupervised_gap.gap import GapError

logger = logging.getLogger('network')

CHECKPOINT_VERSION = 1


class DivergenceError(GapError):
    def __init__(self, message, epoch=None, batch=None):
        if epoch is not None:
            message = f'{message} (epoch {epoch}, batch {batch})'
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


def softmax(v, axis=-1):
    """Softmax along `axis`, with the maximum subtracted for stability."""
    v = np.asarray(v, dtype=np.float64)
    shifted = v - np.max(v, axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=axis, keepdims=True)


def relu(x):
    return np.maximum(x, 0.0)


class FeatureNorm(object):
    """Per-feature standardization, computed once on the training set."""

    def __init__(self, mean, std):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.std = np.asarray(std, dtype=np.float64)

    @staticmethod
    def fit(features):
        features = np.asarray(features, dtype=np.float64)
        std = features.std(axis=0)
        # Constant features are centered but not scaled.
        std = np.where(std > 0, std, 1.0)
        return FeatureNorm(features.mean(axis=0), std)

    def apply(self, features):
        return (features - self.mean) / self.std

    def to_json(self):
        return {'mean': self.mean.tolist(), 'std': self.std.tolist()}

    @staticmethod
    def from_json(value):
        if value is None:
            return None
        return FeatureNorm(value['mean'], value['std'])


class ForwardCache(object):
    """Inputs and outputs of each layer for one mini-batch.

    `activations[0]` is the normalized input and `activations[k]` the output
    of layer `k`; `pre_activations[k - 1]` is its input to the activation."""

    def __init__(self, activations, pre_activations, u):
        self.activations = activations
        self.pre_activations = pre_activations
        self.u = u

    @property
    def batch_size(self):
        return self.u.shape[0]


class MlpModel(object):
    """A fully-connected network with ReLU hidden layers whose final layer
    is split into `split[0]` groups of `split[1]` logits, each normalized by
    its own Softmax."""

    def __init__(self, layer_dims, split, weights, biases, feature_norm=None):
        self.layer_dims = [int(d) for d in layer_dims]
        self.split = (int(split[0]), int(split[1]))
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.feature_norm = feature_norm
        MlpModel._check_dims(self.layer_dims, self.split)
        assert len(self.weights) == len(self.biases) == self.n_layers
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_dims[k + 1], self.layer_dims[k])
            if w.shape != expected or b.shape != (expected[0], ):
                raise DimensionError(
                    f'Layer {k} has shapes {w.shape}, {b.shape}; '
                    f'expected {expected}, ({expected[0]},)')

    @staticmethod
    def _check_dims(layer_dims, split):
        if len(layer_dims) < 2:
            raise DimensionError(
                f'At least an input and an output layer are required: '
                f'{layer_dims}')
        if layer_dims[-1] != split[0] * split[1]:
            raise DimensionError(
                f'Output width {layer_dims[-1]} does not match split '
                f'{split[0]}x{split[1]}')

    @staticmethod
    def init(layer_dims, split, seed):
        """Creates a model with zero biases and zero-mean normal weights of
        variance 2/fan_in, or 1/fan_in for the Softmax layer."""
        layer_dims = [int(d) for d in layer_dims]
        MlpModel._check_dims(layer_dims, split)
        rng = np.random.default_rng(seed)
        weights = []
        biases = []
        n_layers = len(layer_dims) - 1
        for k in range(n_layers):
            fan_in = layer_dims[k]
            gain = 1.0 if k == n_layers - 1 else 2.0
            weights.append(
                rng.standard_normal((layer_dims[k + 1], fan_in)) *
                np.sqrt(gain / fan_in))
            biases.append(np.zeros(layer_dims[k + 1]))
        return MlpModel(layer_dims, split, weights, biases)

    @property
    def n_layers(self):
        return len(self.layer_dims) - 1

    @property
    def n_parameters(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    @property
    def parameters(self):
        """Weights and biases interleaved, layer by layer."""
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b

    def check_features(self, features):
        """Returns `features` as a float64 (batch, input width) matrix."""
        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 1:
            features = features[None, :]
        if features.ndim != 2 or features.shape[1] != self.layer_dims[0]:
            raise DimensionError(f'Features of shape {features.shape} do not '
                                 f'match input width {self.layer_dims[0]}')
        return features

    def forward(self, features):
        """Returns the (batch, I, J) soft assignments and the cache for
        `backward`. Each item's row sums to 1 by construction."""
        a = self.check_features(features)
        if self.feature_norm is not None:
            a = self.feature_norm.apply(a)
        activations = [a]
        pre_activations = []
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T + b
            pre_activations.append(z)
            if k < self.n_layers - 1:
                a = relu(z)
                activations.append(a)
        n_items, n_knapsacks = self.split
        logits = pre_activations[-1].reshape(-1, n_items, n_knapsacks)
        u = softmax(logits, axis=-1)
        return u, ForwardCache(activations, pre_activations, u)

    def backward(self, cache, dl_du):
        """Backpropagates `dl_du` (the loss gradient w.r.t. the soft
        assignments) and returns `[(dW, db), ...]` for each layer."""
        u = cache.u
        dl_du = np.asarray(dl_du, dtype=np.float64)
        if dl_du.size != u.size or dl_du.shape[0] != u.shape[0]:
            raise DimensionError(f'Gradient of shape {dl_du.shape} does not '
                                 f'match outputs of shape {u.shape}')
        dl_du = dl_du.reshape(u.shape)
        # Softmax Jacobian of each group: (diag(u) - u u^T) g.
        dz = u * (dl_du - np.sum(u * dl_du, axis=-1, keepdims=True))
        dz = dz.reshape(u.shape[0], -1)
        grads = [None] * self.n_layers
        for k in reversed(range(self.n_layers)):
            a_prev = cache.activations[k]
            grads[k] = (dz.T @ a_prev, dz.sum(axis=0))
            if k == 0:
                break
            da = dz @ self.weights[k]
            # ReLU subgradient is 0 at 0.
            dz = da * (cache.pre_activations[k - 1] > 0)
        return grads

    def to_json(self):
        def encode(array):
            data = np.ascontiguousarray(array, dtype='<f8').tobytes()
            return base64.b64encode(data).decode('ascii')

        return {
            'version': CHECKPOINT_VERSION,
            'layer_dims': self.layer_dims,
            'split': list(self.split),
            'feature_norm': (self.feature_norm.to_json()
                             if self.feature_norm else None),
            'encoding': 'base64-float64-le',
            'weights': [encode(w) for w in self.weights],
            'biases': [encode(b) for b in self.biases],
        }

    @staticmethod
    def from_json(value):
        version = value.get('version')
        if version != CHECKPOINT_VERSION:
            raise GapError(f'Unsupported checkpoint version {version}')
        layer_dims = value['layer_dims']

        def decode(text, shape):
            array = np.frombuffer(base64.b64decode(text), dtype='<f8')
            if array.size != int(np.prod(shape)):
                raise DimensionError(f'Checkpoint array has {array.size} '
                                     f'values, expected shape {shape}')
            return array.astype(np.float64).reshape(shape)

        weights = [
            decode(text, (layer_dims[k + 1], layer_dims[k]))
            for k, text in enumerate(value['weights'])
        ]
        biases = [
            decode(text, (layer_dims[k + 1], ))
            for k, text in enumerate(value['biases'])
        ]
        return MlpModel(layer_dims, value['split'], weights, biases,
                        FeatureNorm.from_json(value.get('feature_norm')))

    def save(self, path):
        if isinstance(path, str):
            path = pathlib.Path(path)
        logger.info('Saving checkpoint to "%s"', path)
        path.write_text(json.dumps(self.to_json(), sort_keys=True))
        return path

    @staticmethod
    def load(path):
        if isinstance(path, str):
            path = pathlib.Path(path)
        logger.info('Reading checkpoint: "%s"', path)
        return MlpModel.from_json(json.loads(path.read_text()))

    def __str__(self):
        return (f'MlpModel(dims={self.layer_dims}, '
                f'split={self.split[0]}x{self.split[1]}, '
                f'parameters={self.n_parameters:,})')

    def for_inference(self, dtype=np.float32):
        return InferenceModel(self, dtype)


class InferenceModel(object):
    """A frozen copy of a model for batched inference. Hidden layers run in
    `dtype`; the Softmax runs in float64 so rows still sum to 1."""

    def __init__(self, model, dtype=np.float32):
        self.model = model
        self.dtype = dtype
        # Transposed once so `predict` multiplies row-major batches.
        self.weights = [np.ascontiguousarray(w.T, dtype=dtype)
                        for w in model.weights]
        self.biases = [b.astype(dtype) for b in model.biases]

    def predict(self, features):
        """Returns the (batch, I, J) soft assignments."""
        model = self.model
        a = model.check_features(features)
        if model.feature_norm is not None:
            a = model.feature_norm.apply(a)
        a = a.astype(self.dtype)
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            a = a @ w + b
            if k < last:
                np.maximum(a, 0, out=a)
        n_items, n_knapsacks = model.split
        logits = a.astype(np.float64).reshape(-1, n_items, n_knapsacks)
        return softmax(logits, axis=-1)


class AdamState(object):
    def __init__(self,
                 first_moment,
                 second_moment,
                 step_count=0,
                 beta1=0.9,
                 beta2=0.999,
                 eps_adam=1e-8):
        self.first_moment = first_moment
        self.second_moment = second_moment
        self.step_count = step_count
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps_adam = eps_adam

    @staticmethod
    def for_model(model, beta1=0.9, beta2=0.999, eps_adam=1e-8):
        """Creates zero moments for the parameters of `model`."""
        return AdamState([np.zeros_like(p) for p in model.parameters],
                         [np.zeros_like(p) for p in model.parameters],
                         beta1=beta1,
                         beta2=beta2,
                         eps_adam=eps_adam)


def adam_step(model, grads, state, lr):
    """Applies one bias-corrected Adam update in place and returns
    `(model, state)`."""
    flat_grads = [g for pair in grads for g in pair]
    params = list(model.parameters)
    if len(flat_grads) != len(params):
        raise DimensionError(f'{len(flat_grads)} gradients for '
                             f'{len(params)} parameters')
    for param, grad in zip(params, flat_grads):
        if grad.shape != param.shape:
            raise DimensionError(f'Gradient shape {grad.shape} does not '
                                 f'match parameter shape {param.shape}')
        if not np.all(np.isfinite(grad)):
            raise DivergenceError('Non-finite gradient')
    state.step_count += 1
    t = state.step_count
    beta1 = state.beta1
    beta2 = state.beta2
    correction1 = 1 - beta1**t
    correction2 = 1 - beta2**t
    for param, grad, m, v in zip(params, flat_grads, state.first_moment,
                                 state.second_moment):
        m *= beta1
        m += (1 - beta1) * grad
        v *= beta2
        v += (1 - beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        param -= lr * m_hat / (np.sqrt(v_hat) + state.eps_adam)
    return model, state
