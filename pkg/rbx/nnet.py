"""

RbxNnet: a small dense feedforward network with deterministic training.

A Network is built from a NetworkSpec and trained with train(), which returns
a new Network together with its TrainHistory; the input network is never
modified.

>>> net = init(NetworkSpec([2, 5, 1], seed=7))
>>> [w.shape for w in net.weights]
[(5, 2), (1, 5)]
>>> forward(net, [0.1, 0.2]).shape
(1,)

"""

import collections
import json
import logging

import numpy as np

from .common import RbxError

logger = logging.getLogger(__name__)

class NetworkError(RbxError):
    pass

class NetworkShapeError(NetworkError):
    pass

class EmptyDatasetError(NetworkError):
    pass

class TrainingDivergedError(NetworkError):
    def __init__(self, msg, epoch=None, learning_rate=None, last_loss=None):
        NetworkError.__init__(self, msg)
        self.epoch = epoch
        self.learning_rate = learning_rate
        self.last_loss = last_loss

HIDDEN_ACTIVATIONS = ("tanh", "relu")
OUTPUT_ACTIVATIONS = ("linear", "tanh")
OPTIMIZERS = ("sgd", "adam")

def _tanh(z):
    return np.tanh(z)

def _tanh_prime(z, a):
    return 1.0 - a * a

def _relu(z):
    return np.maximum(z, 0.0)

def _relu_prime(z, a):
    # subgradient 0 at the kink
    return (z > 0.0).astype(float)

def _linear(z):
    return z

def _linear_prime(z, a):
    return np.ones_like(z)

_activations = {
    "tanh": (_tanh, _tanh_prime),
    "relu": (_relu, _relu_prime),
    "linear": (_linear, _linear_prime),
}

class NetworkSpec(collections.namedtuple("NetworkSpec", "layer_sizes hidden_activation output_activation seed")):
    """
    layer_sizes includes the input size, e.g. [2, 10, 5, 1].
    """
    __slots__ = ()

    def __new__(cls, layer_sizes, hidden_activation="tanh", output_activation="linear", seed=0):
        layer_sizes = tuple(int(n) for n in layer_sizes)
        if len(layer_sizes) < 2:
            raise NetworkShapeError("a network needs at least two layers, got %r" % (layer_sizes,))
        if any(n < 1 for n in layer_sizes):
            raise NetworkShapeError("layer sizes must be >= 1, got %r" % (layer_sizes,))
        hidden_activation = hidden_activation.lower()
        output_activation = output_activation.lower()
        if hidden_activation not in HIDDEN_ACTIVATIONS:
            raise NetworkError("unknown hidden activation %r" % hidden_activation)
        if output_activation not in OUTPUT_ACTIVATIONS:
            raise NetworkError("unknown output activation %r" % output_activation)
        seed = int(seed)
        if seed < 0:
            raise NetworkError("seed must be unsigned, got %d" % seed)
        return super().__new__(cls, layer_sizes, hidden_activation, output_activation, seed)

    @property
    def n_inputs(self):
        return self.layer_sizes[0]

    @property
    def n_outputs(self):
        return self.layer_sizes[-1]

class TrainConfig(collections.namedtuple("TrainConfig",
        "optimizer learning_rate batch_size epochs shuffle_seed shuffle lr_patience")):
    __slots__ = ()

    def __new__(cls, optimizer="sgd", learning_rate=0.01, batch_size=1, epochs=100,
                shuffle_seed=0, shuffle=True, lr_patience=50):
        optimizer = optimizer.lower()
        if optimizer not in OPTIMIZERS:
            raise NetworkError("unknown optimizer %r" % optimizer)
        if not learning_rate > 0:
            raise NetworkError("learning_rate must be > 0, got %r" % learning_rate)
        if int(batch_size) < 1:
            raise NetworkError("batch_size must be >= 1, got %r" % batch_size)
        if int(epochs) < 0:
            raise NetworkError("epochs must be >= 0, got %r" % epochs)
        if lr_patience is not None and int(lr_patience) < 1:
            raise NetworkError("lr_patience must be >= 1 or None, got %r" % lr_patience)
        return super().__new__(cls, optimizer, float(learning_rate), int(batch_size), int(epochs),
                               int(shuffle_seed), bool(shuffle),
                               None if lr_patience is None else int(lr_patience))

class Dataset(collections.namedtuple("Dataset", "inputs targets")):
    """
    Rows of inputs and targets as 2D float arrays; a 1D targets array is
    read as one target per row.
    """
    __slots__ = ()

    def __new__(cls, inputs, targets):
        inputs = np.asarray(inputs, dtype=float)
        targets = np.asarray(targets, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs.reshape(-1, 1)
        if targets.ndim == 1:
            targets = targets.reshape(-1, 1)
        if inputs.ndim != 2 or targets.ndim != 2:
            raise NetworkShapeError("inputs and targets must be 2D, got %r and %r" % (inputs.shape, targets.shape))
        if len(inputs) != len(targets):
            raise NetworkShapeError("%d input rows but %d target rows" % (len(inputs), len(targets)))
        if len(inputs) == 0:
            raise EmptyDatasetError("empty dataset")
        return super().__new__(cls, inputs, targets)

    def __len__(self):
        return len(self.inputs)

    def concat(self, other):
        return Dataset(np.vstack([self.inputs, other.inputs]), np.vstack([self.targets, other.targets]))

TrainHistory = collections.namedtuple("TrainHistory", "initial_loss train_loss validation_loss learning_rates")

class Network(object):

    """
    Weights are (fan_out x fan_in) matrices, one per layer.
    """

    def __init__(self, spec, weights, biases):
        self.spec = spec
        self.weights = [np.array(w, dtype=float) for w in weights]
        self.biases = [np.array(b, dtype=float) for b in biases]
        sizes = spec.layer_sizes
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise NetworkShapeError("expected %d layers of parameters" % (len(sizes) - 1))
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i + 1], sizes[i]) or b.shape != (sizes[i + 1],):
                raise NetworkShapeError("layer %d has shapes %r, %r; spec needs %r, %r" % (
                    i, w.shape, b.shape, (sizes[i + 1], sizes[i]), (sizes[i + 1],)))

    def __repr__(self):
        return "Network(%r)" % (self.spec,)

    def __call__(self, x):
        return forward(self, x)

    @property
    def n_parameters(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self):
        return Network(self.spec, self.weights, self.biases)

    def parameters(self):
        """Flat list of the parameter arrays (w0, b0, w1, b1, ...)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def to_json(self):
        return {
            "format": "rbx-network",
            "version": 1,
            "layer_sizes": list(self.spec.layer_sizes),
            "hidden_activation": self.spec.hidden_activation,
            "output_activation": self.spec.output_activation,
            "seed": self.spec.seed,
            "layers": [{"weights": w.tolist(), "biases": b.tolist()} for w, b in zip(self.weights, self.biases)],
        }

    @classmethod
    def from_json(cls, obj):
        if obj.get("format") != "rbx-network" or obj.get("version") != 1:
            raise NetworkError("not an rbx-network version 1 document")
        spec = NetworkSpec(obj["layer_sizes"], obj["hidden_activation"], obj["output_activation"], obj["seed"])
        return cls(spec, [l["weights"] for l in obj["layers"]], [l["biases"] for l in obj["layers"]])

    def save(self, path):
        with open(path, "w") as ofs:
            json.dump(self.to_json(), ofs)

    @classmethod
    def load(cls, path):
        with open(path) as ifs:
            return cls.from_json(json.load(ifs))

def init(spec):
    """
    Weights and biases uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], drawn
    layer by layer from PCG64 seeded with spec.seed.
    """
    rng = np.random.default_rng(spec.seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return Network(spec, weights, biases)

def _layer_activation(net, i):
    if i == len(net.weights) - 1:
        return _activations[net.spec.output_activation]
    return _activations[net.spec.hidden_activation]

def _forward_cache(net, X):
    zs, activations = [], [X]
    a = X
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        a = _layer_activation(net, i)[0](z)
        zs.append(z)
        activations.append(a)
    return zs, activations

def forward(net, x):
    """
    >>> spec = NetworkSpec([1, 1], output_activation="linear")
    >>> net = Network(spec, [[[2.0]]], [[0.5]])
    >>> forward(net, [3.0])
    array([6.5])
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x.reshape(1, -1) if single else x
    if X.ndim != 2 or X.shape[1] != net.spec.n_inputs:
        raise NetworkShapeError("input of shape %r does not match %d network inputs" % (x.shape, net.spec.n_inputs))
    out = _forward_cache(net, X)[1][-1]
    return out[0] if single else out

def _check_data(net, data):
    if data.inputs.shape[1] != net.spec.n_inputs or data.targets.shape[1] != net.spec.n_outputs:
        raise NetworkShapeError("dataset with %d inputs / %d targets does not match network %r" % (
            data.inputs.shape[1], data.targets.shape[1], net.spec.layer_sizes))

def _loss_and_gradients(net, X, T):
    zs, activations = _forward_cache(net, X)
    out = activations[-1]
    diff = out - T
    loss = float(np.mean(np.sum(diff * diff, axis=1)))
    delta = (2.0 / len(X)) * diff
    gws = [None] * len(net.weights)
    gbs = [None] * len(net.weights)
    for i in reversed(range(len(net.weights))):
        delta = delta * _layer_activation(net, i)[1](zs[i], activations[i + 1])
        gws[i] = delta.T @ activations[i]
        gbs[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ net.weights[i]
    return loss, gws, gbs

def gradients(net, data):
    """Backpropagated gradients of the dataset loss, as (weight grads, bias grads)."""
    _check_data(net, data)
    loss, gws, gbs = _loss_and_gradients(net, data.inputs, data.targets)
    return gws, gbs

def mse(net, data):
    """
    Mean over rows of the squared output-target distance.
    """
    if not isinstance(data, Dataset):
        data = Dataset(*data)
    _check_data(net, data)
    diff = forward(net, data.inputs) - data.targets
    return float(np.mean(np.sum(diff * diff, axis=1)))

class _SGD(object):
    def __init__(self, params):
        pass
    def step(self, params, grads, lr):
        for p, g in zip(params, grads):
            p -= lr * g

class _Adam(object):
    beta1 = 0.9
    beta2 = 0.999
    eps = 1e-8
    def __init__(self, params):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0
    def step(self, params, grads, lr):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

def train(net, data, cfg, validation=None):
    """
    Mini-batch training of a copy of net on the mean-squared-error loss.
    Returns (trained network, TrainHistory). The learning rate is halved
    after cfg.lr_patience epochs without a new best training loss.
    """
    _check_data(net, data)
    if validation is not None:
        _check_data(net, validation)
    net = net.copy()
    params = net.parameters()
    optimizer = (_Adam if cfg.optimizer == "adam" else _SGD)(params)
    rng = np.random.default_rng(cfg.shuffle_seed)
    n = len(data)
    lr = cfg.learning_rate

    initial = mse(net, data)
    history = TrainHistory(initial, [], [], [])
    if not np.isfinite(initial):
        raise TrainingDivergedError("non-finite initial loss", 0, lr, None)
    best = initial
    stale = 0
    last = initial

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, gws, gbs = _loss_and_gradients(net, data.inputs[idx], data.targets[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError("non-finite batch loss at epoch %d (learning rate %g, last loss %r)" % (
                    epoch, lr, last), epoch, lr, last)
            grads = []
            for gw, gb in zip(gws, gbs):
                grads.extend([gw, gb])
            optimizer.step(params, grads, lr)

        loss = mse(net, data)
        if not np.isfinite(loss):
            raise TrainingDivergedError("non-finite loss at epoch %d (learning rate %g, last loss %r)" % (
                epoch, lr, last), epoch, lr, last)
        last = loss
        history.train_loss.append(loss)
        history.learning_rates.append(lr)
        if validation is not None:
            history.validation_loss.append(mse(net, validation))
        if not ((epoch - 1) & epoch):
            # exponential back-off for logging
            logger.debug("epoch %d: loss=%g lr=%g" % (epoch, loss, lr))

        if loss < best:
            best = loss
            stale = 0
        else:
            stale += 1
            if cfg.lr_patience is not None and stale >= cfg.lr_patience:
                lr *= 0.5
                stale = 0
                logger.info("no improvement for %d epochs; learning rate halved to %g" % (cfg.lr_patience, lr))

    return net, history

def gradient_check(net, data, step=1e-5):
    """
    Max over parameters of |backprop - central difference| / (|fd| + 1e-8).
    """
    if not isinstance(data, Dataset):
        data = Dataset(*data)
    gws, gbs = gradients(net, data)
    shifted = net.copy()
    worst = 0.0
    for p, g in zip(shifted.parameters(), [x for pair in zip(gws, gbs) for x in pair]):
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for k in range(flat.size):
            saved = flat[k]
            flat[k] = saved + step
            up = mse(shifted, data)
            flat[k] = saved - step
            down = mse(shifted, data)
            flat[k] = saved
            fd = (up - down) / (2.0 * step)
            worst = max(worst, abs(gflat[k] - fd) / (abs(fd) + 1e-8))
    return worst
