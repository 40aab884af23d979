"""Differentiable scalar models: a from-scratch MLP with reverse-mode
autodiff, analytic function wrappers, finite differences, and evaluation
counters used by the cost-accounting tests."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("tanh", "softplus")


class InputShapeError(ValueError):
    """Input vector/matrix does not match the model dimension."""


class NumericError(ArithmeticError):
    """A numeric evaluation produced a non-finite value."""


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""


class ModelFileError(ValueError):
    """Model file is malformed."""


@dataclass
class EvalCounters:
    """Counts of value / gradient / second-derivative evaluations.

    Increments are lock-protected so concurrent evaluation keeps exact
    counts. Counts are per evaluated point: batch calls add the batch size.
    """

    n_value: int = 0
    n_gradient: int = 0
    n_second: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def add_value(self, n: int = 1) -> None:
        with self._lock:
            self.n_value += n

    def add_gradient(self, n: int = 1) -> None:
        with self._lock:
            self.n_gradient += n

    def add_second(self, n: int = 1) -> None:
        with self._lock:
            self.n_second += n

    def reset(self) -> None:
        with self._lock:
            self.n_value = 0
            self.n_gradient = 0
            self.n_second = 0

    def snapshot(self) -> tuple[int, int, int]:
        with self._lock:
            return (self.n_value, self.n_gradient, self.n_second)


class DifferentiableModel:
    """Scalar function f: R^D -> R exposing value, gradient and one
    second-derivative entry, with evaluation counting.

    Subclasses implement ``_value_batch``, ``_gradient_batch`` and
    ``_second_batch`` on (B, D) arrays; the public methods validate shapes
    and charge the counters (one count per evaluated point).
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise InputShapeError(f"model dimension must be >= 1, got {dim}")
        self.dim = dim
        self.counters = EvalCounters()

    # -- subclass hooks -------------------------------------------------
    def _value_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _gradient_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _second_batch(self, X: np.ndarray, l: int, m: int) -> np.ndarray:
        raise NotImplementedError

    # -- public API ------------------------------------------------------
    def value(self, x) -> float:
        x = self._check_point(x)
        self.counters.add_value(1)
        return float(self._value_batch(x[None, :])[0])

    def gradient(self, x) -> np.ndarray:
        x = self._check_point(x)
        self.counters.add_gradient(1)
        return self._gradient_batch(x[None, :])[0]

    def second_derivative(self, x, l: int, m: int) -> float:
        x = self._check_point(x)
        self._check_index(l)
        self._check_index(m)
        self.counters.add_second(1)
        return float(self._second_batch(x[None, :], l, m)[0])

    def value_batch(self, X) -> np.ndarray:
        X = self._check_matrix(X)
        self.counters.add_value(X.shape[0])
        return self._value_batch(X)

    def gradient_batch(self, X) -> np.ndarray:
        X = self._check_matrix(X)
        self.counters.add_gradient(X.shape[0])
        return self._gradient_batch(X)

    def second_derivative_batch(self, X, l: int, m: int) -> np.ndarray:
        X = self._check_matrix(X)
        self._check_index(l)
        self._check_index(m)
        self.counters.add_second(X.shape[0])
        return self._second_batch(X, l, m)

    # -- helpers ----------------------------------------------------------
    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise InputShapeError(f"expected shape ({self.dim},), got {x.shape}")
        return x

    def _check_matrix(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise InputShapeError(f"expected shape (n, {self.dim}), got {X.shape}")
        return X

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.dim:
            raise IndexError(f"feature index {i} out of range for dimension {self.dim}")


class AnalyticModel(DifferentiableModel):
    """Model defined by vectorized closures for value, gradient and the
    Hessian entry. Used for the synthetic black-box functions whose
    derivatives are known in closed form."""

    def __init__(self, dim, value_fn, gradient_fn, second_fn=None, name="analytic"):
        super().__init__(dim)
        self.name = name
        self._value_fn = value_fn
        self._gradient_fn = gradient_fn
        self._second_fn = second_fn

    def _value_batch(self, X):
        return np.asarray(self._value_fn(X), dtype=float)

    def _gradient_batch(self, X):
        return np.asarray(self._gradient_fn(X), dtype=float)

    def _second_batch(self, X, l, m):
        if self._second_fn is None:
            raise NotImplementedError(f"model '{self.name}' has no second derivatives")
        return np.asarray(self._second_fn(X, l, m), dtype=float)


def _act(name: str):
    # value, first and second derivative of the hidden nonlinearity
    if name == "tanh":
        def f(z):
            return np.tanh(z)

        def fp(z):
            t = np.tanh(z)
            return 1.0 - t * t

        def fpp(z):
            t = np.tanh(z)
            return -2.0 * t * (1.0 - t * t)

    elif name == "softplus":
        def f(z):
            return np.logaddexp(0.0, z)

        def fp(z):
            return 1.0 / (1.0 + np.exp(-z))

        def fpp(z):
            s = 1.0 / (1.0 + np.exp(-z))
            return s * (1.0 - s)

    else:
        raise ValueError(f"unknown activation {name!r}; choose from {ACTIVATIONS}")
    return f, fp, fpp


class MlpModel(DifferentiableModel):
    """Fully-connected scalar-output MLP with a smooth activation.

    ``widths`` is the full layer sequence ``[D, h1, ..., hL, 1]``. Hidden
    layers use the named activation; the output layer is linear. Weights
    are seeded uniform in [-a, a] with a = 1/sqrt(fan_in), biases zero,
    so construction is reproducible. Gradients are exact reverse mode
    (one backward sweep per input row); second derivatives are exact
    forward-over-reverse Hessian-vector products.
    """

    def __init__(self, widths, activation: str = "tanh", seed: int = 0):
        widths = [int(w) for w in widths]
        if len(widths) < 2:
            raise ValueError("need at least input and output widths")
        if widths[-1] != 1:
            raise ValueError(f"output width must be 1, got {widths[-1]}")
        if any(w < 1 for w in widths):
            raise ValueError(f"widths must be positive, got {widths}")
        super().__init__(widths[0])
        self.widths = widths
        self.activation = activation
        self.seed = seed
        self._f, self._fp, self._fpp = _act(activation)
        rng = np.random.default_rng(seed)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            a = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-a, a, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def n_hidden_layers(self) -> int:
        return len(self.widths) - 2

    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    # -- forward / reverse ------------------------------------------------
    def _forward_trace(self, X):
        # returns pre-activations of the hidden layers and the outputs
        zs = []
        A = X
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            Z = A @ W + b
            zs.append(Z)
            A = self._f(Z)
        out = A @ self.weights[-1] + self.biases[-1]
        return zs, out[:, 0]

    def _value_batch(self, X):
        return self._forward_trace(X)[1]

    def _gradient_batch(self, X):
        zs, _ = self._forward_trace(X)
        G = np.broadcast_to(self.weights[-1][:, 0], (X.shape[0], self.widths[-2])).copy()
        for W, Z in zip(reversed(self.weights[:-1]), reversed(zs)):
            G = (G * self._fp(Z)) @ W.T
        return G

    def _second_batch(self, X, l, m):
        # forward-over-reverse: differentiate the reverse sweep along e_m
        zs, zdots = [], []
        A = X
        Adot = np.zeros_like(X)
        Adot[:, m] = 1.0
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            Z = A @ W + b
            Zdot = Adot @ W
            zs.append(Z)
            zdots.append(Zdot)
            A = self._f(Z)
            Adot = self._fp(Z) * Zdot
        B = X.shape[0]
        G = np.broadcast_to(self.weights[-1][:, 0], (B, self.widths[-2])).copy()
        Gdot = np.zeros_like(G)
        for W, Z, Zdot in zip(reversed(self.weights[:-1]), reversed(zs), reversed(zdots)):
            fp = self._fp(Z)
            GZ = G * fp
            GZdot = Gdot * fp + G * self._fpp(Z) * Zdot
            G = GZ @ W.T
            Gdot = GZdot @ W.T
        return Gdot[:, l]

    # -- training ----------------------------------------------------------
    def _loss_and_weight_grads(self, X, y):
        # MSE over the batch; plain backprop through the stored trace
        acts = [X]
        zs = []
        A = X
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            Z = A @ W + b
            zs.append(Z)
            A = self._f(Z)
            acts.append(A)
        pred = (A @ self.weights[-1] + self.biases[-1])[:, 0]
        resid = pred - y
        loss = float(np.mean(resid * resid))
        delta = (2.0 * resid / X.shape[0])[:, None]
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        grads_w[-1] = acts[-1].T @ delta
        grads_b[-1] = delta.sum(axis=0)
        G = delta @ self.weights[-1].T
        for i in range(len(self.weights) - 2, -1, -1):
            dZ = G * self._fp(zs[i])
            grads_w[i] = acts[i].T @ dZ
            grads_b[i] = dZ.sum(axis=0)
            G = dZ @ self.weights[i].T
        return loss, grads_w, grads_b


def train_mlp(model: MlpModel, X, y, epochs: int, learning_rate: float,
              batch_size: int | None = None, seed: int = 0) -> list[float]:
    """Train the MLP in place with Adam on mean squared error.

    Returns the per-epoch training MSE history (batch-size-weighted mean
    over the epoch). Deterministic for a fixed seed. Raises
    DivergenceError naming the epoch if the loss goes non-finite.
    """
    X = model._check_matrix(X)
    y = np.asarray(y, dtype=float)
    if y.shape != (X.shape[0],):
        raise InputShapeError(f"targets must have shape ({X.shape[0]},), got {y.shape}")
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    n = X.shape[0]
    if batch_size is None or batch_size > n:
        batch_size = n
    rng = np.random.default_rng(seed)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    params = model.weights + model.biases
    m_t = [np.zeros_like(p) for p in params]
    v_t = [np.zeros_like(p) for p in params]
    step = 0
    history = []
    for epoch in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            loss, gw, gb = model._loss_and_weight_grads(X[idx], y[idx])
            if not np.isfinite(loss):
                raise DivergenceError(f"training diverged at epoch {epoch}: loss={loss}")
            total += loss * idx.size
            step += 1
            grads = gw + gb
            for p, g, m_i, v_i in zip(params, grads, m_t, v_t):
                m_i *= beta1
                m_i += (1.0 - beta1) * g
                v_i *= beta2
                v_i += (1.0 - beta2) * g * g
                mhat = m_i / (1.0 - beta1 ** step)
                vhat = v_i / (1.0 - beta2 ** step)
                p -= learning_rate * mhat / (np.sqrt(vhat) + eps)
        history.append(total / n)
    return history


def jacobian_batch(model: DifferentiableModel, X) -> np.ndarray:
    """Gradient of the model at every row of X, stacked to an (N, D) matrix.

    Performs exactly N gradient evaluations (one reverse sweep per row),
    independent of D.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InputShapeError(f"expected a 2-d design matrix, got shape {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("empty dataset: cannot compute a Jacobian over zero rows")
    return model.gradient_batch(X)


def hessian_entry_batch(model: DifferentiableModel, X, l: int, m: int) -> np.ndarray:
    """Second derivative d2f/(dx_l dx_m) evaluated at every row of X."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("empty dataset: cannot evaluate second derivatives over zero rows")
    return model.second_derivative_batch(X, l, m)


def finite_diff_gradient(f, x, h: float | None = None) -> np.ndarray:
    """Central-difference gradient of a value-only callable.

    Costs exactly 2*D calls of ``f``. The default step is
    cbrt(machine epsilon) * max(1, |x_s|) per coordinate.
    """
    x = np.asarray(x, dtype=float)
    d = x.size
    if h is not None and h <= 0:
        raise ValueError(f"step must be positive, got {h}")
    base = np.cbrt(np.finfo(float).eps)
    grad = np.empty(d)
    for s in range(d):
        hs = h if h is not None else base * max(1.0, abs(x[s]))
        xp = x.copy()
        xm = x.copy()
        xp[s] += hs
        xm[s] -= hs
        fp, fm = f(xp), f(xm)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericError(f"non-finite value in finite differences at coordinate {s}")
        grad[s] = (fp - fm) / (2.0 * hs)
    return grad


def save_mlp(model: MlpModel, path) -> None:
    """Write the MLP to the plain-text model file format (see
    docs/file_formats.md)."""
    lines = ["mlp-model v1"]
    lines.append("widths: " + " ".join(str(w) for w in model.widths))
    lines.append(f"activation: {model.activation}")
    lines.append(f"seed: {model.seed}")
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        lines.append(f"W{i} {W.shape[0]} {W.shape[1]}")
        for row in W:
            lines.append(" ".join(repr(float(v)) for v in row))
        lines.append(f"b{i} {b.size}")
        lines.append(" ".join(repr(float(v)) for v in b))
    lines.append("end")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mlp(path) -> MlpModel:
    """Read a model file written by save_mlp."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "mlp-model v1":
        raise ModelFileError(f"{path}: not a v1 mlp model file")
    try:
        widths = [int(t) for t in lines[1].removeprefix("widths: ").split()]
        activation = lines[2].removeprefix("activation: ").strip()
        seed = int(lines[3].removeprefix("seed: "))
    except (IndexError, ValueError) as exc:
        raise ModelFileError(f"{path}: malformed header: {exc}") from exc
    model = MlpModel(widths, activation=activation, seed=seed)
    pos = 4
    for i in range(len(model.weights)):
        head = lines[pos].split()
        if head[0] != f"W{i}" or len(head) != 3:
            raise ModelFileError(f"{path}: expected 'W{i} rows cols' at line {pos + 1}")
        rows, cols = int(head[1]), int(head[2])
        if (rows, cols) != model.weights[i].shape:
            raise ModelFileError(f"{path}: W{i} shape {(rows, cols)} does not match widths")
        block = lines[pos + 1:pos + 1 + rows]
        model.weights[i] = np.array([[float(v) for v in ln.split()] for ln in block])
        if model.weights[i].shape != (rows, cols):
            raise ModelFileError(f"{path}: W{i} block has wrong width")
        pos += 1 + rows
        head = lines[pos].split()
        if head[0] != f"b{i}":
            raise ModelFileError(f"{path}: expected 'b{i}' at line {pos + 1}")
        model.biases[i] = np.array([float(v) for v in lines[pos + 1].split()])
        if model.biases[i].size != cols:
            raise ModelFileError(f"{path}: b{i} has wrong length")
        pos += 2
    if pos >= len(lines) or lines[pos] != "end":
        raise ModelFileError(f"{path}: missing 'end' marker")
    return model
