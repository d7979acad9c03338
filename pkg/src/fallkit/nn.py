"""Recurrent network layers with exact backpropagation through time.

Self-contained numpy implementations of three cell kinds (GRU, LSTM,
bidirectional LSTM), two dense heads (sigmoid scalar for classification,
affine vector for multi-step regression), batched forward evaluation,
and full-unroll gradients.  There is no autograd: each layer implements
its own backward pass, and the test suite holds every path to central
finite differences.

Conventions, pinned so serialized models are unambiguous:

  * GRU update: h = (1 - z) * h_prev + z * h_tilde, with
    z = sigma(Wz x + Uz h_prev + bz), r = sigma(Wr x + Ur h_prev + br),
    h_tilde = tanh(Wh x + Uh (r * h_prev) + bh).
  * LSTM gate order i, f, o, g; candidate g through tanh;
    c = f * c_prev + i * g; h = o * tanh(c).  The forget-gate bias is
    initialized to 1, every other bias to 0.
  * BiLSTM hands downstream layers the per-step concatenation
    [h_forward_t, h_backward_t] and hands the head the concatenation of
    the two directions' final states (2 * hidden wide).
  * All arithmetic in float64.  Batches are (batch, time, features);
    recurrent state starts at zero.

Initial kernels are Glorot uniform, bound sqrt(6 / (fan_in + fan_out)),
drawn in a fixed documented order so a seed fully determines the model.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Sigmoid-head pre-activations are clipped here so the reported
# probability stays strictly inside (0, 1) in float64.
LOGIT_CLIP = 36.0


class CellKind(Enum):
    GRU = "GRU"
    LSTM = "LSTM"
    BILSTM = "BiLSTM"


class HeadKind(Enum):
    SIGMOID = "sigmoid"
    LINEAR = "linear"


@dataclass(frozen=True)
class LayerSpec:
    """One recurrent layer: which cell, how wide."""

    kind: CellKind
    hidden_units: int

    def __post_init__(self):
        if not isinstance(self.kind, CellKind):
            raise ValueError(f"kind must be a CellKind, got {self.kind!r}")
        if int(self.hidden_units) < 1:
            raise ValueError("hidden_units must be >= 1")
        object.__setattr__(self, "hidden_units", int(self.hidden_units))


@dataclass(frozen=True)
class NetworkSpec:
    """Full architecture: stacked recurrent layers plus one dense head.

    output_dim is 1 for the sigmoid head (a falling probability) and the
    forecast horizon H for the linear head.
    """

    input_dim: int
    layers: tuple
    head: HeadKind
    output_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "input_dim", int(self.input_dim))
        object.__setattr__(self, "output_dim", int(self.output_dim))
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if not self.layers:
            raise ValueError("need at least one recurrent layer")
        for spec in self.layers:
            if not isinstance(spec, LayerSpec):
                raise ValueError(f"layers must be LayerSpec, got {spec!r}")
        if not isinstance(self.head, HeadKind):
            raise ValueError(f"head must be a HeadKind, got {self.head!r}")
        if self.output_dim < 1:
            raise ValueError("output_dim must be >= 1")
        if self.head is HeadKind.SIGMOID and self.output_dim != 1:
            raise ValueError("sigmoid head is scalar; output_dim must be 1")


def _sigmoid(x):
    # exp overflow for very negative inputs harmlessly saturates to 0
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def _glorot(rng, fan_in, fan_out, shape):
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def _check_vector(name, v, dim):
    v = np.asarray(v, dtype=float)
    if v.shape != (dim,):
        raise ValueError(f"{name} must have shape ({dim},), got {v.shape}")
    return v


# ---------------------------------------------------------------------------
# Single-step cell functions.  These are the readable reference forms;
# the layer classes below fuse the same arithmetic across a batch and
# are tested against them.

def gru_cell(x, h_prev, weights):
    """One GRU step on plain vectors.

    weights maps W_z, U_z, b_z, W_r, U_r, b_r, W_h, U_h, b_h to arrays
    with shapes (D, H), (H, H) and (H,).  Returns (h, gates) where
    gates records z, r and h_tilde for inspection.
    """
    D, H = np.asarray(weights["W_z"]).shape
    x = _check_vector("x", x, D)
    h_prev = _check_vector("h_prev", h_prev, H)
    z = _sigmoid(x @ weights["W_z"] + h_prev @ weights["U_z"] + weights["b_z"])
    r = _sigmoid(x @ weights["W_r"] + h_prev @ weights["U_r"] + weights["b_r"])
    h_tilde = np.tanh(x @ weights["W_h"] + (r * h_prev) @ weights["U_h"] + weights["b_h"])
    h = (1.0 - z) * h_prev + z * h_tilde
    return h, {"z": z, "r": r, "h_tilde": h_tilde}


def lstm_cell(x, state, weights):
    """One LSTM step on plain vectors.

    state is (h_prev, c_prev); weights maps W_g, U_g, b_g for each gate
    g in i, f, o, g.  Returns ((h, c), gates).
    """
    D, H = np.asarray(weights["W_i"]).shape
    h_prev, c_prev = state
    x = _check_vector("x", x, D)
    h_prev = _check_vector("h_prev", h_prev, H)
    c_prev = _check_vector("c_prev", c_prev, H)
    i = _sigmoid(x @ weights["W_i"] + h_prev @ weights["U_i"] + weights["b_i"])
    f = _sigmoid(x @ weights["W_f"] + h_prev @ weights["U_f"] + weights["b_f"])
    o = _sigmoid(x @ weights["W_o"] + h_prev @ weights["U_o"] + weights["b_o"])
    g = np.tanh(x @ weights["W_g"] + h_prev @ weights["U_g"] + weights["b_g"])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return (h, c), {"i": i, "f": f, "o": o, "g": g}


# ---------------------------------------------------------------------------
# Layers.  Each exposes forward(X) -> (Y, cache) over (B, T, D_in),
# head_state(cache) -> the (B, width) vector a head should consume, and
# backward(cache, dY, d_head) -> (dX, grads).  dY carries gradient from
# per-step consumers (the next layer up), d_head the gradient injected
# at the head's read-out position; either may be None.


@dataclass
class _GRUCache:
    X: np.ndarray
    hs: np.ndarray  # (T+1, B, H), hs[0] is the zero initial state
    z: np.ndarray
    r: np.ndarray
    hc: np.ndarray


class GRULayer:
    PARAM_NAMES = ("W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h")

    def __init__(self, input_dim, hidden_units):
        self.input_dim = input_dim
        self.hidden_units = hidden_units
        D, H = input_dim, hidden_units
        for g in ("z", "r", "h"):
            setattr(self, f"W_{g}", np.zeros((D, H)))
            setattr(self, f"U_{g}", np.zeros((H, H)))
            setattr(self, f"b_{g}", np.zeros(H))

    @property
    def out_width(self):
        return self.hidden_units

    def init(self, rng):
        # draw order: per gate (z, r, h), input kernel then recurrent
        D, H = self.input_dim, self.hidden_units
        for g in ("z", "r", "h"):
            setattr(self, f"W_{g}", _glorot(rng, D, H, (D, H)))
            setattr(self, f"U_{g}", _glorot(rng, H, H, (H, H)))

    def params(self):
        return {name: getattr(self, name) for name in self.PARAM_NAMES}

    def forward(self, X):
        B, T, D = X.shape
        H = self.hidden_units
        if D != self.input_dim:
            raise ValueError(f"expected input width {self.input_dim}, got {D}")
        W_all = np.hstack([self.W_z, self.W_r, self.W_h])
        b_all = np.concatenate([self.b_z, self.b_r, self.b_h])
        U_zr = np.hstack([self.U_z, self.U_r])
        WX = (X.reshape(B * T, D) @ W_all + b_all).reshape(B, T, 3 * H)

        hs = np.empty((T + 1, B, H))
        hs[0] = 0.0
        zs = np.empty((T, B, H))
        rs = np.empty((T, B, H))
        hcs = np.empty((T, B, H))
        h = hs[0]
        for t in range(T):
            wx = WX[:, t]
            rec = h @ U_zr
            z = _sigmoid(wx[:, :H] + rec[:, :H])
            r = _sigmoid(wx[:, H:2 * H] + rec[:, H:])
            hc = np.tanh(wx[:, 2 * H:] + (r * h) @ self.U_h)
            h = (1.0 - z) * h + z * hc
            zs[t] = z
            rs[t] = r
            hcs[t] = hc
            hs[t + 1] = h
        Y = hs[1:].transpose(1, 0, 2)
        return Y, _GRUCache(X=X, hs=hs, z=zs, r=rs, hc=hcs)

    def head_state(self, cache):
        return cache.hs[-1]

    def backward(self, cache, dY=None, d_head=None):
        X, hs, zs, rs, hcs = cache.X, cache.hs, cache.z, cache.r, cache.hc
        B, T, D = X.shape
        H = self.hidden_units
        dh_seq = np.zeros((T, B, H)) if dY is None else dY.transpose(1, 0, 2).copy()
        if d_head is not None:
            dh_seq[T - 1] += d_head

        DA_z = np.empty((T, B, H))
        DA_r = np.empty((T, B, H))
        DA_h = np.empty((T, B, H))
        U_zT, U_rT, U_hT = self.U_z.T, self.U_r.T, self.U_h.T
        dh = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            dh = dh + dh_seq[t]
            z, r, hc, h_prev = zs[t], rs[t], hcs[t], hs[t]
            da_z = dh * (hc - h_prev) * z * (1.0 - z)
            da_h = dh * z * (1.0 - hc * hc)
            dhr = da_h @ U_hT
            da_r = dhr * h_prev * r * (1.0 - r)
            dh = dh * (1.0 - z) + dhr * r + da_z @ U_zT + da_r @ U_rT
            DA_z[t] = da_z
            DA_r[t] = da_r
            DA_h[t] = da_h

        Xr = X.transpose(1, 0, 2).reshape(T * B, D)
        Hp = hs[:-1].reshape(T * B, H)
        HR = (rs * hs[:-1]).reshape(T * B, H)
        dAz = DA_z.reshape(T * B, H)
        dAr = DA_r.reshape(T * B, H)
        dAh = DA_h.reshape(T * B, H)
        grads = {
            "W_z": Xr.T @ dAz, "U_z": Hp.T @ dAz, "b_z": dAz.sum(axis=0),
            "W_r": Xr.T @ dAr, "U_r": Hp.T @ dAr, "b_r": dAr.sum(axis=0),
            "W_h": Xr.T @ dAh, "U_h": HR.T @ dAh, "b_h": dAh.sum(axis=0),
        }
        dX = (dAz @ self.W_z.T + dAr @ self.W_r.T + dAh @ self.W_h.T)
        dX = dX.reshape(T, B, D).transpose(1, 0, 2)
        return dX, grads


@dataclass
class _LSTMCache:
    X: np.ndarray
    hs: np.ndarray  # (T+1, B, H)
    cs: np.ndarray  # (T+1, B, H)
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray
    tc: np.ndarray  # tanh(c_t)


class LSTMLayer:
    PARAM_NAMES = (
        "W_i", "U_i", "b_i", "W_f", "U_f", "b_f",
        "W_o", "U_o", "b_o", "W_g", "U_g", "b_g",
    )

    def __init__(self, input_dim, hidden_units):
        self.input_dim = input_dim
        self.hidden_units = hidden_units
        D, H = input_dim, hidden_units
        for g in ("i", "f", "o", "g"):
            setattr(self, f"W_{g}", np.zeros((D, H)))
            setattr(self, f"U_{g}", np.zeros((H, H)))
            setattr(self, f"b_{g}", np.zeros(H))
        # forget bias 1 so fresh cells start out remembering
        self.b_f = np.ones(H)

    @property
    def out_width(self):
        return self.hidden_units

    def init(self, rng):
        # draw order: per gate (i, f, o, g), input kernel then recurrent
        D, H = self.input_dim, self.hidden_units
        for g in ("i", "f", "o", "g"):
            setattr(self, f"W_{g}", _glorot(rng, D, H, (D, H)))
            setattr(self, f"U_{g}", _glorot(rng, H, H, (H, H)))

    def params(self):
        return {name: getattr(self, name) for name in self.PARAM_NAMES}

    def forward(self, X):
        B, T, D = X.shape
        H = self.hidden_units
        if D != self.input_dim:
            raise ValueError(f"expected input width {self.input_dim}, got {D}")
        W_all = np.hstack([self.W_i, self.W_f, self.W_o, self.W_g])
        U_all = np.hstack([self.U_i, self.U_f, self.U_o, self.U_g])
        b_all = np.concatenate([self.b_i, self.b_f, self.b_o, self.b_g])
        WX = (X.reshape(B * T, D) @ W_all + b_all).reshape(B, T, 4 * H)

        hs = np.empty((T + 1, B, H))
        cs = np.empty((T + 1, B, H))
        hs[0] = 0.0
        cs[0] = 0.0
        gates = [np.empty((T, B, H)) for _ in range(4)]
        tcs = np.empty((T, B, H))
        h = hs[0]
        c = cs[0]
        for t in range(T):
            a = WX[:, t] + h @ U_all
            i = _sigmoid(a[:, :H])
            f = _sigmoid(a[:, H:2 * H])
            o = _sigmoid(a[:, 2 * H:3 * H])
            g = np.tanh(a[:, 3 * H:])
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            gates[0][t], gates[1][t], gates[2][t], gates[3][t] = i, f, o, g
            tcs[t] = tc
            hs[t + 1] = h
            cs[t + 1] = c
        Y = hs[1:].transpose(1, 0, 2)
        cache = _LSTMCache(X=X, hs=hs, cs=cs, i=gates[0], f=gates[1],
                           o=gates[2], g=gates[3], tc=tcs)
        return Y, cache

    def head_state(self, cache):
        return cache.hs[-1]

    def backward(self, cache, dY=None, d_head=None):
        X, hs, cs = cache.X, cache.hs, cache.cs
        B, T, D = X.shape
        H = self.hidden_units
        dh_seq = np.zeros((T, B, H)) if dY is None else dY.transpose(1, 0, 2).copy()
        if d_head is not None:
            dh_seq[T - 1] += d_head

        W_all = np.hstack([self.W_i, self.W_f, self.W_o, self.W_g])
        U_all = np.hstack([self.U_i, self.U_f, self.U_o, self.U_g])
        DA = np.empty((T, B, 4 * H))
        dh_carry = np.zeros((B, H))
        dc = np.zeros((B, H))
        U_allT = U_all.T
        for t in range(T - 1, -1, -1):
            dh = dh_carry + dh_seq[t]
            i, f, o, g, tc = cache.i[t], cache.f[t], cache.o[t], cache.g[t], cache.tc[t]
            dc = dc + dh * o * (1.0 - tc * tc)
            da = DA[t]
            da[:, 2 * H:3 * H] = dh * tc * o * (1.0 - o)          # o gate
            da[:, :H] = dc * g * i * (1.0 - i)                    # i gate
            da[:, H:2 * H] = dc * cs[t] * f * (1.0 - f)           # f gate
            da[:, 3 * H:] = dc * i * (1.0 - g * g)                # candidate
            dh_carry = da @ U_allT
            dc = dc * f

        Xr = X.transpose(1, 0, 2).reshape(T * B, D)
        Hp = hs[:-1].reshape(T * B, H)
        dA = DA.reshape(T * B, 4 * H)
        dW = Xr.T @ dA
        dU = Hp.T @ dA
        db = dA.sum(axis=0)
        grads = {}
        for k, g in enumerate(("i", "f", "o", "g")):
            grads[f"W_{g}"] = dW[:, k * H:(k + 1) * H]
            grads[f"U_{g}"] = dU[:, k * H:(k + 1) * H]
            grads[f"b_{g}"] = db[k * H:(k + 1) * H]
        dX = (dA @ W_all.T).reshape(T, B, D).transpose(1, 0, 2)
        return dX, grads


class BiLSTMLayer:
    """Two independent LSTM directions over the same input.

    Per-step output is [h_forward_t, h_backward_t] (width 2H); the head
    reads the concatenation of the two final states, which live at
    opposite ends of the sequence.
    """

    def __init__(self, input_dim, hidden_units):
        self.input_dim = input_dim
        self.hidden_units = hidden_units
        self.fw = LSTMLayer(input_dim, hidden_units)
        self.bw = LSTMLayer(input_dim, hidden_units)

    @property
    def out_width(self):
        return 2 * self.hidden_units

    def init(self, rng):
        # forward direction drawn first, then backward
        self.fw.init(rng)
        self.bw.init(rng)

    def params(self):
        out = {}
        for name, arr in self.fw.params().items():
            out[f"fw.{name}"] = arr
        for name, arr in self.bw.params().items():
            out[f"bw.{name}"] = arr
        return out

    def forward(self, X):
        Yf, cf = self.fw.forward(X)
        Yb_rev, cb = self.bw.forward(X[:, ::-1].copy())
        Y = np.concatenate([Yf, Yb_rev[:, ::-1]], axis=2)
        return Y, (cf, cb)

    def head_state(self, cache):
        cf, cb = cache
        return np.concatenate([cf.hs[-1], cb.hs[-1]], axis=1)

    def backward(self, cache, dY=None, d_head=None):
        cf, cb = cache
        H = self.hidden_units
        dYf = dYb_rev = None
        if dY is not None:
            dYf = dY[:, :, :H]
            dYb_rev = dY[:, ::-1, H:]
        d_f = d_b = None
        if d_head is not None:
            d_f = d_head[:, :H]
            d_b = d_head[:, H:]
        dXf, gf = self.fw.backward(cf, dYf, d_f)
        dXb_rev, gb = self.bw.backward(cb, dYb_rev, d_b)
        dX = dXf + dXb_rev[:, ::-1]
        grads = {f"fw.{k}": v for k, v in gf.items()}
        grads.update({f"bw.{k}": v for k, v in gb.items()})
        return dX, grads


# ---------------------------------------------------------------------------
# Heads.


class _SigmoidHead:
    """Scalar probability head: sigma(h . K + b), strictly in (0, 1)."""

    def __init__(self, in_dim):
        self.in_dim = in_dim
        self.K = np.zeros((in_dim, 1))
        self.b = np.zeros(1)

    def init(self, rng):
        self.K = _glorot(rng, self.in_dim, 1, (self.in_dim, 1))

    def params(self):
        return {"K": self.K, "b": self.b}

    def forward(self, Hs):
        logit = np.clip((Hs @ self.K)[:, 0] + self.b[0], -LOGIT_CLIP, LOGIT_CLIP)
        p = _sigmoid(logit)
        return p, (Hs, p)

    def backward(self, cache, dout):
        Hs, p = cache
        dlogit = dout * p * (1.0 - p)
        grads = {"K": (Hs.T @ dlogit)[:, None], "b": np.array([dlogit.sum()])}
        dHs = dlogit[:, None] @ self.K.T
        return dHs, grads


class _LinearHead:
    """Affine multi-output head for forecasting."""

    def __init__(self, in_dim, out_dim):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.K = np.zeros((in_dim, out_dim))
        self.b = np.zeros(out_dim)

    def init(self, rng):
        self.K = _glorot(rng, self.in_dim, self.out_dim, (self.in_dim, self.out_dim))

    def params(self):
        return {"K": self.K, "b": self.b}

    def forward(self, Hs):
        return Hs @ self.K + self.b, Hs

    def backward(self, cache, dout):
        Hs = cache
        grads = {"K": Hs.T @ dout, "b": dout.sum(axis=0)}
        return dout @ self.K.T, grads


# ---------------------------------------------------------------------------
# The assembled network.


@dataclass
class ForwardCache:
    """Everything backward needs, tied to the network that produced it."""

    owner: object
    layer_caches: list
    head_cache: object
    single: bool
    batch: int


_LAYER_CLASSES = {
    CellKind.GRU: GRULayer,
    CellKind.LSTM: LSTMLayer,
    CellKind.BILSTM: BiLSTMLayer,
}


class Network:
    """A NetworkSpec bound to concrete weights.

    Construction zeroes all weights; use init_weights for a seeded
    Glorot draw.  forward accepts a single sequence ((W,) or (W, D)) or
    a batch ((B, W) when input_dim is 1, else (B, W, D)) and returns
    (output, cache); backward consumes that cache plus the gradient of a
    scalar loss with respect to the output and returns gradients keyed
    like parameters().
    """

    def __init__(self, spec):
        self.spec = spec
        self.layers = []
        width = spec.input_dim
        for lspec in spec.layers:
            layer = _LAYER_CLASSES[lspec.kind](width, lspec.hidden_units)
            self.layers.append(layer)
            width = layer.out_width
        if spec.head is HeadKind.SIGMOID:
            self.head = _SigmoidHead(width)
        else:
            self.head = _LinearHead(width, spec.output_dim)

    def parameters(self):
        """Canonically ordered name -> array view of every weight."""
        out = {}
        for k, layer in enumerate(self.layers):
            for name, arr in layer.params().items():
                out[f"layers.{k}.{name}"] = arr
        for name, arr in self.head.params().items():
            out[f"head.{name}"] = arr
        return out

    def set_parameter(self, name, value):
        current = self.parameters()[name]
        value = np.asarray(value, dtype=float)
        if value.shape != current.shape:
            raise ValueError(f"{name}: expected shape {current.shape}, got {value.shape}")
        if not np.all(np.isfinite(value)):
            raise ValueError(f"{name}: non-finite entries")
        current[...] = value

    def _coerce(self, x):
        a = np.asarray(x, dtype=float)
        single = False
        if a.ndim == 1:
            a = a[None, :, None]
            single = True
        elif a.ndim == 2:
            if self.spec.input_dim == 1:
                a = a[:, :, None]
            else:
                a = a[None]
                single = True
        elif a.ndim != 3:
            raise ValueError(f"input must be 1-, 2- or 3-dimensional, got shape {a.shape}")
        if a.shape[2] != self.spec.input_dim:
            raise ValueError(f"expected feature width {self.spec.input_dim}, got {a.shape[2]}")
        if a.shape[1] < 1:
            raise ValueError("sequence must be non-empty")
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite input")
        return a, single

    def forward(self, x):
        X, single = self._coerce(x)
        caches = []
        h = X
        for layer in self.layers:
            h, c = layer.forward(h)
            caches.append(c)
        head_in = self.layers[-1].head_state(caches[-1])
        out, head_cache = self.head.forward(head_in)
        cache = ForwardCache(owner=self, layer_caches=caches,
                             head_cache=head_cache, single=single,
                             batch=X.shape[0])
        if single:
            return (float(out[0]) if self.spec.head is HeadKind.SIGMOID
                    else out[0].copy()), cache
        return out, cache

    def predict(self, x):
        """Forward pass, output only."""
        return self.forward(x)[0]

    def backward(self, cache, output_grad):
        if not isinstance(cache, ForwardCache) or cache.owner is not self:
            raise ValueError("cache does not belong to this network")
        dout = np.asarray(output_grad, dtype=float)
        if self.spec.head is HeadKind.SIGMOID:
            if cache.single:
                dout = dout.reshape(1)
            if dout.shape != (cache.batch,):
                raise ValueError(f"output_grad must have shape ({cache.batch},)")
        else:
            if cache.single:
                dout = dout.reshape(1, self.spec.output_dim)
            if dout.shape != (cache.batch, self.spec.output_dim):
                raise ValueError(
                    f"output_grad must have shape ({cache.batch}, {self.spec.output_dim})")

        grads = {}
        d_head_in, head_grads = self.head.backward(cache.head_cache, dout)
        for name, g in head_grads.items():
            grads[f"head.{name}"] = g
        dY = None
        d_head = d_head_in
        for k in range(len(self.layers) - 1, -1, -1):
            dX, layer_grads = self.layers[k].backward(cache.layer_caches[k], dY, d_head)
            for name, g in layer_grads.items():
                grads[f"layers.{k}.{name}"] = g
            dY = dX
            d_head = None
        return {name: grads[name] for name in self.parameters()}


def init_weights(spec, seed):
    """Seeded Glorot-uniform network; biases zero except LSTM forget."""
    net = Network(spec)
    rng = np.random.default_rng(seed)
    for layer in net.layers:
        layer.init(rng)
    net.head.init(rng)
    return net
