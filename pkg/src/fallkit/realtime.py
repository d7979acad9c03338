"""Streaming inference: rolling window, per-sample decisions, trigger.

A StreamState owns a ring buffer of the most recent W angle samples.
Every push re-runs the detector over the full window (the decision is
stateless given the buffer, matching how the detector is trained); when
the falling probability exceeds 0.5 the forecaster extrapolates H
future samples and the time to the pi/2 floor crossing is interpolated
from them.  The mitigation trigger fires when that time drops to the
configured deployment lead or below.

Inference here goes through fused single-sequence kernels (compiled
when numba is present) instead of the batched training path; the two
paths compute the same arithmetic and the tests pin them together to
1e-12.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .nn import LOGIT_CLIP, BiLSTMLayer, GRULayer, HeadKind, LSTMLayer, Network

FLOOR_ANGLE = math.pi / 2.0

DEFAULT_TRIGGER_LEAD = 0.3

# tolerated fractional deviation of the inter-sample interval
RATE_TOLERANCE = 0.1


@dataclass
class Decision:
    """One per-sample verdict.

    p_falling is None during warm-up; forecast and time_to_impact are
    None unless the detector says falling (and, for time_to_impact, the
    forecast actually crosses the floor within the horizon).
    """

    t: float
    p_falling: float | None
    is_falling: bool
    forecast: np.ndarray | None
    time_to_impact: float | None
    trigger: bool
    warning: str | None = None

    def to_json(self):
        """JSON line with absent fields omitted; the forecast array is
        reported through time_to_impact, not inlined."""
        obj = {"t": self.t}
        if self.p_falling is not None:
            obj["p_falling"] = self.p_falling
        obj["is_falling"] = self.is_falling
        if self.time_to_impact is not None:
            obj["time_to_impact"] = self.time_to_impact
        obj["trigger"] = self.trigger
        if self.warning is not None:
            obj["warning"] = self.warning
        return json.dumps(obj)


def time_to_impact(forecast, sensor_rate):
    """Seconds from the first forecast sample to the pi/2 crossing.

    Linear interpolation between the last sample below and the first at
    or above the floor angle; 0.0 if the forecast starts at or past it;
    None if it never gets there.
    """
    f = np.asarray(forecast, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise ValueError("forecast must be a non-empty 1-D sequence")
    hits = np.flatnonzero(f >= FLOOR_ANGLE)
    if hits.size == 0:
        return None
    k = int(hits[0])
    if k == 0:
        return 0.0
    frac = (FLOOR_ANGLE - f[k - 1]) / (f[k] - f[k - 1])
    return float(((k - 1) + frac) / sensor_rate)


class _FastPath:
    """Per-model fused weights for single-sequence evaluation."""

    def __init__(self, network):
        self._plan = []
        for layer in network.layers:
            if isinstance(layer, GRULayer):
                self._plan.append(("gru", self._gru_pack(layer)))
            elif isinstance(layer, LSTMLayer):
                self._plan.append(("lstm", self._lstm_pack(layer)))
            elif isinstance(layer, BiLSTMLayer):
                self._plan.append(("bilstm", (self._lstm_pack(layer.fw),
                                              self._lstm_pack(layer.bw))))
            else:  # pragma: no cover - layer set is closed
                raise TypeError(f"unsupported layer {type(layer).__name__}")
        self._sigmoid = network.spec.head is HeadKind.SIGMOID
        self._K = network.head.K.copy()
        self._b = network.head.b.copy()

    @staticmethod
    def _gru_pack(layer):
        W = np.hstack([layer.W_z, layer.W_r, layer.W_h])
        b = np.concatenate([layer.b_z, layer.b_r, layer.b_h])
        U_zr = np.ascontiguousarray(np.hstack([layer.U_z, layer.U_r]))
        return W, b, U_zr, np.ascontiguousarray(layer.U_h)

    @staticmethod
    def _lstm_pack(layer):
        W = np.hstack([layer.W_i, layer.W_f, layer.W_o, layer.W_g])
        b = np.concatenate([layer.b_i, layer.b_f, layer.b_o, layer.b_g])
        U = np.ascontiguousarray(np.hstack([layer.U_i, layer.U_f, layer.U_o, layer.U_g]))
        return W, b, U

    def predict(self, window):
        x = np.ascontiguousarray(window, dtype=float)[:, None]
        last = None
        for kind, pack in self._plan:
            if kind == "gru":
                W, b, U_zr, U_h = pack
                hs = _kernels.gru_seq_forward(x @ W + b, U_zr, U_h)
                last = hs[-1]
            elif kind == "lstm":
                W, b, U = pack
                hs = _kernels.lstm_seq_forward(x @ W + b, U)
                last = hs[-1]
            else:
                (Wf, bf, Uf), (Wb, bb, Ub) = pack
                hf = _kernels.lstm_seq_forward(x @ Wf + bf, Uf)
                hb = _kernels.lstm_seq_forward(np.ascontiguousarray(x[::-1]) @ Wb + bb, Ub)
                hs = np.concatenate([hf, hb[::-1]], axis=1)
                last = np.concatenate([hf[-1], hb[-1]])
            x = hs
        if self._sigmoid:
            logit = float(last @ self._K[:, 0] + self._b[0])
            logit = min(max(logit, -LOGIT_CLIP), LOGIT_CLIP)
            return 1.0 / (1.0 + math.exp(-logit))
        return last @ self._K + self._b


class StreamState:
    """Rolling-window evaluator for one sensor stream.

    detector must be a sigmoid-head Network over univariate windows of
    length W; forecaster, when given, a linear-head Network over the
    same windows.  Timestamps must be strictly increasing; intervals
    off the nominal rate by more than 10% are flagged on the Decision.
    """

    def __init__(self, detector, forecaster=None, *, W, sensor_rate=100.0,
                 trigger_lead=DEFAULT_TRIGGER_LEAD):
        if not isinstance(detector, Network) or detector.spec.head is not HeadKind.SIGMOID:
            raise ValueError("detector must be a sigmoid-head Network")
        if detector.spec.input_dim != 1:
            raise ValueError("detector must take univariate windows")
        if forecaster is not None:
            if not isinstance(forecaster, Network) or forecaster.spec.head is not HeadKind.LINEAR:
                raise ValueError("forecaster must be a linear-head Network")
            if forecaster.spec.input_dim != 1:
                raise ValueError("forecaster must take univariate windows")
        if int(W) < 1:
            raise ValueError("W must be >= 1")
        if not sensor_rate > 0.0:
            raise ValueError("sensor_rate must be positive")
        if trigger_lead < 0.0:
            raise ValueError("trigger_lead must be non-negative")

        self.detector = detector
        self.forecaster = forecaster
        self.W = int(W)
        self.sensor_rate = float(sensor_rate)
        self.trigger_lead = float(trigger_lead)
        self._det_fast = _FastPath(detector)
        self._fore_fast = _FastPath(forecaster) if forecaster is not None else None
        self._buf = np.empty(self.W)
        self._pos = 0
        self._count = 0
        self._last_t = None

    def reset(self):
        """Drop all buffered samples; models stay loaded."""
        self._pos = 0
        self._count = 0
        self._last_t = None

    @property
    def warm(self):
        return self._count >= self.W

    def _window(self):
        if self._pos == 0:
            return self._buf.copy()
        return np.concatenate((self._buf[self._pos:], self._buf[:self._pos]))

    def push_sample(self, t, theta):
        t = float(t)
        theta = float(theta)
        if not (math.isfinite(t) and math.isfinite(theta)):
            raise ValueError("sample must be finite")
        warning = None
        if self._last_t is not None:
            if t <= self._last_t:
                raise ValueError(
                    f"non-monotonic timestamp {t} after {self._last_t}")
            dt = t - self._last_t
            nominal = 1.0 / self.sensor_rate
            if abs(dt - nominal) > RATE_TOLERANCE * nominal:
                warning = (f"sample interval {dt:.6g} s deviates more than "
                           f"{RATE_TOLERANCE:.0%} from nominal {nominal:.6g} s")
        self._last_t = t
        self._buf[self._pos] = theta
        self._pos = (self._pos + 1) % self.W
        if self._count < self.W:
            self._count += 1

        if not self.warm:
            return Decision(t=t, p_falling=None, is_falling=False,
                            forecast=None, time_to_impact=None,
                            trigger=False, warning=warning)

        window = self._window()
        p = self._det_fast.predict(window)
        is_falling = p > 0.5
        forecast = None
        tti = None
        trigger = False
        if is_falling and self._fore_fast is not None:
            forecast = self._fore_fast.predict(window)
            tti = time_to_impact(forecast, self.sensor_rate)
            trigger = bool(tti is not None and tti <= self.trigger_lead)
        return Decision(t=t, p_falling=p, is_falling=is_falling,
                        forecast=forecast, time_to_impact=tti,
                        trigger=trigger, warning=warning)

    def forecast(self):
        """H future angles from the current window."""
        if self._fore_fast is None:
            raise RuntimeError("no forecaster model loaded")
        if not self.warm:
            raise RuntimeError(f"window not yet full ({self._count}/{self.W} samples)")
        return self._fore_fast.predict(self._window())
