"""Dense ReLU feedforward networks: construction, evaluation and JSON I/O.

A network is a chain of affine layers ``z_k = W_k x_{k-1} + b_k`` with
``x_k = relu(z_k)`` between layers and no activation after the last one.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import as_matrix, as_vector


class ModelFormatError(ValueError):
    """Raised when a model or dataset file is malformed."""


@dataclass(frozen=True)
class DenseLayer:
    weight: np.ndarray
    bias: np.ndarray = field(default=None)

    def __post_init__(self):
        W = as_matrix(self.weight, "weight")
        b = np.zeros(W.shape[0]) if self.bias is None else as_vector(self.bias, "bias")
        if b.shape[0] != W.shape[0]:
            raise ValueError(f"bias length {b.shape[0]} does not match {W.shape[0]} weight rows")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weight", W)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self):
        return self.weight.shape[1]

    @property
    def out_dim(self):
        return self.weight.shape[0]

    def __call__(self, x):
        return self.weight @ x + self.bias


class Network:
    """Immutable list of :class:`DenseLayer` with ReLU between layers."""

    def __init__(self, layers):
        layers = [l if isinstance(l, DenseLayer) else DenseLayer(*l) for l in layers]
        if not layers:
            raise ValueError("a network needs at least one layer")
        for k in range(1, len(layers)):
            if layers[k].in_dim != layers[k - 1].out_dim:
                raise ValueError(
                    f"layer {k + 1} expects input of size {layers[k].in_dim} "
                    f"but layer {k} outputs {layers[k - 1].out_dim}"
                )
        self._layers = tuple(layers)

    @classmethod
    def from_weights(cls, weights, biases=None):
        biases = [None] * len(weights) if biases is None else biases
        return cls([DenseLayer(W, b) for W, b in zip(weights, biases)])

    @property
    def layers(self):
        return self._layers

    @property
    def weights(self):
        return [l.weight for l in self._layers]

    @property
    def biases(self):
        return [l.bias for l in self._layers]

    @property
    def num_layers(self):
        return len(self._layers)

    @property
    def input_dim(self):
        return self._layers[0].in_dim

    @property
    def output_dim(self):
        return self._layers[-1].out_dim

    @property
    def hidden_dims(self):
        return [l.out_dim for l in self._layers[:-1]]

    def truncated(self, k):
        """Network made of the first ``k`` layers, outputting ``z_k``."""
        return Network(self._layers[:k])

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.input_dim:
            raise ValueError(f"input has length {x.shape[-1]}, network expects {self.input_dim}")
        return x

    def forward_trace(self, x):
        """All preactivations ``[z_1, ..., z_N]`` for input ``x``.

        ``x`` may be a batch of row vectors, in which case each ``z_k`` has a
        leading batch dimension.
        """
        h = self._check_input(x)
        zs = []
        for k, layer in enumerate(self._layers):
            if k > 0:
                h = np.maximum(zs[-1], 0.0)
            zs.append(h @ layer.weight.T + layer.bias)
        return zs

    def forward(self, x):
        return self.forward_trace(x)[-1]

    __call__ = forward

    def __eq__(self, other):
        if not isinstance(other, Network) or other.num_layers != self.num_layers:
            return NotImplemented if not isinstance(other, Network) else False
        return all(
            np.array_equal(a.weight, b.weight) and np.array_equal(a.bias, b.bias)
            for a, b in zip(self._layers, other._layers)
        )

    def __repr__(self):
        dims = [self.input_dim] + [l.out_dim for l in self._layers]
        return f"Network({'-'.join(map(str, dims))})"


def margin_spec(num_classes, label, other):
    """``e_label - e_other``."""
    c = np.zeros(num_classes)
    c[label] += 1.0
    c[other] -= 1.0
    return c


# -- file formats ---------------------------------------------------------

def network_to_dict(net):
    # json writes floats with repr(), the shortest string that round-trips
    # float64 exactly (never more than 17 significant digits)
    return {
        "layers": [
            {"weight": layer.weight.tolist(), "bias": layer.bias.tolist()}
            for layer in net.layers
        ]
    }


def network_from_dict(data):
    if not isinstance(data, dict) or not isinstance(data.get("layers"), list):
        raise ModelFormatError('model must be an object with a "layers" list')
    layers = []
    prev_out = None
    for idx, entry in enumerate(data["layers"], start=1):
        if not isinstance(entry, dict) or "weight" not in entry:
            raise ModelFormatError(f'layer {idx}: expected an object with a "weight" field')
        try:
            W = np.array(entry["weight"], dtype=np.float64)
            b = None if entry.get("bias") is None else np.array(entry["bias"], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ModelFormatError(f"layer {idx}: non-numeric or ragged weights ({exc})") from None
        if W.ndim != 2 or W.size == 0:
            raise ModelFormatError(f"layer {idx}: weight must be a nonempty 2-D array")
        if not np.all(np.isfinite(W)) or (b is not None and not np.all(np.isfinite(b))):
            raise ModelFormatError(f"layer {idx}: weights contain NaN or Inf")
        if b is not None and b.shape != (W.shape[0],):
            raise ModelFormatError(f"layer {idx}: bias length does not match {W.shape[0]} rows")
        if prev_out is not None and W.shape[1] != prev_out:
            raise ModelFormatError(
                f"layer {idx}: expects {W.shape[1]} inputs but layer {idx - 1} has {prev_out} outputs"
            )
        prev_out = W.shape[0]
        layers.append(DenseLayer(W, b))
    if not layers:
        raise ModelFormatError("model has no layers")
    return Network(layers)


def save(net, path):
    Path(path).write_text(json.dumps(network_to_dict(net)), encoding="utf-8")


def load(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON ({exc})") from None
    return network_from_dict(data)


def load_dataset(path):
    """Read ``label,v0,v1,...`` rows; returns ``(labels, inputs)``."""
    labels, rows = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                labels.append(int(row[0]))
                rows.append([float(v) for v in row[1:]])
            except ValueError:
                raise ModelFormatError(f"{path}:{lineno}: expected 'label,v0,v1,...'") from None
    if not rows:
        raise ModelFormatError(f"{path}: dataset is empty")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ModelFormatError(f"{path}: rows have differing lengths {sorted(widths)}")
    X = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise ModelFormatError(f"{path}: dataset contains NaN or Inf")
    return np.array(labels, dtype=int), X


def save_dataset(path, labels, inputs):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for y, x in zip(labels, inputs):
            writer.writerow([int(y)] + [repr(float(v)) for v in x])
