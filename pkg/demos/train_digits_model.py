"""Train the small digits classifier shipped in ``l2verify/data``.

8x8 handwritten digits (scikit-learn's copy of the UCI set), pixels scaled
to [0, 1], a 64-32-32-10 ReLU network trained with plain numpy Adam on
cross-entropy. A spectral-norm penalty keeps the per-layer norms modest so
that there is a radius where certification is possible at all.

    python3 demos/train_digits_model.py

Writes ``digits_mlp.json`` and ``digits_test.csv`` (the held-out rows).
"""

from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits

from l2verify.network import Network, save, save_dataset

OUT = Path(__file__).resolve().parents[1] / "src" / "l2verify" / "data"
WIDTHS = [64, 32, 32, 10]
EPOCHS = 300
BATCH = 64
LR = 3e-3
LIP_PENALTY = 2e-3
SEED = 0


def init_params(rng):
    Ws, bs = [], []
    for fan_in, fan_out in zip(WIDTHS[:-1], WIDTHS[1:]):
        Ws.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in)))
        bs.append(np.zeros(fan_out))
    return Ws, bs


def loss_and_grads(Ws, bs, X, y):
    acts, pre = [X], []
    a = X
    for k, (W, b) in enumerate(zip(Ws, bs)):
        z = a @ W.T + b
        pre.append(z)
        a = np.maximum(z, 0.0) if k < len(Ws) - 1 else z
        acts.append(a)
    logits = acts[-1] - acts[-1].max(axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    loss = -np.mean(np.log(p[np.arange(len(y)), y] + 1e-12))
    delta = p
    delta[np.arange(len(y)), y] -= 1.0
    delta /= len(y)
    gW, gb = [None] * len(Ws), [None] * len(Ws)
    for k in range(len(Ws) - 1, -1, -1):
        gW[k] = delta.T @ acts[k]
        gb[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ Ws[k]) * (pre[k - 1] > 0)
    # Penalise the top singular value of each layer through its singular vectors.
    for k, W in enumerate(Ws):
        U, s, Vt = np.linalg.svd(W, full_matrices=False)
        loss += LIP_PENALTY * s[0] ** 2
        gW[k] += LIP_PENALTY * 2 * s[0] * np.outer(U[:, 0], Vt[0])
    return loss, gW, gb


def train(X, y, rng):
    Ws, bs = init_params(rng)
    params = Ws + bs
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    t = 0
    for epoch in range(EPOCHS):
        order = rng.permutation(len(X))
        for start in range(0, len(X), BATCH):
            idx = order[start:start + BATCH]
            loss, gW, gb = loss_and_grads(params[:3], params[3:], X[idx], y[idx])
            t += 1
            for i, g in enumerate(gW + gb):
                m[i] = 0.9 * m[i] + 0.1 * g
                v[i] = 0.999 * v[i] + 0.001 * g * g
                params[i] -= LR * (m[i] / (1 - 0.9**t)) / (np.sqrt(v[i] / (1 - 0.999**t)) + 1e-8)
        if epoch % 50 == 0:
            print(f"epoch {epoch:3d}  loss {loss:.4f}")
    return params[:3], params[3:]


def main():
    rng = np.random.default_rng(SEED)
    digits = load_digits()
    X = digits.data / 16.0
    y = digits.target
    order = rng.permutation(len(X))
    train_idx, test_idx = order[:1400], order[1400:]

    Ws, bs = train(X[train_idx], y[train_idx], rng)
    net = Network.from_weights(Ws, bs)

    for name, idx in (("train", train_idx), ("test", test_idx)):
        acc = np.mean(np.argmax(net.forward(X[idx]), axis=1) == y[idx])
        print(f"{name} accuracy {acc:.3f}")
    print("spectral norms", [round(float(np.linalg.norm(W, 2)), 3) for W in Ws])

    OUT.mkdir(parents=True, exist_ok=True)
    save(net, OUT / "digits_mlp.json")
    save_dataset(OUT / "digits_test.csv", y[test_idx], X[test_idx])
    print("wrote", OUT / "digits_mlp.json")


if __name__ == "__main__":
    main()
