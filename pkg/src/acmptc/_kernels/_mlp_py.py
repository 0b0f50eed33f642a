"""Pure numpy MLP forward/backward; same contract as the compiled ``_mlp``."""

import numpy as np


def forward(weights, biases, x):
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError("input must be a vector")
    acts = [a]
    last = len(weights) - 1
    for layer, (W, b) in enumerate(zip(weights, biases)):
        if a.shape[0] != W.shape[1] or b.shape[0] != W.shape[0]:
            raise ValueError(
                f"layer {layer}: expected input of length {W.shape[1]}, got {a.shape[0]}")
        z = W @ a + b
        a = np.tanh(z) if layer < last else z
        acts.append(a)
    return acts


def backward(weights, acts, dout):
    n = len(weights)
    gws = [None] * n
    gbs = [None] * n
    delta = np.array(dout, dtype=np.float64)
    for layer in range(n - 1, -1, -1):
        a_in = acts[layer]
        gws[layer] = np.outer(delta, a_in)
        gbs[layer] = delta.copy()
        if layer > 0:
            delta = (weights[layer].T @ delta) * (1.0 - a_in * a_in)
    return gws, gbs
