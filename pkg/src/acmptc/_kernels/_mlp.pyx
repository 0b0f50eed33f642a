# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled MLP forward/backward for small dense tanh networks.

Weights are (out, in) row-major float64 arrays; hidden layers use tanh and
the last layer is linear.  Must agree with ``_mlp_py`` to round-off.
"""

import numpy as np

from libc.math cimport tanh


def forward(list weights, list biases, x):
    """Return the list of activations ``[x, h1, ..., out]``."""
    cdef Py_ssize_t n_layers = len(weights)
    cdef Py_ssize_t layer, i, j, n_in, n_out
    cdef double s, s0, s1, s2, s3
    cdef double[:, ::1] W
    cdef double[::1] b
    cdef double[::1] inp
    cdef double[::1] out
    a0 = np.ascontiguousarray(x, dtype=np.float64)
    if a0.ndim != 1:
        raise ValueError("input must be a vector")
    acts = [a0]
    inp = a0
    for layer in range(n_layers):
        W = weights[layer]
        b = biases[layer]
        n_out = W.shape[0]
        n_in = W.shape[1]
        if inp.shape[0] != n_in or b.shape[0] != n_out:
            raise ValueError(
                f"layer {layer}: expected input of length {n_in}, got {inp.shape[0]}")
        o = np.empty(n_out)
        out = o
        for i in range(n_out):
            # four accumulators break the add dependency chain
            s0 = 0.0
            s1 = 0.0
            s2 = 0.0
            s3 = 0.0
            j = 0
            while j + 3 < n_in:
                s0 += W[i, j] * inp[j]
                s1 += W[i, j + 1] * inp[j + 1]
                s2 += W[i, j + 2] * inp[j + 2]
                s3 += W[i, j + 3] * inp[j + 3]
                j += 4
            while j < n_in:
                s0 += W[i, j] * inp[j]
                j += 1
            s = b[i] + ((s0 + s1) + (s2 + s3))
            if layer < n_layers - 1:
                s = tanh(s)
            out[i] = s
        acts.append(o)
        inp = out
    return acts


def backward(list weights, list acts, dout):
    """Gradients (dW list, db list) of a loss whose output gradient is ``dout``."""
    cdef Py_ssize_t n_layers = len(weights)
    cdef Py_ssize_t layer, i, j, n_in, n_out
    cdef double d, s, a
    cdef double[:, ::1] W
    cdef double[:, ::1] gw
    cdef double[::1] a_in
    cdef double[::1] delta
    cdef double[::1] nxt
    gws = [None] * n_layers
    gbs = [None] * n_layers
    dl = np.array(dout, dtype=np.float64)
    delta = dl
    for layer in range(n_layers - 1, -1, -1):
        W = weights[layer]
        a_in = acts[layer]
        n_out = W.shape[0]
        n_in = W.shape[1]
        g = np.empty((n_out, n_in))
        gw = g
        for i in range(n_out):
            d = delta[i]
            for j in range(n_in):
                gw[i, j] = d * a_in[j]
        gws[layer] = g
        gbs[layer] = np.asarray(delta).copy()
        if layer > 0:
            nd = np.empty(n_in)
            nxt = nd
            for j in range(n_in):
                nxt[j] = 0.0
            for i in range(n_out):
                d = delta[i]
                for j in range(n_in):
                    nxt[j] += W[i, j] * d
            for j in range(n_in):
                a = a_in[j]
                nxt[j] *= 1.0 - a * a
            delta = nxt
    return gws, gbs
