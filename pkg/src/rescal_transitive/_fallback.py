"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def sgd_epoch(A, M, subs, objs, labels, order, lr, reg, batch_size):
    if M.shape[0] != 2:
        raise ValueError("sgd_epoch expects exactly two relation matrices")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    total = 0.0
    decay = 1.0 - 2.0 * lr * reg
    n = len(order)
    gA = np.zeros_like(A)
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        b = len(idx)
        v, w, y = subs[idx], objs[idx], labels[idx]
        Av, Aw = A[v], A[w]
        gAv = np.zeros_like(Av)
        gAw = np.zeros_like(Aw)
        gM = np.empty_like(M)
        for r in range(2):
            target = y if r == 1 else 1.0 - y
            U = Aw @ M[r].T
            Z = Av @ M[r]
            res = np.einsum("ij,ij->i", Av, U) - target
            total += float(res @ res)
            g2 = 2.0 * res[:, None]
            gAv += g2 * U
            gAw += g2 * Z
            gM[r] = (g2 * Av).T @ Aw
        np.add.at(gA, v, gAv)
        np.add.at(gA, w, gAw)
        rows = np.unique(np.concatenate([v, w]))
        step = lr / b
        if decay != 1.0:
            A *= decay
            M *= decay
        A[rows] -= step * gA[rows]
        gA[rows] = 0.0
        M -= step * gM
    return total


def bilinear_pairs(A, D, subs, objs):
    AD = A @ D
    return np.einsum("ij,ij->i", AD[subs], A[objs])
