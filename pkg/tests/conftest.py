import numpy as np

import chaossync.autodiff as ad


def fd_grad(f, arrays, eps=1e-6):
    """Central-difference gradient of scalar f(*arrays) w.r.t. each array."""
    grads = []
    for k, a in enumerate(arrays):
        g = np.zeros_like(a, dtype=np.float64)
        flat = a.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + eps
            hi = f(*arrays)
            flat[i] = keep - eps
            lo = f(*arrays)
            flat[i] = keep
            gflat[i] = (hi - lo) / (2.0 * eps)
        grads.append(g)
    return grads


def rel_err(a, b):
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1.0)
    return np.max(np.abs(a - b)) / scale


def check_op_grads(build, arrays, tol=1e-5, eps=1e-6):
    """build(*tensors) -> scalar Tensor; compares backprop against FD."""
    tensors = [ad.Tensor(a.copy(), requires_grad=True) for a in arrays]
    loss = build(*tensors)
    ad.backward(loss)
    analytic = [t.grad for t in tensors]

    def scalar(*arrs):
        ts = [ad.Tensor(a) for a in arrs]
        return float(build(*ts).data)

    numeric = fd_grad(scalar, [a.copy() for a in arrays], eps=eps)
    worst = max(rel_err(a, n) for a, n in zip(analytic, numeric))
    assert worst <= tol, f"gradient mismatch: rel err {worst:.3e}"
    return worst
