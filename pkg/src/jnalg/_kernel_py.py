"""numpy implementation of the register-program kernel (fallback)."""
import numpy as np

_TINY = 1e-300


def run_program(ops, a, b, consts, points, outputs):
    """Execute a program on all points at once.

    Returns ``(values, err, err_slot, err_point)``; ``err`` is 0 on success,
    1 for ln of a non-positive value, 2 for a near-zero denominator.
    """
    npts = points.shape[0]
    regs = [None] * len(ops)
    with np.errstate(all="ignore"):
        for i in range(len(ops)):
            op = ops[i]
            if op == 0:
                r = np.full(npts, consts[a[i]])
            elif op == 1:
                r = points[:, a[i]]
            elif op == 2:
                r = regs[a[i]] + regs[b[i]]
            elif op == 3:
                r = regs[a[i]] * regs[b[i]]
            elif op == 4:
                x = regs[a[i]]
                k = int(b[i])
                if k < 0:
                    den = x ** (-k)
                    bad = np.abs(den) < _TINY
                    if bad.any():
                        return None, 2, i, int(np.argmax(bad))
                    r = 1.0 / den
                else:
                    r = x**k
            elif op == 5:
                r = np.exp(regs[a[i]])
            elif op == 6:
                x = regs[a[i]]
                bad = x <= 0.0
                if bad.any():
                    return None, 1, i, int(np.argmax(bad))
                r = np.log(x)
            elif op == 7:
                r = np.sin(regs[a[i]])
            else:
                r = np.cos(regs[a[i]])
            regs[i] = r
    out = np.empty((npts, len(outputs)))
    for j, s in enumerate(outputs):
        out[:, j] = regs[s]
    return out, 0, -1, -1
