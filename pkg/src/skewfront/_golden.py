import math

INVPHI = (math.sqrt(5) - 1) / 2


def golden_min(f, a: float, b: float, xtol: float = 1e-10, maxiter: int = 500) -> dict:
    """Golden-section search for a minimum of a unimodal f on [a, b]."""
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while abs(b - a) > xtol and it < maxiter:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
        it += 1
    x, fx = (c, fc) if fc < fd else (d, fd)
    return {"argmin": x, "minimum": fx, "iterations": it, "converged": abs(b - a) <= xtol}


def golden_max(f, a: float, b: float, xtol: float = 1e-10, maxiter: int = 500) -> dict:
    r = golden_min(lambda x: -f(x), a, b, xtol, maxiter)
    return {"argmax": r["argmin"], "maximum": -r["minimum"], "iterations": r["iterations"], "converged": r["converged"]}
