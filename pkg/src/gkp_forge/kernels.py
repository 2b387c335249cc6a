"""Closed-form moment kernels between squeezed coherent states.

Each kernel returns ``G(bk, bl)`` such that

    <alpha_k, r| O |alpha_l, r> = G(bk, bl) * <bk|bl>

where ``bk``/``bl`` are the two-photon coherent parameters of the two states
and ``<bk|bl>`` is the plain coherent-state overlap.  ``lam = cosh(r)`` and
``lam1 = sinh(r)``.  Every formula is kept in its expanded printed form; do
not simplify, each one is pinned by a Fock-space test.

``bk`` is the bra parameter and is used conjugated (``b = conj(bk)``).
All functions broadcast over numpy arrays.
"""

import numpy as np

from .monomials import Monomial


def _identity(b, bl, lam, lam1):
    return np.ones(np.broadcast(b, bl).shape, dtype=complex) if np.ndim(b) or np.ndim(bl) else 1.0 + 0j


def _destroy(b, bl, lam, lam1):
    return lam * bl - lam1 * b


def _number(b, bl, lam, lam1):
    return bl * b * (lam**2 + lam1**2) + lam1 * (lam1 - lam * bl**2) - lam * lam1 * b**2


def _n_a(b, bl, lam, lam1):
    # a^dag a^2
    return (
        -lam1 * (2 * lam**2 + lam1**2) * b**2 * bl
        + (lam**2 + 2 * lam1**2) * b * (lam * bl**2 - lam1)
        + lam * lam1**2 * b**3
        + lam * lam1 * bl * (3 * lam1 - lam * bl**2)
    )


def _n2(b, bl, lam, lam1):
    return (
        -2 * lam * lam1 * (lam**2 + lam1**2) * b**3 * bl
        + b**2
        * (
            lam**4 * bl**2
            + 4 * lam1**2 * lam**2 * bl**2
            - 2 * lam1 * lam**3
            - 4 * lam1**3 * lam
            + lam1**4 * bl**2
        )
        + b
        * bl
        * (
            -2 * lam1 * lam**3 * bl**2
            - 2 * lam1**3 * lam * bl**2
            + lam**4
            + 8 * lam1**2 * lam**2
            + 3 * lam1**4
        )
        + lam**2 * lam1**2 * b**4
        + lam1 * (-2 * lam**3 * bl**2 + lam1 * lam**2 * (bl**4 + 2) - 4 * lam1**2 * lam * bl**2 + lam1**3)
    )


def _n2_a(b, bl, lam, lam1):
    # (a^dag a)^2 a
    return (
        lam * lam1**2 * (3 * lam**2 + 2 * lam1**2) * b**4 * bl
        - lam1
        * b**3
        * (
            3 * lam**4 * bl**2
            + 6 * lam1**2 * lam**2 * bl**2
            - 4 * lam1 * lam**3
            + lam1**4 * bl**2
            - 6 * lam1**3 * lam
        )
        + b**2
        * bl
        * (
            lam**5 * bl**2
            + 3 * lam1**4 * lam * bl**2
            - 5 * lam1 * lam**4
            - 20 * lam1**3 * lam**2
            + 6 * lam1**2 * lam**3 * bl**2
            - 5 * lam1**5
        )
        + b
        * (
            lam**5 * bl**2
            - lam1 * lam**4 * (2 * bl**4 + 1)
            + 16 * lam1**2 * lam**3 * bl**2
            - lam1**3 * lam**2 * (3 * bl**4 + 10)
            + 13 * lam1**4 * lam * bl**2
            - 4 * lam1**5
        )
        - lam**2 * lam1**3 * b**5
        + lam * lam1 * bl * (-2 * lam**3 * bl**2 + lam1 * lam**2 * (bl**4 + 6) - 8 * lam1**2 * lam * bl**2 + 9 * lam1**3)
    )


def _n3(b, bl, lam, lam1):
    return (
        3 * lam**2 * lam1**2 * (lam**2 + lam1**2) * b**5 * bl
        - 3
        * lam
        * lam1
        * b**4
        * (lam**4 * bl**2 + 3 * lam1**2 * lam**2 * bl**2 - 2 * lam1 * lam**3 + lam1**4 * bl**2 - 3 * lam1**3 * lam)
        + b**3
        * bl
        * (
            lam**6 * bl**2
            + 9 * lam1**2 * lam**4 * bl**2
            + 9 * lam1**4 * lam**2 * bl**2
            + lam1**6 * bl**2
            - 9 * lam1 * lam**5
            - 36 * lam1**3 * lam**3
            - 15 * lam1**5 * lam
        )
        + b**2
        * (
            3 * lam**6 * bl**2
            - lam1 * lam**5 * (3 * bl**4 + 4)
            + 6 * lam1**6 * bl**2
            + 36 * lam1**2 * lam**4 * bl**2
            - lam1**3 * lam**3 * (9 * bl**4 + 28)
            - lam1**5 * lam * (3 * bl**4 + 13)
            + 45 * lam1**4 * lam**2 * bl**2
        )
        + b
        * bl
        * (
            -9 * lam1 * lam**5 * bl**2
            + lam1**2 * lam**4 * (3 * bl**4 + 32)
            - 36 * lam1**3 * lam**3 * bl**2
            + lam1**4 * lam**2 * (3 * bl**4 + 50)
            - 15 * lam1**5 * lam * bl**2
            + lam**6
            + 7 * lam1**6
        )
        - lam**3 * lam1**3 * b**6
        + lam1
        * (
            -4 * lam**5 * bl**2
            + 2 * lam1 * lam**4 * (3 * bl**4 + 2)
            - lam1**2 * lam**3 * bl**2 * (bl**4 + 28)
            + lam1**3 * lam**2 * (9 * bl**4 + 10)
            - 13 * lam1**4 * lam * bl**2
            + lam1**5
        )
    )


def _n4(b, bl, lam, lam1):
    return (
        lam**4 * lam1**4 * b**8
        - 4 * lam**3 * lam1**3 * (lam**2 + lam1**2) * bl * b**7
        + 2
        * lam**2
        * lam1**2
        * (3 * bl**2 * lam**4 + 8 * lam1**2 * bl**2 * lam**2 - 6 * lam1 * lam**3 - 8 * lam1**3 * lam + 3 * lam1**4 * bl**2)
        * b**6
        - 2
        * lam
        * lam1
        * bl
        * (
            2 * bl**2 * lam**6
            + 12 * lam1**2 * bl**2 * lam**4
            - 15 * lam1 * lam**5
            - 48 * lam1**3 * lam**3
            + 12 * lam1**4 * bl**2 * lam**2
            - 21 * lam1**5 * lam
            + 2 * lam1**6 * bl**2
        )
        * b**5
        + (
            bl**4 * lam**8
            - 192 * lam1**5 * bl**2 * lam**3
            - 24 * lam1 * bl**2 * lam**7
            + 4 * lam1**4 * (9 * bl**4 + 31) * lam**4
            + lam1**8 * bl**4
            + 4 * lam1**2 * (4 * bl**4 + 7) * lam**6
            - 168 * lam1**3 * bl**2 * lam**5
            + 2 * lam1**6 * (8 * bl**4 + 29) * lam**2
            - 36 * lam1**7 * bl**2 * lam
        )
        * b**4
        - 2
        * bl
        * (
            2 * lam1 * (bl**4 + 8) * lam**7
            + 2 * lam1**3 * (6 * bl**4 + 79) * lam**5
            - 3 * bl**2 * lam**8
            - 144 * lam1**4 * bl**2 * lam**4
            + 2 * lam1**5 * (6 * bl**4 + 103) * lam**3
            + 2 * lam1**7 * (bl**4 + 20) * lam
            - 56 * lam1**2 * bl**2 * lam**6
            - 72 * lam1**6 * bl**2 * lam**2
            - 5 * lam1**8 * bl**2
        )
        * b**3
        + (
            7 * bl**2 * lam**8
            + 2 * lam1**2 * bl**2 * (3 * bl**4 + 106) * lam**6
            - 8 * lam1 * (3 * bl**4 + 1) * lam**7
            - 24 * lam1**3 * (7 * bl**4 + 6) * lam**5
            + 4 * lam1**4 * bl**2 * (4 * bl**4 + 165) * lam**4
            + 2 * lam1**6 * bl**2 * (3 * bl**4 + 178) * lam**2
            + 25 * lam1**8 * bl**2
            - 4 * lam1**7 * (9 * bl**4 + 10) * lam
            - 12 * lam1**5 * (16 * bl**4 + 19) * lam**3
        )
        * b**2
        + (
            -32 * lam1 * bl**2 * lam**7
            + 6 * lam1**2 * (5 * bl**4 + 18) * lam**6
            + 24 * lam1**4 * (4 * bl**4 + 19) * lam**4
            - 4 * lam1**5 * bl**2 * (bl**4 + 103) * lam**3
            + lam**8
            + 15 * lam1**8
            + 2 * lam1**6 * (21 * bl**4 + 130) * lam**2
            - 4 * lam1**3 * bl**2 * (bl**4 + 79) * lam**5
            - 80 * lam1**7 * bl**2 * lam
        )
        * bl
        * b
        + lam1
        * (
            -12 * lam1**2 * bl**2 * (bl**4 + 12) * lam**5
            - 40 * lam1**6 * bl**2 * lam
            - 8 * bl**2 * lam**7
            + lam1**3 * (bl**8 + 124 * bl**4 + 60) * lam**4
            - 4 * lam1**4 * bl**2 * (4 * bl**4 + 57) * lam**3
            + 4 * lam1 * (7 * bl**4 + 2) * lam**6
            + 2 * lam1**5 * (29 * bl**4 + 18) * lam**2
            + lam1**7
        )
    )


# Directly evaluable monomials; adjoints are handled by the caller.
KERNELS = {
    Monomial.I: _identity,
    Monomial.A: _destroy,
    Monomial.N: _number,
    Monomial.N_A: _n_a,
    Monomial.N2: _n2,
    Monomial.N2_A: _n2_a,
    Monomial.N3: _n3,
    Monomial.N4: _n4,
}


def moment_kernel(op, beta_k, beta_l, r):
    """``G_op(beta_k, beta_l)`` for one of the eight directly evaluable monomials."""
    try:
        fn = KERNELS[Monomial(op)]
    except (KeyError, ValueError):
        raise ValueError(f"no closed-form kernel for monomial {op!r}") from None
    lam, lam1 = np.cosh(r), np.sinh(r)
    return fn(np.conj(beta_k), beta_l, lam, lam1)
