"""Built-in forms."""

from __future__ import annotations

from .exact.forms import QuadForm

E6_DUAL = QuadForm.from_rows(
    [
        [4, 1, 2, 2, -1, 1],
        [1, 4, 2, 2, 2, 1],
        [2, 2, 4, 1, 1, 2],
        [2, 2, 1, 4, 1, 2],
        [-1, 2, 1, 1, 4, 2],
        [1, 1, 2, 2, 2, 4],
    ]
)

R1 = QuadForm.from_rows(
    [
        [12, 3, 6, 6, -3, 3],
        [3, 7, 4, 4, 3, 2],
        [6, 4, 8, 3, 1, 4],
        [6, 4, 3, 8, 1, 4],
        [-3, 3, 1, 1, 7, 3],
        [3, 2, 4, 4, 3, 7],
    ]
)

R2 = QuadForm.from_rows(
    [
        [0, 0, 0, 0, 0, 0],
        [0, 5, 2, 2, 3, 1],
        [0, 2, 4, 0, 2, 2],
        [0, 2, 0, 4, 2, 2],
        [0, 3, 2, 2, 5, 3],
        [0, 1, 2, 2, 3, 5],
    ]
)

D4 = QuadForm.from_rows([[2, -1, 0, 0], [-1, 2, -1, -1], [0, -1, 2, 0], [0, -1, 0, 2]])


def root_a(d: int) -> QuadForm:
    """Gram matrix of the root lattice A_d."""
    return QuadForm.from_rows([[2 if i == j else -1 if abs(i - j) == 1 else 0 for j in range(d)] for i in range(d)])


def dual_a(d: int) -> QuadForm:
    """``(d + 1) I - J``: a scaled Gram matrix of A_d^*."""
    return QuadForm.from_rows([[d if i == j else -1 for j in range(d)] for i in range(d)])


FIXTURES = {"E6*": E6_DUAL, "R1": R1, "R2": R2, "D4": D4}
