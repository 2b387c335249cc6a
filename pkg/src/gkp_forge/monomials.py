"""The fixed operator basis used for Kraus pair products."""

from enum import Enum


class Monomial(str, Enum):
    I = "I"
    A = "a"
    A_DAG = "a_dag"
    N = "n"
    N2 = "n2"
    N3 = "n3"
    N4 = "n4"
    N_A = "n_a"  # a^dag a^2
    A_DAG_N = "a_dag_n"  # (a^dag a^2)^dag = a^dag^2 a
    N2_A = "n2_a"  # (a^dag a)^2 a
    A_DAG_N2 = "a_dag_n2"  # ((a^dag a)^2 a)^dag

    @property
    def adjoint(self) -> "Monomial":
        return _ADJOINT.get(self, self)

    @property
    def direct(self) -> bool:
        """True when a closed-form kernel exists (no conjugate-and-swap needed)."""
        return self not in _INDIRECT


_ADJOINT = {
    Monomial.A: Monomial.A_DAG,
    Monomial.A_DAG: Monomial.A,
    Monomial.N_A: Monomial.A_DAG_N,
    Monomial.A_DAG_N: Monomial.N_A,
    Monomial.N2_A: Monomial.A_DAG_N2,
    Monomial.A_DAG_N2: Monomial.N2_A,
}
_INDIRECT = frozenset({Monomial.A_DAG, Monomial.A_DAG_N, Monomial.A_DAG_N2})
