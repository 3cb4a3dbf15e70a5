"""painlevekit: exact and numeric tooling for the Painlevé equations.

Subpackages:

* field      exact arithmetic over Q(t, parameters) with square roots
* dvariety   derivations, Darboux polynomials, first-integral search
* catalog    the six Painlevé families and their Hamiltonian forms
* transforms symbolic change-of-variable certification
* numint     complex-path integration, invariant drift, relation probe
* cli        command-line front end
"""

from .field import (
    FieldElem,
    Membership,
    PhasePoly,
    PhaseRational,
    Rat,
    SymbolTable,
    exact_divide,
    membership_test,
    parse,
)

__version__ = "0.1.0"

__all__ = [
    "FieldElem",
    "Membership",
    "PhasePoly",
    "PhaseRational",
    "Rat",
    "SymbolTable",
    "exact_divide",
    "membership_test",
    "parse",
    "__version__",
]
