"""Exact free-field machinery for W-algebras.

Subpackages cover the coefficient field Q(k), a normally-ordered-product
vertex algebra engine, root/pyramid combinatorics, Wakimoto differential
operators and their affine lifts, lattice Fock modules with screening
charges, Miura operators, and coproduct checks.  Everything is exact:
coefficients live in Q(k), equality is equality of canonical forms.
"""

__version__ = "0.1.0"
