"""Exact computational toolkit for Frobenius Heisenberg categories.

Layers, bottom to top: exact scalars (scalars), graded Frobenius
superalgebras by structure constants (frobenius), wreath product and
affine wreath product algebras (wreath), their cyclotomic quotients and
bubble series (cyclotomic), the string-diagram category and its rewriting
engine (diagrams), and the lattice Heisenberg algebra it decategorifies
to (heisenberg).  The cli module exposes all of it on the command line.
"""

__version__ = "0.1.0"
