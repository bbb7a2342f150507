"""Exact arithmetic for antispecial cycles on Drinfeld's p-adic half plane.

Modules: padic (scalars), quadform (Jordan invariants), cycles (intersection
numbers), density (local density polynomials), counting (brute-force density
oracle), tree (Bruhat-Tits tree model), cli.
"""

__version__ = "0.1.0"
