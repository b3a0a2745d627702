"""Irrational numbers that are simply normal to no base at all.

Exact construction of the approximant sequence, certified arithmetic on
the tower-sized denominators it produces, digit expansion and frequency
statistics of the approximants, and normality classification of
rationals — plus a JSON command-line front end.
"""

__version__ = "0.1.0"
