"""Numerical certification of quasi-concavity for C1* scalar fields.

A C1* field is a C1 function f with Df(x) = lambda(x) g(x) for a C1 vector
field g and a positive continuous lambda. Quasi-concavity is tested through
the sign of <w, Dg(x) w> on the hyperplane <w, g(x)> = 0, cross-checked by
sampling the definition directly.
"""
__version__ = "0.1.0"
