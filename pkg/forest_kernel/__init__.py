"""
forest_kernel - rooted labeled forests on root/vertex configurations.

Enumerates forests, evaluates the weighted forest kernel Q_{h,nu}(eta|gamma)
by its root-peeling recursion, and checks the count N(m|n) = m(m+n)^(n-1)
against brute-force oracles.
"""

__version__ = "0.1.0"
