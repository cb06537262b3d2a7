"""
HJ Toolkit - geometric Hamilton-Jacobi theory on symplectic, cosymplectic and contact phase spaces
"""

__version__ = "0.1.0"
__author__ = "hj-toolkit"
