"""Constructive workbench for divisibility and valuation theories.

Subpackages cover: ring terms and their polynomial normal form, a textual
DSL for dynamical theories, a forward-chaining proof engine with checkable
proof trees, exact Groebner machinery over the rationals, finite
distributive lattices, certificate search and verification for Zariski and
valuative entailments, and pp-ring splittings.
"""

__version__ = "0.1.0"
