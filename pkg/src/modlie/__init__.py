"""modlie: exact workbench for modular Lie algebras over small finite fields."""

__version__ = "0.1.0"

from modlie.field import make_field, artin_schreier_xi  # noqa: F401
