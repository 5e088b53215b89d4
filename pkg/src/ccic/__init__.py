"""A proof kernel for the Calculus of Inductive Constructions whose conversion
rule also decides equations of Presburger arithmetic and lists, emitting a
replayable certificate for every call to the decision procedure.

Submodules load lazily so that the certificate checker can be imported
without the decision procedures.
"""
import importlib

_EXPORTS = {
    "Certificate": "certificates", "emit": "certificates", "parse": "certificates", "verify": "certificates",
    "Converter": "conversion", "Settings": "conversion", "convertible": "conversion",
    "extract_eqs": "conversion", "in_o_plus": "conversion", "weak_convertible": "conversion",
    "Annot": "terms", "Context": "terms",
    "Kernel": "typer", "check": "typer", "check_strong_elim_guard": "typer", "infer": "typer",
}

__all__ = sorted(_EXPORTS)


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(importlib.import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
