"""Eulerian thermo-magneto-viscoelastic simulator with runtime energy audits.

Modules: constitutive, fields, transport, demag, llg, momentum, heat,
statics, diagnostics, runner (plus cli and acceptance).
"""
__version__ = "0.1.0"
