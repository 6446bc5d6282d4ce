"""Floquet spectral analysis for matrix-valued periodic Dirac operators.

The operator under study acts on vector functions on the line as
K y = -i J1 y' + V(t) y with a 1-periodic self-adjoint block potential
V = [[0, v], [v*, 0]] built from a symmetric N x N trigonometric
polynomial v. The package computes monodromy matrices, Lyapunov branches,
band/gap structure, periodic and anti-periodic eigenvalues, resonances
(branch points of the Lyapunov functions), their large-n asymptotics and
trace-formula checks, plus a bifurcation case study for a two-channel
potential whose resonances leave the real axis.
"""

__version__ = "0.1.0"
