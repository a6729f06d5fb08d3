"""Semi-analytic half-space Stokes resolvent and semigroup toolkit.

Solves the Stokes resolvent problem on the half-space per tangential
Fourier mode in closed form, applies the Stokes semigroup by Dunford
contour quadrature, provides the Helmholtz-Leray projection and its
projected-divergence form, builds mild Navier-Stokes solutions by
Picard iteration, and fits/verifies the operator-norm estimate shapes
in uniformly local Lebesgue norms.
"""

__version__ = "0.1.0"
