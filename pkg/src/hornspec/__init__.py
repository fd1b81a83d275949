"""Numerical spectral geometry of finite metric horns.

Submodules:
    profile         horn geometry, degree weights, warped integrals
    sl_engine       singular Sturm-Liouville solver (shooting, eigenvalues)
    zeta_reg        zeta-regularized determinants of simple sequences
    double_zeta     double sequences and spectral decomposition at zero
    hodge_assembly  Hodge-Laplacian spectra and cohomology bookkeeping
    torsion         analytic torsion from closed-form components
    cli             configuration-driven command line driver
"""

__version__ = "0.1.0"
