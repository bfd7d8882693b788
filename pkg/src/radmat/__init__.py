"""Two-sided operator-norm bounds for random sign matrices.

Modules: ``linalg`` (patterns, spectral norms), ``patterns`` (circulant,
hypercube, torus), ``rademacher`` (L_p of sign sums, ``||A||_{eps,p}``),
``bounds`` (bound formulas), ``decomp`` (circulant block covers),
``montecarlo`` (seeded expectations and checks), ``campaign``/``cli``.
"""

__version__ = "0.1.0"
