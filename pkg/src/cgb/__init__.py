"""Verification of the Chern-Gauss-Bonnet theorem through a 0|2 sigma model.

Subpackages by responsibility:

* ``grassmann``  -- finite Grassmann algebra, Berezin integrals, Pfaffians
* ``geometry``   -- metric jets, Christoffel symbols, curvature, Hessians
* ``manifolds``  -- chart catalog with quadrature grids and known invariants
* ``morse``      -- critical points of potentials and the Hopf index
* ``sigma``      -- the sigma-model action, Euler density, partition function
* ``efts``       -- exact symbolic algebra of the odd-source function ring
* ``cli``        -- the ``cgb`` command line driver
"""

__version__ = "0.1.0"
