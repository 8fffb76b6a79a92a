"""ellab: a desk-scale laboratory for gradient estimates, universal bounds,
Harnack inequalities and Liouville thresholds of semilinear elliptic equations
on smooth weighted model spaces."""

__version__ = "0.1.0"
