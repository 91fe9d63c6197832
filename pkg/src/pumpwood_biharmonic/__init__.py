"""
# Pumpwood Biharmonic Package.

Numerical laboratory for the critical biharmonic equation
Delta^2 u = u^((N+4)/(N-4)) on the annulus eps < |x| < 1 with Navier
boundary conditions u = Delta u = 0. It computes the constants of the
reduced energy, checks the Green identities behind them, solves the radial
problem along a sequence of shrinking holes and measures the blow-up rate
mu ~ eps^sigma, sigma = (N-2)/(2(N-3)).

## Example of use:
```python
from pumpwood_biharmonic.analytic import Dimension
from pumpwood_biharmonic.reduced_energy import PsiModel, psi_critical_point
from pumpwood_biharmonic.solver import continuation_in_eps, default_schedule
from pumpwood_biharmonic.scaling import fit_scaling

dim = Dimension(5)
d_star = psi_critical_point(PsiModel.build(dim)).d_star
reports = continuation_in_eps(dim, default_schedule(), d_star)
fit = fit_scaling([(r.eps, r.mu_estimate) for r in reports], dim=dim)
print(fit.slope, fit.sigma)
```

The same runs are available from the command line:
```
pumpwood-biharmonic constants --dim 5 --out output
pumpwood-biharmonic scaling --dim 5 --eps-count 16 --threads 4
```
"""
