import numpy as np

from ultrahypo import CoefficientSequence, WeightSequence, sphere_laplacian, torus_laplacian
from ultrahypo import test_beurling, test_dual, test_roumieu, test_smooth
from ultrahypo.symbols import envelope_values

w = WeightSequence.gevrey(2.0, 2)

for model in (torus_laplacian(1, 512), sphere_laplacian(512)):
    lam = model.lambdas
    print(f"\n{model.name}: {len(model)} distinct eigenvalues, largest {lam[-1]:.0f}")

    # exp(-M(2 rho)) is Roumieu by construction, with L* close to 2
    u = CoefficientSequence.from_norms(model, envelope_values(model, w, 2.0))
    v = test_roumieu(u, w)
    print("envelope L=2      roumieu :", v.decision, f"L* = {v.fitted['L_star']:.4f}")
    print("envelope L=2      beurling:", test_beurling(u, w).decision)
    print("envelope L=2      smooth  :", test_smooth(u).decision)

    # a slowly growing level is enough for every L
    grow = CoefficientSequence.from_norms(model, envelope_values(model, w, np.maximum(1.0, lam**0.25)))
    print("envelope L=lam^1/4 beurling:", test_beurling(grow, w).decision)

    # exp(-log^2) beats every polynomial but no Gevrey envelope
    anti = CoefficientSequence.from_norms(model, np.exp(-np.log1p(lam) ** 2))
    print("exp(-log^2)       smooth  :", test_smooth(anti).decision)
    print("exp(-log^2)       roumieu :", test_roumieu(anti, w).decision)

    ones = CoefficientSequence.from_norms(model, np.ones(len(model)))
    print("unit blocks       duals   :", test_dual(ones, w, "roumieu").decision, test_dual(ones, w, "beurling").decision)
