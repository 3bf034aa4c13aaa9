import numpy as np

from ultrahypo import AssociatedFunction, WeightSequence, check_axioms, doubling_check, fit_constants

# Gevrey weights M_k = (k!)^s are log-convex and satisfy M.0-M.3
for s in (1.5, 2.0, 3.0):
    rep = check_axioms(WeightSequence.gevrey(s), 64)
    print(f"s={s}: axioms on 64 terms pass = {rep.passed}")

# M(r) grows like s * r^(1/s)
r = np.geomspace(1e2, 1e8, 4)
for s in (1.5, 2.0, 3.0):
    f = AssociatedFunction(WeightSequence.gevrey(s))
    ratio = np.asarray(f(r)) / (s * r ** (1 / s))
    print(f"s={s}: M(r) / (s r^(1/s)) =", np.round(ratio, 4))

# generalized inverse: the smallest r reaching a level
f = AssociatedFunction(WeightSequence.gevrey(2.0))
for y in (1.0, 10.0, 100.0):
    r_star = float(f.inverse(y))
    print(f"M^-1({y}) = {r_star:.6g}, M(M^-1(y)) = {float(f(r_star)):.6g}")

# doubling: 2 M(rho) <= log A + M(H rho) with A and H fitted on a long prefix
w = WeightSequence.gevrey(2.0)
grid = [10.0**j for j in range(7)]
k_star = int(np.max(f.argmax_index(2.0 * np.asarray(grid))))
c = fit_constants(w, 2.0, 2 * k_star + 1)
rep = doubling_check(f, c, grid)
print(f"log A = {c.log_a:.1f}, worst margin = {rep.max_violation:.1f}, certified = {rep.certified}")
