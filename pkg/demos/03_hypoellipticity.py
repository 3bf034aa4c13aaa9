from ultrahypo import WeightSequence, generate, implication_check, test_beurling_gh, test_roumieu_gh, torus_laplacian

w = WeightSequence.gevrey(2.0, 2)
model = torus_laplacian(1, 512)

symbols = {
    "identity": generate(model, "poly_decay", N=0),
    "(1+lam)^-3": generate(model, "poly_decay", N=3),
    "exp(-lam^1/2)": generate(model, "exp_decay", c=1.0, theta=0.5),
    "envelope r=5": generate(model, "envelope", weights=w, L=5.0),
    "planted k-schedule": generate(model, "beurling_planted", weights=w, stride=3, factor=0.5),
}

print(f"{'symbol':20s} {'roumieu':10s} {'beurling':10s} {'smooth':10s}")
for name, s in symbols.items():
    imp = implication_check(s, w)
    r = test_roumieu_gh(s, w)
    b = test_beurling_gh(s, w)
    print(f"{name:20s} {r.decision:10s} {b.decision:10s} {imp['smooth']['decision']:10s}")

# the Beurling fit recovers the envelope level
b = test_beurling_gh(symbols["envelope r=5"], w)
print("\nfitted level for envelope r=5:", round(b.fitted["r_fit"], 4), "grid value", round(b.fitted["r"], 4))

# a planted violation on every fourth rung gives a Roumieu witness
v = test_roumieu_gh(symbols["planted k-schedule"], w)
print("roumieu witness eps0:", v.witness["eps0"], "first indices:", v.witness["indices"][:6])
