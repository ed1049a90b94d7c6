"""Local asymptotic normality by simulation.

The remainder of the quadratic log-likelihood expansion is exactly zero for
a Gaussian location family and shrinks with n for the scale family.
"""
from groupfisher import lan_experiment, make_model, std_normal

n_list = (100, 1000, 10000)
for tag, theta in (("loc1", [0.0]), ("scale1", [1.0])):
    rep = lan_experiment(make_model(tag), theta, std_normal(1), [1.0], n_list, R=200, seed=0)
    print(tag)
    for n, var in zip(n_list, rep.variances()):
        s = rep.summary(n)
        print(f"  n={n:6d}  var {var:.3e}  median |r| {s['median_abs']:.3e}")
