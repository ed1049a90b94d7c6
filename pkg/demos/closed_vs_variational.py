"""Closed-form Fisher information next to its variational lower bounds.

The variational value maximizes a Rayleigh quotient over test functions of
growing polynomial degree on the compactified line, so it climbs toward the
closed-form information from below.
"""
from groupfisher import cauchy, convergence_profile, fisher_matrix, huber_lfd, make_model, std_normal

cases = [
    ("loc1", [0.0], std_normal(1), "location, normal"),
    ("loc1", [0.0], cauchy(), "location, Cauchy"),
    ("scale1", [1.0], std_normal(1), "scale, normal"),
    ("scale1", [2.0], huber_lfd(0.1), "scale, Huber LFD at theta=2"),
]

for tag, theta, dist, label in cases:
    model = make_model(tag)
    closed = fisher_matrix(model, theta, dist).matrix[0, 0]
    prof = convergence_profile(model, theta, dist, [1.0], [1, 2, 4, 8, 12])
    steps = "  ".join(f"d={d}: {v:.5f}" for d, v in prof.rows())
    print(f"{label:30s} closed {closed:.6f}")
    print(f"{'':30s} {steps}")
