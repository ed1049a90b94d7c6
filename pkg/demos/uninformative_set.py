"""Where the data carry no information.

For a scale model the transformation x -> theta x fixes the origin, so an
atom at 0 contributes nothing: 0.9 N(0,1) + 0.1 delta_0 has information
0.9 * 2 = 1.8. Moving the atom to 1 makes the information infinite, which
shows up as a diverging convergence profile.
"""
from groupfisher import atom, convergence_profile, fisher_matrix, make_model, point_contaminated, std_normal

scale = make_model("scale1")
at_zero = point_contaminated(std_normal(1), 0.1, 0.0)
at_one = point_contaminated(std_normal(1), 0.1, 1.0)

prof = convergence_profile(scale, [1.0], at_zero, [1.0], [10, 50, 100, 200, 400], method="stieltjes")
print("atom at 0, degree -> value")
for d, v in prof.rows():
    print(f"  {d:4d}  {v:.6f}")
print(f"  status {prof.status}, limit 1.8")

print("single atom at 0:", convergence_profile(scale, [1.0], atom(0.0), [1.0], [5, 10]).values)

prof = convergence_profile(scale, [1.0], at_one, [1.0], [10, 50, 100, 200, 400], method="stieltjes")
print("atom at 1, degree -> value")
for d, v in prof.rows():
    print(f"  {d:4d}  {v:.1f}")
print(f"  status {prof.status}; closed form reports {fisher_matrix(scale, [1.0], at_one).status}")
