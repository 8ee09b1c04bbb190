"""The soft-margin SVM solver on problems small enough to check by hand.

Three stops: a 2-point problem whose dual solution is known in closed form,
a brute-force check that sequential minimal optimization really lands on the
constrained optimum, and a 2-D multiclass problem where one-vs-one voting
assembles three binary margins into a 3-class decision.

Run:  python demos/03_svm_playground.py
"""

import numpy as np

from appstress.svm import (
    KernelSpec,
    SvmParams,
    decision_value,
    predict_multiclass_batch,
    solve_smo,
    train_multiclass,
)
from appstress.synth import brute_force_svm_oracle

# -- 1. the textbook 2-point problem ------------------------------------------
# Points x = -1 and x = +1 with matching labels. Maximizing the dual gives
# alpha = (0.5, 0.5), bias 0, and decision function f(x) = x: the margin
# boundaries pass exactly through the two points.
data = [([-1.0], -1), ([1.0], 1)]
model = solve_smo(data, KernelSpec("linear"), SvmParams(c=10.0), standardize=False)
print("2-point problem:")
print(f"  alphas   = {model.support_alphas}  (closed form: [0.5, 0.5])")
print(f"  bias     = {model.bias:+.2e}        (closed form: 0)")
print(f"  f(0.25)  = {decision_value(model, [0.25]):+.4f}       (f(x) = x)")
print(f"  sweeps to converge: {model.n_sweeps}")

# -- 2. agreement with brute force --------------------------------------------
# On problems this small the dual can be maximized numerically without any
# cleverness; the SMO result should match it to within the solver tolerance.
rng = np.random.default_rng(5)
print("\nSMO vs brute-force dual optimum (5 random 5-point problems, rbf):")
for trial in range(5):
    x = rng.normal(size=(5, 2))
    y = np.array([-1.0, -1.0, 1.0, 1.0, rng.choice([-1.0, 1.0])])
    problem = list(zip(x, y))
    kernel = KernelSpec("rbf", gamma=0.8)
    smo = solve_smo(problem, kernel, SvmParams(c=1.0), standardize=False)
    oracle_obj, _ = brute_force_svm_oracle(problem, kernel, c=1.0)
    print(f"  trial {trial}: dual objective {smo.dual_objective:.6f} "
          f"vs oracle {oracle_obj:.6f} (diff {abs(smo.dual_objective - oracle_obj):.2e})")

# -- 3. one-vs-one multiclass --------------------------------------------------
# Three Gaussian blobs; each unordered class pair trains one binary model and
# the three vote. 60 training points, grid of probes across the plane.
centers = {1: (-2.0, 0.0), 2: (2.0, 0.0), 3: (0.0, 2.5)}
points = []
for label, (cx, cy) in centers.items():
    for _ in range(20):
        points.append((rng.normal([cx, cy], 0.6), label))
clf = train_multiclass(points, KernelSpec("rbf", gamma=0.5), SvmParams(c=10.0))
print(f"\n3-class blobs: {len(clf.pairwise)} pairwise models "
      f"for classes {clf.classes}")
train_x = np.array([p for p, _ in points])
train_y = np.array([l for _, l in points])
acc = float(np.mean(predict_multiclass_batch(clf, train_x) == train_y))
print(f"training accuracy: {acc:.2f}")

print("\ndecision map (x in [-4,4], y in [-2,4]):")
for gy in np.linspace(4.0, -2.0, 9):
    row = ""
    for gx in np.linspace(-4.0, 4.0, 33):
        row += str(predict_multiclass_batch(clf, np.array([[gx, gy]]))[0])
    print("  " + row)
