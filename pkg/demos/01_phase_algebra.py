"""Tour of the pointwise phase algebra.

For a Hermitian curvature matrix F and metric g, the generalized
eigenvalues lambda_j of F v = lambda g v determine everything local:
the Lagrangian phase theta = sum arctan(lambda_j), the complex volume
ratio zeta = prod(1 + i lambda_j), and the metric eta = g + F g^{-1} F
whose inverse weights the flow's linearization.
"""

import numpy as np

import dhym_lab as dl

np.set_printoptions(precision=6, suppress=True)

print("== scalar case: F = g = 1")
d = dl.pointwise_phase(1.0, 1.0)
print(f"  lambda = {d.lam.ravel()}")
print(f"  theta  = {float(d.theta):.6f}   (arctan 1 = pi/4 = {np.pi/4:.6f})")
print(f"  zeta   = {complex(d.zeta):.6f}  |zeta| = {abs(complex(d.zeta)):.6f}")
print(f"  eta    = {d.eta.ravel().real}, eta^-1 = {d.eta_inv.ravel().real}")

print("\n== a 2x2 point with complex off-diagonal entries")
F = np.array([[1.0, 0.4 - 0.3j], [0.4 + 0.3j, -0.5]])
g = np.array([[2.0, 0.2j], [-0.2j, 1.0]])
d = dl.pointwise_phase(F, g)
print(f"  lambda = {d.lam}")
print(f"  theta  = {float(d.theta):.6f}")
print(f"  zeta   = {complex(d.zeta):.6f}")
det_eta = np.linalg.det(d.eta).real
det_g = np.linalg.det(g).real
print(f"  check zeta = e^(i theta) sqrt(det eta/det g): "
      f"{np.exp(1j*float(d.theta))*np.sqrt(det_eta/det_g):.6f}")

print("\n== the PSD order eta >= g, g^-1 >= eta^-1 on a random batch")
rng = np.random.default_rng(1)
A = rng.uniform(-3, 3, (5000, 3, 3)) + 1j * rng.uniform(-3, 3, (5000, 3, 3))
F = (A + A.conj().swapaxes(-1, -2)) / 2
B = rng.uniform(-1, 1, (5000, 3, 3)) + 1j * rng.uniform(-1, 1, (5000, 3, 3))
g = B @ B.conj().swapaxes(-1, -2) + 0.5 * np.eye(3)
d = dl.pointwise_phase(F, g)
print(f"  min eig(eta - g)        = {np.linalg.eigvalsh(d.eta - g).min():.3e}")
print(f"  min eig(g^-1 - eta^-1)  = {np.linalg.eigvalsh(np.linalg.inv(g) - d.eta_inv).min():.3e}")
print(f"  max |theta|             = {np.abs(d.theta).max():.6f} < 3 pi/2 = {3*np.pi/2:.6f}")

print("\n== phase-branch classification of a theta field")
for n, theta, expect in [(2, np.pi / 2 + 0.1, "hypercritical"),
                         (2, 0.1, "supercritical"),
                         (1, -0.3, "supercritical"),
                         (1, -2.0, "none")]:
    got = dl.hypercritical_classify(np.full(8, theta), n)
    print(f"  n={n}, theta = {theta:+.3f}  ->  {got:14s} (expected {expect})")
