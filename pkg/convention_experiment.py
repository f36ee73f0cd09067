"""
Sign and Ordering Convention Experiment

This script runs an A/B test between the competing readings of the mu-Darboux
and flat-family identities, to show which reading the discrete data supports.

Action:
It compares, over a set of spectral parameters mu:
1. Conjugation order: S_hat = T^-1 S T against S_hat = T S T^-1
   (scored by the S_hat identity and S_hat-stability of L_hat).
2. Riccati equation: dT = 2 *Q (a - 1) + T *A T against the coefficients swapped.
3. Transformed Q: *Q_hat = -2 T^-1 *Q (a - 1) T^-1 against the opposite sign.
4. Curvature identity of d^lambda: projector pairing (lambda - 1) pi_perp against
   (lambda - 1) pi_E, on a surface that is not Willmore (so d*A != 0).

Connection:
This is an experimental utility. It does not change the library; the library
implements the consistent readings and reports the printed ones alongside.

Inputs:
- Surfaces generated in-process (Clifford torus patch, torus of revolution)

Outputs:
- A console "Leaderboard" ranking each reading by mean residual and by how
  many mu values it passes

Process:
1. Builds S and the Hopf fields once per surface
2. For every mu: parallel frame, (a, b, T), both readings of each identity
3. For every lambda: curvature against both projector pairings
4. Prints a comparative table per question
"""

import numpy as np
from collections import defaultdict

from flatfam import ConnectionFamily, curvature_identity_residual, parallel_sections
from immersion import SurfaceSpec, generate
from meancurvsphere import analyze
from mudarboux import build_abT, resolve_convention, transform_S

# --- Configuration ---
GRID_N = 48
MU_VALUES = (2.0, 1 + 1j, 0.3, 0.5 - 2j)
LAMBDA_VALUES = (2.0, 0.5, 1 + 1j)
PASS_TOL = 1e-2
# ---------------------


def _record(results, question, method, value):
    entry = results[question][method]
    entry["values"].append(float(value))
    entry["passes"] += int(value < PASS_TOL)


def run_convention_experiment(n=GRID_N, mus=MU_VALUES, lambdas=LAMBDA_VALUES, verbose=True):
    """
    Returns {question: {method: {"mean": float, "passes": int, "values": [...]}}}.
    """
    results = defaultdict(lambda: defaultdict(lambda: {"values": [], "passes": 0}))

    if verbose: print("--- Building Clifford torus patch ---")
    imm = generate(SurfaceSpec("clifford", n=n, patch=True))
    sf, hp, _ = analyze(imm)
    fam = ConnectionFamily.from_hopf(sf, hp)

    for mu in mus:
        if verbose: print(f"Testing mu = {complex(mu):.4g}...")
        frame = parallel_sections(fam, mu)
        tf = build_abT(sf, frame)
        conv = resolve_convention(tf, sf, hp, sf.line)
        for name, label in (("inverse", "T^-1 S T"), ("direct", "T S T^-1")):
            score = max(conv[name]["eq11_hatS"], conv[name]["hatS_stability"])
            _record(results, "conjugation order", label, score)
        _, _, rep = transform_S(tf, sf, hp)
        _record(results, "riccati coefficients", "2 *Q(a-1) + T*AT", rep["eq10_riccati"])
        _record(results, "riccati coefficients", "*Q(a-1) + 2 T*AT", rep["eq10_riccati_printed"])
        _record(results, "sign of *Q_hat", "-2 T^-1 *Q (a-1) T^-1", rep["eq9_Q_residual"])
        _record(results, "sign of *Q_hat", "+2 T^-1 *Q (a-1) T^-1", rep["eq9_Q_printed"])

    if verbose: print("--- Building torus of revolution (3, 1) ---")
    rev = generate(SurfaceSpec("revolution", n=max(n, 64)))
    rsf, rhp, _ = analyze(rev)
    rfam = ConnectionFamily.from_hopf(rsf, rhp)
    for lam in lambdas:
        if verbose: print(f"Testing lambda = {complex(lam):.4g}...")
        res = curvature_identity_residual(rfam, lam)
        _record(results, "curvature projectors", "(l-1) pi_perp + (1/l-1) pi_E", res["residual"])
        _record(results, "curvature projectors", "(l-1) pi_E + (1/l-1) pi_perp", res["residual_printed"])

    for question in results.values():
        for entry in question.values():
            entry["mean"] = float(np.mean(entry["values"]))

    if verbose:
        print("\n" + "=" * 60)
        print("   CONVENTION LEADERBOARD")
        print("=" * 60)
        for question, methods in results.items():
            print(f"[{question}]")
            print(f"{'Reading':<32} | {'Mean residual':<13} | {'Passes':<6}")
            print("-" * 60)
            ranked = sorted(methods.items(), key=lambda x: x[1]["mean"])
            for method, stats in ranked:
                print(f"{method:<32} | {stats['mean']:<13.3e} | {stats['passes']}/{len(stats['values'])}")
            print("-" * 60)

    return {q: dict(m) for q, m in results.items()}


if __name__ == "__main__":
    run_convention_experiment()
