"""
Convergence Evaluator

This script runs the desk-scale acceptance studies of the toolkit: energies of
known surfaces, refinement orders of the discretized identities, flat-family
curvature reconstruction, mu-Darboux residuals, normal bundle degrees and
Willmore sequence shapes.

Action:
For every case in acceptance_cases.json it samples the surface on each listed
grid size, measures one quantity and checks it against the case's criterion
(observed order, bound, target value or expected label).

Connection:
Imports the library modules directly (immersion, meancurvsphere, flatfam,
mudarboux, sequences). tests/ reuse observed_order.

Inputs:
- acceptance_cases.json: list of cases with 'name', 'quantity', 'surface',
  'grids' and one criterion among 'min_order', 'max', 'max_abs', 'min', 'target' (+ 'rel_tol'),
  'equals'. Flatness cases carry 'lambda', Darboux cases 'mu'.

Outputs:
- Console table: one line per case with the measured values and PASS/FAIL
- Pass rate over all cases

Process:
1. Loads the cases
2. For each grid size, generates the surface and measures the quantity
   (analyses are cached per surface and size)
3. Applies the criterion
4. Prints the per-case line and the totals
"""

import json
import os
import time
import numpy as np
from typing import Dict, List, Optional, Tuple

from flatfam import ConnectionFamily, curvature_identity_residual
from immersion import SurfaceSpec, generate
from meancurvsphere import analyze
from mudarboux import darboux_report
from sequences import normal_bundle_degree, willmore_sequence
from wforge import parse_complex

# --- Configuration ---
CASES_FILE = "acceptance_cases.json"
ROUNDING_FLOOR = 1e-10    # errors below this count as exact for the order estimate
# ---------------------


def observed_order(sizes: List[int], errors: List[float], floor: float = ROUNDING_FLOOR) -> float:
    """
    Least-squares slope of log(error) against log(h) with h = 1/n.
    Returns inf when every error already sits at the rounding floor.
    """
    errors = np.asarray(errors, dtype=float)
    if np.all(errors < floor):
        return float("inf")
    h = 1.0 / np.asarray(sizes, dtype=float)
    keep = errors >= floor
    if np.count_nonzero(keep) < 2:
        return float("inf")
    slope, _ = np.polyfit(np.log(h[keep]), np.log(errors[keep]), 1)
    return float(slope)


def _complex(value) -> complex:
    if isinstance(value, str):
        return parse_complex(value)
    if isinstance(value, list):
        return complex(value[0], value[1])
    return complex(value)


class ConvergenceEvaluator:
    """
    Evaluates the acceptance studies of the toolkit.

    Attributes:
        cases_file: JSON file with the case list
        max_grid: Grids above this size are skipped (quick runs)
    """
    def __init__(self, cases_file: str = CASES_FILE, max_grid: Optional[int] = None):
        self.cases_file = cases_file
        self.max_grid = max_grid
        self._cache = {}

    def _analysis(self, surface: Dict, n: int):
        key = (json.dumps(surface, sort_keys=True), n)
        if key not in self._cache:
            imm = generate(SurfaceSpec(n=n, **surface))
            sf, hp, report = analyze(imm)
            self._cache[key] = (imm, sf, hp, report)
        return self._cache[key]

    def measure(self, case: Dict, n: int):
        """Value of the case's quantity on an n-point grid."""
        quantity = case["quantity"]
        imm, sf, hp, report = self._analysis(case["surface"], n)
        if quantity in report:
            return report[quantity]
        if quantity == "energy_gap":
            w = report["willmore_energy_hopf"]
            return abs(w - report["willmore_energy_classical"]) / abs(w)
        if quantity == "flat_curvature":
            fam = ConnectionFamily.from_hopf(sf, hp)
            return curvature_identity_residual(fam, _complex(case["lambda"]))["residual"]
        if quantity.startswith("darboux."):
            rep, _, _ = darboux_report(sf, hp, _complex(case["mu"]), check_basis=False)
            return rep[quantity.split(".", 1)[1]]
        if quantity == "degree_distance":
            return normal_bundle_degree(imm)["distance"]
        if quantity.startswith("sequence."):
            rep = willmore_sequence(imm, n_max=case.get("n_max", 4))
            return rep[quantity.split(".", 1)[1]]
        raise KeyError(f"unknown quantity '{quantity}'")

    @staticmethod
    def judge(case: Dict, sizes: List[int], values: List) -> Tuple[bool, str]:
        """Applies the case criterion. Returns (passed, short description)."""
        if "min_order" in case:
            order = observed_order(sizes, values)
            return order >= case["min_order"], f"order {order:.2f} (>= {case['min_order']})"
        last = values[-1]
        if "equals" in case:
            return last == case["equals"], f"{last} (== {case['equals']})"
        if "target" in case:
            rel = abs(last - case["target"]) / abs(case["target"])
            return rel <= case["rel_tol"], f"{last:.6g} vs {case['target']:.6g} (rel {rel:.2e})"
        if "max_abs" in case:
            return all(abs(v) <= case["max_abs"] for v in values), f"{last:.3e} (|.| <= {case['max_abs']:g})"
        if "max" in case:
            return all(v <= case["max"] for v in values), f"{last:.3e} (<= {case['max']:g})"
        if "min" in case:
            return all(v >= case["min"] for v in values), f"{last:.3e} (>= {case['min']:g})"
        raise KeyError(f"case '{case['name']}' has no criterion")

    def evaluate(self, verbose=True):
        """
        Runs every case. Returns the pass rate (0.0 when nothing ran).
        """
        if verbose:
            print(f"\n{'=' * 60}")
            print(f"CONVERGENCE EVALUATION | cases: {self.cases_file}")
            print(f"{'=' * 60}")

        if not os.path.exists(self.cases_file):
            print(f"Error: {self.cases_file} not found.")
            return 0.0

        with open(self.cases_file, 'r') as f:
            cases = json.load(f)

        passed = 0
        total = 0
        for case in cases:
            sizes = [n for n in case["grids"] if self.max_grid is None or n <= self.max_grid]
            if not sizes:
                if verbose: print(f"  [SKIPPED] {case['name']} (grids above {self.max_grid})")
                continue
            t0 = time.time()
            values = [self.measure(case, n) for n in sizes]
            ok, detail = self.judge(case, sizes, values)
            if verbose:
                tag = "[PASS]" if ok else "[FAIL]"
                print(f"  {tag} {case['name']:<34} {detail}  ({time.time() - t0:.1f}s)")
            passed += int(ok)
            total += 1

        if total > 0:
            rate = passed / total
            if verbose:
                print(f"{'-' * 60}")
                print(f"Passed: {passed}/{total} ({rate:.0%})")
                print(f"{'=' * 60}")
            return rate
        else:
            return 0.0


if __name__ == "__main__":
    evaluator = ConvergenceEvaluator()
    evaluator.evaluate()
