"""Run the 12 x 2 material study and print it next to the published FEA values.

Usage: python3 scripts/reproduce_tables.py [--jobs N] [--out DIR]
"""

import argparse
import time

from ipm_softmag.calibration import load_calibration
from ipm_softmag.materials import load_material_db
from ipm_softmag.mechanics import fit_mode_factors, natural_frequencies
from ipm_softmag.reference import ELECTRICAL, MECHANICAL, NATURAL_FREQUENCIES, natural_frequency_table
from ipm_softmag.report import SweepConfig, emit, run_sweep


def electrical(rows):
    print("\nTorque and efficiency (model / reference)")
    print(f"{'material':14s} {'topo':5s} {'T_avg Nm':>17s} {'ripple %':>15s} {'eff %':>15s}")
    for r in rows:
        ref = ELECTRICAL[(r.material, r.topology)]
        print(f"{r.material:14s} {r.topology:5s} {r.t_avg:8.2f}/{ref['t_avg']:8.2f} "
              f"{r.ripple_pct:7.2f}/{ref['ripple_pct']:7.2f} "
              f"{100 * r.efficiency:7.2f}/{ref['efficiency_pct']:7.2f}")


def mechanical(rows):
    print("\nStress, mass and displacement (model / reference)")
    for r in rows:
        ref = MECHANICAL.get((r.material, r.topology))
        if ref is None:
            continue
        print(f"{r.material:14s} {r.topology:5s} "
              f"{r.stress_avg / 1e6:6.3f}/{ref['stress_mpa']:5.2f} MPa "
              f"{r.rotor_mass:6.2f}/{ref['rotor_mass']:6.2f} kg "
              f"{r.displacement * 1e3:.6f}/{ref['displacement_mm']:.5f} mm")


def frequencies():
    db = load_material_db()
    factors = fit_mode_factors(db["Hiperco 50"], natural_frequency_table("Hiperco 50"))
    print("\nNatural frequencies, Hz (model / reference); fitted on Hiperco 50")
    for name in NATURAL_FREQUENCIES:
        pred = natural_frequencies(db[name], factors)
        ref = natural_frequency_table(name)
        worst = max(abs(pred[m] - ref[m]) / ref[m] for m in ref)
        cells = " ".join(f"{pred[m]:7.1f}/{ref[m]:<7.1f}" for m in (2, 5, 10))
        print(f"{name:14s} modes 2,5,10: {cells} worst error {100 * worst:.2f}%")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", help="also write the sweep artifacts here")
    args = ap.parse_args()
    t0 = time.perf_counter()
    rows = run_sweep(SweepConfig(jobs=args.jobs))
    print(f"sweep of {len(rows)} cells in {time.perf_counter() - t0:.1f} s; "
          f"calibration {load_calibration().targets}")
    electrical(rows)
    mechanical(rows)
    frequencies()
    if args.out:
        emit(rows, "both", args.out)


if __name__ == "__main__":
    main()
