"""Refit the calibration factors on the Hiperco 50 V-type cell and write them.

Usage: python3 scripts/calibrate.py [--out PATH]   (default: the shipped file)
"""

import argparse
import json
import time

from ipm_softmag.calibration import DEFAULT_PATH, calibrate, save_calibration


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(DEFAULT_PATH))
    args = ap.parse_args()
    t0 = time.perf_counter()
    calib = calibrate()
    save_calibration(calib, args.out)
    print(json.dumps(calib.to_dict(), indent=2, sort_keys=True))
    print(f"written to {args.out} in {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
