#!/usr/bin/env python3
"""Write the demo inputs and scenario files used in the README.

Usage: make_scenarios.py [OUT_DIR]   (default: scenarios/ next to this script's parent)
"""

import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

CATS = {"0": "Gravel", "1": "Sand", "2": "Clay", "3": "Silt", "4": "Rock"}


def turbulence(shape, seed, octaves=5):
    """Sum of bilinearly upsampled value-noise octaves, scaled to 0..255."""
    rng = np.random.default_rng(seed)
    rows, cols = shape
    total = np.zeros(shape)
    for o in range(octaves):
        n = 2 ** (o + 2)
        coarse = rng.random((n + 1, n + 1))
        y = np.linspace(0, n, rows)
        x = np.linspace(0, n, cols)
        y0 = np.minimum(y.astype(int), n - 1)
        x0 = np.minimum(x.astype(int), n - 1)
        fy = (y - y0)[:, None]
        fx = (x - x0)[None, :]
        a = coarse[y0][:, x0]
        b = coarse[y0][:, x0 + 1]
        c = coarse[y0 + 1][:, x0]
        d = coarse[y0 + 1][:, x0 + 1]
        total += (a * (1 - fx) * (1 - fy) + b * fx * (1 - fy) + c * (1 - fx) * fy + d * fx * fy) / 2**o
    total -= total.min()
    return np.round(255 * total / total.max()).astype(np.uint8)


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "scenarios"
    data = out / "data"
    data.mkdir(parents=True, exist_ok=True)

    Image.fromarray(np.full((128, 256), 100, dtype=np.uint8), mode="L").save(data / "flat.pgm")
    np.savetxt(data / "gravel.csv", np.zeros((64, 64), dtype=int), fmt="%d", delimiter=",")
    (data / "cats.json").write_text(json.dumps(CATS, indent=2) + "\n")

    Image.fromarray(turbulence((128, 256), seed=7), mode="L").save(data / "turbulence.pgm")
    soil = np.zeros((64, 64), dtype=int)
    soil[20:44, 10:18] = 4
    soil[5:15, 40:60] = 1
    np.savetxt(data / "mixed_soil.csv", soil, fmt="%d", delimiter=",")

    base = {"heightmapPath": "data/flat.pgm", "soilmapPath": "data/gravel.csv", "catMapping": CATS,
            "start": [3, 17], "goal": [29, 17]}
    scenarios = {
        "hidden_crates": dict(base, name="hidden-crates", crates=[
            {"min": [10, 16.4], "max": [11, 17.4]},
            {"min": [16, 16.6], "max": [17, 17.6]},
            {"min": [21.5, 16.5], "max": [22.5, 17.5]}]),
        "soil_veto": dict(base, name="soil-veto", groundTruthSoil=[
            {"min": [14, 13], "max": [18, 21], "category": "Rock"}]),
        "enclosed_goal": dict(base, name="enclosed-goal", goal=[24, 17], maxSteps=2500, crates=[
            {"min": [21, 14], "max": [27, 14.6]}, {"min": [21, 19.4], "max": [27, 20]},
            {"min": [21, 14.6], "max": [21.6, 19.4]}, {"min": [26.4, 14.6], "max": [27, 19.4]}]),
    }
    for stem, s in scenarios.items():
        (out / f"{stem}.json").write_text(json.dumps(s, indent=2) + "\n")


if __name__ == "__main__":
    main()
