"""Run every figure recipe in configs/ and write the tables to results/.

    python scripts/reproduce_figures.py [--workers 8]
"""
import argparse
import sys
import time
from pathlib import Path

from ris_energy.cli import main as cli_main
from ris_energy.config import load_config

ROOT = Path(__file__).resolve().parents[1]
RECIPES = [
    "fig3_snr_perfect.yaml",
    "fig5a_surface.yaml",
    "fig5b_surface.yaml",
    "fig6_payload_sweep.yaml",
    "fig7_snr_imperfect.yaml",
    "fig8_snr_quantized.yaml",
    "fig9_energy_vs_n.yaml",
    "optimize_fig5b.yaml",
    "mc_verify.yaml",
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out-dir", default=str(ROOT / "results"))
    args = ap.parse_args()
    status = 0
    for name in RECIPES:
        path = ROOT / "configs" / name
        cfg = load_config(path)
        out = Path(args.out_dir) / Path(cfg.run.out).name
        t0 = time.perf_counter()
        code = cli_main([cfg.run.experiment, "--config", str(path), "--out", str(out),
                         "--workers", str(args.workers), "--quiet"])
        print(f"{name:<28} exit={code} {time.perf_counter() - t0:6.1f}s -> {out}")
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
