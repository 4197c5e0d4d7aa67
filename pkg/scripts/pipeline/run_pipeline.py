#!/usr/bin/env python3
"""
Full reproduction run: sweeps, headline states, rate, tomography and Table I.

Every stage goes through the scss_sim CLI so each artifact gets its manifest.
Outputs land in paths.output_dir from config.yml (default ./results).
"""

import argparse
import sys
from pathlib import Path

base_dir = Path(__file__).parent.parent.parent
sys.path.append(str(base_dir / "src"))

from scss_sim.__main__ import EXIT_OK, main as cli  # noqa: E402
from scss_sim.core.config import cfg  # noqa: E402
from scss_sim.utils.logger import logger  # noqa: E402

STAGES = {
    1: "SWEEPS",
    2: "HEADLINE STATES",
    3: "GENERATION RATE",
    4: "SYNTHETIC TOMOGRAPHY",
    5: "TABLE I",
}


def build_stages(out: Path, config: str, quick: bool):
    steps = "21" if quick else "96"
    bootstrap = "10" if quick else "100"
    return {
        1: [
            ["sweep", "--ideal", "--steps", steps, "--out", str(out / "sweep_ideal.csv")],
            ["sweep", "--realistic", "--config", config, "--r-min", "0.5", "--r-max", "0.9",
             "--steps", "9" if quick else "41", "--out", str(out / "sweep_realistic.csv")],
        ],
        2: [
            ["simulate", "--parity", "odd", "--config", config,
             "--out", str(out / "odd.json"), "--wigner", str(out / "odd_wigner.csv")],
            ["simulate", "--parity", "even", "--config", config,
             "--out", str(out / "even.json"), "--wigner", str(out / "even_wigner.csv")],
        ],
        3: [
            ["rate", "--config", config, "--out", str(out / "rate.json")],
        ],
        4: [
            ["sample", "--in", str(out / "odd.json"), "--efficiency", "0.76", "--seed", "1",
             "--out", str(out / "odd_records.csv")],
            ["tomo", "--in", str(out / "odd_records.csv"), "--efficiency", "0.76",
             "--bootstrap", bootstrap, "--truth", str(out / "odd.json"), "--out", str(out / "odd_tomo.json")],
        ],
        5: [
            ["ingest", "--table", label, "--out", str(out / f"table_i_{label}.json")]
            for label in ("a", "b", "c")
        ],
    }


def main():
    parser = argparse.ArgumentParser(description="scss-sim reproduction pipeline")
    parser.add_argument("--config", default="paper", help="Profile name or YAML file")
    parser.add_argument("--phase", type=int, choices=sorted(STAGES), help="Run specific stage")
    parser.add_argument("--start-phase", type=int, choices=sorted(STAGES), help="Start from specific stage")
    parser.add_argument("--quick", action="store_true", help="Coarser grids and fewer bootstrap repetitions")

    args = parser.parse_args()

    def should_run(p):
        if args.phase:
            return args.phase == p
        if args.start_phase:
            return args.start_phase <= p
        return True

    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    stages = build_stages(out, args.config, args.quick)

    for number, title in STAGES.items():
        if not should_run(number):
            continue
        logger.info(f"\n=== STAGE {number}: {title} ===")
        for argv in stages[number]:
            code = cli(argv)
            if code != EXIT_OK:
                logger.error(f"stage {number} failed ({' '.join(argv)}) with exit code {code}")
                return code
    logger.info(f"all artifacts written to {out}")
    return EXIT_OK


if __name__ == "__main__":
    try:
        sys.exit(main())
    except Exception as e:
        logger.exception(f"CRITICAL PIPELINE ERROR: {e}")
        sys.exit(1)
