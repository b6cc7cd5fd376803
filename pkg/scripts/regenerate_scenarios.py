"""Rewrite scenarios/<name>/ from the presets shipped with the package."""

import argparse
from pathlib import Path

from lvdc_ems.presets import PRESETS
from lvdc_ems.scenario import load_scenario_file, save_scenario, scenario_digest


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=Path(__file__).resolve().parents[1] / "scenarios",
                    type=Path, help="target directory")
    args = ap.parse_args()
    for name, make in sorted(PRESETS.items()):
        scn = make()
        path = save_scenario(scn, args.out / name)
        assert scenario_digest(load_scenario_file(path)) == scenario_digest(scn)
        print(f"{name}: {path} ({scenario_digest(scn)[:12]})")


if __name__ == "__main__":
    main()
