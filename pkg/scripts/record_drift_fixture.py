"""Record the drift calibration run used by the acceptance suite.

    python3 scripts/record_drift_fixture.py [--out tests/fixtures/drift_calibration.json]

The thresholds (stale drop of at least 5 points, retrained accuracy within 3
points of the pre-change accuracy) are fixed; the run documents the measured
accuracies they were checked against.
"""
import argparse
import json
import platform
from pathlib import Path

import numpy as np

from tfclead import __version__
from tfclead.evalcmp import DRIFT_DEFAULT_CLASSES, drift_experiment
from tfclead.gbdt import Hyperparams
from tfclead.labeling import scheme_for
from tfclead.synthgen import GeneratorConfig

MAGNITUDE = 3.0
MIN_STALE_DROP_POINTS = 5.0
MAX_RETRAIN_LOSS_POINTS = 3.0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=Path(__file__).resolve().parents[1] / "tests/fixtures/drift_calibration.json")
    args = ap.parse_args()
    config = GeneratorConfig()
    rep = drift_experiment(config, MAGNITUDE, scheme_for(DRIFT_DEFAULT_CLASSES), "unlimited",
                           Hyperparams(), 42, workers=1)
    payload = {
        "generator": config.to_dict(),
        "magnitude": MAGNITUDE,
        "classes": DRIFT_DEFAULT_CLASSES,
        "feature_set": "unlimited",
        "split_seed": 42,
        "thresholds": {"min_stale_drop_points": MIN_STALE_DROP_POINTS,
                       "max_retrain_loss_points": MAX_RETRAIN_LOSS_POINTS},
        "recorded": rep.to_json(),
        "recorded_with": {"tfclead": __version__, "numpy": np.__version__,
                          "python": platform.python_version(), "machine": platform.machine()},
    }
    Path(args.out).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    print(rep.text_table(), end="")


if __name__ == "__main__":
    main()
