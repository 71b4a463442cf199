# ---
# jupyter:
#   jupytext:
#     formats: py:light
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # Data files and the command line
#
# Everything the library does is also reachable through `coral-ordinal`
# (or `python -m coral_ordinal`). This walks through one round trip in a
# temporary directory.

import json
import tempfile
from pathlib import Path

from coral_ordinal.cli import main

work = Path(tempfile.mkdtemp())

main(["gen-data", "--seed", "3", "--n", "600", "--d", "3", "--ranks", "5", "--out", str(work / "d.csv")])
print((work / "d.csv").read_text().splitlines()[:3])

main(["train", "--dataset", str(work / "d.csv"), "--ranks", "5", "--head", "coral",
      "--epochs", "200", "--out", str(work / "run")])

# `log.jsonl` starts with the effective configuration, then one record per epoch.

lines = (work / "run" / "log.jsonl").read_text().splitlines()
print(json.loads(lines[0])["config"]["epochs"], json.loads(lines[-1]))

main(["audit", "--model", str(work / "run" / "model.json")])
main(["bound", "--model", str(work / "run" / "model.json"), "--cost", "absolute,classification"])

# A missing model is a usage error (exit code 2) and writes nothing.

main(["eval", "--model", str(work / "nope.json")])
