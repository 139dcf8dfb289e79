"""
Running, reporting and replaying from the command line
======================================================

Drives the CLI the way a user would and shows the files it leaves behind.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

here = Path(__file__).resolve().parent
out = Path(tempfile.mkdtemp(prefix="apsuite-demo-"))


def cli(*args):
    r = subprocess.run([sys.executable, "-m", "apsuite", *args], capture_output=True, text=True)
    print(f"$ apsuite {' '.join(args)}  -> exit {r.returncode}")
    return r


cli("run", "--env", "Starstruck-v0", "--agent", "oracle", "--episodes", "3",
    "--out", str(out / "oracle"))
cli("run", "--env", "Starstruck-v0", "--agent", "random", "--episodes", "3", "--lanes", "2",
    "--out", str(out / "random"))
print(json.dumps(json.loads((out / "random" / "summary.json").read_text())["final"], indent=1))

r = cli("report", "--logs", str(out / "oracle"), "--mode", "final")
print(r.stdout)

first = sorted((out / "random").glob("episode_*.jsonl"))[0]
print(first.read_text().splitlines()[0])
r = cli("replay", "--log", str(first))
print(r.stdout)

cli("run", "--env", "LightDark-v0", "--agent", f"exec:{here / '04_external_agent.py'}",
    "--episodes", "2", "--out", str(out / "external"))
cli("gen-assets", "--kind", "toolbox", "--out", str(out / "assets"))
print(sorted(p.name for p in (out / "assets").iterdir()))
# a configuration error exits with 3
cli("run", "--env", "NoSuchEnv-v0", "--agent", "random", "--out", str(out / "x"))
