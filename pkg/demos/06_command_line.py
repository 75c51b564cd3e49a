"""Driving the solver through the command line and a config file.

Equivalent shell session::

    kolgauss gen-bank --config run.ini
    kolgauss solve --config run.ini --out sine
    kolgauss sweep-sigma --config run.ini --set nonlinearity=poly_bounded --out poly
    kolgauss validate
"""

import os
import tempfile

from kolgauss.cli import main
from kolgauss.harness import read_csv

CONFIG = """\
# a small run; every key not listed keeps its default
d = 10
n_samples = 1000
mode = exact
sigma_list = 1, 0.7, 0.5
with_reference = false
"""

with tempfile.TemporaryDirectory() as tmp:
    os.chdir(tmp)
    with open("run.ini", "w") as fh:
        fh.write(CONFIG)
    main(["gen-bank", "--config", "run.ini"])
    main(["solve", "--config", "run.ini", "--out", "sine"])
    main(["sweep-sigma", "--config", "run.ini", "--set", "nonlinearity=poly_bounded",
          "--out", "poly"])
    table = read_csv("sine.csv")
    print("sine.csv columns:", ", ".join(table))
    print("files:", ", ".join(sorted(os.listdir("."))))
    print("exit code for an unknown key:", main(["solve", "--set", "colour=blue"]))
    main(["validate"])
