# %% [markdown]
# # Command-line runs
#
# The `wulffcurv` command wraps the library. Each subcommand writes report.json
# and report.csv (plus OBJ meshes for the Wulff shape) and returns an exit code:
# 0 all checks pass, 2 a tolerance check failed, 3 a precondition failed, 4 the
# arguments did not parse. The same entry point is callable in-process, as below.

# %%
import json
import tempfile
from pathlib import Path

from wulffcurv.cli import main

out = Path(tempfile.mkdtemp())
code = main(["wulff", "--F", "norm:B=[2,1,1]", "--subdiv", "4", "--out", str(out / "wulff")])
doc = json.loads((out / "wulff" / "report.json").read_text())
print("exit", code, "bbox", doc["wulff"]["bbox_min"], doc["wulff"]["bbox_max"])

# %%
code = main(["stability", "--surface", "sphere:R=1", "--r", "0", "--subdiv", "4",
             "--out", str(out / "stab")])
spec = json.loads((out / "stab" / "report.json").read_text())["spectra"][0]
print("exit", code, spec["verdict"], "kernel", spec["kernel_dim"])

# %% [markdown]
# An ellipsoid with isotropic F is not a critical surface, so stability is
# reported as a precondition failure (exit code 3) rather than a verdict.

# %%
code = main(["stability", "--surface", "ellipsoid:a=1,b=1,c=2", "--r", "0", "--subdiv", "2",
             "--out", str(out / "ell")])
print("exit", code)
