# The forward links of the rigidity argument, through the same runner the
# command line uses. Reports go to a fresh temporary directory.
import json
import tempfile
from pathlib import Path

from radialspec.experiments import ExperimentConfig, run

out = Path(tempfile.mkdtemp(prefix="rigidity_demo_"))
bump = {"kind": "polynomial", "params": {"coeffs": [0, 0, 1, 0, -2, 0, 1]}}
families = {
    "nothing moves": {},
    "gauge b + s": {"b_dir": {"kind": "constant", "params": {"value": 1.0}}},
    "b bump": {"b_dir": bump},
    "b'' bump only": {"b_dir2": bump},
    "a bump": {"a_dir": {"kind": "gaussian",
                         "params": {"amplitude": 0.1, "center": 0.5, "width": 0.1, "mirror": True}}},
}
for i, (name, fam) in enumerate(families.items()):
    cfg = ExperimentConfig.from_dict({"experiment": "rigidity", "profile": {"N": 800},
                                      "ell_max": 5, "n_max": 8, "family": fam,
                                      "output_dir": str(out / f"family_{i}")})
    rep = run(cfg)
    print(f"{name:14s} max|dlam| = {rep['max_abs_dlambda']:.3e}  links = {rep['links']}")
    for line in rep["verdict"]:
        print("   ", line)
print("reports under", out)
print(json.dumps(json.loads((out / "family_2" / "rigidity.json").read_text())["tolerances"], indent=1))
