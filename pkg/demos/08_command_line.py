# %% [markdown]
# # Command-line round trip
#
# The same pipeline from the shell: simulate a homodyne record, then
# calibrate it from the file. Every output carries the run id.

# %%
import tempfile
from pathlib import Path

from nanolev import cli, io

out = Path(tempfile.mkdtemp())
cfg = out / "short.toml"
cfg.write_text("[simulation]\nduration_s = 0.2\n")

cli.main(["merit", "--out", str(out)])
cli.main(["readout", "--config", str(cfg), "--seed", "3", "--out", str(out)])
cli.main(["calibrate", "--config", str(cfg), "--input", str(out / "record.lvts"), "--out", str(out)])

# %%
for name in ("merit.csv", "calibration.csv"):
    meta, _, rows = io.read_csv(out / name)
    print(f"\n{name} (run {meta['run_id'][:12]})")
    for k, v in rows:
        print(f"  {k:28s} {v}")
