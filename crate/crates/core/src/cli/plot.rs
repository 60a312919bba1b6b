//! Plotting script for a result bundle: one figure with every agent output
//! `y_i(k)` and its delayed reference, one panel per output component.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::bundle::{Manifest, TRAJECTORIES};

pub const SCRIPT: &str = "plot.py";

/// Number of leading steps the script plots.
pub const DEFAULT_WINDOW: usize = 80;

/// Python/matplotlib source that reads only the bundle's trajectories CSV.
pub fn plot_script(m: &Manifest) -> String {
    let labels: Vec<String> = m.labels.iter().map(|l| l.to_string()).collect();
    let delays: Vec<String> = m.cumulative_delays.iter().map(|d| d.to_string()).collect();
    format!(
        r#"#!/usr/bin/env python3
# Output trajectories of scenario "{name}" with the delayed exosystem reference.
import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
LABELS = [{labels}]
DELAYS = [{delays}]
WIDTH = {width}
# Steps shown; the transient is over long before the end of most runs.
WINDOW = {window}


def cell(v):
    return float(v) if v != "" else float("nan")


series = {{label: {{"k": [], "y": [[] for _ in range(WIDTH)], "ref": [[] for _ in range(WIDTH)]}} for label in LABELS}}
with open(os.path.join(HERE, "{csv}"), newline="") as f:
    for row in csv.DictReader(f):
        if int(row["step"]) >= WINDOW:
            break
        s = series[int(row["agent"])]
        s["k"].append(int(row["step"]))
        for c in range(WIDTH):
            s["y"][c].append(cell(row["y%d" % (c + 1)]))
            s["ref"][c].append(cell(row["yref%d" % (c + 1)]))

fig, axes = plt.subplots(WIDTH, 1, figsize=(9, 3.2 * WIDTH), squeeze=False)
for c in range(WIDTH):
    ax = axes[c][0]
    for label, delay in zip(LABELS, DELAYS):
        s = series[label]
        line, = ax.plot(s["k"], s["y"][c], linewidth=1.0, label="agent %d (delay %d)" % (label, delay))
        ax.plot(s["k"], s["ref"][c], linestyle="--", linewidth=0.8, color=line.get_color())
    ax.set_xlabel("k")
    ax.set_ylabel("y%d" % (c + 1))
    ax.grid(True, linewidth=0.3)
axes[0][0].set_title("{name}")
axes[0][0].legend(fontsize="x-small", ncol=2, title="dashed: delayed reference", title_fontsize="x-small")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "{name}.png"), dpi=150)
"#,
        name = m.name,
        labels = labels.join(", "),
        delays = delays.join(", "),
        width = m.output_width,
        window = m.horizon.min(DEFAULT_WINDOW),
        csv = TRAJECTORIES,
    )
}

/// Writes the plotting script into the bundle directory.
pub fn write_plot_script(dir: &Path) -> Result<PathBuf> {
    let m = Manifest::read(dir)?;
    let csv = dir.join(TRAJECTORIES);
    if !csv.is_file() {
        return Err(Error::io(
            &csv,
            std::io::Error::new(std::io::ErrorKind::NotFound, "bundle has no trajectories"),
        ));
    }
    let path = dir.join(SCRIPT);
    std::fs::write(&path, plot_script(&m)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
