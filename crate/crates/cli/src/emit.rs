//! File emission: CSV tables, JSON sidecars and `meta.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use ionsync::observables::WignerGrid;
use ionsync::phase::{eval_phase, phase_grid, PhaseSpectrum};
use ionsync::sweeps::SweepResult;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};

/// Shortest representation that parses back to the same f64.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn conventions() -> Value {
    json!({
        "units": "rates and frequencies in units of the spin decay rate gamma",
        "vectorization": "column-stacking",
        "basis_order": "spin1, phonon1, spin2, phonon2",
        "local_index": "s*N + n with s=0 down, s=1 up",
        "sigma_z": "diag(-1, +1) on (down, up)",
        "detuning": "Delta = omega2 - omega1",
        "phase": "phi = phi2 - phi1 on [0, 2pi)",
        "sync_measure": "S = 2pi max P - 1",
        "phase_moments": "Phi_c + i Phi_s = <e^{i phi}>",
        "wigner": "alpha = (x + i p)/2, integral of W dx dp / 4 equals 1",
        "csv": "comma-delimited, LF line endings, shortest round-trip scientific notation",
    })
}

/// Collects the files of one run and writes `meta.json` last.
pub struct Emitter {
    dir: PathBuf,
    format: Format,
    files: Vec<String>,
    flatness_floor: Option<f64>,
    summary: BTreeMap<String, Value>,
    all_converged: bool,
}

impl Emitter {
    pub fn new(dir: &Path, format: Format) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            format,
            files: Vec::new(),
            flatness_floor: None,
            summary: BTreeMap::new(),
            all_converged: true,
        })
    }

    pub fn all_converged(&self) -> bool {
        self.all_converged
    }

    pub fn set_floor(&mut self, floor: Option<f64>) {
        if floor.is_some() {
            self.flatness_floor = floor;
        }
    }

    pub fn summary(&mut self, key: &str, value: Value) {
        self.summary.insert(key.to_string(), value);
    }

    fn write(&mut self, rel: &str, contents: &str) -> anyhow::Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(rel.to_string());
        Ok(())
    }

    pub fn csv(&mut self, rel: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<()> {
        let mut out = header.join(",");
        out.push('\n');
        for row in rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        self.write(rel, &out)
    }

    pub fn json(&mut self, rel: &str, value: &impl Serialize) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, &text)
    }

    /// `<name>.csv` with one row per point, `<name>.json` with the full
    /// result, and `<name>_phase/point_<i>.csv` for kept spectra.
    pub fn sweep(&mut self, name: &str, result: &SweepResult) -> anyhow::Result<()> {
        if !result.all_converged() {
            self.all_converged = false;
        }
        self.set_floor(result.flatness_floor);
        if self.format.csv() {
            let mut header = vec![result.spec.axis.name()];
            header.extend(result.spec.observables.iter().map(|o| o.name()));
            header.extend(["residual", "min_eig", "converged"]);
            let rows = result.records.iter().map(|r| {
                let mut row = vec![num(r.value)];
                row.extend(r.observables.iter().map(|&v| num(v)));
                row.extend([num(r.residual), num(r.min_eig), (r.converged && !r.failed()).to_string()]);
                row
            });
            self.csv(&format!("{name}.csv"), &header, rows.collect::<Vec<_>>())?;
        }
        if self.format.json() {
            self.json(&format!("{name}.json"), result)?;
        }
        for (i, r) in result.records.iter().enumerate() {
            if let Some(spec) = &r.spectrum {
                self.phase(&format!("{name}_phase/point_{i:02}.csv"), spec)?;
            }
        }
        Ok(())
    }

    /// Two columns (phi, P) on the default grid of the spectrum.
    pub fn phase(&mut self, rel: &str, spec: &PhaseSpectrum) -> anyhow::Result<()> {
        let m = spec.grid_size();
        let values = eval_phase(spec, m)?;
        let rows: Vec<Vec<String>> = phase_grid(m).into_iter().zip(values).map(|(phi, p)| vec![num(phi), num(p)]).collect();
        self.csv(rel, &["phi", "P"], rows)
    }

    /// Three columns (x, p, W), x outer.
    pub fn wigner(&mut self, rel: &str, grid: &WignerGrid) -> anyhow::Result<()> {
        let mut rows = Vec::with_capacity(grid.x_axis.len() * grid.p_axis.len());
        for (i, &x) in grid.x_axis.iter().enumerate() {
            for (j, &p) in grid.p_axis.iter().enumerate() {
                rows.push(vec![num(x), num(p), num(grid.values[i][j])]);
            }
        }
        self.csv(rel, &["x", "p", "W"], rows)
    }

    pub fn finish(self, cfg: &RunConfig) -> anyhow::Result<()> {
        let meta = json!({
            "config": cfg,
            "conventions": conventions(),
            "flatness_floor": self.flatness_floor,
            "all_converged": self.all_converged,
            "summary": self.summary,
            "files": self.files,
            "software": {
                "name": "ionsync",
                "version": env!("CARGO_PKG_VERSION"),
            },
        });
        let mut text = serde_json::to_string_pretty(&meta)?;
        text.push('\n');
        let path = self.dir.join("meta.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, -1.5e-300, 1.0 / 3.0, 6.02214076e23] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let mut e = Emitter::new(dir.path(), Format::Csv).unwrap();
        e.csv("t.csv", &["a", "b"], vec![vec![num(1.0), num(0.25)]]).unwrap();
        let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(text, "a,b\n1e0,2.5e-1\n");
    }
}
