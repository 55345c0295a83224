//! On-disk artifact formats: CSV tables, JSON documents and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{min_eigenvalue3, Trajectory};
use crate::error::{Error, Result};
use crate::observables::{ObservableSeries, OBSERVABLE_COLUMNS};

pub const POSITIONS_CSV: &str = "positions.csv";
pub const BATH_JSON: &str = "bath.json";
pub const BATH_REPORT: &str = "bath_report.txt";
pub const FIT_JSON: &str = "fit.json";
pub const SYNTHETIC_FIT_JSON: &str = "synthetic_fit.json";
pub const KERNEL_MF_CSV: &str = "kernel_mf.csv";
pub const KERNEL_SME_CSV: &str = "kernel_sme.csv";
pub const CONSTRAINT_REPORT: &str = "constraint_report.txt";
pub const COMPARISON_REPORT: &str = "comparison.txt";
pub const EQUILIBRIUM_REPORT: &str = "equilibrium.txt";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const CONFIG_TOML: &str = "config.toml";

pub fn trajectory_csv(kind: &str) -> String {
    format!("trajectory_{kind}.csv")
}

pub fn observables_csv(kind: &str) -> String {
    format!("observables_{kind}.csv")
}

/// Full-precision float formatting used by every table.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn artifact_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Artifact(format!("{}: {e}", path.display()))
}

/// Run directory with a manifest that records the hash of every file written.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        if !root.is_dir() {
            return Err(Error::Artifact(format!("run directory {} does not exist", root.display())));
        }
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).is_file()
    }

    /// Writes `name` and returns its sha256.
    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<String> {
        fs::write(self.path(name), bytes)?;
        Ok(sha256_hex(bytes))
    }

    pub fn read_to_string(&self, name: &str) -> Result<String> {
        let p = self.path(name);
        fs::read_to_string(&p).map_err(|e| artifact_err(&p, e))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<String> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| artifact_err(&self.path(name), e))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    pub fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<T> {
        let p = self.path(name);
        let s = self.read_to_string(name)?;
        serde_json::from_str(&s).map_err(|e| artifact_err(&p, e))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub seed: u64,
    /// Subcommands run in this directory, in order of first use.
    pub commands: Vec<String>,
    /// File name to sha256.
    pub artifacts: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load_or_default(dir: &RunDir) -> Result<Self> {
        if dir.exists(MANIFEST_JSON) {
            dir.read_json(MANIFEST_JSON)
        } else {
            Ok(Self::default())
        }
    }

    pub fn record_command(&mut self, cmd: &str) {
        if !self.commands.iter().any(|c| c == cmd) {
            self.commands.push(cmd.to_string());
        }
    }

    pub fn record(&mut self, name: &str, hash: String) {
        self.artifacts.insert(name.to_string(), hash);
    }

    pub fn save(&self, dir: &RunDir) -> Result<()> {
        dir.write_json(MANIFEST_JSON, self).map(|_| ())
    }
}

/// Comma-separated table with a header row.
pub fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Parses a table written by [`csv_string`]; checks the header.
pub fn parse_csv(text: &str, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines();
    let got = lines.next().ok_or_else(|| Error::Artifact("empty CSV".into()))?;
    if got.split(',').collect::<Vec<_>>() != header {
        return Err(Error::Artifact(format!("unexpected CSV header {got:?}")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let row: std::result::Result<Vec<f64>, _> = l.split(',').map(|c| c.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| Error::Artifact(format!("CSV line {}: {e}", i + 2)))?;
            if row.len() != header.len() {
                return Err(Error::Artifact(format!("CSV line {} has {} columns", i + 2, row.len())));
            }
            Ok(row)
        })
        .collect()
}

pub fn positions_csv(positions: &[[i32; 3]]) -> String {
    let mut s = String::from("x,y,z\n");
    for p in positions {
        s.push_str(&format!("{},{},{}\n", p[0], p[1], p[2]));
    }
    s
}

pub fn parse_positions_csv(text: &str) -> Result<Vec<[i32; 3]>> {
    let mut lines = text.lines();
    if lines.next() != Some("x,y,z") {
        return Err(Error::Artifact("positions CSV must start with x,y,z".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: std::result::Result<Vec<i32>, _> = l.split(',').map(|c| c.trim().parse::<i32>()).collect();
            match v {
                Ok(v) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
                _ => Err(Error::Artifact(format!("bad position row {l:?}"))),
            }
        })
        .collect()
}

pub const TRAJECTORY_COLUMNS: [&str; 14] = [
    "t",
    "rho_re_11",
    "rho_im_11",
    "rho_re_12",
    "rho_im_12",
    "rho_re_13",
    "rho_im_13",
    "rho_re_22",
    "rho_im_22",
    "rho_re_23",
    "rho_im_23",
    "rho_re_33",
    "rho_im_33",
    "min_eigenvalue",
];

/// Upper triangle of ρ(t) per row.
pub fn trajectory_csv_string(traj: &Trajectory) -> String {
    let rows = traj.times.iter().zip(&traj.states).map(|(&t, rho)| {
        let mut r = vec![t];
        for i in 0..3 {
            for j in i..3 {
                r.push(rho[(i, j)].re);
                r.push(rho[(i, j)].im);
            }
        }
        r.push(min_eigenvalue3(rho));
        r
    });
    csv_string(&TRAJECTORY_COLUMNS, rows)
}

pub fn observables_csv_string(obs: &ObservableSeries) -> String {
    csv_string(&OBSERVABLE_COLUMNS, obs.rows().into_iter().map(|r| r.to_vec()))
}

pub fn parse_observables_csv(text: &str) -> Result<ObservableSeries> {
    let rows = parse_csv(text, &OBSERVABLE_COLUMNS)?;
    let fixed: Vec<[f64; 15]> = rows.into_iter().map(|r| r.try_into().expect("column count checked")).collect();
    Ok(ObservableSeries::from_rows(&fixed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let vals = vec![vec![0.1, -1.0 / 3.0, 1e-300], vec![f64::MAX, 2.5, -0.0]];
        let s = csv_string(&["a", "b", "c"], vals.clone());
        assert_eq!(parse_csv(&s, &["a", "b", "c"]).unwrap(), vals);
        assert!(parse_csv(&s, &["a", "b"]).is_err());
    }

    #[test]
    fn positions_round_trip() {
        let p = vec![[1, -2, 3], [0, 0, -5]];
        assert_eq!(parse_positions_csv(&positions_csv(&p)).unwrap(), p);
    }

    #[test]
    fn manifest_records_commands_once() {
        let mut m = Manifest::default();
        m.record_command("fit");
        m.record_command("fit");
        m.record("a.csv", "00".into());
        assert_eq!(m.commands, vec!["fit"]);
        assert_eq!(m.artifacts.len(), 1);
    }
}
