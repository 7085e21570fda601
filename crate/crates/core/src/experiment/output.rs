//! CSV and JSON writers. Floats are printed in shortest round-trip form, so a
//! deterministic run produces byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::runner::SweepRow;
use crate::ensemble::Snapshot;
use crate::error::{Error, Result};

pub const TIMESERIES_HEADER: [&str; 9] = ["t", "omega", "E", "n_mean", "s", "beta", "S_E", "S_qc", "stderr_E"];

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `t,omega,E,n_mean,s,beta,S_E,S_qc,stderr_E`; missing entropies are
/// empty fields.
pub fn write_timeseries(snapshots: &[Snapshot<f64>], path: &Path) -> Result<()> {
    if snapshots.is_empty() {
        return Err(Error::EmptyTimeseries);
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(TIMESERIES_HEADER).map_err(csv_err(path))?;
    for s in snapshots {
        w.write_record([
            s.time.to_string(),
            s.omega.to_string(),
            s.energy.to_string(),
            s.mean_occupation.to_string(),
            s.squeezing_s.to_string(),
            s.beta_ratio.to_string(),
            opt(s.energy_entropy),
            opt(s.quasiclassical_entropy),
            s.energy_stderr.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the sweep table `s,S_E_exact,S_E_approx,approx_total,delta_E,delta_S_E`.
pub fn write_sweep(rows: &[SweepRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyTimeseries);
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["s", "S_E_exact", "S_E_approx", "approx_total", "delta_E", "delta_S_E"])
        .map_err(csv_err(path))?;
    for r in rows {
        w.write_record(
            [r.s, r.s_e_exact, r.s_e_approx, r.approx_total, r.delta_e, r.delta_s_e].map(|v| v.to_string()),
        )
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes any summary as one pretty-printed JSON document.
pub fn write_summary<S: Serialize>(summary: &S, path: &Path) -> Result<()> {
    let json_err = |source| Error::Json {
        path: path.to_path_buf(),
        source,
    };
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, summary).map_err(json_err)?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}
