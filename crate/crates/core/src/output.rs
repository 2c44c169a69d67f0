//! CSV and metadata files.
//!
//! Numbers are written with the shortest decimal representation that reads
//! back to the same `f64`, so identical runs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::boundary::{Boundary, Convergence, ZGrid};
use crate::config::RunConfig;
use crate::error::ModelError;
use crate::policy::{PolicyStats, SurfacePoint};
use crate::solver::ResidualPoint;
use crate::sweep::SweepRow;

pub const BOUNDARY_HEADER: [&str; 5] = ["z", "m", "c", "residual", "residual_se"];
pub const SWEEP_HEADER: [&str; 11] = [
    "param", "value", "prob_stop", "e_tau", "se_tau", "e_p_tau", "se_p_tau", "u_hat", "se_u",
    "v_hat", "se_v",
];
pub const SWEEP_BOUNDARY_HEADER: [&str; 5] = ["param", "value", "z", "m", "c"];
pub const SURFACE_HEADER: [&str; 5] = ["x", "p", "pi", "v_hat", "se_v"];
pub const STATS_HEADER: [&str; 15] = [
    "x", "p", "pi", "prob_stop", "e_tau", "se_tau", "e_p_tau", "se_p_tau", "u_hat", "se_u",
    "v_hat", "se_v", "n_paths", "horizon", "boundary_converged",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Boundary { path: PathBuf, source: ModelError },
}

/// `v` rounded to `digits` significant decimal digits.
pub fn round_sig(v: f64, digits: usize) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", digits.saturating_sub(1), v)
        .parse()
        .expect("formatted float parses")
}

/// Shortest round-trip decimal text.
pub fn fmt_num(v: f64) -> String {
    format!("{v}")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>, OutputError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| OutputError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|source| OutputError::Csv {
            path: path.to_path_buf(),
            source,
        })
}

fn write_rows<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: impl IntoIterator<Item = [String; N]>,
) -> Result<(), OutputError> {
    let csv_err = |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `z,m,c,residual,residual_se`, values rounded to 10 significant digits.
/// `residuals` must hold one entry per node in grid order when given;
/// without it the residual columns are left empty.
pub fn write_boundary(
    path: &Path,
    b: &Boundary,
    residuals: Option<&[ResidualPoint]>,
) -> Result<(), OutputError> {
    if let Some(r) = residuals {
        if r.len() != b.grid().n {
            return Err(OutputError::Format {
                path: path.to_path_buf(),
                message: format!("{} residuals for {} nodes", r.len(), b.grid().n),
            });
        }
    }
    let g = |v: f64| fmt_num(round_sig(v, 10));
    write_rows(
        path,
        BOUNDARY_HEADER,
        (0..b.grid().n).map(|i| {
            let (res, se) = residuals.map_or((String::new(), String::new()), |r| {
                (g(r[i].residual), g(r[i].stderr))
            });
            [
                g(b.grid().node(i)),
                g(b.m_values()[i]),
                g(b.c_values()[i]),
                res,
                se,
            ]
        }),
    )
}

/// Reads a file written by [`write_boundary`]. The `z` column must form a
/// uniform grid.
pub fn read_boundary(path: &Path) -> Result<Boundary, OutputError> {
    let fmt_err = |message: String| OutputError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let header = rdr
        .headers()
        .map_err(|source| OutputError::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    if header.iter().take(3).ne(BOUNDARY_HEADER.iter().take(3).copied()) {
        return Err(fmt_err(format!("expected header starting z,m,c, found {header:?}")));
    }
    let (mut z, mut m, mut c) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|source| OutputError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let num = |k: usize| -> Result<f64, OutputError> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| fmt_err(format!("row {}: bad value in column {}", i + 2, BOUNDARY_HEADER[k])))
        };
        z.push(num(0)?);
        m.push(num(1)?);
        c.push(num(2)?);
    }
    if z.len() < 2 {
        return Err(fmt_err("need at least two rows".into()));
    }
    let grid = ZGrid::new(z[0], z[z.len() - 1], z.len()).map_err(|source| OutputError::Boundary {
        path: path.to_path_buf(),
        source,
    })?;
    let tol = 1e-8 * (1.0 + grid.dz());
    if let Some(i) = (0..z.len()).find(|&i| (z[i] - grid.node(i)).abs() > tol) {
        return Err(fmt_err(format!("z column is not a uniform grid at row {}", i + 2)));
    }
    Boundary::new(grid, c, m).map_err(|source| OutputError::Boundary {
        path: path.to_path_buf(),
        source,
    })
}

fn stats_cells(s: &PolicyStats) -> [String; 9] {
    [
        fmt_num(s.prob_stop),
        fmt_num(s.e_tau),
        fmt_num(s.se_tau),
        fmt_num(s.e_p_tau),
        fmt_num(s.se_p_tau),
        fmt_num(s.u_hat),
        fmt_num(s.se_u),
        fmt_num(s.v_hat),
        fmt_num(s.se_v),
    ]
}

/// One row per successful sweep value; rejected values are left out.
pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<(), OutputError> {
    write_rows(
        path,
        SWEEP_HEADER,
        rows.iter().filter_map(|r| {
            let s = r.stats.as_ref()?;
            let [a, b, c, d, e, f, g, h, i] = stats_cells(s);
            Some([r.param.clone(), fmt_num(r.value), a, b, c, d, e, f, g, h, i])
        }),
    )
}

/// The boundary solved for every sweep value, stacked.
pub fn write_sweep_boundaries(path: &Path, rows: &[SweepRow]) -> Result<(), OutputError> {
    let g = |v: f64| fmt_num(round_sig(v, 10));
    write_rows(
        path,
        SWEEP_BOUNDARY_HEADER,
        rows.iter()
            .filter_map(|r| r.boundary.as_ref().map(|b| (r, b)))
            .flat_map(|(r, b)| {
                (0..b.grid().n).map(move |i| {
                    [
                        r.param.clone(),
                        fmt_num(r.value),
                        g(b.grid().node(i)),
                        g(b.m_values()[i]),
                        g(b.c_values()[i]),
                    ]
                })
            })
            .collect::<Vec<_>>(),
    )
}

pub fn write_surface(path: &Path, rows: &[SurfacePoint]) -> Result<(), OutputError> {
    write_rows(
        path,
        SURFACE_HEADER,
        rows.iter().map(|r| {
            [fmt_num(r.x), fmt_num(r.p), fmt_num(r.pi), fmt_num(r.v_hat), fmt_num(r.se_v)]
        }),
    )
}

pub fn write_stats(
    path: &Path,
    sp: &crate::model::StatePoint,
    s: &PolicyStats,
) -> Result<(), OutputError> {
    let [a, b, c, d, e, f, g, h, i] = stats_cells(s);
    write_rows(
        path,
        STATS_HEADER,
        [[
            fmt_num(sp.x),
            fmt_num(sp.p),
            fmt_num(sp.pi),
            a,
            b,
            c,
            d,
            e,
            f,
            g,
            h,
            i,
            s.n_paths.to_string(),
            fmt_num(s.horizon),
            s.boundary_converged.to_string(),
        ]],
    )
}

/// Contents of `run_meta.toml`.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta<'a> {
    pub version: &'static str,
    pub command: &'a str,
    /// Output files written by the command.
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<Convergence>,
    pub config: &'a RunConfig,
}

impl<'a> RunMeta<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig) -> Self {
        RunMeta {
            version: env!("CARGO_PKG_VERSION"),
            command,
            files: Vec::new(),
            skipped: Vec::new(),
            convergence: None,
            config,
        }
    }
}

pub const RUN_META_FILE: &str = "run_meta.toml";

pub fn write_run_meta(dir: &Path, meta: &RunMeta) -> Result<PathBuf, OutputError> {
    let path = dir.join(RUN_META_FILE);
    let text = toml::to_string(meta).map_err(|e| OutputError::Format {
        path: path.clone(),
        message: e.to_string(),
    })?;
    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    fs::write(&path, text).map_err(|source| OutputError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}
