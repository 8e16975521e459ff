//! The `estimate`, `simulate` and `table3` commands.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use super::config::{RunConfig, Target};
use super::ingest::{ingest, IngestReport};
use crate::asymptotics::{ci, isotonic_band, var_covariance, var_height_cdf, var_moment, BandwidthConfig, EstimateWithCI, MomentRow};
use crate::error::{Error, Result};
use crate::geometry::{ObservationSet, QuantityKind};
use crate::isotonic::{IsotonicConfig, IsotonicEstimate};
use crate::plugin::{covariance_hat, height_cdf_unweighted, height_cdf_weighted, moments, n_tilde, MomentSet};
use crate::simulation::{run_table3, SimulationSpec, Table3Spec};

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// One row of a quantity's CDF table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfRow {
    pub t: f64,
    pub f_plugin: f64,
    pub f_isotonic: f64,
    /// Absent when fewer than two observations are available.
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeightRow {
    pub h: f64,
    pub weighted: f64,
    pub unweighted: f64,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
}

/// An estimate with its 95% interval, as written to the summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalSummary {
    pub nu2: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
}

impl From<EstimateWithCI> for IntervalSummary {
    fn from(c: EstimateWithCI) -> Self {
        Self {
            nu2: c.nu2,
            half_width: c.half_width,
            lower: c.lower(),
            upper: c.upper(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSummary {
    pub name: &'static str,
    pub estimate: f64,
    pub ci: Option<IntervalSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceSummary {
    pub estimate: f64,
    pub ci: IntervalSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindSummary {
    pub kind: &'static str,
    pub file: String,
    pub points: usize,
    pub perturbed_points: usize,
    pub plugin_monotone: bool,
    pub isotonic_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub n: usize,
    pub rows_read: usize,
    pub rejected_lines: Vec<usize>,
    pub bandwidth: Option<f64>,
    pub moments: Vec<MomentSummary>,
    pub m_g_minus: f64,
    pub covariance: Option<CovarianceSummary>,
    pub kinds: Vec<KindSummary>,
    pub height_cdf: Option<Vec<HeightRow>>,
    pub notes: Vec<String>,
}

/// Every file written by `estimate`, plus the summary.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutput {
    pub summary: EstimateSummary,
    pub tables: Vec<(Target, Vec<CdfRow>)>,
    pub height: Option<Vec<HeightRow>>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x}"))
}

fn cdf_tsv(rows: &[CdfRow]) -> String {
    let mut s = String::from("t\tF_plugin\tF_isotonic\tci_lower\tci_upper\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}",
            r.t,
            r.f_plugin,
            r.f_isotonic,
            fmt_opt(r.ci_lower),
            fmt_opt(r.ci_upper)
        );
    }
    s
}

fn height_tsv(rows: &[HeightRow]) -> String {
    let mut s = String::from("h\tF_weighted\tF_unweighted\tci_lower\tci_upper\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}",
            r.h,
            r.weighted,
            r.unweighted,
            fmt_opt(r.ci_lower),
            fmt_opt(r.ci_upper)
        );
    }
    s
}

/// Moves grid points off the poles of `Ñₙ`. Returns the grid and the number
/// of points moved.
fn avoid_poles(obs: &ObservationSet, kind: QuantityKind, grid: &[f64]) -> Result<(Vec<f64>, usize)> {
    let mut moved = 0;
    let mut out = Vec::with_capacity(grid.len());
    for &t0 in grid {
        let mut t = t0;
        let mut tries = 0;
        loop {
            match n_tilde(obs, kind, t) {
                Err(Error::Pole { .. }) if tries < 64 => {
                    t = (t * (1.0 + 1e-12)).max(t + f64::MIN_POSITIVE);
                    tries += 1;
                }
                Err(e) => return Err(e),
                Ok(_) => break,
            }
        }
        if tries > 0 {
            warn!("{kind}: grid point {t0} sits on a pole, moved to {t}");
            moved += 1;
        }
        out.push(t);
    }
    Ok((out, moved))
}

fn is_monotone(v: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = v.collect();
    v.windows(2).all(|w| w[1] >= w[0])
}

fn moment_value(m: &MomentSet, row: MomentRow) -> f64 {
    match row {
        MomentRow::Radius => m.radius,
        MomentRow::SquaredRadius => m.squared_radius,
        MomentRow::Height => m.height,
        MomentRow::Volume => m.volume,
        MomentRow::SurfaceArea => m.surface_area,
    }
}

/// Runs every estimator on `obs`. Pure apart from logging.
pub fn estimate(obs: &ObservationSet, cfg: &RunConfig, report: &IngestReport) -> Result<EstimateOutput> {
    let n = obs.len();
    let bw: &BandwidthConfig = &cfg.bandwidth;
    let enough = n >= 2;
    let mut notes = vec!["F_plugin is the raw plug-in estimate and may be nonmonotone; F_isotonic is monotone.".to_string()];
    if !enough {
        warn!("only one observation: confidence intervals are omitted");
        notes.push("fewer than two observations: confidence intervals omitted".into());
    }

    let m = moments(obs);
    let moment_rows = MomentRow::ALL
        .iter()
        .map(|&row| {
            let estimate = moment_value(&m, row);
            let ci = if enough { Some(ci(estimate, var_moment(obs, row, bw)?, n)?.into()) } else { None };
            Ok(MomentSummary {
                name: row.name(),
                estimate,
                ci,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let covariance = if enough {
        let sigma = covariance_hat(obs)?;
        Some(CovarianceSummary {
            estimate: sigma,
            ci: ci(sigma, var_covariance(obs, bw)?, n)?.into(),
        })
    } else {
        None
    };

    let mut tables = Vec::new();
    let mut kinds = Vec::new();
    let mut height = None;
    for &target in &cfg.kinds {
        match target {
            Target::Quantity(kind) => {
                let grid = cfg.grid.resolve(&obs.sorted_poles(kind))?;
                let (grid, moved) = avoid_poles(obs, kind, &grid)?;
                let est = IsotonicEstimate::fit(obs, kind, IsotonicConfig::default())?;
                let n0 = n_tilde(obs, kind, 0.0)?;
                let band = if enough { Some(isotonic_band(&est, obs, &grid, bw)?) } else { None };
                let rows = grid
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| {
                        Ok(CdfRow {
                            t,
                            f_plugin: 1.0 - n_tilde(obs, kind, t)? / n0,
                            f_isotonic: est.cdf(t),
                            ci_lower: band.as_ref().map(|b| b[i].lower),
                            ci_upper: band.as_ref().map(|b| b[i].upper),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                kinds.push(KindSummary {
                    kind: kind.tag(),
                    file: format!("cdf_{}.tsv", kind.tag()),
                    points: rows.len(),
                    perturbed_points: moved,
                    plugin_monotone: is_monotone(rows.iter().map(|r| r.f_plugin)),
                    isotonic_monotone: is_monotone(rows.iter().map(|r| r.f_isotonic)),
                });
                tables.push((target, rows));
            }
            Target::Height => {
                let hs: Vec<f64> = obs.iter().map(|o| o.h).collect();
                let grid = cfg.grid.resolve(&hs)?;
                let rows = grid
                    .iter()
                    .map(|&h| {
                        let weighted = height_cdf_weighted(obs, h);
                        let band = if enough { Some(ci(weighted, var_height_cdf(obs, h, bw)?, n)?) } else { None };
                        Ok(HeightRow {
                            h,
                            weighted,
                            unweighted: height_cdf_unweighted(obs, h),
                            ci_lower: band.map(|c| c.lower().max(0.0)),
                            ci_upper: band.map(|c| c.upper().min(1.0)),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                height = Some(rows);
            }
        }
    }

    let summary = EstimateSummary {
        n,
        rows_read: report.rows,
        rejected_lines: report.rejected_lines.clone(),
        bandwidth: enough.then(|| bw.bandwidth(obs)),
        moments: moment_rows,
        m_g_minus: m.m_g_minus,
        covariance,
        kinds,
        height_cdf: height.clone(),
        notes,
    };
    Ok(EstimateOutput { summary, tables, height })
}

/// Writes the output of [`estimate`] into `dir`. Returns the paths written.
pub fn write_estimate(out: &EstimateOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (target, rows) in &out.tables {
        let path = dir.join(format!("cdf_{}.tsv", target.tag()));
        write_atomic(&path, cdf_tsv(rows).as_bytes())?;
        written.push(path);
    }
    if let Some(rows) = &out.height {
        let path = dir.join("cdf_height.tsv");
        write_atomic(&path, height_tsv(rows).as_bytes())?;
        written.push(path);
    }
    let path = dir.join("summary.json");
    let mut json = serde_json::to_string_pretty(&out.summary)?;
    json.push('\n');
    write_atomic(&path, json.as_bytes())?;
    written.push(path);
    Ok(written)
}

pub fn cmd_estimate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| Error::Config("estimate needs an input file".into()))?;
    let (obs, report) = ingest(input, cfg.schema)?;
    info!("read {} observations ({} rejected)", obs.len(), report.rejected_lines.len());
    let out = estimate(&obs, cfg, &report)?;
    write_estimate(&out, &cfg.output)
}

/// CSV with a `z,h` header; values are printed in shortest round-trip form.
pub fn observations_csv(obs: &ObservationSet) -> String {
    let mut s = String::from("z,h\n");
    for o in obs {
        let _ = writeln!(s, "{},{}", o.z, o.h);
    }
    s
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<PathBuf> {
    let spec = SimulationSpec::new(cfg.n, cfg.seed, cfg.mode, 1)?;
    let obs = spec.replicate(0)?;
    write_atomic(&cfg.output, observations_csv(&obs).as_bytes())?;
    Ok(cfg.output.clone())
}

pub fn cmd_table3(cfg: &RunConfig) -> Result<PathBuf> {
    let spec = Table3Spec {
        sizes: cfg.sizes.clone(),
        replicates: cfg.replicates,
        seed: cfg.seed,
        mode: cfg.mode,
        bandwidth: cfg.bandwidth,
    };
    let report = run_table3(&spec)?;
    write_atomic(&cfg.output, report.to_tsv().as_bytes())?;
    Ok(cfg.output.clone())
}
