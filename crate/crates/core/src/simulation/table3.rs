//! Replicated covariance estimation at several sample sizes.

use rayon::prelude::*;
use serde::Serialize;

use super::model::{true_covariance, true_nu2};
use super::sampler::{splitmix64, SimulationMode, SimulationSpec};
use crate::asymptotics::{ci, var_covariance, BandwidthConfig};
use crate::error::{Error, Result};
use crate::numeric::compensated_mean;
use crate::plugin::covariance_hat;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table3Spec {
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub mode: SimulationMode,
    pub bandwidth: BandwidthConfig,
}

impl Default for Table3Spec {
    fn default() -> Self {
        Self {
            sizes: vec![50, 500, 5000, 50_000],
            replicates: 1000,
            seed: 1,
            mode: SimulationMode::Direct2D,
            bandwidth: BandwidthConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table3Row {
    pub n: usize,
    /// Covariance estimate from a single run.
    pub sigma_hat: f64,
    /// Variance estimate from the same run.
    pub nu2_hat: f64,
    pub half_width: f64,
    /// Covariance estimate averaged over all replicates.
    pub mean_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table3Report {
    pub rows: Vec<Table3Row>,
    pub true_sigma: f64,
    pub true_nu2: f64,
}

impl Table3Report {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("n\tsigma_hat\tnu2_hat\thalf_width\tmean_sigma\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\n",
                r.n, r.sigma_hat, r.nu2_hat, r.half_width, r.mean_sigma
            ));
        }
        out.push_str(&format!(
            "inf\t{:.4}\t{:.4}\t0.0000\t{:.4}\n",
            self.true_sigma, self.true_nu2, self.true_sigma
        ));
        out
    }
}

/// Simulation spec used for sample size `n`; each size gets its own stream.
pub fn spec_for_size(seed: u64, n: usize, mode: SimulationMode, replicates: usize) -> Result<SimulationSpec> {
    SimulationSpec::new(n, seed ^ splitmix64(n as u64), mode, replicates)
}

/// Covariance estimates for every replicate, in replicate order.
pub fn covariance_replicates(spec: &SimulationSpec) -> Result<Vec<f64>> {
    (0..spec.replicates as u64)
        .into_par_iter()
        .map(|i| covariance_hat(&spec.replicate(i)?))
        .collect()
}

pub fn run_table3(spec: &Table3Spec) -> Result<Table3Report> {
    if spec.replicates == 0 || spec.sizes.is_empty() {
        return Err(Error::Config("need at least one size and one replicate".into()));
    }
    let mut rows = Vec::with_capacity(spec.sizes.len());
    for &n in &spec.sizes {
        if n < 2 {
            return Err(Error::Config(format!("sample size {n} is below 2")));
        }
        let sim = spec_for_size(spec.seed, n, spec.mode, spec.replicates)?;
        let first = sim.replicate(0)?;
        let sigma_hat = covariance_hat(&first)?;
        let nu2_hat = var_covariance(&first, &spec.bandwidth)?;
        let half_width = ci(sigma_hat, nu2_hat, n)?.half_width;
        let mean_sigma = compensated_mean(covariance_replicates(&sim)?);
        log::info!("n = {n}: sigma = {sigma_hat:.4}, nu2 = {nu2_hat:.4}, mean sigma = {mean_sigma:.4}");
        rows.push(Table3Row {
            n,
            sigma_hat,
            nu2_hat,
            half_width,
            mean_sigma,
        });
    }
    Ok(Table3Report {
        rows,
        true_sigma: true_covariance()?,
        true_nu2: true_nu2()?,
    })
}
