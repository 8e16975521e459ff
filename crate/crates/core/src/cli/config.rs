//! Run configuration shared by the subcommands.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use super::ingest::Schema;
use crate::asymptotics::BandwidthConfig;
use crate::error::{Error, Result};
use crate::geometry::{ObservationSet, QuantityKind};
use crate::simulation::SimulationMode;

/// Default number of grid points.
pub const DEFAULT_POINTS: usize = 256;

/// A distribution to estimate: one of the quantities, or the height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Quantity(QuantityKind),
    Height,
}

impl Target {
    pub fn tag(self) -> &'static str {
        match self {
            Target::Quantity(k) => k.tag(),
            Target::Height => "height",
        }
    }

    pub fn all() -> Vec<Target> {
        QuantityKind::ALL
            .iter()
            .map(|&k| Target::Quantity(k))
            .chain(std::iter::once(Target::Height))
            .collect()
    }

    /// Parses a comma-separated list such as `vol,surf,height`.
    pub fn parse_list(s: &str) -> Result<Vec<Target>> {
        let mut out: Vec<Target> = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| {
                if p.eq_ignore_ascii_case("height") {
                    Ok(Target::Height)
                } else {
                    p.parse::<QuantityKind>().map(Target::Quantity)
                }
            })
            .collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::Config("no kinds selected".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Evaluation grid. Missing bounds are filled in from the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub points: usize,
    pub spacing: Spacing,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            min: None,
            max: None,
            points: DEFAULT_POINTS,
            spacing: Spacing::Log,
        }
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// `MIN:MAX:POINTS[:lin|log]`; `MIN` and `MAX` may be left empty.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(Error::Config(format!("grid `{s}`: expected MIN:MAX:POINTS[:lin|log]")));
        }
        let bound = |p: &str| -> Result<Option<f64>> {
            if p.is_empty() {
                Ok(None)
            } else {
                p.parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::Config(format!("grid bound `{p}` is not a number")))
            }
        };
        let points = parts[2]
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("grid points `{}` is not a count", parts[2])))?;
        let spacing = match parts.get(3).map(|p| p.to_ascii_lowercase()) {
            None => Spacing::Log,
            Some(p) if p == "log" => Spacing::Log,
            Some(p) if p == "lin" || p == "linear" => Spacing::Linear,
            Some(p) => return Err(Error::Config(format!("grid spacing `{p}`"))),
        };
        let spec = GridSpec {
            min: bound(parts[0])?,
            max: bound(parts[1])?,
            points,
            spacing,
        };
        spec.check()?;
        Ok(spec)
    }
}

impl GridSpec {
    pub fn check(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::Config("grid needs at least 2 points".into()));
        }
        for b in [self.min, self.max].into_iter().flatten() {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::Config(format!("grid bound {b} must be finite and non-negative")));
            }
        }
        if let (Some(lo), Some(hi)) = (self.min, self.max) {
            if hi <= lo {
                return Err(Error::Config(format!("grid max {hi} must exceed min {lo}")));
            }
        }
        if self.spacing == Spacing::Log && self.min == Some(0.0) {
            return Err(Error::Config("log spacing needs a positive minimum".into()));
        }
        Ok(())
    }

    /// Grid for data whose relevant values are `support`. Missing bounds
    /// come from the 0.5% and 99.5% empirical quantiles; a degenerate range
    /// is widened to `[lo/2, 2hi]`.
    pub fn resolve(&self, support: &[f64]) -> Result<Vec<f64>> {
        self.check()?;
        let mut v: Vec<f64> = support.iter().copied().filter(|x| x.is_finite() && *x > 0.0).collect();
        if v.is_empty() && (self.min.is_none() || self.max.is_none()) {
            return Err(Error::Domain("no positive values to build a grid from".into()));
        }
        v.sort_by(f64::total_cmp);
        let mut lo = self.min.unwrap_or_else(|| quantile(&v, 0.005));
        let mut hi = self.max.unwrap_or_else(|| quantile(&v, 0.995));
        if !(hi > lo) {
            let (l, h) = (lo.min(hi), lo.max(hi));
            lo = if self.min.is_some() { l } else { 0.5 * l };
            hi = if self.max.is_some() { h } else { 2.0 * h };
            if !(hi > lo) {
                hi = lo + 1.0;
            }
        }
        let k = (self.points - 1) as f64;
        let grid = (0..self.points)
            .map(|i| {
                let s = i as f64 / k;
                match self.spacing {
                    Spacing::Linear => lo + s * (hi - lo),
                    Spacing::Log => lo * (hi / lo).powf(s),
                }
            })
            .collect();
        Ok(grid)
    }
}

/// Empirical quantile with linear interpolation on sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Default grid for a quantity: spans its poles `p(Hᵢ; Zᵢ)`.
pub fn default_grid(obs: &ObservationSet, kind: QuantityKind) -> Result<Vec<f64>> {
    GridSpec::default().resolve(&obs.sorted_poles(kind))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Estimate,
    Simulate,
    Table3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub schema: Schema,
    pub kinds: Vec<Target>,
    pub grid: GridSpec,
    pub bandwidth: BandwidthConfig,
    pub seed: u64,
    pub replicates: usize,
    pub n: usize,
    pub mode: SimulationMode,
    pub sizes: Vec<usize>,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn new(command: Command, output: PathBuf) -> Self {
        Self {
            command,
            input: None,
            schema: Schema::Z,
            kinds: Target::all(),
            grid: GridSpec::default(),
            bandwidth: BandwidthConfig::default(),
            seed: 1,
            replicates: 1000,
            n: 500,
            mode: SimulationMode::Direct2D,
            sizes: vec![50, 500, 5000, 50_000],
            output,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: GridSpec = "1:10:5:lin".parse().unwrap();
        assert_eq!(g.resolve(&[]).unwrap(), vec![1.0, 3.25, 5.5, 7.75, 10.0]);
        let g: GridSpec = "1:100:3".parse().unwrap();
        let v = g.resolve(&[]).unwrap();
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert!("1:10:1".parse::<GridSpec>().is_err());
        assert!("0:10:4:log".parse::<GridSpec>().is_err());
        assert!("5:1:4".parse::<GridSpec>().is_err());
        let g: GridSpec = "::8".parse().unwrap();
        assert_eq!(g.points, 8);
    }

    #[test]
    fn degenerate_support_is_widened() {
        let v = GridSpec::default().resolve(&[3.0]).unwrap();
        assert_eq!(v.len(), DEFAULT_POINTS);
        assert!((v[0] - 1.5).abs() < 1e-12);
        assert!((v[DEFAULT_POINTS - 1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn quantile_bounds() {
        let v: Vec<f64> = (1..=201).map(|i| i as f64).collect();
        let g = GridSpec::default().resolve(&v).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-12);
        assert!((g[DEFAULT_POINTS - 1] - 200.0).abs() < 1e-9);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn target_lists() {
        let t = Target::parse_list("vol, height,sqradius,vol").unwrap();
        assert_eq!(
            t,
            vec![
                Target::Quantity(QuantityKind::SquaredRadius),
                Target::Quantity(QuantityKind::Volume),
                Target::Height
            ]
        );
        assert!(Target::parse_list("").is_err());
        assert!(Target::parse_list("mass").is_err());
    }
}
