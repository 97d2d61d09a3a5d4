//! Flag parsing and the flat parameter set shared by flags, config files and
//! report manifests.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "brwx", version, about = "Heavy-tailed branching random walk constants, estimates and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Limit constants over the (x, k, F) grid.
    Constants(Flags),
    /// Monte Carlo estimates of r_n·P*(event) for every n in the grid.
    Estimate(Flags),
    /// Estimates compared against limit constants, with trend columns.
    Verify(Flags),
    /// Exact enumeration next to naive Monte Carlo for discrete displacement tables.
    Oracle(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants(_) => "constants",
            Command::Estimate(_) => "estimate",
            Command::Verify(_) => "verify",
            Command::Oracle(_) => "oracle",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Constants(f) | Command::Estimate(f) | Command::Verify(f) | Command::Oracle(f) => f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum SumStart {
    #[value(name = "0")]
    #[serde(rename = "0")]
    Zero,
    #[value(name = "1")]
    #[serde(rename = "1")]
    One,
    #[value(name = "both")]
    #[serde(rename = "both")]
    Both,
}

impl SumStart {
    pub fn starts(self) -> Vec<usize> {
        match self {
            SumStart::Zero => vec![0],
            SumStart::One => vec![1],
            SumStart::Both => vec![0, 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Sbj,
    Naive,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Flat JSON object with the same keys as the long flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Offspring law as `k:prob` pairs, e.g. `0:0.25,2:0.75`.
    #[arg(long)]
    pub offspring: Option<String>,
    /// `pareto:alpha=2,p=0.5,xmin=1`, `dep-pareto:...` or `table:-1=0.5,1=0.5`.
    #[arg(long, allow_hyphen_values = true)]
    pub displacement: Option<String>,
    /// `geom:c=1,g=2` or `poly:a=1`.
    #[arg(long)]
    pub scaling: Option<String>,
    /// Tail index; taken from Pareto displacements, required for tables.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Generations, as a list `6,8,10` or an inclusive range `6..12` / `6..12:2`.
    #[arg(long)]
    pub n: Option<String>,
    /// Thresholds in units of γ_n; an empty string gives an empty grid.
    #[arg(long)]
    pub x_grid: Option<String>,
    /// Count thresholds; `1` selects the rightmost-particle event.
    #[arg(long)]
    pub k_grid: Option<String>,
    /// HLS functional, e.g. `hls:g1=ramp(1,2),g2=ramp(1,2),eps1=0.1,eps2=0.1`. Repeatable.
    #[arg(long)]
    pub hls: Vec<String>,
    #[arg(long)]
    pub replicates: Option<u64>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "BRWX_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub sum_start: Option<SumStart>,
    /// Use the bare (1 - p_e) factor instead of (1 - p_e)^(-1).
    #[arg(long)]
    pub remark_normalization: bool,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Exceedance floor δ in units of γ_n.
    #[arg(long)]
    pub floor: Option<f64>,
    /// Planting threshold for the single-big-jump estimator, in units of γ_n.
    #[arg(long)]
    pub plant_floor: Option<f64>,
    #[arg(long)]
    pub particle_cap: Option<u64>,
    /// Relative finite-n allowance for `verify` at the largest n.
    #[arg(long)]
    pub slack: Option<f64>,
    /// Normal quantile multiplying the standard error in `verify`.
    #[arg(long)]
    pub z: Option<f64>,
    /// Series truncation tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Every setting of a run. Config files and manifests use this shape with
/// kebab-case keys; absent keys fall back to defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offspring: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub displacement: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_grid: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hls: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum_start: Option<SumStart>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub remark_normalization: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plant_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub particle_cap: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

pub const DEFAULT_SCALING: &str = "geom:c=1,g=2";
pub const DEFAULT_REPLICATES: u64 = 100_000;
pub const DEFAULT_SLACK: f64 = 0.3;
pub const DEFAULT_Z: f64 = 1.959_963_984_540_054;

impl Parameters {
    pub fn from_flags(flags: &Flags) -> Result<Self, CliError> {
        Ok(Parameters {
            offspring: flags.offspring.clone(),
            displacement: flags.displacement.clone(),
            scaling: flags.scaling.clone(),
            alpha: flags.alpha,
            n: flags.n.as_deref().map(parse_n_grid).transpose()?,
            x_grid: flags.x_grid.as_deref().map(|s| parse_list(s, "--x-grid")).transpose()?,
            k_grid: flags.k_grid.as_deref().map(|s| parse_list(s, "--k-grid")).transpose()?,
            hls: (!flags.hls.is_empty()).then(|| flags.hls.clone()),
            replicates: flags.replicates,
            seed: flags.seed,
            threads: flags.threads,
            sum_start: flags.sum_start,
            remark_normalization: flags.remark_normalization.then_some(true),
            method: flags.method,
            floor: flags.floor,
            plant_floor: flags.plant_floor,
            particle_cap: flags.particle_cap,
            slack: flags.slack,
            z: flags.z,
            tol: flags.tol,
            out: flags.out.clone(),
            format: flags.format,
        })
    }

    /// Reads a flat parameter object, or the `parameters` member of a report manifest.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let inner = match value.get("parameters") {
            Some(p) if value.get("command").is_some() => p.clone(),
            _ => value,
        };
        serde_json::from_value(inner).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: Parameters) -> Parameters {
        Parameters {
            offspring: self.offspring.or(base.offspring),
            displacement: self.displacement.or(base.displacement),
            scaling: self.scaling.or(base.scaling),
            alpha: self.alpha.or(base.alpha),
            n: self.n.or(base.n),
            x_grid: self.x_grid.or(base.x_grid),
            k_grid: self.k_grid.or(base.k_grid),
            hls: self.hls.or(base.hls),
            replicates: self.replicates.or(base.replicates),
            seed: self.seed.or(base.seed),
            threads: self.threads.or(base.threads),
            sum_start: self.sum_start.or(base.sum_start),
            remark_normalization: self.remark_normalization.or(base.remark_normalization),
            method: self.method.or(base.method),
            floor: self.floor.or(base.floor),
            plant_floor: self.plant_floor.or(base.plant_floor),
            particle_cap: self.particle_cap.or(base.particle_cap),
            slack: self.slack.or(base.slack),
            z: self.z.or(base.z),
            tol: self.tol.or(base.tol),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
        }
    }
}

/// Comma-separated list; the empty string is the empty list.
pub fn parse_list<T: std::str::FromStr>(s: &str, flag: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| CliError::Usage(format!("{flag}: cannot parse `{t}`: {e}"))))
        .collect()
}

pub fn parse_n_grid(s: &str) -> Result<Vec<usize>, CliError> {
    let Some((lo, rest)) = s.split_once("..") else {
        return parse_list(s, "--n");
    };
    let (hi, step) = rest.split_once(':').unwrap_or((rest, "1"));
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|e| CliError::Usage(format!("--n: cannot parse `{t}`: {e}")))
    };
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if step == 0 || hi < lo {
        return Err(CliError::Usage(format!("--n: empty or invalid range `{s}`")));
    }
    Ok((lo..=hi).step_by(step).collect())
}
