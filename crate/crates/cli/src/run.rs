//! The four subcommands.

use std::time::Instant;

use brwx::limits::{c_rightmost_general, c_rightmost_iid, mstar_general_count, mstar_iid_count, mstar_iid_hls};
use brwx::{
    enumerate_exact, estimate_naive, estimate_sbj, DisplacementModel, Error, Estimate, EventSpec, Executor, Family,
    GammaSpec, LimitValue, OffspringLaw, ScalingScheme, SeriesOptions, SimConfig,
};

use crate::error::CliError;
use crate::params::{
    Command, Format, MethodArg, Parameters, SumStart, DEFAULT_REPLICATES, DEFAULT_SCALING, DEFAULT_SLACK, DEFAULT_Z,
};
use crate::report::{
    Manifest, Report, Row, Timing, FAIL, PASS, STATUS_RESOURCE, TREND, UNITS_LIMIT, UNITS_PROBABILITY, UNITS_SCALED,
};

const DEFAULT_N: usize = 10;
const DEFAULT_SEED: u64 = 1;
const DEFAULT_TOL: f64 = 1e-12;

/// Fully resolved inputs of a run.
pub struct Setup {
    pub law: OffspringLaw,
    pub model: DisplacementModel,
    pub gamma: GammaSpec,
    pub alpha: f64,
    pub ns: Vec<usize>,
    pub events: Vec<EventSpec>,
    pub replicates: u64,
    pub seed: u64,
    pub executor: Executor,
    pub starts: Vec<usize>,
    pub remark: bool,
    pub methods: Vec<MethodArg>,
    pub floor: Option<f64>,
    pub plant_floor: Option<f64>,
    pub particle_cap: Option<u64>,
    pub slack: f64,
    pub z: f64,
    pub tol: f64,
    pub format: Format,
    /// The parameters with every default filled in, as recorded in the manifest.
    pub resolved: Parameters,
}

impl Setup {
    /// Validates everything up front so a bad token never leaves a partial report.
    pub fn resolve(p: Parameters) -> Result<Self, CliError> {
        let offspring = p.offspring.clone().ok_or_else(|| CliError::Usage("--offspring is required".into()))?;
        let displacement = p
            .displacement
            .clone()
            .ok_or_else(|| CliError::Usage("--displacement is required".into()))?;
        let scaling = p.scaling.clone().unwrap_or_else(|| DEFAULT_SCALING.to_string());
        let law: OffspringLaw = offspring.parse()?;
        let model: DisplacementModel = displacement.parse()?;
        let gamma: GammaSpec = scaling.parse()?;
        let alpha = match (model.alpha(), p.alpha) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Usage(format!("--alpha {b} disagrees with the displacement tail index {a}")))
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => return Err(CliError::Usage("--alpha is required for table displacements".into())),
        };
        let ns = p.n.clone().unwrap_or_else(|| vec![DEFAULT_N]);
        if ns.contains(&0) {
            return Err(CliError::Usage("--n: generations start at 1".into()));
        }
        let x_grid = p.x_grid.clone().unwrap_or_else(|| vec![1.0]);
        let k_grid = p.k_grid.clone().unwrap_or_else(|| vec![1]);
        let hls = p.hls.clone().unwrap_or_default();
        let mut events = Vec::new();
        for &x in &x_grid {
            for &k in &k_grid {
                events.push(if k == 1 {
                    EventSpec::max_exceeds(x)?
                } else {
                    EventSpec::count_at_least(x, k)?
                });
            }
        }
        for h in &hls {
            let e: EventSpec = h.parse()?;
            if !matches!(e, EventSpec::Hls(_)) {
                return Err(CliError::Usage(format!("--hls: `{h}` is not an hls functional")));
            }
            events.push(e);
        }
        let replicates = p.replicates.unwrap_or(DEFAULT_REPLICATES);
        if replicates == 0 {
            return Err(CliError::Usage("--replicates must be at least 1".into()));
        }
        let sum_start = p.sum_start.unwrap_or(SumStart::Zero);
        let method = p.method.unwrap_or(MethodArg::Sbj);
        let methods = match method {
            MethodArg::Both => vec![MethodArg::Sbj, MethodArg::Naive],
            m => vec![m],
        };
        let slack = p.slack.unwrap_or(DEFAULT_SLACK);
        let z = p.z.unwrap_or(DEFAULT_Z);
        let tol = p.tol.unwrap_or(DEFAULT_TOL);
        for (name, v) in [("--slack", slack), ("--z", z), ("--tol", tol)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(CliError::Usage(format!("{name} must be a finite nonnegative number")));
            }
        }
        let format = p.format.unwrap_or(Format::Csv);
        let resolved = Parameters {
            offspring: Some(offspring),
            displacement: Some(displacement),
            scaling: Some(scaling),
            alpha: Some(alpha),
            n: Some(ns.clone()),
            x_grid: Some(x_grid),
            k_grid: Some(k_grid),
            hls: Some(hls),
            replicates: Some(replicates),
            seed: Some(p.seed.unwrap_or(DEFAULT_SEED)),
            sum_start: Some(sum_start),
            remark_normalization: Some(p.remark_normalization.unwrap_or(false)),
            method: Some(method),
            slack: Some(slack),
            z: Some(z),
            tol: Some(tol),
            format: Some(format),
            ..p.clone()
        };
        Ok(Setup {
            law,
            model,
            gamma,
            alpha,
            ns,
            events,
            replicates,
            seed: p.seed.unwrap_or(DEFAULT_SEED),
            executor: Executor::with_threads(p.threads),
            starts: sum_start.starts(),
            remark: p.remark_normalization.unwrap_or(false),
            methods,
            floor: p.floor,
            plant_floor: p.plant_floor,
            particle_cap: p.particle_cap,
            slack,
            z,
            tol,
            format,
            resolved,
        })
    }

    fn options(&self, start: usize) -> SeriesOptions {
        SeriesOptions::default()
            .with_sum_start(start)
            .with_remark_normalization(self.remark)
            .with_tol(self.tol)
    }

    fn normalization(&self) -> String {
        if self.remark { "remark" } else { "inverse-survival" }.to_string()
    }

    /// Table displacements have no tail, so `r_n` is taken from a Pareto law with
    /// the same index; `P(|X| > t)` does not depend on the sign balance.
    fn scheme(&self) -> Result<ScalingScheme, CliError> {
        let reference = if self.model.is_pareto() {
            self.model.clone()
        } else {
            DisplacementModel::iid_pareto(self.alpha, 1.0, 1.0)?
        };
        let n_max = self.ns.iter().copied().max().unwrap_or(DEFAULT_N);
        Ok(ScalingScheme::build(self.alpha, self.law.mean(), &reference, self.gamma, n_max)?)
    }

    fn config(&self, scheme: &ScalingScheme, n: usize) -> Result<SimConfig, CliError> {
        let mut cfg = SimConfig::new(self.law.clone(), self.model.clone(), scheme.clone(), n)?;
        if let Some(f) = self.floor {
            cfg = cfg.with_floor(f)?;
        }
        if let Some(cap) = self.particle_cap {
            cfg = cfg.with_particle_cap(cap);
        }
        Ok(cfg)
    }

    pub fn limit(&self, event: &EventSpec, start: usize) -> Result<LimitValue, CliError> {
        let opts = self.options(start);
        let family = self.model.family();
        let p = self.model.tail_balance();
        let out = match (event, family, p) {
            (EventSpec::MaxExceeds { x }, Family::IidPareto, Some(p)) => c_rightmost_iid(self.alpha, p, &self.law, *x, &opts),
            (EventSpec::MaxExceeds { x }, Family::FullyDependentPareto, _) => {
                c_rightmost_general(&self.model, &self.law, *x, &opts)
            }
            (EventSpec::CountAtLeast { x, k }, Family::IidPareto, Some(p)) => {
                mstar_iid_count(self.alpha, p, &self.law, *x, *k, &opts)
            }
            (EventSpec::CountAtLeast { x, k }, Family::FullyDependentPareto, _) => {
                mstar_general_count(&self.model, &self.law, *x, *k, &opts)
            }
            (EventSpec::Hls(f), Family::IidPareto, Some(p)) => mstar_iid_hls(f, &self.law, self.alpha, p, &opts),
            _ => Err(Error::UnsupportedFamily {
                family: family.name(),
                operation: "limit constants for this event",
            }),
        };
        Ok(out?)
    }

    fn estimate(&self, method: MethodArg, event: &EventSpec, cfg: &SimConfig) -> brwx::Result<Estimate> {
        match method {
            MethodArg::Naive => estimate_naive(event, cfg, self.replicates, self.seed, &self.executor),
            _ => estimate_sbj(event, cfg, self.replicates, self.plant_floor, self.seed, &self.executor),
        }
    }
}

fn method_tag(event: &EventSpec) -> &'static str {
    if matches!(event, EventSpec::Hls(_)) {
        "quadrature"
    } else {
        "series"
    }
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Naive => "naive",
        _ => "sbj",
    }
}

fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Runs a subcommand. Resource exhaustion in the Monte Carlo commands stops the
/// run and returns the rows so far, the last one flagged, with the error.
pub fn run(command: &Command) -> Result<(Report, Option<CliError>), CliError> {
    let flags = command.flags();
    let from_flags = Parameters::from_flags(flags)?;
    let params = match &flags.config {
        Some(path) => from_flags.over(Parameters::from_file(path)?),
        None => from_flags,
    };
    let setup = Setup::resolve(params)?;
    let mut timings = Vec::new();
    let (rows, err) = match command {
        Command::Constants(_) => (constants(&setup)?, None),
        Command::Estimate(_) => estimate(&setup, &mut timings)?,
        Command::Verify(_) => verify(&setup, &mut timings)?,
        Command::Oracle(_) => oracle(&setup, &mut timings)?,
    };
    let manifest = Manifest {
        command: command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix: now_unix(),
        parameters: setup.resolved.clone(),
        complete: err.is_none(),
        timings,
    };
    Ok((Report { manifest, rows }, err))
}

fn constants(s: &Setup) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for e in &s.events {
        for &start in &s.starts {
            let v = s.limit(e, start)?;
            let mut row = Row::new("constants", e.to_string(), method_tag(e), UNITS_LIMIT);
            row.sum_start = Some(start);
            row.normalization = Some(s.normalization());
            row.value = Some(v.value);
            row.truncation_bound = Some(v.truncation_bound);
            row.terms_used = Some(v.terms_used);
            rows.push(row);
        }
    }
    Ok(rows)
}

type Partial = (Vec<Row>, Option<CliError>);

/// Splits resource errors, which end the run with partial output, from the rest.
fn resource_or_fail(e: Error, mut row: Row, rows: &mut Vec<Row>) -> Result<CliError, CliError> {
    if e.is_resource() {
        row.status = STATUS_RESOURCE.to_string();
        rows.push(row);
        Ok(CliError::Core(e))
    } else {
        Err(CliError::Core(e))
    }
}

fn timed<T>(timings: &mut Vec<Timing>, n: usize, event: &EventSpec, method: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    let seconds = start.elapsed().as_secs_f64();
    log::info!("n={n} {event} {method}: {seconds:.3}s");
    timings.push(Timing {
        n,
        event: event.to_string(),
        method: method.to_string(),
        seconds,
    });
    out
}

fn estimate(s: &Setup, timings: &mut Vec<Timing>) -> Result<Partial, CliError> {
    let scheme = s.scheme()?;
    let mut rows = Vec::new();
    for &n in &s.ns {
        let cfg = s.config(&scheme, n)?;
        for e in &s.events {
            for &m in &s.methods {
                let tag = method_name(m);
                let mut row = Row::new("estimate", e.to_string(), tag, UNITS_SCALED);
                row.n = Some(n);
                row.replicates = Some(s.replicates);
                row.seed = Some(s.seed);
                match timed(timings, n, e, tag, || s.estimate(m, e, &cfg)) {
                    Ok(est) => {
                        row.value = Some(est.value);
                        row.stderr = Some(est.stderr);
                        rows.push(row);
                    }
                    Err(err) => {
                        let err = resource_or_fail(err, row, &mut rows)?;
                        return Ok((rows, Some(err)));
                    }
                }
            }
        }
    }
    Ok((rows, None))
}

fn verify(s: &Setup, timings: &mut Vec<Timing>) -> Result<Partial, CliError> {
    let mut ns = s.ns.clone();
    ns.sort_unstable();
    ns.dedup();
    let largest = *ns.last().expect("the n-grid is never empty");
    let scheme = s.scheme()?;
    let configs = ns.iter().map(|&n| s.config(&scheme, n)).collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for e in &s.events {
        let limits = s
            .starts
            .iter()
            .map(|&start| s.limit(e, start).map(|v| (start, v)))
            .collect::<Result<Vec<_>, _>>()?;
        for &m in &s.methods {
            let tag = method_name(m);
            let mut estimates = Vec::new();
            for (&n, cfg) in ns.iter().zip(&configs) {
                match timed(timings, n, e, tag, || s.estimate(m, e, cfg)) {
                    Ok(est) => estimates.push((n, est)),
                    Err(err) => {
                        let mut row = Row::new("verify", e.to_string(), tag, UNITS_SCALED);
                        row.n = Some(n);
                        let err = resource_or_fail(err, row, &mut rows)?;
                        return Ok((rows, Some(err)));
                    }
                }
            }
            for (start, lim) in &limits {
                let mut best = f64::INFINITY;
                let mut monotone = true;
                for (n, est) in &estimates {
                    let gap = (est.value - lim.value).abs();
                    monotone &= gap <= best;
                    best = best.min(gap);
                    let verdict = if *n < largest {
                        TREND
                    } else if gap <= s.z * est.stderr + s.slack * lim.value.abs() {
                        PASS
                    } else {
                        FAIL
                    };
                    let mut row = Row::new("verify", e.to_string(), tag, UNITS_SCALED);
                    row.n = Some(*n);
                    row.sum_start = Some(*start);
                    row.normalization = Some(s.normalization());
                    row.value = Some(est.value);
                    row.stderr = Some(est.stderr);
                    row.replicates = Some(est.replicates);
                    row.seed = Some(est.seed);
                    row.limit = Some(lim.value);
                    row.truncation_bound = Some(lim.truncation_bound);
                    row.abs_error = Some(gap);
                    row.verdict = Some(verdict.to_string());
                    row.monotone = Some(monotone);
                    rows.push(row);
                }
            }
        }
    }
    Ok((rows, None))
}

/// Exact `P*(event)` beside the naive estimate of the same probability.
fn oracle(s: &Setup, timings: &mut Vec<Timing>) -> Result<Partial, CliError> {
    let scheme = s.scheme()?;
    let mut rows = Vec::new();
    for &n in &s.ns {
        let cfg = s.config(&scheme, n)?;
        for e in &s.events {
            let mut exact_row = Row::new("oracle", e.to_string(), "exact", UNITS_PROBABILITY);
            exact_row.n = Some(n);
            let exact = match timed(timings, n, e, "exact", || enumerate_exact(e, &cfg)) {
                Ok(v) => v,
                Err(err) => {
                    let err = resource_or_fail(err, exact_row, &mut rows)?;
                    return Ok((rows, Some(err)));
                }
            };
            exact_row.value = Some(exact);
            rows.push(exact_row);
            let mut row = Row::new("oracle", e.to_string(), "naive", UNITS_PROBABILITY);
            row.n = Some(n);
            row.replicates = Some(s.replicates);
            row.seed = Some(s.seed);
            match timed(timings, n, e, "naive", || estimate_naive(e, &cfg, s.replicates, s.seed, &s.executor)) {
                Ok(est) => {
                    let r_n = cfg.r_n();
                    row.value = Some(est.value / r_n);
                    row.stderr = Some(est.stderr / r_n);
                    row.limit = Some(exact);
                    row.abs_error = Some((est.value / r_n - exact).abs());
                    rows.push(row);
                }
                Err(err) => {
                    let err = resource_or_fail(err, row, &mut rows)?;
                    return Ok((rows, Some(err)));
                }
            }
        }
    }
    Ok((rows, None))
}
