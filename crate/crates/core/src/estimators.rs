//! Estimators of `r_n P*(N_n ∈ A)` and `r_n E*[F(N_n)]`.
//!
//! # Single-big-jump estimator
//!
//! Write `T = γ_n·plant_floor` and let `E` be the number of vertices in
//! generations `1..=n` whose displacement exceeds `T` in absolute value. On
//! `{E ≥ 1}`,
//!
//! ```text
//! 1 = Σ_v 1{|X_v| > T} / E,
//! ```
//!
//! so for any event or functional `f`, given the genealogy with `V` vertices,
//!
//! ```text
//! E[f 1{E ≥ 1}] = V · P(|X| > T) · E[f / E | v uniform, |X_v| > T].
//! ```
//!
//! One replicate therefore draws a surviving genealogy, picks a vertex `v`
//! uniformly, leaves every other displacement unconditioned, draws `X_v` given
//! `|X_v| > T` and records `r_n V P(|X| > T) f / E`. With fully dependent blocks
//! the whole block of `v` shares the planted value and `E` counts all of its
//! members. Nothing is dropped when `{f ≠ 0} ⊂ {E ≥ 1}`: a position is a sum of
//! `n` displacements, so if every `|X| ≤ T` then every scaled position is at
//! most `n·plant_floor`. The estimator is exact when `n·plant_floor` does not
//! exceed the event's reach (the level `x`, or the support distance of the test
//! functions) and refuses other floors.
//!
//! For count and maximum events the planted value is integrated out: only the
//! subtree below `v` moves with `X_v`, so given everything else the event is
//! `{X_v > h}` for an explicit level `h`, with probability
//! `P(X > h | |X| > T)`.

use rand::{Rng, RngCore};

use crate::displacement::{DisplacementModel, Family};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::functional::EventSpec;
use crate::rng::{Lane, SeedSplitter};
use crate::sim::{check_reach, skeleton, surviving_streams, simulate_streams, traverse, SimConfig};
use crate::stats::{Estimate, Method};

/// Replicate count below which a warning fires when `r_n` dwarfs it.
const NAIVE_WARN_FACTOR: f64 = 1e3;

/// Plain Monte Carlo: `r_n` times the event indicator (or functional) on
/// surviving realizations.
pub fn estimate_naive(
    event: &EventSpec,
    config: &SimConfig,
    replicates: u64,
    seed: u64,
    executor: &Executor,
) -> Result<Estimate> {
    check_replicates(replicates)?;
    check_reach(event, config.floor_delta)?;
    let r_n = config.r_n();
    if r_n > replicates as f64 * NAIVE_WARN_FACTOR {
        log::warn!(
            "r_n = {r_n:.3e} exceeds {NAIVE_WARN_FACTOR} × {replicates} replicates; \
             naive Monte Carlo will rarely see the event, use the single-big-jump estimator"
        );
    }
    let splitter = SeedSplitter::new(seed);
    let outcomes = executor.map(replicates, |rep| -> Result<f64> {
        let mut off = splitter.stream(rep, Lane::Offspring);
        let mut disp = splitter.stream(rep, Lane::Displacement);
        let realization = if config.condition_on_survival {
            surviving_streams(config, &mut off, &mut disp)?
        } else {
            simulate_streams(config, &mut off, &mut disp)?
        };
        Ok(r_n * event.evaluate(&realization.exceedances))
    });
    let values = outcomes.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_contributions(&values, Method::Naive, seed))
}

fn check_replicates(replicates: u64) -> Result<()> {
    if replicates == 0 {
        return Err(Error::Domain("at least one replicate is required".into()));
    }
    Ok(())
}

/// The largest exact planting floor for an event at generation `n`.
pub fn default_plant_floor(event: &EventSpec, n: usize) -> f64 {
    event.reach() / n.max(1) as f64
}

/// Single-big-jump importance sampling; see the module documentation.
/// `plant_floor` defaults to [`default_plant_floor`].
pub fn estimate_sbj(
    event: &EventSpec,
    config: &SimConfig,
    replicates: u64,
    plant_floor: Option<f64>,
    seed: u64,
    executor: &Executor,
) -> Result<Estimate> {
    check_replicates(replicates)?;
    check_reach(event, config.floor_delta)?;
    let model = &config.displacement;
    if !model.is_pareto() {
        return Err(Error::UnsupportedFamily {
            family: model.family().name(),
            operation: "single-big-jump planting",
        });
    }
    let n = config.n;
    if n == 0 {
        return Err(Error::Contract("planting needs at least one generation".into()));
    }
    let floor = plant_floor.unwrap_or_else(|| default_plant_floor(event, n));
    if !(floor > 0.0) || !floor.is_finite() {
        return Err(Error::Domain(format!("plant floor {floor} must be positive")));
    }
    if floor * n as f64 > event.reach() * (1.0 + 1e-12) {
        return Err(Error::Contract(format!(
            "plant floor {floor} exceeds reach/n = {}; the planted decomposition would drop mass",
            event.reach() / n as f64
        )));
    }
    let gamma = config.gamma_n();
    let threshold = gamma * floor;
    let tail = model.tail_prob(threshold);
    let r_n = config.r_n();
    let dependent = model.family() == Family::FullyDependentPareto;
    let splitter = SeedSplitter::new(seed);
    let outcomes = executor.map(replicates, |rep| -> Result<f64> {
        let mut off = splitter.stream(rep, Lane::Offspring);
        let mut disp = splitter.stream(rep, Lane::Displacement);
        let mut select = splitter.stream(rep, Lane::Selection);
        let mut aux = splitter.stream(rep, Lane::Auxiliary);
        let replay = match surviving_skeleton(config, &mut off)? {
            Some(r) => r,
            None => return Ok(0.0),
        };
        let (mut genealogy, vertices) = replay;
        let target = select.random_range(0..vertices);
        let planted = planted_pass(
            config,
            event,
            threshold,
            dependent,
            target,
            &mut genealogy,
            &mut disp,
            &mut aux,
        )?;
        Ok(r_n * vertices as f64 * tail * planted)
    });
    let values = outcomes.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_contributions(&values, Method::SingleBigJump, seed))
}

/// Draws genealogies until one survives to generation `n` (or just one when the
/// configuration is unconditioned) and returns an offspring stream positioned
/// to replay it, with its vertex count. `None` for an extinct unconditioned draw.
fn surviving_skeleton<R: RngCore + Clone>(config: &SimConfig, off: &mut R) -> Result<Option<(R, u64)>> {
    let attempts = if config.condition_on_survival {
        config.survival_budget()
    } else {
        1
    };
    for _ in 0..attempts {
        let snapshot = off.clone();
        let stats = skeleton(&config.offspring, config.n, config.particle_cap, off)?;
        if stats.z_n > 0 {
            return Ok(Some((snapshot, stats.vertices)));
        }
        if !config.condition_on_survival {
            return Ok(None);
        }
    }
    Err(Error::RejectionBudget {
        attempts,
        acceptance: 1.0 - config.extinction_probability(),
    })
}

/// Replays the genealogy with fresh displacements, plants at vertex `target`
/// and returns `P(event | everything but the planted value) / E` (or, for HLS
/// functionals, `F / E` at one planted draw).
#[allow(clippy::too_many_arguments)]
fn planted_pass<RO: Rng, RD: Rng, RA: Rng>(
    config: &SimConfig,
    event: &EventSpec,
    threshold: f64,
    dependent: bool,
    target: u64,
    genealogy: &mut RO,
    disp: &mut RD,
    aux: &mut RA,
) -> Result<f64> {
    let model = &config.displacement;
    let gamma = config.gamma_n();
    let floor = config.floor_delta;
    let mut exceed_other = 0u64;
    let mut planted_size = 0u64;
    // positions in absolute units
    let level = match event {
        EventSpec::MaxExceeds { x } | EventSpec::CountAtLeast { x, .. } => x * gamma,
        EventSpec::Hls(_) => f64::NAN,
    };
    let mut outside_hits = 0usize;
    let mut outside_points: Vec<f64> = Vec::new();
    let mut inside: Vec<f64> = Vec::new();
    let hls = matches!(event, EventSpec::Hls(_));
    traverse(
        &config.offspring,
        model,
        config.n,
        config.particle_cap,
        genealogy,
        disp,
        |_, cursor, block, marks| {
            let len = block.len() as u64;
            if cursor <= target && target < cursor + len {
                let i = (target - cursor) as usize;
                if dependent {
                    block.iter_mut().for_each(|b| *b = 0.0);
                    marks.iter_mut().for_each(|m| *m = true);
                    planted_size = len;
                } else {
                    for (j, b) in block.iter().enumerate() {
                        if j != i && b.abs() > threshold {
                            exceed_other += 1;
                        }
                    }
                    block[i] = 0.0;
                    marks[i] = true;
                    planted_size = 1;
                }
            } else {
                exceed_other += block.iter().filter(|b| b.abs() > threshold).count() as u64;
            }
        },
        |pos, marked| {
            if marked {
                inside.push(pos);
            } else if hls {
                let scaled = pos / gamma;
                if scaled.abs() > floor {
                    outside_points.push(scaled);
                }
            } else if pos > level {
                outside_hits += 1;
            }
        },
    )?;
    debug_assert!(planted_size > 0, "target vertex {target} was never created");
    let weight = 1.0 / (exceed_other + planted_size) as f64;
    let value = match event {
        EventSpec::MaxExceeds { .. } => conditional_count_prob(model, threshold, level, 1, outside_hits, &mut inside)?,
        EventSpec::CountAtLeast { k, .. } => {
            conditional_count_prob(model, threshold, level, *k, outside_hits, &mut inside)?
        }
        EventSpec::Hls(f) => {
            let jump = model.conditional_exceedance_sample(threshold, aux)?;
            outside_points.extend(
                inside
                    .iter()
                    .map(|b| (b + jump) / gamma)
                    .filter(|s| s.abs() > floor),
            );
            f.eval(&outside_points)
        }
    };
    Ok(weight * value)
}

/// `P(#{points > level} ≥ k)` when `outside` points already exceed the level and
/// the `inside` base positions all move by one planted value `X` with
/// `|X| > threshold`.
fn conditional_count_prob(
    model: &DisplacementModel,
    threshold: f64,
    level: f64,
    k: usize,
    outside: usize,
    inside: &mut [f64],
) -> Result<f64> {
    if outside >= k {
        return Ok(1.0);
    }
    let need = k - outside;
    if need > inside.len() {
        return Ok(0.0);
    }
    // the need-th largest base position decides
    let idx = need - 1;
    inside.select_nth_unstable_by(idx, |a, b| b.total_cmp(a));
    model.conditional_upper_prob(threshold, level - inside[idx])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::OffspringLaw;
    use crate::scaling::{GammaSpec, ScalingScheme};

    fn pareto_config(law: &str, n: usize, dependent: bool) -> SimConfig {
        let law: OffspringLaw = law.parse().unwrap();
        let model = if dependent {
            DisplacementModel::fully_dependent_pareto(2.0, 1.0, 1.0).unwrap()
        } else {
            DisplacementModel::iid_pareto(2.0, 1.0, 1.0).unwrap()
        };
        let scheme = ScalingScheme::build(2.0, law.mean(), &model, GammaSpec::Geometric { c: 1.0, g: 2.0 }, n).unwrap();
        SimConfig::new(law, model, scheme, n).unwrap()
    }

    #[test]
    fn conditional_count_cases() {
        let model = DisplacementModel::iid_pareto(2.0, 1.0, 1.0).unwrap();
        let mut inside = vec![0.0, 5.0, -3.0];
        assert_eq!(conditional_count_prob(&model, 2.0, 10.0, 2, 2, &mut inside).unwrap(), 1.0);
        assert_eq!(conditional_count_prob(&model, 2.0, 10.0, 5, 1, &mut inside).unwrap(), 0.0);
        // need 2 from inside: second largest base is 0, so X > 10 given |X| > 2
        let p = conditional_count_prob(&model, 2.0, 10.0, 2, 0, &mut inside).unwrap();
        assert!((p - 0.04).abs() < 1e-15);
    }

    #[test]
    fn plant_floor_contract() {
        let cfg = pareto_config("2:1", 4, false);
        let e = EventSpec::max_exceeds(1.0).unwrap();
        assert!(matches!(
            estimate_sbj(&e, &cfg, 10, Some(0.5), 1, &Executor::Sequential),
            Err(Error::Contract(_))
        ));
        assert!(estimate_sbj(&e, &cfg, 10, Some(0.25), 1, &Executor::Sequential).is_ok());
        assert!(estimate_naive(&e, &cfg, 0, 1, &Executor::Sequential).is_err());
    }

    #[test]
    fn impossible_event_is_zero() {
        let law: OffspringLaw = "2:1".parse().unwrap();
        let model: DisplacementModel = "table:-1=0.5,1=0.5".parse().unwrap();
        let reference = DisplacementModel::iid_pareto(2.0, 1.0, 1.0).unwrap();
        let scheme = ScalingScheme::build(2.0, 2.0, &reference, GammaSpec::Geometric { c: 0.1, g: 2.0 }, 2).unwrap();
        let cfg = SimConfig::new(law, model, scheme, 2).unwrap();
        // positions are at most 2 = 5·γ_2
        let e = EventSpec::max_exceeds(5.0).unwrap();
        let est = estimate_naive(&e, &cfg, 1000, 3, &Executor::Sequential).unwrap();
        assert_eq!((est.value, est.stderr), (0.0, 0.0));
    }

    #[test]
    fn sbj_matches_naive_on_small_instance() {
        for dependent in [false, true] {
            let cfg = pareto_config("0:0.25,1:0.25,3:0.5", 3, dependent).with_floor(0.1).unwrap();
            for e in [
                EventSpec::max_exceeds(0.8).unwrap(),
                EventSpec::count_at_least(0.5, 2).unwrap(),
                "hls:g1=ramp(0.5,1),g2=ramp(0.6,2),eps1=0.3,eps2=0.2".parse().unwrap(),
            ] {
                let naive = estimate_naive(&e, &cfg, 200_000, 11, &Executor::Sequential).unwrap();
                let sbj = estimate_sbj(&e, &cfg, 200_000, None, 12, &Executor::Sequential).unwrap();
                let z = (naive.value - sbj.value).abs() / (naive.stderr.powi(2) + sbj.stderr.powi(2)).sqrt();
                assert!(z < 4.0, "{e} dependent={dependent}: {naive:?} vs {sbj:?}");
            }
        }
    }
}
