//! Streaming simulation of one branching-random-walk realization.
//!
//! The tree is explored depth first with one frame per generation, so memory
//! is `O(n · max offspring)` however large `Z_n` grows. Offspring counts and
//! displacements come from two separate random streams; replaying the offspring
//! stream reproduces the same genealogy, which the planting estimator relies on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::displacement::DisplacementModel;
use crate::error::{Error, Result};
use crate::functional::{EventSpec, TestFunction};
use crate::offspring::OffspringLaw;
use crate::scaling::ScalingScheme;

pub const DEFAULT_PARTICLE_CAP: u64 = 100_000_000;
pub const DEFAULT_FLOOR: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub offspring: OffspringLaw,
    pub displacement: DisplacementModel,
    pub scheme: ScalingScheme,
    pub n: usize,
    /// Scaled generation-`n` positions with `|S/γ_n| > floor_delta` are retained.
    pub floor_delta: f64,
    /// Maximum node visits per realization.
    pub particle_cap: u64,
    pub condition_on_survival: bool,
    gamma_n: f64,
    extinction: f64,
}

impl SimConfig {
    pub fn new(
        offspring: OffspringLaw,
        displacement: DisplacementModel,
        scheme: ScalingScheme,
        n: usize,
    ) -> Result<Self> {
        let gamma_n = scheme.gamma(n)?;
        if (scheme.mu() - offspring.mean()).abs() > 1e-12 * offspring.mean() {
            return Err(Error::Contract(format!(
                "scheme built for μ = {} but the offspring mean is {}",
                scheme.mu(),
                offspring.mean()
            )));
        }
        let extinction = offspring.extinction_probability(1e-12);
        let cfg = Self {
            offspring,
            displacement,
            scheme,
            n,
            floor_delta: DEFAULT_FLOOR,
            particle_cap: DEFAULT_PARTICLE_CAP,
            condition_on_survival: true,
            gamma_n,
            extinction,
        };
        cfg.warn_if_cap_tight();
        Ok(cfg)
    }

    pub fn with_floor(mut self, floor_delta: f64) -> Result<Self> {
        if !(floor_delta > 0.0) || !floor_delta.is_finite() {
            return Err(Error::Domain(format!("floor {floor_delta} must be positive")));
        }
        self.floor_delta = floor_delta;
        Ok(self)
    }

    pub fn with_particle_cap(mut self, cap: u64) -> Self {
        self.particle_cap = cap;
        self.warn_if_cap_tight();
        self
    }

    pub fn conditioned(mut self, on_survival: bool) -> Self {
        self.condition_on_survival = on_survival;
        self
    }

    /// Same configuration at another generation of the same scheme.
    pub fn at_generation(&self, n: usize) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.gamma_n = self.scheme.gamma(n)?;
        cfg.n = n;
        cfg.warn_if_cap_tight();
        Ok(cfg)
    }

    pub fn gamma_n(&self) -> f64 {
        self.gamma_n
    }

    pub fn r_n(&self) -> f64 {
        self.scheme.r(self.n).expect("n validated at construction")
    }

    pub fn extinction_probability(&self) -> f64 {
        self.extinction
    }

    /// Retry budget for survival conditioning, `10^6 / (1 - p_e)`.
    pub fn survival_budget(&self) -> u64 {
        let s = 1.0 - self.extinction;
        if s <= 0.0 {
            1_000_000
        } else {
            (1e6 / s).ceil().min(u64::MAX as f64 / 2.0) as u64
        }
    }

    fn warn_if_cap_tight(&self) {
        let expected: f64 = (0..=self.n).map(|l| self.offspring.mean().powi(l as i32)).sum();
        if expected > self.particle_cap as f64 / 10.0 {
            log::warn!(
                "expected {expected:.3e} node visits at n = {} against a cap of {}",
                self.n,
                self.particle_cap
            );
        }
    }
}

/// Summary of one simulated tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub survived: bool,
    pub z_n: u64,
    /// Rightmost generation-`n` position; `None` when extinct.
    pub m_n: Option<f64>,
    /// Retained scaled positions `S/γ_n` with `|S/γ_n| > floor`.
    pub exceedances: Vec<f64>,
    pub n: usize,
    pub gamma_n: f64,
    pub floor: f64,
    pub visited: u64,
    /// Trees drawn to obtain this one (1 unless conditioned on survival).
    pub attempts: u64,
}

/// Restriction of the scaled generation-`n` point measure to `{|x| > floor}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceSketch {
    floor: f64,
    points: Vec<f64>,
}

impl ExceedanceSketch {
    pub fn new(floor: f64, points: Vec<f64>) -> Self {
        let points = points.into_iter().filter(|p| p.abs() > floor).collect();
        Self { floor, points }
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn total_mass(&self) -> usize {
        self.points.len()
    }

    pub fn count_above(&self, x: f64) -> Result<usize> {
        if x < self.floor {
            return Err(Error::Contract(format!(
                "level {x} lies inside the retention floor {}",
                self.floor
            )));
        }
        Ok(self.points.iter().filter(|p| **p > x).count())
    }

    pub fn integral(&self, g: &TestFunction) -> Result<f64> {
        if g.support_distance() < self.floor {
            return Err(Error::Contract(format!(
                "test function is supported within {} of zero, inside the floor {}",
                g.support_distance(),
                self.floor
            )));
        }
        Ok(g.integrate(&self.points))
    }

    pub fn evaluate(&self, event: &EventSpec) -> Result<f64> {
        check_reach(event, self.floor)?;
        Ok(event.evaluate(&self.points))
    }
}

pub(crate) fn check_reach(event: &EventSpec, floor: f64) -> Result<()> {
    if event.reach() < floor {
        return Err(Error::Contract(format!(
            "event `{event}` reaches down to {} but only atoms above {floor} are retained",
            event.reach()
        )));
    }
    Ok(())
}

/// Restricts a realization's retained atoms to `{|x| > floor}`.
pub fn point_measure(
    realization: &Realization,
    scheme: &ScalingScheme,
    n: usize,
    floor: f64,
) -> Result<ExceedanceSketch> {
    let gamma = scheme.gamma(n)?;
    if realization.n != n || (realization.gamma_n - gamma).abs() > 1e-12 * gamma.max(1e-300) {
        return Err(Error::Contract(format!(
            "realization was produced at n = {} with γ = {}, not n = {n} with γ = {gamma}",
            realization.n, realization.gamma_n
        )));
    }
    if floor < realization.floor {
        return Err(Error::Contract(format!(
            "floor {floor} is below the simulation floor {}",
            realization.floor
        )));
    }
    Ok(ExceedanceSketch::new(floor, realization.exceedances.clone()))
}

/// One exact draw of the branching random walk to generation `config.n`.
pub fn simulate<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<Realization> {
    let mut rng = rng;
    let mut off = ChaCha8Rng::from_rng(&mut rng);
    let mut disp = ChaCha8Rng::from_rng(&mut rng);
    simulate_streams(config, &mut off, &mut disp)
}

/// Draws until `Z_n > 0`; the result follows the law conditioned on survival to `n`.
pub fn simulate_surviving<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<Realization> {
    let mut rng = rng;
    let mut off = ChaCha8Rng::from_rng(&mut rng);
    let mut disp = ChaCha8Rng::from_rng(&mut rng);
    surviving_streams(config, &mut off, &mut disp)
}

pub(crate) fn surviving_streams<RO: Rng + ?Sized, RD: Rng + ?Sized>(
    config: &SimConfig,
    off: &mut RO,
    disp: &mut RD,
) -> Result<Realization> {
    let budget = config.survival_budget();
    for attempt in 1..=budget {
        let mut r = simulate_streams(config, off, disp)?;
        if r.survived {
            r.attempts = attempt;
            return Ok(r);
        }
    }
    Err(Error::RejectionBudget {
        attempts: budget,
        acceptance: 1.0 - config.extinction,
    })
}

pub(crate) fn simulate_streams<RO: Rng + ?Sized, RD: Rng + ?Sized>(
    config: &SimConfig,
    off: &mut RO,
    disp: &mut RD,
) -> Result<Realization> {
    let gamma = config.gamma_n;
    let floor = config.floor_delta;
    let mut max = f64::NEG_INFINITY;
    let mut exceedances = Vec::new();
    let stats = traverse(
        &config.offspring,
        &config.displacement,
        config.n,
        config.particle_cap,
        off,
        disp,
        |_, _, _, _| {},
        |pos, _| {
            max = max.max(pos);
            let scaled = pos / gamma;
            if scaled.abs() > floor {
                exceedances.push(scaled);
            }
        },
    )?;
    Ok(Realization {
        survived: stats.z_n > 0,
        z_n: stats.z_n,
        m_n: (stats.z_n > 0).then_some(max),
        exceedances,
        n: config.n,
        gamma_n: gamma,
        floor,
        visited: stats.visited,
        attempts: 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(crate) struct TraversalStats {
    /// Vertices in generations `1..=n`.
    pub vertices: u64,
    pub z_n: u64,
    pub visited: u64,
}

struct Frame {
    pos: f64,
    mark: bool,
    block: Vec<f64>,
    marks: Vec<bool>,
    next: usize,
}

/// Depth-first walk of one tree.
///
/// `on_block(depth, cursor, block, marks)` sees each freshly drawn displacement
/// block of a node at `depth`, where `cursor` counts the vertices created by
/// earlier blocks; it may overwrite displacements and set child marks (marks are
/// inherited by descendants). `on_leaf(position, mark)` is called for each
/// generation-`n` particle.
#[allow(clippy::too_many_arguments)]
pub(crate) fn traverse<RO, RD, B, L>(
    law: &OffspringLaw,
    model: &DisplacementModel,
    n: usize,
    cap: u64,
    off: &mut RO,
    disp: &mut RD,
    mut on_block: B,
    mut on_leaf: L,
) -> Result<TraversalStats>
where
    RO: Rng + ?Sized,
    RD: Rng + ?Sized,
    B: FnMut(usize, u64, &mut [f64], &mut [bool]),
    L: FnMut(f64, bool),
{
    let mut stats = TraversalStats {
        visited: 1,
        ..Default::default()
    };
    if n == 0 {
        on_leaf(0.0, false);
        stats.z_n = 1;
        return Ok(stats);
    }
    let width = law.max_support();
    let mut frames: Vec<Frame> = (0..n)
        .map(|_| Frame {
            pos: 0.0,
            mark: false,
            block: Vec::with_capacity(width),
            marks: Vec::with_capacity(width),
            next: 0,
        })
        .collect();

    let mut expand = |f: &mut Frame, depth: usize, cursor: &mut u64| {
        let c = law.sample(off);
        model.fill_children(c, disp, &mut f.block);
        f.marks.clear();
        f.marks.resize(c, f.mark);
        f.next = 0;
        on_block(depth, *cursor, &mut f.block, &mut f.marks);
        *cursor += c as u64;
    };

    let mut cursor = 0u64;
    expand(&mut frames[0], 0, &mut cursor);
    let mut depth = 0usize;
    loop {
        let f = &mut frames[depth];
        if f.next < f.block.len() {
            let i = f.next;
            f.next += 1;
            let pos = f.pos + f.block[i];
            let mark = f.marks[i];
            stats.vertices += 1;
            stats.visited += 1;
            if stats.visited > cap {
                return Err(Error::ParticleCap {
                    cap,
                    visited: stats.visited,
                    partial_z_n: stats.z_n,
                });
            }
            if depth + 1 == n {
                on_leaf(pos, mark);
                stats.z_n += 1;
            } else {
                depth += 1;
                let child = &mut frames[depth];
                child.pos = pos;
                child.mark = mark;
                expand(child, depth, &mut cursor);
            }
        } else if depth == 0 {
            break;
        } else {
            depth -= 1;
        }
    }
    Ok(stats)
}

/// Genealogy only: consumes the offspring stream exactly as [`traverse`] does.
pub(crate) fn skeleton<RO: Rng + ?Sized>(
    law: &OffspringLaw,
    n: usize,
    cap: u64,
    off: &mut RO,
) -> Result<TraversalStats> {
    let mut stats = TraversalStats {
        visited: 1,
        ..Default::default()
    };
    if n == 0 {
        stats.z_n = 1;
        return Ok(stats);
    }
    if let Some(k) = law.point_mass() {
        // deterministic genealogy: closed form, no draws are consumed either way
        let k = k as u64;
        let mut level = 1u64;
        for _ in 0..n {
            level = level.checked_mul(k).ok_or(Error::ParticleCap {
                cap,
                visited: u64::MAX,
                partial_z_n: 0,
            })?;
            stats.vertices += level;
        }
        stats.visited += stats.vertices;
        if stats.visited > cap {
            return Err(Error::ParticleCap {
                cap,
                visited: stats.visited,
                partial_z_n: 0,
            });
        }
        stats.z_n = level;
        return Ok(stats);
    }
    let mut remaining = vec![0usize; n];
    remaining[0] = law.sample(off);
    let mut depth = 0usize;
    loop {
        if remaining[depth] > 0 {
            remaining[depth] -= 1;
            stats.vertices += 1;
            stats.visited += 1;
            if stats.visited > cap {
                return Err(Error::ParticleCap {
                    cap,
                    visited: stats.visited,
                    partial_z_n: stats.z_n,
                });
            }
            if depth + 1 == n {
                stats.z_n += 1;
            } else {
                depth += 1;
                remaining[depth] = law.sample(off);
            }
        } else if depth == 0 {
            break;
        } else {
            depth -= 1;
        }
    }
    Ok(stats)
}
