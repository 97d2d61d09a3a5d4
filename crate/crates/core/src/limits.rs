//! Limit constants of `r_n P*(N_n ∈ ·)`.
//!
//! Every series here has terms bounded by `C·μ^(-l)`, so the discarded tail
//! after `L` terms is at most `C·μ^(-L)/(1 - μ^(-1))`. Values are computed at
//! unit scale (`x = 1`, or the test functions rescaled to support distance 1)
//! and multiplied by the exact power of the scale, which makes
//! `value(a·x) = a^(-α)·value(x)` hold to rounding.

use rand::Rng;

use crate::displacement::{DisplacementModel, Family};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::functional::{HlsFunctional, TestFunction};
use crate::offspring::OffspringLaw;
use crate::quadrature::adaptive_simpson;
use crate::rng::{Lane, SeedSplitter};
use crate::stats::{compensated_sum, Accumulator, Estimate, Method};

/// Generation sizes at or above this are lumped when evaluating HLS integrals.
pub const HLS_SIZE_CAP: usize = 4096;
/// Largest `k` handled by exact capped convolution.
pub const COUNT_CAP_LIMIT: usize = 1_000_000;
const MAX_TERMS: usize = 200_000;
const EXTINCTION_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// First series index, 0 or 1.
    pub sum_start: usize,
    /// Multiply by `1 - p_e` instead of dividing by it.
    pub remark_normalization: bool,
    /// Target for the discarded series tail at unit scale.
    pub tol: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            sum_start: 0,
            remark_normalization: false,
            tol: 1e-12,
        }
    }
}

impl SeriesOptions {
    pub fn with_sum_start(mut self, start: usize) -> Self {
        self.sum_start = start;
        self
    }

    pub fn with_remark_normalization(mut self, on: bool) -> Self {
        self.remark_normalization = on;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.sum_start > 1 {
            return Err(Error::Domain(format!(
                "series start {} must be 0 or 1",
                self.sum_start
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Domain(format!("tolerance {} must be positive", self.tol)));
        }
        Ok(())
    }

    fn normalization(&self, p_e: f64) -> f64 {
        if self.remark_normalization {
            1.0 - p_e
        } else {
            1.0 / (1.0 - p_e)
        }
    }
}

/// A deterministic constant with a bound on everything that was not summed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitValue {
    pub value: f64,
    pub truncation_bound: f64,
    pub terms_used: usize,
}

impl LimitValue {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            truncation_bound: 0.0,
            terms_used: 0,
        }
    }

    fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            truncation_bound: self.truncation_bound * factor,
            terms_used: self.terms_used,
        }
    }
}

struct Gw {
    mu: f64,
    p_e: f64,
}

fn supercritical(law: &OffspringLaw) -> Result<Gw> {
    let mu = law.mean();
    if !(mu > 1.0) {
        return Err(Error::InvalidRegime(format!(
            "limit constants need μ > 1, got {mu}"
        )));
    }
    Ok(Gw {
        mu,
        p_e: law.extinction_probability(EXTINCTION_TOL),
    })
}

fn check_tail(alpha: f64, p: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("tail index {alpha} must be positive")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("tail balance {p} must lie in [0, 1]")));
    }
    Ok(())
}

fn check_level(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("level {x} must be positive")));
    }
    Ok(())
}

/// `P(Z_l > 0)` for `l = 0, 1, ...` in order.
struct Survival<'a> {
    law: &'a OffspringLaw,
    q: f64,
    l: usize,
}

impl<'a> Survival<'a> {
    fn new(law: &'a OffspringLaw) -> Self {
        Self { law, q: 0.0, l: 0 }
    }

    fn at(&mut self, l: usize) -> f64 {
        debug_assert!(l >= self.l);
        while self.l < l {
            self.q = self.law.pgf(self.q).expect("iterates stay in [0, 1]");
            self.l += 1;
        }
        1.0 - self.q
    }
}

/// Sums `term(l)` for `l ≥ start` until the tail bound `c·μ^(-L)/(1 - μ^(-1))`
/// is below `tol` and below rounding of the partial sum. `term` returns the
/// term and any additional error committed while evaluating it.
fn series<T>(start: usize, mu: f64, c: f64, tol: f64, mut term: T) -> Result<LimitValue>
where
    T: FnMut(usize) -> Result<(f64, f64)>,
{
    let ln_mu = mu.ln();
    let ratio = 1.0 / (1.0 - 1.0 / mu);
    let mut sum = Accumulator::default();
    let mut extra = Accumulator::default();
    let mut l = start;
    loop {
        let (t, e) = term(l)?;
        sum.add(t);
        extra.add(e);
        l += 1;
        let used = l - start;
        let tail = c * (-(l as f64) * ln_mu).exp() * ratio;
        let partial = sum.total();
        let settled = tail <= tol && (tail <= f64::EPSILON * 0.125 * partial.abs() || tail <= 1e-3 * tol);
        if settled || used >= MAX_TERMS {
            if !settled {
                log::warn!("series stopped after {MAX_TERMS} terms with tail bound {tail:.3e}");
            }
            return Ok(LimitValue {
                value: partial,
                truncation_bound: tail + extra.total(),
                terms_used: used,
            });
        }
    }
}

/// `C(x) = p x^(-α) (1-p_e)^(-1) Σ_l μ^(-l) P(Z_l > 0)`: the limit of
/// `r_n P*(M_n > x γ_n)` for i.i.d. Pareto displacements.
pub fn c_rightmost_iid(
    alpha: f64,
    p: f64,
    law: &OffspringLaw,
    x: f64,
    opts: &SeriesOptions,
) -> Result<LimitValue> {
    check_tail(alpha, p)?;
    check_level(x)?;
    opts.validate()?;
    let gw = supercritical(law)?;
    if p == 0.0 {
        return Ok(LimitValue::zero());
    }
    let norm = opts.normalization(gw.p_e);
    let c = norm * p;
    let mut surv = Survival::new(law);
    let unit = series(opts.sum_start, gw.mu, c, opts.tol, |l| {
        Ok((c * gw.mu.powf(-(l as f64)) * surv.at(l), 0.0))
    })?;
    Ok(unit.scaled(x.powf(-alpha)))
}

/// `m*({ξ : ξ(x, ∞) ≥ k})` for i.i.d. Pareto displacements:
/// `p x^(-α) (1-p_e)^(-1) Σ_l μ^(-l) P(Z_l ≥ k)`.
pub fn mstar_iid_count(
    alpha: f64,
    p: f64,
    law: &OffspringLaw,
    x: f64,
    k: usize,
    opts: &SeriesOptions,
) -> Result<LimitValue> {
    if k == 0 {
        return Err(Error::Domain("count threshold k must be at least 1".into()));
    }
    if k == 1 {
        return c_rightmost_iid(alpha, p, law, x, opts);
    }
    check_tail(alpha, p)?;
    check_level(x)?;
    opts.validate()?;
    check_count_cap(k)?;
    let gw = supercritical(law)?;
    if p == 0.0 {
        return Ok(LimitValue::zero());
    }
    let c = opts.normalization(gw.p_e) * p;
    let mut laws = law.capped_generation_laws(k).enumerate();
    let unit = series(opts.sum_start, gw.mu, c, opts.tol, |l| {
        let at_least = tail_at(&mut laws, l, k);
        Ok((c * gw.mu.powf(-(l as f64)) * at_least, 0.0))
    })?;
    Ok(unit.scaled(x.powf(-alpha)))
}

fn check_count_cap(k: usize) -> Result<()> {
    if k > COUNT_CAP_LIMIT {
        return Err(Error::Domain(format!(
            "k = {k} exceeds the exact convolution limit {COUNT_CAP_LIMIT}"
        )));
    }
    Ok(())
}

/// Advances a capped-law iterator to generation `l` and returns the lumped entry
/// `P(Z_l ≥ cap)`.
fn tail_at<I>(laws: &mut I, l: usize, cap: usize) -> f64
where
    I: Iterator<Item = (usize, Vec<f64>)>,
{
    loop {
        let (i, dist) = laws.next().expect("capped laws are unbounded");
        if i == l {
            return dist.get(cap).copied().unwrap_or(0.0);
        }
    }
}

/// The rightmost-position constant for any displacement family with known
/// limit-measure masses `λ(∪_{s∈G} V_s)`:
/// `x^(-α) (1-p_e)^(-1) Σ_l μ^(-(l+1)) E[Σ_{G≠∅} λ(∪_G V_s) s_l^|G| (1-s_l)^(U-|G|)]`
/// with `s_l = P(Z_l > 0)`. The subset sum only depends on `|G|`, so it becomes a
/// binomial expectation over the number of surviving children.
pub fn c_rightmost_general(
    model: &DisplacementModel,
    law: &OffspringLaw,
    x: f64,
    opts: &SeriesOptions,
) -> Result<LimitValue> {
    check_level(x)?;
    opts.validate()?;
    let width = law.max_support();
    let lambda: Vec<f64> = (0..=width)
        .map(|j| model.lambda_union_mass(j))
        .collect::<Result<_>>()?;
    let alpha = model.alpha().expect("families with λ masses are Pareto");
    let p = model.tail_balance().expect("families with λ masses are Pareto");
    let gw = supercritical(law)?;
    if p == 0.0 {
        return Ok(LimitValue::zero());
    }
    let norm = opts.normalization(gw.p_e);
    // λ(∪_G V_s) ≤ |G| p, so each term is at most norm·p·μ^(-l)
    let c = norm * p;
    let mut surv = Survival::new(law);
    let unit = series(opts.sum_start, gw.mu, c, opts.tol, |l| {
        let s = surv.at(l);
        let inner: f64 = (1..=width)
            .map(|u| {
                let pu = law.prob(u);
                if pu == 0.0 {
                    return 0.0;
                }
                pu * (1..=u).map(|j| binomial_pmf(u, j, s) * lambda[j]).sum::<f64>()
            })
            .sum();
        Ok((norm * gw.mu.powf(-((l + 1) as f64)) * inner, 0.0))
    })?;
    Ok(unit.scaled(x.powf(-alpha)))
}

/// Count-event masses `m*({ξ : ξ(x, ∞) ≥ k})` for both Pareto families. With a
/// fully dependent block every surviving child of the jumping vertex is pushed by
/// the same amount, and the descendants of `U` children after `l` more
/// generations form a copy of `Z_{l+1}`, which gives
/// `p x^(-α) (1-p_e)^(-1) Σ_l μ^(-(l+1)) P(Z_{l+1} ≥ k)`.
pub fn mstar_general_count(
    model: &DisplacementModel,
    law: &OffspringLaw,
    x: f64,
    k: usize,
    opts: &SeriesOptions,
) -> Result<LimitValue> {
    let unsupported = || Error::UnsupportedFamily {
        family: model.family().name(),
        operation: "limit-measure masses",
    };
    let alpha = model.alpha().ok_or_else(unsupported)?;
    let p = model.tail_balance().ok_or_else(unsupported)?;
    match model.family() {
        Family::IidPareto => mstar_iid_count(alpha, p, law, x, k, opts),
        Family::FullyDependentPareto => {
            if k == 0 {
                return Err(Error::Domain("count threshold k must be at least 1".into()));
            }
            check_level(x)?;
            opts.validate()?;
            check_count_cap(k)?;
            let gw = supercritical(law)?;
            if p == 0.0 {
                return Ok(LimitValue::zero());
            }
            let c = opts.normalization(gw.p_e) * p;
            let mut laws = law.capped_generation_laws(k).enumerate();
            let unit = series(opts.sum_start, gw.mu, c, opts.tol, |l| {
                let at_least = tail_at(&mut laws, l + 1, k);
                Ok((c * gw.mu.powf(-((l + 1) as f64)) * at_least, 0.0))
            })?;
            Ok(unit.scaled(x.powf(-alpha)))
        }
        Family::DiscreteTable => Err(unsupported()),
    }
}

fn binomial_pmf(u: usize, j: usize, s: f64) -> f64 {
    let mut coef = 1.0f64;
    for i in 0..j {
        coef = coef * (u - i) as f64 / (i + 1) as f64;
    }
    coef * s.powi(j as i32) * (1.0 - s).powi((u - j) as i32)
}

/// `m*(F) = Σ_l μ^(-l) (1-p_e)^(-1) Σ_{z≥1} P(Z_l = z) J(z)` for i.i.d. Pareto
/// displacements, with `J(z) = ∫ Π_i (1 - exp(-(z g_i(y) - ε_i)_+)) ν_α(dy)`.
///
/// `J` is integrated by adaptive Simpson on the pieces where the integrand is
/// smooth; the constant outer tails are exact. Generation sizes `≥ HLS_SIZE_CAP`
/// are lumped and bracketed by `J(cap) ≤ J(z) ≤ J(max Z_l)`; the midpoint is
/// used and the half-width joins the truncation bound together with the
/// quadrature error estimates.
pub fn mstar_iid_hls(
    f: &HlsFunctional,
    law: &OffspringLaw,
    alpha: f64,
    p: f64,
    opts: &SeriesOptions,
) -> Result<LimitValue> {
    check_tail(alpha, p)?;
    opts.validate()?;
    let gw = supercritical(law)?;
    if f.g1.sup() == 0.0 || f.g2.sup() == 0.0 {
        return Ok(LimitValue::zero());
    }
    let scale = f.g1.support_distance().max(f.g2.support_distance());
    let unit = HlsIntegrand::new(f, scale, alpha, p);
    let j_inf = unit.j_infinity();
    if j_inf == 0.0 {
        return Ok(LimitValue::zero());
    }
    let norm = opts.normalization(gw.p_e);
    let c = norm * j_inf;
    let cap = HLS_SIZE_CAP;
    let quad_tol = 1e-3 * opts.tol;
    let mut cache: Vec<Option<(f64, f64)>> = vec![None; cap + 1];
    let mut j_of = |z: usize| -> (f64, f64) {
        *cache[z].get_or_insert_with(|| unit.j(z as f64, quad_tol))
    };
    let max_support = law.max_support() as f64;
    let point_mass = law.point_mass();
    let mut laws = law.capped_generation_laws(cap).enumerate();
    let result = series(opts.sum_start, gw.mu, c, opts.tol, |l| {
        let dist = loop {
            let (i, d) = laws.next().expect("capped laws are unbounded");
            if i == l {
                break d;
            }
        };
        let mut acc = Vec::with_capacity(dist.len());
        let mut err = Vec::with_capacity(dist.len());
        for (z, &pz) in dist.iter().enumerate().take(cap).skip(1) {
            if pz > 0.0 {
                let (jz, ez) = j_of(z);
                acc.push(pz * jz);
                err.push(pz * ez);
            }
        }
        let lump = dist.get(cap).copied().unwrap_or(0.0);
        if lump > 0.0 {
            let top = max_support.powi(l as i32).min(1e300);
            let (hi, e_hi) = unit.j(top, quad_tol);
            if point_mass.is_some() {
                // the whole generation sits at `top`
                acc.push(lump * hi);
                err.push(lump * e_hi);
            } else {
                let (lo, e_lo) = j_of(cap);
                acc.push(lump * 0.5 * (lo + hi));
                err.push(lump * (0.5 * (hi - lo).abs() + e_lo.max(e_hi)));
            }
        }
        let w = norm * gw.mu.powf(-(l as f64));
        Ok((w * compensated_sum(acc), w * compensated_sum(err)))
    })?;
    Ok(result.scaled(scale.powf(-alpha)))
}

/// The HLS integrand in the normalized variable `u = y / scale`.
pub(crate) struct HlsIntegrand {
    alpha: f64,
    sides: [Side; 2],
}

struct Side {
    weight: f64,
    /// Knots of `u ↦ g_i(±scale·u)` on `u ≥ 1`, starting at `u = 1`.
    g: [Vec<(f64, f64)>; 2],
    eps: [f64; 2],
}

impl HlsIntegrand {
    pub(crate) fn new(f: &HlsFunctional, scale: f64, alpha: f64, p: f64) -> Self {
        let side = |sign: f64, weight: f64| Side {
            weight,
            g: [
                side_knots(&f.g1, sign, scale),
                side_knots(&f.g2, sign, scale),
            ],
            eps: [f.eps1, f.eps2],
        };
        Self {
            alpha,
            sides: [side(1.0, p), side(-1.0, 1.0 - p)],
        }
    }

    /// `ν_α`-measure (unit scale) of the set where both test functions are positive.
    pub(crate) fn j_infinity(&self) -> f64 {
        let a = self.alpha;
        self.sides
            .iter()
            .filter(|s| s.weight > 0.0)
            .map(|s| {
                let cuts = s.breakpoints(None);
                let mut total = 0.0;
                for w in cuts.windows(2) {
                    let mid = 0.5 * (w[0] + w[1]);
                    if s.value(0, mid) > 0.0 && s.value(1, mid) > 0.0 {
                        total += w[0].powf(-a) - w[1].powf(-a);
                    }
                }
                let end = *cuts.last().expect("at least one cut");
                if s.value(0, end) > 0.0 && s.value(1, end) > 0.0 {
                    total += end.powf(-a);
                }
                s.weight * total
            })
            .sum()
    }

    /// `J(z)` at unit scale and its quadrature error estimate.
    pub(crate) fn j(&self, z: f64, tol: f64) -> (f64, f64) {
        let a = self.alpha;
        let mut value = 0.0;
        let mut error = 0.0;
        for s in self.sides.iter().filter(|s| s.weight > 0.0) {
            let cuts = s.breakpoints(Some(z));
            let integrand = |u: f64| s.factor(z, u) * a * u.powf(-a - 1.0);
            let pieces = cuts.len().max(1) as f64;
            for w in cuts.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                if s.factor(z, mid) == 0.0 {
                    // zero on a whole piece between consecutive kinks
                    continue;
                }
                let q = adaptive_simpson(integrand, w[0], w[1], tol / pieces);
                value += s.weight * q.value;
                error += s.weight * q.error;
            }
            let end = *cuts.last().expect("at least one cut");
            value += s.weight * s.factor(z, end) * end.powf(-a);
        }
        (value, error)
    }
}

fn side_knots(g: &TestFunction, sign: f64, scale: f64) -> Vec<(f64, f64)> {
    let mut knots: Vec<(f64, f64)> = g
        .knots()
        .iter()
        .map(|&(x, _)| sign * x / scale)
        .filter(|u| *u > 1.0)
        .map(|u| (u, g.eval(sign * u * scale)))
        .collect();
    knots.push((1.0, g.eval(sign * scale)));
    knots.sort_by(|a, b| a.0.total_cmp(&b.0));
    knots
}

impl Side {
    fn value(&self, i: usize, u: f64) -> f64 {
        let k = &self.g[i];
        if u >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let idx = k.partition_point(|p| p.0 <= u);
        let (x0, y0) = k[idx - 1];
        let (x1, y1) = k[idx];
        y0 + (y1 - y0) * (u - x0) / (x1 - x0)
    }

    fn factor(&self, z: f64, u: f64) -> f64 {
        (0..2)
            .map(|i| {
                let excess = (z * self.value(i, u) - self.eps[i]).max(0.0);
                -(-excess).exp_m1()
            })
            .product()
    }

    /// Knots of both functions plus, for a given `z`, the points where
    /// `z g_i = ε_i` inside a linear piece.
    fn breakpoints(&self, z: Option<f64>) -> Vec<f64> {
        let mut cuts: Vec<f64> = self.g.iter().flat_map(|k| k.iter().map(|p| p.0)).collect();
        if let Some(z) = z {
            for (i, k) in self.g.iter().enumerate() {
                let level = self.eps[i] / z;
                for w in k.windows(2) {
                    let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                    if (y0 - level) * (y1 - level) < 0.0 {
                        cuts.push(x0 + (level - y0) / (y1 - y0) * (x1 - x0));
                    }
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts
    }
}

/// Parameters of the finite-`(K, B)` approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KbConfig {
    /// Cut depth `K`.
    pub depth: usize,
    /// Pruning bound `B`.
    pub bound: usize,
    pub replicates: u64,
    pub seed: u64,
}

/// Monte Carlo evaluation of `m*_{K,B}({ξ : ξ(x, ∞) ≥ k})`.
///
/// Each replicate visits `l = 1..=K` with weight
/// `(1-p_e)^(-1) P(U^B > 0) (μ_B/μ)^K μ_B^(l-K-1)`, draws `Ũ^B`, keeps each child
/// with probability `P(Z^B_{K-l} > 0)` and gives every kept child a conditioned
/// population `Z̃^B_{K-l}`. The λ-mass of the count event is `p x^(-α)` times the
/// number of kept children with `Z̃ ≥ k` (i.i.d.) or times `1(Σ Z̃ ≥ k)` (fully
/// dependent).
pub fn mstar_kb_count(
    cfg: &KbConfig,
    law: &OffspringLaw,
    model: &DisplacementModel,
    x: f64,
    k: usize,
    opts: &SeriesOptions,
    executor: &Executor,
) -> Result<Estimate> {
    check_level(x)?;
    opts.validate()?;
    if k == 0 {
        return Err(Error::Domain("count threshold k must be at least 1".into()));
    }
    if cfg.bound < 2 {
        return Err(Error::Domain(format!("pruning bound B = {} must be at least 2", cfg.bound)));
    }
    if cfg.depth == 0 {
        return Err(Error::Domain("cut depth K must be at least 1".into()));
    }
    if cfg.replicates == 0 {
        return Err(Error::Domain("at least one replicate is required".into()));
    }
    let dependent = match model.family() {
        Family::IidPareto => false,
        Family::FullyDependentPareto => true,
        Family::DiscreteTable => {
            return Err(Error::UnsupportedFamily {
                family: model.family().name(),
                operation: "finite-(K,B) approximation",
            })
        }
    };
    let alpha = model.alpha().expect("Pareto family");
    let p = model.tail_balance().expect("Pareto family");
    let gw = supercritical(law)?;
    let truncated = law.truncate(cfg.bound)?;
    let mu_b = truncated.mean();
    if !(mu_b > 1.0) {
        return Err(Error::InvalidRegime(format!(
            "truncated mean μ_B = {mu_b} must exceed 1"
        )));
    }
    let kk = cfg.depth;
    let norm = opts.normalization(gw.p_e);
    let positive = 1.0 - truncated.prob(0);
    let survival = truncated.survival_curve(kk);
    let weights: Vec<f64> = (1..=kk)
        .map(|l| {
            norm * positive
                * (mu_b / gw.mu).powi(kk as i32)
                * mu_b.powi(l as i32 - kk as i32 - 1)
        })
        .collect();
    let splitter = SeedSplitter::new(cfg.seed);
    let outcomes = executor.map(cfg.replicates, |rep| -> Result<f64> {
        let mut rng = splitter.stream(rep, Lane::Auxiliary);
        let mut terms = Vec::with_capacity(kk);
        for l in 1..=kk {
            let u = loop {
                let u = truncated.sample(&mut rng);
                if u > 0 {
                    break u;
                }
            };
            let keep = survival[kk - l];
            let mut mass = 0.0;
            let mut total = 0u64;
            for _ in 0..u {
                if keep < 1.0 && rng.random::<f64>() >= keep {
                    continue;
                }
                let z = truncated.conditioned_total_sample(kk - l, &mut rng)?;
                if dependent {
                    total += z;
                } else if z >= k as u64 {
                    mass += 1.0;
                }
            }
            if dependent && total >= k as u64 {
                mass = 1.0;
            }
            terms.push(weights[l - 1] * mass);
        }
        Ok(compensated_sum(terms))
    });
    let values = outcomes.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_contributions(&values, Method::KbMonteCarlo, cfg.seed).scaled(p * x.powf(-alpha)))
}
