//! Galton–Watson progeny laws with finite support and their generating-function
//! quantities.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Default largest admissible offspring count.
pub const DEFAULT_MAX_SUPPORT: usize = 64;

/// Mass below which a parametric tail is cut when tabulating it.
pub const TABLE_MASS_CUTOFF: f64 = 1e-12;

const SUM_TOLERANCE: f64 = 1e-12;

/// A progeny distribution `P(Z = k)` on `0..=max_support`.
#[derive(Clone, PartialEq)]
pub struct OffspringLaw {
    probs: Arc<[f64]>,
    cdf: Arc<[f64]>,
    mean: f64,
    atom: Option<usize>,
}

impl fmt::Debug for OffspringLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OffspringLaw({self})")
    }
}

impl fmt::Display for OffspringLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                if !first {
                    f.write_str(",")?;
                }
                write!(f, "{k}:{p}")?;
                first = false;
            }
        }
        Ok(())
    }
}

impl OffspringLaw {
    /// Builds a law from `(k, P(Z = k))` pairs. Repeated `k` accumulate.
    pub fn new(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        Self::with_max_support(pairs, DEFAULT_MAX_SUPPORT)
    }

    pub fn with_max_support(
        pairs: impl IntoIterator<Item = (usize, f64)>,
        max_support: usize,
    ) -> Result<Self> {
        let mut probs = Vec::new();
        for (k, p) in pairs {
            if k > max_support {
                return Err(Error::InvalidLaw(format!(
                    "offspring count {k} exceeds the support limit {max_support}"
                )));
            }
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::InvalidLaw(format!("P(Z={k}) = {p} is not a probability")));
            }
            if probs.len() <= k {
                probs.resize(k + 1, 0.0);
            }
            probs[k] += p;
        }
        Self::from_probs(probs)
    }

    /// Builds a law from the dense table `probs[k] = P(Z = k)`.
    pub fn from_probs(mut probs: Vec<f64>) -> Result<Self> {
        while probs.len() > 1 && probs.last() == Some(&0.0) {
            probs.pop();
        }
        if probs.is_empty() {
            return Err(Error::InvalidLaw("empty table".into()));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidLaw("negative or non-finite probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidLaw(format!("probabilities sum to {total}, not 1")));
        }
        let mean = probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // guard the inverse-cdf search against rounding in the last partial sum
        *cdf.last_mut().unwrap() = f64::INFINITY;
        let nonzero: Vec<usize> = (0..probs.len()).filter(|&k| probs[k] > 0.0).collect();
        let atom = (nonzero.len() == 1).then(|| nonzero[0]);
        Ok(Self {
            probs: probs.into(),
            cdf: cdf.into(),
            mean,
            atom,
        })
    }

    /// The point mass at `k`.
    pub fn deterministic(k: usize) -> Self {
        let mut probs = vec![0.0; k + 1];
        probs[k] = 1.0;
        Self::from_probs(probs).expect("point mass is a valid law")
    }

    /// Geometric law `P(Z = k) = (1 - q) q^k`, tabulated until the remaining mass
    /// drops below [`TABLE_MASS_CUTOFF`]; the remainder is folded into the last atom.
    pub fn geometric(q: f64, max_support: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::InvalidLaw(format!("geometric parameter {q} outside [0,1)")));
        }
        let mut probs = Vec::new();
        let mut remaining = 1.0;
        let mut k = 0;
        while remaining > TABLE_MASS_CUTOFF {
            if k > max_support {
                return Err(Error::InvalidLaw(format!(
                    "geometric({q}) needs more than {max_support} atoms to reach the mass cutoff"
                )));
            }
            let p = (1.0 - q) * q.powi(k as i32);
            probs.push(p);
            remaining -= p;
            k += 1;
        }
        *probs.last_mut().unwrap() += remaining;
        Self::from_probs(probs)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Largest `k` with `P(Z = k) > 0`.
    pub fn max_support(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `Some(k)` when the law is the point mass at `k`.
    pub fn point_mass(&self) -> Option<usize> {
        self.atom
    }

    /// Generating function `E[s^Z]` for `s ∈ [0, 1]`.
    pub fn pgf(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(format!("pgf argument {s} outside [0,1]")));
        }
        Ok(self.pgf_unchecked(s))
    }

    fn pgf_unchecked(&self, s: f64) -> f64 {
        self.probs.iter().rev().fold(0.0, |acc, p| acc * s + p)
    }

    /// Smallest fixed point of the pgf on `[0, 1]`, by monotone iteration from 0.
    pub fn extinction_probability(&self, tol: f64) -> f64 {
        if self.atom == Some(1) {
            return 0.0;
        }
        if self.mean <= 1.0 {
            return 1.0;
        }
        let mut s = 0.0;
        for _ in 0..100_000_000u64 {
            let next = self.pgf_unchecked(s);
            if (next - s).abs() < tol {
                return next;
            }
            s = next;
        }
        s
    }

    /// `P(Z_l > 0)` for `l = 0..=l_max`, from the iterates of the pgf at 0.
    pub fn survival_curve(&self, l_max: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(l_max + 1);
        let mut q = 0.0;
        for _ in 0..=l_max {
            out.push(1.0 - q);
            q = self.pgf_unchecked(q);
        }
        out
    }

    /// Law of `Z·1(Z ≤ b) + b·1(Z > b)`.
    pub fn truncate(&self, b: usize) -> Result<Self> {
        if b < 1 {
            return Err(Error::Domain("truncation bound must be at least 1".into()));
        }
        if b >= self.max_support() {
            return Ok(self.clone());
        }
        let mut probs = self.probs[..=b].to_vec();
        probs[b] += self.probs[b + 1..].iter().sum::<f64>();
        Self::from_probs(probs)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if let Some(k) = self.atom {
            return k;
        }
        let u: f64 = rng.random();
        self.cdf.iter().position(|&c| u < c).unwrap_or(self.max_support())
    }

    /// Total offspring of `parents` independent individuals, via a multinomial split
    /// of the parents over the support.
    pub fn sample_generation<R: Rng + ?Sized>(&self, parents: u64, rng: &mut R) -> Result<u64> {
        if let Some(k) = self.atom {
            return (k as u64).checked_mul(parents).ok_or_else(generation_overflow);
        }
        let mut remaining = parents;
        let mut mass_left = 1.0;
        let mut total: u64 = 0;
        for (k, &p) in self.probs.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            let count = if mass_left <= p || k == self.max_support() {
                remaining
            } else {
                let q = (p / mass_left).clamp(0.0, 1.0);
                Binomial::new(remaining, q)
                    .expect("binomial parameter in [0,1]")
                    .sample(rng)
            };
            remaining -= count;
            mass_left -= p;
            total = (k as u64)
                .checked_mul(count)
                .and_then(|c| total.checked_add(c))
                .ok_or_else(generation_overflow)?;
        }
        Ok(total)
    }

    /// Draws `Z_l` given `Z_l > 0` by resimulating the generation totals until positive.
    pub fn conditioned_total_sample<R: Rng + ?Sized>(&self, l: usize, rng: &mut R) -> Result<u64> {
        if l == 0 {
            return Ok(1);
        }
        let survival = self.survival_curve(l)[l];
        if survival < 1e-9 {
            return Err(Error::RejectionBudget {
                attempts: 0,
                acceptance: survival,
            });
        }
        let attempts = ((1000.0 / survival).ceil() as u64).max(1000);
        for _ in 0..attempts {
            let mut z = 1;
            for _ in 0..l {
                z = self.sample_generation(z, rng)?;
                if z == 0 {
                    break;
                }
            }
            if z > 0 {
                return Ok(z);
            }
        }
        Err(Error::RejectionBudget {
            attempts,
            acceptance: survival,
        })
    }

    /// pgf-derived summary, optionally for the law truncated at `pruning_bound`.
    pub fn derived(&self, l_max: usize, pruning_bound: Option<usize>) -> Result<GwDerived> {
        let truncated = pruning_bound.map(|b| self.truncate(b)).transpose()?;
        Ok(GwDerived {
            mu: self.mean,
            p_e: self.extinction_probability(1e-12),
            survival: self.survival_curve(l_max),
            mu_b: truncated.as_ref().map(OffspringLaw::mean),
            truncated,
        })
    }

    /// Laws of `min(Z_l, cap)` for `l = 0, 1, 2, ...`; entry `cap` lumps `{Z_l ≥ cap}`.
    pub fn capped_generation_laws(&self, cap: usize) -> CappedGenerationLaws {
        assert!(cap >= 1, "cap must be at least 1");
        CappedGenerationLaws {
            law: self.clone(),
            cap,
            current: None,
        }
    }
}

fn generation_overflow() -> Error {
    Error::Domain("generation size overflows u64".into())
}

impl FromStr for OffspringLaw {
    type Err = Error;

    /// Parses `"k:prob,k:prob,..."` or `"det:k"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(k) = s.strip_prefix("det:") {
            let k = k
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::parse(k, e.to_string()))?;
            if k > DEFAULT_MAX_SUPPORT {
                return Err(Error::parse(s, "offspring count exceeds the support limit"));
            }
            return Ok(Self::deterministic(k));
        }
        let mut pairs = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, p) = item
                .split_once(':')
                .ok_or_else(|| Error::parse(item, "expected `k:prob`"))?;
            let k = k
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::parse(item, e.to_string()))?;
            let p = p
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(item, e.to_string()))?;
            pairs.push((k, p));
        }
        if pairs.is_empty() {
            return Err(Error::parse(s, "empty offspring law"));
        }
        Self::new(pairs).map_err(|e| Error::parse(s, e.to_string()))
    }
}

/// Quantities derived from the progeny generating function.
#[derive(Debug, Clone)]
pub struct GwDerived {
    pub mu: f64,
    pub p_e: f64,
    /// `survival[l] = P(Z_l > 0)`.
    pub survival: Vec<f64>,
    pub mu_b: Option<f64>,
    pub truncated: Option<OffspringLaw>,
}

/// Iterator over capped generation-size laws, see
/// [`OffspringLaw::capped_generation_laws`].
pub struct CappedGenerationLaws {
    law: OffspringLaw,
    cap: usize,
    current: Option<Vec<f64>>,
}

impl Iterator for CappedGenerationLaws {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let next = match &self.current {
            None => vec![0.0, 1.0],
            // Z_{l+1} has pgf f(f_l(s)); Horner in f with capped products.
            Some(cur) => {
                let probs = self.law.probs();
                let mut acc = vec![probs[probs.len() - 1]];
                for &p in probs[..probs.len() - 1].iter().rev() {
                    acc = capped_mul(&acc, cur, self.cap);
                    acc[0] += p;
                }
                // the lumped cell inherits rounding amplified by μ each step;
                // the lower cells are contractive, so pin the total instead
                if acc.len() == self.cap + 1 {
                    let low: f64 = acc[..self.cap].iter().sum();
                    acc[self.cap] = (1.0 - low).max(0.0);
                }
                acc
            }
        };
        self.current = Some(next.clone());
        Some(next)
    }
}

/// Product of two truncated series where index `cap` stands for all degrees `≥ cap`.
pub(crate) fn capped_mul(a: &[f64], b: &[f64], cap: usize) -> Vec<f64> {
    let full_len = a.len() + b.len() - 1;
    let out_len = full_len.min(cap + 1);
    let nnz_a = a.iter().filter(|x| **x != 0.0).count();
    let nnz_b = b.iter().filter(|x| **x != 0.0).count();
    let mut out = vec![0.0; out_len];
    if nnz_a.saturating_mul(nnz_b) <= 1 << 22 || full_len < 512 {
        for (i, &x) in a.iter().enumerate().filter(|(_, x)| **x != 0.0) {
            for (j, &y) in b.iter().enumerate().filter(|(_, y)| **y != 0.0) {
                out[(i + j).min(cap)] += x * y;
            }
        }
        return out;
    }
    let n = full_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fa: Vec<Complex<f64>> = (0..n)
        .map(|i| Complex::new(a.get(i).copied().unwrap_or(0.0), 0.0))
        .collect();
    let mut fb: Vec<Complex<f64>> = (0..n)
        .map(|i| Complex::new(b.get(i).copied().unwrap_or(0.0), 0.0))
        .collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / n as f64;
    let low = out_len.min(cap);
    let mut low_sum = 0.0;
    for m in 0..low {
        let v = (fa[m].re * scale).max(0.0);
        out[m] = v;
        low_sum += v;
    }
    if out_len == cap + 1 {
        let total = a.iter().sum::<f64>() * b.iter().sum::<f64>();
        out[cap] = (total - low_sum).max(0.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quarter_three_quarters() -> OffspringLaw {
        "0:0.25,2:0.75".parse().unwrap()
    }

    #[test]
    fn pgf_examples() {
        let law = quarter_three_quarters();
        assert!((law.pgf(0.5).unwrap() - 0.4375).abs() < 1e-15);
        assert!((law.pgf(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(OffspringLaw::deterministic(2).pgf(0.0).unwrap(), 0.0);
        assert!(matches!(law.pgf(1.5), Err(Error::Domain(_))));
        assert!(matches!(law.pgf(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn extinction_examples() {
        let law = quarter_three_quarters();
        let pe = law.extinction_probability(1e-12);
        assert!((pe - 1.0 / 3.0).abs() < 1e-10);
        assert!((law.pgf(pe).unwrap() - pe).abs() < 1e-11);
        assert_eq!(OffspringLaw::deterministic(2).extinction_probability(1e-12), 0.0);
        let critical: OffspringLaw = "0:0.5,2:0.5".parse().unwrap();
        assert_eq!(critical.extinction_probability(1e-12), 1.0);
        assert_eq!(OffspringLaw::deterministic(1).extinction_probability(1e-12), 0.0);
    }

    #[test]
    fn survival_examples() {
        let law = quarter_three_quarters();
        let s = law.survival_curve(2);
        assert_eq!(s[0], 1.0);
        assert_eq!(s[1], 0.75);
        assert_eq!(s[2], 0.703125);
        assert!(OffspringLaw::deterministic(2)
            .survival_curve(10)
            .iter()
            .all(|&x| x == 1.0));
    }

    #[test]
    fn truncate_examples() {
        let law = quarter_three_quarters();
        let t1 = law.truncate(1).unwrap();
        assert_eq!(t1.probs(), &[0.25, 0.75]);
        assert_eq!(t1.mean(), 0.75);
        assert_eq!(law.truncate(2).unwrap(), law);
        let geo = OffspringLaw::geometric(0.5, 64).unwrap();
        for b in 1..10 {
            let t = geo.truncate(b).unwrap();
            assert!((t.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(law.truncate(0).is_err());
    }

    #[test]
    fn parse_rejects_bad_tables() {
        assert!("0:0.5,2:0.4".parse::<OffspringLaw>().is_err());
        assert!("0:-0.5,2:1.5".parse::<OffspringLaw>().is_err());
        assert!("zero:1".parse::<OffspringLaw>().is_err());
        assert!("65:1".parse::<OffspringLaw>().is_err());
        assert_eq!("det:3".parse::<OffspringLaw>().unwrap(), OffspringLaw::deterministic(3));
    }

    #[test]
    fn conditioned_sampler_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let det = OffspringLaw::deterministic(2);
        for _ in 0..10 {
            assert_eq!(det.conditioned_total_sample(3, &mut rng).unwrap(), 8);
        }
        let law = quarter_three_quarters();
        assert_eq!(law.conditioned_total_sample(0, &mut rng).unwrap(), 1);
        for _ in 0..100_000 {
            assert_eq!(law.conditioned_total_sample(1, &mut rng).unwrap(), 2);
        }
        let dying: OffspringLaw = "0:0.9,1:0.1".parse().unwrap();
        let err = dying.conditioned_total_sample(12, &mut rng).unwrap_err();
        assert!(err.is_resource());
    }

    #[test]
    fn empirical_mean_within_five_standard_errors() {
        let law: OffspringLaw = "0:0.2,1:0.3,3:0.4,7:0.1".parse().unwrap();
        let var = law
            .probs()
            .iter()
            .enumerate()
            .map(|(k, p)| p * (k as f64 - law.mean()).powi(2))
            .sum::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let total: usize = (0..n).map(|_| law.sample(&mut rng)).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - law.mean()).abs() < 5.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn sample_generation_matches_mean() {
        let law = quarter_three_quarters();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let parents = 50;
        let total: u64 = (0..n)
            .map(|_| law.sample_generation(parents, &mut rng).unwrap())
            .sum();
        let mean = total as f64 / n as f64;
        // Var(Z) = 0.75, so the sum of 50 has variance 37.5
        let se = (37.5 / n as f64).sqrt();
        assert!((mean - 75.0).abs() < 5.0 * se, "{mean}");
    }

    #[test]
    fn capped_laws_match_survival_and_exact_small_cases() {
        let law = quarter_three_quarters();
        let surv = law.survival_curve(12);
        for (l, dist) in law.capped_generation_laws(16).take(13).enumerate() {
            assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((1.0 - dist[0] - surv[l]).abs() < 1e-12, "l={l}");
        }
        let z2: Vec<f64> = law.capped_generation_laws(100).nth(2).unwrap();
        // Z_2: 0 w.p. .25 + .75*.0625, 2 w.p. .75*2*.25*.75, 4 w.p. .75*.5625
        assert!((z2[0] - (0.25 + 0.75 * 0.0625)).abs() < 1e-15);
        assert!((z2[2] - 0.75 * 0.375).abs() < 1e-15);
        assert!((z2[4] - 0.75 * 0.5625).abs() < 1e-15);
    }

    #[test]
    fn fft_product_agrees_with_direct_product() {
        let a: Vec<f64> = (0..3000).map(|i| ((i * 7919) % 13) as f64 / 1e4).collect();
        let b: Vec<f64> = (0..2500).map(|i| ((i * 104729) % 17) as f64 / 1e4).collect();
        let cap = 4000;
        let fast = capped_mul(&a, &b, cap);
        let mut slow = vec![0.0; cap + 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                slow[(i + j).min(cap)] += x * y;
            }
        }
        for (f, s) in fast.iter().zip(&slow) {
            assert!((f - s).abs() < 1e-10);
        }
    }

    fn arb_law() -> impl Strategy<Value = OffspringLaw> {
        proptest::collection::vec(0.0f64..1.0, 2..8).prop_filter_map("degenerate", |w| {
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return None;
            }
            OffspringLaw::from_probs(w.iter().map(|x| x / total).collect()).ok()
        })
    }

    proptest! {
        #[test]
        fn pgf_iterates_increase_to_extinction(law in arb_law()) {
            let surv = law.survival_curve(60);
            for w in surv.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-15);
            }
            let pe = law.extinction_probability(1e-12);
            prop_assert!((law.pgf(pe).unwrap() - pe).abs() < 1e-11);
            prop_assert_eq!(pe < 1.0, law.mean() > 1.0);
            prop_assert!(1.0 - surv[60] <= pe + 1e-9);
        }

        #[test]
        fn truncated_mean_nondecreasing(law in arb_law()) {
            let mut prev = 0.0;
            for b in 1..=law.max_support().max(1) {
                let m = law.truncate(b).unwrap().mean();
                prop_assert!(m >= prev - 1e-15);
                prev = m;
            }
            prop_assert!((prev - law.mean()).abs() < 1e-12);
        }
    }
}
