//! Joint displacement laws for the children of one parent.
//!
//! Two heavy-tailed families with exact Pareto tails are provided, one with
//! independent coordinates and one fully dependent (every child of a parent
//! receives the same displacement), plus a light-tailed finite table used by the
//! exact enumeration oracle. For the Pareto families
//! `P(|X| > t) = (t / x_min)^(-alpha)` for `t ≥ x_min`; the sign is drawn
//! independently of the magnitude and is positive with probability `p`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    IidPareto,
    FullyDependentPareto,
    DiscreteTable,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::IidPareto => "iid-pareto",
            Family::FullyDependentPareto => "dep-pareto",
            Family::DiscreteTable => "table",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Pareto {
        alpha: f64,
        p: f64,
        x_min: f64,
        dependent: bool,
    },
    Table {
        values: Vec<f64>,
        probs: Vec<f64>,
        cdf: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementModel {
    kind: Kind,
}

impl DisplacementModel {
    pub fn iid_pareto(alpha: f64, p: f64, x_min: f64) -> Result<Self> {
        Self::pareto(alpha, p, x_min, false)
    }

    pub fn fully_dependent_pareto(alpha: f64, p: f64, x_min: f64) -> Result<Self> {
        Self::pareto(alpha, p, x_min, true)
    }

    fn pareto(alpha: f64, p: f64, x_min: f64, dependent: bool) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidModel(format!("tail index {alpha} must be positive")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidModel(format!("tail balance {p} outside [0,1]")));
        }
        if !(x_min > 0.0) || !x_min.is_finite() {
            return Err(Error::InvalidModel(format!("scale {x_min} must be positive")));
        }
        Ok(Self {
            kind: Kind::Pareto {
                alpha,
                p,
                x_min,
                dependent,
            },
        })
    }

    /// A finite table of `(value, probability)` pairs; children draw independently.
    pub fn table(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut entries: Vec<(f64, f64)> = pairs.into_iter().collect();
        if entries.is_empty() {
            return Err(Error::InvalidModel("empty displacement table".into()));
        }
        if entries
            .iter()
            .any(|(v, p)| !v.is_finite() || !(*p >= 0.0) || !p.is_finite())
        {
            return Err(Error::InvalidModel("table entries must be finite with p ≥ 0".into()));
        }
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("table probabilities sum to {total}")));
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        let values: Vec<f64> = entries.iter().map(|e| e.0).collect();
        let probs: Vec<f64> = entries.iter().map(|e| e.1).collect();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cdf.last_mut().unwrap() = f64::INFINITY;
        Ok(Self {
            kind: Kind::Table { values, probs, cdf },
        })
    }

    pub fn family(&self) -> Family {
        match self.kind {
            Kind::Pareto {
                dependent: false, ..
            } => Family::IidPareto,
            Kind::Pareto {
                dependent: true, ..
            } => Family::FullyDependentPareto,
            Kind::Table { .. } => Family::DiscreteTable,
        }
    }

    pub fn is_pareto(&self) -> bool {
        matches!(self.kind, Kind::Pareto { .. })
    }

    /// Tail index; `None` for tables.
    pub fn alpha(&self) -> Option<f64> {
        match self.kind {
            Kind::Pareto { alpha, .. } => Some(alpha),
            Kind::Table { .. } => None,
        }
    }

    /// Tail balance `p`; `None` for tables.
    pub fn tail_balance(&self) -> Option<f64> {
        match self.kind {
            Kind::Pareto { p, .. } => Some(p),
            Kind::Table { .. } => None,
        }
    }

    pub fn x_min(&self) -> Option<f64> {
        match self.kind {
            Kind::Pareto { x_min, .. } => Some(x_min),
            Kind::Table { .. } => None,
        }
    }

    /// Support points and probabilities of a table model.
    pub fn table_entries(&self) -> Option<(&[f64], &[f64])> {
        match &self.kind {
            Kind::Table { values, probs, .. } => Some((values, probs)),
            Kind::Pareto { .. } => None,
        }
    }

    /// `P(|X_1| > t)`.
    pub fn tail_prob(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Pareto { alpha, x_min, .. } => {
                if t < *x_min {
                    1.0
                } else {
                    (t / x_min).powf(-alpha)
                }
            }
            Kind::Table { values, probs, .. } => values
                .iter()
                .zip(probs)
                .filter(|(v, _)| v.abs() > t)
                .map(|(_, p)| p)
                .sum(),
        }
    }

    /// Natural log of [`tail_prob`](Self::tail_prob), exact in log-space for Pareto tails.
    pub fn ln_tail_prob(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Pareto { alpha, x_min, .. } => {
                if t < *x_min {
                    0.0
                } else {
                    -alpha * (t.ln() - x_min.ln())
                }
            }
            Kind::Table { .. } => self.tail_prob(t).ln(),
        }
    }

    /// `P(X_1 > t)`.
    pub fn upper_tail_prob(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Pareto { p, .. } => {
                if t < 0.0 {
                    p + (1.0 - p) * (1.0 - self.tail_prob(-t))
                } else {
                    p * self.tail_prob(t)
                }
            }
            Kind::Table { values, probs, .. } => values
                .iter()
                .zip(probs)
                .filter(|(v, _)| **v > t)
                .map(|(_, p)| p)
                .sum(),
        }
    }

    /// One marginal draw.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            Kind::Pareto {
                alpha, p, x_min, ..
            } => signed_pareto(*alpha, *p, *x_min, rng),
            Kind::Table { values, cdf, .. } => {
                if values.len() == 1 {
                    return values[0];
                }
                let u: f64 = rng.random();
                let i = cdf.iter().position(|&c| u < c).unwrap_or(values.len() - 1);
                values[i]
            }
        }
    }

    /// Fills `out` with a draw of the displacement block `(X_1, ..., X_count)`.
    pub fn fill_children<R: Rng + ?Sized>(&self, count: usize, rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        if count == 0 {
            return;
        }
        if let Kind::Pareto {
            dependent: true, ..
        } = self.kind
        {
            let x = self.sample_one(rng);
            out.resize(count, x);
        } else {
            out.extend((0..count).map(|_| self.sample_one(rng)));
        }
    }

    pub fn sample_children<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        self.fill_children(count, rng, &mut out);
        out
    }

    /// A draw of `X_1` given `|X_1| > t`: the Pareto tail restarted at `t` with the
    /// same balance. Levels below `x_min` leave the law unchanged.
    pub fn conditional_exceedance_sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Result<f64> {
        match &self.kind {
            Kind::Pareto {
                alpha, p, x_min, ..
            } => Ok(signed_pareto(*alpha, *p, t.max(*x_min), rng)),
            Kind::Table { .. } => Err(self.unsupported("conditional exceedance sampling")),
        }
    }

    /// `P(X_1 > h | |X_1| > t)`.
    pub fn conditional_upper_prob(&self, t: f64, h: f64) -> Result<f64> {
        match &self.kind {
            Kind::Pareto {
                alpha, p, x_min, ..
            } => {
                let level = t.max(*x_min);
                let tail = |u: f64| (u / level).powf(-alpha);
                Ok(if h >= level {
                    p * tail(h)
                } else if h >= -level {
                    *p
                } else {
                    p + (1.0 - p) * (1.0 - tail(-h))
                })
            }
            Kind::Table { .. } => Err(self.unsupported("conditional tail probabilities")),
        }
    }

    /// Limit-measure mass `λ(∪_{s∈G} V_s)` of the union of the unit upper exceedance
    /// sets over `g_size` coordinates.
    pub fn lambda_union_mass(&self, g_size: usize) -> Result<f64> {
        match &self.kind {
            Kind::Pareto { .. } if g_size == 0 => Ok(0.0),
            Kind::Pareto {
                p,
                dependent: false,
                ..
            } => Ok(g_size as f64 * p),
            Kind::Pareto {
                p, dependent: true, ..
            } => Ok(*p),
            Kind::Table { .. } => Err(self.unsupported("limit-measure masses")),
        }
    }

    fn unsupported(&self, operation: &'static str) -> Error {
        Error::UnsupportedFamily {
            family: self.family().name(),
            operation,
        }
    }
}

fn signed_pareto<R: Rng + ?Sized>(alpha: f64, p: f64, scale: f64, rng: &mut R) -> f64 {
    // 1 - U lies in (0, 1]
    let u: f64 = 1.0 - rng.random::<f64>();
    let magnitude = if alpha == 2.0 {
        scale / u.sqrt()
    } else {
        scale * u.powf(-1.0 / alpha)
    };
    let positive = if p >= 1.0 {
        true
    } else if p <= 0.0 {
        false
    } else {
        rng.random::<f64>() < p
    };
    if positive {
        magnitude
    } else {
        -magnitude
    }
}

impl fmt::Display for DisplacementModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Pareto {
                alpha,
                p,
                x_min,
                dependent,
            } => {
                let tag = if *dependent { "dep-pareto" } else { "pareto" };
                write!(f, "{tag}:alpha={alpha},p={p},xmin={x_min}")
            }
            Kind::Table { values, probs, .. } => {
                f.write_str("table:")?;
                for (i, (v, p)) in values.iter().zip(probs).enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}={p}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for DisplacementModel {
    type Err = Error;

    /// Parses `pareto:alpha=2,p=0.5,xmin=1`, `dep-pareto:...` or `table:-1=0.5,1=0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, body) = s
            .split_once(':')
            .ok_or_else(|| Error::parse(s, "expected `family:parameters`"))?;
        let wrap = |e: Error| Error::parse(s, e.to_string());
        match head.trim() {
            "pareto" | "dep-pareto" => {
                let params = crate::spec::key_values(body)?;
                let mut alpha = None;
                let mut p = 0.5;
                let mut x_min = 1.0;
                for (k, v) in params {
                    let value = crate::spec::number(&k, &v)?;
                    match k.as_str() {
                        "alpha" => alpha = Some(value),
                        "p" => p = value,
                        "xmin" => x_min = value,
                        _ => return Err(Error::parse(k, "unknown Pareto parameter")),
                    }
                }
                let alpha = alpha.ok_or_else(|| Error::parse(s, "missing alpha"))?;
                Self::pareto(alpha, p, x_min, head.trim() == "dep-pareto").map_err(wrap)
            }
            "table" => {
                let mut pairs = Vec::new();
                for item in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                    // the value may itself be negative, so split on the last '='
                    let (v, p) = item
                        .rsplit_once('=')
                        .ok_or_else(|| Error::parse(item, "expected `value=prob`"))?;
                    pairs.push((crate::spec::number(item, v)?, crate::spec::number(item, p)?));
                }
                Self::table(pairs).map_err(wrap)
            }
            other => Err(Error::parse(other, "unknown displacement family")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn binomial_se(p: f64, n: usize) -> f64 {
        (p * (1.0 - p) / n as f64).sqrt()
    }

    #[test]
    fn tail_examples() {
        let m = DisplacementModel::iid_pareto(2.0, 0.5, 1.0).unwrap();
        assert!((m.tail_prob(10.0) - 0.01).abs() < 1e-15);
        assert!((m.upper_tail_prob(10.0) - 0.005).abs() < 1e-15);
        assert_eq!(m.tail_prob(0.5), 1.0);
        let t = DisplacementModel::table([(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(t.tail_prob(0.5), 1.0);
        assert_eq!(t.tail_prob(1.0), 0.0);
        assert_eq!(t.upper_tail_prob(0.5), 0.5);
    }

    #[test]
    fn sample_children_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dep = DisplacementModel::fully_dependent_pareto(2.0, 0.5, 1.0).unwrap();
        assert!(dep.sample_children(0, &mut rng).is_empty());
        let block = dep.sample_children(3, &mut rng);
        assert_eq!(block.len(), 3);
        assert!(block.iter().all(|&x| x == block[0]));
    }

    #[test]
    fn iid_pairs_are_independent() {
        let m = DisplacementModel::iid_pareto(2.0, 0.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = 1.5;
        let n = 1_000_000;
        let mut hits = 0;
        for _ in 0..n {
            let b = m.sample_children(2, &mut rng);
            if b[0] > t && b[1] > t {
                hits += 1;
            }
        }
        let target = m.upper_tail_prob(t).powi(2);
        let freq = hits as f64 / n as f64;
        assert!((freq - target).abs() < 5.0 * binomial_se(target, n), "{freq} vs {target}");
    }

    #[test]
    fn marginal_tail_matches_at_multiple_levels() {
        for model in [
            DisplacementModel::iid_pareto(1.5, 0.3, 2.0).unwrap(),
            DisplacementModel::fully_dependent_pareto(2.5, 0.7, 1.0).unwrap(),
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let n = 1_000_000;
            let x_min = model.x_min().unwrap();
            let mut counts = [0usize; 3];
            let levels = [2.0 * x_min, 5.0 * x_min, 10.0 * x_min];
            for _ in 0..n {
                let x = model.sample_children(2, &mut rng)[0];
                for (c, t) in counts.iter_mut().zip(levels) {
                    if x.abs() > t {
                        *c += 1;
                    }
                }
            }
            for (c, t) in counts.iter().zip(levels) {
                let target = model.tail_prob(t);
                let freq = *c as f64 / n as f64;
                assert!((freq - target).abs() < 5.0 * binomial_se(target, n));
            }
        }
    }

    #[test]
    fn conditional_exceedance_is_self_similar() {
        let m = DisplacementModel::iid_pareto(2.0, 0.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = 3.0;
        let n = 200_000;
        let hits = (0..n)
            .filter(|_| m.conditional_exceedance_sample(t, &mut rng).unwrap().abs() > 2.0 * t)
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.25).abs() < 4.0 * binomial_se(0.25, n));

        let right = DisplacementModel::iid_pareto(2.0, 1.0, 1.0).unwrap();
        let left = DisplacementModel::iid_pareto(2.0, 0.0, 1.0).unwrap();
        for _ in 0..1000 {
            assert!(right.conditional_exceedance_sample(t, &mut rng).unwrap() > 0.0);
            assert!(left.conditional_exceedance_sample(t, &mut rng).unwrap() < 0.0);
        }
        let table = DisplacementModel::table([(0.0, 1.0)]).unwrap();
        assert!(matches!(
            table.conditional_exceedance_sample(1.0, &mut rng),
            Err(Error::UnsupportedFamily { .. })
        ));
    }

    #[test]
    fn conditional_upper_prob_matches_sampling() {
        let m = DisplacementModel::iid_pareto(1.7, 0.6, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = 4.0;
        let n = 200_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| m.conditional_exceedance_sample(t, &mut rng).unwrap())
            .collect();
        for h in [-20.0, -4.0, 0.0, 3.0, 4.0, 9.0] {
            let p = m.conditional_upper_prob(t, h).unwrap();
            let freq = draws.iter().filter(|&&x| x > h).count() as f64 / n as f64;
            assert!((freq - p).abs() < 5.0 * binomial_se(p, n) + 1e-12, "h={h}");
        }
    }

    #[test]
    fn lambda_union_masses() {
        let iid = DisplacementModel::iid_pareto(2.0, 0.5, 1.0).unwrap();
        let dep = DisplacementModel::fully_dependent_pareto(2.0, 0.5, 1.0).unwrap();
        assert_eq!(iid.lambda_union_mass(3).unwrap(), 1.5);
        assert_eq!(dep.lambda_union_mass(3).unwrap(), 0.5);
        assert_eq!(iid.lambda_union_mass(0).unwrap(), 0.0);
        assert_eq!(dep.lambda_union_mass(0).unwrap(), 0.0);
        let table = DisplacementModel::table([(1.0, 1.0)]).unwrap();
        assert!(table.lambda_union_mass(1).is_err());
    }

    #[test]
    fn spec_strings() {
        let m: DisplacementModel = "pareto:alpha=2,p=0.5,xmin=1".parse().unwrap();
        assert_eq!(m, DisplacementModel::iid_pareto(2.0, 0.5, 1.0).unwrap());
        let d: DisplacementModel = "dep-pareto:alpha=1.5,p=1".parse().unwrap();
        assert_eq!(d.family(), Family::FullyDependentPareto);
        let t: DisplacementModel = "table:-1=0.5,1=0.5".parse().unwrap();
        assert_eq!(t.table_entries().unwrap().0, &[-1.0, 1.0]);
        assert_eq!(t.to_string().parse::<DisplacementModel>().unwrap(), t);
        assert!("pareto:p=0.5".parse::<DisplacementModel>().is_err());
        assert!("gauss:sigma=1".parse::<DisplacementModel>().is_err());
        assert!("table:-1=0.5,1=0.6".parse::<DisplacementModel>().is_err());
    }

    proptest! {
        #[test]
        fn pareto_tail_is_monotone_and_exact(
            alpha in 0.2f64..5.0, p in 0.0f64..=1.0, x_min in 0.1f64..10.0,
            a in 0.0f64..100.0, b in 0.0f64..100.0,
        ) {
            let m = DisplacementModel::iid_pareto(alpha, p, x_min).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(m.tail_prob(hi) <= m.tail_prob(lo));
            if lo >= x_min {
                let exact = (lo / x_min).powf(-alpha);
                prop_assert!((m.tail_prob(lo) - exact).abs() <= 1e-15 * exact.max(1e-300));
                prop_assert!((m.upper_tail_prob(lo) - p * exact).abs() <= 1e-15);
            }
        }

        #[test]
        fn lambda_mass_ordering(p in 0.0f64..=1.0, g in 1usize..64) {
            let iid = DisplacementModel::iid_pareto(2.0, p, 1.0).unwrap();
            let dep = DisplacementModel::fully_dependent_pareto(2.0, p, 1.0).unwrap();
            prop_assert!(iid.lambda_union_mass(g).unwrap() >= iid.lambda_union_mass(g - 1).unwrap());
            prop_assert!((iid.lambda_union_mass(g).unwrap() - g as f64 * dep.lambda_union_mass(g).unwrap()).abs() < 1e-12);
        }
    }
}
