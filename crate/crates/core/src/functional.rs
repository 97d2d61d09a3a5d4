//! Events and test functionals on scaled point measures.
//!
//! Every admissible functional vanishes on a neighbourhood `[-δ, δ]` of the
//! origin, so it can be evaluated exactly on the points retained above a
//! simulation floor `≤ δ`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spec;

/// Nonnegative, bounded, piecewise-linear function on ℝ, constant beyond its
/// outermost knots and vanishing near zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    knots: Vec<(f64, f64)>,
    delta: f64,
    lipschitz: f64,
}

impl TestFunction {
    pub fn from_knots(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Domain("test function needs at least one knot".into()));
        }
        if knots
            .iter()
            .any(|(x, y)| !x.is_finite() || !y.is_finite() || *y < 0.0)
        {
            return Err(Error::Domain("knots must be finite with nonnegative values".into()));
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        if knots.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Domain("knot abscissae must be distinct".into()));
        }
        let lipschitz = knots
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0, f64::max);
        let mut g = Self {
            knots,
            delta: 0.0,
            lipschitz,
        };
        g.delta = g.zero_radius();
        if !(g.delta > 0.0) {
            return Err(Error::Domain(
                "test function must vanish on a neighbourhood of zero".into(),
            ));
        }
        Ok(g)
    }

    /// 0 on `[0, a]`, rising linearly to 1 at `b`, 1 afterwards, 0 on the negatives.
    pub fn ramp(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > a) {
            return Err(Error::Domain(format!("ramp({a},{b}) needs 0 < a < b")));
        }
        Self::from_knots(vec![(a, 0.0), (b, 1.0)])
    }

    pub fn zero() -> Self {
        Self::from_knots(vec![(0.0, 0.0)]).expect("zero function is admissible")
    }

    /// Largest `δ` with `g = 0` on `[-δ, δ]`; infinite for the zero function.
    pub fn support_distance(&self) -> f64 {
        self.delta
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn sup(&self) -> f64 {
        self.knots.iter().map(|k| k.1).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0].0 {
            return k[0].1;
        }
        if x >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|p| p.0 <= x);
        let (x0, y0) = k[i - 1];
        let (x1, y1) = k[i];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// `y ↦ g(y / a)`.
    pub fn dilate(&self, a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::Domain("dilation factor must be positive".into()));
        }
        Self::from_knots(self.knots.iter().map(|&(x, y)| (x * a, y)).collect())
    }

    fn zero_radius(&self) -> f64 {
        if self.eval(0.0) != 0.0 {
            return 0.0;
        }
        let right = self.zero_run(1.0);
        let left = self.zero_run(-1.0);
        right.min(left)
    }

    /// Length of the zero run starting at the origin in direction `dir`.
    fn zero_run(&self, dir: f64) -> f64 {
        let mut pts: Vec<(f64, f64)> = self
            .knots
            .iter()
            .filter(|(x, _)| x * dir > 0.0)
            .map(|&(x, y)| (x * dir, y))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut last_zero = 0.0;
        for (x, y) in pts {
            if y > 0.0 {
                return last_zero;
            }
            last_zero = x;
        }
        // beyond the last knot the function is constant at the final value
        let tail = if dir > 0.0 {
            self.knots[self.knots.len() - 1].1
        } else {
            self.knots[0].1
        };
        if tail > 0.0 {
            last_zero
        } else {
            f64::INFINITY
        }
    }

    /// `∫ g dφ` for a point measure given by its atoms.
    pub fn integrate(&self, points: &[f64]) -> f64 {
        points.iter().map(|&x| self.eval(x)).sum()
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.knots.len() == 2 && self.knots[0].1 == 0.0 && self.knots[1].1 == 1.0 && self.knots[0].0 > 0.0 {
            return write!(f, "ramp({},{})", self.knots[0].0, self.knots[1].0);
        }
        if self.sup() == 0.0 {
            return f.write_str("zero");
        }
        f.write_str("pwl(")?;
        for (i, (x, y)) in self.knots.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{x}:{y}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// `ramp(a,b)`, `zero`, or `pwl(x:y;x:y;...)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let wrap = |e: Error| Error::parse(s, e.to_string());
        if s == "zero" {
            return Ok(Self::zero());
        }
        let inner = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
        };
        if let Some(args) = inner("ramp") {
            let parts: Vec<&str> = args.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::parse(s, "ramp takes two arguments"));
            }
            return Self::ramp(spec::number(s, parts[0])?, spec::number(s, parts[1])?).map_err(wrap);
        }
        if let Some(args) = inner("pwl") {
            let mut knots = Vec::new();
            for item in args.split(';') {
                let (x, y) = item
                    .split_once(':')
                    .ok_or_else(|| Error::parse(item, "expected `x:y`"))?;
                knots.push((spec::number(item, x)?, spec::number(item, y)?));
            }
            return Self::from_knots(knots).map_err(wrap);
        }
        Err(Error::parse(s, "expected ramp(a,b), pwl(x:y;...) or zero"))
    }
}

/// `F(φ) = Π_{i=1,2} (1 − exp(−(φ(g_i) − ε_i)_+))`.
#[derive(Debug, Clone, PartialEq)]
pub struct HlsFunctional {
    pub g1: TestFunction,
    pub g2: TestFunction,
    pub eps1: f64,
    pub eps2: f64,
}

impl HlsFunctional {
    pub fn new(g1: TestFunction, g2: TestFunction, eps1: f64, eps2: f64) -> Result<Self> {
        if !(eps1 > 0.0 && eps2 > 0.0) || !eps1.is_finite() || !eps2.is_finite() {
            return Err(Error::Domain("ε_1, ε_2 must be positive".into()));
        }
        Ok(Self { g1, g2, eps1, eps2 })
    }

    pub fn support_distance(&self) -> f64 {
        self.g1.support_distance().min(self.g2.support_distance())
    }

    /// `F` from the two integrals `φ(g_1)`, `φ(g_2)`.
    pub fn combine(&self, phi_g1: f64, phi_g2: f64) -> f64 {
        factor(phi_g1, self.eps1) * factor(phi_g2, self.eps2)
    }

    pub fn eval(&self, points: &[f64]) -> f64 {
        self.combine(self.g1.integrate(points), self.g2.integrate(points))
    }

    /// The functional with both test functions dilated by `a`.
    pub fn dilate(&self, a: f64) -> Result<Self> {
        Self::new(self.g1.dilate(a)?, self.g2.dilate(a)?, self.eps1, self.eps2)
    }
}

fn factor(phi: f64, eps: f64) -> f64 {
    let excess = (phi - eps).max(0.0);
    -(-excess).exp_m1()
}

impl fmt::Display for HlsFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "hls:g1={},g2={},eps1={},eps2={}",
            self.g1, self.g2, self.eps1, self.eps2
        )
    }
}

/// An event or functional of the scaled generation-`n` point measure; thresholds
/// are in units of `γ_n`.
#[derive(Debug, Clone, PartialEq)]
pub enum EventSpec {
    /// `M_n > x·γ_n`.
    MaxExceeds { x: f64 },
    /// `N_n(x, ∞) ≥ k`.
    CountAtLeast { x: f64, k: usize },
    Hls(HlsFunctional),
}

impl EventSpec {
    pub fn max_exceeds(x: f64) -> Result<Self> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("threshold {x} must be positive")));
        }
        Ok(EventSpec::MaxExceeds { x })
    }

    pub fn count_at_least(x: f64, k: usize) -> Result<Self> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("threshold {x} must be positive")));
        }
        if k == 0 {
            return Err(Error::Domain("count threshold k must be at least 1".into()));
        }
        Ok(EventSpec::CountAtLeast { x, k })
    }

    /// Distance from zero below which the event cannot see atoms.
    pub fn reach(&self) -> f64 {
        match self {
            EventSpec::MaxExceeds { x } | EventSpec::CountAtLeast { x, .. } => *x,
            EventSpec::Hls(f) => f.support_distance(),
        }
    }

    /// Value on a point measure given by its retained scaled atoms.
    pub fn evaluate(&self, points: &[f64]) -> f64 {
        match self {
            EventSpec::MaxExceeds { x } => {
                if points.iter().any(|p| p > x) {
                    1.0
                } else {
                    0.0
                }
            }
            EventSpec::CountAtLeast { x, k } => {
                if points.iter().filter(|p| *p > x).count() >= *k {
                    1.0
                } else {
                    0.0
                }
            }
            EventSpec::Hls(f) => f.eval(points),
        }
    }

    /// Upper bound of [`evaluate`](Self::evaluate).
    pub fn sup(&self) -> f64 {
        1.0
    }
}

impl fmt::Display for EventSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventSpec::MaxExceeds { x } => write!(f, "max:x={x}"),
            EventSpec::CountAtLeast { x, k } => write!(f, "count:x={x},k={k}"),
            EventSpec::Hls(h) => write!(f, "{h}"),
        }
    }
}

impl FromStr for EventSpec {
    type Err = Error;

    /// `max:x=1.0`, `count:x=1.0,k=3`, `hls:g1=ramp(0.5,1),g2=ramp(1,2),eps1=0.1,eps2=0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, body) = s
            .split_once(':')
            .ok_or_else(|| Error::parse(s, "expected `kind:parameters`"))?;
        let params = spec::key_values(body)?;
        let wrap = |e: Error| Error::parse(s, e.to_string());
        match head.trim() {
            "max" => {
                let mut x = None;
                for (k, v) in params {
                    match k.as_str() {
                        "x" => x = Some(spec::number(&k, &v)?),
                        _ => return Err(Error::parse(k, "unknown max-event parameter")),
                    }
                }
                Self::max_exceeds(x.ok_or_else(|| Error::parse(s, "missing x"))?).map_err(wrap)
            }
            "count" => {
                let (mut x, mut kk) = (None, None);
                for (k, v) in params {
                    match k.as_str() {
                        "x" => x = Some(spec::number(&k, &v)?),
                        "k" => kk = Some(spec::integer(&k, &v)?),
                        _ => return Err(Error::parse(k, "unknown count-event parameter")),
                    }
                }
                Self::count_at_least(
                    x.ok_or_else(|| Error::parse(s, "missing x"))?,
                    kk.ok_or_else(|| Error::parse(s, "missing k"))?,
                )
                .map_err(wrap)
            }
            "hls" => {
                let (mut g1, mut g2, mut e1, mut e2) = (None, None, None, None);
                for (k, v) in params {
                    match k.as_str() {
                        "g1" => g1 = Some(v.parse::<TestFunction>()?),
                        "g2" => g2 = Some(v.parse::<TestFunction>()?),
                        "eps1" => e1 = Some(spec::number(&k, &v)?),
                        "eps2" => e2 = Some(spec::number(&k, &v)?),
                        _ => return Err(Error::parse(k, "unknown hls parameter")),
                    }
                }
                let missing = |name: &str| Error::parse(s, format!("missing {name}"));
                HlsFunctional::new(
                    g1.ok_or_else(|| missing("g1"))?,
                    g2.ok_or_else(|| missing("g2"))?,
                    e1.ok_or_else(|| missing("eps1"))?,
                    e2.ok_or_else(|| missing("eps2"))?,
                )
                .map(EventSpec::Hls)
                .map_err(wrap)
            }
            other => Err(Error::parse(other, "unknown event kind")),
        }
    }
}
