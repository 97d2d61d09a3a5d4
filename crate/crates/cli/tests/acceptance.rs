//! The acceptance suite: every criterion at its stated tolerance, one line each.
//! Run with `cargo test -p brwx-cli --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use brwx::limits::{
    c_rightmost_general, c_rightmost_iid, mstar_general_count, mstar_iid_count, mstar_iid_hls, mstar_kb_count,
};
use brwx::{
    estimate_naive, estimate_sbj, DisplacementModel, EventSpec, Executor, GammaSpec, HlsFunctional, KbConfig,
    OffspringLaw, ScalingScheme, SeriesOptions, SimConfig, TestFunction,
};
use brwx_cli::{from_csv, Row};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn brwx(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_brwx"))
        .args(args)
        .env_remove("BRWX_THREADS")
        .env("RUST_LOG", "error")
        .output()
        .expect("the brwx binary runs")
}

fn benchmark(n: usize) -> SimConfig {
    let law = OffspringLaw::deterministic(2);
    let model = DisplacementModel::iid_pareto(2.0, 1.0, 1.0).unwrap();
    let scheme = ScalingScheme::build(2.0, 2.0, &model, GammaSpec::Geometric { c: 1.0, g: 2.0 }, n).unwrap();
    SimConfig::new(law, model, scheme, n).unwrap()
}

fn hls_benchmark() -> HlsFunctional {
    let ramp = TestFunction::ramp(1.0, 2.0).unwrap();
    HlsFunctional::new(ramp.clone(), ramp, 0.1, 0.1).unwrap()
}

/// Exact rational arithmetic for the pgf iterates of a law with rational masses.
fn rational_survival(law: &[(u32, u64, u64)], l: usize) -> (u128, u128) {
    fn reduce((a, b): (u128, u128)) -> (u128, u128) {
        let (mut x, mut y) = (a, b);
        while y != 0 {
            (x, y) = (y, x % y);
        }
        (a / x, b / x)
    }
    // s ↦ f(s) = Σ p_k s^k starting from s = 0
    let mut s = (0u128, 1u128);
    for _ in 0..l {
        let mut acc = (0u128, 1u128);
        for &(k, num, den) in law {
            let pow = (s.0.pow(k), s.1.pow(k));
            let term = (num as u128 * pow.0, den as u128 * pow.1);
            acc = reduce((acc.0 * term.1 + term.0 * acc.1, acc.1 * term.1));
        }
        s = acc;
    }
    reduce((s.1 - s.0, s.1))
}

fn criterion_1() -> Outcome {
    let law: OffspringLaw = "0:0.25,2:0.75".parse().unwrap();
    let p_e = law.extinction_probability(1e-15);
    let curve = law.survival_curve(2);
    let rational = [(0, 1, 4), (2, 3, 4)];
    let exact: Vec<f64> = (1..=2)
        .map(|l| {
            let (a, b) = rational_survival(&rational, l);
            a as f64 / b as f64
        })
        .collect();
    let ok = (p_e - 1.0 / 3.0).abs() <= 1e-10
        && curve[1] == 0.75
        && curve[2] == 0.703125
        && exact == [0.75, 0.703125]
        && curve[1..] == exact[..];
    check(ok, format!("p_e = {p_e:.15}, survival = {:?}, rational = {exact:?}", &curve[1..]))
}

fn criterion_2(dir: &Path) -> Outcome {
    let out = dir.join("oracle.csv");
    let run = brwx(&[
        "oracle",
        "--offspring=0:0.25,2:0.75",
        "--displacement=table:-1=0.5,1=0.5",
        "--alpha=2",
        "--scaling=geom:c=0.25,g=1.5",
        "--n=1,2,3",
        "--x-grid=1,2,3,4",
        "--k-grid=1,2",
        "--replicates=100000",
        "--seed=2",
        "--out",
        out.to_str().unwrap(),
    ]);
    if run.status.code() != Some(0) {
        return Err(format!("oracle exited with {:?}: {}", run.status, String::from_utf8_lossy(&run.stderr)));
    }
    let rows = from_csv(&std::fs::read(&out).unwrap()).unwrap();
    let naive: Vec<&Row> = rows.iter().filter(|r| r.method == "naive").collect();
    let within = naive
        .iter()
        .filter(|r| r.abs_error.unwrap() <= 4.0 * r.stderr.unwrap())
        .count();
    let fraction = within as f64 / naive.len() as f64;
    check(
        naive.len() == 24 && fraction >= 0.95,
        format!("{within}/{} grid points within 4σ of enumeration", naive.len()),
    )
}

fn criterion_3() -> Outcome {
    let cfg = benchmark(6);
    let e = EventSpec::max_exceeds(1.0).unwrap();
    let naive = estimate_naive(&e, &cfg, 100_000, 31, &Executor::Auto).unwrap();
    let sbj = estimate_sbj(&e, &cfg, 100_000, None, 32, &Executor::Auto).unwrap();
    check(
        naive.overlaps(&sbj),
        format!(
            "naive {:.4} ± {:.4}, sbj {:.4} ± {:.4} (95% intervals overlap: {})",
            naive.value,
            naive.stderr,
            sbj.value,
            sbj.stderr,
            naive.overlaps(&sbj)
        ),
    )
}

/// One `verify` run serves criteria 4 and 5.
fn verify_benchmark(dir: &Path) -> Result<Vec<Row>, String> {
    let out = dir.join("verify.csv");
    let run = brwx(&[
        "verify",
        "--offspring=2:1",
        "--displacement=pareto:alpha=2,p=1,xmin=1",
        "--scaling=geom:c=1,g=2",
        "--n=6,8,10,12",
        "--x-grid=1",
        "--k-grid=1,3",
        "--replicates=100000",
        "--seed=4",
        "--sum-start=both",
        "--out",
        out.to_str().unwrap(),
    ]);
    // the l = 1 rows are expected to fail, which sets exit code 4
    if run.status.code() != Some(4) {
        return Err(format!("verify exited with {:?}: {}", run.status, String::from_utf8_lossy(&run.stderr)));
    }
    Ok(from_csv(&std::fs::read(&out).unwrap()).unwrap())
}

fn trend<'a>(rows: &'a [Row], event: &str, start: usize) -> Vec<&'a Row> {
    rows.iter()
        .filter(|r| r.event == event && r.sum_start == Some(start))
        .collect()
}

fn describe(rows: &[&Row]) -> String {
    rows.iter()
        .map(|r| format!("n={}: {:.4}±{:.4}", r.n.unwrap(), r.value.unwrap(), r.stderr.unwrap()))
        .collect::<Vec<_>>()
        .join(", ")
}

fn criterion_4(rows: &[Row]) -> Outcome {
    let main = trend(rows, "max:x=1", 0);
    let variant = trend(rows, "max:x=1", 1);
    let (last, wrong) = (main.last().unwrap(), variant.last().unwrap());
    let rel = (last.value.unwrap() - 2.0).abs() / 2.0;
    let ok = main.len() == 4
        && (last.limit.unwrap() - 2.0).abs() < 1e-12
        && rel <= 0.3
        && last.monotone == Some(true)
        && last.verdict.as_deref() == Some("PASS")
        && (wrong.limit.unwrap() - 1.0).abs() < 1e-12
        && wrong.verdict.as_deref() == Some("FAIL");
    check(
        ok,
        format!(
            "{}; relative error {rel:.3}, monotone {:?}, l=0 {:?}, l=1 {:?}",
            describe(&main),
            last.monotone,
            last.verdict,
            wrong.verdict
        ),
    )
}

fn criterion_5(rows: &[Row]) -> Outcome {
    let main = trend(rows, "count:x=1,k=3", 0);
    let last = main.last().unwrap();
    let rel = (last.value.unwrap() - 0.5).abs() / 0.5;
    let ok = main.len() == 4 && (last.limit.unwrap() - 0.5).abs() < 1e-12 && rel <= 0.3 && last.monotone == Some(true);
    check(
        ok,
        format!("{}; relative error {rel:.3}, monotone {:?}", describe(&main), last.monotone),
    )
}

/// Independent integration of the HLS limit for `deterministic(2)`: draw `l`
/// with probability `2^(-l)`, put `Z_l = 2^l` atoms on one point drawn from
/// `ν_α` outside `[-s, s]`.
fn hls_integration_oracle(f: &HlsFunctional, alpha: f64, p: f64, samples: usize, seed: u64) -> (f64, f64) {
    let levels = 60;
    let weights: Vec<f64> = (0..=levels).map(|l| 0.5f64.powi(l)).collect();
    let total: f64 = weights.iter().sum();
    let s = f.support_distance();
    let scale = total * s.powf(-alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let mut u = rng.random::<f64>() * total;
        let mut l = 0;
        while l < levels as usize && u >= weights[l] {
            u -= weights[l];
            l += 1;
        }
        let z = 2f64.powi(l as i32);
        let magnitude = s * (1.0 - rng.random::<f64>()).powf(-1.0 / alpha);
        let y = if rng.random::<f64>() < p { magnitude } else { -magnitude };
        let v = f.combine(z * f.g1.eval(y), z * f.g2.eval(y));
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
    (scale * mean, scale * (var / samples as f64).sqrt())
}

fn criterion_6() -> Outcome {
    let f = hls_benchmark();
    let limit = mstar_iid_hls(&f, &OffspringLaw::deterministic(2), 2.0, 1.0, &SeriesOptions::default()).unwrap();
    let (mc, se) = hls_integration_oracle(&f, 2.0, 1.0, 400_000, 6);
    let quad_ok = (limit.value - mc).abs() <= 3.0 * se + limit.truncation_bound;
    let est = estimate_sbj(&EventSpec::Hls(f), &benchmark(10), 100_000, None, 61, &Executor::Auto).unwrap();
    let rel = (est.value - limit.value).abs() / limit.value;
    check(
        quad_ok && rel <= 0.3,
        format!(
            "quadrature {:.6} (bound {:.1e}) vs integration {mc:.6} ± {se:.6}; n=10 sbj {:.4} ± {:.4}, relative error {rel:.3}",
            limit.value, limit.truncation_bound, est.value, est.stderr
        ),
    )
}

fn criterion_7() -> Outcome {
    let law = OffspringLaw::deterministic(2);
    let model = DisplacementModel::iid_pareto(2.0, 1.0, 1.0).unwrap();
    let values: Vec<(usize, f64, f64)> = [2, 4, 6, 8]
        .into_iter()
        .map(|depth| {
            let cfg = KbConfig {
                depth,
                bound: 2,
                replicates: 20_000,
                seed: 70 + depth as u64,
            };
            let e = mstar_kb_count(&cfg, &law, &model, 1.0, 1, &SeriesOptions::default(), &Executor::Auto).unwrap();
            (depth, e.value, e.stderr)
        })
        .collect();
    let (_, v4, se4) = values[1];
    // the deterministic law makes every replicate identical, so σ can be 0
    let at_four = (v4 - 1.875).abs() <= 3.0 * se4 + 1e-12;
    let approaching = values.windows(2).all(|w| w[0].1 < w[1].1 && (w[1].1 - 2.0).abs() < (w[0].1 - 2.0).abs());
    check(
        at_four && approaching,
        values
            .iter()
            .map(|(k, v, s)| format!("K={k}: {v:.10} ± {s:.1e}"))
            .collect::<Vec<_>>()
            .join(", "),
    )
}

fn random_supercritical_law(rng: &mut ChaCha8Rng) -> OffspringLaw {
    loop {
        let w: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
        let mean: f64 = probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        if mean > 1.1 {
            return OffspringLaw::from_probs(probs).unwrap();
        }
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = SeriesOptions::default();
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    let mut record = |name: &str, a: f64, b: f64| {
        let rel = if b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() };
        if rel.is_nan() || rel > 1e-12 {
            eprintln!("  homogeneity off for {name}: {a} vs {b}");
        }
        worst = worst.max(if rel.is_nan() { f64::INFINITY } else { rel });
        checks += 1;
    };
    for _ in 0..20 {
        let law = random_supercritical_law(&mut rng);
        let alpha = 0.5 + 2.5 * rng.random::<f64>();
        let p = 0.05 + 0.95 * rng.random::<f64>();
        let x = 0.2 + 4.8 * rng.random::<f64>();
        let k = rng.random_range(2..=4);
        let factor = 2f64.powf(-alpha);
        let iid = DisplacementModel::iid_pareto(alpha, p, 1.0).unwrap();
        let dep = DisplacementModel::fully_dependent_pareto(alpha, p, 1.0).unwrap();
        let pair = |f: &dyn Fn(f64) -> f64| (f(2.0 * x), factor * f(x));
        let (a, b) = pair(&|x| c_rightmost_iid(alpha, p, &law, x, &opts).unwrap().value);
        record("c_rightmost_iid", a, b);
        let (a, b) = pair(&|x| mstar_iid_count(alpha, p, &law, x, k, &opts).unwrap().value);
        record("mstar_iid_count", a, b);
        for model in [&iid, &dep] {
            let (a, b) = pair(&|x| c_rightmost_general(model, &law, x, &opts).unwrap().value);
            record("c_rightmost_general", a, b);
            let (a, b) = pair(&|x| mstar_general_count(model, &law, x, k, &opts).unwrap().value);
            record("mstar_general_count", a, b);
            let kb = KbConfig {
                depth: 3,
                bound: 3,
                replicates: 500,
                seed: 80,
            };
            let (a, b) = pair(&|x| {
                mstar_kb_count(&kb, &law, model, x, k, &opts, &Executor::Sequential)
                    .unwrap()
                    .value
            });
            record("mstar_kb_count", a, b);
        }
        let lo = 0.2 + rng.random::<f64>();
        let f = HlsFunctional::new(
            TestFunction::ramp(lo, lo + 1.0).unwrap(),
            TestFunction::from_knots(vec![(-lo - 2.0, 1.0), (-lo, 0.0)]).unwrap(),
            0.05 + 0.5 * rng.random::<f64>(),
            0.05 + 0.5 * rng.random::<f64>(),
        )
        .unwrap();
        let a = mstar_iid_hls(&f.dilate(2.0).unwrap(), &law, alpha, p, &opts).unwrap().value;
        let b = factor * mstar_iid_hls(&f, &law, alpha, p, &opts).unwrap().value;
        record("mstar_iid_hls", a, b);
    }
    check(worst <= 1e-12, format!("{checks} comparisons over 20 configurations, worst relative gap {worst:.2e}"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let opts = SeriesOptions::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for _ in 0..10 {
        let law = random_supercritical_law(&mut rng);
        let alpha = 0.5 + 2.5 * rng.random::<f64>();
        let p = 0.05 + 0.95 * rng.random::<f64>();
        let iid = DisplacementModel::iid_pareto(alpha, p, 1.0).unwrap();
        let dep = DisplacementModel::fully_dependent_pareto(alpha, p, 1.0).unwrap();
        let ci = c_rightmost_general(&iid, &law, 1.0, &opts).unwrap();
        let cd = c_rightmost_general(&dep, &law, 1.0, &opts).unwrap();
        // a supercritical law has P(two or more surviving children) > 0, so the
        // inequality must be strict
        ok &= cd.value + cd.truncation_bound < ci.value - ci.truncation_bound;
        lines.push(format!("{:.4}<{:.4}", cd.value, ci.value));
    }
    check(ok, format!("dependent < iid on 10 laws: {}", lines.join(" ")))
}

fn criterion_10(dir: &Path) -> Outcome {
    let run = |threads: &str| -> Result<Vec<u8>, String> {
        let out = dir.join(format!("det-{threads}.csv"));
        let r = brwx(&[
            "estimate",
            "--offspring=2:1",
            "--displacement=pareto:alpha=2,p=1,xmin=1",
            "--n=6,8",
            "--x-grid=1",
            "--k-grid=1,3",
            "--hls=hls:g1=ramp(1,2),g2=ramp(1,2),eps1=0.1,eps2=0.1",
            "--replicates=20000",
            "--method=both",
            "--seed=10",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        if r.status.code() != Some(0) {
            return Err(format!("estimate exited with {:?}", r.status));
        }
        Ok(std::fs::read(&out).unwrap())
    };
    let (one, eight) = (run("1")?, run("8")?);
    let rows = one.iter().filter(|&&b| b == b'\n').count() - 1;
    check(one == eight, format!("{rows} rows, {} bytes, identical: {}", one.len(), one == eight))
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut failed = 0;
    let mut report = |id: usize, name: &str, limit: Duration, started: Instant, outcome: Outcome| {
        let elapsed = started.elapsed();
        let (mut verdict, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        let mut detail = detail;
        if elapsed > limit {
            verdict = "FAIL";
            detail.push_str(&format!("; over the {}s budget", limit.as_secs()));
        }
        if verdict == "FAIL" {
            failed += 1;
        }
        println!("criterion {id:>2} {verdict} [{name}] ({:.1}s) {detail}", elapsed.as_secs_f64());
    };
    let secs = Duration::from_secs;
    let t = Instant::now();
    report(1, "survival numerics", secs(1), t, criterion_1());
    let t = Instant::now();
    report(2, "oracle equivalence", secs(60), t, criterion_2(dir.path()));
    let t = Instant::now();
    report(3, "estimator cross-validation", secs(120), t, criterion_3());
    let t = Instant::now();
    let verified = verify_benchmark(dir.path());
    let shared = t.elapsed();
    // both criteria come out of one run, and each is charged the whole run
    let back = |d: Duration| Instant::now().checked_sub(d).unwrap_or_else(Instant::now);
    match &verified {
        Ok(rows) => {
            report(4, "rightmost-particle constant", secs(600), back(shared), criterion_4(rows));
            report(5, "multi-exceedance constant", secs(600), back(shared), criterion_5(rows));
        }
        Err(e) => {
            report(4, "rightmost-particle constant", secs(600), back(shared), Err(e.clone()));
            report(5, "multi-exceedance constant", secs(600), back(shared), Err(e.clone()));
        }
    }
    let t = Instant::now();
    report(6, "HLS functional", secs(600), t, criterion_6());
    let t = Instant::now();
    report(7, "finite-(K,B) approximation", secs(120), t, criterion_7());
    let t = Instant::now();
    report(8, "scaling homogeneity", secs(10), t, criterion_8());
    let t = Instant::now();
    report(9, "dependence ordering", secs(10), t, criterion_9());
    let t = Instant::now();
    report(10, "determinism across threads", secs(120), t, criterion_10(dir.path()));
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
