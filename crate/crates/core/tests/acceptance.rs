//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the per-criterion lines are always
//! printed, including under `cargo test` output capture.

use std::fmt::Write;
use std::time::{Duration, Instant};

use astro_float::{BigFloat, Consts, RoundingMode};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use sheetcharge::charge::{flux, fs_partial_apply, Term, VectorField};
use sheetcharge::criteria::{criterion_b_terms, holder_ratio, log2_rate};
use sheetcharge::haar::{haar_matrix, integrate_haar_step, StepFunction};
use sheetcharge::increments::{faber_schauder_sample, lambda_table};
use sheetcharge::sampler::{increment_covariance_bounds, KroneckerSampler};
use sheetcharge::{run, DyadicCube, ExperimentConfig, Figure, HaarIndex, HurstVector, Sqrt2Dyadic, Subcommand};

const RM: RoundingMode = RoundingMode::ToEven;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn half_normal_mean() -> f64 {
    (2.0 / std::f64::consts::PI).sqrt()
}

/// `A_d` is symmetric and `A_d A_d = 2^d I` in integer arithmetic.
fn matrix_identities() -> Outcome {
    let mut worst = String::new();
    let mut ok = true;
    for d in 1..=6 {
        let a = haar_matrix(d).unwrap();
        let n = a.len();
        let sym = (0..n).all(|i| (0..n).all(|j| a[i][j] == a[j][i]));
        let square = (0..n).all(|i| {
            (0..n).all(|j| {
                let s: i64 = (0..n).map(|k| a[i][k] as i64 * a[k][j] as i64).sum();
                s == if i == j { n as i64 } else { 0 }
            })
        });
        if !(sym && square) {
            ok = false;
            worst = format!("d = {d} failed (symmetric {sym}, square {square})");
        }
    }
    outcome(ok, if ok { "A_d symmetric with A_d^2 = 2^d I for d = 1..6".into() } else { worst })
}

/// Exact Gram matrix of the Haar system up to generation 3.
fn haar_orthonormality() -> Outcome {
    let mut ok = true;
    let mut counts = Vec::new();
    for d in 1..=2usize {
        let idxs = HaarIndex::enumerate(d, 3);
        let steps: Vec<StepFunction<Sqrt2Dyadic>> =
            idxs.iter().map(|i| StepFunction::haar(d, i, 4).unwrap()).collect();
        for (i, gi) in idxs.iter().enumerate() {
            for (j, u) in steps.iter().enumerate() {
                let v = integrate_haar_step(d, gi, u).unwrap();
                let e = if i == j { Sqrt2Dyadic::ONE } else { Sqrt2Dyadic::ZERO };
                if v != e {
                    ok = false;
                }
            }
        }
        counts.push(idxs.len());
    }
    outcome(ok, format!("Gram matrices of {counts:?} Haar functions are exactly the identity"))
}

const PRECISION: usize = 256;

fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, PRECISION)
}

/// `|x|^e` in 256-bit arithmetic.
fn big_pow(x: &BigFloat, e: f64, cc: &mut Consts) -> BigFloat {
    let x = x.abs();
    if x.is_zero() {
        return big(0.0);
    }
    x.pow(&big(e), PRECISION, RM, cc)
}

/// `E(Δ_R Δ_R')` as the signed sum of `Γ` over all `4^d` corner pairs, in
/// 256-bit arithmetic so that the cancellation between corners is resolved.
fn corner_expansion(h: &HurstVector, r: &[(f64, f64)], r2: &[(f64, f64)], cc: &mut Consts) -> f64 {
    let d = h.dim();
    let corner = |b: &[(f64, f64)], mask: usize| -> (Vec<f64>, bool) {
        let p = (0..d).map(|i| if mask >> i & 1 == 1 { b[i].1 } else { b[i].0 }).collect();
        (p, (d - (mask.count_ones() as usize)) % 2 == 1)
    };
    let mut acc = big(0.0);
    for m in 0..1usize << d {
        for m2 in 0..1usize << d {
            let (p, neg) = corner(r, m);
            let (q, neg2) = corner(r2, m2);
            let mut gamma = big(1.0);
            for i in 0..d {
                let e = 2.0 * h.components()[i];
                let (s, t) = (big(p[i]), big(q[i]));
                let diff = s.sub(&t, PRECISION, RM);
                let phi = big_pow(&s, e, cc)
                    .add(&big_pow(&t, e, cc), PRECISION, RM)
                    .sub(&big_pow(&diff, e, cc), PRECISION, RM)
                    .div(&big(2.0), PRECISION, RM);
                gamma = gamma.mul(&phi, PRECISION, RM);
            }
            acc = if neg != neg2 { acc.sub(&gamma, PRECISION, RM) } else { acc.add(&gamma, PRECISION, RM) };
        }
    }
    let mut out = String::new();
    let _ = write!(out, "{acc}");
    out.parse().unwrap()
}

/// Closed-form increment covariance against the corner expansion.
fn covariance_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c0f);
    let mut cc = Consts::new().unwrap();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for d in 1..=2usize {
        let hs = [HurstVector::standard(d), HurstVector::new(vec![0.8, 0.9][..d].to_vec()).unwrap()];
        for h in &hs {
            for _ in 0..20 {
                let mut rect = || -> Vec<(f64, f64)> {
                    (0..d)
                        .map(|_| {
                            let a = rng.random_range(0..1024u32);
                            let b = rng.random_range(a + 1..=1024u32);
                            (a as f64 / 1024.0, b as f64 / 1024.0)
                        })
                        .collect()
                };
                let (r, r2) = (rect(), rect());
                let closed = increment_covariance_bounds(h, &r, &r2).unwrap();
                let brute = corner_expansion(h, &r, &r2, &mut cc);
                let rel = if brute == 0.0 { closed.abs() } else { ((closed - brute) / brute).abs() };
                worst = worst.max(rel);
                cases += 1;
            }
        }
    }
    outcome(worst <= 1e-12, format!("{cases} rectangle pairs, max relative error {worst:.3e} (tolerance 1e-12)"))
}

fn summary(cfg: &ExperimentConfig, sub: Subcommand) -> Value {
    run(sub, cfg).unwrap().summary
}

/// Empirical grid covariances of the Kronecker sampler.
fn sampler_covariance() -> Outcome {
    let mut cfg = ExperimentConfig::new(2, 3, vec![20240]);
    cfg.hurst = Some(HurstVector::new(vec![0.8, 0.9]).unwrap());
    cfg.replicates = 10_000;
    let s = summary(&cfg, Subcommand::CovarianceCheck);
    let within = s["within_3_stderr"].as_u64().unwrap();
    let zs: Vec<f64> = s["z"].as_array().unwrap().iter().map(|z| z.as_f64().unwrap()).collect();
    let max_z = zs.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    outcome(
        within >= 9 && zs.len() == 10,
        format!("{within}/10 pairs within 3 standard errors over 10^4 paths, max |z| = {max_z:.2}"),
    )
}

/// `T_6` and the criterion-A statistic for the standard sheet.
fn brownian_dichotomy() -> Outcome {
    let mut cfg = ExperimentConfig::new(2, 8, (1..=20).collect());
    cfg.max_gen = Some(6);
    let out = run(Subcommand::BrownianDichotomy, &cfg).unwrap();
    let mean_t = out.summary["levels"][6]["mean_T"].as_f64().unwrap();
    let csv = String::from_utf8(out.file("dichotomy.csv").unwrap().contents.clone()).unwrap();
    let a6: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[2] == "6")
        .map(|f| f[5].parse().unwrap())
        .collect();
    let big = a6.iter().filter(|&&a| a >= 0.5).count();
    let dev = (mean_t - half_normal_mean()).abs();
    outcome(
        dev <= 0.02 && big >= 18 && a6.len() == 20,
        format!("mean T_6 = {mean_t:.5} (|dev| = {dev:.5} <= 0.02), criterion A at n=6 >= 0.5 for {big}/20 seeds"),
    )
}

/// Criterion-B decay and the Hölder ratio on one `H = (0.9, 0.9)` ensemble.
fn fractional_decay_and_holder() -> (Outcome, Outcome) {
    let h = HurstVector::new(vec![0.9, 0.9]).unwrap();
    let sampler = KroneckerSampler::new(h, 10).unwrap();
    let (mut decreasing, mut bounded) = (0, 0);
    let mut rates = Vec::new();
    let mut ratios = Vec::new();
    for seed in 1..=20u64 {
        let w = sampler.sample(seed, 0);
        let tab = lambda_table(&w, 9).unwrap();
        let terms = criterion_b_terms(&tab);
        let tail = &terms[3..];
        if tail.windows(2).all(|p| p[1] < p[0]) {
            decreasing += 1;
        }
        rates.push(log2_rate(3, tail).unwrap().slope);
        let (h4, h8) = (holder_ratio(&w, 0.7, 4).unwrap(), holder_ratio(&w, 0.7, 8).unwrap());
        if h8 <= 2.0 * h4 {
            bounded += 1;
        }
        ratios.push(h8 / h4);
    }
    rates.sort_by(f64::total_cmp);
    let median = (rates[9] + rates[10]) / 2.0;
    let within = rates.iter().filter(|r| (*r + 0.8).abs() <= 0.3).count();
    let decay = outcome(
        decreasing >= 18 && (median + 0.8).abs() <= 0.3,
        format!(
            "terms strictly decreasing for n >= 3 in {decreasing}/20 seeds, median log2 rate {median:.3} \
             (target -0.8 +/- 0.3, {within}/20 individual fits inside)"
        ),
    );
    let worst = ratios.iter().fold(0.0f64, |m, &r| m.max(r));
    let holder = outcome(
        bounded >= 18,
        format!("Hölder ratio at M=8 within 2x of M=4 in {bounded}/20 seeds, worst ratio {worst:.3}"),
    );
    (decay, holder)
}

/// Moment scaling of `H = (0.7, 0.9)` increments.
fn moment_scaling() -> Outcome {
    let mut cfg = ExperimentConfig::new(2, 8, vec![808]);
    cfg.hurst = Some(HurstVector::new(vec![0.7, 0.9]).unwrap());
    cfg.replicates = 200;
    cfg.max_gen = Some(7);
    cfg.min_generation = Some(2);
    cfg.q = vec![2.0];
    let s = summary(&cfg, Subcommand::MomentScaling);
    let slope = s["fits"][0]["slope"].as_f64().unwrap();
    outcome(
        (slope - 1.6).abs() <= 0.05,
        format!("slope {slope:.4} over generations 2..7 (target 1.6 +/- 0.05)"),
    )
}

/// Adversarial figures for the standard sheet.
fn counterexample() -> Outcome {
    let mut cfg = ExperimentConfig::new(2, 10, (1..=20).collect());
    cfg.n = Some(3);
    cfg.p_max = Some(9);
    let s = summary(&cfg, Subcommand::Counterexample);
    let median = s["median_coverage"].as_f64().unwrap();
    let mut ok = median >= 0.5;
    let mut covered = 0;
    for p in s["paths"].as_array().unwrap() {
        let r = &p["report"];
        let f = |k: &str| r[k].as_f64().unwrap();
        if f("coverage") >= 0.5 {
            covered += 1;
            ok &= f("increment") >= 0.5 && f("perimeter") <= 4.0 && f("volume") <= 0.125;
        }
    }
    outcome(
        ok,
        format!("median coverage {median:.4}, {covered}/20 paths with coverage >= 1/2 all satisfy the increment, perimeter and volume bounds"),
    )
}

fn random_figure(rng: &mut ChaCha8Rng, finest: u32) -> Figure {
    fn build(rng: &mut ChaCha8Rng, c: DyadicCube, finest: u32, out: &mut Vec<DyadicCube>) {
        let u: f64 = rng.random();
        if c.gen() == finest || (c.gen() >= 1 && u < 0.3) {
            if c.gen() < finest || u < 0.5 {
                out.push(c);
            }
        } else if u < 0.85 {
            for ch in c.children() {
                build(rng, ch, finest, out);
            }
        }
    }
    loop {
        let mut cubes = Vec::new();
        build(rng, DyadicCube::root(2), finest, &mut cubes);
        if cubes.is_empty() {
            continue;
        }
        if cubes.iter().all(|c| c.gen() < finest) {
            // Replace one cube by a chain of descendants reaching `finest`.
            let mut c = cubes.swap_remove(0);
            while c.gen() < finest {
                let ch = c.children();
                cubes.extend_from_slice(&ch[1..]);
                c = ch[0];
            }
            cubes.push(c);
        }
        return Figure::new(2, cubes).unwrap();
    }
}

fn poly(components: Vec<Vec<(f64, [u32; 2])>>) -> VectorField {
    VectorField::Polynomial {
        coeffs: components
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .map(|(coef, p)| Term {
                        coef,
                        powers: p.to_vec(),
                    })
                    .collect()
            })
            .collect(),
    }
}

/// Midpoint-rule flux against the closed-form divergence integral.
fn gauss_green() -> Outcome {
    let fields = [
        poly(vec![vec![(1.0, [1, 2])], vec![]]),
        poly(vec![vec![(0.5, [3, 0]), (-0.25, [0, 1])], vec![(0.5, [2, 1]), (1.0, [0, 1])]]),
        poly(vec![vec![(0.5, [1, 2]), (1.0, [0, 3])], vec![(0.5, [2, 1]), (-1.0, [3, 0])]]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a55);
    let figures: Vec<Figure> = (0..5).map(|_| random_figure(&mut rng, 6)).collect();
    let mut ok = true;
    let mut worst = 0.0f64;
    for v in &fields {
        for fig in &figures {
            let exact = v.divergence_integral(fig).unwrap();
            let errs: Vec<f64> = (2..=6).map(|l| (flux(v, fig, l).unwrap() - exact).abs()).collect();
            ok &= errs.windows(2).all(|w| w[1] < w[0]) && errs[4] <= 1e-8;
            worst = worst.max(errs[4]);
        }
    }
    outcome(
        ok,
        format!("{} fields on 5 figures: errors strictly decrease for L = 2..6, max error at L = 6 is {worst:.3e} (tolerance 1e-8)", fields.len()),
    )
}

/// Truncated Faber–Schauder series against direct figure increments.
fn reconstruction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11);
    let idxs = HaarIndex::enumerate(2, 3);
    let mut terms: Vec<(HaarIndex, f64)> = Vec::new();
    for i in &idxs {
        if rng.random_bool(0.4) {
            terms.push((*i, rng.random_range(-16i32..=16) as f64 / 8.0));
        }
    }
    let f = faber_schauder_sample(2, 5, &terms).unwrap();
    let tab = lambda_table(&f, 4).unwrap();
    let mut exact = 0;
    for _ in 0..20 {
        let fig = random_figure(&mut rng, 5);
        if fs_partial_apply(&tab, 4, &fig).unwrap() == f.figure_increment(&fig).unwrap() {
            exact += 1;
        }
    }
    outcome(exact == 20, format!("{} nonzero terms, exact agreement on {exact}/20 figures", terms.len()))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: &str, budget: Duration, elapsed: Duration, o: Outcome| {
        let pass = o.pass && elapsed <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] criterion {id}: {} [{:.2}s, budget {}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    };
    let timed = |f: fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        (o, t.elapsed())
    };
    let secs = Duration::from_secs;

    let (o, t) = timed(matrix_identities);
    report("1", secs(1), t, o);
    let (o, t) = timed(haar_orthonormality);
    report("2", secs(5), t, o);
    let (o, t) = timed(covariance_oracle);
    report("3", secs(1), t, o);
    let (o, t) = timed(sampler_covariance);
    report("4", secs(30), t, o);
    let (o, t) = timed(brownian_dichotomy);
    report("5", secs(60), t, o);
    let start = Instant::now();
    let (decay, holder) = fractional_decay_and_holder();
    let t = start.elapsed();
    report("6", secs(120), t, decay);
    report("7", secs(120), t, holder);
    let (o, t) = timed(moment_scaling);
    report("8", secs(120), t, o);
    let (o, t) = timed(counterexample);
    report("9", secs(120), t, o);
    let (o, t) = timed(gauss_green);
    report("10", secs(10), t, o);
    let (o, t) = timed(reconstruction);
    report("11", secs(5), t, o);

    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 11 acceptance criteria passed");
}
