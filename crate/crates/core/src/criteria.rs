//! Finite-horizon chargeability diagnostics computed from coefficient tables
//! and grid samples.
//!
//! Every statistic is reported per generation up to an explicit horizon `M`.
//! None of them says anything about a limit on its own; only growth and decay
//! rates across generations carry information, since the constants in the
//! underlying inequalities are unknown.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, Execution};
use crate::increments::{CoefficientTable, GridSample, IncrementPyramid};
use crate::report::fmt_f64;

/// Default minimum number of cube samples for a generation to enter the
/// moment regression.
pub const MIN_MOMENT_SAMPLES: usize = 32;

fn check_level(tab: &CoefficientTable, n: u32) -> Result<()> {
    if n > tab.max_gen() {
        return Err(Error::Resolution(format!(
            "generation {n} exceeds table horizon {}",
            tab.max_gen()
        )));
    }
    Ok(())
}

/// `Σ_k |λ_{n,k,r}|` for each type `r = 1..2^d−1`.
fn abs_sums_by_type(tab: &CoefficientTable, n: u32) -> Vec<f64> {
    let t = tab.types();
    let level = tab.level(n);
    (0..t)
        .map(|r| {
            let col: Vec<f64> = level.iter().skip(r).step_by(t).map(|x| x.abs()).collect();
            pairwise_sum(&col)
        })
        .collect()
}

/// `2^{-n(d/2+1)} · max_r Σ_k |λ_{n,k,r}|`.
pub fn criterion_a_statistic(tab: &CoefficientTable, n: u32) -> Result<f64> {
    check_level(tab, n)?;
    let d = tab.dim() as f64;
    let m = abs_sums_by_type(tab, n).into_iter().fold(0.0, f64::max);
    Ok(m * 2f64.powf(-(n as f64) * (d / 2.0 + 1.0)))
}

/// `(T_n, S_n)` with `T_n = 2^{-nd} Σ_k |λ_{n,k,1}|` and
/// `S_n = 2^{n(d/2−1)} T_n`.
pub fn t_s_statistics(tab: &CoefficientTable, n: u32) -> Result<(f64, f64)> {
    check_level(tab, n)?;
    let d = tab.dim() as f64;
    let t = abs_sums_by_type(tab, n)[0] * 2f64.powf(-(n as f64) * d);
    Ok((t, t * 2f64.powf(n as f64 * (d / 2.0 - 1.0))))
}

/// `2^{n(d/2−1)} · max_{k,r} |λ_{n,k,r}|` for `n = 0..=M`.
pub fn criterion_b_terms(tab: &CoefficientTable) -> Vec<f64> {
    criterion_b_terms_with(tab, Execution::default())
}

pub fn criterion_b_terms_with(tab: &CoefficientTable, exec: Execution) -> Vec<f64> {
    let d = tab.dim() as f64;
    exec.map(tab.max_gen() as usize + 1, |n| {
        let m = tab.level(n as u32).iter().fold(0.0f64, |a, x| a.max(x.abs()));
        m * 2f64.powf(n as f64 * (d / 2.0 - 1.0))
    })
}

/// Partial sums of the criterion-B series through generation `max_gen`.
pub fn criterion_b_partial(tab: &CoefficientTable, max_gen: u32) -> Result<Vec<f64>> {
    check_level(tab, max_gen)?;
    let mut acc = 0.0;
    Ok(criterion_b_terms(tab)
        .into_iter()
        .take(max_gen as usize + 1)
        .map(|t| {
            acc += t;
            acc
        })
        .collect())
}

fn check_holder(f: &GridSample<f64>, gamma: f64, max_gen: u32) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!("Hölder exponent {gamma} outside (0, 1]")));
    }
    if max_gen + 1 > f.gen() {
        return Err(Error::Resolution(format!(
            "horizon {max_gen} needs grid generation above {max_gen}, got {}",
            f.gen()
        )));
    }
    Ok(())
}

/// `max_k |Δ_f(K_{n,k})| / |K_{n,k}|^γ` for each `n = 0..=M`.
pub fn holder_profile(f: &GridSample<f64>, gamma: f64, max_gen: u32) -> Result<Vec<f64>> {
    check_holder(f, gamma, max_gen)?;
    let pyr = IncrementPyramid::new(f);
    Ok(holder_profile_from(&pyr, gamma, max_gen))
}

pub(crate) fn holder_profile_from(pyr: &IncrementPyramid<f64>, gamma: f64, max_gen: u32) -> Vec<f64> {
    let d = pyr.dim() as f64;
    (0..=max_gen)
        .map(|n| {
            let m = pyr.level(n).iter().fold(0.0f64, |a, x| a.max(x.abs()));
            m * 2f64.powf(n as f64 * d * gamma)
        })
        .collect()
}

/// `max_{n ≤ M, k} |Δ_f(K_{n,k})| / |K_{n,k}|^γ`.
pub fn holder_ratio(f: &GridSample<f64>, gamma: f64, max_gen: u32) -> Result<f64> {
    Ok(holder_profile(f, gamma, max_gen)?.into_iter().fold(0.0, f64::max))
}

/// Cube increments of one generation, pooled over cubes and replicates.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationSamples {
    pub dim: usize,
    pub gen: u32,
    pub increments: Vec<f64>,
}

/// Least-squares line `y = intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn fit_line(points: &[(f64, f64)]) -> Result<LineFit> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("a line fit needs at least 2 points".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("degenerate abscissae".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(LineFit {
        slope,
        intercept,
        residual: (rss / n).sqrt(),
    })
}

/// Slope of `log₂ values[i]` against `first + i`, skipping non-positive
/// entries.
pub fn log2_rate(first: u32, values: &[f64]) -> Result<LineFit> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| ((first as usize + i) as f64, v.log2()))
        .collect();
    fit_line(&pts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationMoment {
    pub gen: u32,
    pub log2_volume: f64,
    pub samples: usize,
    pub moment: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentFit {
    pub q: f64,
    /// Slope of `log₂ E|Δ(K)|^q` against `log₂ |K|`, equal to `1 + δ̂`.
    pub slope: f64,
    pub delta_hat: f64,
    pub residual: f64,
    /// Generations that entered the fit.
    pub moments: Vec<GenerationMoment>,
    /// Generations dropped for having too few samples.
    pub excluded: Vec<u32>,
}

/// Equal-weight log-least-squares fit of `E|Δ(K)|^q ≈ C |K|^{1+δ}`.
pub fn moment_scaling_estimate(samples: &[GenerationSamples], q: f64, min_samples: usize) -> Result<MomentFit> {
    if !(q > 0.0) {
        return Err(Error::InvalidArgument(format!("moment order {q} must be positive")));
    }
    let mut moments = Vec::new();
    let mut excluded = Vec::new();
    for s in samples {
        if s.increments.len() < min_samples.max(1) {
            excluded.push(s.gen);
            continue;
        }
        let powers: Vec<f64> = s.increments.iter().map(|x| x.abs().powf(q)).collect();
        moments.push(GenerationMoment {
            gen: s.gen,
            log2_volume: -((s.gen as usize * s.dim) as f64),
            samples: powers.len(),
            moment: pairwise_sum(&powers) / powers.len() as f64,
        });
    }
    if moments.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "moment regression needs at least 2 generations with {min_samples} samples, got {}",
            moments.len()
        )));
    }
    let pts: Vec<(f64, f64)> = moments.iter().map(|m| (m.log2_volume, m.moment.log2())).collect();
    let fit = fit_line(&pts)?;
    Ok(MomentFit {
        q,
        slope: fit.slope,
        delta_hat: fit.slope - 1.0,
        residual: fit.residual,
        moments,
        excluded,
    })
}

/// Criterion statistics of one coefficient table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub d: usize,
    #[serde(rename = "M")]
    pub max_gen: u32,
    #[serde(rename = "H", skip_serializing_if = "Option::is_none", default)]
    pub hurst: Option<Vec<f64>>,
    pub criterion_a: Vec<f64>,
    pub criterion_b_terms: Vec<f64>,
    pub criterion_b_partial: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub s: Option<Vec<f64>>,
}

impl CriterionReport {
    pub fn from_table(tab: &CoefficientTable, hurst: Option<Vec<f64>>, with_ts: bool) -> Self {
        Self::from_table_with(tab, hurst, with_ts, Execution::default())
    }

    pub fn from_table_with(tab: &CoefficientTable, hurst: Option<Vec<f64>>, with_ts: bool, exec: Execution) -> Self {
        let m = tab.max_gen();
        let a = exec.map(m as usize + 1, |n| criterion_a_statistic(tab, n as u32).expect("n <= M"));
        let terms = criterion_b_terms_with(tab, exec);
        let partial = criterion_b_partial(tab, m).expect("M is the horizon");
        let (t, s) = if with_ts {
            let ts: Vec<(f64, f64)> = (0..=m).map(|n| t_s_statistics(tab, n).expect("n <= M")).collect();
            (Some(ts.iter().map(|p| p.0).collect()), Some(ts.iter().map(|p| p.1).collect()))
        } else {
            (None, None)
        };
        CriterionReport {
            d: tab.dim(),
            max_gen: m,
            hurst,
            criterion_a: a,
            criterion_b_terms: terms,
            criterion_b_partial: partial,
            t,
            s,
        }
    }

    /// Long-format rows `(n, stat_name, value)`.
    pub fn rows(&self) -> Vec<(u32, &'static str, f64)> {
        let mut rows = Vec::new();
        let mut push = |name: &'static str, v: &[f64]| {
            for (n, &x) in v.iter().enumerate() {
                rows.push((n as u32, name, x));
            }
        };
        push("criterion_a", &self.criterion_a);
        push("criterion_b_term", &self.criterion_b_terms);
        push("criterion_b_partial", &self.criterion_b_partial);
        if let Some(t) = &self.t {
            push("T", t);
        }
        if let Some(s) = &self.s {
            push("S", s);
        }
        rows
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["n", "stat_name", "value"])?;
        for (n, name, v) in self.rows() {
            wr.write_record([n.to_string(), name.to_string(), fmt_f64(v)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::haar::HaarIndex;
    use crate::increments::{faber_schauder_sample, lambda_table};
    use crate::sampler::standard_sheet;
    use proptest::prelude::*;

    fn table_with(dim: usize, max_gen: u32, mut fill: impl FnMut(u32, u64, u64) -> f64) -> CoefficientTable {
        let mut entries = Vec::new();
        for idx in HaarIndex::enumerate(dim, max_gen) {
            if let HaarIndex::Wavelet { gen, cube, kind } = idx {
                entries.push((idx, fill(gen, cube, kind)));
            }
        }
        CoefficientTable::from_sparse(dim, max_gen, 0.0, &entries).unwrap()
    }

    #[test]
    fn zero_table() {
        let tab = CoefficientTable::zeros(2, 4).unwrap();
        for n in 0..=4 {
            assert_eq!(criterion_a_statistic(&tab, n).unwrap(), 0.0);
        }
        assert_eq!(criterion_b_partial(&tab, 4).unwrap(), vec![0.0; 5]);
        assert!(criterion_a_statistic(&tab, 5).is_err());
    }

    #[test]
    fn unit_first_type() {
        for d in 1..=3 {
            let tab = table_with(d, 3, |_, _, r| if r == 1 { 1.0 } else { 0.0 });
            for n in 0..=3u32 {
                let e = 2f64.powf(n as f64 * (d as f64 / 2.0 - 1.0));
                assert!((criterion_a_statistic(&tab, n).unwrap() - e).abs() < 1e-14);
                let (t, s) = t_s_statistics(&tab, n).unwrap();
                assert_eq!(t, 1.0);
                assert!((s - e).abs() < 1e-14);
            }
        }
        let tab = table_with(2, 3, |_, _, _| 0.375);
        for n in 0..=3 {
            let (t, s) = t_s_statistics(&tab, n).unwrap();
            assert_eq!((t, s), (0.375, 0.375));
        }
    }

    #[test]
    fn single_haar_primitive_is_one_term() {
        let idx = HaarIndex::wavelet(2, 2, 5, 3).unwrap();
        let f = faber_schauder_sample(2, 5, &[(idx, 1.0)]).unwrap();
        let tab = lambda_table(&f, 4).unwrap();
        let terms = criterion_b_terms(&tab);
        for (n, &t) in terms.iter().enumerate() {
            if n == 2 {
                assert!((t - 1.0).abs() < 1e-12);
            } else {
                assert!(t < 1e-12);
            }
        }
        let p = criterion_b_partial(&tab, 4).unwrap();
        assert!((p[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_function_holder_ratio() {
        let f = GridSample::from_fn(2, 5, |p| (p[0] * p[1]) as f64 / 1024.0).unwrap();
        assert!((holder_ratio(&f, 1.0, 4).unwrap() - 1.0).abs() < 1e-12);
        for r in holder_profile(&f, 1.0, 4).unwrap() {
            assert!((r - 1.0).abs() < 1e-12);
        }
        let z = GridSample::<f64>::zeros(2, 4).unwrap();
        assert_eq!(holder_ratio(&z, 0.5, 3).unwrap(), 0.0);
        assert!(holder_ratio(&z, 0.0, 3).is_err());
        assert!(holder_ratio(&z, 0.5, 4).is_err());
    }

    /// The per-level bound that makes a Hölder charge satisfy criterion B.
    #[test]
    fn holder_bound_controls_terms() {
        let f = GridSample::from_fn(2, 6, |p| (p[0] * p[1]) as f64 / 4096.0).unwrap();
        let gamma = 1.0;
        let c = holder_ratio(&f, gamma, 5).unwrap();
        let tab = lambda_table(&f, 4).unwrap();
        for (n, &t) in criterion_b_terms(&tab).iter().enumerate() {
            let n = n as f64;
            assert!(t <= c * 2f64.powf(2.0 * (1.0 - gamma)) * 2f64.powf(n * (1.0 - 2.0 * gamma)) + 1e-12);
        }
    }

    #[test]
    fn moment_fit_exact_line() {
        let samples: Vec<GenerationSamples> = (1..6)
            .map(|g| GenerationSamples {
                dim: 2,
                gen: g,
                increments: vec![2f64.powi(-2 * g as i32); 40],
            })
            .collect();
        let fit = moment_scaling_estimate(&samples, 1.0, 32).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!(fit.delta_hat.abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.moments.len(), 5);

        let mut few = samples.clone();
        few[0].increments.truncate(10);
        let fit = moment_scaling_estimate(&few, 1.0, 32).unwrap();
        assert_eq!(fit.excluded, vec![1]);
        assert!(moment_scaling_estimate(&few[..2], 1.0, 32).is_err());
        assert!(moment_scaling_estimate(&samples, 0.0, 32).is_err());
    }

    #[test]
    fn t_concentrates_for_standard_sheet() {
        let bound = 4.0 * ((1.0 - 2.0 / std::f64::consts::PI) / 4096.0).sqrt();
        for seed in 0..5 {
            let w = standard_sheet(2, 7, seed, 0, Execution::default()).unwrap();
            let tab = lambda_table(&w, 6).unwrap();
            let (t, s) = t_s_statistics(&tab, 6).unwrap();
            assert_eq!(t, s);
            assert!((t - (2.0 / std::f64::consts::PI).sqrt()).abs() <= bound, "seed {seed}: T_6 = {t}");
        }
    }

    #[test]
    fn report_csv_and_json() {
        let tab = table_with(2, 2, |n, k, r| (n as f64 + 1.0) * ((k + r) % 3) as f64);
        let rep = CriterionReport::from_table(&tab, Some(vec![0.5, 0.5]), true);
        assert_eq!(rep.rows().len(), 5 * 3);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,stat_name,value\n0,criterion_a,"));
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("\"M\":2"));
        assert_eq!(serde_json::from_str::<CriterionReport>(&json).unwrap(), rep);
        assert_eq!(rep, CriterionReport::from_table_with(&tab, Some(vec![0.5, 0.5]), true, Execution::Sequential));
    }

    fn arb_table() -> impl Strategy<Value = CoefficientTable> {
        (1usize..=3, 0u32..=3).prop_flat_map(|(d, m)| {
            let len: usize = (0..=m).map(|n| (1usize << (n as usize * d)) * ((1 << d) - 1)).sum();
            proptest::collection::vec(-10.0f64..10.0, len).prop_map(move |vals| {
                let mut it = vals.into_iter();
                table_with(d, m, |_, _, _| it.next().unwrap())
            })
        })
    }

    proptest! {
        #[test]
        fn sandwich(tab in arb_table()) {
            let terms = criterion_b_terms(&tab);
            for n in 0..=tab.max_gen() {
                let a = criterion_a_statistic(&tab, n).unwrap();
                let b = terms[n as usize];
                prop_assert!(a <= b * (1.0 + 1e-12));
                prop_assert!(a <= tab.types() as f64 * 4f64.powi(n as i32) * b * (1.0 + 1e-12));
            }
        }

        #[test]
        fn scaling_equivariance(seed in 0u64..1000, c in -4.0f64..4.0) {
            let w = standard_sheet(2, 4, seed, 0, Execution::Sequential).unwrap();
            let cw = w.map(|x| c * x);
            let (t1, t2) = (lambda_table(&w, 3).unwrap(), lambda_table(&cw, 3).unwrap());
            let close = |x: f64, y: f64| (x * c.abs() - y).abs() <= 1e-12 * (1.0 + y.abs());
            for n in 0..=3 {
                prop_assert!(close(criterion_a_statistic(&t1, n).unwrap(), criterion_a_statistic(&t2, n).unwrap()));
                prop_assert!(close(t_s_statistics(&t1, n).unwrap().0, t_s_statistics(&t2, n).unwrap().0));
            }
            for (x, y) in criterion_b_terms(&t1).into_iter().zip(criterion_b_terms(&t2)) {
                prop_assert!(close(x, y));
            }
            prop_assert!(close(holder_ratio(&w, 0.7, 3).unwrap(), holder_ratio(&cw, 0.7, 3).unwrap()));
        }
    }
}
