//! Seeded experiment driver behind the `sheetcharge` binary.
//!
//! A run is a pure function of its [`ExperimentConfig`]: every path is
//! addressed by `(seed, replicate)` and drawn from its own counter-based
//! stream, so outputs do not depend on thread count or evaluation order.
//! Reports are assembled in memory and written together with a manifest
//! that can itself be passed back as a config.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::counterexample::adversarial_figure;
use crate::criteria::{
    criterion_a_statistic, holder_profile_from, log2_rate, moment_scaling_estimate, t_s_statistics, CriterionReport,
    GenerationSamples, MIN_MOMENT_SAMPLES,
};
use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, Execution};
use crate::increments::{grid_points, CoefficientTable, GridSample, IncrementPyramid};
use crate::report::fmt_f64;
use crate::sampler::{sheet_covariance, standard_sheet, HurstVector, KroneckerSampler, SheetRecord};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Simulate,
    CovarianceCheck,
    BrownianDichotomy,
    FractionalCriteria,
    HolderScan,
    MomentScaling,
    Counterexample,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Simulate,
        Subcommand::CovarianceCheck,
        Subcommand::BrownianDichotomy,
        Subcommand::FractionalCriteria,
        Subcommand::HolderScan,
        Subcommand::MomentScaling,
        Subcommand::Counterexample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::CovarianceCheck => "covariance-check",
            Subcommand::BrownianDichotomy => "brownian-dichotomy",
            Subcommand::FractionalCriteria => "fractional-criteria",
            Subcommand::HolderScan => "holder-scan",
            Subcommand::MomentScaling => "moment-scaling",
            Subcommand::Counterexample => "counterexample",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand {s:?}")))
    }
}

fn one() -> u64 {
    1
}

/// Experiment parameters, read from JSON. Keys follow the mathematical
/// notation: `d`, `N` (grid generation), `M` (coefficient horizon), `H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<Subcommand>,
    pub d: usize,
    #[serde(rename = "N")]
    pub grid_gen: u32,
    /// Defaults to `N − 1`.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub max_gen: Option<u32>,
    /// Absent means the standard Brownian sheet, sampled by the fast path.
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<HurstVector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Paths per seed.
    #[serde(default = "one")]
    pub replicates: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Coarsest generation `n` of the adversarial figure scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<u32>,
    /// Selection exponent; defaults to `H̄`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    /// Coarsest generation entering moment fits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_generation: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_samples: Option<usize>,
    /// First generation of the criterion-B decay fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_from: Option<u32>,
    /// Grid point pairs `[s, t]` in integer grid coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[Vec<u64>; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub execution: Option<Execution>,
}

impl ExperimentConfig {
    pub fn new(d: usize, grid_gen: u32, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            subcommand: None,
            d,
            grid_gen,
            max_gen: None,
            hurst: None,
            q: Vec::new(),
            gamma: Vec::new(),
            seeds,
            replicates: 1,
            out: None,
            n: None,
            p_max: None,
            hbar: None,
            min_generation: None,
            min_samples: None,
            fit_from: None,
            pairs: None,
            execution: None,
        }
    }

    /// Parses a config, or the `config` entry of a manifest.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        let inner = match v {
            Value::Object(mut m) if m.contains_key("config") && m.contains_key("version") => {
                m.remove("config").expect("checked")
            }
            other => other,
        };
        Ok(serde_json::from_value(inner)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn horizon(&self) -> u32 {
        self.max_gen.unwrap_or(self.grid_gen.saturating_sub(1))
    }

    pub fn hurst_mean(&self) -> f64 {
        self.hurst.as_ref().map_or(0.5, |h| h.mean())
    }

    fn exec(&self) -> Execution {
        self.execution.unwrap_or_default()
    }

    fn paths(&self) -> Vec<(u64, u64)> {
        self.seeds
            .iter()
            .flat_map(|&s| (0..self.replicates).map(move |r| (s, r)))
            .collect()
    }

    pub fn validate(&self, sub: Subcommand) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if let Some(s) = self.subcommand {
            if s != sub {
                return bad(format!("config is for {s}, not {sub}"));
            }
        }
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if self.grid_gen == 0 {
            return bad("N must be at least 1".into());
        }
        grid_points(self.d, self.grid_gen)?;
        if self.horizon() + 1 > self.grid_gen {
            return bad(format!("M = {} must satisfy M <= N - 1 = {}", self.horizon(), self.grid_gen - 1));
        }
        if self.seeds.is_empty() {
            return bad("seeds must be nonempty".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if let Some(h) = &self.hurst {
            if h.dim() != self.d {
                return bad(format!("H has {} components, d = {}", h.dim(), self.d));
            }
        }
        if let Some(&q) = self.q.iter().find(|&&q| !(q > 0.0)) {
            return bad(format!("moment order {q} must be positive"));
        }
        if let Some(&g) = self.gamma.iter().find(|&&g| !(g > 0.0 && g <= 1.0)) {
            return bad(format!("Hölder exponent {g} outside (0, 1]"));
        }
        match sub {
            Subcommand::BrownianDichotomy => {
                if let Some(h) = &self.hurst {
                    if h.components().iter().any(|&x| x != 0.5) {
                        return bad("brownian-dichotomy runs the standard sheet; H must be 1/2 or absent".into());
                    }
                }
            }
            Subcommand::HolderScan if self.gamma.is_empty() => return bad("holder-scan needs a gamma list".into()),
            Subcommand::MomentScaling => {
                let lo = self.min_generation.unwrap_or(1);
                if lo >= self.horizon() {
                    return bad(format!("moment fit needs min_generation < M, got {lo} and {}", self.horizon()));
                }
            }
            Subcommand::Counterexample => {
                let (n, p) = (self.n.unwrap_or(1), self.p_max.unwrap_or(self.grid_gen - 1));
                if n > p || p + 1 > self.grid_gen {
                    return bad(format!("need n <= p_max <= N - 1, got n = {n}, p_max = {p}"));
                }
                let limit = (self.d as f64 - 1.0) / self.d as f64;
                if self.hurst_mean() > limit {
                    return bad(format!("counterexample needs mean Hurst index <= (d-1)/d = {limit}"));
                }
            }
            Subcommand::CovarianceCheck => {
                let side = 1u64 << self.grid_gen;
                for [s, t] in self.pairs.iter().flatten() {
                    if s.len() != self.d || t.len() != self.d || s.iter().chain(t).any(|&j| j > side) {
                        return bad("covariance pairs must be d grid coordinates in 0..=2^N".into());
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The config with defaults filled in, as recorded in manifests.
    pub fn resolved(&self, sub: Subcommand) -> Self {
        let mut c = self.clone();
        c.subcommand = Some(sub);
        c.max_gen = Some(self.horizon());
        match sub {
            Subcommand::CovarianceCheck => c.pairs = Some(self.pairs.clone().unwrap_or_else(|| default_pairs(self.d, self.grid_gen))),
            Subcommand::FractionalCriteria => c.fit_from = Some(self.fit_from.unwrap_or(3.min(self.horizon()))),
            Subcommand::MomentScaling => {
                c.min_generation = Some(self.min_generation.unwrap_or(1));
                c.min_samples = Some(self.min_samples.unwrap_or(MIN_MOMENT_SAMPLES));
                if c.q.is_empty() {
                    c.q = vec![2.0];
                }
            }
            Subcommand::Counterexample => {
                c.n = Some(self.n.unwrap_or(1));
                c.p_max = Some(self.p_max.unwrap_or(self.grid_gen - 1));
                c.hbar = Some(self.hbar.unwrap_or(self.hurst_mean()));
            }
            _ => {}
        }
        c
    }
}

/// Ten spread-out interior point pairs.
fn default_pairs(d: usize, gen: u32) -> Vec<[Vec<u64>; 2]> {
    let side = 1u64 << gen;
    (0..10u64)
        .map(|i| {
            let s = (0..d as u64).map(|j| 1 + (3 * i + 5 * j) % side).collect();
            let t = (0..d as u64).map(|j| 1 + (7 * i + 3 * j + 2) % side).collect();
            [s, t]
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: Vec<u8>,
}

/// Everything a run produces, before it touches the filesystem.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub summary: Value,
    pub files: Vec<OutputFile>,
}

impl RunOutput {
    pub fn file(&self, name: &str) -> Option<&OutputFile> {
        self.files.iter().find(|f| f.name == name)
    }

    pub fn manifest(&self) -> Value {
        json!({
            "version": VERSION,
            "subcommand": self.config.subcommand.map(|s| s.name()),
            "config": self.config,
            "seeds": self.config.seeds,
            "files": self.files.iter().map(|f| f.name.as_str()).collect::<Vec<_>>(),
        })
    }

    /// Writes every file and `manifest.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for f in &self.files {
            fs::write(dir.join(&f.name), &f.contents)?;
        }
        fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&self.manifest())?)?;
        Ok(())
    }
}

struct Table {
    wr: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Result<Self> {
        let mut wr = csv::Writer::from_writer(Vec::new());
        wr.write_record(header)?;
        Ok(Table { wr })
    }

    fn row(&mut self, fields: Vec<String>) -> Result<()> {
        self.wr.write_record(&fields)?;
        Ok(())
    }

    fn finish(self, name: &str) -> Result<OutputFile> {
        let contents = self
            .wr
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(OutputFile {
            name: name.to_string(),
            contents,
        })
    }
}

fn json_file(name: &str, v: &Value) -> Result<OutputFile> {
    let mut contents = serde_json::to_vec_pretty(v)?;
    contents.push(b'\n');
    Ok(OutputFile {
        name: name.to_string(),
        contents,
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Draws the paths of a config: the Kronecker sampler when `H` is given,
/// the white-noise fast path otherwise.
struct PathSource {
    sampler: Option<KroneckerSampler>,
    d: usize,
    gen: u32,
}

impl PathSource {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let sampler = match &cfg.hurst {
            Some(h) => Some(KroneckerSampler::new(h.clone(), cfg.grid_gen)?),
            None => None,
        };
        Ok(PathSource {
            sampler,
            d: cfg.d,
            gen: cfg.grid_gen,
        })
    }

    fn standard(cfg: &ExperimentConfig) -> Self {
        PathSource {
            sampler: None,
            d: cfg.d,
            gen: cfg.grid_gen,
        }
    }

    fn sample(&self, seed: u64, replicate: u64, exec: Execution) -> GridSample<f64> {
        match &self.sampler {
            Some(s) => s.sample_with(seed, replicate, exec),
            None => standard_sheet(self.d, self.gen, seed, replicate, exec).expect("size validated"),
        }
    }

    fn jitter(&self) -> Vec<f64> {
        self.sampler.as_ref().map_or_else(|| vec![0.0; self.d], |s| s.jitter())
    }
}

/// Runs `sub` on a validated copy of `cfg`.
pub fn run(sub: Subcommand, cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate(sub)?;
    let cfg = cfg.resolved(sub);
    let (summary, mut files) = match sub {
        Subcommand::Simulate => simulate(&cfg)?,
        Subcommand::CovarianceCheck => covariance_check(&cfg)?,
        Subcommand::BrownianDichotomy => brownian_dichotomy(&cfg)?,
        Subcommand::FractionalCriteria => fractional_criteria(&cfg)?,
        Subcommand::HolderScan => holder_scan(&cfg)?,
        Subcommand::MomentScaling => moment_scaling(&cfg)?,
        Subcommand::Counterexample => counterexample(&cfg)?,
    };
    files.push(json_file("summary.json", &summary)?);
    Ok(RunOutput {
        config: cfg,
        summary,
        files,
    })
}

type Produced = (Value, Vec<OutputFile>);

fn simulate(cfg: &ExperimentConfig) -> Result<Produced> {
    let src = PathSource::new(cfg)?;
    let exec = cfg.exec();
    let m = cfg.horizon();
    let hurst = cfg.hurst.clone().unwrap_or_else(|| HurstVector::standard(cfg.d));
    let mut files = Vec::new();
    let mut paths = Vec::new();
    for (seed, rep) in cfg.paths() {
        let grid = src.sample(seed, rep, exec);
        let tab = CoefficientTable::from_pyramid_with(&IncrementPyramid::with_execution(&grid, exec), m, exec)?;
        let stem = format!("s{seed}_r{rep}");
        let rec = SheetRecord {
            hurst: hurst.clone(),
            seed,
            grid,
        };
        let mut bin = Vec::new();
        rec.write_binary(&mut bin)?;
        files.push(OutputFile {
            name: format!("sheet_{stem}.bin"),
            contents: bin,
        });
        if cfg.d <= 2 {
            let mut csv_out = Vec::new();
            rec.write_csv(&mut csv_out)?;
            files.push(OutputFile {
                name: format!("sheet_{stem}.csv"),
                contents: csv_out,
            });
        }
        let mut lam = Vec::new();
        tab.write_csv(&mut lam)?;
        files.push(OutputFile {
            name: format!("lambda_{stem}.csv"),
            contents: lam,
        });
        paths.push(json!({
            "seed": seed,
            "replicate": rep,
            "corner_value": rec.grid.corner_value(),
            "lambda_header": tab.header(),
        }));
    }
    let summary = json!({
        "subcommand": "simulate",
        "H": hurst,
        "jitter": src.jitter(),
        "paths": paths,
    });
    Ok((summary, files))
}

fn covariance_check(cfg: &ExperimentConfig) -> Result<Produced> {
    let src = PathSource::new(cfg)?;
    let hurst = cfg.hurst.clone().unwrap_or_else(|| HurstVector::standard(cfg.d));
    let pairs = cfg.pairs.clone().expect("resolved");
    let exec = cfg.exec();
    let paths = cfg.paths();
    let products: Vec<Vec<f64>> = exec.map(paths.len(), |i| {
        let (seed, rep) = paths[i];
        let g = src.sample(seed, rep, Execution::Sequential);
        pairs.iter().map(|[s, t]| g.at(s) * g.at(t)).collect()
    });
    let scale = 1.0 / (1u64 << cfg.grid_gen) as f64;
    let to_point = |p: &[u64]| p.iter().map(|&j| j as f64 * scale).collect::<Vec<f64>>();
    let n = paths.len() as f64;
    let mut header: Vec<String> = vec!["pair".into()];
    header.extend((1..=cfg.d).map(|i| format!("s{i}")));
    header.extend((1..=cfg.d).map(|i| format!("t{i}")));
    header.extend(["empirical", "exact", "stderr", "z"].map(String::from));
    let mut table = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>())?;
    let mut within = 0;
    let mut zs = Vec::new();
    for (pi, [s, t]) in pairs.iter().enumerate() {
        let col: Vec<f64> = products.iter().map(|p| p[pi]).collect();
        let mean = pairwise_sum(&col) / n;
        let dev: Vec<f64> = col.iter().map(|x| (x - mean).powi(2)).collect();
        let se = if paths.len() > 1 {
            (pairwise_sum(&dev) / (n - 1.0) / n).sqrt()
        } else {
            f64::NAN
        };
        let exact = sheet_covariance(&hurst, &to_point(s), &to_point(t))?;
        let z = if se > 0.0 { (mean - exact) / se } else { 0.0 };
        if z.abs() <= 3.0 {
            within += 1;
        }
        zs.push(z);
        let mut rec = vec![pi.to_string()];
        rec.extend(s.iter().chain(t).map(|j| j.to_string()));
        rec.extend([mean, exact, se, z].map(fmt_f64));
        table.row(rec)?;
    }
    let summary = json!({
        "subcommand": "covariance-check",
        "H": hurst,
        "paths": paths.len(),
        "pairs": pairs.len(),
        "within_3_stderr": within,
        "z": zs,
        "jitter": src.jitter(),
    });
    Ok((summary, vec![table.finish("covariance.csv")?]))
}

fn tables_for(cfg: &ExperimentConfig, src: &PathSource) -> Vec<((u64, u64), IncrementPyramid<f64>)> {
    let exec = cfg.exec();
    let paths = cfg.paths();
    let pyrs = exec.map(paths.len(), |i| {
        let (seed, rep) = paths[i];
        IncrementPyramid::new(&src.sample(seed, rep, Execution::Sequential))
    });
    paths.into_iter().zip(pyrs).collect()
}

fn brownian_dichotomy(cfg: &ExperimentConfig) -> Result<Produced> {
    let src = PathSource::standard(cfg);
    let m = cfg.horizon();
    let d = cfg.d as f64;
    let mut table = Table::new(&["seed", "replicate", "n", "T", "S", "criterion_a"])?;
    let mut per_n: Vec<Vec<(f64, f64)>> = vec![Vec::new(); m as usize + 1];
    for ((seed, rep), pyr) in tables_for(cfg, &src) {
        let tab = CoefficientTable::from_pyramid(&pyr, m)?;
        for n in 0..=m {
            let (t, s) = t_s_statistics(&tab, n)?;
            let a = criterion_a_statistic(&tab, n)?;
            per_n[n as usize].push((t, a));
            table.row(vec![
                seed.to_string(),
                rep.to_string(),
                n.to_string(),
                fmt_f64(t),
                fmt_f64(s),
                fmt_f64(a),
            ])?;
        }
    }
    let half_normal = (2.0 / std::f64::consts::PI).sqrt();
    let levels: Vec<Value> = per_n
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let k = v.len() as f64;
            let ts: Vec<f64> = v.iter().map(|p| p.0).collect();
            let mean = pairwise_sum(&ts) / k;
            let var = pairwise_sum(&ts.iter().map(|t| (t - mean).powi(2)).collect::<Vec<_>>()) / (k - 1.0).max(1.0);
            json!({
                "n": n,
                "mean_T": mean,
                "sd_T": var.sqrt(),
                "expected_sd_T": (2f64.powf(-(n as f64) * d) * (1.0 - 2.0 / std::f64::consts::PI)).sqrt(),
                "mean_criterion_a": pairwise_sum(&v.iter().map(|p| p.1).collect::<Vec<_>>()) / k,
                "min_criterion_a": v.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
            })
        })
        .collect();
    let summary = json!({
        "subcommand": "brownian-dichotomy",
        "expected_mean_T": half_normal,
        "paths": cfg.paths().len(),
        "levels": levels,
    });
    Ok((summary, vec![table.finish("dichotomy.csv")?]))
}

/// Whether `v` is strictly decreasing.
fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fractional_criteria(cfg: &ExperimentConfig) -> Result<Produced> {
    let src = PathSource::new(cfg)?;
    let m = cfg.horizon();
    let from = cfg.fit_from.expect("resolved");
    let hurst = cfg.hurst.as_ref().map(|h| h.components().to_vec());
    let mut table = Table::new(&["seed", "replicate", "n", "stat_name", "value"])?;
    let mut per_path = Vec::new();
    let (mut decreasing, mut rates) = (0, Vec::new());
    for ((seed, rep), pyr) in tables_for(cfg, &src) {
        let tab = CoefficientTable::from_pyramid(&pyr, m)?;
        let report = CriterionReport::from_table(&tab, hurst.clone(), false);
        for (n, name, v) in report.rows() {
            table.row(vec![seed.to_string(), rep.to_string(), n.to_string(), name.into(), fmt_f64(v)])?;
        }
        let tail = &report.criterion_b_terms[from as usize..];
        let dec = strictly_decreasing(tail);
        let rate = log2_rate(from, tail).map(|f| f.slope).unwrap_or(f64::NAN);
        decreasing += dec as usize;
        rates.push(rate);
        per_path.push(json!({
            "seed": seed,
            "replicate": rep,
            "strictly_decreasing": dec,
            "log2_rate": rate,
        }));
    }
    let d = cfg.d as f64;
    let summary = json!({
        "subcommand": "fractional-criteria",
        "fit_from": from,
        "expected_log2_rate": d - 1.0 - d * cfg.hurst_mean(),
        "median_log2_rate": median(rates),
        "strictly_decreasing_paths": decreasing,
        "paths": per_path,
        "jitter": src.jitter(),
    });
    Ok((summary, vec![table.finish("criteria.csv")?]))
}

fn holder_scan(cfg: &ExperimentConfig) -> Result<Produced> {
    let src = PathSource::new(cfg)?;
    let m = cfg.horizon();
    let mut table = Table::new(&["seed", "replicate", "gamma", "n", "level_ratio", "running_max"])?;
    let mut per_path = Vec::new();
    for ((seed, rep), pyr) in tables_for(cfg, &src) {
        let mut maxima = Vec::new();
        for &gamma in &cfg.gamma {
            let profile = holder_profile_from(&pyr, gamma, m);
            let mut run_max = 0.0f64;
            for (n, &r) in profile.iter().enumerate() {
                run_max = run_max.max(r);
                table.row(vec![
                    seed.to_string(),
                    rep.to_string(),
                    fmt_f64(gamma),
                    n.to_string(),
                    fmt_f64(r),
                    fmt_f64(run_max),
                ])?;
            }
            maxima.push(json!({"gamma": gamma, "holder_ratio": run_max}));
        }
        per_path.push(json!({"seed": seed, "replicate": rep, "ratios": maxima}));
    }
    let summary = json!({
        "subcommand": "holder-scan",
        "hbar": cfg.hurst_mean(),
        "paths": per_path,
        "jitter": src.jitter(),
    });
    Ok((summary, vec![table.finish("holder.csv")?]))
}

fn moment_scaling(cfg: &ExperimentConfig) -> Result<Produced> {
    let src = PathSource::new(cfg)?;
    let lo = cfg.min_generation.expect("resolved");
    let hi = cfg.horizon();
    let min_samples = cfg.min_samples.expect("resolved");
    let pyramids = tables_for(cfg, &src);
    let samples: Vec<GenerationSamples> = (lo..=hi)
        .map(|g| GenerationSamples {
            dim: cfg.d,
            gen: g,
            increments: pyramids.iter().flat_map(|(_, p)| p.level(g).iter().copied()).collect(),
        })
        .collect();
    let mut table = Table::new(&["q", "gen", "log2_volume", "samples", "moment"])?;
    let mut fits = Vec::new();
    for &q in &cfg.q {
        let fit = moment_scaling_estimate(&samples, q, min_samples)?;
        for gm in &fit.moments {
            table.row(vec![
                fmt_f64(q),
                gm.gen.to_string(),
                fmt_f64(gm.log2_volume),
                gm.samples.to_string(),
                fmt_f64(gm.moment),
            ])?;
        }
        fits.push(json!({
            "q": q,
            "slope": fit.slope,
            "delta_hat": fit.delta_hat,
            "residual": fit.residual,
            "expected_slope": q * cfg.hurst_mean(),
            "excluded": fit.excluded,
        }));
    }
    let summary = json!({
        "subcommand": "moment-scaling",
        "paths": pyramids.len(),
        "generations": [lo, hi],
        "fits": fits,
        "jitter": src.jitter(),
    });
    Ok((summary, vec![table.finish("moments.csv")?]))
}

fn counterexample(cfg: &ExperimentConfig) -> Result<Produced> {
    let src = PathSource::new(cfg)?;
    let (n, p_max, hbar) = (cfg.n.expect("resolved"), cfg.p_max.expect("resolved"), cfg.hbar.expect("resolved"));
    let exec = cfg.exec();
    let paths = cfg.paths();
    let results = exec.map(paths.len(), |i| {
        let (seed, rep) = paths[i];
        adversarial_figure(&src.sample(seed, rep, Execution::Sequential), n, p_max, hbar)
    });
    let mut table = Table::new(&[
        "seed",
        "replicate",
        "cubes",
        "coverage",
        "coverage_at_least_half",
        "increment",
        "volume",
        "perimeter",
    ])?;
    let mut files = Vec::new();
    let mut coverages = Vec::new();
    let mut reports = Vec::new();
    for (&(seed, rep), res) in paths.iter().zip(results) {
        let (fig, found) = res?;
        table.row(vec![
            seed.to_string(),
            rep.to_string(),
            fig.cubes().len().to_string(),
            fmt_f64(found.coverage),
            found.coverage_at_least_half.to_string(),
            fmt_f64(found.increment),
            fmt_f64(found.volume),
            fmt_f64(found.perimeter),
        ])?;
        files.push(json_file(&format!("figure_s{seed}_r{rep}.json"), &serde_json::to_value(&fig)?)?);
        coverages.push(found.coverage);
        reports.push(json!({"seed": seed, "replicate": rep, "report": found}));
    }
    let half = coverages.iter().filter(|&&c| c >= 0.5).count();
    let summary = json!({
        "subcommand": "counterexample",
        "n": n,
        "p_max": p_max,
        "hbar": hbar,
        "median_coverage": median(coverages),
        "paths_with_coverage_at_least_half": half,
        "paths": reports,
        "jitter": src.jitter(),
    });
    files.insert(0, table.finish("counterexample.csv")?);
    Ok((summary, files))
}
