use std::fs::File;

use sheetcharge::sampler::{standard_sheet, SheetRecord};
use sheetcharge::{run, DyadicCube, Execution, ExperimentConfig, HurstVector, KroneckerSampler, Subcommand};

/// Mean and standard error of `xs`.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn simulate_files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(2, 5, vec![3, 4]);
    cfg.hurst = Some(HurstVector::new(vec![0.7, 0.6]).unwrap());
    let out = run(Subcommand::Simulate, &cfg).unwrap();
    out.write_to(dir.path()).unwrap();
    let sampler = KroneckerSampler::new(cfg.hurst.clone().unwrap(), 5).unwrap();
    for seed in [3, 4] {
        let rec = SheetRecord::read_binary(File::open(dir.path().join(format!("sheet_s{seed}_r0.bin"))).unwrap()).unwrap();
        assert_eq!(rec.seed, seed);
        assert_eq!(rec.hurst.components(), &[0.7, 0.6]);
        assert_eq!(rec.grid, sampler.sample(seed, 0));
    }
}

#[test]
fn manifest_reproduces_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(2, 6, vec![11]);
    cfg.hurst = Some(HurstVector::uniform(2, 0.8).unwrap());
    cfg.max_gen = Some(5);
    let first = run(Subcommand::FractionalCriteria, &cfg).unwrap();
    first.write_to(dir.path()).unwrap();
    let again = ExperimentConfig::load(&dir.path().join("manifest.json")).unwrap();
    let second = run(Subcommand::FractionalCriteria, &again).unwrap();
    assert_eq!(first.files, second.files);
    for f in &first.files {
        assert_eq!(std::fs::read(dir.path().join(&f.name)).unwrap(), f.contents);
    }
}

#[test]
fn cube_increment_variance_matches_volume_power() {
    let h = HurstVector::new(vec![0.75, 0.55]).unwrap();
    let sampler = KroneckerSampler::new(h.clone(), 4).unwrap();
    let cubes: Vec<_> = [(1, 0), (2, 5), (3, 40)].iter().map(|&(g, k)| DyadicCube::new(2, g, k).unwrap()).collect();
    let paths: Vec<_> = (0..4000).map(|r| sampler.sample(17, r)).collect();
    for c in &cubes {
        let expected = c.volume().to_f64().powf(2.0 * h.mean());
        let xs: Vec<f64> = paths.iter().map(|w| w.cube_increment(c).unwrap().powi(2) / expected).collect();
        let (m, se) = mean_se(&xs);
        assert!((m - 1.0).abs() < 4.0 * se, "cube {c:?}: {m} +/- {se}");
    }
}

#[test]
fn half_hurst_sampler_agrees_with_standard_sheet() {
    let kron = KroneckerSampler::new(HurstVector::standard(2), 4).unwrap();
    let reps = 4000;
    let ensembles = [
        (0..reps).map(|r| kron.sample(5, r)).collect::<Vec<_>>(),
        (0..reps).map(|r| standard_sheet(2, 4, 5, r, Execution::Sequential).unwrap()).collect(),
    ];
    let points = [[4u64, 12], [12, 8], [16, 16]];
    for (i, s) in points.iter().enumerate() {
        for t in &points[i..] {
            let exact: f64 = (0..2).map(|a| s[a].min(t[a]) as f64 / 16.0).product();
            for paths in &ensembles {
                let xs: Vec<f64> = paths.iter().map(|w| w.at(s) * w.at(t)).collect();
                let (m, se) = mean_se(&xs);
                assert!((m - exact).abs() < 4.0 * se, "{s:?} {t:?}: {m} vs {exact}");
            }
        }
    }
}
