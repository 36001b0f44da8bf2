//! Adversarial figures built from bottom-layer cubes with large increments.
//!
//! Over each point `x` of the bottom face `[0,1]^{d−1} × {0}` sits a column
//! of cubes `K(x, p)`, one per generation, all touching `{x_d = 0}`. Scanning
//! generations coarse to fine and keeping, per column, the first cube with
//! `Δ_f(K) ≥ |K|^{h̄}` yields pairwise disjoint maximal cubes whose union
//! has a large increment but small volume and bounded perimeter.

use serde::{Deserialize, Serialize};

use crate::cube::{morton, DyadicCube, Figure};
use crate::error::{Error, Result};
use crate::exec::pairwise_sum;
use crate::increments::{GridSample, IncrementPyramid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub n: u32,
    pub p_max: u32,
    pub hbar: f64,
    /// Cubes selected at each generation `n..=p_max`.
    pub selected_per_level: Vec<usize>,
    /// `Σ |K̃|`, the bottom-face area covered by selected cubes.
    pub coverage: f64,
    pub coverage_at_least_half: bool,
    /// `Σ |K|^{h̄}` over selected cubes.
    pub threshold_sum: f64,
    pub increment: f64,
    pub volume: f64,
    pub perimeter: f64,
    /// `2d · coverage`, the sum of the selected cubes' perimeters.
    pub perimeter_bound: f64,
}

pub fn adversarial_figure(f: &GridSample<f64>, n: u32, p_max: u32, hbar: f64) -> Result<(Figure, CounterexampleReport)> {
    if n > p_max || p_max + 1 > f.gen() {
        return Err(Error::InvalidArgument(format!(
            "need n <= p_max <= N - 1, got n = {n}, p_max = {p_max}, N = {}",
            f.gen()
        )));
    }
    if !hbar.is_finite() {
        return Err(Error::InvalidArgument(format!("threshold exponent {hbar} is not finite")));
    }
    let d = f.dim();
    let t = d - 1;
    let pyr = IncrementPyramid::new(f);
    let mut cubes = Vec::new();
    let mut increments = Vec::new();
    let mut selected_per_level = Vec::new();
    let (mut coverage, mut threshold_sum) = (0.0, 0.0);
    // Columns at generation p whose coarser cubes were all rejected, indexed
    // by the Morton number of their tangential coordinates.
    let mut alive = vec![true; 1usize << (n as usize * t)];
    for p in n..=p_max {
        if p > n {
            alive = (0..alive.len() << t).map(|c| alive[c >> t]).collect();
        }
        let level = pyr.level(p);
        let threshold = 2f64.powf(-((p as usize * d) as f64) * hbar);
        let mut count = 0;
        for (col, live) in alive.iter_mut().enumerate() {
            if !*live {
                continue;
            }
            let mut coords = morton::decode(t, p, col as u64);
            coords.push(0);
            let k = morton::encode(p, &coords);
            let inc = level[k as usize];
            if inc >= threshold {
                *live = false;
                count += 1;
                cubes.push(DyadicCube::new(d, p, k)?);
                increments.push(inc);
                coverage += 2f64.powi(-((p as usize * t) as i32));
                threshold_sum += threshold;
            }
        }
        selected_per_level.push(count);
    }
    let figure = Figure::new(d, cubes)?;
    let report = CounterexampleReport {
        n,
        p_max,
        hbar,
        selected_per_level,
        coverage,
        coverage_at_least_half: coverage >= 0.5,
        threshold_sum,
        increment: pairwise_sum(&increments),
        volume: figure.volume().to_f64(),
        perimeter: figure.perimeter().to_f64(),
        perimeter_bound: 2.0 * d as f64 * coverage,
    };
    Ok((figure, report))
}
