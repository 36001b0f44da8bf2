//! Exact Gaussian sampling of fractional Brownian sheets on dyadic grids.
//!
//! The covariance `Γ(s, t) = ∏_i φ^{H_i}(s_i, t_i)` is a tensor product, so
//! on the interior grid `{1/2^N, …, 1}^d` the joint covariance is the
//! Kronecker product of the per-axis matrices `C_i[j, j'] = φ^{H_i}(j/2^N,
//! j'/2^N)`. With `C_i = L_i L_iᵀ`, applying every `L_i` along its axis to a
//! white-noise tensor yields a vector of covariance `⊗ C_i`. Points with a
//! zero coordinate have zero variance and are set to zero.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cube::Rectangle;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::increments::{grid_points, GridSample};
use crate::report::fmt_f64;
use crate::rng::fill_standard_normal;

/// Diagonal jitter factor applied when a per-axis Cholesky fails.
pub const CHOLESKY_JITTER: f64 = 1e-12;

/// Fibers per block in the mode-product kernel.
const BLOCK: usize = 32;

/// `(H_1, …, H_d)`, each in `(0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct HurstVector(Vec<f64>);

impl HurstVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("empty Hurst vector".into()));
        }
        if let Some(&h) = components.iter().find(|&&h| !(h > 0.0 && h < 1.0)) {
            return Err(Error::InvalidHurst(h));
        }
        Ok(HurstVector(components))
    }

    pub fn uniform(dim: usize, h: f64) -> Result<Self> {
        Self::new(vec![h; dim])
    }

    /// The Brownian sheet, `H = (1/2, …, 1/2)`.
    pub fn standard(dim: usize) -> Self {
        HurstVector(vec![0.5; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    /// `H̄ = (H_1 + … + H_d) / d`.
    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

impl TryFrom<Vec<f64>> for HurstVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<HurstVector> for Vec<f64> {
    fn from(h: HurstVector) -> Self {
        h.0
    }
}

#[inline]
fn phi_raw(h: f64, t: f64, s: f64) -> f64 {
    let e = 2.0 * h;
    (t.abs().powf(e) + s.abs().powf(e) - (t - s).abs().powf(e)) / 2.0
}

/// `φ^h(t, t') = (|t|^{2h} + |t'|^{2h} − |t − t'|^{2h}) / 2`.
pub fn phi(h: f64, t: f64, t2: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidHurst(h));
    }
    Ok(phi_raw(h, t, t2))
}

/// `Γ(s, t) = ∏_i φ^{H_i}(s_i, t_i)`.
pub fn sheet_covariance(hurst: &HurstVector, s: &[f64], t: &[f64]) -> Result<f64> {
    for p in [s, t] {
        if p.len() != hurst.dim() {
            return Err(Error::DimensionMismatch {
                expected: hurst.dim(),
                got: p.len(),
            });
        }
    }
    Ok(hurst
        .components()
        .iter()
        .zip(s.iter().zip(t))
        .map(|(&h, (&a, &b))| phi_raw(h, a, b))
        .product())
}

/// Closed-form `Cov(Δ_{W^H} R, Δ_{W^H} R')` for boxes given as per-axis
/// `(lower, upper)` pairs.
pub fn increment_covariance_bounds(hurst: &HurstVector, r: &[(f64, f64)], r2: &[(f64, f64)]) -> Result<f64> {
    for b in [r, r2] {
        if b.len() != hurst.dim() {
            return Err(Error::DimensionMismatch {
                expected: hurst.dim(),
                got: b.len(),
            });
        }
    }
    let d = hurst.dim();
    let prod: f64 = hurst
        .components()
        .iter()
        .zip(r.iter().zip(r2))
        .map(|(&h, (&(a, b), &(a2, b2)))| {
            let p = |x: f64| x.abs().powf(2.0 * h);
            p(b2 - a) + p(b - a2) - p(a2 - a) - p(b - b2)
        })
        .product();
    Ok(prod / (1u64 << d) as f64)
}

pub fn increment_covariance(hurst: &HurstVector, r: &Rectangle, r2: &Rectangle) -> Result<f64> {
    increment_covariance_bounds(hurst, &r.bounds_f64(), &r2.bounds_f64())
}

/// Dense lower Cholesky factor, row-major; `None` if a pivot is not
/// positive.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
            let dot: f64 = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
            let v = a[i * n + j] - dot;
            if i == j {
                if !(v > 0.0) || !v.is_finite() {
                    return None;
                }
                l[i * n + i] = v.sqrt();
            } else {
                l[i * n + j] = v / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Cholesky factor of one axis' `φ` covariance on `{1/2^N, …, 1}`.
#[derive(Clone, Debug)]
pub struct AxisFactor {
    hurst: f64,
    n: usize,
    lower: Vec<f64>,
    jitter: f64,
}

impl AxisFactor {
    pub fn new(hurst: f64, gen: u32, axis: usize) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidHurst(hurst));
        }
        let n = 1usize << gen;
        let step = 1.0 / n as f64;
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                cov[i * n + j] = phi_raw(hurst, (i + 1) as f64 * step, (j + 1) as f64 * step);
            }
        }
        if let Some(lower) = cholesky(&cov, n) {
            return Ok(AxisFactor {
                hurst,
                n,
                lower,
                jitter: 0.0,
            });
        }
        for i in 0..n {
            cov[i * n + i] *= 1.0 + CHOLESKY_JITTER;
        }
        cholesky(&cov, n)
            .map(|lower| AxisFactor {
                hurst,
                n,
                lower,
                jitter: CHOLESKY_JITTER,
            })
            .ok_or(Error::NotPositiveDefinite {
                axis,
                jitter: CHOLESKY_JITTER,
            })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Row-major lower-triangular factor.
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// Relative diagonal jitter that was needed, `0` if none.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `out ← L · buf` for a block of `BLOCK` fibers laid out row by row.
    fn apply_block(&self, buf: &[[f64; BLOCK]], out: &mut [[f64; BLOCK]]) {
        let n = self.n;
        for (a, acc) in out.iter_mut().enumerate() {
            let mut sum = [0.0; BLOCK];
            for (&l, src) in self.lower[a * n..a * n + a + 1].iter().zip(buf) {
                for j in 0..BLOCK {
                    sum[j] += l * src[j];
                }
            }
            *acc = sum;
        }
    }
}

/// Applies `factor` along `axis` of an `n^d` tensor stored with axis 0
/// slowest.
fn mode_product(factor: &AxisFactor, data: &[f64], dim: usize, axis: usize, exec: Execution) -> Vec<f64> {
    let n = factor.len();
    let inner = n.pow((dim - 1 - axis) as u32);
    let fibers = data.len() / n;
    let blocks = fibers.div_ceil(BLOCK);
    let fiber_base = |f: usize| (f / inner) * n * inner + f % inner;
    let results = exec.map(blocks, |bi| {
        let first = bi * BLOCK;
        let width = BLOCK.min(fibers - first);
        let mut buf = vec![[0.0; BLOCK]; n];
        for j in 0..width {
            let base = fiber_base(first + j);
            for (b, row) in buf.iter_mut().enumerate() {
                row[j] = data[base + b * inner];
            }
        }
        let mut res = vec![[0.0; BLOCK]; n];
        factor.apply_block(&buf, &mut res);
        res
    });
    let mut out = vec![0.0; data.len()];
    for (bi, res) in results.iter().enumerate() {
        let first = bi * BLOCK;
        let width = BLOCK.min(fibers - first);
        for j in 0..width {
            let base = fiber_base(first + j);
            for (a, row) in res.iter().enumerate() {
                out[base + a * inner] = row[j];
            }
        }
    }
    out
}

/// Embeds an interior `(2^N)^d` tensor into the `(2^N + 1)^d` grid.
fn embed_interior(dim: usize, gen: u32, interior: &[f64]) -> Vec<f64> {
    let n = 1usize << gen;
    let side = n + 1;
    let mut grid = vec![0.0; grid_points(dim, gen).expect("checked size")];
    let mut coord = vec![0usize; dim];
    for &v in interior {
        let off = coord.iter().fold(0usize, |acc, &c| acc * side + c + 1);
        grid[off] = v;
        for i in (0..dim).rev() {
            coord[i] += 1;
            if coord[i] < n {
                break;
            }
            coord[i] = 0;
        }
    }
    grid
}

fn check_size(dim: usize, gen: u32) -> Result<()> {
    grid_points(dim, gen)?;
    Ok(())
}

/// Kronecker–Cholesky sampler: per-axis factors computed once, shared
/// read-only by every replicate.
#[derive(Clone, Debug)]
pub struct KroneckerSampler {
    hurst: HurstVector,
    gen: u32,
    factors: Vec<Arc<AxisFactor>>,
}

impl KroneckerSampler {
    pub fn new(hurst: HurstVector, gen: u32) -> Result<Self> {
        check_size(hurst.dim(), gen)?;
        let mut factors: Vec<Arc<AxisFactor>> = Vec::with_capacity(hurst.dim());
        for (axis, &h) in hurst.components().iter().enumerate() {
            let shared = factors.iter().find(|f| f.hurst().to_bits() == h.to_bits()).cloned();
            let f = match shared {
                Some(f) => f,
                None => Arc::new(AxisFactor::new(h, gen, axis)?),
            };
            factors.push(f);
        }
        Ok(KroneckerSampler { hurst, gen, factors })
    }

    pub fn hurst(&self) -> &HurstVector {
        &self.hurst
    }

    pub fn gen(&self) -> u32 {
        self.gen
    }

    pub fn factor(&self, axis: usize) -> &AxisFactor {
        &self.factors[axis]
    }

    /// Per-axis jitter applied, for output metadata.
    pub fn jitter(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.jitter()).collect()
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> GridSample<f64> {
        self.sample_with(seed, replicate, Execution::default())
    }

    pub fn sample_with(&self, seed: u64, replicate: u64, exec: Execution) -> GridSample<f64> {
        let d = self.hurst.dim();
        let n = 1usize << self.gen;
        let mut tensor = vec![0.0; n.pow(d as u32)];
        fill_standard_normal(seed, replicate, &mut tensor, exec);
        for (axis, f) in self.factors.iter().enumerate() {
            tensor = mode_product(f, &tensor, d, axis, exec);
        }
        GridSample::from_parts(d, self.gen, embed_interior(d, self.gen, &tensor))
    }
}

/// One fractional Brownian sheet path, replicate 0 of `seed`.
pub fn sample_sheet(hurst: &HurstVector, gen: u32, seed: u64) -> Result<GridSample<f64>> {
    Ok(KroneckerSampler::new(hurst.clone(), gen)?.sample(seed, 0))
}

/// Brownian sheet by cumulative sums of iid `N(0, 2^{-Nd})` cube masses.
pub fn sample_standard_sheet(dim: usize, gen: u32, seed: u64) -> Result<GridSample<f64>> {
    standard_sheet(dim, gen, seed, 0, Execution::default())
}

pub fn standard_sheet(dim: usize, gen: u32, seed: u64, replicate: u64, exec: Execution) -> Result<GridSample<f64>> {
    check_size(dim, gen)?;
    let n = 1usize << gen;
    let mut noise = vec![0.0; n.pow(dim as u32)];
    fill_standard_normal(seed, replicate, &mut noise, exec);
    let sd = 2f64.powf(-(gen as f64) * dim as f64 / 2.0);
    noise.iter_mut().for_each(|v| *v *= sd);
    let mut grid = embed_interior(dim, gen, &noise);
    let side = n + 1;
    for axis in 0..dim {
        let stride = side.pow((dim - 1 - axis) as u32);
        for i in 0..grid.len() {
            if (i / stride) % side != 0 {
                grid[i] += grid[i - stride];
            }
        }
    }
    Ok(GridSample::from_parts(dim, gen, grid))
}

/// A sampled path with the parameters needed to regenerate it.
#[derive(Clone, Debug, PartialEq)]
pub struct SheetRecord {
    pub hurst: HurstVector,
    pub seed: u64,
    pub grid: GridSample<f64>,
}

impl SheetRecord {
    /// Little-endian: `d: u64, N: u64, H_1..H_d: f64, seed: u64`, then the
    /// `(2^N + 1)^d` values as `f64` in lexicographic order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        w.write_all(&(g.dim() as u64).to_le_bytes())?;
        w.write_all(&(g.gen() as u64).to_le_bytes())?;
        for &h in self.hurst.components() {
            w.write_all(&h.to_le_bytes())?;
        }
        w.write_all(&self.seed.to_le_bytes())?;
        let mut bytes = Vec::with_capacity(g.values().len() * 8);
        for v in g.values() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let dim = u64::from_le_bytes(next(&mut r)?) as usize;
        let gen = u64::from_le_bytes(next(&mut r)?);
        if dim == 0 || dim > 64 || gen > 30 {
            return Err(Error::InvalidArgument(format!("bad header: d = {dim}, N = {gen}")));
        }
        let gen = gen as u32;
        let mut h = Vec::with_capacity(dim);
        for _ in 0..dim {
            h.push(f64::from_le_bytes(next(&mut r)?));
        }
        let seed = u64::from_le_bytes(next(&mut r)?);
        let total = grid_points(dim, gen)?;
        let mut bytes = vec![0u8; total * 8];
        r.read_exact(&mut bytes)?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(SheetRecord {
            hurst: HurstVector::new(h)?,
            seed,
            grid: GridSample::new(dim, gen, values)?,
        })
    }

    /// CSV with columns `j1[,j2],value` for `d ≤ 2`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let g = &self.grid;
        if g.dim() > 2 {
            return Err(Error::InvalidArgument("CSV export supports d <= 2".into()));
        }
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=g.dim()).map(|i| format!("j{i}")).collect();
        header.push("value".into());
        wr.write_record(&header)?;
        for (i, &v) in g.values().iter().enumerate() {
            let mut rec: Vec<String> = g.point_of(i).iter().map(|j| j.to_string()).collect();
            rec.push(fmt_f64(v));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}
