//! Rectangular increments of grid-sampled functions and their
//! Faber–Schauder coefficient tables.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::cube::{morton, DyadicCube, Figure, Rectangle};
use crate::dyadic::{Dyadic, Scalar, Sqrt2Dyadic};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::haar::{hadamard_in_place, HaarIndex};
use crate::report::fmt_f64;

/// Largest number of grid points a sample may hold.
pub const MAX_GRID_POINTS: u128 = 1 << 30;

/// Values of a function of `C_0([0, 1]^d)` at the points `j / 2^N`,
/// `j ∈ {0, …, 2^N}^d`, stored lexicographically with axis 0 slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSample<T = f64> {
    dim: usize,
    gen: u32,
    values: Vec<T>,
}

pub(crate) fn grid_points(dim: usize, gen: u32) -> Result<usize> {
    if dim == 0 || gen >= 31 {
        return Err(Error::InvalidArgument(format!(
            "grid of dimension {dim} and generation {gen}"
        )));
    }
    let side = (1u128 << gen) + 1;
    let total = side
        .checked_pow(dim as u32)
        .filter(|&t| t <= MAX_GRID_POINTS)
        .ok_or(Error::TooLarge(side.saturating_pow(dim as u32)))?;
    Ok(total as usize)
}

impl<T: Scalar> GridSample<T> {
    /// Validates the length and that every point with a zero coordinate
    /// carries the value zero.
    pub fn new(dim: usize, gen: u32, values: Vec<T>) -> Result<Self> {
        let total = grid_points(dim, gen)?;
        if values.len() != total {
            return Err(Error::InvalidArgument(format!(
                "grid of generation {gen} in dimension {dim} needs {total} values, got {}",
                values.len()
            )));
        }
        let g = GridSample { dim, gen, values };
        for (i, v) in g.values.iter().enumerate() {
            let p = g.point_of(i);
            if p.contains(&0) && *v != T::zero() {
                return Err(Error::NotVanishing(p));
            }
        }
        Ok(g)
    }

    /// Evaluates `f` at every interior point `j` (all `j_i ≥ 1`); points on
    /// the coordinate hyperfacets are set to zero.
    pub fn from_fn(dim: usize, gen: u32, f: impl Fn(&[u64]) -> T) -> Result<Self> {
        let total = grid_points(dim, gen)?;
        let mut g = GridSample {
            dim,
            gen,
            values: Vec::with_capacity(total),
        };
        for i in 0..total {
            let p = g.point_of(i);
            let v = if p.contains(&0) { T::zero() } else { f(&p) };
            g.values.push(v);
        }
        Ok(g)
    }

    pub fn zeros(dim: usize, gen: u32) -> Result<Self> {
        let total = grid_points(dim, gen)?;
        Ok(GridSample {
            dim,
            gen,
            values: vec![T::zero(); total],
        })
    }

    pub(crate) fn from_parts(dim: usize, gen: u32, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid_points(dim, gen).unwrap());
        GridSample { dim, gen, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gen(&self) -> u32 {
        self.gen
    }

    /// Points per axis, `2^N + 1`.
    pub fn side(&self) -> usize {
        (1usize << self.gen) + 1
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn offset(&self, point: &[u64]) -> usize {
        let side = self.side();
        point.iter().fold(0usize, |acc, &j| acc * side + j as usize)
    }

    pub fn point_of(&self, mut offset: usize) -> Vec<u64> {
        let side = self.side();
        let mut p = vec![0u64; self.dim];
        for slot in p.iter_mut().rev() {
            *slot = (offset % side) as u64;
            offset /= side;
        }
        p
    }

    pub fn at(&self, point: &[u64]) -> T {
        self.values[self.offset(point)]
    }

    /// `f(1, …, 1)`.
    pub fn corner_value(&self) -> T {
        *self.values.last().unwrap()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        GridSample {
            dim: self.dim,
            gen: self.gen,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn grid_index(&self, x: Dyadic) -> Result<u64> {
        x.scaled_integer(self.gen)
            .and_then(|j| u64::try_from(j).ok())
            .filter(|&j| j <= 1 << self.gen)
            .ok_or_else(|| Error::OffGrid(format!("{x} at generation {}", self.gen)))
    }

    /// `Δ_f(R) = Σ_corners (-1)^{#lower coordinates} f(corner)`.
    pub fn rectangle_increment(&self, rect: &Rectangle) -> Result<T> {
        if rect.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rect.dim(),
            });
        }
        let lo = rect
            .lower()
            .iter()
            .map(|&a| self.grid_index(a))
            .collect::<Result<Vec<_>>>()?;
        let hi = rect
            .upper()
            .iter()
            .map(|&b| self.grid_index(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.box_increment(&lo, &hi))
    }

    /// Increment over the grid box `∏ [lo_i, hi_i] / 2^N`.
    pub(crate) fn box_increment(&self, lo: &[u64], hi: &[u64]) -> T {
        let d = self.dim;
        let mut acc = T::zero();
        let mut corner = vec![0u64; d];
        for mask in 0..1u32 << d {
            let mut lower = 0;
            for i in 0..d {
                if (mask >> i) & 1 == 1 {
                    corner[i] = hi[i];
                } else {
                    corner[i] = lo[i];
                    lower += 1;
                }
            }
            let v = self.at(&corner);
            acc = if lower % 2 == 0 { acc + v } else { acc - v };
        }
        acc
    }

    pub fn cube_increment(&self, cube: &DyadicCube) -> Result<T> {
        if cube.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: cube.dim(),
            });
        }
        if cube.gen() > self.gen {
            return Err(Error::Resolution(format!(
                "cube of generation {} is finer than the grid generation {}",
                cube.gen(),
                self.gen
            )));
        }
        let s = 1u64 << (self.gen - cube.gen());
        let lo: Vec<u64> = cube.coords().iter().map(|&m| m * s).collect();
        let hi: Vec<u64> = lo.iter().map(|&a| a + s).collect();
        Ok(self.box_increment(&lo, &hi))
    }

    /// `Δ_f(F)`: sum of the cube increments.
    pub fn figure_increment(&self, figure: &Figure) -> Result<T> {
        if figure.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: figure.dim(),
            });
        }
        figure
            .cubes()
            .iter()
            .try_fold(T::zero(), |acc, c| Ok(acc + self.cube_increment(c)?))
    }

    /// Increments of every generation-`gen` cube, in Morton order.
    pub fn increments(&self, gen: u32) -> Result<Vec<T>> {
        if gen > self.gen {
            return Err(Error::Resolution(format!(
                "increments of generation {gen} need a grid of generation >= {gen}, have {}",
                self.gen
            )));
        }
        Ok(IncrementPyramid::build(self, Execution::default()).levels.swap_remove(gen as usize))
    }

    /// Increments of the finest cubes by separable differencing.
    fn finest_increments(&self) -> Vec<T> {
        let d = self.dim;
        let side = self.side();
        let mut diff = self.values.clone();
        // Axis i has stride side^{d-1-i}; difference in place from the top.
        for axis in 0..d {
            let stride = side.pow((d - 1 - axis) as u32);
            for i in (0..diff.len()).rev() {
                if (i / stride) % side != 0 {
                    diff[i] = diff[i] - diff[i - stride];
                }
            }
        }
        let n = self.gen;
        let spreads: Vec<Vec<u64>> = (0..d).map(|i| morton::spread(d, n, i)).collect();
        let cells = 1usize << (n as usize * d);
        let mut out = vec![T::zero(); cells];
        let mut coord = vec![0usize; d];
        // Walk all interior points (all j_i >= 1) in lexicographic order.
        for _ in 0..cells {
            let k: u64 = (0..d).map(|i| spreads[i][coord[i]]).sum();
            let off = coord.iter().fold(0usize, |acc, &c| acc * side + c + 1);
            out[k as usize] = diff[off];
            for i in (0..d).rev() {
                coord[i] += 1;
                if coord[i] < 1 << n {
                    break;
                }
                coord[i] = 0;
            }
        }
        out
    }
}

/// Increments of all generations `0..=N`, each in Morton order.
///
/// Coarser levels are chunk sums of `2^d` consecutive entries of the next
/// finer level.
#[derive(Clone, Debug)]
pub struct IncrementPyramid<T = f64> {
    dim: usize,
    levels: Vec<Vec<T>>,
}

impl<T: Scalar> IncrementPyramid<T> {
    pub fn new(f: &GridSample<T>) -> Self {
        Self::build(f, Execution::default())
    }

    pub fn with_execution(f: &GridSample<T>, exec: Execution) -> Self {
        Self::build(f, exec)
    }

    fn build(f: &GridSample<T>, exec: Execution) -> Self {
        let d = f.dim;
        let mut levels = vec![Vec::new(); f.gen as usize + 1];
        levels[f.gen as usize] = f.finest_increments();
        for g in (0..f.gen as usize).rev() {
            let finer = &levels[g + 1];
            let block = 1usize << d;
            let coarse = exec.map(finer.len() / block, |k| {
                finer[k * block..(k + 1) * block]
                    .iter()
                    .fold(T::zero(), |a, &b| a + b)
            });
            levels[g] = coarse;
        }
        IncrementPyramid { dim: d, levels }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn finest_gen(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    pub fn level(&self, gen: u32) -> &[T] {
        &self.levels[gen as usize]
    }
}

/// Faber–Schauder coefficients `λ_{-1}` and `λ_{n,k,r}`, `n ≤ M`.
///
/// Level `n` is stored flat in Morton order of `k`, `2^d − 1` entries per
/// cube (type numbers `r = 1, …, 2^d − 1`).
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    dim: usize,
    max_gen: u32,
    a_minus1: f64,
    levels: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableHeader {
    pub d: usize,
    #[serde(rename = "M")]
    pub max_gen: u32,
    pub a_minus1: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TableRow {
    n: u32,
    k: u64,
    r: u64,
    lambda: String,
}

impl CoefficientTable {
    pub fn zeros(dim: usize, max_gen: u32) -> Result<Self> {
        DyadicCube::new(dim, max_gen, 0)?;
        let per = (1usize << dim) - 1;
        Ok(CoefficientTable {
            dim,
            max_gen,
            a_minus1: 0.0,
            levels: (0..=max_gen)
                .map(|n| vec![0.0; per << (n as usize * dim)])
                .collect(),
        })
    }

    /// Coefficients from the increments of the cubes of generations
    /// `1..=M+1`.
    pub fn from_pyramid(pyr: &IncrementPyramid<f64>, max_gen: u32) -> Result<Self> {
        Self::from_pyramid_with(pyr, max_gen, Execution::default())
    }

    pub fn from_pyramid_with(pyr: &IncrementPyramid<f64>, max_gen: u32, exec: Execution) -> Result<Self> {
        if max_gen + 1 > pyr.finest_gen() {
            return Err(Error::Resolution(format!(
                "coefficients up to generation {max_gen} need a grid of generation >= {}, have {}",
                max_gen + 1,
                pyr.finest_gen()
            )));
        }
        let d = pyr.dim();
        let block = 1usize << d;
        let levels = (0..=max_gen)
            .map(|n| {
                let scale = Sqrt2Dyadic::sqrt2_pow(n as i64 * d as i64).to_f64();
                let children = pyr.level(n + 1);
                let per_cube = exec.map(children.len() / block, |k| {
                    let mut v = children[k * block..(k + 1) * block].to_vec();
                    hadamard_in_place(&mut v);
                    v[1..].iter().map(|&x| x * scale).collect::<Vec<f64>>()
                });
                per_cube.concat()
            })
            .collect();
        Ok(CoefficientTable {
            dim: d,
            max_gen,
            a_minus1: pyr.level(0)[0],
            levels,
        })
    }

    pub fn from_sparse(dim: usize, max_gen: u32, a_minus1: f64, entries: &[(HaarIndex, f64)]) -> Result<Self> {
        let mut t = Self::zeros(dim, max_gen)?;
        t.a_minus1 = a_minus1;
        for (idx, v) in entries {
            match *idx {
                HaarIndex::Constant => t.a_minus1 = *v,
                HaarIndex::Wavelet { gen, cube, kind } => {
                    if gen > max_gen {
                        return Err(Error::Resolution(format!(
                            "entry of generation {gen} beyond table generation {max_gen}"
                        )));
                    }
                    HaarIndex::wavelet(dim, gen, cube, kind)?;
                    let slot = t.slot(cube, kind);
                    t.levels[gen as usize][slot] = *v;
                }
            }
        }
        Ok(t)
    }

    fn slot(&self, k: u64, r: u64) -> usize {
        k as usize * ((1usize << self.dim) - 1) + (r as usize - 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_gen(&self) -> u32 {
        self.max_gen
    }

    pub fn a_minus1(&self) -> f64 {
        self.a_minus1
    }

    pub fn types(&self) -> usize {
        (1usize << self.dim) - 1
    }

    /// All `λ_{n,·,·}`, `2^d − 1` consecutive entries per cube.
    pub fn level(&self, n: u32) -> &[f64] {
        &self.levels[n as usize]
    }

    pub fn get(&self, n: u32, k: u64, r: u64) -> f64 {
        self.levels[n as usize][self.slot(k, r)]
    }

    pub fn header(&self) -> TableHeader {
        TableHeader {
            d: self.dim,
            max_gen: self.max_gen,
            a_minus1: self.a_minus1,
        }
    }

    /// CSV with header row `n,k,r,lambda`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let per = self.types();
        for (n, level) in self.levels.iter().enumerate() {
            for (i, &v) in level.iter().enumerate() {
                wr.serialize(TableRow {
                    n: n as u32,
                    k: (i / per) as u64,
                    r: (i % per + 1) as u64,
                    lambda: fmt_f64(v),
                })?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(header: &TableHeader, r: R) -> Result<Self> {
        let mut t = Self::zeros(header.d, header.max_gen)?;
        t.a_minus1 = header.a_minus1;
        let mut rd = csv::Reader::from_reader(r);
        for row in rd.deserialize() {
            let row: TableRow = row?;
            let v: f64 = row
                .lambda
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad lambda {}", row.lambda)))?;
            HaarIndex::wavelet(header.d, row.n, row.k, row.r)?;
            if row.n > header.max_gen {
                return Err(Error::InvalidArgument(format!("row generation {} beyond M", row.n)));
            }
            let slot = t.slot(row.k, row.r);
            t.levels[row.n as usize][slot] = v;
        }
        Ok(t)
    }
}

/// Faber–Schauder coefficients of a grid sample up to generation `M ≤ N − 1`.
pub fn lambda_table(f: &GridSample<f64>, max_gen: u32) -> Result<CoefficientTable> {
    if max_gen + 1 > f.gen() {
        return Err(Error::Resolution(format!(
            "M = {max_gen} needs M <= N - 1 = {}",
            f.gen() as i64 - 1
        )));
    }
    CoefficientTable::from_pyramid(&IncrementPyramid::new(f), max_gen)
}

pub fn rectangle_increment<T: Scalar>(f: &GridSample<T>, rect: &Rectangle) -> Result<T> {
    f.rectangle_increment(rect)
}

pub fn all_increments<T: Scalar>(f: &GridSample<T>, gen: u32) -> Result<Vec<T>> {
    f.increments(gen)
}

pub fn figure_increment<T: Scalar>(f: &GridSample<T>, figure: &Figure) -> Result<T> {
    f.figure_increment(figure)
}

/// `x ↦ ∫_{[0,x]} g_idx`, exact at dyadic `x`.
pub fn haar_primitive_at(dim: usize, idx: &HaarIndex, x: &[Dyadic]) -> Sqrt2Dyadic {
    let overlap = |lo: &[Dyadic], hi: &[Dyadic]| -> Dyadic {
        x.iter()
            .zip(lo.iter().zip(hi))
            .map(|(&xi, (&a, &b))| {
                let top = if xi < b { xi } else { b };
                if top > a {
                    top - a
                } else {
                    Dyadic::ZERO
                }
            })
            .fold(Dyadic::ONE, |p, v| p * v)
    };
    match *idx {
        HaarIndex::Constant => Sqrt2Dyadic::from_dyadic(x.iter().fold(Dyadic::ONE, |p, &v| p * v)),
        HaarIndex::Wavelet { gen, cube, kind } => {
            let support = DyadicCube::new(dim, gen, cube).expect("valid Haar index");
            let mut acc = Dyadic::ZERO;
            for (l, child) in support.children().iter().enumerate() {
                let b = child.cube_box();
                let v = overlap(b.lower(), b.upper());
                if crate::haar::haar_sign(kind, l as u64) > 0 {
                    acc += v;
                } else {
                    acc -= v;
                }
            }
            Sqrt2Dyadic::from_dyadic(acc) * Sqrt2Dyadic::sqrt2_pow(idx.scale_half_exp(dim))
        }
    }
}

/// Grid sample of the finite Faber–Schauder combination
/// `Σ c_idx ∫_{[0,x]} g_idx`.
pub fn faber_schauder_sample(dim: usize, gen: u32, terms: &[(HaarIndex, f64)]) -> Result<GridSample<f64>> {
    for (idx, _) in terms {
        if idx.resolution() > gen {
            return Err(Error::Resolution(format!(
                "term {idx:?} is not resolved by a grid of generation {gen}"
            )));
        }
    }
    GridSample::from_fn(dim, gen, |p| {
        let x: Vec<Dyadic> = p.iter().map(|&j| Dyadic::ratio(j as i128, gen)).collect();
        terms
            .iter()
            .map(|(idx, c)| c * haar_primitive_at(dim, idx, &x).to_f64())
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn xy(gen: u32) -> GridSample<Dyadic> {
        GridSample::from_fn(2, gen, |p| Dyadic::ratio(p[0] as i128 * p[1] as i128, 2 * gen)).unwrap()
    }

    fn rect(lo: &[(i128, u32)], hi: &[(i128, u32)]) -> Rectangle {
        Rectangle::new(
            lo.iter().map(|&(a, g)| Dyadic::ratio(a, g)).collect(),
            hi.iter().map(|&(b, g)| Dyadic::ratio(b, g)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn product_function_increments() {
        let f = xy(4);
        let r = rect(&[(1, 2), (3, 4)], &[(7, 3), (1, 0)]);
        let expected = (Dyadic::ratio(7, 3) - Dyadic::ratio(1, 2)) * (Dyadic::ONE - Dyadic::ratio(3, 4));
        assert_eq!(f.rectangle_increment(&r).unwrap(), expected);
        assert_eq!(f.increments(1).unwrap(), vec![Dyadic::ratio(1, 2); 4]);
    }

    #[test]
    fn unit_square_corner() {
        let mut vals = vec![0.0; 9];
        vals[8] = 2.5;
        let f = GridSample::new(2, 1, vals).unwrap();
        assert_eq!(f.rectangle_increment(&Rectangle::unit(2)).unwrap(), 2.5);
    }

    #[test]
    fn constant_interior_has_zero_increment_away_from_axes() {
        // Constant on the grid except the forced zeros: rectangles not touching
        // the hyperfacets see only equal values.
        let f = GridSample::from_fn(2, 3, |_| 1.75f64).unwrap();
        let r = rect(&[(1, 3), (2, 3)], &[(5, 3), (7, 3)]);
        assert_eq!(f.rectangle_increment(&r).unwrap(), 0.0);
    }

    #[test]
    fn boundary_invariant_and_errors() {
        let mut vals = vec![0.0; 9];
        vals[1] = 1.0;
        assert!(matches!(GridSample::new(2, 1, vals), Err(Error::NotVanishing(_))));
        assert!(GridSample::<f64>::new(2, 1, vec![0.0; 8]).is_err());
        let f = xy(2);
        let r = rect(&[(1, 3)], &[(1, 1)]);
        assert!(f.rectangle_increment(&r).is_err());
        let r = rect(&[(1, 3), (0, 0)], &[(1, 1), (1, 0)]);
        assert!(matches!(f.rectangle_increment(&r), Err(Error::OffGrid(_))));
        assert!(f.increments(3).is_err());
    }

    #[test]
    fn finest_increments_sum_to_corner() {
        let f = GridSample::from_fn(3, 3, |p| ((p[0] * 7 + p[1] * 3 + p[2]) % 5) as f64).unwrap();
        let s: f64 = f.increments(3).unwrap().iter().sum();
        assert!((s - f.corner_value()).abs() < 1e-12);
    }

    fn arb_grid() -> impl Strategy<Value = GridSample<Dyadic>> {
        (1usize..=3, 1u32..=3).prop_flat_map(|(d, n)| {
            let total = ((1usize << n) + 1).pow(d as u32);
            proptest::collection::vec(-64i64..64, total).prop_map(move |v| {
                GridSample::from_fn(d, n, |p| {
                    let side = (1usize << n) + 1;
                    let off = p.iter().fold(0usize, |a, &j| a * side + j as usize);
                    Dyadic::ratio(v[off] as i128, 3)
                })
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn separable_equals_corner_formula(f in arb_grid()) {
            let n = f.gen();
            let d = f.dim();
            let pyr = IncrementPyramid::new(&f);
            for g in 0..=n {
                for (k, &v) in pyr.level(g).iter().enumerate() {
                    let c = DyadicCube::new(d, g, k as u64).unwrap();
                    prop_assert_eq!(v, f.rectangle_increment(&c.cube_box()).unwrap());
                }
            }
        }

        #[test]
        fn additivity_over_children(f in arb_grid()) {
            let d = f.dim();
            for g in 0..f.gen() {
                let coarse = f.increments(g).unwrap();
                let fine = f.increments(g + 1).unwrap();
                for (k, &v) in coarse.iter().enumerate() {
                    let s: Dyadic = fine[k << d..(k + 1) << d].iter().copied().sum();
                    prop_assert_eq!(v, s);
                }
            }
        }

        #[test]
        fn figure_increment_invariant_under_split(f in arb_grid(), seed in any::<u64>()) {
            let d = f.dim();
            prop_assume!(f.gen() >= 1);
            let g = 1.min(f.gen() - 1);
            let cubes: Vec<DyadicCube> = (0..1u64 << (g as usize * d))
                .filter(|k| (seed >> (k % 64)) & 1 == 1)
                .map(|k| DyadicCube::new(d, g, k).unwrap())
                .collect();
            prop_assume!(!cubes.is_empty());
            let fig = Figure::new(d, cubes).unwrap();
            let split = fig.split_cube((seed % fig.cubes().len() as u64) as usize);
            prop_assert_eq!(f.figure_increment(&fig).unwrap(), f.figure_increment(&split).unwrap());
        }
    }

    #[test]
    fn f64_consistency_relative() {
        let f = GridSample::from_fn(2, 6, |p| ((p[0] as f64) * 0.37).sin() * ((p[1] as f64) * 0.11).cos() + 1e3).unwrap();
        let pyr = IncrementPyramid::new(&f);
        for g in 0..6 {
            let coarse = pyr.level(g);
            for (k, &v) in coarse.iter().enumerate() {
                let direct = f.cube_increment(&DyadicCube::new(2, g, k as u64).unwrap()).unwrap();
                let scale = f.values().iter().fold(0f64, |m, x| m.max(x.abs()));
                assert!((v - direct).abs() <= 1e-12 * scale, "{v} vs {direct}");
            }
        }
    }

    #[test]
    fn complementary_halves() {
        let f = xy(3).map(|v| v * v);
        let bottom = Figure::new(2, vec![DyadicCube::new(2, 1, 0).unwrap(), DyadicCube::new(2, 1, 1).unwrap()]).unwrap();
        let top = Figure::new(2, vec![DyadicCube::new(2, 1, 2).unwrap(), DyadicCube::new(2, 1, 3).unwrap()]).unwrap();
        let total = f.figure_increment(&Figure::unit(2)).unwrap();
        assert_eq!(total, f.corner_value());
        assert_eq!(f.figure_increment(&bottom).unwrap() + f.figure_increment(&top).unwrap(), total);
        let fine = Figure::new(2, vec![DyadicCube::new(2, 4, 0).unwrap()]).unwrap();
        assert!(matches!(f.figure_increment(&fine), Err(Error::Resolution(_))));
    }

    #[test]
    fn lambda_of_product_function_vanishes() {
        let f = GridSample::from_fn(2, 5, |p| (p[0] * p[1]) as f64 / 1024.0).unwrap();
        let t = lambda_table(&f, 4).unwrap();
        assert_eq!(t.a_minus1(), 1.0);
        for n in 0..=4 {
            assert!(t.level(n).iter().all(|&v| v == 0.0));
        }
        assert!(lambda_table(&f, 5).is_err());
    }

    #[test]
    fn lambda_of_haar_primitives_is_unit_vector() {
        let d = 2;
        for idx in HaarIndex::enumerate(d, 2) {
            let f = faber_schauder_sample(d, 4, &[(idx, 1.0)]).unwrap();
            let t = lambda_table(&f, 2).unwrap();
            let expect_const = if idx == HaarIndex::Constant { 1.0 } else { 0.0 };
            assert_eq!(t.a_minus1(), expect_const);
            for n in 0..=2u32 {
                for (i, &v) in t.level(n).iter().enumerate() {
                    let here = HaarIndex::Wavelet {
                        gen: n,
                        cube: (i / 3) as u64,
                        kind: (i % 3 + 1) as u64,
                    };
                    assert_eq!(v, if here == idx { 1.0 } else { 0.0 }, "{idx:?} at {here:?}");
                }
            }
        }
    }

    #[test]
    fn lambda_of_haar_primitive_d1() {
        // d = 1 has irrational scales at odd generations; compare with tolerance.
        for idx in HaarIndex::enumerate(1, 3) {
            let f = faber_schauder_sample(1, 5, &[(idx, 1.0)]).unwrap();
            let t = lambda_table(&f, 3).unwrap();
            for n in 0..=3u32 {
                for (k, &v) in t.level(n).iter().enumerate() {
                    let here = HaarIndex::Wavelet { gen: n, cube: k as u64, kind: 1 };
                    let e = if here == idx { 1.0 } else { 0.0 };
                    assert!((v - e).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let f = faber_schauder_sample(2, 3, &[(HaarIndex::Constant, 0.5), (HaarIndex::wavelet(2, 1, 2, 3).unwrap(), -1.25)]).unwrap();
        let t = lambda_table(&f, 2).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,k,r,lambda\n0,0,1,"));
        let header: TableHeader = serde_json::from_str(&serde_json::to_string(&t.header()).unwrap()).unwrap();
        assert_eq!(CoefficientTable::read_csv(&header, &buf[..]).unwrap(), t);
        assert_eq!(t.get(1, 2, 3), -1.25);
        let json = serde_json::to_value(t.header()).unwrap();
        assert_eq!(json["M"], 2);
        assert_eq!(json["d"], 2);
    }
}
