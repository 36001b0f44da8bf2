//! The multidimensional Haar system `g_{-1}, g_{n,k,r}`.
//!
//! `g_{n,k,r}` takes the value `2^{nd/2} (A_d)_{r,ℓ}` on child `ℓ` of
//! `K_{n,k}` and vanishes elsewhere, where `A_1 = [[1, 1], [1, -1]]` and
//! `A_{d+1} = [[A_d, A_d], [A_d, -A_d]]`. Entry `(r, ℓ)` of `A_d` is
//! `(-1)^{popcount(r & ℓ)}`, so the dense matrix is only materialized on
//! request; everything else uses the sign formula or a Walsh–Hadamard
//! butterfly.

use std::collections::BTreeMap;

use crate::cube::DyadicCube;
use crate::dyadic::{Dyadic, HaarScalar, Scalar, Sqrt2Dyadic};
use crate::error::{Error, Result};

/// Largest dimension for which [`haar_matrix`] builds a dense matrix.
pub const MAX_DENSE_DIM: usize = 16;

/// `(A_d)_{r,ℓ}`, valid for any `d`.
#[inline]
pub fn haar_sign(r: u64, l: u64) -> i8 {
    if (r & l).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Dense `A_d` of order `2^d`, built by the block recursion.
pub fn haar_matrix(dim: usize) -> Result<Vec<Vec<i8>>> {
    if !(1..=MAX_DENSE_DIM).contains(&dim) {
        return Err(Error::DimensionOutOfRange(dim));
    }
    let mut a: Vec<Vec<i8>> = vec![vec![1, 1], vec![1, -1]];
    for _ in 1..dim {
        let m = a.len();
        let mut next = vec![vec![0i8; 2 * m]; 2 * m];
        for r in 0..m {
            for c in 0..m {
                let v = a[r][c];
                next[r][c] = v;
                next[r][c + m] = v;
                next[r + m][c] = v;
                next[r + m][c + m] = -v;
            }
        }
        a = next;
    }
    Ok(a)
}

/// In-place unnormalized Walsh–Hadamard transform: `v ← A_d v`.
pub fn hadamard_in_place<T: Scalar>(v: &mut [T]) {
    let n = v.len();
    assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HaarIndex {
    /// `g_{-1} = 1` on `[0, 1]^d`.
    Constant,
    Wavelet { gen: u32, cube: u64, kind: u64 },
}

impl HaarIndex {
    pub fn wavelet(dim: usize, gen: u32, cube: u64, kind: u64) -> Result<Self> {
        DyadicCube::new(dim, gen, cube)?;
        if kind == 0 || kind >= 1 << dim {
            return Err(Error::InvalidArgument(format!(
                "type number {kind} must lie in [1, {}]",
                (1u64 << dim) - 1
            )));
        }
        Ok(HaarIndex::Wavelet { gen, cube, kind })
    }

    pub fn support(&self, dim: usize) -> DyadicCube {
        match *self {
            HaarIndex::Constant => DyadicCube::root(dim),
            HaarIndex::Wavelet { gen, cube, .. } => DyadicCube::new(dim, gen, cube).expect("valid index"),
        }
    }

    /// Generation of the step grid on which the function is constant.
    pub fn resolution(&self) -> u32 {
        match *self {
            HaarIndex::Constant => 0,
            HaarIndex::Wavelet { gen, .. } => gen + 1,
        }
    }

    /// `2 log2` of the scale `2^{nd/2}`.
    pub fn scale_half_exp(&self, dim: usize) -> i64 {
        match *self {
            HaarIndex::Constant => 0,
            HaarIndex::Wavelet { gen, .. } => gen as i64 * dim as i64,
        }
    }

    /// All indices with generation `<= max_gen`, in lexicographic order.
    pub fn enumerate(dim: usize, max_gen: u32) -> Vec<HaarIndex> {
        let mut out = vec![HaarIndex::Constant];
        for gen in 0..=max_gen {
            for cube in 0..1u64 << (gen as usize * dim) {
                for kind in 1..1u64 << dim {
                    out.push(HaarIndex::Wavelet { gen, cube, kind });
                }
            }
        }
        out
    }
}

/// Values of a Haar function on the children of its support: a shared
/// scale `2^{scale_half_exp / 2}` times integer signs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChildValues {
    pub scale_half_exp: i64,
    pub signs: Vec<i8>,
}

impl ChildValues {
    pub fn scale<T: HaarScalar>(&self) -> T {
        T::sqrt2_pow(self.scale_half_exp)
    }

    pub fn values<T: HaarScalar>(&self) -> Vec<T> {
        let s: T = self.scale();
        self.signs
            .iter()
            .map(|&sg| if sg > 0 { s } else { -s })
            .collect()
    }
}

pub fn haar_child_values(dim: usize, idx: &HaarIndex) -> Result<ChildValues> {
    match *idx {
        HaarIndex::Constant => Err(Error::InvalidArgument(
            "the exceptional Haar function has no child pattern".into(),
        )),
        HaarIndex::Wavelet { kind, .. } => Ok(ChildValues {
            scale_half_exp: idx.scale_half_exp(dim),
            signs: (0..1u64 << dim).map(|l| haar_sign(kind, l)).collect(),
        }),
    }
}

/// Values of a function constant on every generation-`gen` cube, in Morton
/// order.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction<T = f64> {
    dim: usize,
    gen: u32,
    values: Vec<T>,
}

impl<T: Scalar> StepFunction<T> {
    pub fn new(dim: usize, gen: u32, values: Vec<T>) -> Result<Self> {
        DyadicCube::new(dim, gen, 0)?;
        let len = 1usize << (gen as usize * dim);
        if values.len() != len {
            return Err(Error::InvalidArgument(format!(
                "step function of generation {gen} needs {len} values, got {}",
                values.len()
            )));
        }
        Ok(StepFunction { dim, gen, values })
    }

    pub fn from_fn(dim: usize, gen: u32, f: impl Fn(&DyadicCube) -> T) -> Result<Self> {
        DyadicCube::new(dim, gen, 0)?;
        let values = (0..1u64 << (gen as usize * dim))
            .map(|k| f(&DyadicCube::new(dim, gen, k).unwrap()))
            .collect();
        Ok(StepFunction { dim, gen, values })
    }

    pub fn constant(dim: usize, gen: u32, c: T) -> Result<Self> {
        Self::from_fn(dim, gen, |_| c)
    }

    pub fn indicator(cube: &DyadicCube, gen: u32) -> Result<Self> {
        if gen < cube.gen() {
            return Err(Error::Resolution(format!(
                "indicator of a generation-{} cube needs step generation >= {}",
                cube.gen(),
                cube.gen()
            )));
        }
        Self::from_fn(cube.dim(), gen, |c| {
            if cube.contains(c) {
                T::from_dyadic(Dyadic::ONE)
            } else {
                T::zero()
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gen(&self) -> u32 {
        self.gen
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Same function on the finer generation `gen`.
    pub fn refine(&self, gen: u32) -> Result<Self> {
        if gen < self.gen {
            return Err(Error::Resolution(format!(
                "cannot refine generation {} to {gen}",
                self.gen
            )));
        }
        DyadicCube::new(self.dim, gen, 0)?;
        let block = 1usize << ((gen - self.gen) as usize * self.dim);
        let values = self
            .values
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, block))
            .collect();
        Ok(StepFunction {
            dim: self.dim,
            gen,
            values,
        })
    }

    pub fn scaled(&self, c: T) -> Self {
        StepFunction {
            dim: self.dim,
            gen: self.gen,
            values: self.values.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn cell_volume(&self) -> T {
        T::from_dyadic(Dyadic::pow2(-((self.gen as usize * self.dim) as i32)))
    }

    /// `∫ u`.
    pub fn integral(&self) -> T {
        self.values.iter().fold(T::zero(), |a, &b| a + b) * self.cell_volume()
    }
}

impl<T: HaarScalar> StepFunction<T> {
    /// `g_idx` as a step function of generation `gen`.
    pub fn haar(dim: usize, idx: &HaarIndex, gen: u32) -> Result<Self> {
        if gen < idx.resolution() {
            return Err(Error::Resolution(format!(
                "Haar function needs step generation >= {}",
                idx.resolution()
            )));
        }
        match *idx {
            HaarIndex::Constant => Self::from_fn(dim, gen, |_| T::from_dyadic(Dyadic::ONE)),
            HaarIndex::Wavelet { gen: n, cube, kind } => {
                let support = DyadicCube::new(dim, n, cube)?;
                let scale = T::sqrt2_pow(idx.scale_half_exp(dim));
                Self::from_fn(dim, gen, |c| {
                    if support.contains(c) {
                        if haar_sign(kind, c.digit_below(n)) > 0 {
                            scale
                        } else {
                            -scale
                        }
                    } else {
                        T::zero()
                    }
                })
            }
        }
    }
}

/// `T_{g_idx}(u) = ∫ g_idx u` for a step function `u` of generation at
/// least `idx.resolution()`.
pub fn integrate_haar_step<T: HaarScalar>(dim: usize, idx: &HaarIndex, u: &StepFunction<T>) -> Result<T> {
    if u.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: u.dim(),
        });
    }
    if u.gen() < idx.resolution() {
        return Err(Error::Resolution(format!(
            "step function of generation {} is coarser than Haar resolution {}",
            u.gen(),
            idx.resolution()
        )));
    }
    let vol = u.cell_volume();
    match *idx {
        HaarIndex::Constant => Ok(u.integral()),
        HaarIndex::Wavelet { gen, cube, kind } => {
            DyadicCube::new(dim, gen, cube)?;
            // Descendants of child ℓ at generation G form one contiguous Morton range.
            let block = 1usize << ((u.gen() - gen - 1) as usize * dim);
            let first_child = (cube as usize) << dim;
            let mut acc = T::zero();
            for l in 0..1usize << dim {
                let start = (first_child + l) * block;
                let s = u.values[start..start + block]
                    .iter()
                    .fold(T::zero(), |a, &b| a + b);
                acc = if haar_sign(kind, l as u64) > 0 { acc + s } else { acc - s };
            }
            Ok(acc * T::sqrt2_pow(idx.scale_half_exp(dim)) * vol)
        }
    }
}

/// Coefficients `c` with `1_{K_{n,k}} = Σ c_idx g_idx`, exact.
///
/// Only `g_{-1}` and the Haar functions supported on strict ancestors of the
/// cube appear. Built by inverting the child relation
/// `(2^{nd/2} 1_K, g_{n,k,1}, …) = 2^{nd/2} A_d (1_{child_0}, …)` with
/// `A_d^{-1} = 2^{-d} A_d`.
pub fn indicator_expansion(cube: &DyadicCube) -> BTreeMap<HaarIndex, Sqrt2Dyadic> {
    let dim = cube.dim();
    let mut coeffs = BTreeMap::new();
    coeffs.insert(HaarIndex::Constant, Sqrt2Dyadic::ONE);
    let inv = Sqrt2Dyadic::from_dyadic(Dyadic::pow2(-(dim as i32)));
    for n in 0..cube.gen() {
        let parent = cube.ancestor(n).unwrap();
        let digit = cube.digit_below(n);
        // 1_child = 2^{-d} 1_parent + 2^{-d} 2^{-nd/2} Σ_r A_{ℓ r} g_{n,p,r}
        for c in coeffs.values_mut() {
            *c = *c * inv;
        }
        let w = inv * Sqrt2Dyadic::sqrt2_pow(-(n as i64 * dim as i64));
        for kind in 1..1u64 << dim {
            let c = if haar_sign(digit, kind) > 0 { w } else { -w };
            coeffs.insert(
                HaarIndex::Wavelet {
                    gen: n,
                    cube: parent.index(),
                    kind,
                },
                c,
            );
        }
    }
    coeffs
}
