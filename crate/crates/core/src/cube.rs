//! Dyadic cubes, rectangles and figures of `[0, 1]^d`.
//!
//! A cube `K_{n,k}` is addressed by its generation `n` and its Morton index
//! `k`: the base-`2^d` digits of `k`, most significant first, pick the child
//! at each level, and bit `i` of a digit selects the upper half of axis `i`.
//! Child `ℓ` of `(n, k)` is therefore `(n + 1, 2^d k + ℓ)`.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

/// Largest `n · d` representable in a `u64` Morton index.
pub const MAX_INDEX_BITS: u32 = 63;

pub mod morton {
    /// Per-axis integer coordinates of Morton index `k` at generation `gen`.
    pub fn decode(dim: usize, gen: u32, k: u64) -> Vec<u64> {
        let mut coords = vec![0u64; dim];
        let mask = (1u64 << dim) - 1;
        for level in 0..gen {
            let digit = (k >> ((gen - 1 - level) as usize * dim)) & mask;
            for (i, c) in coords.iter_mut().enumerate() {
                *c = (*c << 1) | ((digit >> i) & 1);
            }
        }
        coords
    }

    pub fn encode(gen: u32, coords: &[u64]) -> u64 {
        let dim = coords.len();
        let mut k = 0u64;
        for level in 0..gen {
            let shift = gen - 1 - level;
            let mut digit = 0u64;
            for (i, &c) in coords.iter().enumerate() {
                digit |= ((c >> shift) & 1) << i;
            }
            k = (k << dim) | digit;
        }
        k
    }

    /// `table[m]` is the Morton contribution of coordinate `m` on `axis`, so
    /// that `encode(gen, c) == Σ_i spread(dim, gen, i)[c_i]`.
    pub fn spread(dim: usize, gen: u32, axis: usize) -> Vec<u64> {
        (0..1u64 << gen)
            .map(|m| {
                let mut k = 0u64;
                for b in 0..gen {
                    k |= ((m >> b) & 1) << (b as usize * dim + axis);
                }
                k
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    dim: u32,
    gen: u32,
    index: u64,
}

impl DyadicCube {
    pub fn new(dim: usize, gen: u32, index: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCube("dimension must be at least 1".into()));
        }
        let bits = gen as u64 * dim as u64;
        if bits > MAX_INDEX_BITS as u64 {
            return Err(Error::InvalidCube(format!(
                "generation {gen} in dimension {dim} exceeds {MAX_INDEX_BITS} index bits"
            )));
        }
        if index >= 1u64 << bits {
            return Err(Error::InvalidCube(format!(
                "index {index} out of range for generation {gen} in dimension {dim}"
            )));
        }
        Ok(DyadicCube {
            dim: dim as u32,
            gen,
            index,
        })
    }

    pub fn root(dim: usize) -> Self {
        Self::new(dim, 0, 0).expect("root cube")
    }

    pub fn from_coords(gen: u32, coords: &[u64]) -> Result<Self> {
        if let Some(&bad) = coords.iter().find(|&&c| gen >= 64 || c >> gen != 0) {
            return Err(Error::InvalidCube(format!(
                "coordinate {bad} out of range for generation {gen}"
            )));
        }
        Self::new(coords.len(), gen, morton::encode(gen, coords))
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn gen(&self) -> u32 {
        self.gen
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn coords(&self) -> Vec<u64> {
        morton::decode(self.dim(), self.gen, self.index)
    }

    pub fn child(&self, digit: u64) -> DyadicCube {
        assert!(digit < 1 << self.dim);
        DyadicCube {
            dim: self.dim,
            gen: self.gen + 1,
            index: (self.index << self.dim) | digit,
        }
    }

    /// The `2^d` children, ordered by child digit.
    pub fn children(&self) -> Vec<DyadicCube> {
        (0..1u64 << self.dim).map(|l| self.child(l)).collect()
    }

    pub fn parent(&self) -> Option<DyadicCube> {
        self.ancestor(self.gen.checked_sub(1)?)
    }

    /// The unique cube of generation `gen` containing this one.
    pub fn ancestor(&self, gen: u32) -> Option<DyadicCube> {
        (gen <= self.gen).then(|| DyadicCube {
            dim: self.dim,
            gen,
            index: self.index >> ((self.gen - gen) as u64 * self.dim as u64),
        })
    }

    /// Which child of its generation-`gen` ancestor contains this cube.
    pub fn digit_below(&self, gen: u32) -> u64 {
        assert!(gen < self.gen);
        (self.index >> ((self.gen - gen - 1) as u64 * self.dim as u64)) & ((1u64 << self.dim) - 1)
    }

    /// True when `other ⊆ self`.
    pub fn contains(&self, other: &DyadicCube) -> bool {
        self.dim == other.dim && other.ancestor(self.gen) == Some(*self)
    }

    pub fn volume(&self) -> Dyadic {
        Dyadic::pow2(-((self.gen * self.dim) as i32))
    }

    pub fn side(&self) -> Dyadic {
        Dyadic::pow2(-(self.gen as i32))
    }

    pub fn cube_box(&self) -> Rectangle {
        let coords = self.coords();
        let g = self.gen;
        Rectangle {
            lower: coords.iter().map(|&m| Dyadic::ratio(m as i128, g)).collect(),
            upper: coords
                .iter()
                .map(|&m| Dyadic::ratio(m as i128 + 1, g))
                .collect(),
        }
    }
}

/// An axis-parallel box `∏ [a_i, b_i] ⊂ [0, 1]^d` with dyadic corners.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rectangle {
    lower: Vec<Dyadic>,
    upper: Vec<Dyadic>,
}

impl Rectangle {
    pub fn new(lower: Vec<Dyadic>, upper: Vec<Dyadic>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidRectangle(format!(
                "{} lower and {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&a, &b)) in lower.iter().zip(&upper).enumerate() {
            if !(Dyadic::ZERO <= a && a < b && b <= Dyadic::ONE) {
                return Err(Error::InvalidRectangle(format!(
                    "axis {i}: need 0 <= {a} < {b} <= 1"
                )));
            }
        }
        Ok(Rectangle { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        Rectangle {
            lower: vec![Dyadic::ZERO; dim],
            upper: vec![Dyadic::ONE; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[Dyadic] {
        &self.lower
    }

    pub fn upper(&self) -> &[Dyadic] {
        &self.upper
    }

    pub fn sides(&self) -> Vec<Dyadic> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&a, &b)| b - a)
            .collect()
    }

    pub fn volume(&self) -> Dyadic {
        self.sides().into_iter().fold(Dyadic::ONE, |p, s| p * s)
    }

    /// `2 Σ_i ∏_{j≠i} (b_j − a_j)`.
    pub fn perimeter(&self) -> Dyadic {
        let sides = self.sides();
        let two = Dyadic::from_int(2);
        (0..sides.len())
            .map(|i| {
                sides
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .fold(Dyadic::ONE, |p, (_, &s)| p * s)
            })
            .sum::<Dyadic>()
            * two
    }

    pub fn bounds_f64(&self) -> Vec<(f64, f64)> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| (a.to_f64(), b.to_f64()))
            .collect()
    }

    pub fn contains_point(&self, x: &[Dyadic]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| a <= v && v <= b)
    }
}

/// A unit-size face of the generation-`resolution` grid lying on the
/// boundary of a figure.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryFace {
    /// Normal axis.
    pub axis: usize,
    /// Integer grid coordinates of the face's lower corner; `corner[axis]`
    /// is the position of the face plane.
    pub corner: Vec<u64>,
    /// Sign of the outward normal `±e_axis`.
    pub outward: i8,
}

/// A finite union of pairwise almost-disjoint dyadic cubes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FigureRepr", into = "FigureRepr")]
pub struct Figure {
    dim: usize,
    cubes: Vec<DyadicCube>,
}

#[derive(Serialize, Deserialize)]
struct FigureRepr {
    dim: usize,
    cubes: Vec<[u64; 2]>,
}

impl TryFrom<FigureRepr> for Figure {
    type Error = Error;
    fn try_from(r: FigureRepr) -> Result<Self> {
        let cubes = r
            .cubes
            .iter()
            .map(|&[g, k]| {
                let g = u32::try_from(g)
                    .map_err(|_| Error::InvalidCube(format!("generation {g}")))?;
                DyadicCube::new(r.dim, g, k)
            })
            .collect::<Result<Vec<_>>>()?;
        Figure::new(r.dim, cubes)
    }
}

impl From<Figure> for FigureRepr {
    fn from(f: Figure) -> Self {
        FigureRepr {
            dim: f.dim,
            cubes: f
                .cubes
                .iter()
                .map(|c| [c.gen() as u64, c.index()])
                .collect(),
        }
    }
}

impl Figure {
    pub fn new(dim: usize, cubes: Vec<DyadicCube>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidFigure("dimension must be at least 1".into()));
        }
        if let Some(bad) = cubes.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        // Two dyadic cubes overlap in interior iff one contains the other.
        let set: HashSet<DyadicCube> = cubes.iter().copied().collect();
        if set.len() != cubes.len() {
            return Err(Error::InvalidFigure("duplicate cube".into()));
        }
        for c in &cubes {
            for g in 0..c.gen() {
                let a = c.ancestor(g).unwrap();
                if set.contains(&a) {
                    return Err(Error::InvalidFigure(format!(
                        "cube ({}, {}) lies inside ({}, {})",
                        c.gen(),
                        c.index(),
                        a.gen(),
                        a.index()
                    )));
                }
            }
        }
        Ok(Figure { dim, cubes })
    }

    pub fn empty(dim: usize) -> Self {
        Figure {
            dim,
            cubes: Vec::new(),
        }
    }

    pub fn unit(dim: usize) -> Self {
        Figure {
            dim,
            cubes: vec![DyadicCube::root(dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn finest_generation(&self) -> Option<u32> {
        self.cubes.iter().map(|c| c.gen()).max()
    }

    pub fn volume(&self) -> Dyadic {
        self.cubes.iter().map(|c| c.volume()).sum()
    }

    /// Replaces cube `i` by its `2^d` children.
    pub fn split_cube(&self, i: usize) -> Figure {
        let mut cubes = self.cubes.clone();
        let c = cubes.remove(i);
        cubes.extend(c.children());
        Figure {
            dim: self.dim,
            cubes,
        }
    }

    /// Faces of the generation-`resolution` refinement that belong to exactly
    /// one refined cube, in sorted order.
    pub fn boundary_faces(&self, resolution: u32) -> Result<Vec<BoundaryFace>> {
        if let Some(g) = self.finest_generation() {
            if resolution < g {
                return Err(Error::Resolution(format!(
                    "face resolution {resolution} is coarser than cube generation {g}"
                )));
            }
        }
        let d = self.dim;
        let mut seen: HashMap<(usize, Vec<u64>), (u32, i8)> = HashMap::new();
        for cube in &self.cubes {
            let scale = 1u64 << (resolution - cube.gen());
            let base: Vec<u64> = cube.coords().iter().map(|&m| m * scale).collect();
            for axis in 0..d {
                let tangential: Vec<usize> = (0..d).filter(|&j| j != axis).collect();
                let count = scale.pow(tangential.len() as u32);
                for (plane, outward) in [(base[axis], -1i8), (base[axis] + scale, 1i8)] {
                    for t in 0..count {
                        let mut corner = base.clone();
                        corner[axis] = plane;
                        let mut rest = t;
                        for &j in &tangential {
                            corner[j] += rest % scale;
                            rest /= scale;
                        }
                        seen.entry((axis, corner))
                            .and_modify(|e| e.0 += 1)
                            .or_insert((1, outward));
                    }
                }
            }
        }
        let mut faces: Vec<BoundaryFace> = seen
            .into_iter()
            .filter(|(_, (n, _))| *n == 1)
            .map(|((axis, corner), (_, outward))| BoundaryFace {
                axis,
                corner,
                outward,
            })
            .collect();
        faces.sort();
        Ok(faces)
    }

    /// `H^{d-1}(∂F)`, exact.
    pub fn perimeter(&self) -> Dyadic {
        let Some(g) = self.finest_generation() else {
            return Dyadic::ZERO;
        };
        let faces = self.boundary_faces(g).expect("finest generation");
        Dyadic::from_int(faces.len() as i64) * Dyadic::pow2(-((g as usize * (self.dim - 1)) as i32))
    }
}

pub fn children(cube: &DyadicCube) -> Vec<DyadicCube> {
    cube.children()
}

pub fn cube_box(cube: &DyadicCube) -> Rectangle {
    cube.cube_box()
}

pub fn figure_perimeter(figure: &Figure) -> Dyadic {
    figure.perimeter()
}

pub fn figure_volume(figure: &Figure) -> Dyadic {
    figure.volume()
}
