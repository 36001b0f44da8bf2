//! Pairings that make strong charges computable on figures: the functional
//! `T_f(u) = ∫ f u` on step functions, partial Faber–Schauder sums applied
//! to figures, and the boundary flux of a continuous vector field.

use serde::{Deserialize, Serialize};

use crate::cube::{Figure, Rectangle};
use crate::dyadic::Scalar;
use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, Execution};
use crate::haar::{haar_sign, StepFunction};
use crate::increments::CoefficientTable;

/// `coef · ∏ x_j^{powers_j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub powers: Vec<u32>,
}

impl Term {
    fn eval(&self, x: &[f64]) -> f64 {
        self.coef * self.powers.iter().zip(x).map(|(&p, &xi)| xi.powi(p as i32)).product::<f64>()
    }

    /// `∫_R x^p` over a box, by separability.
    fn integrate(&self, bounds: &[(f64, f64)]) -> f64 {
        self.coef
            * self
                .powers
                .iter()
                .zip(bounds)
                .map(|(&p, &(a, b))| {
                    let e = p as i32 + 1;
                    (b.powi(e) - a.powi(e)) / e as f64
                })
                .product::<f64>()
    }

    fn derivative(&self, axis: usize) -> Option<Term> {
        let p = self.powers[axis];
        if p == 0 {
            return None;
        }
        let mut powers = self.powers.clone();
        powers[axis] = p - 1;
        Some(Term {
            coef: self.coef * p as f64,
            powers,
        })
    }
}

/// Built-in vector fields `v : [0,1]^d → R^d`, named in configs by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VectorField {
    /// `v(x) = A x + b`.
    Linear {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        offset: Vec<f64>,
    },
    /// `coeffs[i]` lists the monomials of component `i`.
    Polynomial { coeffs: Vec<Vec<Term>> },
    /// Component values on the `(2^gen + 1)^d` grid in lexicographic order,
    /// multilinearly interpolated.
    Tabulated { gen: u32, values: Vec<Vec<f64>> },
}

impl VectorField {
    /// Checks internal consistency and returns the dimension.
    pub fn validate(&self) -> Result<usize> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match self {
            VectorField::Linear { matrix, offset } => {
                let d = matrix.len();
                if d == 0 || matrix.iter().any(|row| row.len() != d) {
                    return bad("linear field needs a square d×d matrix".into());
                }
                if !offset.is_empty() && offset.len() != d {
                    return bad(format!("offset has {} entries, expected {d}", offset.len()));
                }
                Ok(d)
            }
            VectorField::Polynomial { coeffs } => {
                let d = coeffs.len();
                if d == 0 || coeffs.iter().flatten().any(|t| t.powers.len() != d) {
                    return bad("every monomial needs one exponent per axis".into());
                }
                Ok(d)
            }
            VectorField::Tabulated { gen, values } => {
                let d = values.len();
                if d == 0 {
                    return bad("tabulated field has no components".into());
                }
                let side = (1usize << gen) + 1;
                let len = side.checked_pow(d as u32).unwrap_or(usize::MAX);
                if values.iter().any(|c| c.len() != len) {
                    return bad(format!("tabulated components need {len} values"));
                }
                Ok(d)
            }
        }
    }

    /// Component `i` of `v(x)`.
    pub fn component(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            VectorField::Linear { matrix, offset } => {
                let b = offset.get(i).copied().unwrap_or(0.0);
                b + matrix[i].iter().zip(x).map(|(a, xi)| a * xi).sum::<f64>()
            }
            VectorField::Polynomial { coeffs } => coeffs[i].iter().map(|t| t.eval(x)).sum(),
            VectorField::Tabulated { gen, values } => interpolate(*gen, &values[i], x),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len()).map(|i| self.component(i, x)).collect()
    }

    /// `∫_F div v` in closed form; `None` for tabulated fields.
    pub fn divergence_integral(&self, figure: &Figure) -> Option<f64> {
        let boxes: Vec<Rectangle> = figure.cubes().iter().map(|c| c.cube_box()).collect();
        match self {
            VectorField::Linear { matrix, .. } => {
                let trace: f64 = (0..matrix.len()).map(|i| matrix[i][i]).sum();
                Some(trace * figure.volume().to_f64())
            }
            VectorField::Polynomial { coeffs } => {
                let derivs: Vec<Term> = coeffs
                    .iter()
                    .enumerate()
                    .flat_map(|(i, terms)| terms.iter().filter_map(move |t| t.derivative(i)))
                    .collect();
                let vals: Vec<f64> = boxes
                    .iter()
                    .map(|b| {
                        let bounds = b.bounds_f64();
                        derivs.iter().map(|t| t.integrate(&bounds)).sum()
                    })
                    .collect();
                Some(pairwise_sum(&vals))
            }
            VectorField::Tabulated { .. } => None,
        }
    }
}

fn interpolate(gen: u32, values: &[f64], x: &[f64]) -> f64 {
    let n = 1usize << gen;
    let side = n + 1;
    let d = x.len();
    let mut cell = Vec::with_capacity(d);
    let mut frac = Vec::with_capacity(d);
    for &xi in x {
        let s = xi.clamp(0.0, 1.0) * n as f64;
        let j = (s.floor() as usize).min(n - 1);
        cell.push(j);
        frac.push(s - j as f64);
    }
    let mut acc = 0.0;
    for corner in 0..1usize << d {
        let mut w = 1.0;
        let mut off = 0;
        for i in 0..d {
            let up = (corner >> (d - 1 - i)) & 1;
            w *= if up == 1 { frac[i] } else { 1.0 - frac[i] };
            off = off * side + cell[i] + up;
        }
        if w != 0.0 {
            acc += w * values[off];
        }
    }
    acc
}

/// `T_f(u) = ∫ f u`, exact in the scalar type; the coarser argument is
/// refined first.
pub fn t_functional<T: Scalar>(f: &StepFunction<T>, u: &StepFunction<T>) -> Result<T> {
    if f.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: u.dim(),
        });
    }
    let gen = f.gen().max(u.gen());
    let (f, u) = (f.refine(gen)?, u.refine(gen)?);
    let sum = f
        .values()
        .iter()
        .zip(u.values())
        .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    Ok(sum * f.cell_volume())
}

/// `Σ_{k,r} λ_{n,k,r} ∫_F g_{n,k,r}` for each `n ≤ upto`.
///
/// A cube `C ⊂ F` of generation `m` meets `g_{n,k,r}` with `n ≥ m` only
/// through mean-zero supports, and lies in child `ℓ` of `K_{n,k}` for
/// `n < m`, where the Haar function is the constant `2^{nd/2} A_{r,ℓ}`.
fn level_contributions(tab: &CoefficientTable, upto: u32, figure: &Figure) -> Vec<f64> {
    let d = tab.dim();
    let t = tab.types();
    let mut per_level = vec![Vec::new(); upto as usize + 1];
    for c in figure.cubes() {
        let m = c.gen();
        let vol = 2f64.powi(-((m as usize * d) as i32));
        for n in 0..m.min(upto + 1) {
            let k = c.ancestor(n).expect("n < m").index();
            let l = c.digit_below(n);
            let row = &tab.level(n)[k as usize * t..(k as usize + 1) * t];
            let signed: f64 = row
                .iter()
                .enumerate()
                .map(|(i, &lam)| if haar_sign(i as u64 + 1, l) > 0 { lam } else { -lam })
                .sum();
            per_level[n as usize].push(signed * 2f64.powf((n as usize * d) as f64 / 2.0) * vol);
        }
    }
    per_level.iter().map(|v| pairwise_sum(v)).collect()
}

fn check_figure(tab: &CoefficientTable, figure: &Figure) -> Result<()> {
    if figure.dim() != tab.dim() {
        return Err(Error::DimensionMismatch {
            expected: tab.dim(),
            got: figure.dim(),
        });
    }
    Ok(())
}

/// `a_{-1} |F| + Σ_{n ≤ M, k, r} λ_{n,k,r} ∫_F g_{n,k,r}`.
///
/// When every cube of `F` has generation at most `M + 1` the truncated
/// series is exact, and the result is `Δ_f(F)` up to rounding.
pub fn fs_partial_apply(tab: &CoefficientTable, max_gen: u32, figure: &Figure) -> Result<f64> {
    check_figure(tab, figure)?;
    if max_gen > tab.max_gen() {
        return Err(Error::Resolution(format!(
            "horizon {max_gen} exceeds table horizon {}",
            tab.max_gen()
        )));
    }
    if let Some(g) = figure.finest_generation() {
        if g > max_gen + 1 {
            return Err(Error::Resolution(format!(
                "figure cube of generation {g} needs horizon at least {}",
                g - 1
            )));
        }
    }
    let levels = level_contributions(tab, max_gen, figure);
    Ok(tab.a_minus1() * figure.volume().to_f64() + levels.iter().sum::<f64>())
}

/// Partial sums of the series applied to `F`: entry `0` is `a_{-1}|F|`,
/// entry `n + 1` includes all generations through `n`.
pub fn fs_partial_sums(tab: &CoefficientTable, figure: &Figure) -> Result<Vec<f64>> {
    check_figure(tab, figure)?;
    let mut acc = tab.a_minus1() * figure.volume().to_f64();
    let mut out = vec![acc];
    for c in level_contributions(tab, tab.max_gen(), figure) {
        acc += c;
        out.push(acc);
    }
    Ok(out)
}

/// `∫_{∂F} v · n_F` with `F`'s boundary cut into faces of generation
/// `resolution` and each face integrated by the composite midpoint rule on
/// `2^{L(d−1)}` nodes.
pub fn flux_at_resolution(
    v: &VectorField,
    figure: &Figure,
    resolution: u32,
    quad_level: u32,
    exec: Execution,
) -> Result<f64> {
    let d = v.validate()?;
    if d != figure.dim() {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: figure.dim(),
        });
    }
    let faces = figure.boundary_faces(resolution)?;
    let sub = 1u64 << quad_level;
    let h = 2f64.powi(-((resolution + quad_level) as i32));
    let area = h.powi(d as i32 - 1);
    let nodes = sub.pow(d as u32 - 1);
    let per_face = exec.map(faces.len(), |fi| {
        let face = &faces[fi];
        let mut x = vec![0.0; d];
        x[face.axis] = face.corner[face.axis] as f64 * h * sub as f64;
        let vals: Vec<f64> = (0..nodes)
            .map(|t| {
                let mut rest = t;
                for j in (0..d).filter(|&j| j != face.axis) {
                    let i = face.corner[j] * sub + rest % sub;
                    rest /= sub;
                    x[j] = (2 * i + 1) as f64 * h / 2.0;
                }
                v.component(face.axis, &x)
            })
            .collect();
        face.outward as f64 * pairwise_sum(&vals) * area
    });
    Ok(pairwise_sum(&per_face))
}

/// Flux with faces at the figure's finest cube generation.
pub fn flux(v: &VectorField, figure: &Figure, quad_level: u32) -> Result<f64> {
    match figure.finest_generation() {
        None => Ok(0.0),
        Some(g) => flux_at_resolution(v, figure, g, quad_level, Execution::default()),
    }
}
