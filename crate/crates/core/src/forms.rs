//! Coframes on J^3 (and its prolongation by `a13`) and their structure functions.
//!
//! Forms are written in the contact basis `beta = (du - p dx, dp - q dx, dq - r dx,
//! dr - f dx, dx, da13)`. A coframe is a matrix `M` with `theta = M beta`;
//! `d theta^i = sum_{j<k} T^i_jk theta^j ^ theta^k` defines the structure tensor.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::coframe::BranchTag;
use crate::error::{Error, Result};
use crate::expr::{Differentiator, EvalError, Evaluator, Expr, JetSample, JetVar, ParamBinding, SampleSource, ZeroTestConfig};
use crate::scalar::Scalar;

/// Square matrix of expressions, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CoframeMatrix {
    dim: usize,
    entries: Vec<Expr>,
}

impl CoframeMatrix {
    pub fn new(dim: usize, entries: Vec<Expr>) -> Result<Self> {
        if entries.len() != dim * dim || !(dim == 5 || dim == 6) {
            return Err(Error::Shape(format!("{} entries for dimension {dim}", entries.len())));
        }
        Ok(CoframeMatrix { dim, entries })
    }

    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("rows of unequal length".into()));
        }
        CoframeMatrix::new(dim, rows.into_iter().flatten().collect())
    }

    pub fn identity(dim: usize) -> Self {
        let entries = (0..dim * dim).map(|k| if k / dim == k % dim { Expr::one() } else { Expr::zero() }).collect();
        CoframeMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[Expr] {
        &self.entries
    }

    pub fn mul(&self, other: &CoframeMatrix) -> Result<CoframeMatrix> {
        if self.dim != other.dim {
            return Err(Error::Shape(format!("{}x{} times {}x{}", self.dim, self.dim, other.dim, other.dim)));
        }
        let n = self.dim;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let terms: Vec<Expr> = (0..n)
                    .filter(|k| !self.get(i, *k).is_zero() && !other.get(*k, j).is_zero())
                    .map(|k| self.get(i, k) * other.get(k, j))
                    .collect();
                out.push(Expr::sum(terms));
            }
        }
        Ok(CoframeMatrix { dim: n, entries: out })
    }

    pub fn map(&self, mut f: impl FnMut(&Expr) -> Expr) -> CoframeMatrix {
        CoframeMatrix { dim: self.dim, entries: self.entries.iter().map(&mut f).collect() }
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.dim).all(|i| (i + 1..self.dim).all(|j| self.get(i, j).is_zero()))
    }

    /// Symbolic inverse by forward substitution. Requires structural lower triangularity.
    pub fn inverse_lower_triangular(&self) -> Result<CoframeMatrix> {
        if !self.is_lower_triangular() {
            return Err(Error::Shape("matrix is not lower triangular".into()));
        }
        let n = self.dim;
        let mut inv = vec![Expr::zero(); n * n];
        for i in 0..n {
            let d = self.get(i, i);
            if d.is_zero() {
                return Err(Error::Shape(format!("zero diagonal entry {}", i + 1)));
            }
            let dinv = d.recip();
            inv[i * n + i] = dinv.clone();
            for j in 0..i {
                let terms: Vec<Expr> = (j..i)
                    .filter(|k| !self.get(i, *k).is_zero() && !inv[k * n + j].is_zero())
                    .map(|k| self.get(i, k) * &inv[k * n + j])
                    .collect();
                inv[i * n + j] = -(&dinv * Expr::sum(terms));
            }
        }
        Ok(CoframeMatrix { dim: n, entries: inv })
    }

    pub fn eval_with<S: Scalar>(&self, ev: &mut Evaluator<'_, S>) -> std::result::Result<Vec<Complex<S>>, EvalError> {
        self.entries.iter().map(|e| ev.eval(e)).collect()
    }
}

/// Coefficients of a one-form in the contact basis.
pub type OneForm = Vec<Expr>;

/// `dv` in the contact basis.
pub fn coordinate_to_base(v: JetVar, f: &Expr, dim: usize) -> OneForm {
    let mut out = vec![Expr::zero(); dim];
    let slot = |w: JetVar| match w {
        JetVar::U => 0,
        JetVar::P => 1,
        JetVar::Q => 2,
        JetVar::R => 3,
        JetVar::X => 4,
        JetVar::A13 => 5,
    };
    if v == JetVar::A13 && dim < 6 {
        return out;
    }
    out[slot(v)] = Expr::one();
    let along_x = match v {
        JetVar::U => Some(Expr::p()),
        JetVar::P => Some(Expr::q()),
        JetVar::Q => Some(Expr::r()),
        JetVar::R => Some(f.clone()),
        _ => None,
    };
    if let Some(c) = along_x {
        out[4] = c;
    }
    out
}

/// Two-form as `(j, k) -> coefficient of beta^j ^ beta^k`, `j < k`, zero-based.
pub type TwoForm = BTreeMap<(usize, usize), Expr>;

/// Exterior derivatives of the contact basis.
pub fn base_differentials(f: &Expr, dim: usize) -> Vec<TwoForm> {
    let mut d = Differentiator::new();
    let mut out = vec![TwoForm::new(); dim];
    for i in 0..3 {
        out[i].insert((i + 1, 4), Expr::int(-1));
    }
    for (a, v) in [JetVar::U, JetVar::P, JetVar::Q, JetVar::R].into_iter().enumerate() {
        let c = d.partial(f, v);
        if !c.is_zero() {
            out[3].insert((a, 4), -c);
        }
    }
    out
}

/// Why a sample point was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFailure {
    Pole,
    Singular,
}

/// Coframe with its symbolic derivatives, ready for repeated numeric evaluation.
#[derive(Debug, Clone)]
pub struct PreparedCoframe {
    matrix: CoframeMatrix,
    /// For each entry: derivative components along the contact basis.
    grads: Vec<Vec<Expr>>,
    dbeta: Vec<TwoForm>,
}

impl PreparedCoframe {
    pub fn new(matrix: &CoframeMatrix, f: &Expr) -> Result<Self> {
        Self::with_differentiator(matrix, f, &mut Differentiator::new())
    }

    pub fn with_differentiator(matrix: &CoframeMatrix, f: &Expr, d: &mut Differentiator) -> Result<Self> {
        if f.contains_var(JetVar::A13) {
            return Err(crate::error::ExprError::A13InTotalDerivative.into());
        }
        let n = matrix.dim();
        let grads = matrix
            .entries()
            .iter()
            .map(|e| {
                let mut g: Vec<Expr> = [JetVar::U, JetVar::P, JetVar::Q, JetVar::R]
                    .into_iter()
                    .map(|v| d.partial(e, v))
                    .collect();
                g.push(d.total_derivative_unchecked(e, f));
                if n == 6 {
                    g.push(d.partial(e, JetVar::A13));
                }
                g
            })
            .collect();
        Ok(PreparedCoframe { matrix: matrix.clone(), grads, dbeta: base_differentials(f, n) })
    }

    pub fn matrix(&self) -> &CoframeMatrix {
        &self.matrix
    }

    pub fn tensor_at<S: Scalar>(&self, ev: &mut Evaluator<'_, S>) -> std::result::Result<StructureTensor<S>, SampleFailure> {
        let n = self.matrix.dim();
        let m = self.matrix.eval_with(ev).map_err(|_| SampleFailure::Pole)?;
        let inv = invert(&m, n).ok_or(SampleFailure::Singular)?;
        let mut dbeta = Vec::with_capacity(n);
        for form in &self.dbeta {
            let mut vals = Vec::with_capacity(form.len());
            for (&(a, b), e) in form {
                vals.push((a, b, ev.eval(e).map_err(|_| SampleFailure::Pole)?));
            }
            dbeta.push(vals);
        }
        let mut data = vec![Complex::zero(); n * n * n];
        let mut w = vec![Complex::<S>::zero(); n * n];
        let mut tmp = vec![Complex::<S>::zero(); n * n];
        for i in 0..n {
            w.iter_mut().for_each(|z| *z = Complex::zero());
            for j in 0..n {
                let idx = i * n + j;
                for (a, g) in self.grads[idx].iter().enumerate() {
                    if g.is_zero() {
                        continue;
                    }
                    let v = ev.eval(g).map_err(|_| SampleFailure::Pole)?;
                    w[a * n + j] = w[a * n + j] + v;
                    w[j * n + a] = w[j * n + a] - v;
                }
                let mij = m[idx];
                if mij.is_zero() {
                    continue;
                }
                for &(a, b, v) in &dbeta[j] {
                    w[a * n + b] = w[a * n + b] + mij * v;
                    w[b * n + a] = w[b * n + a] - mij * v;
                }
            }
            // T^i = N^T W N
            for a in 0..n {
                for k in 0..n {
                    let mut s = Complex::zero();
                    for b in 0..n {
                        s = s + w[a * n + b] * inv[b * n + k];
                    }
                    tmp[a * n + k] = s;
                }
            }
            // Upper triangle only, mirrored, so antisymmetry is exact.
            for j in 0..n {
                for k in j + 1..n {
                    let mut s = Complex::zero();
                    for a in 0..n {
                        s = s + inv[a * n + j] * tmp[a * n + k];
                    }
                    data[(i * n + j) * n + k] = s;
                    data[(i * n + k) * n + j] = -s;
                }
            }
        }
        Ok(StructureTensor { dim: n, data })
    }
}

/// Gauss-Jordan inverse with partial pivoting; `None` when numerically singular.
pub fn invert<S: Scalar>(m: &[Complex<S>], n: usize) -> Option<Vec<Complex<S>>> {
    let mut a = m.to_vec();
    let mut inv = vec![Complex::zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = Complex::one();
    }
    let scale = m.iter().map(|z| z.norm()).fold(S::zero(), S::max);
    if scale.is_zero() || !scale.is_finite() {
        return None;
    }
    let eps = S::epsilon() * S::from_f64_lossy(1e4) * scale;
    for col in 0..n {
        let piv = (col..n).max_by(|x, y| a[x * n + col].norm().partial_cmp(&a[y * n + col].norm()).unwrap_or(std::cmp::Ordering::Equal))?;
        if a[piv * n + col].norm() <= eps {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let p = a[col * n + col].inv();
        for k in 0..n {
            a[col * n + k] = a[col * n + k] * p;
            inv[col * n + k] = inv[col * n + k] * p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r * n + col];
            if factor.is_zero() {
                continue;
            }
            for k in 0..n {
                a[r * n + k] = a[r * n + k] - factor * a[col * n + k];
                inv[r * n + k] = inv[r * n + k] - factor * inv[col * n + k];
            }
        }
    }
    Some(inv)
}

/// `T^i_jk`, zero-based, antisymmetric in `(j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTensor<S> {
    dim: usize,
    data: Vec<Complex<S>>,
}

impl<S: Scalar> StructureTensor<S> {
    pub fn from_data(dim: usize, data: Vec<Complex<S>>) -> Self {
        assert_eq!(data.len(), dim * dim * dim);
        StructureTensor { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex<S> {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    pub fn data(&self) -> &[Complex<S>] {
        &self.data
    }

    /// Largest `|T_jk + T_kj|`.
    pub fn antisymmetry_defect(&self) -> S {
        let n = self.dim;
        let mut worst = S::zero();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.get(i, j, k) + self.get(i, k, j)).norm());
                }
            }
        }
        worst
    }

    fn distance(&self, other: &StructureTensor<S>) -> S {
        self.data.iter().zip(&other.data).map(|(a, b)| (*a - *b).norm()).fold(S::zero(), S::max)
    }
}

/// Numeric settings shared by fingerprint computations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FingerprintConfig {
    pub samples: usize,
    pub seed: u64,
    /// Constancy tolerance on [`tensor_deviation`] from the mean.
    pub tolerance: f64,
    pub modulus_range: (f64, f64),
    pub retry_factor: usize,
}

impl Default for FingerprintConfig {
    fn default() -> Self {
        FingerprintConfig { samples: 24, seed: 42, tolerance: 1e-8, modulus_range: (0.5, 2.0), retry_factor: 4 }
    }
}

impl FingerprintConfig {
    pub fn from_zero_config(cfg: &ZeroTestConfig) -> Self {
        FingerprintConfig {
            samples: cfg.sample_count,
            seed: cfg.seed,
            tolerance: cfg.tolerance,
            modulus_range: cfg.modulus_range,
            retry_factor: cfg.retry_factor,
        }
    }
}

/// Structure functions of a coframe over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureFingerprint<S> {
    pub mean: StructureTensor<S>,
    pub per_sample: Vec<StructureTensor<S>>,
    /// Which radical variant each sample was aligned to.
    pub variants_used: Vec<usize>,
    pub reference_variant: usize,
    /// Largest [`tensor_deviation`] of a sample from the mean.
    pub max_deviation: f64,
    pub constant: bool,
    pub tolerance: f64,
    pub rejected_samples: usize,
    pub branch: Option<BranchTag>,
}

impl<S: Scalar> StructureFingerprint<S> {
    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    /// Mean value of `T^i_jk` with one-based indices, as written in structure equations.
    pub fn t(&self, i: usize, j: usize, k: usize) -> Complex<S> {
        self.mean.get(i - 1, j - 1, k - 1)
    }

    pub fn with_branch(mut self, tag: BranchTag) -> Self {
        self.branch = Some(tag);
        self
    }
}

/// Fingerprint of one coframe at explicit points. Singular or pole points are skipped;
/// more than half of them skipped is an error.
pub fn structure_functions<S: Scalar>(
    coframe: &PreparedCoframe,
    points: &[JetSample<S>],
    params: &ParamBinding<S>,
    tolerance: f64,
) -> Result<StructureFingerprint<S>> {
    let tensors: Vec<Option<StructureTensor<S>>> = points
        .par_iter()
        .map(|pt| coframe.tensor_at(&mut Evaluator::new(*pt, params)).ok())
        .collect();
    let rejected = tensors.iter().filter(|t| t.is_none()).count();
    if points.is_empty() || rejected * 2 > points.len() {
        return Err(Error::Singular { singular: rejected, total: points.len() });
    }
    let good: Vec<StructureTensor<S>> = tensors.into_iter().flatten().collect();
    let n = good.len();
    Ok(summarize(good, vec![0; n], 0, rejected, tolerance))
}

/// Fingerprint over seeded samples, choosing per sample the radical variant whose
/// tensor is closest to the reference variant at the first sample. Principal roots
/// switch branch across the sampling box, and this undoes that.
pub fn aligned_fingerprint<S: Scalar>(
    variants: &[PreparedCoframe],
    reference: usize,
    params: &ParamBinding<S>,
    cfg: &FingerprintConfig,
) -> Result<StructureFingerprint<S>> {
    if variants.is_empty() || reference >= variants.len() {
        return Err(Error::Shape(format!("reference variant {reference} of {}", variants.len())));
    }
    let dim = variants[0].matrix().dim();
    let mut source = SampleSource::new(cfg.seed, cfg.modulus_range);
    let total = cfg.samples * (1 + cfg.retry_factor);
    let points: Vec<JetSample<S>> = (0..total).map(|_| source.point(dim == 6)).collect();

    // First usable reference point, found sequentially.
    let mut start = None;
    for (idx, pt) in points.iter().enumerate() {
        if let Ok(t) = variants[reference].tensor_at(&mut Evaluator::new(*pt, params)) {
            start = Some((idx, t));
            break;
        }
    }
    let Some((first, anchor)) = start else {
        return Err(Error::Singular { singular: total, total });
    };
    let per_point: Vec<Option<(usize, StructureTensor<S>)>> = points[first + 1..]
        .par_iter()
        .map(|pt| {
            let mut ev = Evaluator::new(*pt, params);
            let mut best: Option<(usize, StructureTensor<S>, S)> = None;
            for (vi, v) in variants.iter().enumerate() {
                if let Ok(t) = v.tensor_at(&mut ev) {
                    let d = t.distance(&anchor);
                    if best.as_ref().is_none_or(|b| d < b.2) {
                        best = Some((vi, t, d));
                    }
                }
            }
            best.map(|(vi, t, _)| (vi, t))
        })
        .collect();

    let mut tensors = vec![anchor];
    let mut used = vec![reference];
    let mut attempted = first + 1;
    let mut rejected = first;
    for item in per_point {
        if tensors.len() >= cfg.samples {
            break;
        }
        attempted += 1;
        match item {
            Some((vi, t)) => {
                tensors.push(t);
                used.push(vi);
            }
            None => rejected += 1,
        }
    }
    if rejected * 2 > attempted || tensors.len() < cfg.samples.min(total) {
        return Err(Error::Singular { singular: rejected, total: attempted });
    }
    Ok(summarize(tensors, used, reference, rejected, cfg.tolerance))
}

fn summarize<S: Scalar>(
    tensors: Vec<StructureTensor<S>>,
    used: Vec<usize>,
    reference: usize,
    rejected: usize,
    tolerance: f64,
) -> StructureFingerprint<S> {
    let dim = tensors[0].dim();
    let len = tensors[0].data.len();
    let count = S::from_usize(tensors.len()).unwrap_or_else(S::one);
    let mut mean = vec![Complex::<S>::zero(); len];
    for t in &tensors {
        for (m, v) in mean.iter_mut().zip(&t.data) {
            *m = *m + *v;
        }
    }
    for m in &mut mean {
        *m = *m / count;
    }
    let mean = StructureTensor { dim, data: mean };
    let dev = tensors.iter().map(|t| tensor_deviation(t, &mean)).fold(0.0, f64::max);
    StructureFingerprint {
        mean,
        per_sample: tensors,
        variants_used: used,
        reference_variant: reference,
        max_deviation: dev,
        constant: dev <= tolerance,
        tolerance,
        rejected_samples: rejected,
        branch: None,
    }
}

/// Agreement within `tol` in the sense of [`tensor_deviation`]: absolute for small tensors, relative above.
/// Non-constant inputs are an error.
pub fn fingerprint_match<S: Scalar>(a: &StructureFingerprint<S>, b: &StructureFingerprint<S>, tol: f64) -> Result<bool> {
    for fp in [a, b] {
        if !fp.constant {
            return Err(Error::NotConstant(fp.max_deviation));
        }
    }
    Ok(a.dim() == b.dim() && tensor_deviation(&a.mean, &b.mean) <= tol)
}

/// Largest entry of the tensor in modulus, at least 1. Roundoff in every entry scales
/// with the largest entries, so deviations are measured against this.
pub fn tensor_scale<S: Scalar>(t: &StructureTensor<S>) -> f64 {
    t.data.iter().map(|v| v.norm().to_f64_lossy()).fold(1.0, f64::max)
}

/// Largest `|a - b|` over all entries divided by [`tensor_scale`] of `b`: absolute when
/// `b` is small, relative to the size of `b` otherwise.
pub fn tensor_deviation<S: Scalar>(a: &StructureTensor<S>, b: &StructureTensor<S>) -> f64 {
    if a.dim != b.dim {
        return f64::INFINITY;
    }
    let diff = a.data.iter().zip(&b.data).map(|(x, y)| (*x - *y).norm().to_f64_lossy()).fold(0.0, f64::max);
    diff / tensor_scale(b)
}

/// Largest violation of `d(d theta) = 0` for constant structure functions.
pub fn jacobi_residual<S: Scalar>(t: &StructureTensor<S>) -> f64 {
    let n = t.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let mut s = Complex::<S>::zero();
                    for j in 0..n {
                        s = s + t.get(j, a, b) * t.get(i, j, c) + t.get(j, b, c) * t.get(i, j, a) + t.get(j, c, a) * t.get(i, j, b);
                    }
                    worst = worst.max(s.norm().to_f64_lossy());
                }
            }
        }
    }
    worst
}

/// Tensor of the coframe `D theta` for a constant diagonal `D`.
pub fn conjugate_diagonal<S: Scalar>(t: &StructureTensor<S>, d: &[Complex<S>]) -> StructureTensor<S> {
    let n = t.dim();
    let mut data = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                data.push(d[i] * t.get(i, j, k) / (d[j] * d[k]));
            }
        }
    }
    StructureTensor { dim: n, data }
}

/// Nonzero upper entries `((i, j, k), value)` with one-based indices and `j < k`.
pub fn nonzero_entries<S: Scalar>(t: &StructureTensor<S>, threshold: f64) -> Vec<((usize, usize, usize), Complex<f64>)> {
    let n = t.dim();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in j + 1..n {
                let v = t.get(i, j, k);
                let z = Complex::new(v.re.to_f64_lossy(), v.im.to_f64_lossy());
                if z.norm() > threshold {
                    out.push(((i + 1, j + 1, k + 1), z));
                }
            }
        }
    }
    out
}

fn clean(v: f64) -> f64 {
    if v.abs() < 5e-13 {
        0.0
    } else {
        v
    }
}

/// Key-sorted text lines `T[i][j][k] = re,im`.
pub fn fingerprint_lines<S: Scalar>(t: &StructureTensor<S>) -> Vec<String> {
    nonzero_entries(t, 1e-9)
        .into_iter()
        .map(|((i, j, k), z)| format!("T[{i}][{j}][{k}] = {:.10},{:.10}", clean(z.re), clean(z.im)))
        .collect()
}

/// Closest fraction `p/q` with `q <= max_den`, if within `tol`.
pub fn recognize_rational(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut v = x;
    for _ in 0..40 {
        let a = v.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= tol {
            return Some((h1, k1));
        }
        let frac = v - a as f64;
        if frac.abs() < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    None
}

/// `3/2`, `-1`, `0.6123724357` style rendering of a (nearly) real number.
pub fn pretty_real(x: f64, tol: f64) -> String {
    match recognize_rational(x, 1000, tol) {
        Some((p, 1)) => p.to_string(),
        Some((p, q)) => format!("{p}/{q}"),
        None => format!("{:.10}", clean(x)),
    }
}

pub fn pretty_complex(z: Complex<f64>, tol: f64) -> String {
    if z.im.abs() <= tol * (1.0 + z.re.abs()) {
        pretty_real(z.re, tol)
    } else if z.re.abs() <= tol * (1.0 + z.im.abs()) {
        format!("{}*i", pretty_real(z.im, tol))
    } else {
        format!("{} + {}*i", pretty_real(z.re, tol), pretty_real(z.im, tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn contact_basis_of_coordinates() {
        let f = parse("r^2").unwrap();
        let du = coordinate_to_base(JetVar::U, &f, 5);
        assert_eq!(du, vec![Expr::one(), Expr::zero(), Expr::zero(), Expr::zero(), Expr::p()]);
        let dr = coordinate_to_base(JetVar::R, &f, 5);
        assert_eq!(dr[3], Expr::one());
        assert_eq!(dr[4], f);
    }

    #[test]
    fn base_differential_of_last_form() {
        let f = parse("u*r").unwrap();
        let d = base_differentials(&f, 5);
        assert_eq!(d[0].get(&(1, 4)), Some(&Expr::int(-1)));
        assert_eq!(d[3].get(&(0, 4)), Some(&-Expr::r()));
        assert_eq!(d[3].get(&(3, 4)), Some(&-Expr::u()));
        assert!(d[4].is_empty());
    }

    #[test]
    fn identity_coframe_gives_base_structure() {
        let f = parse("r^2").unwrap();
        let prepared = PreparedCoframe::new(&CoframeMatrix::identity(5), &f).unwrap();
        let pt = JetSample::<f64>::real([0.3, 0.2, 0.5, 0.7, 1.5]);
        let t = prepared.tensor_at(&mut Evaluator::new(pt, &ParamBinding::new())).unwrap();
        assert!((t.get(0, 1, 4).re + 1.0).abs() < 1e-14);
        assert!((t.get(3, 3, 4).re + 3.0).abs() < 1e-12);
        assert!(t.antisymmetry_defect() < 1e-14);
    }

    #[test]
    fn symbolic_lower_triangular_inverse() {
        let m = CoframeMatrix::from_rows(vec![
            vec![Expr::x(), Expr::zero(), Expr::zero(), Expr::zero(), Expr::zero()],
            vec![Expr::p(), Expr::q(), Expr::zero(), Expr::zero(), Expr::zero()],
            vec![Expr::one(), Expr::r(), Expr::int(2), Expr::zero(), Expr::zero()],
            vec![Expr::zero(), Expr::zero(), Expr::u(), Expr::one(), Expr::zero()],
            vec![Expr::x(), Expr::zero(), Expr::zero(), Expr::p(), Expr::int(3)],
        ])
        .unwrap();
        let prod = m.mul(&m.inverse_lower_triangular().unwrap()).unwrap();
        let cfg = ZeroTestConfig::default();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { Expr::one() } else { Expr::zero() };
                assert!(crate::expr::is_identically_zero(&(prod.get(i, j) - want), &cfg).unwrap());
            }
        }
    }

    #[test]
    fn rational_recognition() {
        assert_eq!(recognize_rational(-0.375, 100, 1e-9), Some((-3, 8)));
        assert_eq!(recognize_rational(1.5, 100, 1e-9), Some((3, 2)));
        assert_eq!(recognize_rational(6f64.sqrt() / 4.0, 100, 1e-9), None);
        assert_eq!(pretty_real(-27.0 / 50.0, 1e-9), "-27/50");
    }
}
