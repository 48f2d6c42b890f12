//! Grid quantization oracles and the formal symbol calculus.
//!
//! Operators are discretized by pseudospectral left quantization on a
//! periodic box [−L, L)^n with N points per axis. The dual grid carries the
//! FFT frequencies ξ_k = kπ/L, k = −N/2..N/2−1, and all 2π factors follow
//! the convention d̄ξ = (2π)^{−n}dξ.

pub mod calculus;
pub mod radial;

use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgError};
use crate::sampling::par_map;
use crate::symbols::SymbolExpr;

pub use calculus::{
    amplitude_reduce, formal_adjoint, leibniz_product, order_reduction, parametrix, Amplitude,
};
pub use radial::{radial_limit_decomposition, RadialSplit};

/// Periodic box [−L, L)^dim with N grid points per axis.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub box_l: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn default_1d() -> Self {
        GridSpec { dim: 1, box_l: 20.0, n: 512 }
    }

    pub fn default_2d() -> Self {
        GridSpec { dim: 2, box_l: 10.0, n: 64 }
    }

    /// 1-d grid whose dual grid coincides with the spatial grid (needed to
    /// realize the Fourier transform as a grid endomorphism): Δx = Δξ forces
    /// L = sqrt(Nπ/2).
    pub fn self_dual(n: usize) -> Self {
        GridSpec { dim: 1, box_l: (n as f64 * PI / 2.0).sqrt(), n }
    }

    pub fn new(dim: usize, box_l: f64, n: usize) -> Self {
        assert!(dim == 1 || dim == 2, "only n ∈ {{1,2}}");
        assert!(n.is_power_of_two(), "N must be a power of two");
        GridSpec { dim, box_l, n }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.box_l / self.n as f64
    }

    pub fn dxi(&self) -> f64 {
        PI / self.box_l
    }

    pub fn total(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Spatial coordinates per axis: x_j = −L + jΔx.
    pub fn axis_points(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n).map(|j| -self.box_l + j as f64 * dx).collect()
    }

    /// Dual coordinates indexed by FFT bin.
    pub fn axis_freqs(&self) -> Vec<f64> {
        let dxi = self.dxi();
        (0..self.n)
            .map(|b| {
                let k = if b < self.n / 2 { b as i64 } else { b as i64 - self.n as i64 };
                k as f64 * dxi
            })
            .collect()
    }

    fn axis_point(&self, j: usize) -> f64 {
        -self.box_l + j as f64 * self.dx()
    }

    fn axis_freq(&self, b: usize) -> f64 {
        let k = if b < self.n / 2 { b as i64 } else { b as i64 - self.n as i64 };
        k as f64 * self.dxi()
    }

    /// Flattened spatial coordinates (row-major for dim 2).
    pub fn point(&self, idx: usize) -> Vec<f64> {
        match self.dim {
            1 => vec![self.axis_point(idx)],
            _ => vec![self.axis_point(idx / self.n), self.axis_point(idx % self.n)],
        }
    }

    pub fn freq(&self, idx: usize) -> Vec<f64> {
        match self.dim {
            1 => vec![self.axis_freq(idx)],
            _ => vec![self.axis_freq(idx / self.n), self.axis_freq(idx % self.n)],
        }
    }

    fn same(&self, other: &GridSpec) -> bool {
        self.dim == other.dim && self.n == other.n && (self.box_l - other.box_l).abs() < 1e-12
    }
}

/// Complex samples over the spatial grid.
#[derive(Clone, Debug)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(spec: GridSpec, f: F) -> Self {
        let values = (0..spec.total()).map(|i| f(&spec.point(i))).collect();
        GridFunction { spec, values }
    }

    pub fn norm(&self) -> f64 {
        let w = self.spec.dx().powi(self.spec.dim as i32);
        (w * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn inner(&self, other: &GridFunction) -> Complex64 {
        let w = self.spec.dx().powi(self.spec.dim as i32);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            * w
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        GridFunction { spec: self.spec, values }
    }

    /// Zero out everything outside the inner half-box |x_i| ≤ L/2.
    pub fn inner_restriction(&self) -> GridFunction {
        let half = self.spec.box_l / 2.0;
        let values = (0..self.values.len())
            .map(|i| {
                let x = self.spec.point(i);
                if x.iter().all(|c| c.abs() <= half) {
                    self.values[i]
                } else {
                    Complex64::ZERO
                }
            })
            .collect();
        GridFunction { spec: self.spec, values }
    }
}

static PLANNER: Lazy<Mutex<FftPlanner<f64>>> = Lazy::new(|| Mutex::new(FftPlanner::new()));

fn fft_axis(buf: &mut [Complex64], inverse: bool) {
    let fft = {
        let mut p = PLANNER.lock().unwrap();
        if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        }
    };
    fft.process(buf);
}

/// Unnormalized DFT over every axis (forward: e^{−2πi jk/N}).
fn fft_all(spec: &GridSpec, values: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = spec.n;
    let mut out = values.to_vec();
    match spec.dim {
        1 => fft_axis(&mut out, inverse),
        _ => {
            for row in out.chunks_mut(n) {
                fft_axis(row, inverse);
            }
            let mut col = vec![Complex64::ZERO; n];
            for j2 in 0..n {
                for j1 in 0..n {
                    col[j1] = out[j1 * n + j2];
                }
                fft_axis(&mut col, inverse);
                for j1 in 0..n {
                    out[j1 * n + j2] = col[j1];
                }
            }
        }
    }
    out
}

type ApplyFn = dyn Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync;

/// Matrix-free linear operator on grid functions.
#[derive(Clone)]
pub struct GridOperator {
    pub spec: GridSpec,
    apply_fn: Arc<ApplyFn>,
}

impl GridOperator {
    pub fn from_fn(
        spec: GridSpec,
        f: impl Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync + 'static,
    ) -> Self {
        GridOperator { spec, apply_fn: Arc::new(f) }
    }

    pub fn identity(spec: GridSpec) -> Self {
        GridOperator::from_fn(spec, |u| u.to_vec())
    }

    pub fn apply(&self, u: &GridFunction) -> GridFunction {
        assert!(self.spec.same(&u.spec), "grid mismatch");
        GridFunction { spec: u.spec, values: (self.apply_fn)(&u.values) }
    }

    /// self ∘ other.
    pub fn compose(&self, other: &GridOperator) -> GridOperator {
        assert!(self.spec.same(&other.spec));
        let f = self.apply_fn.clone();
        let g = other.apply_fn.clone();
        GridOperator::from_fn(self.spec, move |u| f(&g(u)))
    }

    pub fn sub(&self, other: &GridOperator) -> GridOperator {
        assert!(self.spec.same(&other.spec));
        let f = self.apply_fn.clone();
        let g = other.apply_fn.clone();
        GridOperator::from_fn(self.spec, move |u| {
            f(u).iter().zip(g(u)).map(|(a, b)| a - b).collect()
        })
    }

    pub fn scale(&self, c: Complex64) -> GridOperator {
        let f = self.apply_fn.clone();
        GridOperator::from_fn(self.spec, move |u| f(u).iter().map(|v| c * v).collect())
    }

    /// Dense column-major materialization; only for small grids.
    pub fn dense(&self) -> Result<Vec<Vec<Complex64>>> {
        let total = self.spec.total();
        if total > 1024 {
            return Err(SgError::InvalidInput(format!(
                "dense materialization capped at 1024 points, grid has {total}"
            )));
        }
        let mut cols = Vec::with_capacity(total);
        for k in 0..total {
            let mut e = vec![Complex64::ZERO; total];
            e[k] = Complex64::ONE;
            cols.push((self.apply_fn)(&e));
        }
        Ok(cols)
    }
}

/// Left quantization of a symbol:
/// (Op(a)u)(x_j) = (2π)^{−n} Σ_ξ e^{ix_jξ} a(x_j, ξ) û(ξ) Δξ^n.
pub fn quantize(a: &SymbolExpr, spec: &GridSpec) -> Result<GridOperator> {
    let min_n = if spec.dim == 1 { 128 } else { 32 };
    if a.order.m_psi >= 1 && spec.n < min_n {
        return Err(SgError::GridTooCoarse(format!(
            "ψ-order {} symbol needs N ≥ {min_n}, got {}",
            a.order.m_psi, spec.n
        )));
    }
    crate::sampling::init_threads();
    let n = spec.n;
    let twiddle: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64))
        .collect();
    match spec.dim {
        1 => {
            let ax = spec.axis_points();
            let fr = spec.axis_freqs();
            let table: Vec<Complex64> = {
                let a = a.clone();
                par_map(n * n, move |i| a.eval(&[ax[i / n]], &[fr[i % n]]))
            };
            let spec = *spec;
            Ok(GridOperator::from_fn(spec, move |u| {
                let f = fft_all(&spec, u, false);
                let scale = 1.0 / n as f64;
                par_map(n, |j| {
                    let mut acc = Complex64::ZERO;
                    for b in 0..n {
                        acc += twiddle[(j * b) % n] * table[j * n + b] * f[b];
                    }
                    acc * scale
                })
            }))
        }
        _ => {
            let a = a.clone();
            let ax = spec.axis_points();
            let fr = spec.axis_freqs();
            let spec = *spec;
            Ok(GridOperator::from_fn(spec, move |u| {
                let f = fft_all(&spec, u, false);
                let scale = 1.0 / (n * n) as f64;
                par_map(n * n, |j| {
                    let (j1, j2) = (j / n, j % n);
                    let x = [ax[j1], ax[j2]];
                    let mut acc = Complex64::ZERO;
                    for b1 in 0..n {
                        let w1 = twiddle[(j1 * b1) % n];
                        for b2 in 0..n {
                            let s = a.eval(&x, &[fr[b1], fr[b2]]);
                            acc += w1 * twiddle[(j2 * b2) % n] * s * f[b1 * n + b2];
                        }
                    }
                    acc * scale
                })
            }))
        }
    }
}

/// Oscillatory-sum quantization of an amplitude a(x, y, ξ) (dim 1 only;
/// O(N³), intended for oracle comparisons on modest grids).
pub fn quantize_amplitude(amp: &Amplitude, spec: &GridSpec) -> Result<GridOperator> {
    if spec.dim != 1 {
        return Err(SgError::InvalidInput(
            "amplitude quantization is 1-d only".into(),
        ));
    }
    crate::sampling::init_threads();
    let n = spec.n;
    let ax = spec.axis_points();
    let fr = spec.axis_freqs();
    let dx = spec.dx();
    let amp = amp.clone();
    let spec = *spec;
    // (Au)(x_j) = (Δξ/2π) Σ_b e^{ix_jξ_b} Σ_m Δx e^{−ix_mξ_b} a(x_j,x_m,ξ_b) u_m
    Ok(GridOperator::from_fn(spec, move |u| {
        let dxi = spec.dxi();
        par_map(n, |j| {
            let mut acc = Complex64::ZERO;
            for b in 0..n {
                let mut inner = Complex64::ZERO;
                for m in 0..n {
                    let ph = Complex64::from_polar(1.0, -ax[m] * fr[b]);
                    inner += ph * amp.eval(&[ax[j]], &[ax[m]], &[fr[b]]) * u[m];
                }
                acc += Complex64::from_polar(1.0, ax[j] * fr[b]) * inner;
            }
            acc * dx * dxi / (2.0 * PI)
        })
    }))
}

/// σ(A)(x, ξ) = e^{−ixξ}(A e^{i·ξ})(x), sampled at grid-snapped points in
/// the inner half of grid and dual grid.
pub fn recover_symbol(
    p: &GridOperator,
    samples: &[(Vec<f64>, Vec<f64>)],
) -> Result<Vec<Complex64>> {
    let spec = p.spec;
    let x_max = spec.box_l / 2.0;
    let xi_max = PI / spec.dx() / 2.0;
    let ax = spec.axis_points();
    let mut out = Vec::with_capacity(samples.len());
    for (x, xi) in samples {
        for &c in x {
            if c.abs() > x_max {
                return Err(SgError::SampleOutOfRange(c, x_max));
            }
        }
        for &c in xi {
            if c.abs() > xi_max {
                return Err(SgError::SampleOutOfRange(c, xi_max));
            }
        }
        // snap x to the nearest grid node and ξ to the nearest dual node
        let snap_idx: Vec<usize> = x
            .iter()
            .map(|&c| {
                let j = ((c + spec.box_l) / spec.dx()).round() as usize;
                j.min(spec.n - 1)
            })
            .collect();
        let xg: Vec<f64> = snap_idx.iter().map(|&j| ax[j]).collect();
        let xi: Vec<f64> = xi
            .iter()
            .map(|&c| (c / spec.dxi()).round() * spec.dxi())
            .collect();
        let wave = GridFunction::from_fn(spec, |p| {
            Complex64::from_polar(1.0, p.iter().zip(&xi).map(|(a, b)| a * b).sum())
        });
        let img = p.apply(&wave);
        let flat = match spec.dim {
            1 => snap_idx[0],
            _ => snap_idx[0] * spec.n + snap_idx[1],
        };
        let phase: f64 = xg.iter().zip(xi).map(|(a, b)| a * b).sum();
        out.push(Complex64::from_polar(1.0, -phase) * img.values[flat]);
    }
    Ok(out)
}

/// Discrete ‖⟨ξ⟩^{m_ψ}ℱ(⟨x⟩^{m_e}u)‖_{L²(d̄ξ)}; real bi-orders allowed.
pub fn sobolev_norm(u: &GridFunction, m_e: f64, m_psi: f64) -> f64 {
    let spec = u.spec;
    let jap = |v: &[f64]| (1.0 + v.iter().map(|a| a * a).sum::<f64>()).sqrt();
    let weighted: Vec<Complex64> = (0..u.values.len())
        .map(|i| u.values[i] * jap(&spec.point(i)).powf(m_e))
        .collect();
    let f = fft_all(&spec, &weighted, false);
    let dx = spec.dx().powi(spec.dim as i32);
    let dxi = spec.dxi().powi(spec.dim as i32);
    let two_pi = (2.0 * PI).powi(spec.dim as i32);
    let sum: f64 = (0..f.len())
        .map(|b| {
            let w = jap(&spec.freq(b)).powf(m_psi);
            (w * dx * f[b].norm()).powi(2)
        })
        .sum();
    (sum * dxi / two_pi).sqrt()
}

/// The Fourier transform as an operator on a self-dual 1-d grid.
pub fn fourier_op(spec: &GridSpec) -> GridOperator {
    assert_eq!(spec.dim, 1);
    let dx = spec.dx();
    assert!(
        (dx - spec.dxi()).abs() < 1e-10,
        "fourier_op needs a self-dual grid"
    );
    let spec = *spec;
    GridOperator::from_fn(spec, move |u| {
        let signed: Vec<Complex64> = u
            .iter()
            .enumerate()
            .map(|(m, v)| if m % 2 == 0 { *v } else { -v })
            .collect();
        let f = fft_all(&spec, &signed, false);
        f.iter()
            .enumerate()
            .map(|(j, v)| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s * dx * v
            })
            .collect()
    })
}

/// Inverse Fourier transform on a self-dual grid.
pub fn inverse_fourier_op(spec: &GridSpec) -> GridOperator {
    assert_eq!(spec.dim, 1);
    let dx = spec.dx();
    let spec = *spec;
    GridOperator::from_fn(spec, move |u| {
        let signed: Vec<Complex64> = u
            .iter()
            .enumerate()
            .map(|(m, v)| if m % 2 == 0 { *v } else { -v })
            .collect();
        let f = fft_all(&spec, &signed, true);
        f.iter()
            .enumerate()
            .map(|(j, v)| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s * dx / (2.0 * PI) * v
            })
            .collect()
    })
}

/// ℱ⁻¹ ∘ Op(a) ∘ ℱ together with the right-quantized amplitude
/// b(x, y, ξ) = a(ξ, −y) and the swapped bi-order.
pub struct FourierConjugation {
    pub amplitude: Amplitude,
    pub order: crate::symbols::BiOrder,
}

pub fn fourier_conjugate(a: &SymbolExpr) -> FourierConjugation {
    use crate::expr::{self, Node};
    let ast = expr::map_leaves(&a.ast, &|leaf| match leaf {
        Node::CoordX { index } => Some(expr::coord_xi(*index)),
        Node::JapX => Some(expr::jap_xi()),
        Node::AbsX => Some(expr::abs_xi()),
        Node::CoordXi { index } => Some(expr::neg(expr::coord_y(*index))),
        Node::JapXi => Some(expr::jap_y()),
        Node::AbsXi => Some(expr::abs_y()),
        _ => None,
    });
    FourierConjugation {
        amplitude: Amplitude {
            dim: a.dim,
            order: (0, a.order.m_e, a.order.m_psi),
            ast,
        },
        order: crate::symbols::BiOrder::new(a.order.m_psi, a.order.m_e),
    }
}

pub fn fourier_conjugated_op(a: &SymbolExpr, spec: &GridSpec) -> Result<GridOperator> {
    let op = quantize(a, spec)?;
    Ok(inverse_fourier_op(spec).compose(&op).compose(&fourier_op(spec)))
}

/// 12-element test battery (dim 1): Hermite functions, shifted Gaussians,
/// and modulated Gaussians, all unit-normalized on the grid.
pub fn test_battery(spec: &GridSpec) -> Vec<GridFunction> {
    assert_eq!(spec.dim, 1);
    let mut out = Vec::new();
    for k in 0..8u32 {
        let u = GridFunction::from_fn(*spec, |p| {
            let x = p[0];
            let (mut h0, mut h1) = (1.0f64, 2.0 * x);
            let h = match k {
                0 => h0,
                1 => h1,
                _ => {
                    let mut h2 = 0.0;
                    for j in 2..=k {
                        h2 = 2.0 * x * h1 - 2.0 * (j - 1) as f64 * h0;
                        h0 = h1;
                        h1 = h2;
                    }
                    h2
                }
            };
            Complex64::new(h * (-x * x / 2.0).exp(), 0.0)
        });
        out.push(u);
    }
    for shift in [2.0, -5.0] {
        out.push(GridFunction::from_fn(*spec, |p| {
            Complex64::new((-(p[0] - shift) * (p[0] - shift) / 2.0).exp(), 0.0)
        }));
    }
    for (k, shift) in [(3.0, 0.0), (-5.0, 1.0)] {
        out.push(GridFunction::from_fn(*spec, |p| {
            Complex64::from_polar((-(p[0] - shift) * (p[0] - shift) / 2.0).exp(), k * p[0])
        }));
    }
    for u in &mut out {
        let nrm = u.norm();
        for v in &mut u.values {
            *v /= nrm;
        }
    }
    out
}

/// Max inner-restricted residual ‖(A−B)u‖ over the battery (unit inputs).
pub fn battery_residual(a: &GridOperator, b: &GridOperator, battery: &[GridFunction]) -> f64 {
    battery
        .iter()
        .map(|u| a.apply(u).sub(&b.apply(u)).inner_restriction().norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{coord_x, coord_xi, jap_xi};
    use crate::symbols::BiOrder;

    fn gaussian(spec: &GridSpec) -> GridFunction {
        GridFunction::from_fn(*spec, |p| {
            Complex64::new((-p.iter().map(|a| a * a).sum::<f64>() / 2.0).exp(), 0.0)
        })
    }

    #[test]
    fn unit_symbol_is_identity() {
        let spec = GridSpec::default_1d();
        let one = SymbolExpr::constant(1, Complex64::ONE);
        let op = quantize(&one, &spec).unwrap();
        let u = gaussian(&spec);
        let err = op.apply(&u).sub(&u).norm();
        assert!(err < 1e-12, "identity error {err}");
    }

    #[test]
    fn xi_symbol_differentiates() {
        // Op(ξ_1) = −i d/dx; on the Gaussian: i x e^{−x²/2}
        let spec = GridSpec::default_1d();
        let a = SymbolExpr::new(1, BiOrder::new(0, 1), coord_xi(0));
        let op = quantize(&a, &spec).unwrap();
        let u = gaussian(&spec);
        let got = op.apply(&u);
        let want = GridFunction::from_fn(spec, |p| {
            Complex64::new(0.0, p[0] * (-p[0] * p[0] / 2.0).exp())
        });
        let err = got.sub(&want).inner_restriction().norm();
        assert!(err < 1e-8, "derivative error {err}");
    }

    #[test]
    fn x_symbol_is_diagonal() {
        let spec = GridSpec::new(1, 10.0, 128);
        let a = SymbolExpr::new(1, BiOrder::new(1, 0), coord_x(0));
        let op = quantize(&a, &spec).unwrap();
        let d = op.dense().unwrap();
        let ax = spec.axis_points();
        for (k, col) in d.iter().enumerate() {
            for (j, v) in col.iter().enumerate() {
                if j == k {
                    assert!((v.re - ax[j]).abs() < 1e-10 && v.im.abs() < 1e-12);
                } else {
                    assert!(v.norm() < 1e-10, "off-diagonal {j},{k}: {v}");
                }
            }
        }
    }

    #[test]
    fn coarse_grid_rejected_for_first_order() {
        let spec = GridSpec::new(1, 10.0, 64);
        let a = SymbolExpr::new(1, BiOrder::new(0, 1), jap_xi());
        assert!(matches!(quantize(&a, &spec), Err(SgError::GridTooCoarse(_))));
    }

    #[test]
    fn operator_linearity() {
        let spec = GridSpec::new(1, 10.0, 128);
        let a = SymbolExpr::weight(1, BiOrder::new(1, 1));
        let op = quantize(&a, &spec).unwrap();
        let u = gaussian(&spec);
        let v = GridFunction::from_fn(spec, |p| Complex64::new((-(p[0] - 1.0).powi(2)).exp(), 0.2));
        let c = Complex64::new(0.7, -1.3);
        let lin = GridFunction {
            spec,
            values: u.values.iter().zip(&v.values).map(|(a, b)| a * c + b).collect(),
        };
        let lhs = op.apply(&lin);
        let au = op.apply(&u);
        let av = op.apply(&v);
        let rhs = GridFunction {
            spec,
            values: au.values.iter().zip(&av.values).map(|(a, b)| a * c + b).collect(),
        };
        assert!(lhs.sub(&rhs).norm() < 1e-10 * rhs.norm().max(1.0));
    }

    #[test]
    fn composition_associativity() {
        let spec = GridSpec::new(1, 10.0, 128);
        let a = quantize(&SymbolExpr::weight(1, BiOrder::new(1, 0)), &spec).unwrap();
        let b = quantize(&SymbolExpr::new(1, BiOrder::new(0, 1), coord_xi(0)), &spec).unwrap();
        let c = quantize(&SymbolExpr::new(1, BiOrder::new(1, 0), coord_x(0)), &spec).unwrap();
        let u = gaussian(&spec);
        let lhs = a.compose(&b).compose(&c).apply(&u);
        let rhs = a.compose(&b.compose(&c)).apply(&u);
        assert!(lhs.sub(&rhs).norm() < 1e-12 * rhs.norm().max(1.0));
    }

    #[test]
    fn recover_identity_and_weight() {
        let spec = GridSpec::default_1d();
        let id = GridOperator::identity(spec);
        let samples = vec![(vec![1.25], vec![3.0]), (vec![-4.0], vec![-7.5])];
        let rec = recover_symbol(&id, &samples).unwrap();
        for v in rec {
            assert!((v - Complex64::ONE).norm() < 1e-10);
        }
        let a = SymbolExpr::new(1, BiOrder::new(0, 1), jap_xi());
        let op = quantize(&a, &spec).unwrap();
        let rec = recover_symbol(&op, &samples).unwrap();
        let ax = spec.axis_points();
        let snap_x = |c: f64| ax[((c + spec.box_l) / spec.dx()).round() as usize];
        let snap_xi = |c: f64| (c / spec.dxi()).round() * spec.dxi();
        for ((x, xi), v) in samples.iter().zip(rec) {
            let want = a.eval(&[snap_x(x[0])], &[snap_xi(xi[0])]);
            assert!((v - want).norm() < 1e-6, "recovered {v}, want {want}");
        }
    }

    #[test]
    fn recover_rejects_outer_samples() {
        let spec = GridSpec::default_1d();
        let id = GridOperator::identity(spec);
        assert!(matches!(
            recover_symbol(&id, &[(vec![15.0], vec![0.0])]),
            Err(SgError::SampleOutOfRange(..))
        ));
    }

    #[test]
    fn sobolev_gaussian_ratio() {
        let spec = GridSpec::default_1d();
        let u = gaussian(&spec);
        let n0 = sobolev_norm(&u, 0.0, 0.0);
        assert!((n0 - u.norm()).abs() < 1e-10 * u.norm());
        let n1 = sobolev_norm(&u, 0.0, 1.0);
        let want = (1.5f64).sqrt();
        assert!(
            (n1 / n0 - want).abs() < 1e-6,
            "ratio {} want {want}",
            n1 / n0
        );
        // homogeneity and componentwise monotonicity
        let doubled = GridFunction {
            spec,
            values: u.values.iter().map(|v| 2.0 * v).collect(),
        };
        assert!((sobolev_norm(&doubled, 1.0, 0.5) - 2.0 * sobolev_norm(&u, 1.0, 0.5)).abs() < 1e-12);
        assert!(sobolev_norm(&u, 1.0, 1.0) >= sobolev_norm(&u, 1.0, 0.0));
        assert!(sobolev_norm(&u, 1.0, 0.0) >= sobolev_norm(&u, 0.0, 0.0));
    }

    #[test]
    fn fourier_inverse_round_trip() {
        let spec = GridSpec::self_dual(512);
        let f = fourier_op(&spec);
        let finv = inverse_fourier_op(&spec);
        let u = gaussian(&spec);
        let rt = finv.apply(&f.apply(&u));
        assert!(rt.sub(&u).norm() < 1e-10);
        // ℱ of the unit Gaussian is √(2π)·Gaussian
        let hat = f.apply(&u);
        let want = GridFunction::from_fn(spec, |p| {
            Complex64::new((2.0 * PI).sqrt() * (-p[0] * p[0] / 2.0).exp(), 0.0)
        });
        assert!(hat.sub(&want).norm() < 1e-8);
    }

    #[test]
    fn fourier_conjugation_of_jap_xi_is_jap_x_multiplication() {
        let spec = GridSpec::self_dual(512);
        let a = SymbolExpr::new(1, BiOrder::new(0, 1), jap_xi());
        let conj = fourier_conjugated_op(&a, &spec).unwrap();
        let mult = quantize(&SymbolExpr::new(1, BiOrder::new(1, 0), crate::expr::jap_x()), &spec)
            .unwrap();
        let u = gaussian(&spec);
        let err = conj.apply(&u).sub(&mult.apply(&u)).inner_restriction().norm();
        assert!(err < 1e-8, "conjugation residual {err}");
        let c = fourier_conjugate(&a);
        assert_eq!(c.order, BiOrder::new(1, 0));
    }

    #[test]
    fn two_dim_identity_and_derivative() {
        let spec = GridSpec::new(2, 8.0, 32);
        let one = SymbolExpr::constant(2, Complex64::ONE);
        let op = quantize(&one, &spec).unwrap();
        let u = gaussian(&spec);
        assert!(op.apply(&u).sub(&u).norm() < 1e-11);
        let a = SymbolExpr::new(2, BiOrder::new(0, 1), coord_xi(1));
        let op = quantize(&a, &spec).unwrap();
        let want = GridFunction::from_fn(spec, |p| {
            Complex64::new(0.0, p[1] * (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp())
        });
        let err = op.apply(&u).sub(&want).inner_restriction().norm();
        assert!(err < 1e-7, "2-d derivative error {err}");
    }
}
