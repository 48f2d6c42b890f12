//! Radial-limit decomposition e = c + f of multiplication-operator symbols
//! whose gradient is rapidly decreasing: the radial limit l(z) = lim e(tz)
//! must be direction-independent; c is that constant and f = e − c must
//! decay like a Schwartz function.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgError};
use crate::expr::{self, Var};
use crate::sampling::{sphere_directions, Lcg};
use crate::symbols::components::scaling_limit;
use crate::symbols::SymbolExpr;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialSplit {
    pub c_re: f64,
    pub c_im: f64,
    /// Max pairwise difference of the radial limits over sampled directions.
    pub spread: f64,
    /// Measured decay exponent of f = e − c on dyadic radii (∞ when f
    /// underflows before the largest radius).
    pub decay_exponent: f64,
}

impl RadialSplit {
    pub fn c(&self) -> Complex64 {
        Complex64::new(self.c_re, self.c_im)
    }
}

/// Unit directions on S^{2n−1} in the doubled variable z = (x, ξ).
fn z_directions(dim: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    match dim {
        1 => sphere_directions(2, 16)
            .into_iter()
            .map(|v| (vec![v[0]], vec![v[1]]))
            .collect(),
        _ => {
            let mut rng = Lcg::new(0x5eed);
            let mut out = Vec::new();
            while out.len() < 32 {
                let v: Vec<f64> = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();
                let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                if n < 0.2 {
                    continue;
                }
                out.push((vec![v[0] / n, v[1] / n], vec![v[2] / n, v[3] / n]));
            }
            out
        }
    }
}

/// |∇e| must decay like ⟨z⟩^{−6}: the weighted gradient may not grow by
/// more than 10³ over dyadic radii relative to its size near the origin.
fn gradient_decay_ok(e: &SymbolExpr) -> bool {
    let mut grads = Vec::new();
    for i in 0..e.dim {
        grads.push(expr::diff(&e.ast, Var::X(i)));
        grads.push(expr::diff(&e.ast, Var::Xi(i)));
    }
    let dirs = z_directions(e.dim);
    let mut base = 0.0f64;
    let mut worst = 0.0f64;
    for k in 0..=8u32 {
        let r = (1u64 << k) as f64;
        let wz = (1.0 + r * r).powi(3); // ⟨z⟩⁶
        for (dx, dxi) in &dirs {
            let x: Vec<f64> = dx.iter().map(|c| c * r).collect();
            let xi: Vec<f64> = dxi.iter().map(|c| c * r).collect();
            let g: f64 = grads
                .iter()
                .map(|d| expr::eval(d, expr::EvalPoint::symbol(&x, &xi)).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let ratio = g * wz;
            worst = worst.max(ratio);
            if r <= 2.0 {
                base = base.max(ratio);
            }
        }
    }
    worst <= 1e-14 || (base > 1e-14 && worst <= 1e3 * base)
}

pub fn radial_limit_decomposition(e: &SymbolExpr, tol: f64) -> Result<RadialSplit> {
    if !gradient_decay_ok(e) {
        return Err(SgError::InvalidInput(
            "gradient fails the rapid-decay precheck (needs ⟨z⟩⁻⁶)".into(),
        ));
    }
    let dirs = z_directions(e.dim);
    let mut limits = Vec::with_capacity(dirs.len());
    for (dx, dxi) in &dirs {
        let l = scaling_limit(|t| {
            let x: Vec<f64> = dx.iter().map(|c| c * t).collect();
            let xi: Vec<f64> = dxi.iter().map(|c| c * t).collect();
            e.eval(&x, &xi)
        })
        .map_err(|err| SgError::NotRadiallyConvergent(match err {
            SgError::NonConvergent(_) => f64::INFINITY,
            _ => f64::NAN,
        }))?;
        limits.push(l);
    }
    let mut spread = 0.0f64;
    for a in &limits {
        for b in &limits {
            spread = spread.max((a - b).norm());
        }
    }
    if spread >= tol {
        return Err(SgError::NotRadiallyConvergent(spread));
    }
    let c = limits.iter().sum::<Complex64>() / limits.len() as f64;
    // decay exponent of f = e − c from the last resolvable dyadic doubling
    let mut exponent = f64::INFINITY;
    for (dx, dxi) in &dirs {
        let at = |r: f64| {
            let x: Vec<f64> = dx.iter().map(|v| v * r).collect();
            let xi: Vec<f64> = dxi.iter().map(|v| v * r).collect();
            (e.eval(&x, &xi) - c).norm()
        };
        let mut dir_exp = f64::INFINITY;
        for k in 0..6u32 {
            let r = (1u64 << k) as f64;
            let (g0, g1) = (at(r), at(2.0 * r));
            if g0 > 1e-250 && g1 > 1e-250 {
                dir_exp = -(g1.ln() - g0.ln()) / 2.0f64.ln();
            }
        }
        exponent = exponent.min(dir_exp);
    }
    Ok(RadialSplit {
        c_re: c.re,
        c_im: c.im,
        spread,
        decay_exponent: exponent,
    })
}
