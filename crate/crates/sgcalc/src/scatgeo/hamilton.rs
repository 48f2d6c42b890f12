//! Reconstruction of a Hamiltonian from its Hamilton vector field on one
//! face, via the Euler identities c_ψ = (1/(1−l)) ξ_j γ^j and
//! c_e = (1/(l−1)) x^j ρ_j for the (1−l)-homogeneous Hamiltonian.
//!
//! Conventions: γ^j = ∂c/∂ξ_j and ρ_j = −∂c/∂x^j, so the field is
//! X_c = (γ, ρ) in (ẋ, ξ̇) form.

use crate::error::{Result, SgError};
use crate::expr::{self, coord_x, coord_xi, cst, mul, sum, Expr, Var};
use crate::sampling::Lcg;
use crate::symbols::{BiOrder, Face, SymbolExpr};

fn field_samples(dim: usize, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = Lcg::new(0xc0de);
    let coord = |rng: &mut Lcg| {
        let v = rng.uniform(0.6, 2.5);
        if rng.uniform(0.0, 1.0) < 0.5 {
            -v
        } else {
            v
        }
    };
    (0..count)
        .map(|_| {
            (
                (0..dim).map(|_| coord(&mut rng)).collect(),
                (0..dim).map(|_| coord(&mut rng)).collect(),
            )
        })
        .collect()
}

fn ev(e: &Expr, x: &[f64], xi: &[f64]) -> f64 {
    expr::eval(e, expr::EvalPoint::symbol(x, xi)).re
}

/// Scaling degree of c in the other variable at a probe point, rounded when
/// it is clearly integral; used only to label the returned bi-order.
fn probe_degree(c: &Expr, x: &[f64], xi: &[f64], scale_x: bool) -> i32 {
    let scaled = |v: &[f64], t: f64| -> Vec<f64> { v.iter().map(|a| a * t).collect() };
    let (v2, v4) = if scale_x {
        (ev(c, &scaled(x, 2.0), xi), ev(c, &scaled(x, 4.0), xi))
    } else {
        (ev(c, x, &scaled(xi, 2.0)), ev(c, x, &scaled(xi, 4.0)))
    };
    if v2.abs() < 1e-12 || v4.abs() < 1e-12 {
        return 0;
    }
    let d = (v4 / v2).abs().log2();
    if (d - d.round()).abs() < 1e-6 {
        d.round() as i32
    } else {
        0
    }
}

/// Rebuild c from its Hamilton field on one face. The field must be closed
/// (genuinely a gradient pair) and c (1−l)-homogeneous in the face variable.
pub fn hamiltonian_from_field(
    dim: usize,
    gamma: &[Expr],
    rho: &[Expr],
    l: i32,
    face: Face,
) -> Result<SymbolExpr> {
    if gamma.len() != dim || rho.len() != dim || l <= 1 {
        return Err(SgError::InvalidInput(
            "need n field components per slot and l > 1".into(),
        ));
    }
    let samples = field_samples(dim, 40);
    // closedness: d(γ dξ) = 0, d(ρ dx) = 0, and the mixed symplectic relation
    let mut closed = 0.0f64;
    for (x, xi) in &samples {
        for i in 0..dim {
            for j in 0..dim {
                let gij = ev(&expr::diff(&gamma[i], Var::Xi(j)), x, xi);
                let gji = ev(&expr::diff(&gamma[j], Var::Xi(i)), x, xi);
                closed = closed.max((gij - gji).abs());
                let rij = ev(&expr::diff(&rho[i], Var::X(j)), x, xi);
                let rji = ev(&expr::diff(&rho[j], Var::X(i)), x, xi);
                closed = closed.max((rij - rji).abs());
                let mixed = ev(&expr::diff(&gamma[i], Var::X(j)), x, xi)
                    + ev(&expr::diff(&rho[j], Var::Xi(i)), x, xi);
                closed = closed.max(mixed.abs());
            }
        }
    }
    if closed > 1e-8 {
        return Err(SgError::NotClosed(closed));
    }
    let scale = 1.0 / (l - 1) as f64;
    let ast = match face {
        Face::Psi => mul(
            cst(-scale),
            sum((0..dim).map(|j| mul(coord_xi(j), gamma[j].clone()))),
        ),
        Face::E => mul(
            cst(scale),
            sum((0..dim).map(|j| mul(coord_x(j), rho[j].clone()))),
        ),
        Face::PsiE => {
            return Err(SgError::InvalidInput(
                "reconstruction works on the open faces only".into(),
            ))
        }
    };
    // round trip: the Hamilton field of c must reproduce the input
    let mut worst = 0.0f64;
    for (x, xi) in &samples {
        for k in 0..dim {
            let dg = ev(&expr::diff(&ast, Var::Xi(k)), x, xi) - ev(&gamma[k], x, xi);
            let dr = -ev(&expr::diff(&ast, Var::X(k)), x, xi) - ev(&rho[k], x, xi);
            worst = worst.max(dg.abs()).max(dr.abs());
        }
    }
    if worst > 1e-8 {
        return Err(SgError::GradientMismatch(worst));
    }
    let (px, pxi) = (&samples[0].0, &samples[0].1);
    let order = match face {
        Face::Psi => BiOrder::new(probe_degree(&ast, px, pxi, true), 1 - l),
        _ => BiOrder::new(1 - l, probe_degree(&ast, px, pxi, false)),
    };
    Ok(SymbolExpr::new(dim, order, ast))
}
