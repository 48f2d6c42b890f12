//! Asymptotic sums with excision gluing, the associated symbol of a
//! principal triple, principal-symbol consistency of Poisson brackets, and
//! ellipticity margins.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SgError};
use crate::expr::{self, add, excision, mul, sub, Axis, Expr};
use crate::sampling::{dyadic_radii, sphere_directions};

use super::components::{face_limit, ClassicalSymbol, Face, PrincipalTriple};
use super::{poisson_bracket, BiOrder, ExcisionFunction, SymbolExpr};

fn sup_ratio(s: &SymbolExpr, m: BiOrder, pts: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    let w = |x: &[f64], xi: &[f64]| {
        let jx = (1.0 + x.iter().map(|a| a * a).sum::<f64>()).sqrt();
        let jxi = (1.0 + xi.iter().map(|a| a * a).sum::<f64>()).sqrt();
        jx.powi(m.m_e) * jxi.powi(m.m_psi)
    };
    pts.iter()
        .map(|(x, xi)| s.eval(x, xi).norm() / w(x, xi))
        .fold(0.0, f64::max)
}

fn grid_pairs(dim: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut radial = vec![vec![0.0; dim]];
    for r in dyadic_radii(8) {
        for w in sphere_directions(dim, 8) {
            radial.push(w.iter().map(|c| c * r).collect());
        }
    }
    let mut pairs = Vec::new();
    for x in &radial {
        for xi in &radial {
            pairs.push((x.clone(), xi.clone()));
        }
    }
    pairs
}

/// Glue terms a_j of bi-order m − j·𝟙 into one symbol of bi-order m:
/// Σ_j χ(·/c_j)·a_j with joint excisions pushed out until the j-th glued
/// term is 2^{-j}-small at one order above its own. Returns the glued symbol
/// and the chosen cutoff scales (c_0 = 0 marks the unexcised leading term).
pub fn asymptotic_sum(terms: &[SymbolExpr]) -> Result<(SymbolExpr, Vec<f64>)> {
    let first = terms
        .first()
        .ok_or_else(|| SgError::InvalidInput("empty term list".into()))?;
    let m = first.order;
    let dim = first.dim;
    for (j, t) in terms.iter().enumerate() {
        let want = m - BiOrder::new(j as i32, j as i32);
        if !t.order.leq(&want) {
            return Err(SgError::DegreeOrderViolation);
        }
    }
    let pts = grid_pairs(dim);
    let lead = sup_ratio(first, m, &pts).max(1e-12);
    let mut cutoffs = vec![0.0f64];
    let mut glued = first.ast.clone();
    let mut c_prev = 1.0f64;
    for (j, t) in terms.iter().enumerate().skip(1) {
        let target = lead * 0.5f64.powi(j as i32);
        // the glued term must be small measured one bi-order above its own
        let gauge = m - BiOrder::new(j as i32 - 1, j as i32 - 1);
        let mut c = c_prev * 2.0;
        let mut chosen = None;
        while c <= (1u64 << 40) as f64 {
            let cut = SymbolExpr::new(
                dim,
                t.order,
                mul(excision(Axis::Joint, c, 2.0 * c), t.ast.clone()),
            );
            if sup_ratio(&cut, gauge, &pts) <= target {
                chosen = Some((c, cut.ast));
                break;
            }
            c *= 2.0;
        }
        let (c, ast) = chosen.ok_or_else(|| {
            SgError::NonConvergent(format!("no cutoff tames term {j} of the asymptotic sum"))
        })?;
        glued = add(glued, ast);
        cutoffs.push(c);
        c_prev = c;
    }
    Ok((SymbolExpr::new(dim, m, glued), cutoffs))
}

/// The associated symbol p̌ = χ(ξ)p_ψ + χ(x)p_e − χ(x)χ(ξ)p_ψe of a
/// closed-form principal triple.
pub fn associated_symbol(
    dim: usize,
    m: BiOrder,
    triple: &PrincipalTriple,
    exc: &ExcisionFunction,
) -> Result<SymbolExpr> {
    let p_e = triple.a_e.closed_expr()?.clone();
    let p_psi = triple.a_psi.closed_expr()?.clone();
    let p_psie = triple.a_psie.closed_expr()?.clone();
    let chi_x = exc.expr(Axis::X);
    let chi_xi = exc.expr(Axis::Xi);
    let ast = sub(
        add(mul(chi_xi.clone(), p_psi), mul(chi_x.clone(), p_e)),
        mul(mul(chi_x, chi_xi), p_psie),
    );
    Ok(SymbolExpr::new(dim, m, ast))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BracketReport {
    pub order: BiOrder,
    pub residual_e: f64,
    pub residual_psi: f64,
    pub residual_corner: f64,
}

impl BracketReport {
    pub fn max_residual(&self) -> f64 {
        self.residual_e.max(self.residual_psi).max(self.residual_corner)
    }
}

fn face_bracket_expr(a: &PrincipalTriple, b: &PrincipalTriple, face: Face, dim: usize) -> Result<Expr> {
    let pick = |t: &PrincipalTriple| -> Result<Expr> {
        let c = match face {
            Face::E => &t.a_e,
            Face::Psi => &t.a_psi,
            Face::PsiE => &t.a_psie,
        };
        Ok(c.closed_expr()?.clone())
    };
    let fa = pick(a)?;
    let fb = pick(b)?;
    let mut terms = Vec::new();
    for i in 0..dim {
        terms.push(sub(
            mul(expr::diff(&fa, expr::Var::Xi(i)), expr::diff(&fb, expr::Var::X(i))),
            mul(expr::diff(&fa, expr::Var::X(i)), expr::diff(&fb, expr::Var::Xi(i))),
        ));
    }
    Ok(expr::sum(terms))
}

/// Check σ_face({a,b}) = {σ_face(a), σ_face(b)} on sample bi-rays, for all
/// three faces, using the stored closed-form triples of a and b.
pub fn bracket_principal_check(
    a: &ClassicalSymbol,
    b: &ClassicalSymbol,
) -> Result<BracketReport> {
    let dim = a.dim();
    let ta = a
        .stored_triple()
        .ok_or_else(|| SgError::ClosedFormRequired("left factor lacks a stored triple".into()))?;
    let tb = b
        .stored_triple()
        .ok_or_else(|| SgError::ClosedFormRequired("right factor lacks a stored triple".into()))?;
    let br = poisson_bracket(&a.base, &b.base);
    let dirs = sphere_directions(dim, 6);
    let mut residuals = [0.0f64; 3];
    for (fi, face) in [Face::E, Face::Psi, Face::PsiE].into_iter().enumerate() {
        let closed = face_bracket_expr(ta, tb, face, dim)?;
        for wx in &dirs {
            for wxi in &dirs {
                let x: Vec<f64> = wx.iter().map(|c| c * 1.5).collect();
                let xi: Vec<f64> = wxi.iter().map(|c| c * 1.5).collect();
                let lim =
                    face_limit(face, br.order, &|x: &[f64], xi: &[f64]| br.eval(x, xi), &x, &xi)?;
                let want = expr::eval(&closed, expr::EvalPoint::symbol(&x, &xi));
                residuals[fi] = residuals[fi].max((lim - want).norm());
            }
        }
    }
    Ok(BracketReport {
        order: br.order,
        residual_e: residuals[0],
        residual_psi: residuals[1],
        residual_corner: residuals[2],
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ellipticity {
    pub margin_e: f64,
    pub margin_psi: f64,
    pub margin_corner: f64,
    pub elliptic: bool,
}

impl Ellipticity {
    pub fn margin(&self) -> f64 {
        self.margin_e.min(self.margin_psi).min(self.margin_corner)
    }
}

/// Infima of the weighted principal components over their faces. Elliptic
/// iff all three stay above 1e-6.
pub fn is_elliptic(s: &ClassicalSymbol) -> Result<Ellipticity> {
    let dim = s.dim();
    let m = s.order();
    let t = s.principal_triple();
    let dirs = sphere_directions(dim, 8);
    let mut radial = vec![vec![0.0; dim]];
    for r in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        for w in &dirs {
            radial.push(w.iter().map(|c| c * r).collect());
        }
    }
    let jap = |v: &[f64]| (1.0 + v.iter().map(|a| a * a).sum::<f64>()).sqrt();
    let mut margin_e = f64::INFINITY;
    let mut margin_psi = f64::INFINITY;
    let mut margin_corner = f64::INFINITY;
    for w in &dirs {
        for v in &radial {
            let ve = t.a_e.eval(w, v)?.norm() / jap(v).powi(m.m_psi);
            margin_e = margin_e.min(ve);
            let vp = t.a_psi.eval(v, w)?.norm() / jap(v).powi(m.m_e);
            margin_psi = margin_psi.min(vp);
        }
        for w2 in &dirs {
            margin_corner = margin_corner.min(t.a_psie.eval(w, w2)?.norm());
        }
    }
    let ell = Ellipticity {
        margin_e,
        margin_psi,
        margin_corner,
        elliptic: margin_e.min(margin_psi).min(margin_corner) > 1e-6,
    };
    Ok(ell)
}
