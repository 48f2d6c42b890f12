//! Truncated symbolic calculus: Leibniz product, formal adjoint, elliptic
//! parametrix, order reductions, and left-symbol reduction of amplitudes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgError};
use crate::expr::{self, cstc, mul, sub, Expr, Var};
use crate::sampling::{dyadic_radii, sphere_directions};
use crate::symbols::{
    associated_symbol, factorial_multi, is_elliptic, multi_indices, multi_len, BiOrder,
    ClassicalSymbol, ExcisionFunction, MultiIndex, PrincipalTriple, SymbolExpr,
};

pub const MAX_TRUNCATION: u32 = 6;

fn check_truncation(k: u32) -> Result<()> {
    if k > MAX_TRUNCATION {
        return Err(SgError::InvalidInput(format!(
            "truncation {k} exceeds maximum {MAX_TRUNCATION}"
        )));
    }
    Ok(())
}

fn deriv_multi(ast: &Expr, idx: &MultiIndex, mk: fn(usize) -> Var) -> Expr {
    let mut out = ast.clone();
    for (i, &k) in idx.iter().enumerate() {
        for _ in 0..k {
            out = expr::diff(&out, mk(i));
        }
    }
    out
}

/// (−i)^{|α|}/α!
fn term_coeff(alpha: &MultiIndex) -> Complex64 {
    Complex64::new(0.0, -1.0).powu(multi_len(alpha)) / factorial_multi(alpha)
}

/// Leibniz product c ∼ Σ_α ((−i)^{|α|}/α!) ∂^α_ξ a · ∂^α_x b, truncated at
/// |α| ≤ K. The principal triple multiplies componentwise.
pub fn leibniz_product(a: &ClassicalSymbol, b: &ClassicalSymbol, k: u32) -> Result<ClassicalSymbol> {
    check_truncation(k)?;
    assert_eq!(a.dim(), b.dim());
    let dim = a.dim();
    let mut terms = Vec::new();
    for alpha in multi_indices(dim, k) {
        let da = deriv_multi(&a.base.ast, &alpha, Var::Xi);
        let db = deriv_multi(&b.base.ast, &alpha, Var::X);
        terms.push(mul(cstc(term_coeff(&alpha)), mul(da, db)));
    }
    let base = SymbolExpr::new(dim, a.order() + b.order(), expr::sum(terms));
    let ta = a.principal_triple();
    let tb = b.principal_triple();
    let triple = PrincipalTriple {
        a_e: ta.a_e.multiply(&tb.a_e),
        a_psi: ta.a_psi.multiply(&tb.a_psi),
        a_psie: ta.a_psie.multiply(&tb.a_psie),
    };
    Ok(ClassicalSymbol::new(base).with_triple(triple))
}

/// Formal adjoint a† ∼ Σ_α ((−i)^{|α|}/α!) ∂^α_x∂^α_ξ ā, truncated at K.
pub fn formal_adjoint(a: &ClassicalSymbol, k: u32) -> Result<ClassicalSymbol> {
    check_truncation(k)?;
    let dim = a.dim();
    let bar = expr::conj(&a.base.ast);
    let mut terms = Vec::new();
    for alpha in multi_indices(dim, k) {
        let d = deriv_multi(&deriv_multi(&bar, &alpha, Var::X), &alpha, Var::Xi);
        terms.push(mul(cstc(term_coeff(&alpha)), d));
    }
    let base = SymbolExpr::new(dim, a.order(), expr::sum(terms));
    let out = ClassicalSymbol::new(base);
    Ok(match a.stored_triple() {
        Some(t) => out.with_triple(PrincipalTriple {
            a_e: t.a_e.conj(),
            a_psi: t.a_psi.conj(),
            a_psie: t.a_psie.conj(),
        }),
        None => out,
    })
}

/// λ^m as a classical symbol with its binomial asymptotic matrix.
pub fn order_reduction(dim: usize, m: BiOrder, n_trunc: u32) -> ClassicalSymbol {
    ClassicalSymbol::weight(dim, m, n_trunc)
}

/// Smallest weighted modulus of the base symbol over a dyadic sample set;
/// decides whether the plain reciprocal is a usable parametrix seed.
fn reciprocal_margin(a: &ClassicalSymbol) -> f64 {
    let dim = a.dim();
    let m = a.order();
    let mut pts = vec![vec![0.0; dim]];
    for r in dyadic_radii(6) {
        for w in sphere_directions(dim, 8) {
            pts.push(w.iter().map(|c| c * r).collect());
        }
    }
    let jap = |v: &[f64]| (1.0 + v.iter().map(|c| c * c).sum::<f64>()).sqrt();
    let mut margin = f64::INFINITY;
    for x in &pts {
        for xi in &pts {
            let w = jap(x).powi(m.m_e) * jap(xi).powi(m.m_psi);
            margin = margin.min(a.base.eval(x, xi).norm() / w);
        }
    }
    margin
}

/// Parametrix by Neumann refinement: seed q₀ (plain reciprocal when the
/// base symbol is bounded away from zero, otherwise the excision-glued
/// triple inverse), then q_{j+1} = q_j − q₀·(a#q_j − 1), j = 1..K.
pub fn parametrix(a: &ClassicalSymbol, k: u32) -> Result<ClassicalSymbol> {
    check_truncation(k)?;
    let ell = is_elliptic(a)?;
    if !ell.elliptic {
        return Err(SgError::NotElliptic(ell.margin()));
    }
    let dim = a.dim();
    let m = a.order();
    let inv_triple = |t: &PrincipalTriple| -> Result<PrincipalTriple> {
        Ok(PrincipalTriple {
            a_e: t.a_e.invert()?,
            a_psi: t.a_psi.invert()?,
            a_psie: t.a_psie.invert()?,
        })
    };
    let q0 = if reciprocal_margin(a) >= 0.1 {
        SymbolExpr::new(dim, -m, expr::inv(a.base.ast.clone()))
    } else {
        let t = a
            .stored_triple()
            .ok_or_else(|| SgError::ClosedFormRequired("parametrix glue needs a stored triple".into()))?;
        associated_symbol(dim, -m, &inv_triple(t)?, &ExcisionFunction::default())?
    };
    let q0 = ClassicalSymbol::new(q0);
    let mut q = q0.clone();
    for _ in 0..k {
        let c = leibniz_product(a, &q, k)?;
        let r = sub(c.base.ast, expr::cst(1.0));
        let correction = mul(q0.base.ast.clone(), r);
        let ast = sub(q.base.ast.clone(), correction);
        q = ClassicalSymbol::new(SymbolExpr::new(dim, -m, ast));
    }
    Ok(match a.stored_triple() {
        Some(t) => {
            let ti = inv_triple(t)?;
            q.with_triple(ti)
        }
        None => q,
    })
}

/// Amplitude a(x, y, ξ) with the triple order (m_x, m_y, m_ψ).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Amplitude {
    pub dim: usize,
    pub order: (i32, i32, i32),
    pub ast: Expr,
}

impl Amplitude {
    pub fn eval(&self, x: &[f64], y: &[f64], xi: &[f64]) -> Complex64 {
        expr::eval(&self.ast, expr::EvalPoint::amplitude(x, y, xi))
    }
}

/// Substitute y := x in an amplitude expression.
pub fn substitute_y_with_x(ast: &Expr) -> Expr {
    use crate::expr::Node;
    expr::map_leaves(ast, &|leaf| match leaf {
        Node::CoordY { index } => Some(expr::coord_x(*index)),
        Node::JapY => Some(expr::jap_x()),
        Node::AbsY => Some(expr::abs_x()),
        _ => None,
    })
}

/// Left-symbol reduction b ∼ Σ_α ((−i)^{|α|}/α!) ∂^α_ξ∂^α_y a |_{y=x},
/// truncated at K; result order (m_x + m_y, m_ψ).
pub fn amplitude_reduce(amp: &Amplitude, k: u32) -> Result<ClassicalSymbol> {
    check_truncation(k)?;
    let mut terms = Vec::new();
    for alpha in multi_indices(amp.dim, k) {
        let d = deriv_multi(&deriv_multi(&amp.ast, &alpha, Var::Xi), &alpha, Var::Y);
        terms.push(mul(cstc(term_coeff(&alpha)), substitute_y_with_x(&d)));
    }
    let order = BiOrder::new(amp.order.0 + amp.order.1, amp.order.2);
    Ok(ClassicalSymbol::new(SymbolExpr::new(
        amp.dim,
        order,
        expr::sum(terms),
    )))
}
