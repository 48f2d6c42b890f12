//! Symbol representation, exact differentiation, SG-estimate verification,
//! principal-symbol extraction, asymptotic sums and the Poisson bracket.

pub mod components;
pub mod estimate;
pub mod sums;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::expr::{
    self, add, coord_x, coord_xi, diff, int_pow, jap_x, jap_xi, mul, sub, Axis, EvalPoint, Expr,
    Var,
};

pub use components::{
    principal_limit, ClassicalSymbol, ComponentBody, Face, HomogeneousComponent, PrincipalTriple,
    Region,
};
pub use estimate::{check_sg_estimate, check_sampled_estimate, DyadicGrid, EstimateReport};
pub use sums::{
    associated_symbol, asymptotic_sum, bracket_principal_check, is_elliptic, BracketReport,
    Ellipticity,
};

/// Bi-order m = (m_e, m_ψ); partially ordered componentwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BiOrder {
    pub m_e: i32,
    pub m_psi: i32,
}

impl BiOrder {
    pub const ZERO: BiOrder = BiOrder { m_e: 0, m_psi: 0 };
    pub const ONE: BiOrder = BiOrder { m_e: 1, m_psi: 1 };

    pub fn new(m_e: i32, m_psi: i32) -> Self {
        BiOrder { m_e, m_psi }
    }

    pub fn leq(&self, other: &BiOrder) -> bool {
        self.m_e <= other.m_e && self.m_psi <= other.m_psi
    }
}

impl std::ops::Add for BiOrder {
    type Output = BiOrder;
    fn add(self, o: BiOrder) -> BiOrder {
        BiOrder::new(self.m_e + o.m_e, self.m_psi + o.m_psi)
    }
}

impl std::ops::Sub for BiOrder {
    type Output = BiOrder;
    fn sub(self, o: BiOrder) -> BiOrder {
        BiOrder::new(self.m_e - o.m_e, self.m_psi - o.m_psi)
    }
}

impl std::ops::Neg for BiOrder {
    type Output = BiOrder;
    fn neg(self) -> BiOrder {
        BiOrder::new(-self.m_e, -self.m_psi)
    }
}

impl Serialize for BiOrder {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.m_e, self.m_psi].serialize(s)
    }
}

impl<'de> Deserialize<'de> for BiOrder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [m_e, m_psi] = <[i32; 2]>::deserialize(d)?;
        Ok(BiOrder { m_e, m_psi })
    }
}

/// An expression tree over (x, ξ) with a declared bi-order and dimension.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymbolExpr {
    pub dim: usize,
    pub order: BiOrder,
    pub ast: Expr,
}

pub type MultiIndex = Vec<u32>;

pub fn multi_len(a: &MultiIndex) -> u32 {
    a.iter().sum()
}

/// All multi-indices of the given dimension with |α| ≤ max_total.
pub fn multi_indices(dim: usize, max_total: u32) -> Vec<MultiIndex> {
    let mut out = vec![vec![0u32; dim]];
    for _ in 0..max_total {
        let mut next = Vec::new();
        for a in &out {
            if multi_len(a) == max_total {
                continue;
            }
            for i in 0..dim {
                let mut b = a.clone();
                b[i] += 1;
                next.push(b);
            }
        }
        for b in next {
            if !out.contains(&b) {
                out.push(b);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

pub fn factorial_multi(a: &MultiIndex) -> f64 {
    a.iter()
        .map(|&k| (1..=k as u64).product::<u64>() as f64)
        .product()
}

impl SymbolExpr {
    pub fn new(dim: usize, order: BiOrder, ast: Expr) -> Self {
        SymbolExpr { dim, order, ast }
    }

    /// λ^m = ⟨x⟩^{m_e}⟨ξ⟩^{m_ψ}.
    pub fn weight(dim: usize, order: BiOrder) -> Self {
        let ast = mul(int_pow(jap_x(), order.m_e), int_pow(jap_xi(), order.m_psi));
        SymbolExpr { dim, order, ast }
    }

    pub fn constant(dim: usize, c: Complex64) -> Self {
        SymbolExpr::new(dim, BiOrder::ZERO, expr::cstc(c))
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        expr::eval(&self.ast, EvalPoint::symbol(x, xi))
    }

    /// Single partial derivative.
    pub fn diff_var(&self, v: Var) -> SymbolExpr {
        let order = match v {
            Var::X(_) => self.order - BiOrder::new(1, 0),
            Var::Xi(_) => self.order - BiOrder::new(0, 1),
            Var::Y(_) => self.order,
        };
        SymbolExpr::new(self.dim, order, diff(&self.ast, v))
    }

    pub fn conj(&self) -> SymbolExpr {
        SymbolExpr::new(self.dim, self.order, expr::conj(&self.ast))
    }

    pub fn node_count(&self) -> usize {
        expr::node_count(&self.ast)
    }
}

/// Exact mixed partial ∂^α_x ∂^β_ξ s. Declared order drops by (|α|, |β|).
pub fn differentiate(s: &SymbolExpr, alpha: &MultiIndex, beta: &MultiIndex) -> SymbolExpr {
    debug_assert!(alpha.len() == s.dim && beta.len() == s.dim);
    debug_assert!(multi_len(alpha) + multi_len(beta) <= 8, "derivative depth cap");
    let mut ast = s.ast.clone();
    for (i, &k) in alpha.iter().enumerate() {
        for _ in 0..k {
            ast = diff(&ast, Var::X(i));
        }
    }
    for (i, &k) in beta.iter().enumerate() {
        for _ in 0..k {
            ast = diff(&ast, Var::Xi(i));
        }
    }
    let order = s.order - BiOrder::new(multi_len(alpha) as i32, multi_len(beta) as i32);
    SymbolExpr::new(s.dim, order, ast)
}

/// {a,b} = Σ_i ∂a/∂ξ_i ∂b/∂x^i − ∂a/∂x^i ∂b/∂ξ_i; order m+k−𝟙.
pub fn poisson_bracket(a: &SymbolExpr, b: &SymbolExpr) -> SymbolExpr {
    assert_eq!(a.dim, b.dim);
    let mut terms = Vec::new();
    for i in 0..a.dim {
        terms.push(sub(
            mul(diff(&a.ast, Var::Xi(i)), diff(&b.ast, Var::X(i))),
            mul(diff(&a.ast, Var::X(i)), diff(&b.ast, Var::Xi(i))),
        ));
    }
    SymbolExpr::new(a.dim, a.order + b.order - BiOrder::ONE, expr::sum(terms))
}

/// Multiplication by λ^p; shifts the declared order by p.
pub fn weight_multiply(s: &SymbolExpr, p: BiOrder) -> SymbolExpr {
    let w = SymbolExpr::weight(s.dim, p);
    SymbolExpr::new(s.dim, s.order + p, mul(s.ast.clone(), w.ast))
}

/// Smooth excision data; realized as Excision grammar nodes on a chosen axis.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ExcisionFunction {
    pub r0: f64,
    pub r1: f64,
}

impl Default for ExcisionFunction {
    fn default() -> Self {
        ExcisionFunction { r0: 1.0, r1: 2.0 }
    }
}

impl ExcisionFunction {
    pub fn new(r0: f64, r1: f64) -> Self {
        assert!(r0 > 0.0 && r1 > r0);
        ExcisionFunction { r0, r1 }
    }

    pub fn expr(&self, axis: Axis) -> Expr {
        expr::excision(axis, self.r0, self.r1)
    }

    /// χ(v/c): excision scaled outward by c.
    pub fn scaled_expr(&self, axis: Axis, c: f64) -> Expr {
        expr::excision(axis, self.r0 * c, self.r1 * c)
    }
}

/// x·ξ as an expression.
pub fn x_dot_xi(dim: usize) -> Expr {
    expr::sum((0..dim).map(|i| mul(coord_x(i), coord_xi(i))))
}

/// Convenience: a + b c with folding.
pub fn fma(a: Expr, b: Expr, c: Expr) -> Expr {
    add(a, mul(b, c))
}

pub use expr::{cst, cstc};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{abs_xi, cst};

    #[test]
    fn multi_index_enumeration() {
        let m = multi_indices(2, 2);
        // |α| ≤ 2 over 2 vars: (0,0),(1,0),(0,1),(2,0),(1,1),(0,2)
        assert_eq!(m.len(), 6);
    }

    #[test]
    fn bracket_canonical_pair() {
        // {ξ_1, x^1} = 1
        let a = SymbolExpr::new(1, BiOrder::new(0, 1), coord_xi(0));
        let b = SymbolExpr::new(1, BiOrder::new(1, 0), coord_x(0));
        let br = poisson_bracket(&a, &b);
        assert!((br.eval(&[2.3], &[-1.1]) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn bracket_antisymmetry_self() {
        let a = SymbolExpr::new(1, BiOrder::ONE, mul(jap_x(), jap_xi()));
        let br = poisson_bracket(&a, &a);
        assert!(br.eval(&[1.7], &[0.4]).norm() < 1e-15);
    }

    #[test]
    fn bracket_closed_form_japanese_pair() {
        // {⟨x⟩, ⟨ξ⟩} = −(x·ξ)/(⟨x⟩⟨ξ⟩)
        let a = SymbolExpr::new(2, BiOrder::new(1, 0), jap_x());
        let b = SymbolExpr::new(2, BiOrder::new(0, 1), jap_xi());
        let br = poisson_bracket(&a, &b);
        let x = [1.5, -0.5];
        let xi = [2.0, 1.0];
        let jx = (1.0 + 1.5f64 * 1.5 + 0.25).sqrt();
        let jxi = (1.0f64 + 4.0 + 1.0).sqrt();
        let want = -(1.5 * 2.0 + -0.5 * 1.0) / (jx * jxi);
        assert!((br.eval(&x, &xi).re - want).abs() < 1e-14);
        assert_eq!(br.order, BiOrder::ZERO);
    }

    #[test]
    fn weight_multiply_round_trip() {
        let s = SymbolExpr::new(1, BiOrder::ZERO, add(cst(1.0), abs_xi()));
        let p = BiOrder::new(2, -1);
        let rt = weight_multiply(&weight_multiply(&s, p), -p);
        let x = [0.7];
        let xi = [3.0];
        assert!((rt.eval(&x, &xi) - s.eval(&x, &xi)).norm() < 1e-12);
        assert_eq!(rt.order, s.order);
    }

    #[test]
    fn differentiate_order_drop() {
        let s = SymbolExpr::weight(1, BiOrder::new(1, 1));
        let d = differentiate(&s, &vec![1], &vec![2]);
        assert_eq!(d.order, BiOrder::new(0, -1));
    }
}
