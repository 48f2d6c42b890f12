//! The differentiable expression grammar carrying symbols, amplitudes, phase
//! components and homogeneous functions.
//!
//! The grammar is closed under formal partial differentiation in every
//! coordinate: the derivative of each node kind is again expressible below.
//! Excision nodes use an exp(-1/t) smooth step in the squared radius, so
//! their derivatives stay polynomial-in-coordinates times higher step
//! derivatives, with no singular factors.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::jet::smooth_step_deriv;

pub type Expr = Arc<Node>;

/// Variable axis for excision functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Xi,
    Joint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Node {
    Const {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    CoordX {
        index: usize,
    },
    CoordXi {
        index: usize,
    },
    /// Amplitude-only coordinate y^i.
    CoordY {
        index: usize,
    },
    /// ⟨x⟩ = sqrt(1+|x|²)
    JapX,
    /// ⟨ξ⟩
    JapXi,
    /// ⟨y⟩ (amplitudes)
    JapY,
    /// |x| (homogeneous components; singular at x=0)
    AbsX,
    /// |ξ|
    AbsXi,
    /// |y| (amplitudes)
    AbsY,
    Add {
        lhs: Expr,
        rhs: Expr,
    },
    Mul {
        lhs: Expr,
        rhs: Expr,
    },
    IntPow {
        base: Expr,
        exp: i32,
    },
    Exp {
        arg: Expr,
    },
    Inv {
        arg: Expr,
    },
    /// Smooth excision χ with χ=0 for |v|≤r0, χ=1 for |v|≥r1, where v runs
    /// over the axis variables. `deriv` counts derivatives of the underlying
    /// 1-d step in its rescaled argument; user-built symbols use deriv = 0.
    Excision {
        axis: Axis,
        r0: f64,
        r1: f64,
        #[serde(default)]
        deriv: u32,
    },
}

/// A differentiation direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X(usize),
    Xi(usize),
    Y(usize),
}

/// Evaluation point; `y` is only consulted by amplitude nodes.
#[derive(Clone, Copy, Debug)]
pub struct EvalPoint<'a> {
    pub x: &'a [f64],
    pub xi: &'a [f64],
    pub y: &'a [f64],
}

impl<'a> EvalPoint<'a> {
    pub fn symbol(x: &'a [f64], xi: &'a [f64]) -> Self {
        EvalPoint { x, xi, y: &[] }
    }
    pub fn amplitude(x: &'a [f64], y: &'a [f64], xi: &'a [f64]) -> Self {
        EvalPoint { x, xi, y }
    }
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

// ---- smart constructors with constant folding ----

pub fn cst(re: f64) -> Expr {
    Arc::new(Node::Const { re, im: 0.0 })
}

pub fn cstc(c: Complex64) -> Expr {
    Arc::new(Node::Const { re: c.re, im: c.im })
}

pub fn coord_x(index: usize) -> Expr {
    Arc::new(Node::CoordX { index })
}

pub fn coord_xi(index: usize) -> Expr {
    Arc::new(Node::CoordXi { index })
}

pub fn coord_y(index: usize) -> Expr {
    Arc::new(Node::CoordY { index })
}

pub fn jap_x() -> Expr {
    Arc::new(Node::JapX)
}

pub fn jap_xi() -> Expr {
    Arc::new(Node::JapXi)
}

pub fn jap_y() -> Expr {
    Arc::new(Node::JapY)
}

pub fn abs_x() -> Expr {
    Arc::new(Node::AbsX)
}

pub fn abs_xi() -> Expr {
    Arc::new(Node::AbsXi)
}

pub fn abs_y() -> Expr {
    Arc::new(Node::AbsY)
}

pub fn excision(axis: Axis, r0: f64, r1: f64) -> Expr {
    assert!(r0 > 0.0 && r1 > r0, "excision needs 0 < r0 < r1");
    Arc::new(Node::Excision {
        axis,
        r0,
        r1,
        deriv: 0,
    })
}

fn as_const(e: &Expr) -> Option<Complex64> {
    if let Node::Const { re, im } = **e {
        Some(Complex64::new(re, im))
    } else {
        None
    }
}

pub fn add(lhs: Expr, rhs: Expr) -> Expr {
    match (as_const(&lhs), as_const(&rhs)) {
        (Some(a), Some(b)) => cstc(a + b),
        (Some(a), None) if a == Complex64::ZERO => rhs,
        (None, Some(b)) if b == Complex64::ZERO => lhs,
        _ => Arc::new(Node::Add { lhs, rhs }),
    }
}

pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
    let mut it = terms.into_iter();
    let first = it.next().unwrap_or_else(|| cst(0.0));
    it.fold(first, add)
}

pub fn mul(lhs: Expr, rhs: Expr) -> Expr {
    match (as_const(&lhs), as_const(&rhs)) {
        (Some(a), Some(b)) => return cstc(a * b),
        (Some(a), _) if a == Complex64::ZERO => return cst(0.0),
        (_, Some(b)) if b == Complex64::ZERO => return cst(0.0),
        (Some(a), _) if a == Complex64::ONE => return rhs,
        (_, Some(b)) if b == Complex64::ONE => return lhs,
        _ => {}
    }
    // pull nested constant factors to the front
    if let Some(a) = as_const(&lhs) {
        if let Node::Mul { lhs: l2, rhs: r2 } = &*rhs {
            if let Some(b) = as_const(l2) {
                return mul(cstc(a * b), r2.clone());
            }
        }
    }
    Arc::new(Node::Mul { lhs, rhs })
}

pub fn neg(e: Expr) -> Expr {
    mul(cst(-1.0), e)
}

pub fn sub(lhs: Expr, rhs: Expr) -> Expr {
    add(lhs, neg(rhs))
}

pub fn product(terms: impl IntoIterator<Item = Expr>) -> Expr {
    let mut it = terms.into_iter();
    let first = it.next().unwrap_or_else(|| cst(1.0));
    it.fold(first, mul)
}

pub fn int_pow(base: Expr, exp: i32) -> Expr {
    match exp {
        0 => return cst(1.0),
        1 => return base,
        _ => {}
    }
    if let Some(c) = as_const(&base) {
        return cstc(c.powi(exp));
    }
    if let Node::IntPow { base: b, exp: e } = &*base {
        return int_pow(b.clone(), e * exp);
    }
    Arc::new(Node::IntPow { base, exp })
}

pub fn exp_of(arg: Expr) -> Expr {
    if let Some(c) = as_const(&arg) {
        return cstc(c.exp());
    }
    Arc::new(Node::Exp { arg })
}

pub fn inv(arg: Expr) -> Expr {
    if let Some(c) = as_const(&arg) {
        return cstc(c.inv());
    }
    match &*arg {
        Node::Inv { arg: inner } => inner.clone(),
        Node::IntPow { base, exp } => int_pow(base.clone(), -exp),
        _ => Arc::new(Node::Inv { arg }),
    }
}

// ---- evaluation ----

pub fn eval(e: &Expr, p: EvalPoint<'_>) -> Complex64 {
    match &**e {
        Node::Const { re, im } => Complex64::new(*re, *im),
        Node::CoordX { index } => Complex64::new(p.x[*index], 0.0),
        Node::CoordXi { index } => Complex64::new(p.xi[*index], 0.0),
        Node::CoordY { index } => Complex64::new(p.y[*index], 0.0),
        Node::JapX => Complex64::new((1.0 + sq_norm(p.x)).sqrt(), 0.0),
        Node::JapXi => Complex64::new((1.0 + sq_norm(p.xi)).sqrt(), 0.0),
        Node::JapY => Complex64::new((1.0 + sq_norm(p.y)).sqrt(), 0.0),
        Node::AbsX => Complex64::new(sq_norm(p.x).sqrt(), 0.0),
        Node::AbsXi => Complex64::new(sq_norm(p.xi).sqrt(), 0.0),
        Node::AbsY => Complex64::new(sq_norm(p.y).sqrt(), 0.0),
        Node::Add { lhs, rhs } => eval(lhs, p) + eval(rhs, p),
        Node::Mul { lhs, rhs } => {
            // An exact zero factor annihilates the product without evaluating
            // the cofactor: excision products χ·a must stay finite where the
            // excised factor a is singular (e.g. ∂|x| at the origin).
            let l = eval(lhs, p);
            if l == Complex64::ZERO {
                return Complex64::ZERO;
            }
            l * eval(rhs, p)
        }
        Node::IntPow { base, exp } => eval(base, p).powi(*exp),
        Node::Exp { arg } => eval(arg, p).exp(),
        Node::Inv { arg } => eval(arg, p).inv(),
        Node::Excision {
            axis,
            r0,
            r1,
            deriv,
        } => {
            let q = match axis {
                Axis::X => sq_norm(p.x),
                Axis::Xi => sq_norm(p.xi),
                Axis::Joint => sq_norm(p.x) + sq_norm(p.xi),
            };
            let t = (q - r0 * r0) / (r1 * r1 - r0 * r0);
            Complex64::new(smooth_step_deriv(t, *deriv as usize), 0.0)
        }
    }
}

// ---- differentiation ----

pub fn diff(e: &Expr, v: Var) -> Expr {
    match &**e {
        Node::Const { .. } => cst(0.0),
        Node::CoordX { index } => match v {
            Var::X(i) if i == *index => cst(1.0),
            _ => cst(0.0),
        },
        Node::CoordXi { index } => match v {
            Var::Xi(i) if i == *index => cst(1.0),
            _ => cst(0.0),
        },
        Node::CoordY { index } => match v {
            Var::Y(i) if i == *index => cst(1.0),
            _ => cst(0.0),
        },
        Node::JapX => match v {
            Var::X(i) => mul(coord_x(i), inv(jap_x())),
            _ => cst(0.0),
        },
        Node::JapXi => match v {
            Var::Xi(i) => mul(coord_xi(i), inv(jap_xi())),
            _ => cst(0.0),
        },
        Node::JapY => match v {
            Var::Y(i) => mul(coord_y(i), inv(jap_y())),
            _ => cst(0.0),
        },
        Node::AbsX => match v {
            Var::X(i) => mul(coord_x(i), inv(abs_x())),
            _ => cst(0.0),
        },
        Node::AbsXi => match v {
            Var::Xi(i) => mul(coord_xi(i), inv(abs_xi())),
            _ => cst(0.0),
        },
        Node::AbsY => match v {
            Var::Y(i) => mul(coord_y(i), inv(abs_y())),
            _ => cst(0.0),
        },
        Node::Add { lhs, rhs } => add(diff(lhs, v), diff(rhs, v)),
        Node::Mul { lhs, rhs } => add(
            mul(diff(lhs, v), rhs.clone()),
            mul(lhs.clone(), diff(rhs, v)),
        ),
        Node::IntPow { base, exp } => mul(
            mul(cst(*exp as f64), int_pow(base.clone(), exp - 1)),
            diff(base, v),
        ),
        Node::Exp { arg } => mul(diff(arg, v), e.clone()),
        Node::Inv { arg } => neg(mul(diff(arg, v), int_pow(arg.clone(), -2))),
        Node::Excision {
            axis,
            r0,
            r1,
            deriv,
        } => {
            let coord = match (axis, v) {
                (Axis::X, Var::X(i)) => Some(coord_x(i)),
                (Axis::Xi, Var::Xi(i)) => Some(coord_xi(i)),
                (Axis::Joint, Var::X(i)) => Some(coord_x(i)),
                (Axis::Joint, Var::Xi(i)) => Some(coord_xi(i)),
                _ => None,
            };
            match coord {
                None => cst(0.0),
                Some(c) => {
                    let next = Arc::new(Node::Excision {
                        axis: *axis,
                        r0: *r0,
                        r1: *r1,
                        deriv: deriv + 1,
                    });
                    mul(mul(cst(2.0 / (r1 * r1 - r0 * r0)), c), next)
                }
            }
        }
    }
}

/// Structural complex conjugation: all leaves except constants are
/// real-valued operations, so conjugation just maps the constants.
pub fn conj(e: &Expr) -> Expr {
    match &**e {
        Node::Const { re, im } => Arc::new(Node::Const { re: *re, im: -*im }),
        Node::Add { lhs, rhs } => add(conj(lhs), conj(rhs)),
        Node::Mul { lhs, rhs } => mul(conj(lhs), conj(rhs)),
        Node::IntPow { base, exp } => int_pow(conj(base), *exp),
        Node::Exp { arg } => exp_of(conj(arg)),
        Node::Inv { arg } => inv(conj(arg)),
        _ => e.clone(),
    }
}

/// Rewrite leaves bottom-up. The closure receives each leaf node (anything
/// without subexpressions) and may replace it.
pub fn map_leaves(e: &Expr, f: &dyn Fn(&Node) -> Option<Expr>) -> Expr {
    match &**e {
        Node::Add { lhs, rhs } => add(map_leaves(lhs, f), map_leaves(rhs, f)),
        Node::Mul { lhs, rhs } => mul(map_leaves(lhs, f), map_leaves(rhs, f)),
        Node::IntPow { base, exp } => int_pow(map_leaves(base, f), *exp),
        Node::Exp { arg } => exp_of(map_leaves(arg, f)),
        Node::Inv { arg } => inv(map_leaves(arg, f)),
        leaf => f(leaf).unwrap_or_else(|| e.clone()),
    }
}

pub fn node_count(e: &Expr) -> usize {
    match &**e {
        Node::Add { lhs, rhs } | Node::Mul { lhs, rhs } => 1 + node_count(lhs) + node_count(rhs),
        Node::IntPow { base: a, .. } | Node::Exp { arg: a } | Node::Inv { arg: a } => {
            1 + node_count(a)
        }
        _ => 1,
    }
}
