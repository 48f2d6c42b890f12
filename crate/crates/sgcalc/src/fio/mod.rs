//! Fourier integral operators of type 𝒬: split phases φ(x,y,θ) =
//! f(x,θ) + g(y,θ) with SG-order 𝟙 components, their validation, grid
//! realization as oscillatory sums, formal adjoints, type I/II composition,
//! parametrices, and the Egorov / order-preservation harnesses.
//!
//! Conventions: `f` lives in (x,θ) with `CoordX` for x and `CoordXi` for θ;
//! `g` lives in (y,θ) with `CoordX` standing for y (so both components are
//! plain `SymbolExpr`s and share the estimate checker). Amplitudes follow
//! the psdo convention: `CoordX` = x, `CoordY` = y, `CoordXi` = θ.

pub mod conjugation;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgError};
use crate::expr::{self, add, coord_x, coord_xi, cst, mul, neg, sum, Expr, Node, Var};
use crate::psdo::{
    amplitude_reduce, battery_residual, parametrix, test_battery, Amplitude,
    GridFunction, GridOperator, GridSpec,
};
use crate::sampling::{par_map, sphere_directions};
use crate::symbols::{check_sg_estimate, BiOrder, DyadicGrid, SymbolExpr};

pub use conjugation::{
    default_probe_battery, egorov_check, order_preservation_probe, EgorovReport, FioFamily,
    ProbeEntry, ProbeReport,
};

/// Declared phase class: plain type 𝒬 or the generalized class 𝒬_gen with
/// extra phase variables beyond the regular ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QClass {
    Q,
    QGen,
}

/// Split phase φ = f(x,θ) + g(y,θ).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhasePair {
    pub dim: usize,
    pub theta_dim: usize,
    /// f(x,θ); `CoordX` = x, `CoordXi` = θ.
    pub f: SymbolExpr,
    /// g(y,θ); `CoordX` = y (first-slot convention), `CoordXi` = θ.
    pub g: SymbolExpr,
    /// Indices of the n regular variables ξ within θ.
    pub regular_split: Vec<usize>,
    pub class: QClass,
}

fn one() -> BiOrder {
    BiOrder::new(1, 1)
}

fn x_dot_theta(dim: usize) -> Expr {
    sum((0..dim).map(|i| mul(coord_x(i), coord_xi(i))))
}

impl PhasePair {
    fn from_parts(dim: usize, f_ast: Expr, g_ast: Expr) -> Self {
        PhasePair {
            dim,
            theta_dim: dim,
            f: SymbolExpr::new(dim, one(), f_ast),
            g: SymbolExpr::new(dim, one(), g_ast),
            regular_split: (0..dim).collect(),
            class: QClass::Q,
        }
    }

    /// The standard ΨDO phase f = x·θ, g = −y·θ.
    pub fn standard(dim: usize) -> Self {
        PhasePair::from_parts(dim, x_dot_theta(dim), neg(x_dot_theta(dim)))
    }

    /// Type I translation phase f = (x−a)·θ, g = −y·θ (1-d).
    pub fn translation_i(shift: f64) -> Self {
        let f = mul(add(coord_x(0), cst(-shift)), coord_xi(0));
        PhasePair::from_parts(1, f, neg(x_dot_theta(1)))
    }

    /// Type II translation phase f = x·θ, g = −(y+b)·θ (1-d).
    pub fn translation_ii(shift: f64) -> Self {
        let g = neg(mul(add(coord_x(0), cst(shift)), coord_xi(0)));
        PhasePair::from_parts(1, x_dot_theta(1), g)
    }

    /// Linear phase f = (lx)·θ, g = −y·θ (1-d; u ↦ u(lx) with amplitude 1).
    pub fn linear_phase(l: f64) -> Self {
        assert!(l != 0.0);
        let f = mul(cst(l), x_dot_theta(1));
        PhasePair::from_parts(1, f, neg(x_dot_theta(1)))
    }

    /// Modulation phase f = x·θ + kx, g = −y·θ (1-d; u ↦ e^{ikx}u).
    pub fn modulation(k: f64) -> Self {
        let f = add(x_dot_theta(1), mul(cst(k), coord_x(0)));
        PhasePair::from_parts(1, f, neg(x_dot_theta(1)))
    }

    /// Bridge from an SCT-generated phase pair (ψ-face representative); the
    /// generating module packs the dual variables as θ already.
    pub fn from_phase_functions(
        dim: usize,
        pf: &crate::scatgeo::PhaseFunctions,
    ) -> Self {
        PhasePair {
            dim,
            theta_dim: pf.theta_dim,
            f: SymbolExpr::new(dim, one(), pf.f_psi.clone()),
            g: SymbolExpr::new(dim, one(), pf.g_psi.clone()),
            regular_split: (0..dim.min(pf.theta_dim)).collect(),
            class: if pf.theta_dim == dim { QClass::Q } else { QClass::QGen },
        }
    }

    /// φ† = −g(x,θ) − f(y,θ): the components swap slots and flip sign.
    pub fn adjoint(&self) -> PhasePair {
        PhasePair {
            dim: self.dim,
            theta_dim: self.theta_dim,
            f: SymbolExpr::new(self.dim, one(), neg(self.g.ast.clone())),
            g: SymbolExpr::new(self.dim, one(), neg(self.f.ast.clone())),
            regular_split: self.regular_split.clone(),
            class: self.class,
        }
    }
}

/// Phase pair together with an amplitude a(x,y,θ) and the grid carrying the
/// discretized operator.
#[derive(Clone, Debug)]
pub struct FIOHandle {
    pub phase: PhasePair,
    pub amplitude: Amplitude,
    pub grid: GridSpec,
    /// Grid-level amplitude table in the (x,θ) slots (x-major, n×n), used in
    /// place of the symbolic amplitude when present. Produced by the Neumann
    /// polish in [`fio_parametrix`]; the symbolic amplitude is kept alongside
    /// as the order-correct leading term.
    pub refinement: Option<std::sync::Arc<Vec<Complex64>>>,
}

impl FIOHandle {
    pub fn new(phase: PhasePair, amplitude: Amplitude, grid: GridSpec) -> Self {
        FIOHandle { phase, amplitude, grid, refinement: None }
    }

    pub fn with_unit_amplitude(phase: PhasePair, grid: GridSpec) -> Self {
        let dim = phase.dim;
        FIOHandle {
            phase,
            amplitude: Amplitude { dim, order: (0, 0, 0), ast: cst(1.0) },
            grid,
            refinement: None,
        }
    }
}

/// Which coordinate leaves an amplitude AST actually references.
fn leaf_usage(e: &Expr) -> (bool, bool) {
    match &**e {
        Node::CoordX { .. } | Node::JapX | Node::AbsX => (true, false),
        Node::CoordY { .. } | Node::JapY | Node::AbsY => (false, true),
        Node::Add { lhs, rhs } | Node::Mul { lhs, rhs } => {
            let a = leaf_usage(lhs);
            let b = leaf_usage(rhs);
            (a.0 || b.0, a.1 || b.1)
        }
        Node::IntPow { base: a, .. } | Node::Exp { arg: a } | Node::Inv { arg: a } => leaf_usage(a),
        Node::Excision { axis, .. } => match axis {
            expr::Axis::Xi => (false, false),
            _ => (true, false),
        },
        _ => (false, false),
    }
}

/// Validation report for the 𝒬-phase conditions: SG estimates at order 𝟙,
/// the four two-sided ∼ bounds, and the mixed-determinant lower bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QPhaseReport {
    pub estimate_f: bool,
    pub estimate_g: bool,
    /// (min, max) over samples of ⟨∇_x f⟩/⟨θ⟩.
    pub grad_x_ratio: (f64, f64),
    /// (min, max) of ⟨∇_y g⟩/⟨θ⟩.
    pub grad_y_ratio: (f64, f64),
    /// (min, max) of ⟨∇_θ f⟩/⟨x⟩.
    pub grad_theta_f_ratio: (f64, f64),
    /// (min, max) of ⟨∇_θ g⟩/⟨y⟩.
    pub grad_theta_g_ratio: (f64, f64),
    /// min |det ∂_x∂_θ f| over the regular block.
    pub det_min: f64,
    pub cap: f64,
    pub det_floor: f64,
    pub pass: bool,
}

fn jap(v: &[f64]) -> f64 {
    (1.0 + v.iter().map(|a| a * a).sum::<f64>()).sqrt()
}

/// Origin-free dyadic sample pairs for the ratio conditions; the estimate
/// condition keeps the full grid (phases are smooth after excision there).
fn ratio_samples(dim: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for k in -1..=8i32 {
        let r = 2.0f64.powi(k);
        for w in sphere_directions(dim, 8) {
            out.push(w.iter().map(|c| c * r).collect());
        }
    }
    out
}

fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for c in 0..n {
        let (p, _) = (c..n)
            .map(|r| (r, m[r][c].abs()))
            .fold((c, -1.0), |acc, it| if it.1 > acc.1 { it } else { acc });
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    d
}

/// Check conditions 1–5 of the type-𝒬 definition on dyadic samples: SG
/// estimates at order 𝟙 for both components, the two-sided gradient
/// equivalences with cap 10³, and |det ∂_x∂_θ f| bounded below.
pub fn validate_q_phase(p: &PhasePair) -> QPhaseReport {
    let cap = 1e3;
    let det_floor = 0.1;
    let dim = p.dim;
    let td = p.theta_dim;
    let grid = DyadicGrid::default();
    let estimate_f = check_sg_estimate(&p.f, 2, &grid).pass;
    let estimate_g = check_sg_estimate(&p.g, 2, &grid).pass;

    let grad = |c: &Expr, v: &[f64], t: &[f64], n: usize, in_x: bool| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let d = expr::diff(c, if in_x { Var::X(i) } else { Var::Xi(i) });
                expr::eval(&d, expr::EvalPoint::symbol(v, t)).re
            })
            .collect()
    };

    let mut gx = (f64::INFINITY, 0.0f64);
    let mut gy = (f64::INFINITY, 0.0f64);
    let mut tf = (f64::INFINITY, 0.0f64);
    let mut tg = (f64::INFINITY, 0.0f64);
    let mut det_min = f64::INFINITY;
    let upd = |acc: &mut (f64, f64), r: f64| {
        acc.0 = acc.0.min(r);
        acc.1 = acc.1.max(r);
    };
    for v in ratio_samples(dim) {
        for t in ratio_samples(td) {
            upd(&mut gx, jap(&grad(&p.f.ast, &v, &t, dim, true)) / jap(&t));
            upd(&mut gy, jap(&grad(&p.g.ast, &v, &t, dim, true)) / jap(&t));
            upd(&mut tf, jap(&grad(&p.f.ast, &v, &t, td, false)) / jap(&v));
            upd(&mut tg, jap(&grad(&p.g.ast, &v, &t, td, false)) / jap(&v));
            let m: Vec<Vec<f64>> = (0..dim)
                .map(|i| {
                    let di = expr::diff(&p.f.ast, Var::X(i));
                    p.regular_split
                        .iter()
                        .map(|&j| {
                            let dij = expr::diff(&di, Var::Xi(j));
                            expr::eval(&dij, expr::EvalPoint::symbol(&v, &t)).re
                        })
                        .collect()
                })
                .collect();
            det_min = det_min.min(det(m).abs());
        }
    }
    let two_sided = |r: &(f64, f64)| r.0 >= 1.0 / cap && r.1 <= cap;
    let pass = estimate_f
        && estimate_g
        && two_sided(&gx)
        && two_sided(&gy)
        && two_sided(&tf)
        && two_sided(&tg)
        && det_min >= det_floor;
    QPhaseReport {
        estimate_f,
        estimate_g,
        grad_x_ratio: gx,
        grad_y_ratio: gy,
        grad_theta_f_ratio: tf,
        grad_theta_g_ratio: tg,
        det_min,
        cap,
        det_floor,
        pass,
    }
}

impl FIOHandle {
    /// Discretize as the oscillatory sum
    /// (Au)(x_j) = N⁻¹ Σ_k Σ_m e^{i(f(x_j,θ_k)+g(y_m,θ_k))} a(x_j,y_m,θ_k) u_m
    /// over the dual grid θ_k; the boundary phases of f and g cancel so the
    /// standard phase reproduces left quantization exactly.
    pub fn as_operator(&self) -> Result<GridOperator> {
        let spec = self.grid;
        if spec.dim != 1 || self.phase.dim != 1 || self.phase.theta_dim != 1 {
            return Err(SgError::InvalidInput(
                "grid FIO application is 1-d only".into(),
            ));
        }
        crate::sampling::init_threads();
        let n = spec.n;
        let ax = spec.axis_points();
        let fr = spec.axis_freqs();
        // Nyquist guard on the transport part: ∂_x f sampled at reference
        // frequencies |θ| ≤ 1 (the θ-linear part is grid-exact; the guard
        // rejects sub-grid modulations).
        let df = expr::diff(&self.phase.f.ast, Var::X(0));
        let limit = 0.9 * PI / spec.dx();
        for &x in &ax {
            for t in [-1.0, 0.0, 1.0] {
                let v = expr::eval(&df, expr::EvalPoint::symbol(&[x], &[t])).re;
                if v.abs() >= limit {
                    return Err(SgError::GridTooCoarse(format!(
                        "|∂_x f| = {:.3} at x = {x:.3} exceeds the Nyquist guard {limit:.3}",
                        v.abs()
                    )));
                }
            }
        }
        let f_ast = self.phase.f.ast.clone();
        let g_ast = self.phase.g.ast.clone();
        let e_f: Vec<Complex64> = {
            let f_ast = f_ast.clone();
            let (ax, fr) = (ax.clone(), fr.clone());
            par_map(n * n, move |i| {
                let ph = expr::eval(&f_ast, expr::EvalPoint::symbol(&[ax[i / n]], &[fr[i % n]]));
                Complex64::from_polar(1.0, ph.re)
            })
        };
        // e_g is indexed θ-major: e_g[k*n + m] = e^{ig(y_m, θ_k)}.
        let e_g: Vec<Complex64> = {
            let g_ast = g_ast.clone();
            let (ax, fr) = (ax.clone(), fr.clone());
            par_map(n * n, move |i| {
                let ph = expr::eval(&g_ast, expr::EvalPoint::symbol(&[ax[i % n]], &[fr[i / n]]));
                Complex64::from_polar(1.0, ph.re)
            })
        };
        let (uses_x, uses_y) = leaf_usage(&self.amplitude.ast);
        let amp = self.amplitude.clone();
        let scale = 1.0 / n as f64;
        if !uses_y || self.refinement.is_some() {
            // a(x,θ): precompute the x,θ table; O(N²) per application.
            let table: Vec<Complex64> = match &self.refinement {
                Some(t) => {
                    if t.len() != n * n {
                        return Err(SgError::InvalidInput(
                            "refinement table does not match the grid".into(),
                        ));
                    }
                    t.as_ref().clone()
                }
                None => {
                    let amp = amp.clone();
                    let (ax, fr) = (ax.clone(), fr.clone());
                    par_map(n * n, move |i| amp.eval(&[ax[i / n]], &[ax[i / n]], &[fr[i % n]]))
                }
            };
            Ok(GridOperator::from_fn(spec, move |u| {
                let v: Vec<Complex64> = (0..n)
                    .map(|k| (0..n).map(|m| e_g[k * n + m] * u[m]).sum())
                    .collect();
                par_map(n, |j| {
                    let mut acc = Complex64::ZERO;
                    for k in 0..n {
                        acc += e_f[j * n + k] * table[j * n + k] * v[k];
                    }
                    acc * scale
                })
            }))
        } else if !uses_x {
            // a(y,θ): fold the amplitude into the y-side table.
            let table: Vec<Complex64> = {
                let amp = amp.clone();
                let (ax, fr) = (ax.clone(), fr.clone());
                par_map(n * n, move |i| {
                    e_g[i] * amp.eval(&[0.0], &[ax[i % n]], &[fr[i / n]])
                })
            };
            Ok(GridOperator::from_fn(spec, move |u| {
                let v: Vec<Complex64> = (0..n)
                    .map(|k| (0..n).map(|m| table[k * n + m] * u[m]).sum())
                    .collect();
                par_map(n, |j| {
                    let mut acc = Complex64::ZERO;
                    for k in 0..n {
                        acc += e_f[j * n + k] * v[k];
                    }
                    acc * scale
                })
            }))
        } else {
            // Full a(x,y,θ): O(N³) with on-the-fly evaluation; oracle use on
            // modest grids only.
            Ok(GridOperator::from_fn(spec, move |u| {
                par_map(n, |j| {
                    let mut acc = Complex64::ZERO;
                    for k in 0..n {
                        let mut inner = Complex64::ZERO;
                        for m in 0..n {
                            inner +=
                                e_g[k * n + m] * amp.eval(&[ax[j]], &[ax[m]], &[fr[k]]) * u[m];
                        }
                        acc += e_f[j * n + k] * inner;
                    }
                    acc * scale
                })
            }))
        }
    }
}

/// Apply the discretized FIO to a grid function.
pub fn apply_fio(a: &FIOHandle, u: &GridFunction) -> Result<GridFunction> {
    Ok(a.as_operator()?.apply(u))
}

fn swap_xy(ast: &Expr) -> Expr {
    expr::map_leaves(ast, &|leaf| match leaf {
        Node::CoordX { index } => Some(expr::coord_y(*index)),
        Node::JapX => Some(expr::jap_y()),
        Node::AbsX => Some(expr::abs_y()),
        Node::CoordY { index } => Some(expr::coord_x(*index)),
        Node::JapY => Some(expr::jap_x()),
        Node::AbsY => Some(expr::abs_x()),
        _ => None,
    })
}

/// Formal adjoint: phase φ† = (−g(x,θ), −f(y,θ)), amplitude
/// a†(x,y,θ) = conj a(y,x,θ); the discrete actions satisfy
/// ⟨Au, v⟩ = ⟨u, A†v⟩ exactly.
pub fn fio_adjoint(a: &FIOHandle) -> FIOHandle {
    let (m1, m2, m3) = a.amplitude.order;
    FIOHandle {
        phase: a.phase.adjoint(),
        amplitude: Amplitude {
            dim: a.amplitude.dim,
            order: (m2, m1, m3),
            ast: expr::conj(&swap_xy(&a.amplitude.ast)),
        },
        grid: a.grid,
        refinement: None,
    }
}

/// Result of composing a type I and a type II operator.
#[derive(Clone, Debug)]
pub struct FioComposition {
    pub handle: FIOHandle,
    /// sup |g_A(y,θ) + y·θ| ∨ sup |f_B(x,θ) − x·θ| over check samples.
    pub cancellation_residual: f64,
    /// Battery residual between the composed FIO and sequential application.
    pub coherence: f64,
}

const CANCEL_TOL: f64 = 1e-8;

/// AB for A of type I (g_A = −yθ) and B of type II (f_B = xθ): the phases
/// cancel in the middle variable, the composition has phase (f_A, g_B) and,
/// to leading order, the product amplitude a_A(x,θ)b_B(y,θ).
pub fn compose_type_i_ii(a: &FIOHandle, b: &FIOHandle) -> Result<FioComposition> {
    if a.phase.theta_dim != b.phase.theta_dim || a.phase.dim != b.phase.dim {
        return Err(SgError::InvalidInput("phase dimensions differ".into()));
    }
    if a.grid.dim != 1 {
        return Err(SgError::InvalidInput("composition oracle is 1-d only".into()));
    }
    let dim = a.phase.dim;
    let mut residual = 0.0f64;
    for v in ratio_samples(dim) {
        for t in ratio_samples(dim) {
            let p = expr::EvalPoint::symbol(&v, &t);
            let dot: f64 = v.iter().zip(&t).map(|(a, b)| a * b).sum();
            residual = residual.max((expr::eval(&a.phase.g.ast, p).re + dot).abs());
            residual = residual.max((expr::eval(&b.phase.f.ast, p).re - dot).abs());
        }
    }
    if residual > CANCEL_TOL {
        return Err(SgError::PhaseMismatch(residual));
    }
    let (_, a_uses_y) = leaf_usage(&a.amplitude.ast);
    let (b_uses_x, b_uses_y) = leaf_usage(&b.amplitude.ast);
    if a_uses_y || (b_uses_x && b_uses_y) {
        return Err(SgError::InvalidInput(
            "type I amplitude must be a(x,θ) and type II b(y,θ)".into(),
        ));
    }
    // accept b's amplitude in either slot notation; normalize to y
    let b_amp_y = if b_uses_x {
        swap_xy(&b.amplitude.ast)
    } else {
        b.amplitude.ast.clone()
    };
    let composed = FIOHandle {
        phase: PhasePair {
            dim,
            theta_dim: a.phase.theta_dim,
            f: a.phase.f.clone(),
            g: b.phase.g.clone(),
            regular_split: a.phase.regular_split.clone(),
            class: a.phase.class,
        },
        amplitude: Amplitude {
            dim,
            order: (
                a.amplitude.order.0,
                b.amplitude.order.0.max(b.amplitude.order.1),
                a.amplitude.order.2 + b.amplitude.order.2,
            ),
            ast: mul(a.amplitude.ast.clone(), b_amp_y),
        },
        grid: a.grid,
        refinement: None,
    };
    let op_ab = composed.as_operator()?;
    let sequential = a.as_operator()?.compose(&b.as_operator()?);
    let coherence = battery_residual(&op_ab, &sequential, &test_battery(&a.grid));
    Ok(FioComposition { handle: composed, cancellation_residual: residual, coherence })
}

/// Parametrix A♯ with residual report.
#[derive(Clone, Debug)]
pub struct FioParametrix {
    pub sharp: FIOHandle,
    /// Battery residual of AA♯ − I.
    pub residual: f64,
}

/// True when g(y,θ) = −y·θ to within the cancellation tolerance, i.e. the
/// y-side of the phase collapses to a δ on dual-grid waves.
fn collapses_type_ii(p: &PhasePair) -> bool {
    let mut residual = 0.0f64;
    for v in ratio_samples(p.dim) {
        for t in ratio_samples(p.theta_dim) {
            let dot: f64 = v.iter().zip(&t).map(|(a, b)| a * b).sum();
            let ep = expr::EvalPoint::symbol(&v, &t);
            residual = residual.max((expr::eval(&p.g.ast, ep).re + dot).abs());
        }
    }
    residual <= CANCEL_TOL
}

/// A♯ = FIO((−g,−f), q) where q is the ΨDO parametrix of the reduced left
/// symbol of the amplitude; exact inverse for unit-amplitude translations.
///
/// The truncated Leibniz corrections only improve the residual where
/// ⟨x⟩⟨ξ⟩ is large; near the origin the expansion parameter is O(1) and the
/// symbolic series plateaus. For K ≥ 1 the amplitude is therefore polished by
/// K grid-level Neumann steps Q ← Q − Q₀(AQ − I), carried on the phase-adapted
/// amplitude table (the y-side phase collapses on dual-grid waves, so the
/// table of any grid operator is e^{−if(x_j,ξ_b)}·(M e^{i·ξ_b})(x_j)); each
/// step contracts the battery residual by ‖AQ₀ − I‖.
pub fn fio_parametrix(a: &FIOHandle, k: u32) -> Result<FioParametrix> {
    let reduced = amplitude_reduce(&a.amplitude, k)?;
    let q = parametrix(&reduced, k)?;
    let mut sharp = FIOHandle {
        phase: a.phase.adjoint(),
        amplitude: Amplitude {
            dim: a.amplitude.dim,
            order: (q.order().m_e, 0, q.order().m_psi),
            ast: q.base.ast.clone(),
        },
        grid: a.grid,
        refinement: None,
    };
    let op_a = a.as_operator()?;
    if k >= 1 && a.grid.dim == 1 && collapses_type_ii(&sharp.phase) {
        let spec = a.grid;
        let n = spec.n;
        let ax = spec.axis_points();
        let fr = spec.axis_freqs();
        let op_q0 = sharp.as_operator()?;
        let mut table: Vec<Complex64> = (0..n * n)
            .map(|i| sharp.amplitude.eval(&[ax[i / n]], &[ax[i / n]], &[fr[i % n]]))
            .collect();
        let e_mf: Vec<Complex64> = (0..n * n)
            .map(|i| {
                let ph = expr::eval(
                    &sharp.phase.f.ast,
                    expr::EvalPoint::symbol(&[ax[i / n]], &[fr[i % n]]),
                );
                Complex64::from_polar(1.0, -ph.re)
            })
            .collect();
        for _ in 0..k {
            let mut stage = sharp.clone();
            stage.refinement = Some(std::sync::Arc::new(table.clone()));
            let op_q = stage.as_operator()?;
            for b in 0..n {
                let xi = fr[b];
                let wave = GridFunction::from_fn(spec, |p| Complex64::from_polar(1.0, p[0] * xi));
                let r = op_a.apply(&op_q.apply(&wave)).sub(&wave);
                let w = op_q0.apply(&r);
                for j in 0..n {
                    table[j * n + b] -= e_mf[j * n + b] * w.values[j];
                }
            }
        }
        sharp.refinement = Some(std::sync::Arc::new(table));
    }
    let op = op_a.compose(&sharp.as_operator()?);
    let residual = battery_residual(
        &op,
        &GridOperator::identity(a.grid),
        &test_battery(&a.grid),
    );
    Ok(FioParametrix { sharp, residual })
}

/// Cross-oracle for the adjoint: recover the symbol of the reduced adjoint
/// amplitude through the grid and compare with `formal_adjoint`.
pub fn adjoint_reduced_symbol(a: &FIOHandle, k: u32) -> Result<crate::symbols::ClassicalSymbol> {
    amplitude_reduce(&fio_adjoint(a).amplitude, k)
}
