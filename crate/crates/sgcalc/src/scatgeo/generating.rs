//! Generating functions S_e, S_ψ for scattering canonical transformations and
//! the SG-phase pair they induce.
//!
//! Variable convention for implicit graph data on Λ (coordinates (x^J, ξ_I, η)):
//! x^J lives in the CoordX slots (indices in J), ξ_I in the CoordXi slots
//! (indices in I), and η in the CoordY slots. The implicit functions are
//!   x^i = X^i(x^J, ξ_I, η),  ξ_j = Ξ_j(x^J, ξ_I, η),  y^k = Y^k(x^J, ξ_I, η),
//! one set per face. Then S_e = x^j Ξ^e_j and S_ψ = −X^i_ψ ξ_i + Y^k_ψ η_k,
//! and the gradient relations ∂S_e = (Ξ^e, X_e, Y_e), ∂S_ψ = (Ξ^ψ, −X_ψ, Y_ψ)
//! characterize canonicity.

use num_complex::Complex64;

use crate::error::{Result, SgError};
use crate::expr::{
    self, abs_y, add, coord_x, coord_xi, coord_y, cst, inv, mul, neg, sum, Expr, Node, Var,
};
use crate::sampling::Lcg;
use crate::symbols::components::scaling_limit;

/// Implicit graph functions of one face, in the (x^J, ξ_I, η) convention.
#[derive(Clone, Debug)]
pub struct FaceGraph {
    /// X^i for i ∈ I (same order as the partition's i_set).
    pub x_impl: Vec<Expr>,
    /// Ξ_j for j ∈ J.
    pub xi_impl: Vec<Expr>,
    /// Y^k for k = 1..n.
    pub y_impl: Vec<Expr>,
}

/// One candidate partition with its per-face implicit data.
#[derive(Clone, Debug)]
pub struct PartitionCandidate {
    pub i_set: Vec<usize>,
    pub e: FaceGraph,
    pub psi: FaceGraph,
    pub psie: FaceGraph,
}

/// Graph data of an SCT: candidate partitions tried in the given order.
#[derive(Clone, Debug)]
pub struct GraphData {
    pub dim: usize,
    pub candidates: Vec<PartitionCandidate>,
}

fn identity_face(dim: usize) -> FaceGraph {
    FaceGraph {
        x_impl: Vec::new(),
        xi_impl: (0..dim).map(coord_y).collect(),
        y_impl: (0..dim).map(coord_x).collect(),
    }
}

impl GraphData {
    fn single(dim: usize, e: FaceGraph, psi: FaceGraph, psie: FaceGraph) -> Self {
        GraphData {
            dim,
            candidates: vec![PartitionCandidate {
                i_set: Vec::new(),
                e,
                psi,
                psie,
            }],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let f = identity_face(dim);
        GraphData::single(dim, f.clone(), f.clone(), f)
    }

    /// C(x,ξ) = (Lx, L^{−T}ξ): Ξ_j = (L^Tη)_j, Y = Lx on every face.
    pub fn linear(l: &[Vec<f64>]) -> Self {
        let dim = l.len();
        let f = FaceGraph {
            x_impl: Vec::new(),
            xi_impl: (0..dim)
                .map(|j| sum((0..dim).map(|k| mul(cst(l[k][j]), coord_y(k)))))
                .collect(),
            y_impl: (0..dim)
                .map(|k| sum((0..dim).map(|j| mul(cst(l[k][j]), coord_x(j)))))
                .collect(),
        };
        GraphData::single(dim, f.clone(), f.clone(), f)
    }

    /// Dilation u ↦ u(2·): C(x,ξ) = (x/2, 2ξ).
    pub fn dilation(dim: usize) -> Self {
        let l: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 0.5 } else { 0.0 }).collect())
            .collect();
        GraphData::linear(&l)
    }

    /// e-shear C(x,ξ) = (x, ξ − ∇h(x)) with h(x) = (x·Sx)/|x|, S symmetric:
    /// nontrivial on the e-face only (∇h has x-order 0 and no ξ-dependence).
    pub fn e_shear(s: &[Vec<f64>]) -> Self {
        let dim = s.len();
        let q = sum((0..dim).flat_map(|i| {
            (0..dim).map(move |j| mul(cst(s[i][j]), mul(coord_x(i), coord_x(j))))
        }));
        let h = mul(q, inv(expr::abs_x()));
        let e = FaceGraph {
            x_impl: Vec::new(),
            xi_impl: (0..dim)
                .map(|j| add(coord_y(j), expr::diff(&h, Var::X(j))))
                .collect(),
            y_impl: (0..dim).map(coord_x).collect(),
        };
        GraphData::single(dim, e, identity_face(dim), identity_face(dim))
    }

    /// ψ-shear C(x,ξ) = (x + ∇h(ξ), ξ) with h(η) = (η·Sη)/|η|:
    /// nontrivial on the ψ-face only.
    pub fn psi_shear(s: &[Vec<f64>]) -> Self {
        let dim = s.len();
        let q = sum((0..dim).flat_map(|i| {
            (0..dim).map(move |j| mul(cst(s[i][j]), mul(coord_y(i), coord_y(j))))
        }));
        let h = mul(q, inv(abs_y()));
        let psi = FaceGraph {
            x_impl: Vec::new(),
            xi_impl: (0..dim).map(coord_y).collect(),
            y_impl: (0..dim)
                .map(|k| add(coord_x(k), expr::diff(&h, Var::Y(k))))
                .collect(),
        };
        GraphData::single(dim, identity_face(dim), psi, identity_face(dim))
    }
}

/// Chosen partition plus generating functions for all three faces.
#[derive(Clone, Debug)]
pub struct GeneratingData {
    pub dim: usize,
    pub i_set: Vec<usize>,
    pub j_set: Vec<usize>,
    pub e: FaceGraph,
    pub psi: FaceGraph,
    pub psie: FaceGraph,
    pub s_e: Expr,
    pub s_psi: Expr,
    pub s_psie: Expr,
    /// Max over the nine gradient relations and all samples.
    pub relation_residual: f64,
}

struct Sample {
    x: Vec<f64>,
    xi: Vec<f64>,
    eta: Vec<f64>,
}

impl Sample {
    fn point(&self) -> expr::EvalPoint<'_> {
        expr::EvalPoint {
            x: &self.x,
            xi: &self.xi,
            y: &self.eta,
        }
    }
}

fn graph_samples(dim: usize, count: usize, seed: u64) -> Vec<Sample> {
    let mut rng = Lcg::new(seed);
    let coord = |rng: &mut Lcg| {
        let v = rng.uniform(0.7, 2.0);
        if rng.uniform(0.0, 1.0) < 0.5 {
            -v
        } else {
            v
        }
    };
    (0..count)
        .map(|_| Sample {
            x: (0..dim).map(|_| coord(&mut rng)).collect(),
            xi: (0..dim).map(|_| coord(&mut rng)).collect(),
            eta: (0..dim).map(|_| coord(&mut rng)).collect(),
        })
        .collect()
}

fn det(m: &mut [Vec<f64>]) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        if m[piv][c].abs() < 1e-14 {
            return 0.0;
        }
        if piv != c {
            m.swap(piv, c);
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

/// Implicit-function nondegeneracy: det of ∂(Ξ_J, X_I)/∂η at test samples.
fn minor_det(cand: &PartitionCandidate, sample: &Sample, dim: usize) -> f64 {
    let mut rows = Vec::with_capacity(dim);
    for e in cand.e.xi_impl.iter().chain(&cand.e.x_impl) {
        let row: Vec<f64> = (0..dim)
            .map(|k| expr::eval(&expr::diff(e, Var::Y(k)), sample.point()).re)
            .collect();
        rows.push(row);
    }
    det(&mut rows)
}

fn build_s_e(j_set: &[usize], xi_impl: &[Expr]) -> Expr {
    sum(j_set
        .iter()
        .zip(xi_impl)
        .map(|(&j, xi)| mul(coord_x(j), xi.clone())))
}

fn build_s_psi(i_set: &[usize], fg: &FaceGraph, dim: usize) -> Expr {
    let neg_x = sum(i_set
        .iter()
        .zip(&fg.x_impl)
        .map(|(&i, x)| neg(mul(x.clone(), coord_xi(i)))));
    let y = sum((0..dim).map(|k| mul(fg.y_impl[k].clone(), coord_y(k))));
    add(neg_x, y)
}

/// Residual of ∂S = (Ξ_J, ±X_I, Y) for one face; `x_sign` is +1 on the e-type
/// faces and −1 on the ψ-face.
fn relation_residual(
    s: &Expr,
    fg: &FaceGraph,
    i_set: &[usize],
    j_set: &[usize],
    x_sign: f64,
    samples: &[Sample],
) -> f64 {
    let dim = fg.y_impl.len();
    let mut worst = 0.0f64;
    let mut checks: Vec<(Expr, Expr)> = Vec::new();
    for (pos, &j) in j_set.iter().enumerate() {
        checks.push((expr::diff(s, Var::X(j)), fg.xi_impl[pos].clone()));
    }
    for (pos, &i) in i_set.iter().enumerate() {
        checks.push((
            expr::diff(s, Var::Xi(i)),
            mul(cst(x_sign), fg.x_impl[pos].clone()),
        ));
    }
    for k in 0..dim {
        checks.push((expr::diff(s, Var::Y(k)), fg.y_impl[k].clone()));
    }
    for sample in samples {
        for (lhs, rhs) in &checks {
            let d = (expr::eval(lhs, sample.point()) - expr::eval(rhs, sample.point())).norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// Build S_e, S_ψ, S_ψe from the first nondegenerate partition candidate and
/// verify the nine gradient relations on 100 random graph samples.
pub fn generating_functions(g: &GraphData) -> Result<GeneratingData> {
    let dim = g.dim;
    let samples = graph_samples(dim, 100, 0x9e3a);
    let mut best_det = 0.0f64;
    let mut chosen = None;
    for cand in &g.candidates {
        let min_det = samples
            .iter()
            .take(10)
            .map(|s| minor_det(cand, s, dim).abs())
            .fold(f64::INFINITY, f64::min);
        best_det = best_det.max(min_det);
        if min_det >= 0.1 {
            chosen = Some(cand);
            break;
        }
    }
    let cand = chosen.ok_or(SgError::DegenerateSection(best_det))?;
    let j_set: Vec<usize> = (0..dim).filter(|j| !cand.i_set.contains(j)).collect();
    let s_e = build_s_e(&j_set, &cand.e.xi_impl);
    let s_psi = build_s_psi(&cand.i_set, &cand.psi, dim);
    let s_psie = build_s_e(&j_set, &cand.psie.xi_impl);
    let mut res = 0.0f64;
    res = res.max(relation_residual(&s_e, &cand.e, &cand.i_set, &j_set, 1.0, &samples));
    res = res.max(relation_residual(&s_psi, &cand.psi, &cand.i_set, &j_set, -1.0, &samples));
    res = res.max(relation_residual(&s_psie, &cand.psie, &cand.i_set, &j_set, 1.0, &samples));
    if res > 1e-8 {
        return Err(SgError::GradientMismatch(res));
    }
    Ok(GeneratingData {
        dim,
        i_set: cand.i_set.clone(),
        j_set,
        e: cand.e.clone(),
        psi: cand.psi.clone(),
        psie: cand.psie.clone(),
        s_e,
        s_psi,
        s_psie,
        relation_residual: res,
    })
}

/// The phase pair in split form: φ_e = f_e(x,θ) + g_e(y,θ),
/// φ_ψ = f_ψ(x,θ) + g_ψ(y,θ), with θ = (ξ_I, η) packed into the ξ slots.
#[derive(Clone, Debug)]
pub struct PhaseFunctions {
    pub theta_dim: usize,
    pub f_e: Expr,
    pub g_e: Expr,
    pub f_psi: Expr,
    pub g_psi: Expr,
}

/// Phase validation report: stationary-set and compatibility residuals.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct PhaseCompat {
    pub samples: usize,
    /// sup |d_{(ξ_I,η)}φ_•| on graph samples.
    pub stationary_residual: f64,
    /// sup |σ_ψ(φ_e) − σ_e(φ_ψ)| on corner-graph samples.
    pub compatibility_residual: f64,
    pub pass: bool,
}

/// Repack an implicit-convention expression (η in CoordY) into phase-θ form
/// (θ = (ξ_I, η) in the CoordXi slots). Only d = 0 partitions carry the
/// norm leaves |η|, ⟨η⟩ over exactly.
fn repack_theta(e: &Expr, i_set: &[usize], d: usize) -> Result<Expr> {
    let mut bad = false;
    let out = expr::map_leaves(e, &|leaf| match leaf {
        Node::CoordY { index } => Some(coord_xi(d + index)),
        Node::CoordXi { index } => {
            let pos = i_set.iter().position(|&i| i == *index)?;
            Some(coord_xi(pos))
        }
        Node::AbsY | Node::JapY if d > 0 => None,
        Node::AbsY => Some(expr::abs_xi()),
        Node::JapY => Some(expr::jap_xi()),
        _ => None,
    });
    // map_leaves can't report failure, so re-scan for leftover η-norm leaves
    fn has_y_norm(e: &Expr) -> bool {
        match &**e {
            Node::AbsY | Node::JapY => true,
            Node::Add { lhs, rhs } | Node::Mul { lhs, rhs } => has_y_norm(lhs) || has_y_norm(rhs),
            Node::IntPow { base: a, .. } | Node::Exp { arg: a } | Node::Inv { arg: a } => {
                has_y_norm(a)
            }
            _ => false,
        }
    }
    if d > 0 && has_y_norm(&out) {
        bad = true;
    }
    if bad {
        return Err(SgError::ClosedFormRequired(
            "|η|-leaves need the d = 0 partition for θ-packing".into(),
        ));
    }
    Ok(out)
}

fn eval_impl(exprs: &[Expr], s: &Sample) -> Vec<f64> {
    exprs.iter().map(|e| expr::eval(e, s.point()).re).collect()
}

/// Build φ_e, φ_ψ from the generating functions and check the stationary-set
/// and principal-symbol compatibility conditions on graph samples.
pub fn phase_from_sct(gen: &GeneratingData) -> Result<(PhaseFunctions, PhaseCompat)> {
    let dim = gen.dim;
    let d = gen.i_set.len();
    let theta_dim = dim + d;
    // f_e = x^iξ_i + S_e, g_e = +y·η; f_ψ = x^iξ_i + S_ψ, g_ψ = −y·η
    let x_xi = sum(gen
        .i_set
        .iter()
        .enumerate()
        .map(|(pos, &i)| mul(coord_x(i), coord_xi(pos))));
    let f_e = add(x_xi.clone(), repack_theta(&gen.s_e, &gen.i_set, d)?);
    let f_psi = add(x_xi, repack_theta(&gen.s_psi, &gen.i_set, d)?);
    let y_eta = sum((0..dim).map(|k| mul(coord_x(k), coord_xi(d + k))));
    let phases = PhaseFunctions {
        theta_dim,
        f_e: f_e.clone(),
        g_e: y_eta.clone(),
        f_psi: f_psi.clone(),
        g_psi: neg(y_eta),
    };

    let samples = graph_samples(dim, 100, 0x7a11);
    let mut stationary = 0.0f64;
    let mut compat = 0.0f64;
    for s in &samples {
        // stationary set of φ_ψ at the ψ-face graph point: d_ηφ_ψ = −y + ∂_ηS_ψ,
        // d_{ξ_i}φ_ψ = x^i − X^i; both vanish when (y, x^I) take their graph values
        let y_psi = eval_impl(&gen.psi.y_impl, s);
        for k in 0..dim {
            let dsde = expr::eval(&expr::diff(&gen.s_psi, Var::Y(k)), s.point()).re;
            stationary = stationary.max((dsde - y_psi[k]).abs());
        }
        let x_psi = eval_impl(&gen.psi.x_impl, s);
        for (pos, &i) in gen.i_set.iter().enumerate() {
            let dsdxi = expr::eval(&expr::diff(&gen.s_psi, Var::Xi(i)), s.point()).re;
            stationary = stationary.max((dsdxi + x_psi[pos]).abs());
        }
        // φ_e parametrizes with the opposite (x^I, y) sign: d_ηφ_e = y + ∂_ηS_e
        let y_e = eval_impl(&gen.e.y_impl, s);
        for k in 0..dim {
            let dsde = expr::eval(&expr::diff(&gen.s_e, Var::Y(k)), s.point()).re;
            stationary = stationary.max((dsde - y_e[k]).abs());
        }

        // compatibility at the corner graph: each bi-homogeneous face phase
        // vanishes on its own stationary set (double Euler identity), so the
        // two principal limits must agree there
        let x_c = eval_impl(&gen.psie.x_impl, s);
        let y_c = eval_impl(&gen.psie.y_impl, s);
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(p, q)| p * q).sum() };
        let xi_i = |s: &Sample| -> f64 {
            gen.i_set
                .iter()
                .zip(&x_c)
                .map(|(&i, xv)| xv * s.xi[i])
                .sum()
        };
        let sigma_psi_phi_e = scaling_limit(|lam| {
            let scaled = Sample {
                x: s.x.clone(),
                xi: s.xi.iter().map(|v| v * lam).collect(),
                eta: s.eta.iter().map(|v| v * lam).collect(),
            };
            // x^I = −X_ψe, y = −Y_ψe on the stationary set of φ_e
            let v = -xi_i(&scaled) - lam * dot(&y_c, &s.eta)
                + expr::eval(&gen.s_e, scaled.point()).re;
            Complex64::new(v / lam, 0.0)
        })?;
        let sigma_e_phi_psi = scaling_limit(|lam| {
            let scaled = Sample {
                x: s.x.iter().map(|v| v * lam).collect(),
                xi: s.xi.clone(),
                eta: s.eta.clone(),
            };
            let xi_term: f64 = gen
                .i_set
                .iter()
                .zip(&x_c)
                .map(|(&i, xv)| lam * xv * s.xi[i])
                .sum();
            let v = xi_term - lam * dot(&y_c, &s.eta)
                + expr::eval(&gen.s_psi, scaled.point()).re;
            Complex64::new(v / lam, 0.0)
        })?;
        compat = compat.max((sigma_psi_phi_e - sigma_e_phi_psi).norm());
    }
    let report = PhaseCompat {
        samples: samples.len(),
        stationary_residual: stationary,
        compatibility_residual: compat,
        pass: stationary < 1e-8 && compat < 1e-8,
    };
    Ok((phases, report))
}
