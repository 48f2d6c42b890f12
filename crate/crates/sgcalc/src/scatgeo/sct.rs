//! Scattering canonical transformations: boundary-face map triples, corner
//! coherence validation, and homogeneous extension through order-reduction
//! sections.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgError};
use crate::expr::{self, Expr};
use crate::sampling::sphere_directions;
use crate::symbols::components::scaling_limit;

/// One boundary-face map as component expressions over (x-slot, ξ-slot).
/// For χ_e the x-slot carries the sphere variable θ and the ξ-slot the full
/// covariable; for χ_ψ the roles are swapped; χ_ψe takes two sphere variables.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FaceMap {
    pub x_comp: Vec<Expr>,
    pub xi_comp: Vec<Expr>,
}

impl FaceMap {
    pub fn identity(dim: usize) -> Self {
        FaceMap {
            x_comp: (0..dim).map(expr::coord_x).collect(),
            xi_comp: (0..dim).map(expr::coord_xi).collect(),
        }
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = expr::EvalPoint::symbol(x, xi);
        (
            self.x_comp.iter().map(|e| expr::eval(e, p).re).collect(),
            self.xi_comp.iter().map(|e| expr::eval(e, p).re).collect(),
        )
    }
}

/// Compatible triple of boundary diffeomorphism data with positive sections.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SCTSpec {
    pub dim: usize,
    /// (T, H) on the e-face: T sphere-valued in θ, H of ξ-order 1.
    pub chi_e: FaceMap,
    /// (Y, G) on the ψ-face: Y of x-order 1, G sphere-valued.
    pub chi_psi: FaceMap,
    /// Corner map on 𝕊^{n−1}×𝕊^{n−1}.
    pub chi_psie: FaceMap,
    /// Positive sections on the respective faces.
    pub f_e: Expr,
    pub f_psi: Expr,
}

impl SCTSpec {
    pub fn identity(dim: usize) -> Self {
        SCTSpec {
            dim,
            chi_e: FaceMap::identity(dim),
            chi_psi: FaceMap::identity(dim),
            chi_psie: FaceMap::identity(dim),
            f_e: expr::cst(1.0),
            f_psi: expr::cst(1.0),
        }
    }

    /// χ_e(θ,ξ) = (θ, 2ξ), χ_ψ(x,ω) = (x/2, ω): the boundary data of the
    /// dilation (x,ξ) ↦ (x/2, 2ξ).
    pub fn dilation(dim: usize) -> Self {
        SCTSpec {
            dim,
            chi_e: FaceMap {
                x_comp: (0..dim).map(expr::coord_x).collect(),
                xi_comp: (0..dim)
                    .map(|k| expr::mul(expr::cst(2.0), expr::coord_xi(k)))
                    .collect(),
            },
            chi_psi: FaceMap {
                x_comp: (0..dim)
                    .map(|k| expr::mul(expr::cst(0.5), expr::coord_x(k)))
                    .collect(),
                xi_comp: (0..dim).map(expr::coord_xi).collect(),
            },
            chi_psie: FaceMap::identity(dim),
            f_e: expr::cst(1.0),
            f_psi: expr::cst(1.0),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SctReport {
    /// sup over bi-rays of |lim T(α,λβ) − A(α,β)| and the Y-limit analogue.
    pub corner_residual_x: f64,
    /// H/G analogue.
    pub corner_residual_xi: f64,
    pub min_section: f64,
    pub pass: bool,
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n == 0.0 {
        return v.to_vec();
    }
    v.iter().map(|a| a / n).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

fn limit_vec<F>(dim: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(f64, usize) -> f64,
{
    (0..dim)
        .map(|k| scaling_limit(|lam| Complex64::new(f(lam, k), 0.0)).map(|v| v.re))
        .collect()
}

/// Corner coherence of Thm. item 3: the large-|ξ| limit of χ_e and the
/// large-|x| limit of χ_ψ must both restrict to χ_ψe on bi-rays, and the
/// sections must stay strictly positive.
pub fn validate_sct(spec: &SCTSpec) -> Result<SctReport> {
    let dim = spec.dim;
    let dirs = sphere_directions(dim, 8);
    let mut res_x = 0.0f64;
    let mut res_xi = 0.0f64;
    let mut min_section = f64::INFINITY;
    for alpha in &dirs {
        for beta in &dirs {
            let (a_corner, b_corner) = spec.chi_psie.eval(alpha, beta);
            // e-face: T(α, λβ) → A(α,β); λ⁻¹H(α, λβ) ∥ B(α,β)
            let t_lim = limit_vec(dim, |lam, k| {
                let xi: Vec<f64> = beta.iter().map(|v| v * lam).collect();
                expr::eval(&spec.chi_e.x_comp[k], expr::EvalPoint::symbol(alpha, &xi)).re
            })?;
            let h_lim = limit_vec(dim, |lam, k| {
                let xi: Vec<f64> = beta.iter().map(|v| v * lam).collect();
                expr::eval(&spec.chi_e.xi_comp[k], expr::EvalPoint::symbol(alpha, &xi)).re / lam
            })?;
            // ψ-face: λ⁻¹Y(λα, β) ∥ A(α,β); G(λα, β) → B(α,β)
            let y_lim = limit_vec(dim, |lam, k| {
                let x: Vec<f64> = alpha.iter().map(|v| v * lam).collect();
                expr::eval(&spec.chi_psi.x_comp[k], expr::EvalPoint::symbol(&x, beta)).re / lam
            })?;
            let g_lim = limit_vec(dim, |lam, k| {
                let x: Vec<f64> = alpha.iter().map(|v| v * lam).collect();
                expr::eval(&spec.chi_psi.xi_comp[k], expr::EvalPoint::symbol(&x, beta)).re
            })?;
            res_x = res_x.max(dist(&normalize(&t_lim), &normalize(&a_corner)));
            res_x = res_x.max(dist(&normalize(&y_lim), &normalize(&a_corner)));
            res_xi = res_xi.max(dist(&normalize(&h_lim), &normalize(&b_corner)));
            res_xi = res_xi.max(dist(&normalize(&g_lim), &normalize(&b_corner)));
            for r in [0.5, 1.0, 2.0, 4.0] {
                let xi: Vec<f64> = beta.iter().map(|v| v * r).collect();
                let fe = expr::eval(&spec.f_e, expr::EvalPoint::symbol(alpha, &xi)).re;
                let x: Vec<f64> = alpha.iter().map(|v| v * r).collect();
                let fp = expr::eval(&spec.f_psi, expr::EvalPoint::symbol(&x, beta)).re;
                min_section = min_section.min(fe).min(fp);
            }
        }
    }
    let pass = res_x < 1e-6 && res_xi < 1e-6 && min_section > 1e-6;
    Ok(SctReport {
        corner_residual_x: res_x,
        corner_residual_xi: res_xi,
        min_section,
        pass,
    })
}

/// The face maps extended homogeneously to the interior cones through a pair
/// of order reductions: the radial factor on the e-face is
/// p_e(θ,ξ)/p̃_e(χ_e(θ,ξ)), making r̃_e ∘ C_e = r_e exact by construction.
#[derive(Clone)]
pub struct ExtendedSct {
    pub spec: SCTSpec,
    pub p_e: Expr,
    pub pt_e: Expr,
    pub p_psi: Expr,
    pub pt_psi: Expr,
}

const SECTION_FLOOR: f64 = 1e-6;

fn split_radial(v: &[f64]) -> (f64, Vec<f64>) {
    let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (r, normalize(v))
}

impl ExtendedSct {
    fn ratio(&self, p: &Expr, pt: &Expr, arg: (&[f64], &[f64]), img: (&[f64], &[f64])) -> Result<f64> {
        let num = expr::eval(p, expr::EvalPoint::symbol(arg.0, arg.1)).re;
        let den = expr::eval(pt, expr::EvalPoint::symbol(img.0, img.1)).re;
        if den.abs() < SECTION_FLOOR {
            return Err(SgError::DegenerateSection(den));
        }
        Ok(num / den)
    }

    /// C_e on the cone x ≠ 0: 1-homogeneous in x.
    pub fn map_e(&self, x: &[f64], xi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (r, theta) = split_radial(x);
        let (t, h) = self.spec.chi_e.eval(&theta, xi);
        let f = self.ratio(&self.p_e, &self.pt_e, (&theta, xi), (&t, &h))?;
        Ok((t.iter().map(|c| c * f * r).collect(), h))
    }

    /// C_ψ on the cone ξ ≠ 0: 1-homogeneous in ξ.
    pub fn map_psi(&self, x: &[f64], xi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (r, omega) = split_radial(xi);
        let (y, g) = self.spec.chi_psi.eval(x, &omega);
        let f = self.ratio(&self.p_psi, &self.pt_psi, (x, &omega), (&y, &g))?;
        Ok((y, g.iter().map(|c| c * f * r).collect()))
    }

    /// C_ψe on x ≠ 0, ξ ≠ 0: bi-homogeneous via both sections.
    pub fn map_psie(&self, x: &[f64], xi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (rx, theta) = split_radial(x);
        let (rxi, omega) = split_radial(xi);
        let (a, b) = self.spec.chi_psie.eval(&theta, &omega);
        let fe = self.ratio(&self.p_e, &self.pt_e, (&theta, &omega), (&a, &b))?;
        let fp = self.ratio(&self.p_psi, &self.pt_psi, (&theta, &omega), (&a, &b))?;
        Ok((
            a.iter().map(|c| c * fe * rx).collect(),
            b.iter().map(|c| c * fp * rxi).collect(),
        ))
    }

    /// Newton inverse of C_e with finite-difference Jacobian.
    pub fn invert_e(&self, w: (&[f64], &[f64])) -> Result<(Vec<f64>, Vec<f64>)> {
        let dim = self.spec.dim;
        let mut z: Vec<f64> = w.0.iter().chain(w.1.iter()).copied().collect();
        let target: Vec<f64> = z.clone();
        let eval = |z: &[f64]| -> Result<Vec<f64>> {
            let (a, b) = self.map_e(&z[..dim], &z[dim..])?;
            Ok(a.into_iter().chain(b).collect())
        };
        for _ in 0..60 {
            let fz = eval(&z)?;
            let res: Vec<f64> = fz.iter().zip(&target).map(|(a, b)| a - b).collect();
            if res.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-12 {
                return Ok((z[..dim].to_vec(), z[dim..].to_vec()));
            }
            let h = 1e-6;
            let mut jac = vec![vec![0.0; 2 * dim]; 2 * dim];
            for c in 0..2 * dim {
                let mut zp = z.clone();
                zp[c] += h;
                let fp = eval(&zp)?;
                for r in 0..2 * dim {
                    jac[r][c] = (fp[r] - fz[r]) / h;
                }
            }
            let step = solve(&mut jac, &res)?;
            for (zi, si) in z.iter_mut().zip(&step) {
                *zi -= si;
            }
        }
        Err(SgError::NonConvergent("Newton inverse of C_e stalled".into()))
    }
}

fn solve(m: &mut [Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut b = rhs.to_vec();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&a, &bb| m[a][c].abs().total_cmp(&m[bb][c].abs()))
            .unwrap();
        if m[piv][c].abs() < 1e-12 {
            return Err(SgError::DegenerateSection(m[piv][c]));
        }
        m.swap(piv, c);
        b.swap(piv, c);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    Ok(x)
}

/// Attach order-reduction principal data (p, p̃ on both faces) to a validated
/// SCT spec, yielding interior extensions of all three face maps.
pub fn homogeneous_extension(
    spec: &SCTSpec,
    p_e: Expr,
    pt_e: Expr,
    p_psi: Expr,
    pt_psi: Expr,
) -> Result<ExtendedSct> {
    let ext = ExtendedSct {
        spec: spec.clone(),
        p_e,
        pt_e,
        p_psi,
        pt_psi,
    };
    // reject sections that are degenerate on the reference sphere already
    let dirs = sphere_directions(spec.dim, 8);
    for a in &dirs {
        for b in &dirs {
            ext.map_psie(a, b)?;
        }
    }
    Ok(ext)
}
