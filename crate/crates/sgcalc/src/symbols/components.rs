//! Homogeneous components, principal triples, classical symbols and the
//! scaling-sequence extraction of principal symbols.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Result, SgError};
use crate::expr::{abs_x, abs_xi, int_pow, jap_x, jap_xi, mul, Expr};
use crate::sampling::sphere_directions;

use super::{BiOrder, SymbolExpr};

/// Boundary face of the (bi-)compactified phase space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Face {
    E,
    Psi,
    PsiE,
}

/// Validity region of a homogeneous component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    XOutside,
    XiOutside,
    Both,
    Everywhere,
}

/// How a component's values are produced.
#[derive(Clone, Debug)]
pub enum ComponentBody {
    /// Closed-form expression in the grammar.
    Closed(Expr),
    /// Scaling-sequence limit of a base symbol toward the given face.
    Limit { base: SymbolExpr, face: Face },
    /// Pointwise product of two component bodies.
    Product(Box<ComponentBody>, Box<ComponentBody>),
}

#[derive(Clone, Debug)]
pub struct HomogeneousComponent {
    pub body: ComponentBody,
    pub degree_e: Option<i32>,
    pub degree_psi: Option<i32>,
    pub valid_region: Region,
    pub dim: usize,
}

/// Geometric scaling sequence μ = 2^4 .. 2^12.
const MU: [f64; 9] = [16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0, 2048.0, 4096.0];

/// Limit of f(μ) as μ→∞ by polynomial extrapolation in h = 1/μ (Neville),
/// with a contraction check on the extrapolant diagonal.
pub fn scaling_limit<F: Fn(f64) -> Complex64>(f: F) -> Result<Complex64> {
    let vals: Vec<Complex64> = MU.iter().map(|&m| f(m)).collect();
    if vals.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(SgError::NonConvergent("non-finite scaling values".into()));
    }
    let n = vals.len();
    let h: Vec<f64> = MU.iter().map(|&m| 1.0 / m).collect();
    // Neville tableau evaluated at h = 0
    let mut t = vec![vals.clone()];
    for j in 1..n {
        let prev = &t[j - 1];
        let mut row = Vec::with_capacity(n - j);
        for k in j..n {
            let num = prev[k - j + 1] * h[k - j] - prev[k - j] * h[k];
            row.push(num / (h[k - j] - h[k]));
        }
        t.push(row);
    }
    let diag: Vec<Complex64> = (0..n).map(|j| t[j][t[j].len() - 1]).collect();
    let last = diag[n - 1];
    let scale = 1.0f64.max(last.norm());
    let err = (diag[n - 1] - diag[n - 2]).norm();
    // raw sequence must not diverge
    let first_diff = (vals[1] - vals[0]).norm();
    let last_diff = (vals[n - 1] - vals[n - 2]).norm();
    if last_diff > first_diff * 1.01 + 1e-12 * scale {
        return Err(SgError::NonConvergent(format!(
            "raw scaling differences grow: {first_diff:.3e} -> {last_diff:.3e}"
        )));
    }
    if err > 1e-7 * scale {
        return Err(SgError::NonConvergent(format!(
            "extrapolant error estimate {err:.3e}"
        )));
    }
    Ok(last)
}

fn scaled(v: &[f64], mu: f64) -> Vec<f64> {
    v.iter().map(|a| a * mu).collect()
}

/// μ^{-deg}·value under face scaling; the workhorse behind Limit bodies.
pub fn face_limit<F>(face: Face, deg: BiOrder, eval: &F, x: &[f64], xi: &[f64]) -> Result<Complex64>
where
    F: Fn(&[f64], &[f64]) -> Complex64,
{
    match face {
        Face::E => scaling_limit(|mu| eval(&scaled(x, mu), xi) * mu.powi(-deg.m_e)),
        Face::Psi => scaling_limit(|nu| eval(x, &scaled(xi, nu)) * nu.powi(-deg.m_psi)),
        Face::PsiE => scaling_limit(|mu| {
            let inner = scaling_limit(|nu| eval(&scaled(x, mu), &scaled(xi, nu)) * nu.powi(-deg.m_psi));
            match inner {
                Ok(v) => v * mu.powi(-deg.m_e),
                Err(_) => Complex64::new(f64::NAN, 0.0),
            }
        }),
    }
}

impl ComponentBody {
    fn eval(&self, deg: BiOrder, x: &[f64], xi: &[f64]) -> Result<Complex64> {
        match self {
            ComponentBody::Closed(e) => {
                Ok(crate::expr::eval(e, crate::expr::EvalPoint::symbol(x, xi)))
            }
            ComponentBody::Limit { base, face } => {
                face_limit(*face, base.order, &|a, b| base.eval(a, b), x, xi)
            }
            ComponentBody::Product(a, b) => Ok(a.eval(deg, x, xi)? * b.eval(deg, x, xi)?),
        }
    }
}

impl HomogeneousComponent {
    pub fn closed(
        dim: usize,
        expr: Expr,
        degree_e: Option<i32>,
        degree_psi: Option<i32>,
        valid_region: Region,
    ) -> Self {
        HomogeneousComponent {
            body: ComponentBody::Closed(expr),
            degree_e,
            degree_psi,
            valid_region,
            dim,
        }
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Result<Complex64> {
        let deg = BiOrder::new(self.degree_e.unwrap_or(0), self.degree_psi.unwrap_or(0));
        self.body.eval(deg, x, xi)
    }

    pub fn closed_expr(&self) -> Result<&Expr> {
        match &self.body {
            ComponentBody::Closed(e) => Ok(e),
            _ => Err(SgError::ClosedFormRequired(
                "component is backed by a numeric scaling limit".into(),
            )),
        }
    }

    pub fn multiply(&self, other: &HomogeneousComponent) -> HomogeneousComponent {
        let body = match (&self.body, &other.body) {
            (ComponentBody::Closed(a), ComponentBody::Closed(b)) => {
                ComponentBody::Closed(mul(a.clone(), b.clone()))
            }
            (a, b) => ComponentBody::Product(Box::new(a.clone()), Box::new(b.clone())),
        };
        let sum_opt = |a: Option<i32>, b: Option<i32>| match (a, b) {
            (Some(x), Some(y)) => Some(x + y),
            _ => None,
        };
        HomogeneousComponent {
            body,
            degree_e: sum_opt(self.degree_e, other.degree_e),
            degree_psi: sum_opt(self.degree_psi, other.degree_psi),
            valid_region: Region::Both,
            dim: self.dim,
        }
    }

    pub fn conj(&self) -> HomogeneousComponent {
        fn body_conj(b: &ComponentBody) -> ComponentBody {
            match b {
                ComponentBody::Closed(e) => ComponentBody::Closed(crate::expr::conj(e)),
                ComponentBody::Limit { base, face } => ComponentBody::Limit {
                    base: base.conj(),
                    face: *face,
                },
                ComponentBody::Product(a, b) => {
                    ComponentBody::Product(Box::new(body_conj(a)), Box::new(body_conj(b)))
                }
            }
        }
        HomogeneousComponent {
            body: body_conj(&self.body),
            ..self.clone()
        }
    }

    /// Pointwise reciprocal; closed-form components only.
    pub fn invert(&self) -> Result<HomogeneousComponent> {
        let e = self.closed_expr()?;
        Ok(HomogeneousComponent {
            body: ComponentBody::Closed(crate::expr::inv(e.clone())),
            degree_e: self.degree_e.map(|d| -d),
            degree_psi: self.degree_psi.map(|d| -d),
            valid_region: self.valid_region,
            dim: self.dim,
        })
    }

    /// Max relative homogeneity defect on sample rays λ ∈ {2,4,8}, |v| ≥ 1.
    pub fn homogeneity_defect(&self) -> Result<f64> {
        let dirs = sphere_directions(self.dim, 8);
        let mut worst = 0.0f64;
        for wx in &dirs {
            for wxi in &dirs {
                let x: Vec<f64> = wx.iter().map(|c| c * 1.5).collect();
                let xi: Vec<f64> = wxi.iter().map(|c| c * 1.5).collect();
                let v0 = self.eval(&x, &xi)?;
                for lam in [2.0f64, 4.0, 8.0] {
                    if let Some(de) = self.degree_e {
                        let v = self.eval(&scaled(&x, lam), &xi)?;
                        let want = v0 * lam.powi(de);
                        worst = worst.max((v - want).norm() / want.norm().max(1.0));
                    }
                    if let Some(dp) = self.degree_psi {
                        let v = self.eval(&x, &scaled(&xi, lam))?;
                        let want = v0 * lam.powi(dp);
                        worst = worst.max((v - want).norm() / want.norm().max(1.0));
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// The μ→∞ limit of μ^{-m_•} s(scaled args) as a component on the face.
pub fn principal_limit(s: &SymbolExpr, face: Face) -> HomogeneousComponent {
    let (degree_e, degree_psi) = match face {
        Face::E => (Some(s.order.m_e), None),
        Face::Psi => (None, Some(s.order.m_psi)),
        Face::PsiE => (Some(s.order.m_e), Some(s.order.m_psi)),
    };
    let valid_region = match face {
        Face::E => Region::XOutside,
        Face::Psi => Region::XiOutside,
        Face::PsiE => Region::Both,
    };
    HomogeneousComponent {
        body: ComponentBody::Limit {
            base: s.clone(),
            face,
        },
        degree_e,
        degree_psi,
        valid_region,
        dim: s.dim,
    }
}

/// The principal triple (a_e, a_ψ, a_ψe).
#[derive(Clone, Debug)]
pub struct PrincipalTriple {
    pub a_e: HomogeneousComponent,
    pub a_psi: HomogeneousComponent,
    pub a_psie: HomogeneousComponent,
}

impl PrincipalTriple {
    /// Sup over corner bi-rays of |σ_ψ(a_e) − a_ψe| and |σ_e(a_ψ) − a_ψe|.
    pub fn compatibility_residual(&self) -> Result<f64> {
        let dim = self.a_e.dim;
        let m = BiOrder::new(
            self.a_psie.degree_e.unwrap_or(0),
            self.a_psie.degree_psi.unwrap_or(0),
        );
        let dirs = sphere_directions(dim, 8);
        let mut worst = 0.0f64;
        for wx in &dirs {
            for wxi in &dirs {
                let corner = self.a_psie.eval(wx, wxi)?;
                let from_e =
                    face_limit(Face::Psi, m, &|x: &[f64], xi: &[f64]| {
                        self.a_e.eval(x, xi).unwrap_or(Complex64::new(f64::NAN, 0.0))
                    }, wx, wxi)?;
                let from_psi =
                    face_limit(Face::E, m, &|x: &[f64], xi: &[f64]| {
                        self.a_psi.eval(x, xi).unwrap_or(Complex64::new(f64::NAN, 0.0))
                    }, wx, wxi)?;
                worst = worst.max((from_e - corner).norm());
                worst = worst.max((from_psi - corner).norm());
            }
        }
        Ok(worst)
    }
}

/// A classical symbol: base expression plus (a truncation of) its asymptotic
/// matrix of bi-homogeneous components. Entry (j,k) has degrees
/// (m_e − k, m_ψ − j).
#[derive(Clone, Debug)]
pub struct ClassicalSymbol {
    pub base: SymbolExpr,
    pub matrix: BTreeMap<(u32, u32), HomogeneousComponent>,
    pub n_trunc: u32,
    triple: Option<PrincipalTriple>,
}

/// Generalized binomial coefficient C(p, k) for real p.
fn binom(p: f64, k: u32) -> f64 {
    let mut num = 1.0;
    for i in 0..k {
        num *= p - i as f64;
    }
    let fact: f64 = (1..=k as u64).product::<u64>() as f64;
    num / fact
}

impl ClassicalSymbol {
    pub fn order(&self) -> BiOrder {
        self.base.order
    }

    pub fn dim(&self) -> usize {
        self.base.dim
    }

    pub fn new(base: SymbolExpr) -> Self {
        ClassicalSymbol {
            base,
            matrix: BTreeMap::new(),
            n_trunc: 0,
            triple: None,
        }
    }

    pub fn with_triple(mut self, triple: PrincipalTriple) -> Self {
        self.triple = Some(triple);
        self
    }

    pub fn with_matrix(
        mut self,
        matrix: BTreeMap<(u32, u32), HomogeneousComponent>,
        n_trunc: u32,
    ) -> Self {
        self.matrix = matrix;
        self.n_trunc = n_trunc;
        self
    }

    pub fn stored_triple(&self) -> Option<&PrincipalTriple> {
        self.triple.as_ref()
    }

    /// The principal triple: stored closed form if available, otherwise
    /// scaling-limit extraction from the base.
    pub fn principal_triple(&self) -> PrincipalTriple {
        if let Some(t) = &self.triple {
            return t.clone();
        }
        PrincipalTriple {
            a_e: principal_limit(&self.base, Face::E),
            a_psi: principal_limit(&self.base, Face::Psi),
            a_psie: principal_limit(&self.base, Face::PsiE),
        }
    }

    /// λ^m as a classical symbol, with the binomial-series asymptotic matrix
    /// truncated at n_trunc and a closed-form principal triple.
    pub fn weight(dim: usize, m: BiOrder, n_trunc: u32) -> Self {
        let base = SymbolExpr::weight(dim, m);
        let mut matrix = BTreeMap::new();
        for k in (0..=n_trunc).step_by(2) {
            for j in (0..=n_trunc).step_by(2) {
                let c = binom(m.m_e as f64 / 2.0, k / 2) * binom(m.m_psi as f64 / 2.0, j / 2);
                if c == 0.0 {
                    continue;
                }
                let e = mul(
                    crate::expr::cst(c),
                    mul(
                        int_pow(abs_x(), m.m_e - k as i32),
                        int_pow(abs_xi(), m.m_psi - j as i32),
                    ),
                );
                matrix.insert(
                    (j, k),
                    HomogeneousComponent::closed(
                        dim,
                        e,
                        Some(m.m_e - k as i32),
                        Some(m.m_psi - j as i32),
                        Region::Both,
                    ),
                );
            }
        }
        let triple = PrincipalTriple {
            a_e: HomogeneousComponent::closed(
                dim,
                mul(int_pow(abs_x(), m.m_e), int_pow(jap_xi(), m.m_psi)),
                Some(m.m_e),
                None,
                Region::XOutside,
            ),
            a_psi: HomogeneousComponent::closed(
                dim,
                mul(int_pow(jap_x(), m.m_e), int_pow(abs_xi(), m.m_psi)),
                None,
                Some(m.m_psi),
                Region::XiOutside,
            ),
            a_psie: HomogeneousComponent::closed(
                dim,
                mul(int_pow(abs_x(), m.m_e), int_pow(abs_xi(), m.m_psi)),
                Some(m.m_e),
                Some(m.m_psi),
                Region::Both,
            ),
        };
        ClassicalSymbol {
            base,
            matrix,
            n_trunc,
            triple: Some(triple),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{coord_x, coord_xi, cst, inv};

    #[test]
    fn sigma_e_of_jap_x_is_abs_x() {
        let s = SymbolExpr::new(1, BiOrder::new(1, 0), jap_x());
        let c = principal_limit(&s, Face::E);
        let v = c.eval(&[3.0], &[0.5]).unwrap();
        assert!((v.re - 3.0).abs() < 1e-9);
        let v = c.eval(&[-2.0], &[0.0]).unwrap();
        assert!((v.re - 2.0).abs() < 1e-9);
    }

    #[test]
    fn sigma_psi_of_jap_x_is_jap_x() {
        let s = SymbolExpr::new(1, BiOrder::new(1, 0), jap_x());
        let c = principal_limit(&s, Face::Psi);
        let v = c.eval(&[3.0], &[1.0]).unwrap();
        assert!((v.re - 10.0f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn sigma_psie_of_normalized_product() {
        // σ_ψe(x^1ξ_1⟨x⟩⁻¹⟨ξ⟩⁻¹) = (x^1/|x|)(ξ_1/|ξ|)
        let ast = mul(
            mul(coord_x(0), coord_xi(0)),
            mul(inv(jap_x()), inv(jap_xi())),
        );
        let s = SymbolExpr::new(2, BiOrder::ZERO, ast);
        let c = principal_limit(&s, Face::PsiE);
        let x = [3.0, 4.0];
        let xi = [0.0, 2.0];
        let want = (3.0 / 5.0) * (0.0 / 2.0);
        let v = c.eval(&x, &xi).unwrap();
        assert!((v.re - want).abs() < 1e-8, "got {v}");
        let xi2 = [1.0, 1.0];
        let want2 = (3.0 / 5.0) * (1.0 / 2.0f64.sqrt());
        let v2 = c.eval(&x, &xi2).unwrap();
        assert!((v2.re - want2).abs() < 1e-8);
    }

    #[test]
    fn nonconvergent_for_exponential() {
        let s = SymbolExpr::new(1, BiOrder::new(0, 0), crate::expr::exp_of(coord_x(0)));
        let c = principal_limit(&s, Face::E);
        assert!(c.eval(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn weight_triple_compatible() {
        let c = ClassicalSymbol::weight(2, BiOrder::new(1, 1), 4);
        let t = c.principal_triple();
        let res = t.compatibility_residual().unwrap();
        assert!(res < 1e-8, "residual {res}");
    }

    #[test]
    fn limit_triple_of_weight_matches_closed_form() {
        let c = ClassicalSymbol::new(SymbolExpr::weight(1, BiOrder::new(1, 1)));
        let t = c.principal_triple();
        // a_e(x,ξ) = |x|⟨ξ⟩
        let v = t.a_e.eval(&[2.0], &[1.0]).unwrap();
        assert!((v.re - 2.0 * 2.0f64.sqrt()).abs() < 1e-8);
        // corner = |x||ξ|
        let v = t.a_psie.eval(&[2.0], &[3.0]).unwrap();
        assert!((v.re - 6.0).abs() < 1e-7);
    }

    #[test]
    fn homogeneity_defect_detects_mismatch() {
        // declare ⟨x⟩ as 1-homogeneous: defect should be visible but small at
        // large radii... use radius ~1.5 rays: ⟨x⟩ is NOT homogeneous there.
        let c = HomogeneousComponent::closed(1, jap_x(), Some(1), None, Region::XOutside);
        let d = c.homogeneity_defect().unwrap();
        assert!(d > 1e-3);
        let good = HomogeneousComponent::closed(1, abs_x(), Some(1), None, Region::XOutside);
        assert!(good.homogeneity_defect().unwrap() < 1e-12);
        let zero = HomogeneousComponent::closed(1, cst(0.0), Some(3), Some(1), Region::Both);
        assert!(zero.homogeneity_defect().unwrap() == 0.0);
    }
}
