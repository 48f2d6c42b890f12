//! Scattering geometry: radial compactification, boundary-function data of
//! classical symbols, corner compatibility, scattering canonical
//! transformations, generating functions and phases, and Hamiltonian
//! reconstruction from vector-field data.

pub mod generating;
pub mod hamilton;
pub mod sct;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgError};
use crate::sampling::sphere_directions;
use crate::symbols::{BiOrder, ClassicalSymbol, Face};

pub use generating::{
    generating_functions, phase_from_sct, FaceGraph, GeneratingData, GraphData, PartitionCandidate,
    PhaseCompat, PhaseFunctions,
};
pub use hamilton::hamiltonian_from_field;
pub use sct::{homogeneous_extension, validate_sct, ExtendedSct, FaceMap, SCTSpec, SctReport};

/// Point on the radially compactified space: ρ = ⟨x⟩⁻¹, ω = x/|x|.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompactPoint {
    pub rho: f64,
    pub omega: Vec<f64>,
    pub interior: bool,
}

pub fn radial_compactify(x: &[f64]) -> CompactPoint {
    let r2: f64 = x.iter().map(|a| a * a).sum();
    let rho = 1.0 / (1.0 + r2).sqrt();
    let omega = if r2 == 0.0 {
        let mut e1 = vec![0.0; x.len()];
        e1[0] = 1.0;
        e1
    } else {
        let r = r2.sqrt();
        x.iter().map(|a| a / r).collect()
    };
    CompactPoint { rho, omega, interior: true }
}

pub fn radial_decompactify(p: &CompactPoint) -> Result<Vec<f64>> {
    if p.rho <= 0.0 {
        return Err(SgError::BoundaryPoint);
    }
    let r = (1.0 / (p.rho * p.rho) - 1.0).max(0.0).sqrt();
    Ok(p.omega.iter().map(|a| a * r).collect())
}

/// Weighted boundary restriction of a classical symbol on one face, with
/// its further restriction to the corner.
#[derive(Clone, Debug)]
pub struct BoundaryFunctionData {
    pub face: Face,
    pub order: BiOrder,
    /// Sphere directions in the boundary variable.
    pub sphere: Vec<Vec<f64>>,
    /// Samples of the interior variable (empty for the corner face).
    pub radial: Vec<Vec<f64>>,
    /// Face values, indexed sphere-major.
    pub values: Vec<Complex64>,
    /// Corner directions (second sphere).
    pub corner_dirs: Vec<Vec<f64>>,
    /// ψe-restriction of this face's data on sphere×sphere samples.
    pub corner: Vec<Complex64>,
}

fn boundary_dirs(dim: usize) -> Vec<Vec<f64>> {
    sphere_directions(dim, 32)
}

fn interior_samples(dim: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; dim]];
    for r in [0.5, 1.0, 2.0, 4.0] {
        for w in sphere_directions(dim, 8) {
            out.push(w.iter().map(|c| c * r).collect());
        }
    }
    out
}

fn jap(v: &[f64]) -> f64 {
    (1.0 + v.iter().map(|a| a * a).sum::<f64>()).sqrt()
}

/// ȷᵐ(a) on one boundary face: the ρ-weighted pullback, which on the e-face
/// equals ⟨ξ⟩^{−m_ψ}σ_e(a)(ω, ξ), on the ψ-face ⟨x⟩^{−m_e}σ_ψ(a)(x, ω),
/// and at the corner a_ψe(ω, ω′).
pub fn jmap(a: &ClassicalSymbol, face: Face) -> Result<BoundaryFunctionData> {
    let dim = a.dim();
    let m = a.order();
    let t = a.principal_triple();
    let sphere = boundary_dirs(dim);
    let corner_dirs = boundary_dirs(dim);
    let mut corner = Vec::new();
    for w in &sphere {
        for w2 in &corner_dirs {
            corner.push(t.a_psie.eval(w, w2)?);
        }
    }
    let (radial, values) = match face {
        Face::E => {
            let radial = interior_samples(dim);
            let mut values = Vec::new();
            for w in &sphere {
                for xi in &radial {
                    values.push(t.a_e.eval(w, xi)? * jap(xi).powi(-m.m_psi));
                }
            }
            (radial, values)
        }
        Face::Psi => {
            let radial = interior_samples(dim);
            let mut values = Vec::new();
            for w in &sphere {
                for x in &radial {
                    values.push(t.a_psi.eval(x, w)? * jap(x).powi(-m.m_e));
                }
            }
            (radial, values)
        }
        Face::PsiE => (Vec::new(), corner.clone()),
    };
    Ok(BoundaryFunctionData {
        face,
        order: m,
        sphere,
        radial,
        values,
        corner_dirs,
        corner,
    })
}

/// Sup-difference of the two ψe-restrictions over shared corner samples.
pub fn corner_compatibility_check(
    d_e: &BoundaryFunctionData,
    d_psi: &BoundaryFunctionData,
) -> Result<f64> {
    if d_e.corner.len() != d_psi.corner.len() {
        return Err(SgError::InvalidInput(
            "corner sample sets differ in size".into(),
        ));
    }
    Ok(d_e
        .corner
        .iter()
        .zip(&d_psi.corner)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{coord_x, jap_xi, mul};
    use crate::symbols::SymbolExpr;

    #[test]
    fn compactify_round_trip() {
        let x = vec![3.0, 4.0];
        let p = radial_compactify(&x);
        assert!((p.rho - 1.0 / 26.0f64.sqrt()).abs() < 1e-12);
        let back = radial_decompactify(&p).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let origin = radial_compactify(&[0.0, 0.0]);
        assert!((origin.rho - 1.0).abs() < 1e-15);
        assert!(matches!(
            radial_decompactify(&CompactPoint { rho: 0.0, omega: vec![1.0, 0.0], interior: false }),
            Err(SgError::BoundaryPoint)
        ));
    }

    #[test]
    fn jmap_of_weight_is_unit() {
        let a = ClassicalSymbol::weight(2, BiOrder::new(1, 1), 0);
        for face in [Face::E, Face::Psi, Face::PsiE] {
            let d = jmap(&a, face).unwrap();
            for v in d.values.iter().chain(&d.corner) {
                assert!((v - Complex64::ONE).norm() < 1e-7, "face {face:?}: {v}");
            }
        }
    }

    #[test]
    fn jmap_e_face_of_x1_jap_xi_is_omega1() {
        // a = x^1⟨ξ⟩, order (1,1): e-face data ≡ ω¹
        let a = ClassicalSymbol::new(SymbolExpr::new(
            2,
            BiOrder::new(1, 1),
            mul(coord_x(0), jap_xi()),
        ));
        let d = jmap(&a, Face::E).unwrap();
        let nr = d.radial.len();
        for (si, w) in d.sphere.iter().enumerate() {
            for ri in 0..nr {
                let v = d.values[si * nr + ri];
                assert!((v.re - w[0]).abs() < 1e-7, "got {v}, want {}", w[0]);
            }
        }
    }

    #[test]
    fn corner_agreement_for_classical_symbols() {
        let a = ClassicalSymbol::weight(2, BiOrder::new(2, -1), 0);
        let de = jmap(&a, Face::E).unwrap();
        let dp = jmap(&a, Face::Psi).unwrap();
        assert!(corner_compatibility_check(&de, &dp).unwrap() < 1e-6);
    }
}
