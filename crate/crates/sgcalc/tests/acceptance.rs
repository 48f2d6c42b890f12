//! Acceptance suite: twelve end-to-end criteria covering the calculus
//! oracles, the principal-symbol machinery, the scattering-geometry layer
//! and the FIO harnesses. Runs as a plain binary (harness = false) and
//! prints exactly one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_complex::Complex64;

use sgcalc::expr::{
    self, abs_x, abs_xi, add, coord_x, coord_xi, coord_y, cst, diff, exp_of, int_pow, inv, jap_x,
    jap_xi, mul, neg, EvalPoint, Var,
};
use sgcalc::fio::{
    default_probe_battery, egorov_check, fio_adjoint, order_preservation_probe, FioFamily,
};
use sgcalc::psdo::{
    amplitude_reduce, battery_residual, fourier_op, inverse_fourier_op, leibniz_product,
    parametrix, quantize, radial_limit_decomposition, recover_symbol, test_battery, Amplitude,
    GridSpec,
};
use sgcalc::sampling::Lcg;
use sgcalc::scatgeo::{
    corner_compatibility_check, generating_functions, hamiltonian_from_field, jmap,
    phase_from_sct, validate_sct, GraphData, SCTSpec,
};
use sgcalc::symbols::{
    bracket_principal_check, check_sg_estimate, poisson_bracket, principal_limit, BiOrder,
    ClassicalSymbol, DyadicGrid, Face, HomogeneousComponent, PrincipalTriple, Region, SymbolExpr,
};

fn fail(msg: String) -> Result<String, String> {
    Err(msg)
}

fn err_str<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// x¹ξ₁⟨x⟩⁻¹⟨ξ⟩⁻¹ with its closed principal triple.
fn normalized_product() -> ClassicalSymbol {
    let base = SymbolExpr::new(
        1,
        BiOrder::ZERO,
        mul(
            mul(coord_x(0), coord_xi(0)),
            mul(inv(jap_x()), inv(jap_xi())),
        ),
    );
    let sx = mul(coord_x(0), inv(abs_x()));
    let sxi = mul(coord_xi(0), inv(abs_xi()));
    let triple = PrincipalTriple {
        a_e: HomogeneousComponent::closed(
            1,
            mul(sx.clone(), mul(coord_xi(0), inv(jap_xi()))),
            Some(0),
            None,
            Region::XOutside,
        ),
        a_psi: HomogeneousComponent::closed(
            1,
            mul(mul(coord_x(0), inv(jap_x())), sxi.clone()),
            None,
            Some(0),
            Region::XiOutside,
        ),
        a_psie: HomogeneousComponent::closed(1, mul(sx, sxi), Some(0), Some(0), Region::Both),
    };
    ClassicalSymbol::new(base).with_triple(triple)
}

/// The published 4-symbol battery: ⟨x⟩, ⟨ξ⟩, ⟨x⟩⟨ξ⟩, x¹ξ₁⟨x⟩⁻¹⟨ξ⟩⁻¹, each
/// with a closed-form principal triple.
fn symbol_battery() -> Vec<ClassicalSymbol> {
    vec![
        ClassicalSymbol::weight(1, BiOrder::new(1, 0), 0),
        ClassicalSymbol::weight(1, BiOrder::new(0, 1), 0),
        ClassicalSymbol::weight(1, BiOrder::new(1, 1), 0),
        normalized_product(),
    ]
}

fn symbol_samples() -> Vec<(f64, f64)> {
    vec![(0.7, 1.0), (-1.3, 0.4), (2.0, -3.0), (0.5, 2.5), (-2.2, -0.9)]
}

// criterion 1 — Leibniz-product oracle convergence on the grid battery
fn c01_leibniz_convergence() -> Result<String, String> {
    let spec = GridSpec::default_1d();
    let battery = test_battery(&spec);
    let b4 = symbol_battery();
    let pairs = [(&b4[1], &b4[0], "(⟨ξ⟩,⟨x⟩)"), (&b4[2], &b4[3], "(λ,norm)")];
    let mut summary = Vec::new();
    for (a, b, label) in pairs {
        let target = quantize(&a.base, &spec)
            .map_err(err_str)?
            .compose(&quantize(&b.base, &spec).map_err(err_str)?);
        let mut res = Vec::new();
        for k in 0..=3u32 {
            let prod = leibniz_product(a, b, k).map_err(err_str)?;
            let op = quantize(&prod.base, &spec).map_err(err_str)?;
            res.push(battery_residual(&op, &target, &battery));
        }
        for w in res.windows(2) {
            if w[1] > w[0] * (1.0 + 1e-9) + 1e-14 {
                return fail(format!("{label}: residuals not monotone: {res:?}"));
            }
        }
        if res[0] < 5.0 * res[3] {
            return fail(format!("{label}: drop K=0→3 below 5×: {res:?}"));
        }
        summary.push(format!("{label} {:.2e}→{:.2e}", res[0], res[3]));
    }
    Ok(summary.join(", "))
}

// criterion 2 — exact two-term identities
fn c02_exact_identities() -> Result<String, String> {
    let a = ClassicalSymbol::new(SymbolExpr::new(1, BiOrder::new(0, 1), coord_xi(0)));
    let b = ClassicalSymbol::new(SymbolExpr::new(1, BiOrder::new(1, 0), coord_x(0)));
    let c = leibniz_product(&a, &b, 1).map_err(err_str)?;
    let amp = Amplitude {
        dim: 1,
        order: (0, 1, 1),
        ast: mul(coord_y(0), coord_xi(0)),
    };
    let r = amplitude_reduce(&amp, 1).map_err(err_str)?;
    if r.order() != BiOrder::new(1, 1) {
        return fail(format!("reduced order {:?}", r.order()));
    }
    for (x, xi) in symbol_samples() {
        let want = Complex64::new(x * xi, -1.0);
        for (name, got) in [
            ("leibniz", c.base.eval(&[x], &[xi])),
            ("amplitude_reduce", r.base.eval(&[x], &[xi])),
        ] {
            if (got - want).norm() > 1e-13 {
                return fail(format!("{name} at ({x},{xi}): {got} vs {want}"));
            }
        }
    }
    Ok("x¹ξ₁ − i reproduced twice".into())
}

// criterion 3 — parametrix residual order for K = 0, 1, 2
fn c03_parametrix_orders() -> Result<String, String> {
    let lam = ClassicalSymbol::weight(1, BiOrder::new(1, 1), 0);
    let perturbation = add(
        cst(1.0),
        mul(
            cst(0.5),
            mul(
                mul(coord_x(0), coord_xi(0)),
                mul(inv(jap_x()), inv(jap_xi())),
            ),
        ),
    );
    let perturbed = ClassicalSymbol::new(SymbolExpr::new(
        1,
        BiOrder::new(1, 1),
        mul(perturbation, SymbolExpr::weight(1, BiOrder::new(1, 1)).ast),
    ));
    for (a, label) in [(&lam, "λ"), (&perturbed, "perturbed λ")] {
        for k in 0..=2u32 {
            let q = parametrix(a, k).map_err(err_str)?;
            let prod = leibniz_product(a, &q, k).map_err(err_str)?;
            let res = SymbolExpr::new(
                1,
                BiOrder::new(-(k as i32 + 1), -(k as i32 + 1)),
                add(prod.base.ast, cst(-1.0)),
            );
            // beyond r ≈ 2⁹ the true residual (∼λ^{−(K+1)} ≲ 1e-16) drops
            // under the rounding floor of a#q ≈ 1, so deeper shells would
            // measure only double-precision noise
            let rep = check_sg_estimate(&res, 0, &DyadicGrid { k_max: 8, dirs: 8 });
            if !rep.pass {
                return fail(format!(
                    "{label}, K={k}: residual fails at order −{}𝟙 (growth {:.3})",
                    k + 1,
                    rep.worst_growth()
                ));
            }
        }
    }
    Ok("a#q_K − 1 at order −(K+1)𝟙 for K=0,1,2, both symbols".into())
}

// criterion 4 — principal multiplicativity and bracket formulas
fn c04_principal_bi_derivation() -> Result<String, String> {
    let battery = symbol_battery();
    let mut worst_mul = 0.0f64;
    let mut worst_br = 0.0f64;
    for i in 0..battery.len() {
        for j in (i + 1)..battery.len() {
            let (a, b) = (&battery[i], &battery[j]);
            // multiplicativity through the scaling limits of the pointwise product
            let prod = SymbolExpr::new(
                1,
                a.order() + b.order(),
                mul(a.base.ast.clone(), b.base.ast.clone()),
            );
            let (ta, tb) = (a.principal_triple(), b.principal_triple());
            for face in [Face::E, Face::Psi, Face::PsiE] {
                let lim = principal_limit(&prod, face);
                let pick = |t: &PrincipalTriple| match face {
                    Face::E => t.a_e.clone(),
                    Face::Psi => t.a_psi.clone(),
                    Face::PsiE => t.a_psie.clone(),
                };
                let (fa, fb) = (pick(&ta), pick(&tb));
                for (x, xi) in symbol_samples() {
                    let got = lim.eval(&[x], &[xi]).map_err(err_str)?;
                    let want = fa.eval(&[x], &[xi]).map_err(err_str)?
                        * fb.eval(&[x], &[xi]).map_err(err_str)?;
                    worst_mul = worst_mul.max((got - want).norm());
                }
            }
            let rep = bracket_principal_check(a, b).map_err(err_str)?;
            worst_br = worst_br.max(rep.max_residual());
        }
    }
    if worst_mul > 1e-6 || worst_br > 1e-6 {
        return fail(format!(
            "multiplicativity {worst_mul:.3e}, bracket {worst_br:.3e} (tol 1e-6)"
        ));
    }
    Ok(format!(
        "multiplicativity {worst_mul:.1e}, bracket {worst_br:.1e}"
    ))
}

// criterion 5 — bracket order drop with closed form
fn c05_bracket_closed_form() -> Result<String, String> {
    let a = SymbolExpr::new(2, BiOrder::new(1, 0), jap_x());
    let b = SymbolExpr::new(2, BiOrder::new(0, 1), jap_xi());
    let br = poisson_bracket(&a, &b);
    if br.order != BiOrder::ZERO {
        return fail(format!("bracket order {:?}", br.order));
    }
    let rep = check_sg_estimate(&br, 2, &DyadicGrid::default());
    if !rep.pass {
        return fail(format!("estimate at (0,0) fails: growth {}", rep.worst_growth()));
    }
    let closed = neg(mul(
        sgcalc::symbols::x_dot_xi(2),
        mul(inv(jap_x()), inv(jap_xi())),
    ));
    let mut rng = Lcg::new(0x5eed);
    for _ in 0..50 {
        let x = [rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)];
        let xi = [rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)];
        let got = br.eval(&x, &xi);
        let want = expr::eval(&closed, EvalPoint::symbol(&x, &xi));
        if (got - want).norm() > 1e-10 {
            return fail(format!("at {x:?},{xi:?}: {got} vs {want}"));
        }
    }
    Ok("{⟨x⟩,⟨ξ⟩} = −(x·ξ)/(⟨x⟩⟨ξ⟩) at order (0,0)".into())
}

// criterion 6 — jmap boundary data vs scaling-limit principal symbols
fn c06_jmap_agreement() -> Result<String, String> {
    let mut worst = 0.0f64;
    for s in symbol_battery() {
        let from_limits = ClassicalSymbol::new(s.base.clone());
        for face in [Face::E, Face::Psi, Face::PsiE] {
            let d_closed = jmap(&s, face).map_err(err_str)?;
            let d_limit = jmap(&from_limits, face).map_err(err_str)?;
            for (a, b) in d_closed
                .values
                .iter()
                .zip(&d_limit.values)
                .chain(d_closed.corner.iter().zip(&d_limit.corner))
            {
                worst = worst.max((a - b).norm());
            }
        }
        // the two corner restrictions of one symbol must agree as well
        let c = corner_compatibility_check(
            &jmap(&s, Face::E).map_err(err_str)?,
            &jmap(&s, Face::Psi).map_err(err_str)?,
        )
        .map_err(err_str)?;
        worst = worst.max(c);
    }
    if worst > 1e-6 {
        return fail(format!("sup deviation {worst:.3e} (tol 1e-6)"));
    }
    Ok(format!("sup deviation {worst:.1e} over the battery"))
}

// criterion 7 — Egorov closed forms at N = 512 and N = 1024
fn c07_egorov_suite() -> Result<String, String> {
    let p_x_dep = ClassicalSymbol::new(SymbolExpr::new(
        1,
        BiOrder::new(0, 1),
        add(jap_xi(), mul(coord_x(0), inv(jap_x()))),
    ));
    let p_weight = ClassicalSymbol::weight(1, BiOrder::new(0, 1), 0);
    for (n, tol) in [(512usize, 1e-3), (1024, 1e-4)] {
        let spec = GridSpec::new(1, 20.0, n);
        let cases = [
            (FioFamily::Translation { shift: 4.0 * spec.dx() }, &p_x_dep, "translation"),
            (FioFamily::Dilation { log2: 1 }, &p_weight, "dilation"),
        ];
        for (fam, p, label) in cases {
            let rep = egorov_check(
                &fam.handle(spec),
                &fam.inverse().handle(spec),
                p,
                &fam.face_map(),
                tol,
            )
            .map_err(err_str)?;
            if !rep.pass {
                return fail(format!(
                    "{label} at N={n}: full {:.3e}, principal {:.3e} (tol {tol:.0e})",
                    rep.full_residual, rep.principal_residual
                ));
            }
        }
    }
    Ok("translation and dilation pullbacks at 1e-3 (N=512) and 1e-4 (N=1024)".into())
}

// criterion 8 — Fourier filtration swap vs translation identity pattern
fn c08_filtration_patterns() -> Result<String, String> {
    let battery = default_probe_battery();
    let spec = GridSpec::self_dual(2048);
    let rep = order_preservation_probe(&fourier_op(&spec), &inverse_fourier_op(&spec), &battery)
        .map_err(err_str)?;
    if !rep.swaps {
        return fail(format!("Fourier pattern is not the exact transpose: {:?}", rep.entries));
    }
    let spec = GridSpec::self_dual(512);
    let fam = FioFamily::Translation { shift: 16.0 * spec.dx() };
    let fwd = fam.handle(spec).as_operator().map_err(err_str)?;
    let inv_op = fam.inverse().handle(spec).as_operator().map_err(err_str)?;
    let rep = order_preservation_probe(&fwd, &inv_op, &battery).map_err(err_str)?;
    if !rep.preserves {
        return fail(format!("translation pattern is not the identity: {:?}", rep.entries));
    }
    Ok("ℱ swaps (m_e, m_ψ), translation preserves all nine orders".into())
}

// criterion 9 — phase compatibility for four SCT families
fn c09_phase_compatibility() -> Result<String, String> {
    let graphs = [
        ("identity", GraphData::identity(1)),
        ("dilation", GraphData::dilation(1)),
        ("linear-L", GraphData::linear(&[vec![2.0, 1.0], vec![0.0, 1.0]])),
        ("e-shear", GraphData::e_shear(&[vec![0.4]])),
        ("psi-shear", GraphData::psi_shear(&[vec![0.4]])),
    ];
    for (label, g) in graphs {
        let gen = generating_functions(&g).map_err(|e| format!("{label}: {e}"))?;
        if gen.relation_residual > 1e-8 {
            return fail(format!(
                "{label}: gradient relations at {:.3e}",
                gen.relation_residual
            ));
        }
        let (_phases, compat) = phase_from_sct(&gen).map_err(|e| format!("{label}: {e}"))?;
        if compat.samples < 100 {
            return fail(format!("{label}: only {} graph samples", compat.samples));
        }
        if !compat.pass || compat.compatibility_residual > 1e-8 {
            return fail(format!(
                "{label}: σ_ψ(φ_e) − σ_e(φ_ψ) at {:.3e}",
                compat.compatibility_residual
            ));
        }
    }
    Ok("gradient relations and σ_ψ(φ_e) = σ_e(φ_ψ) at 1e-8, five families".into())
}

// criterion 10 — Hamiltonian reconstruction round trips
fn c10_hamiltonian_round_trip() -> Result<String, String> {
    let dim = 2;
    let field = |c: &expr::Expr| -> (Vec<expr::Expr>, Vec<expr::Expr>) {
        (
            (0..dim).map(|k| diff(c, Var::Xi(k))).collect(),
            (0..dim).map(|k| neg(diff(c, Var::X(k)))).collect(),
        )
    };
    let points = [([1.0, 2.0], [3.0, -1.0]), ([-2.0, 0.5], [1.0, 1.0]), ([0.8, -1.1], [-2.0, 0.7])];
    // the (x·ξ) case has ξ-degree 0, so the ξ-side Euler identity is
    // degenerate and only the e-face reconstruction applies
    let cases: [(expr::Expr, f64, Vec<Face>, &str); 2] = [
        (
            mul(inv(abs_x()), inv(abs_xi())),
            1e-12,
            vec![Face::E, Face::Psi],
            "|x|⁻¹|ξ|⁻¹",
        ),
        (
            mul(
                sgcalc::symbols::x_dot_xi(dim),
                mul(int_pow(abs_x(), -2), inv(abs_xi())),
            ),
            1e-8,
            vec![Face::E],
            "(x·ξ)|x|⁻²|ξ|⁻¹",
        ),
    ];
    for (c, tol, faces, label) in &cases {
        let (g, r) = field(c);
        for &face in faces {
            let rec = hamiltonian_from_field(dim, &g, &r, 2, face)
                .map_err(|e| format!("{label}, {face:?}: {e}"))?;
            for (x, xi) in &points {
                let want = expr::eval(c, EvalPoint::symbol(x, xi));
                let got = rec.eval(x, xi);
                if (got - want).norm() > *tol {
                    return fail(format!("{label}, {face:?} at {x:?}: {got} vs {want}"));
                }
            }
        }
    }
    Ok("Euler identities recover both Hamiltonians on their admissible faces".into())
}

// criterion 11 — radial-limit decomposition of 3 + exp(−|z|²)
fn c11_radial_decomposition() -> Result<String, String> {
    let z_sq = add(int_pow(abs_x(), 2), int_pow(abs_xi(), 2));
    let e = SymbolExpr::new(1, BiOrder::ZERO, add(cst(3.0), exp_of(neg(z_sq))));
    let split = radial_limit_decomposition(&e, 1e-8).map_err(err_str)?;
    if (split.c() - Complex64::new(3.0, 0.0)).norm() > 1e-8 {
        return fail(format!("c = {}", split.c()));
    }
    if split.spread > 1e-8 {
        return fail(format!("direction spread {:.3e}", split.spread));
    }
    if split.decay_exponent < 6.0 {
        return fail(format!("decay exponent {:.2}", split.decay_exponent));
    }
    Ok(format!(
        "c = 3, spread {:.1e}, decay exponent {:.1}",
        split.spread, split.decay_exponent
    ))
}

// criterion 12 — fixed-seed cross-module invariant sweep + runtime budget
fn c12_invariant_sweep(started: Instant) -> Result<String, String> {
    // symbols: the weight battery passes its own estimate
    for s in symbol_battery() {
        let rep = check_sg_estimate(&s.base, 2, &DyadicGrid::default());
        if !rep.pass {
            return fail(format!("estimate fails for order {:?}", s.order()));
        }
    }
    // psdo: recovery of a quantized symbol at seeded snapped samples
    let spec = GridSpec::default_1d();
    let s = SymbolExpr::weight(1, BiOrder::new(1, 1));
    let op = quantize(&s, &spec).map_err(err_str)?;
    let mut rng = Lcg::new(0x5eed);
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..5)
        .map(|_| (vec![rng.uniform(-8.0, 8.0)], vec![rng.uniform(-8.0, 8.0)]))
        .collect();
    let rec = recover_symbol(&op, &samples).map_err(err_str)?;
    for ((x, xi), got) in samples.iter().zip(rec) {
        let sx = (x[0] / spec.dx()).round() * spec.dx();
        let sxi = (xi[0] / spec.dxi()).round() * spec.dxi();
        let want = s.eval(&[sx], &[sxi]);
        if (got - want).norm() > 1e-8 {
            return fail(format!("recovery at ({sx},{sxi}): {got} vs {want}"));
        }
    }
    // scatgeo: identity and dilation SCTs validate
    for spec_sct in [SCTSpec::identity(1), SCTSpec::dilation(1)] {
        let rep = validate_sct(&spec_sct).map_err(err_str)?;
        if !rep.pass {
            return fail(format!("SCT validation fails: {rep:?}"));
        }
    }
    // fio: the translation adjoint is the inverse translation on the grid
    let fam = FioFamily::Translation { shift: 8.0 * spec.dx() };
    let adj = fio_adjoint(&fam.handle(spec));
    let inv_op = fam.inverse().handle(spec).as_operator().map_err(err_str)?;
    let res = battery_residual(
        &adj.as_operator().map_err(err_str)?,
        &inv_op,
        &test_battery(&spec),
    );
    if res > 1e-8 {
        return fail(format!("adjoint ≠ inverse translation: {res:.3e}"));
    }
    let elapsed = started.elapsed();
    if elapsed.as_secs() >= 600 {
        return fail(format!("suite took {elapsed:.1?} (budget 10 min)"));
    }
    Ok(format!("all module sweeps green, total {elapsed:.1?}"))
}

fn main() {
    let started = Instant::now();
    let criteria: Vec<(&str, Box<dyn Fn() -> Result<String, String>>)> = vec![
        ("leibniz oracle convergence", Box::new(c01_leibniz_convergence)),
        ("exact two-term identities", Box::new(c02_exact_identities)),
        ("parametrix residual order", Box::new(c03_parametrix_orders)),
        ("principal bi-derivation", Box::new(c04_principal_bi_derivation)),
        ("bracket order drop", Box::new(c05_bracket_closed_form)),
        ("jmap/principal agreement", Box::new(c06_jmap_agreement)),
        ("Egorov closed forms", Box::new(c07_egorov_suite)),
        ("Fourier filtration swap", Box::new(c08_filtration_patterns)),
        ("SCT phase compatibility", Box::new(c09_phase_compatibility)),
        ("Hamiltonian round trip", Box::new(c10_hamiltonian_round_trip)),
        ("radial-limit decomposition", Box::new(c11_radial_decomposition)),
        ("invariant sweep + budget", Box::new(move || c12_invariant_sweep(started))),
    ];
    let mut failures = 0usize;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| p.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "panic".into());
                Err(format!("panicked: {msg}"))
            });
        let dur = t.elapsed();
        match outcome {
            Ok(detail) => {
                println!("criterion {:2} PASS  {name} — {detail} [{dur:.1?}]", i + 1)
            }
            Err(msg) => {
                failures += 1;
                println!("criterion {:2} FAIL  {name} — {msg} [{dur:.1?}]", i + 1)
            }
        }
    }
    if failures > 0 {
        println!("{failures} of 12 criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed in {:.1?}", started.elapsed());
}
