//! Dyadic sample grids, sphere directions, and deterministic (bit-reproducible)
//! batch evaluation with an optional data-parallel backend.

/// Unit directions on S^{n-1}: {±1} for n=1, `count` uniform points for n=2.
pub fn sphere_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => panic!("only n ∈ {{1,2}} supported"),
    }
}

/// Dyadic radii 2^0 .. 2^k_max.
pub fn dyadic_radii(k_max: u32) -> Vec<f64> {
    (0..=k_max).map(|k| (1u64 << k) as f64).collect()
}

/// Points r·ω over dyadic radii and sphere directions.
pub fn dyadic_points(dim: usize, k_max: u32, dirs: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for r in dyadic_radii(k_max) {
        for w in sphere_directions(dim, dirs) {
            pts.push(w.iter().map(|c| c * r).collect());
        }
    }
    pts
}

/// Deterministic map over an index range. With the `parallel` feature the
/// work is distributed over threads but collected in index order, so results
/// are bit-identical to the sequential path.
#[cfg(feature = "parallel")]
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Configure the global thread pool from SGCALC_THREADS, once.
#[cfg(feature = "parallel")]
pub fn init_threads() {
    use std::sync::Once;
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        if let Ok(v) = std::env::var("SGCALC_THREADS") {
            if let Ok(k) = v.parse::<usize>() {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
        }
    });
}

#[cfg(not(feature = "parallel"))]
pub fn init_threads() {}

/// Small deterministic LCG for reproducible sample points in tests and
/// reports (no external RNG state).
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407))
    }
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0
    }
    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + u * (hi - lo)
    }
}
