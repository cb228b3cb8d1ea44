//! Gauss–Legendre quadrature and deterministic summation.
//!
//! All integrals in this crate are assembled from composite Gauss–Legendre
//! panels. Panel counts are chosen from a frequency estimate so that the
//! integrand's phase advances at most ~π per panel; at that density a fixed
//! panel order (16–32) converges factorially and panel refinement is only
//! needed as an a-posteriori error probe.
//!
//! Nodes are computed by Newton iteration on the Legendre three-term
//! recurrence, seeded with the Chebyshev angles `cos(π(k - 1/4)/(n + 1/2))`;
//! this converges in 3–4 steps to full double accuracy for every order used
//! here and keeps the crate free of a polynomial-roots dependency.
//!
//! Sums that must be bitwise reproducible use [`pairwise_sum`]: a fixed-shape
//! balanced reduction whose result is independent of chunking decisions made
//! by callers (and, incidentally, carries ~log n instead of ~n rounding
//! growth).

use num_complex::Complex64;

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Build the n-point rule. Nodes are in increasing order; the rule is
    /// symmetric to the last bit because only the nonnegative half is solved.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be >= 1");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for k in 0..m {
            // Seed with the Chebyshev angle for the (k+1)-th largest root.
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_pd(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    let (p, d) = legendre_pd(n, x);
                    dp = d;
                    x -= p / d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[n - 1 - k] = x;
            weights[n - 1 - k] = w;
            nodes[k] = -x;
            weights[k] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Map the rule onto [a, b]; yields (node, weight) pairs.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

/// Evaluate P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre_pd(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Panel edges for a composite rule on [a, b] with `npanels` equal panels.
pub fn panel_edges(a: f64, b: f64, npanels: usize) -> Vec<f64> {
    assert!(npanels >= 1);
    (0..=npanels)
        .map(|i| a + (b - a) * i as f64 / npanels as f64)
        .collect()
}

/// Panel count so each panel spans at most ~π of phase for a total phase
/// excursion `freq * (b - a)` (freq in radians per unit length), with a floor.
pub fn panels_for_frequency(freq: f64, a: f64, b: f64, min_panels: usize) -> usize {
    let total = freq.abs() * (b - a).abs();
    min_panels.max((total / std::f64::consts::PI) as usize + 1)
}

/// Composite Gauss–Legendre integral of a real-valued integrand.
pub fn integrate(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    npanels: usize,
    mut f: impl FnMut(f64) -> f64,
) -> f64 {
    let edges = panel_edges(a, b, npanels);
    let mut terms = Vec::with_capacity(npanels * rule.len());
    for w in edges.windows(2) {
        for (x, wt) in rule.mapped(w[0], w[1]) {
            terms.push(wt * f(x));
        }
    }
    pairwise_sum(&terms)
}

/// Composite Gauss–Legendre integral of a complex-valued integrand.
pub fn integrate_complex(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    npanels: usize,
    mut f: impl FnMut(f64) -> Complex64,
) -> Complex64 {
    let edges = panel_edges(a, b, npanels);
    let mut terms = Vec::with_capacity(npanels * rule.len());
    for w in edges.windows(2) {
        for (x, wt) in rule.mapped(w[0], w[1]) {
            terms.push(wt * f(x));
        }
    }
    pairwise_sum_complex(&terms)
}

/// Balanced pairwise sum; deterministic for a given slice regardless of how
/// the caller produced it.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    match terms.len() {
        0 => 0.0,
        1 => terms[0],
        2 => terms[0] + terms[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
        }
    }
}

/// Complex counterpart of [`pairwise_sum`].
pub fn pairwise_sum_complex(terms: &[Complex64]) -> Complex64 {
    match terms.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => terms[0],
        2 => terms[0] + terms[1],
        n => {
            let mid = n / 2;
            pairwise_sum_complex(&terms[..mid]) + pairwise_sum_complex(&terms[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_nodes_match_references() {
        let g2 = GaussLegendre::new(2);
        assert!((g2.nodes[1] - 1.0 / 3.0f64.sqrt()).abs() < 1e-15);
        assert!((g2.weights[0] - 1.0).abs() < 1e-15);
        let g3 = GaussLegendre::new(3);
        assert!((g3.nodes[2] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((g3.weights[1] - 8.0 / 9.0).abs() < 1e-15);
        assert_eq!(g3.nodes[1], 0.0);
        let g5 = GaussLegendre::new(5);
        // largest node/weight of the 5-point rule
        assert!((g5.nodes[4] - 0.906179845938664).abs() < 1e-14);
        assert!((g5.weights[4] - 0.236926885056189).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 7, 16, 24, 32, 48, 64] {
            let g = GaussLegendre::new(n);
            let s: f64 = pairwise_sum(&g.weights);
            assert!((s - 2.0).abs() < 1e-13, "order {n}: weight sum {s}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        // n-point rule is exact through degree 2n-1.
        for n in [4usize, 9, 16] {
            let g = GaussLegendre::new(n);
            let deg = 2 * n - 1;
            let num: f64 = g
                .nodes
                .iter()
                .zip(&g.weights)
                .map(|(&x, &w)| w * x.powi(deg as i32 - 1))
                .sum();
            // integral of x^(deg-1) over [-1,1]; deg-1 is even
            let exact = 2.0 / deg as f64;
            assert!((num - exact).abs() < 1e-12, "order {n}");
        }
    }

    #[test]
    fn oscillatory_integral_converges() {
        // ∫_0^1 cos(40 x) dx = sin(40)/40
        let g = GaussLegendre::new(16);
        let np = panels_for_frequency(40.0, 0.0, 1.0, 1);
        let v = integrate(&g, 0.0, 1.0, np, |x| (40.0 * x).cos());
        assert!((v - (40.0f64).sin() / 40.0).abs() < 1e-13);
        // complex: ∫_0^1 e^{i 60 x} dx
        let v = integrate_complex(&g, 0.0, 1.0, panels_for_frequency(60.0, 0.0, 1.0, 1), |x| {
            Complex64::new(0.0, 60.0 * x).exp()
        });
        let exact = (Complex64::new(0.0, 60.0).exp() - 1.0) / Complex64::new(0.0, 60.0);
        assert!((v - exact).norm() < 1e-13);
    }

    #[test]
    fn pairwise_sum_is_deterministic_and_accurate() {
        // same slice, different construction paths: identical bits
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 2654435761u64 as usize) % 997) as f64 * 1e-3 - 0.25).collect();
        let a = pairwise_sum(&xs);
        let ys = xs.clone();
        let b = pairwise_sum(&ys);
        assert_eq!(a.to_bits(), b.to_bits());
        // exact cancellation of an ill-conditioned alternating sum: each
        // adjacent pair sums to zero, and the balanced tree keeps the pairs
        // adjacent, so the result is exactly 0 rather than O(n·eps·1e8)
        let mut terms = Vec::new();
        for i in 0..20000 {
            terms.push(if i % 2 == 0 { 1e8 + i as f64 } else { -(1e8 + i as f64 - 1.0) });
        }
        let s = pairwise_sum(&terms);
        assert!(s.abs() < 1e-6, "got {s}");
    }
}
