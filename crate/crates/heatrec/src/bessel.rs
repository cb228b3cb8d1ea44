//! Bessel functions J₀ and J₁ on the nonnegative real axis.
//!
//! The surface measure of the sphere |ξ| = r against a plane wave e^{iη·ξ}
//! reduces to `(2π)^{n/2} r^{n/2} |η|^{-(n-2)/2} J_{(n-2)/2}(|η| r)`; for
//! n = 1, 3 the half-integer Bessel functions collapse to cosine and sinc, and
//! only n = 2 needs a genuine J₀ (J₁ appears when differentiating the radial
//! reduction, J₀' = -J₁).
//!
//! Two regimes, both evaluated from the defining expansions rather than tabled
//! minimax fits:
//!
//! * `x ≤ 14`: the ascending power series. Its largest term at x = 14 is
//!   ~2.7e4, so about 4.5 digits cancel and the result is still good to
//!   ~5e-12 in doubles.
//! * `x > 14`: the Hankel phase–amplitude form
//!   `J_ν(x) = √(2/(πx)) [P cos ω - Q sin ω]`, `ω = x - νπ/2 - π/4`, with the
//!   asymptotic coefficients generated by the recurrence
//!   `a_k = a_{k-1} (4ν² - (2k-1)²)/(8k)`. Truncated at 18 terms the error at
//!   x = 14 is ~1e-12 and falls rapidly beyond.
//!
//! The crossover sits at 14, not at the conventional 8, because the optimally
//! truncated asymptotic series bottoms out near `e^{-2x}` — about 1e-7 at
//! x = 8, far short of the 1e-10 target this crate validates against.

/// J₀(x) for x ≥ 0, absolute error ≤ 1e-10 on [0, 50] (validated in tests
/// against a high-order series oracle; actual error is ~1e-12).
pub fn j0(x: f64) -> f64 {
    jn(0, x)
}

/// J₁(x) for x ≥ 0, same accuracy contract as [`j0`].
pub fn j1(x: f64) -> f64 {
    jn(1, x)
}

/// First positive zero of J₀.
pub const J0_FIRST_ZERO: f64 = 2.404825557695773;

const SWITCH: f64 = 14.0;

fn jn(nu: u32, x: f64) -> f64 {
    assert!(x >= 0.0 && x.is_finite(), "bessel argument must be finite and >= 0");
    if x <= SWITCH {
        series(nu, x)
    } else {
        hankel(nu, x)
    }
}

/// Ascending series Σ_k (-1)^k (x/2)^{2k+ν} / (k! (k+ν)!).
fn series(nu: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if nu == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    for k in 1..60 {
        let kf = k as f64;
        term *= -q / (kf * (kf + nu as f64));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-3) {
            break;
        }
    }
    sum
}

/// Hankel asymptotic form, 18 coefficient terms.
fn hankel(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0; // a_k / x^k, with alternating sign folded in below
    let xi = 1.0 / x;
    for k in 0u32..18 {
        let kf = k as f64;
        if k > 0 {
            a *= (mu - (2.0 * kf - 1.0) * (2.0 * kf - 1.0)) / (8.0 * kf) * xi;
        }
        let signed = if (k / 2) % 2 == 0 { a } else { -a };
        if k % 2 == 0 {
            p += signed;
        } else {
            q += signed;
        }
    }
    let omega = x - (nu as f64) * std::f64::consts::FRAC_PI_2 - std::f64::consts::FRAC_PI_4;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * omega.cos() - q * omega.sin())
}
