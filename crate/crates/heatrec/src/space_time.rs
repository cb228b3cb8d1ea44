//! Space-time vector algebra, probe directions, the complex frequency `z`, and
//! the phase exponents shared by every other module.
//!
//! A probe is a speed `c > 0` together with a spatial unit vector `ω` (and, for
//! n ≥ 2, an orthogonal unit vector `ω⊥`). It induces the space-time direction
//!
//! ```text
//! ω(c) = (c ω, -1) / √(1+c²) ∈ S^n
//! ```
//!
//! and, for `c²τ > 1`, the complex frequency
//!
//! ```text
//! z = cτ (ω + i √(1 - 1/(c²τ)) ω⊥)        (n = 2, 3)
//! z = cτ (1 + i √(1 - 1/(c²τ))) ω,  ω = ±1  (n = 1)
//! ```
//!
//! Both branches satisfy `Re(z·z) = τ` (unconjugated bilinear product), which
//! gives the key identity
//!
//! ```text
//! Re{x·z - t(z·z)} = τ √(1+c²) (x,t)ᵀ·ω(c) .
//! ```
//!
//! The right-hand side changes sign across the hyperplane `(x,t)ᵀ·ω(c) = const`,
//! so exponentials of the phase reach `e^{±τ·O(1)}` and are materialized only as
//! [`PhasedComplex`] values (log-magnitude plus argument).

use num_complex::Complex64;
use thiserror::Error;

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Errors from probe and frequency construction.
#[derive(Debug, Error, PartialEq)]
pub enum SpaceTimeError {
    #[error("spatial dimension {0} not in 1..=3")]
    BadDimension(usize),
    #[error("direction vector has (near-)zero length")]
    ZeroVector,
    #[error("omega_perp is required for n >= 2")]
    MissingPerp,
    #[error("omega_perp is not orthogonal to omega")]
    NotOrthogonal,
    #[error("probe speed must be positive, got {0}")]
    BadSpeed(f64),
    #[error("c^2 tau = {0} must exceed 1")]
    TauTooSmall(f64),
}

/// A spatial vector in dimension n ∈ {1,2,3}; unused trailing components are 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialVec {
    comps: [f64; MAX_DIM],
    dim: usize,
}

impl SpatialVec {
    pub fn new(components: &[f64]) -> Result<Self, SpaceTimeError> {
        let dim = components.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(SpaceTimeError::BadDimension(dim));
        }
        let mut comps = [0.0; MAX_DIM];
        comps[..dim].copy_from_slice(components);
        Ok(Self { comps, dim })
    }

    /// 1-dimensional vector (a signed scalar).
    pub fn scalar(x: f64) -> Self {
        Self { comps: [x, 0.0, 0.0], dim: 1 }
    }

    /// Zero vector of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        debug_assert!(dim >= 1 && dim <= MAX_DIM);
        Self { comps: [0.0; MAX_DIM], dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Overwrite component k.
    pub fn set(&mut self, k: usize, v: f64) {
        debug_assert!(k < self.dim);
        self.comps[k] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.comps[..self.dim]
    }

    pub fn dot(&self, other: &SpatialVec) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for c in &mut out.comps[..out.dim] {
            *c *= s;
        }
        out
    }

    pub fn add(&self, other: &SpatialVec) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for (c, o) in out.comps[..out.dim].iter_mut().zip(other.as_slice()) {
            *c += o;
        }
        out
    }

    pub fn sub(&self, other: &SpatialVec) -> Self {
        self.add(&other.scale(-1.0))
    }

    fn normalized(&self) -> Result<Self, SpaceTimeError> {
        let n = self.norm();
        if n < 1e-14 {
            return Err(SpaceTimeError::ZeroVector);
        }
        Ok(self.scale(1.0 / n))
    }
}

/// A point (x, t) in space-time R^n x R.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceTimePoint {
    pub x: SpatialVec,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: SpatialVec, t: f64) -> Self {
        Self { x, t }
    }

    /// 1-d convenience constructor.
    pub fn xt(x: f64, t: f64) -> Self {
        Self { x: SpatialVec::scalar(x), t }
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }
}

/// The probe (c, ω, ω⊥). For n = 1 there is no ω⊥ and ω ∈ {+1, -1}.
#[derive(Clone, Copy, Debug)]
pub struct ProbeDirection {
    c: f64,
    omega: SpatialVec,
    omega_perp: Option<SpatialVec>,
}

/// Build a probe, normalizing `omega` (and `omega_perp`) and enforcing
/// orthogonality. For n = 1, `omega` is coerced to ±1 by sign.
pub fn make_probe(
    c: f64,
    omega: SpatialVec,
    omega_perp: Option<SpatialVec>,
) -> Result<ProbeDirection, SpaceTimeError> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(SpaceTimeError::BadSpeed(c));
    }
    let n = omega.dim();
    if n == 1 {
        let s = omega.as_slice()[0];
        if s == 0.0 {
            return Err(SpaceTimeError::ZeroVector);
        }
        return Ok(ProbeDirection {
            c,
            omega: SpatialVec::scalar(s.signum()),
            omega_perp: None,
        });
    }
    let omega = omega.normalized()?;
    let perp = omega_perp.ok_or(SpaceTimeError::MissingPerp)?;
    if perp.dim() != n {
        return Err(SpaceTimeError::BadDimension(perp.dim()));
    }
    let perp = perp.normalized()?;
    if omega.dot(&perp).abs() > 1e-12 {
        return Err(SpaceTimeError::NotOrthogonal);
    }
    Ok(ProbeDirection { c, omega, omega_perp: Some(perp) })
}

impl ProbeDirection {
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn omega(&self) -> &SpatialVec {
        &self.omega
    }

    pub fn omega_perp(&self) -> Option<&SpatialVec> {
        self.omega_perp.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.omega.dim()
    }
}

/// The unit space-time direction ω(c) = (c ω, -1)/√(1+c²), returned as n+1
/// components (spatial part first, then the time component).
pub fn omega_c(probe: &ProbeDirection) -> Vec<f64> {
    let s = 1.0 / (1.0 + probe.c * probe.c).sqrt();
    let mut out: Vec<f64> =
        probe.omega.as_slice().iter().map(|&w| s * probe.c * w).collect();
    out.push(-s);
    out
}

/// The complex frequency z of the probe at parameter τ, with cached real and
/// imaginary parts a = Re z, b = Im z.
#[derive(Clone, Copy, Debug)]
pub struct ComplexFrequency {
    pub tau: f64,
    pub probe: ProbeDirection,
    pub a: SpatialVec,
    pub b: SpatialVec,
}

/// Construct z for `c²τ > 1`. The invariant `Re(z·z) = τ` holds exactly for
/// both branches: for n ≥ 2, `z·z = (cτ)²(1 - (1 - 1/(c²τ))) = τ` with zero
/// imaginary part; for n = 1, `Re z² = (cτ)²(1 - s²) = τ` with
/// `s = √(1 - 1/(c²τ))` and `Im z² = 2(cτ)²s`.
pub fn make_z(probe: &ProbeDirection, tau: f64) -> Result<ComplexFrequency, SpaceTimeError> {
    let c = probe.c;
    let c2tau = c * c * tau;
    if !(c2tau > 1.0) {
        return Err(SpaceTimeError::TauTooSmall(c2tau));
    }
    let s = (1.0 - 1.0 / c2tau).sqrt();
    let (a, b) = match probe.omega_perp {
        None => (probe.omega.scale(c * tau), probe.omega.scale(c * tau * s)),
        Some(perp) => (probe.omega.scale(c * tau), perp.scale(c * tau * s)),
    };
    Ok(ComplexFrequency { tau, probe: *probe, a, b })
}

impl ComplexFrequency {
    /// Assemble a frequency directly from its real and imaginary parts,
    /// bypassing the probe parametrization (so `Re(z·z) = τ` is *not*
    /// enforced). Used by oracles and kernel tests that exercise frequencies
    /// like `z = i·b` outside the probe family; the synthesized probe carries
    /// `c = 1` and the direction of `b` and should not be consulted.
    pub fn from_parts(a: SpatialVec, b: SpatialVec, tau: f64) -> Result<Self, SpaceTimeError> {
        if a.dim() != b.dim() {
            return Err(SpaceTimeError::BadDimension(b.dim()));
        }
        if b.norm() < 1e-300 {
            return Err(SpaceTimeError::ZeroVector);
        }
        let probe = if a.dim() == 1 {
            make_probe(1.0, SpatialVec::scalar(b.as_slice()[0].signum()), None)?
        } else {
            let dir = b.normalized()?;
            let d = dir.as_slice();
            // any unit vector orthogonal to dir
            let perp = if d[0].abs() <= 0.9 {
                SpatialVec::new(&{
                    let mut v = vec![0.0; a.dim()];
                    v[0] = 1.0;
                    v
                })
                .unwrap()
            } else {
                SpatialVec::new(&{
                    let mut v = vec![0.0; a.dim()];
                    v[1] = 1.0;
                    v
                })
                .unwrap()
            };
            let proj = perp.sub(&dir.scale(perp.dot(&dir)));
            make_probe(1.0, dir, Some(proj))?
        };
        Ok(Self { tau, probe, a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// The bilinear square z·z (unconjugated).
    pub fn z_dot_z(&self) -> Complex64 {
        let re = self.a.dot(&self.a) - self.b.dot(&self.b);
        let im = 2.0 * self.a.dot(&self.b);
        Complex64::new(re, im)
    }

    /// |Im z|.
    pub fn b_norm(&self) -> f64 {
        self.b.norm()
    }
}

/// The phase exponent Φ(p) = x·z - t (z·z). Its real part equals
/// `τ √(1+c²) (x,t)ᵀ·ω(c)`.
pub fn phase_exponent(z: &ComplexFrequency, p: &SpaceTimePoint) -> Complex64 {
    let xa = p.x.dot(&z.a);
    let xb = p.x.dot(&z.b);
    Complex64::new(xa, xb) - Complex64::new(p.t, 0.0) * z.z_dot_z()
}

/// Signed distance (in ω(c) level units) of p below the target's hyperplane:
/// `(x0,t0)ᵀ·ω(c) - (x,t)ᵀ·ω(c)`. Positive means p lies on the decaying
/// ("good") side of the probe phase.
pub fn halfspace_margin(
    probe: &ProbeDirection,
    target: &SpaceTimePoint,
    p: &SpaceTimePoint,
) -> f64 {
    let w = omega_c(probe);
    let level = |q: &SpaceTimePoint| -> f64 {
        q.x.as_slice().iter().zip(&w).map(|(x, wc)| x * wc).sum::<f64>()
            + q.t * w[w.len() - 1]
    };
    level(target) - level(p)
}

/// A complex scalar stored as (log-magnitude, argument) so that factors like
/// `e^{±τ√(1+c²)·margin}` never overflow. The zero state is `log_mag = -∞`.
///
/// Sums factor out the larger magnitude; products and real-exponent scalings
/// never leave the log domain.
#[derive(Clone, Copy, Debug)]
pub struct PhasedComplex {
    pub log_mag: f64,
    pub arg: f64,
}

impl PhasedComplex {
    pub const ZERO: PhasedComplex = PhasedComplex { log_mag: f64::NEG_INFINITY, arg: 0.0 };

    pub fn from_complex(v: Complex64) -> Self {
        if v.re == 0.0 && v.im == 0.0 {
            return Self::ZERO;
        }
        Self { log_mag: v.norm().ln(), arg: v.arg() }
    }

    pub fn from_real(v: f64) -> Self {
        Self::from_complex(Complex64::new(v, 0.0))
    }

    /// `e^{exponent} * factor` without forming the exponential.
    pub fn from_exp_mul(exponent: f64, factor: Complex64) -> Self {
        if factor.re == 0.0 && factor.im == 0.0 {
            return Self::ZERO;
        }
        Self { log_mag: exponent + factor.norm().ln(), arg: factor.arg() }
    }

    pub fn is_zero(&self) -> bool {
        self.log_mag == f64::NEG_INFINITY
    }

    /// Materialize as an ordinary complex number (may overflow to ±∞ if the
    /// log-magnitude exceeds ~709; callers scale first when that matters).
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        let m = self.log_mag.exp();
        Complex64::new(m * self.arg.cos(), m * self.arg.sin())
    }

    pub fn mul(&self, other: &PhasedComplex) -> PhasedComplex {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        Self::normalize(self.log_mag + other.log_mag, self.arg + other.arg)
    }

    pub fn mul_complex(&self, factor: Complex64) -> PhasedComplex {
        self.mul(&Self::from_complex(factor))
    }

    /// Multiply by `e^{exponent}` (real exponent).
    pub fn scale_exp(&self, exponent: f64) -> PhasedComplex {
        if self.is_zero() {
            return Self::ZERO;
        }
        Self { log_mag: self.log_mag + exponent, arg: self.arg }
    }

    pub fn neg(&self) -> PhasedComplex {
        if self.is_zero() {
            return Self::ZERO;
        }
        Self::normalize(self.log_mag, self.arg + std::f64::consts::PI)
    }

    /// Sum via max-exponent factoring: the larger magnitude is pulled out and
    /// the remainder evaluated in ordinary arithmetic.
    pub fn add(&self, other: &PhasedComplex) -> PhasedComplex {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let (big, small) = if self.log_mag >= other.log_mag { (self, other) } else { (other, self) };
        let rel = (small.log_mag - big.log_mag).exp();
        let sum = Complex64::new(big.arg.cos(), big.arg.sin())
            + rel * Complex64::new(small.arg.cos(), small.arg.sin());
        if sum.re == 0.0 && sum.im == 0.0 {
            return Self::ZERO;
        }
        Self { log_mag: big.log_mag + sum.norm().ln(), arg: sum.arg() }
    }

    fn normalize(log_mag: f64, arg: f64) -> PhasedComplex {
        let mut a = arg % std::f64::consts::TAU;
        if a > std::f64::consts::PI {
            a -= std::f64::consts::TAU;
        } else if a <= -std::f64::consts::PI {
            a += std::f64::consts::TAU;
        }
        Self { log_mag, arg: a }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe1(c: f64) -> ProbeDirection {
        make_probe(c, SpatialVec::scalar(1.0), None).unwrap()
    }

    #[test]
    fn omega_c_values() {
        // c=1, n=1: (1/sqrt2, -1/sqrt2)
        let w = omega_c(&probe1(1.0));
        assert!((w[0] - 0.7071068).abs() < 1e-7);
        assert!((w[1] + 0.7071068).abs() < 1e-7);
        // c=2, n=1: (2, -1)/sqrt5
        let w = omega_c(&probe1(2.0));
        assert!((w[0] - 0.8944272).abs() < 1e-7);
        assert!((w[1] + 0.4472136).abs() < 1e-7);
        // unit norm for a 2-d probe
        let p = make_probe(
            2.0,
            SpatialVec::new(&[1.0, 0.0]).unwrap(),
            Some(SpatialVec::new(&[0.0, 1.0]).unwrap()),
        )
        .unwrap();
        let w = omega_c(&p);
        let n: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn make_probe_rejects_degenerate() {
        assert!(make_probe(
            2.0,
            SpatialVec::new(&[1.0, 0.0]).unwrap(),
            Some(SpatialVec::new(&[1.0, 0.0]).unwrap()),
        )
        .is_err());
        assert!(make_probe(0.0, SpatialVec::scalar(1.0), None).is_err());
        assert!(make_probe(2.0, SpatialVec::new(&[1.0, 0.0]).unwrap(), None).is_err());
    }

    #[test]
    fn make_z_n1_example() {
        // c=1, tau=2: z = 2 + 2 sqrt(1/2) i = 2 + 1.4142136 i, Re z^2 = 2
        let z = make_z(&probe1(1.0), 2.0).unwrap();
        assert!((z.a.as_slice()[0] - 2.0).abs() < 1e-12);
        assert!((z.b.as_slice()[0] - 1.4142136).abs() < 1e-7);
        assert!((z.z_dot_z().re - 2.0).abs() < 1e-10);
    }

    #[test]
    fn make_z_n2_example() {
        // c=2, n=2, tau=1: z = (8, 6.9282032 i); Re(z.z) = 64 - 48 = 16... no:
        // the invariant is Re(z.z) = tau = 1? ctau=8 but tau=1: 64(1 - 3/4)=16.
        // Wait: c^2 tau = 4, s^2 = 1 - 1/4 = 3/4, |a|^2 = (c tau)^2 = 4... c*tau = 2.
        let p = make_probe(
            2.0,
            SpatialVec::new(&[1.0, 0.0]).unwrap(),
            Some(SpatialVec::new(&[0.0, 1.0]).unwrap()),
        )
        .unwrap();
        let z = make_z(&p, 1.0).unwrap();
        // c*tau = 2: a = (2, 0), b = (0, 2*sqrt(3)/2) = (0, 1.7320508)
        assert!((z.a.as_slice()[0] - 2.0).abs() < 1e-12);
        assert!((z.b.as_slice()[1] - 1.7320508).abs() < 1e-7);
        assert!((z.z_dot_z().re - 1.0).abs() < 1e-10);
        assert!(z.z_dot_z().im.abs() < 1e-10);
    }

    #[test]
    fn make_z_rejects_small_tau() {
        assert!(make_z(&probe1(1.0), 0.5).is_err());
    }

    #[test]
    fn re_zz_invariant_random() {
        // 1000 random samples across dimensions; Re(z.z) = tau to 1e-10 rel.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for _ in 0..1000 {
            let c = 0.5 + 3.0 * next();
            let tau = 1.5 / (c * c) + 50.0 * next();
            let n = 1 + (next() * 3.0) as usize;
            let probe = if n == 1 {
                probe1(c)
            } else {
                let th = std::f64::consts::TAU * next();
                let mut w = vec![th.cos(), th.sin(), 0.0];
                let mut wp = vec![-th.sin(), th.cos(), 0.0];
                w.truncate(n.max(2));
                wp.truncate(n.max(2));
                make_probe(c, SpatialVec::new(&w).unwrap(), Some(SpatialVec::new(&wp).unwrap()))
                    .unwrap()
            };
            let z = make_z(&probe, tau).unwrap();
            assert!((z.z_dot_z().re - tau).abs() <= 1e-10 * tau.max(1.0));
        }
    }

    #[test]
    fn phase_exponent_identity() {
        // (c=1, tau=2, n=1), p=(1,0): 2 + 1.4142136 i, Re = 2*sqrt2/sqrt2 = 2
        let z = make_z(&probe1(1.0), 2.0).unwrap();
        let ph = phase_exponent(&z, &SpaceTimePoint::xt(1.0, 0.0));
        assert!((ph.re - 2.0).abs() < 1e-10);
        assert!((ph.im - 1.4142136).abs() < 1e-7);
        // origin maps to 0
        let ph0 = phase_exponent(&z, &SpaceTimePoint::xt(0.0, 0.0));
        assert_eq!(ph0, Complex64::new(0.0, 0.0));
        // Re(phase) = tau sqrt(1+c^2) (x,t).omega(c) on random points
        let w = omega_c(z.probe.omega_perp().map(|_| unreachable!()).unwrap_or(&probe1(1.0)));
        for (x, t) in [(0.3, 0.9), (-1.2, 0.4), (2.0, -0.7)] {
            let p = SpaceTimePoint::xt(x, t);
            let lvl = x * w[0] + t * w[1];
            let expect = 2.0 * (2.0f64).sqrt() * lvl;
            let got = phase_exponent(&z, &p).re;
            assert!((got - expect).abs() <= 1e-10 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn margin_examples() {
        let probe = probe1(2.0);
        let target = SpaceTimePoint::xt(0.5, 0.5);
        assert_eq!(halfspace_margin(&probe, &target, &target), 0.0);
        // p = (0, t): margin = (0.5 + t)/sqrt5 >= 0.2236068
        for t in [0.0, 0.5, 2.0] {
            let m = halfspace_margin(&probe, &target, &SpaceTimePoint::xt(0.0, t));
            assert!((m - (0.5 + t) / 5.0f64.sqrt()).abs() < 1e-12);
            assert!(m >= 0.2236067);
        }
        // p = (1, 0): level_p - level_0 = (2 - 0) - (1 - 0.5) = 1.5 over sqrt5
        let m = halfspace_margin(&probe, &target, &SpaceTimePoint::xt(1.0, 0.0));
        assert!((m + 1.5 / 5.0f64.sqrt()).abs() < 1e-12);
        assert!((m + 0.6708204).abs() < 1e-7);
    }

    #[test]
    fn phased_complex_roundtrip_and_ops() {
        let a = PhasedComplex::from_complex(Complex64::new(3.0, -4.0));
        assert!((a.to_complex() - Complex64::new(3.0, -4.0)).norm() < 1e-12);
        // huge exponents survive products
        let big = PhasedComplex::from_exp_mul(5000.0, Complex64::new(1.0, 1.0));
        let small = PhasedComplex::from_exp_mul(-5000.0, Complex64::new(0.5, 0.0));
        let prod = big.mul(&small);
        assert!((prod.to_complex() - Complex64::new(0.5, 0.5) * 2.0f64.sqrt() / 2.0f64.sqrt()).norm() < 1e-10);
        // addition factors the max exponent
        let s = big.add(&big.neg());
        assert!(s.is_zero() || s.log_mag < big.log_mag - 30.0);
        let z = PhasedComplex::ZERO.add(&a);
        assert!((z.to_complex() - a.to_complex()).norm() < 1e-12);
    }
}
