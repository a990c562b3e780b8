//! Independent ground truth: closed-form kernels of the model geometries,
//! Gram-matrix kernels of radial weights by quadrature, exact Gaussian
//! moments, and the local reproducing test.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::asymptotics::ExpansionSymbol;
use crate::error::{Error, Result};
use crate::jet::{scalar_det, scalar_inverse, MultiIndex};
use crate::kahler::{fock_potential, fubini_study_potential, hyperbolic_potential, radial_polynomial_potential, PotentialJet};
use crate::quadrature::{adaptive, adaptive_complex, GaussLegendre};
use crate::scalar::{rat_to_f64, Coeff, Exact};

/// Quadrature controls for the numeric oracles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss–Legendre points per panel.
    pub nodes: usize,
    /// Largest monomial degree summed by the Gram kernel.
    pub max_degree: usize,
    /// Relative tolerance for norms, kernel tails and 2-D integrals.
    pub tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { nodes: 24, max_degree: 2000, tol: 1e-13 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.nodes < 2 {
            return Err(Error::PreconditionViolated("quadrature needs tol > 0 and at least two nodes".into()));
        }
        Ok(())
    }
}

/// `(k/π)^n`, the leading factor shared by every kernel formula here.
pub fn prefactor(k: f64, n: usize) -> f64 {
    (k / PI).powi(n as i32)
}

/// `(k/π)^n exp(k x·ȳ)`
pub fn fock_kernel(k: f64, x: &[Complex64], y: &[Complex64]) -> Complex64 {
    // Summed from the last coordinate down, the same order in which a
    // polarized jet visits its monomials.
    let mut s = Complex64::new(0.0, 0.0);
    for i in (0..x.len()).rev() {
        s += x[i] * y[i].conj();
    }
    prefactor(k, x.len()) * (s * k).exp()
}

/// `((k+1)/π)(1 + xȳ)^k`
pub fn fs_kernel(k: f64, x: Complex64, y: Complex64) -> Complex64 {
    (k + 1.0) / PI * (Complex64::new(1.0, 0.0) + x * y.conj()).powf(k)
}

/// `((k−1)/π)(1 − xȳ)^{−k}` on the unit disc.
pub fn hyperbolic_kernel(k: f64, x: Complex64, y: Complex64) -> Result<Complex64> {
    if k < 2.0 {
        return Err(Error::DomainError(format!("weight (1-|z|^2)^(k-2) needs k >= 2, got {k}")));
    }
    if x.norm() >= 1.0 || y.norm() >= 1.0 {
        return Err(Error::DomainError("points must lie in the open unit disc".into()));
    }
    Ok((k - 1.0) / PI * (Complex64::new(1.0, 0.0) - x * y.conj()).powf(-k))
}

/// `ln n!`
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `‖z^j‖² = π j!/k^{j+1}` for the weight `e^{−k|z|²}`.
pub fn fock_monomial_norm(k: f64, j: usize) -> f64 {
    (PI.ln() + ln_factorial(j) - (j as f64 + 1.0) * k.ln()).exp()
}

/// `‖z^j‖² = π j! (k−j)!/(k+1)!`, integer `k`, `j ≤ k`.
pub fn fs_monomial_norm(k: u32, j: u32) -> Result<f64> {
    if j > k {
        return Err(Error::NonIntegrableWeight(format!("z^{j} is not square integrable at k = {k}")));
    }
    let (k, j) = (k as usize, j as usize);
    Ok((PI.ln() + ln_factorial(j) + ln_factorial(k - j) - ln_factorial(k + 1)).exp())
}

/// `‖z^j‖² = π B(j+1, k−1) = π j!(k−2)!/(j+k−1)!` on the disc.
pub fn hyperbolic_monomial_norm(k: f64, j: usize) -> Result<f64> {
    if k <= 1.0 {
        return Err(Error::NonIntegrableWeight(format!("(1-t)^(k-2) is not integrable at k = {k}")));
    }
    let mut v = PI / (k - 1.0);
    for i in 1..=j {
        v *= i as f64 / (i as f64 + k - 1.0);
    }
    Ok(v)
}

/// A rotation-invariant potential `φ(t)`, `t = |z|²`.
#[derive(Clone, Debug, PartialEq)]
pub enum RadialProfile {
    /// `Σ_j c_j t^j`, `coeffs[0] = c_1`.
    Polynomial(Vec<f64>),
    /// `log(1 + t)`
    FubiniStudy,
    /// `−log(1 − t)`
    Hyperbolic,
}

impl RadialProfile {
    pub fn t_max(&self) -> f64 {
        match self {
            RadialProfile::Hyperbolic => 1.0,
            _ => f64::INFINITY,
        }
    }

    pub fn phi(&self, t: f64) -> f64 {
        match self {
            RadialProfile::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &cj| (acc + cj) * t),
            RadialProfile::FubiniStudy => t.ln_1p(),
            RadialProfile::Hyperbolic => -(-t).ln_1p(),
        }
    }

    pub fn dphi(&self, t: f64) -> f64 {
        match self {
            RadialProfile::Polynomial(c) => {
                c.iter().enumerate().rev().fold(0.0, |acc, (j, &cj)| acc * t + (j as f64 + 1.0) * cj)
            }
            RadialProfile::FubiniStudy => 1.0 / (1.0 + t),
            RadialProfile::Hyperbolic => 1.0 / (1.0 - t),
        }
    }

    /// `φ_{zz̄} = (t φ'(t))'`
    pub fn density(&self, t: f64) -> f64 {
        match self {
            RadialProfile::Polynomial(c) => {
                c.iter().enumerate().rev().fold(0.0, |acc, (j, &cj)| acc * t + ((j + 1) * (j + 1)) as f64 * cj)
            }
            RadialProfile::FubiniStudy => 1.0 / ((1.0 + t) * (1.0 + t)),
            RadialProfile::Hyperbolic => 1.0 / ((1.0 - t) * (1.0 - t)),
        }
    }

    fn dlog_density(&self, t: f64) -> f64 {
        match self {
            RadialProfile::Polynomial(c) => {
                let d = c
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (j, &cj)| acc * t + ((j + 1) * (j + 1) * j) as f64 * cj);
                d / self.density(t)
            }
            RadialProfile::FubiniStudy => -2.0 / (1.0 + t),
            RadialProfile::Hyperbolic => 2.0 / (1.0 - t),
        }
    }

    /// `log(t^j e^{−kφ(t)} φ_{zz̄}(t))`
    fn log_integrand(&self, j: usize, k: f64, t: f64) -> f64 {
        let lt = if j == 0 { 0.0 } else { j as f64 * t.ln() };
        match self {
            RadialProfile::Hyperbolic => {
                let e = k - 2.0;
                lt + if e == 0.0 { 0.0 } else { e * (-t).ln_1p() }
            }
            _ => lt - k * self.phi(t) + self.density(t).ln(),
        }
    }

    fn dlog_integrand(&self, j: usize, k: f64, t: f64) -> f64 {
        j as f64 / t - k * self.dphi(t) + self.dlog_density(t)
    }

    fn check(&self, k: f64, j: usize) -> Result<()> {
        match self {
            RadialProfile::Polynomial(c) => {
                let lead = c.iter().rev().find(|&&v| v != 0.0).copied().unwrap_or(0.0);
                if c.first().is_none_or(|&c1| c1 <= 0.0) || lead <= 0.0 || k <= 0.0 {
                    return Err(Error::NonIntegrableWeight("need c_1 > 0, positive leading coefficient, k > 0".into()));
                }
            }
            RadialProfile::FubiniStudy => {
                if j as f64 >= k + 1.0 {
                    return Err(Error::NonIntegrableWeight(format!("z^{j} is not square integrable at k = {k}")));
                }
            }
            RadialProfile::Hyperbolic => {
                if k <= 1.0 {
                    return Err(Error::NonIntegrableWeight(format!("(1-t)^(k-2) is not integrable at k = {k}")));
                }
            }
        }
        Ok(())
    }
}

/// `log ‖z^j‖²` with its relative error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate {
    pub log_value: f64,
    pub rel_error: f64,
}

impl NormEstimate {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// Integrand level (relative to its peak) below which a tail is cut off.
const TAIL_CUTOFF: f64 = 1e-22;

/// `‖z^j‖² = π ∫_0^{t_max} t^j e^{−kφ(t)} φ_{zz̄}(t) dt` by adaptive Gauss–Legendre,
/// with the integrand scaled by its peak so large `j` or `k` never overflow.
pub fn radial_monomial_norm(profile: &RadialProfile, k: f64, j: usize, spec: &QuadratureSpec) -> Result<NormEstimate> {
    spec.validate()?;
    profile.check(k, j)?;
    let t_max = profile.t_max();
    let df = |t: f64| profile.dlog_integrand(j, k, t);

    // The integrand is unimodal in t for every supported profile.
    let peak = if j == 0 && df(0.0) <= 0.0 {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = if t_max.is_finite() { t_max * (1.0 - 1e-15) } else { 1.0 };
        if t_max.is_finite() {
            if df(hi) >= 0.0 {
                lo = hi;
            }
        } else {
            while df(hi) > 0.0 {
                hi *= 2.0;
                if hi > 1e300 {
                    return Err(Error::NonIntegrableWeight("integrand has no maximum".into()));
                }
            }
        }
        while lo < hi && hi - lo > 1e-15 * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if df(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let f_peak = profile.log_integrand(j, k, peak);
    let g = |t: f64| {
        if t <= 0.0 && j > 0 {
            0.0
        } else {
            (profile.log_integrand(j, k, t) - f_peak).exp()
        }
    };

    let mut panels = Vec::new();
    if peak > 0.0 {
        let mut b = peak;
        loop {
            let a = 0.5 * b;
            if g(a) < TAIL_CUTOFF || a < peak * 1e-12 {
                panels.push((0.0, b));
                break;
            }
            panels.push((a, b));
            b = a;
        }
    }
    let tail;
    if t_max.is_finite() {
        let mut a = peak;
        while t_max - a > 1e-15 {
            let b = a + 0.5 * (t_max - a);
            panels.push((a, b));
            a = b;
            if g(b) < TAIL_CUTOFF {
                break;
            }
        }
        tail = g(a) * (t_max - a);
    } else {
        let mut a = peak;
        let mut h = peak.max(1.0 / k.max(1.0));
        loop {
            let b = a + h;
            panels.push((a, b));
            a = b;
            h *= 2.0;
            let d = df(b);
            if g(b) < TAIL_CUTOFF && d < 0.0 {
                tail = 2.0 * g(b) / d.abs();
                break;
            }
            if b > 1e300 {
                return Err(Error::TailNotConverged("radial integrand does not decay".into()));
            }
        }
    }

    let rule = GaussLegendre::new(spec.nodes);
    let rough: f64 = panels.iter().map(|&(a, b)| rule.integrate(a, b, g).abs()).sum();
    let mut value = 0.0;
    let mut error = tail;
    for &(a, b) in &panels {
        let est = adaptive(&rule, a, b, 0.1 * spec.tol * rough / panels.len() as f64, &g)?;
        value += est.value;
        error += est.error;
    }
    if !(value > 0.0) {
        return Err(Error::QuadratureNotConverged(format!("norm of z^{j} came out non-positive")));
    }
    Ok(NormEstimate { log_value: PI.ln() + f_peak + value.ln(), rel_error: error / value + 4.0 * f64::EPSILON })
}

/// Kernel value with an absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    pub error: f64,
    /// Monomials summed (zero for closed forms).
    pub terms: usize,
}

impl KernelValue {
    fn exact(value: Complex64) -> Self {
        KernelValue { value, error: 0.0, terms: 0 }
    }
}

/// `K(x, y) = Σ_j (xȳ)^j / ‖z^j‖²` with norms from [`radial_monomial_norm`].
pub fn radial_gram_kernel(
    spec: &QuadratureSpec,
    profile: &RadialProfile,
    k: f64,
    x: Complex64,
    y: Complex64,
) -> Result<KernelValue> {
    spec.validate()?;
    if x.norm_sqr() >= profile.t_max() || y.norm_sqr() >= profile.t_max() {
        return Err(Error::DomainError("points must lie inside the domain of the weight".into()));
    }
    let z = x * y.conj();
    let last = match profile {
        RadialProfile::FubiniStudy => spec.max_degree.min(k.floor() as usize),
        _ => spec.max_degree,
    };
    let norm0 = radial_monomial_norm(profile, k, 0, spec)?;
    let mut sum = Complex64::new((-norm0.log_value).exp(), 0.0);
    let mut error = sum.re * norm0.rel_error;
    if z.norm() == 0.0 {
        return Ok(KernelValue { value: sum, error, terms: 1 });
    }
    let (lz, phase) = (z.norm().ln(), z / z.norm());
    let mut prev = sum.re;
    for j in 1..=last {
        let nj = radial_monomial_norm(profile, k, j, spec)?;
        let mag = (j as f64 * lz - nj.log_value).exp();
        sum += phase.powu(j as u32) * mag;
        error += mag * nj.rel_error;
        let ratio = mag / prev;
        prev = mag;
        if ratio < 1.0 {
            let tail = mag * ratio / (1.0 - ratio);
            if tail <= spec.tol * sum.norm() {
                return Ok(KernelValue { value: sum, error: error + tail, terms: j + 1 });
            }
        }
    }
    if matches!(profile, RadialProfile::FubiniStudy) && last == k.floor() as usize {
        return Ok(KernelValue { value: sum, error, terms: last + 1 });
    }
    Err(Error::TailNotConverged(format!("{} monomials were not enough at |xy| = {:.3}", last + 1, z.norm())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Fock,
    FubiniStudy,
    Hyperbolic,
    RadialNumeric,
}

/// A model geometry with its potential, kernel oracle and domain.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelModel {
    pub kind: ModelKind,
    pub n: usize,
    /// `c_1, c_2, …` of a radial polynomial potential.
    pub radial: Vec<BigRational>,
    pub quad: QuadratureSpec,
}

impl KernelModel {
    pub fn fock(n: usize) -> Self {
        KernelModel { kind: ModelKind::Fock, n, radial: Vec::new(), quad: QuadratureSpec::default() }
    }

    pub fn fubini_study() -> Self {
        KernelModel { kind: ModelKind::FubiniStudy, n: 1, radial: Vec::new(), quad: QuadratureSpec::default() }
    }

    pub fn hyperbolic() -> Self {
        KernelModel { kind: ModelKind::Hyperbolic, n: 1, radial: Vec::new(), quad: QuadratureSpec::default() }
    }

    /// `φ = Σ_j c_j |z|^{2j}`, `coeffs[0] = c_1`.
    pub fn radial(coeffs: Vec<BigRational>) -> Self {
        KernelModel { kind: ModelKind::RadialNumeric, n: 1, radial: coeffs, quad: QuadratureSpec::default() }
    }

    /// `φ = |z|² + λ|z|⁴`
    pub fn quartic(lambda: BigRational) -> Self {
        Self::radial(vec![BigRational::from_integer(1.into()), lambda])
    }

    pub fn with_quadrature(mut self, quad: QuadratureSpec) -> Self {
        self.quad = quad;
        self
    }

    pub fn name(&self) -> String {
        match self.kind {
            ModelKind::Fock => format!("fock(n={})", self.n),
            ModelKind::FubiniStudy => "fubini_study".into(),
            ModelKind::Hyperbolic => "hyperbolic".into(),
            ModelKind::RadialNumeric => {
                let c: Vec<String> = self.radial.iter().map(|c| c.to_string()).collect();
                format!("radial[{}]", c.join(","))
            }
        }
    }

    /// Potential jet; series models are generated through degree `order`.
    pub fn potential<C: Coeff>(&self, order: u32) -> Result<PotentialJet<C>> {
        match self.kind {
            ModelKind::Fock => Ok(fock_potential(self.n)),
            ModelKind::FubiniStudy => fubini_study_potential(self.n, order),
            ModelKind::Hyperbolic => hyperbolic_potential(self.n, order),
            ModelKind::RadialNumeric => radial_polynomial_potential(&self.radial),
        }
    }

    pub fn profile(&self) -> Option<RadialProfile> {
        match self.kind {
            ModelKind::Fock if self.n == 1 => Some(RadialProfile::Polynomial(vec![1.0])),
            ModelKind::Fock => None,
            ModelKind::FubiniStudy => Some(RadialProfile::FubiniStudy),
            ModelKind::Hyperbolic => Some(RadialProfile::Hyperbolic),
            ModelKind::RadialNumeric => Some(RadialProfile::Polynomial(self.radial.iter().map(rat_to_f64).collect())),
        }
    }

    fn norm_sqr(&self, x: &[Complex64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::PreconditionViolated(format!("{} expects {} coordinates", self.name(), self.n)));
        }
        let t: f64 = x.iter().map(|c| c.norm_sqr()).sum();
        if self.kind == ModelKind::Hyperbolic && t >= 1.0 {
            return Err(Error::DomainError("points must lie in the open unit disc".into()));
        }
        Ok(t)
    }

    pub fn in_domain(&self, x: &[Complex64]) -> bool {
        self.norm_sqr(x).is_ok()
    }

    /// Closed-form `φ(x)`.
    pub fn phi(&self, x: &[Complex64]) -> Result<f64> {
        let t = self.norm_sqr(x)?;
        Ok(match self.profile() {
            Some(p) => p.phi(t),
            None => t,
        })
    }

    /// Closed-form `ψ(x, ȳ)` (principal logarithm for the log models).
    pub fn psi(&self, x: &[Complex64], y: &[Complex64]) -> Result<Complex64> {
        self.norm_sqr(x)?;
        self.norm_sqr(y)?;
        let s: Complex64 = x.iter().zip(y).map(|(a, b)| a * b.conj()).sum();
        let one = Complex64::new(1.0, 0.0);
        Ok(match self.kind {
            ModelKind::Fock => s,
            ModelKind::FubiniStudy => (one + s).ln(),
            ModelKind::Hyperbolic => -(one - s).ln(),
            ModelKind::RadialNumeric => {
                self.radial.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| (acc + rat_to_f64(c)) * s)
            }
        })
    }

    /// `det φ_{ij̄}(x)`, the density of the volume form against Lebesgue measure.
    pub fn volume_density(&self, x: &[Complex64]) -> Result<f64> {
        let t = self.norm_sqr(x)?;
        Ok(match self.profile() {
            Some(p) => p.density(t),
            None => 1.0,
        })
    }

    /// Reproducing kernel of `L²_hol(e^{−kφ} dV)`.
    pub fn kernel(&self, k: f64, x: &[Complex64], y: &[Complex64]) -> Result<KernelValue> {
        self.norm_sqr(x)?;
        self.norm_sqr(y)?;
        match self.kind {
            ModelKind::Fock => Ok(KernelValue::exact(fock_kernel(k, x, y))),
            ModelKind::FubiniStudy => Ok(KernelValue::exact(fs_kernel(k, x[0], y[0]))),
            ModelKind::Hyperbolic => hyperbolic_kernel(k, x[0], y[0]).map(KernelValue::exact),
            ModelKind::RadialNumeric => {
                let p = self.profile().expect("radial models have a profile");
                radial_gram_kernel(&self.quad, &p, k, x[0], y[0])
            }
        }
    }

    /// `‖z^j‖²_{kφ}` (one-dimensional models).
    pub fn monomial_norm(&self, k: f64, j: usize) -> Result<f64> {
        if self.n != 1 {
            return Err(Error::PreconditionViolated("monomial norms are provided for n = 1".into()));
        }
        match self.kind {
            ModelKind::Fock => Ok(fock_monomial_norm(k, j)),
            ModelKind::FubiniStudy => {
                if k.fract() != 0.0 {
                    return Err(Error::DomainError("the projective line needs integer k".into()));
                }
                fs_monomial_norm(k as u32, j as u32)
            }
            ModelKind::Hyperbolic => hyperbolic_monomial_norm(k, j),
            ModelKind::RadialNumeric => {
                radial_monomial_norm(self.profile().as_ref().expect("radial profile"), k, j, &self.quad).map(|e| e.value())
            }
        }
    }
}

/// `coeff · π^n`, an exact Gaussian moment.
#[derive(Clone, Debug, PartialEq)]
pub struct WickMoment {
    pub coeff: Exact,
    pub pi_power: usize,
}

impl WickMoment {
    pub fn to_f64(&self) -> Complex64 {
        self.coeff.to_c64() * PI.powi(self.pi_power as i32)
    }
}

/// `∫_{ℂⁿ} u^α ū^β e^{−k⟨Qu,u⟩} dV_E` with `⟨Qu,u⟩ = Σ Q_{ij} u_i ū_j`,
/// summed over Wick pairings `E[u_a ū_b] = (Q⁻¹)_{ba}/k`.
pub fn wick_moment(alpha: &MultiIndex, beta: &MultiIndex, q: &[Vec<Exact>], k: &BigRational) -> Result<WickMoment> {
    let n = q.len();
    if alpha.len() != n || beta.len() != n || q.iter().any(|r| r.len() != n) {
        return Err(Error::PreconditionViolated("multi-indices and Q must share the dimension".into()));
    }
    if !k.is_positive() {
        return Err(Error::PreconditionViolated("k must be positive".into()));
    }
    let hermitian = (0..n).all(|i| (0..n).all(|j| q[i][j] == q[j][i].conj()));
    if !hermitian {
        return Err(Error::NotPositiveDefinite);
    }
    for m in 1..=n {
        let minor: Vec<Vec<Exact>> = q[..m].iter().map(|r| r[..m].to_vec()).collect();
        if !scalar_det(&minor)?.is_positive_real(0.0) {
            return Err(Error::NotPositiveDefinite);
        }
    }
    let det = scalar_det(q)?;
    let kc = Exact::from_rational(k, &BigRational::zero());
    let mut z = Coeff::inv(&det).expect("positive determinant");
    for _ in 0..n {
        z = Coeff::div(&z, &kc).expect("k is nonzero");
    }
    if alpha.order() != beta.order() {
        return Ok(WickMoment { coeff: <Exact as Coeff>::zero(), pi_power: n });
    }
    let qinv = scalar_inverse(q)?;
    let expand = |m: &MultiIndex| -> Vec<usize> {
        m.entries().iter().enumerate().flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize)).collect()
    };
    let a = expand(alpha);
    let b = expand(beta);
    let nu = a.len();
    if nu > 20 {
        return Err(Error::PreconditionViolated("pairing sums are limited to 20 factors".into()));
    }
    // Permanent of C_{st} = (Q⁻¹)_{b_t a_s}/k by dynamic programming over subsets of b.
    let pair = |s: usize, t: usize| Coeff::div(&qinv[b[t]][a[s]], &kc).expect("k is nonzero");
    let mut dp = vec![<Exact as Coeff>::zero(); 1usize << nu];
    dp[0] = <Exact as Coeff>::one();
    for mask in 0..(1usize << nu) {
        if Coeff::is_zero(&dp[mask]) {
            continue;
        }
        let s = mask.count_ones() as usize;
        if s == nu {
            continue;
        }
        for t in 0..nu {
            if mask & (1 << t) == 0 {
                let add = dp[mask].mul(&pair(s, t));
                dp[mask | (1 << t)].add_assign(&add);
            }
        }
    }
    let perm = dp[(1usize << nu) - 1].clone();
    Ok(WickMoment { coeff: perm.mul(&z), pi_power: n })
}

/// Smooth radial cutoff: 1 up to `inner`, 0 from `outer` on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff { inner: 0.5, outer: 0.75 }
    }
}

impl Cutoff {
    /// `exp(1 − 1/(1 − s²))` with `s = (r − inner)/(outer − inner)`.
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.inner {
            return 1.0;
        }
        if r >= self.outer {
            return 0.0;
        }
        let s = (r - self.inner) / (self.outer - self.inner);
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReproducingResult {
    pub integral: [f64; 2],
    pub target: [f64; 2],
    /// `e^{kφ(x)/2} ‖u‖_{kφ}`
    pub scale: f64,
    pub rel_error: f64,
    pub quadrature_error: f64,
}

/// `|∫ χ_x(y) u(y) K_k^{(N)}(x,y) e^{−kφ(y)} dV_y − u(x)| / (e^{kφ(x)/2}‖u‖_{kφ})`
/// for a polynomial `u = Σ_j u[j] z^j` on a one-dimensional model.
#[allow(clippy::too_many_arguments)]
pub fn reproducing_test(
    model: &KernelModel,
    symbol: &ExpansionSymbol,
    k: f64,
    n_trunc: usize,
    u: &[Complex64],
    x: Complex64,
    cutoff: Cutoff,
    spec: &QuadratureSpec,
) -> Result<ReproducingResult> {
    spec.validate()?;
    if model.n != 1 || symbol.dim() != 1 {
        return Err(Error::PreconditionViolated("the reproducing test is one-dimensional".into()));
    }
    if !(0.0 < cutoff.inner && cutoff.inner < cutoff.outer) {
        return Err(Error::PreconditionViolated("cutoff radii must satisfy 0 < inner < outer".into()));
    }
    if model.kind == ModelKind::Hyperbolic && x.norm() + cutoff.outer >= 1.0 {
        return Err(Error::DomainError("cutoff support leaves the unit disc".into()));
    }
    let eval_u = |z: Complex64| u.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
    let mut norm_sqr = 0.0;
    for (j, c) in u.iter().enumerate() {
        if c.norm_sqr() > 0.0 {
            norm_sqr += c.norm_sqr() * model.monomial_norm(k, j)?;
        }
    }
    let scale = (0.5 * k * model.phi(&[x])?).exp() * norm_sqr.sqrt();
    let target = eval_u(x);

    let integrate = |n_theta: usize| -> Result<(Complex64, f64)> {
        let theta_rule = GaussLegendre::new(n_theta);
        let angles: Vec<(Complex64, f64)> =
            theta_rule.mapped(0.0, 2.0 * PI).map(|(t, w)| (Complex64::from_polar(1.0, t), w)).collect();
        let failure = std::cell::RefCell::new(None);
        let radial = |r: f64| -> Complex64 {
            let chi = cutoff.eval(r);
            if chi == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for &(e, w) in &angles {
                let y = x + e * r;
                let point = [y];
                let kern = symbol.eval(k, n_trunc, &[x], &point);
                let weight = model.phi(&point).and_then(|p| Ok((-k * p).exp() * model.volume_density(&point)?));
                match (kern, weight) {
                    (Ok(kv), Ok(wt)) => acc += eval_u(y) * kv * wt * w,
                    (Err(e), _) | (_, Err(e)) => {
                        failure.borrow_mut().get_or_insert(e);
                    }
                }
            }
            acc * (chi * r)
        };
        let rule = GaussLegendre::new(spec.nodes);
        let tol = spec.tol * scale.max(target.norm());
        let inner = adaptive_complex(&rule, 0.0, cutoff.inner, 0.5 * tol, &radial)?;
        let outer = adaptive_complex(&rule, cutoff.inner, cutoff.outer, 0.5 * tol, &radial)?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok((inner.value + outer.value, inner.error + outer.error))
    };
    let n_theta = (2 * spec.nodes).max(48);
    let (coarse, _) = integrate(n_theta)?;
    let (fine, radial_err) = integrate(2 * n_theta)?;
    let quadrature_error = (fine - coarse).norm() + radial_err;
    if quadrature_error > 1e3 * spec.tol * scale.max(target.norm()) {
        return Err(Error::QuadratureNotConverged(format!(
            "angular refinement changed the integral by {quadrature_error:e}"
        )));
    }
    Ok(ReproducingResult {
        integral: [fine.re, fine.im],
        target: [target.re, target.im],
        scale,
        rel_error: (fine - target).norm() / scale,
        quadrature_error: quadrature_error / scale,
    })
}
