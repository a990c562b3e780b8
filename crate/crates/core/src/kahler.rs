//! Geometry derived from a local Kähler potential jet at the base point 0.
//!
//! The metric convention is `g_{ij̄} = ∂_i ∂_j̄ φ` and the volume density is
//! `v = det(g_{ij̄})`, so that `dV = v dV_E`. Quantities that depend on an
//! expansion point `w` are carried as jets in the four groups `(w, w̄, u, ū)`
//! with `y = w + u`.

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::jet::{det, matrix_inverse, scalar_det, total_degree, Jet, JetMatrix, ShiftTarget, VarLayout};
use crate::scalar::Coeff;

/// Tolerance on leading principal minors in float mode.
pub const FLOAT_POSITIVITY_TOL: f64 = 1e-12;

/// Group indices of the `(w, w̄, u, ū)` layout.
pub const W: usize = 0;
pub const WBAR: usize = 1;
pub const U: usize = 2;
pub const UBAR: usize = 3;

/// `[(z, n, holo), (z̄, n, anti)]`
pub fn z_layout(n: usize) -> VarLayout {
    VarLayout::pairs(&["z"], n)
}

/// `[(w, n), (w̄, n), (u, n), (ū, n)]`
pub fn wu_layout(n: usize) -> VarLayout {
    VarLayout::pairs(&["w", "u"], n)
}

/// `[(x, n, holo), (ȳ, n, anti)]`: second slot of a polarized function.
pub fn xy_layout(n: usize) -> VarLayout {
    use crate::jet::{GroupKind, VarGroup};
    VarLayout::new(vec![
        VarGroup { name: "x".into(), n, kind: GroupKind::Holo },
        VarGroup { name: "ybar".into(), n, kind: GroupKind::Anti },
    ])
    .expect("valid layout")
}

/// Hermitian jet of a Kähler potential at the base point.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialJet<C> {
    phi: Jet<C>,
    n: usize,
    polynomial: bool,
}

impl<C: Coeff> PotentialJet<C> {
    /// A Taylor series known through degree `phi.cap()`.
    pub fn new(phi: Jet<C>) -> Result<Self> {
        Self::build(phi, false)
    }

    /// An exact polynomial potential: its jet is valid at every order.
    pub fn polynomial(phi: Jet<C>) -> Result<Self> {
        Self::build(phi, true)
    }

    fn build(phi: Jet<C>, polynomial: bool) -> Result<Self> {
        let layout = phi.layout();
        if layout.num_groups() != 2 || layout.partner(0) != Some(1) {
            return Err(Error::LayoutMismatch("potential must live in a [(z,n),(z̄,n)] layout".into()));
        }
        let n = layout.group(0).n;
        if !phi.constant_term().is_zero() {
            return Err(Error::PreconditionViolated("potential must satisfy φ(0) = 0".into()));
        }
        if !phi.is_hermitian() {
            return Err(Error::NonHermitian("coefficients violate c(α,β) = conj(c(β,α))".into()));
        }
        if phi.cap() < 2 {
            return Err(Error::InsufficientInputOrder { required: 2, available: phi.cap() });
        }
        let p = PotentialJet { phi, n, polynomial };
        p.check_positive()?;
        Ok(p)
    }

    fn check_positive(&self) -> Result<()> {
        let h = self.hessian_at_zero();
        for k in 1..=self.n {
            let minor: Vec<Vec<C>> = h[..k].iter().map(|row| row[..k].to_vec()).collect();
            if !scalar_det(&minor)?.is_positive_real(FLOAT_POSITIVITY_TOL) {
                return Err(Error::DegenerateMetric);
            }
        }
        Ok(())
    }

    /// `(φ_{ij̄}(0))`
    pub fn hessian_at_zero(&self) -> Vec<Vec<C>> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut key = vec![0u16; 2 * n];
                        key[i] += 1;
                        key[n + j] += 1;
                        self.phi.coeff(&key)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn phi(&self) -> &Jet<C> {
        &self.phi
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_polynomial(&self) -> bool {
        self.polynomial
    }

    /// Degree through which φ is known; unbounded for polynomials.
    pub fn input_order(&self) -> u32 {
        if self.polynomial {
            u32::MAX
        } else {
            self.phi.cap()
        }
    }

    /// φ as a jet with cap `order`.
    pub fn phi_to_order(&self, order: u32) -> Result<Jet<C>> {
        if order > self.input_order() {
            return Err(Error::InsufficientInputOrder { required: order, available: self.phi.cap() });
        }
        Ok(self.phi.with_cap(order))
    }

    /// Same potential re-declared at a given order (series are truncated, polynomials re-capped).
    pub fn at_order(&self, order: u32) -> Result<Self> {
        Ok(PotentialJet { phi: self.phi_to_order(order)?, n: self.n, polynomial: self.polynomial })
    }

    /// `φ + h + h̄` for a holomorphic `h` with `h(0) = 0`.
    pub fn add_gauge(&self, h: &Jet<C>) -> Result<Self> {
        if h.layout() != self.phi.layout() {
            return Err(Error::LayoutMismatch("gauge must share the potential layout".into()));
        }
        let holo = h.terms().all(|(k, _)| self.phi.layout().group_degree(k, 1) == 0);
        if !holo || !h.constant_term().is_zero() {
            return Err(Error::PreconditionViolated("gauge must be holomorphic with h(0) = 0".into()));
        }
        let h = h.with_cap(self.phi.cap());
        let phi = self.phi.add(&h)?.add(&h.conj())?;
        Self::build(phi, self.polynomial)
    }
}

/// Metric, inverse metric and volume density as jets in `(z, z̄)`.
#[derive(Clone, Debug)]
pub struct MetricJets<C> {
    pub g: JetMatrix<C>,
    pub g_inv: JetMatrix<C>,
    pub v: Jet<C>,
    pub v_inv: Jet<C>,
}

impl<C: Coeff> MetricJets<C> {
    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// Coefficient `g^{ij̄}` of `∂_i ∂_j̄` in the Laplacian, i.e. `(g⁻¹)_{ji}`.
    pub fn laplacian_coeff(&self, i: usize, j: usize) -> &Jet<C> {
        &self.g_inv[j][i]
    }
}

pub fn metric_from_potential<C: Coeff>(p: &PotentialJet<C>) -> Result<MetricJets<C>> {
    let n = p.dim();
    let phi = p.phi();
    let g: JetMatrix<C> =
        (0..n).map(|i| (0..n).map(|j| phi.derive(0, i, 1).derive(1, j, 1)).collect()).collect();
    let g_inv = matrix_inverse(&g)?;
    let v = det(&g)?;
    if !v.constant_term().is_positive_real(FLOAT_POSITIVITY_TOL) {
        return Err(Error::DegenerateMetric);
    }
    let v_inv = v.inv()?;
    Ok(MetricJets { g, g_inv, v, v_inv })
}

/// ψ(x, ȳ): the coefficients of φ on independent holomorphic/antiholomorphic slots.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarizedPotential<C> {
    pub psi: Jet<C>,
}

impl<C: Coeff> PolarizedPotential<C> {
    /// Restrict to `ȳ = x̄`, i.e. read the coefficients back on `(z, z̄)`.
    pub fn restrict_to_diagonal(&self) -> Jet<C> {
        let n = self.psi.layout().group(0).n;
        self.psi.relabel(&z_layout(n)).expect("same variable count")
    }
}

pub fn polarize<C: Coeff>(p: &PotentialJet<C>) -> PolarizedPotential<C> {
    PolarizedPotential { psi: p.phi().relabel(&xy_layout(p.dim())).expect("same variable count") }
}

/// Calabi's diastasis `D(x,y) = φ(x) + φ(y) − ψ(x,ȳ) − ψ(y,x̄)` in `[(x),(x̄),(y),(ȳ)]`.
pub fn diastasis<C: Coeff>(p: &PotentialJet<C>) -> Result<Jet<C>> {
    let target = VarLayout::pairs(&["x", "y"], p.dim());
    let phi = p.phi();
    let phi_x = phi.embed(&target, &[0, 1])?;
    let phi_y = phi.embed(&target, &[2, 3])?;
    let psi_x_ybar = phi.embed(&target, &[0, 3])?;
    let psi_y_xbar = phi.embed(&target, &[2, 1])?;
    phi_x.add(&phi_y)?.sub(&psi_x_ybar)?.sub(&psi_y_xbar)
}

/// φ(w + u) as a jet in `(w, w̄, u, ū)`.
pub fn shifted_potential<C: Coeff>(p: &PotentialJet<C>) -> Result<Jet<C>> {
    shift_to_wu(p.phi())
}

/// `F(w + u, w̄ + ū)` for a `(z, z̄)` jet `F`.
pub fn shift_to_wu<C: Coeff>(f: &Jet<C>) -> Result<Jet<C>> {
    let n = f.layout().group(0).n;
    let plan = [ShiftTarget { base: W, offset: Some(U) }, ShiftTarget { base: WBAR, offset: Some(UBAR) }];
    f.shift(&wu_layout(n), &plan)
}

/// Split of the shifted potential into its holomorphic part and the normalized phase.
#[derive(Clone, Debug)]
pub struct PhaseSplit<C> {
    /// `f = Σ_α D^α φ(w)/α! u^α − φ(w)/2`
    pub f: Jet<C>,
    /// `φ̃_w = φ(w+u) − f − f̄`: only terms with `|α_u| ≥ 1` and `|β_ū| ≥ 1`.
    pub phi_tilde: Jet<C>,
    pub shifted: Jet<C>,
}

pub fn phase_split<C: Coeff>(p: &PotentialJet<C>) -> Result<PhaseSplit<C>> {
    let shifted = shifted_potential(p)?;
    let layout = shifted.layout().clone();
    let holo = shifted.filter(|k| layout.group_degree(k, UBAR) == 0);
    let base = shifted.filter(|k| layout.group_degree(k, U) == 0 && layout.group_degree(k, UBAR) == 0);
    let half = C::from_rational(&BigRational::new(1.into(), 2.into()), &BigRational::zero());
    let f = holo.sub(&base.scale(&half))?;
    let phi_tilde = shifted.sub(&f)?.sub(&f.conj())?;
    Ok(PhaseSplit { f, phi_tilde, shifted })
}

/// `S_w`: the normalized phase minus its Hermitian quadratic part in `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct SwJet<C> {
    pub s: Jet<C>,
}

impl<C: Coeff> SwJet<C> {
    /// Every term has `|α_u| ≥ 1`, `|β_ū| ≥ 1`, `|α_u| + |β_ū| ≥ 3`.
    pub fn satisfies_degree_invariant(&self) -> bool {
        let l = self.s.layout();
        self.s.terms().all(|(k, _)| {
            let a = l.group_degree(k, U);
            let b = l.group_degree(k, UBAR);
            a >= 1 && b >= 1 && a + b >= 3
        })
    }
}

pub fn build_sw<C: Coeff>(p: &PotentialJet<C>) -> Result<SwJet<C>> {
    let split = phase_split(p)?;
    Ok(sw_from_phase(&split.phi_tilde))
}

pub(crate) fn sw_from_phase<C: Coeff>(phi_tilde: &Jet<C>) -> SwJet<C> {
    let l = phi_tilde.layout().clone();
    let s = phi_tilde.filter(|k| l.group_degree(k, U) + l.group_degree(k, UBAR) >= 3);
    SwJet { s }
}

/// `(det Hess_ℝ h(0), 4ⁿ |det Hess_ℂ h(0)|²)` for a jet `h` in `(z, z̄)` with `h_{zz}(0) = h_{z̄z̄}(0) = 0`.
///
/// The real Hessian is obtained by substituting `z = x + i y` into the
/// quadratic part and differentiating in the real coordinates.
pub fn hessian_check<C: Coeff>(h: &Jet<C>) -> Result<(C, C)> {
    let layout = h.layout();
    if layout.num_groups() != 2 || layout.partner(0) != Some(1) {
        return Err(Error::LayoutMismatch("hessian_check expects a [(z,n),(z̄,n)] jet".into()));
    }
    if h.cap() < 2 {
        return Err(Error::PreconditionViolated("jet must be known through degree 2".into()));
    }
    let n = layout.group(0).n;
    let quad = h.filter(|k| total_degree(k) == 2).truncate(2);
    for (k, _) in quad.terms() {
        if layout.group_degree(k, 0) == 2 || layout.group_degree(k, 1) == 2 {
            return Err(Error::PreconditionViolated(
                "purely holomorphic or antiholomorphic second derivatives must vanish".into(),
            ));
        }
    }

    let real = VarLayout::real(&["x", "y"], n);
    let i_unit = C::from_rational(&BigRational::zero(), &BigRational::one());
    let mut images = Vec::with_capacity(2 * n);
    for sign in [1i64, -1] {
        for a in 0..n {
            let x = Jet::<C>::var(&real, 2, 0, a);
            let y = Jet::<C>::var(&real, 2, 1, a).scale(&i_unit.mul(&C::from_i64(sign)));
            images.push(x.add(&y)?);
        }
    }
    let q = quad.substitute(&images)?;
    let dim = 2 * n;
    let mut hess = vec![vec![C::zero(); dim]; dim];
    for (a, row) in hess.iter_mut().enumerate() {
        for (b, entry) in row.iter_mut().enumerate() {
            let mut key = vec![0u16; dim];
            key[a] += 1;
            key[b] += 1;
            let c = q.coeff(&key);
            *entry = if a == b { c.mul(&C::from_i64(2)) } else { c };
        }
    }
    let lhs = scalar_det(&hess)?;

    let hc: Vec<Vec<C>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut key = vec![0u16; 2 * n];
                    key[i] += 1;
                    key[n + j] += 1;
                    quad.coeff(&key)
                })
                .collect()
        })
        .collect();
    let dc = scalar_det(&hc)?;
    let rhs = dc.mul(&dc.conj()).mul(&C::from_i64(4i64.pow(n as u32)));
    Ok((lhs, rhs))
}

/// `ρ = Σ g^{ij̄} ∂_i ∂_j̄ (−log v)`, normalized so that `b_1 = ρ/2`.
pub fn scalar_curvature<C: Coeff>(m: &MetricJets<C>) -> Result<Jet<C>> {
    let n = m.dim();
    let v0 = m.v.constant_term();
    let v0_inv = v0.inv().ok_or(Error::DegenerateMetric)?;
    let log_v = m.v.scale(&v0_inv).log()?;
    let cap = m.v.cap().saturating_sub(2);
    let mut acc = Jet::zero(m.v.layout(), cap);
    for i in 0..n {
        for j in 0..n {
            let d = log_v.derive(0, i, 1).derive(1, j, 1);
            let term = m.laplacian_coeff(i, j).truncate(cap).mul(&d.truncate(cap))?;
            acc = acc.sub(&term)?;
        }
    }
    Ok(acc)
}

/// Real quadratic form `Σ a_{ij} z_i z̄_j` as a potential jet (the Fock-type model when `a = I`).
pub fn quadratic_potential<C: Coeff>(a: &[Vec<C>], cap: u32) -> Result<PotentialJet<C>> {
    let n = a.len();
    let l = z_layout(n);
    let mut terms = Vec::new();
    for (i, row) in a.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            let mut key = smallvec::smallvec![0u16; 2 * n];
            key[i] += 1;
            key[n + j] += 1;
            terms.push((key, c.clone()));
        }
    }
    PotentialJet::polynomial(Jet::from_terms(&l, cap, terms))
}

/// `Σ_i z_i z̄_i`
pub fn fock_potential<C: Coeff>(n: usize) -> PotentialJet<C> {
    let a: Vec<Vec<C>> = (0..n).map(|i| (0..n).map(|j| if i == j { C::one() } else { C::zero() }).collect()).collect();
    quadratic_potential(&a, 2).expect("identity form is positive")
}

fn norm_squared<C: Coeff>(n: usize, cap: u32) -> Jet<C> {
    let l = z_layout(n);
    let mut acc = Jet::zero(&l, cap);
    for i in 0..n {
        acc = acc.add(&Jet::var(&l, cap, 0, i).mul(&Jet::var(&l, cap, 1, i)).unwrap()).unwrap();
    }
    acc
}

/// `log(1 + |z|²)` through degree `cap`.
pub fn fubini_study_potential<C: Coeff>(n: usize, cap: u32) -> Result<PotentialJet<C>> {
    let t = norm_squared::<C>(n, cap);
    PotentialJet::new(Jet::one(t.layout(), cap).add(&t)?.log()?)
}

/// `−log(1 − |z|²)` through degree `cap`.
pub fn hyperbolic_potential<C: Coeff>(n: usize, cap: u32) -> Result<PotentialJet<C>> {
    let t = norm_squared::<C>(n, cap);
    PotentialJet::new(Jet::one(t.layout(), cap).sub(&t)?.log()?.neg())
}

/// Radial polynomial potential `Σ_j c_j |z|^{2j}` (n = 1), `coeffs[0] = c_1`.
pub fn radial_polynomial_potential<C: Coeff>(coeffs: &[BigRational]) -> Result<PotentialJet<C>> {
    let l = z_layout(1);
    let cap = 2 * coeffs.len() as u32;
    let terms = coeffs.iter().enumerate().map(|(j, c)| {
        let e = (j + 1) as u16;
        (smallvec::smallvec![e, e], C::from_rational(c, &BigRational::zero()))
    });
    PotentialJet::polynomial(Jet::from_terms(&l, cap.max(2), terms))
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

pub fn complex_rational(re: BigRational, im: BigRational) -> crate::scalar::Exact {
    Complex::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{exact, Exact};
    use smallvec::smallvec;

    fn c(n: i64) -> Exact {
        exact(n, 1)
    }

    #[test]
    fn fock_metric_is_flat() {
        let p = fock_potential::<Exact>(1);
        let m = metric_from_potential(&p).unwrap();
        assert_eq!(m.g[0][0], Jet::one(&z_layout(1), 0));
        assert_eq!(m.v, Jet::one(&z_layout(1), 0));
        assert_eq!(m.v_inv, Jet::one(&z_layout(1), 0));
    }

    #[test]
    fn fubini_study_metric_matches_closed_form() {
        // (1 + t)^{-2} = Σ (-1)^k (k+1) t^k
        let p = fubini_study_potential::<Exact>(1, 8).unwrap();
        let m = metric_from_potential(&p).unwrap();
        assert_eq!(m.g[0][0].cap(), 6);
        for k in 0..=3u16 {
            let expect = c(if k % 2 == 0 { 1 } else { -1 } * (k as i64 + 1));
            assert_eq!(m.g[0][0].coeff(&[k, k]), expect);
        }
        assert_eq!(m.v, m.g[0][0]);
    }

    #[test]
    fn hyperbolic_metric_matches_closed_form() {
        // (1 - t)^{-2} = Σ (k+1) t^k
        let p = hyperbolic_potential::<Exact>(1, 8).unwrap();
        let m = metric_from_potential(&p).unwrap();
        for k in 0..=3u16 {
            assert_eq!(m.g[0][0].coeff(&[k, k]), c(k as i64 + 1));
        }
    }

    #[test]
    fn potential_validation() {
        let l = z_layout(1);
        let z = Jet::<Exact>::var(&l, 4, 0, 0);
        let zb = Jet::<Exact>::var(&l, 4, 1, 0);
        assert!(matches!(PotentialJet::new(z.clone()), Err(Error::NonHermitian(_))));
        let shifted = Jet::one(&l, 4).add(&z.mul(&zb).unwrap()).unwrap();
        assert!(matches!(PotentialJet::new(shifted), Err(Error::PreconditionViolated(_))));
        let neg = z.mul(&zb).unwrap().neg();
        assert!(matches!(PotentialJet::new(neg), Err(Error::DegenerateMetric)));
        let p = PotentialJet::new(z.mul(&zb).unwrap()).unwrap();
        assert!(matches!(p.phi_to_order(6), Err(Error::InsufficientInputOrder { .. })));
    }

    #[test]
    fn polarization_examples() {
        let p = fock_potential::<Exact>(1);
        let psi = polarize(&p);
        assert_eq!(psi.psi.coeff(&[1, 1]), c(1));
        assert_eq!(psi.psi.nnz(), 1);
        assert_eq!(psi.restrict_to_diagonal(), *p.phi());
        let fs = fubini_study_potential::<Exact>(1, 6).unwrap();
        let psi = polarize(&fs);
        assert_eq!(psi.psi.coeff(&[2, 2]), exact(-1, 2));
        assert!(psi.psi.is_hermitian());
    }

    #[test]
    fn fock_diastasis_is_distance_squared() {
        let d = diastasis(&fock_potential::<Exact>(1)).unwrap();
        // |x - y|² = x x̄ - x ȳ - y x̄ + y ȳ
        assert_eq!(d.nnz(), 4);
        assert_eq!(d.coeff(&[1, 1, 0, 0]), c(1));
        assert_eq!(d.coeff(&[0, 0, 1, 1]), c(1));
        assert_eq!(d.coeff(&[1, 0, 0, 1]), c(-1));
        assert_eq!(d.coeff(&[0, 1, 1, 0]), c(-1));
    }

    #[test]
    fn fubini_study_diastasis_vanishes_on_diagonal() {
        let p = fubini_study_potential::<Exact>(1, 6).unwrap();
        let d = diastasis(&p).unwrap();
        let x = Jet::<Exact>::var(&z_layout(1), 6, 0, 0);
        let xb = Jet::<Exact>::var(&z_layout(1), 6, 1, 0);
        let on_diag = d.substitute(&[x.clone(), xb.clone(), x, xb]).unwrap();
        assert!(on_diag.is_zero());
        let quad = d.filter(|k| total_degree(k) == 2);
        assert_eq!(quad, diastasis(&fock_potential::<Exact>(1)).unwrap().with_cap(6));
    }

    #[test]
    fn phase_split_examples() {
        let s = phase_split(&fock_potential::<Exact>(1)).unwrap();
        assert_eq!(s.phi_tilde.nnz(), 1);
        assert_eq!(s.phi_tilde.coeff(&[0, 0, 1, 1]), c(1));

        let fs = fubini_study_potential::<Exact>(1, 4).unwrap();
        let s = phase_split(&fs).unwrap();
        let at_zero = s.phi_tilde.eval_zero(&[W, WBAR]);
        assert_eq!(at_zero.coeff(&[1, 1]), c(1));
        assert_eq!(at_zero.coeff(&[2, 2]), exact(-1, 2));
        assert_eq!(at_zero.nnz(), 2);
        let l = s.phi_tilde.layout().clone();
        assert!(s
            .phi_tilde
            .terms()
            .all(|(k, _)| l.group_degree(k, U) >= 1 && l.group_degree(k, UBAR) >= 1));
        let rebuilt = s.phi_tilde.add(&s.f).unwrap().add(&s.f.conj()).unwrap();
        assert_eq!(rebuilt, s.shifted);
    }

    #[test]
    fn sw_examples() {
        assert!(build_sw(&fock_potential::<Exact>(1)).unwrap().s.is_zero());
        let l = z_layout(1);
        let quartic = Jet::from_terms(&l, 4, [(smallvec![1, 1], c(1)), (smallvec![2, 2], c(1))]);
        let p = PotentialJet::polynomial(quartic).unwrap().at_order(8).unwrap();
        let sw = build_sw(&p).unwrap();
        assert!(sw.satisfies_degree_invariant());
        let at_zero = sw.s.eval_zero(&[W, WBAR]);
        assert_eq!(at_zero.coeff(&[2, 2]), c(1));
        assert_eq!(at_zero.nnz(), 1);
        // S_w = 2 w u ū² + 2 w̄ u² ū + u² ū²
        assert_eq!(sw.s.nnz(), 3);
        assert_eq!(sw.s.coeff(&[1, 0, 1, 2]), c(2));
        assert_eq!(sw.s.coeff(&[0, 1, 2, 1]), c(2));
    }

    #[test]
    fn hessian_check_examples() {
        let l = z_layout(1);
        let h = Jet::from_terms(&l, 2, [(smallvec![1, 1], c(3))]);
        let (lhs, rhs) = hessian_check(&h).unwrap();
        assert_eq!(lhs, c(36));
        assert_eq!(rhs, c(36));
        let tilde = phase_split(&fock_potential::<Exact>(1)).unwrap().phi_tilde.eval_zero(&[W, WBAR]);
        let tilde = tilde.relabel(&l).unwrap();
        let (lhs, rhs) = hessian_check(&tilde).unwrap();
        assert_eq!((lhs, rhs), (c(4), c(4)));
        let bad = Jet::from_terms(&l, 2, [(smallvec![2, 0], c(1)), (smallvec![0, 2], c(1))]);
        assert!(matches!(hessian_check(&bad), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn curvature_of_model_geometries() {
        let fock = metric_from_potential(&fock_potential::<Exact>(1).at_order(6).unwrap()).unwrap();
        assert!(scalar_curvature(&fock).unwrap().is_zero());
        let fs = metric_from_potential(&fubini_study_potential::<Exact>(1, 8).unwrap()).unwrap();
        let rho = scalar_curvature(&fs).unwrap();
        assert_eq!(rho, Jet::constant(&z_layout(1), 4, c(2)));
        let hyp = metric_from_potential(&hyperbolic_potential::<Exact>(1, 8).unwrap()).unwrap();
        assert_eq!(scalar_curvature(&hyp).unwrap(), Jet::constant(&z_layout(1), 4, c(-2)));
    }
}
