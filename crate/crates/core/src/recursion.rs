//! Linear recursion for the Bergman kernel coefficients `b_m`.
//!
//! For every `m ≥ 1`,
//!
//! ```text
//! b_m(w,w̄) = −1/v(w,w̄) Σ_{j=1..m} Σ_{ν−μ=j, 2ν≥3μ} (−1)^μ /(μ! ν!)
//!            Δ^ν ( S_w^μ · b_{m−j}(w,ȳ) · v(y,ȳ) ) |_{y=w}
//! ```
//!
//! where `Δ = Σ g^{ij̄}(w) ∂_{y_i} ∂_{ȳ_j}` has its coefficients frozen at `w`.
//! Everything is computed as jets in `(w, w̄, u, ū)` with `y = w + u`, so one
//! run yields each `b_m` as a jet in `(w, w̄)` at the base point.
//!
//! Degree bookkeeping: to return `b_m` through degree `D`, the coefficient
//! `b_m` is carried through degree `D + 3(M − m)` while `M` coefficients are
//! computed, and the potential must be known through `D + 6M + 4`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jet::{factorial, Jet, ShiftTarget, VarLayout};
use crate::kahler::{
    metric_from_potential, phase_split, shift_to_wu, sw_from_phase, wu_layout, xy_layout, MetricJets, PotentialJet,
    SwJet, U, UBAR, W, WBAR,
};
use crate::scalar::Coeff;

/// Potential order needed to return `b_0..b_M` through degree `D`.
pub fn required_order(m_max: u32, cap: u32) -> u32 {
    cap + 6 * m_max + 4
}

/// `(j, μ, ν)` with `ν − μ = j ≥ 1` and `2ν ≥ 3μ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecursionTermIndex {
    pub j: u32,
    pub mu: u32,
    pub nu: u32,
}

impl RecursionTermIndex {
    pub fn new(j: u32, mu: u32, nu: u32) -> Result<Self> {
        if j == 0 || nu < mu || nu - mu != j || 2 * nu < 3 * mu {
            return Err(Error::PreconditionViolated(format!("invalid recursion index (j={j}, μ={mu}, ν={nu})")));
        }
        Ok(RecursionTermIndex { j, mu, nu })
    }

    /// All valid indices for a given `j`, ordered by `μ`.
    pub fn enumerate(j: u32) -> Vec<Self> {
        (0..=3 * j).filter_map(|mu| RecursionTermIndex::new(j, mu, mu + j).ok()).collect()
    }

    /// `(−1)^μ / (μ! ν!)`, computed in exact integers.
    pub fn prefactor(&self) -> BigRational {
        let sign = if self.mu.is_multiple_of(2) { BigInt::one() } else { -BigInt::one() };
        BigRational::new(sign, factorial(self.mu) * factorial(self.nu))
    }
}

/// Coefficient jets `b_0..b_M` in `(w, w̄)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable<C> {
    pub b: Vec<Jet<C>>,
    pub n: usize,
    pub m_max: u32,
    pub cap: u32,
    pub input_order: u32,
}

impl<C: Coeff> CoefficientTable<C> {
    pub fn get(&self, m: usize) -> Option<&Jet<C>> {
        self.b.get(m)
    }

    /// `b_m(0)`
    pub fn value_at_origin(&self, m: usize) -> C {
        self.b[m].constant_term()
    }
}

/// `[(w, n), (w̄, n)]`
pub fn w_layout(n: usize) -> VarLayout {
    VarLayout::pairs(&["w"], n)
}

/// Precomputed jets shared by every recursion step.
#[derive(Clone, Debug)]
pub struct RecursionContext<C> {
    n: usize,
    work_cap: u32,
    sw: SwJet<C>,
    v4: Jet<C>,
    lap: Vec<Vec<Jet<C>>>,
    v_inv: Jet<C>,
    metric: MetricJets<C>,
}

impl<C: Coeff> RecursionContext<C> {
    /// Build from a potential known through `order` (at least 6).
    pub fn new(p: &PotentialJet<C>, order: u32) -> Result<Self> {
        if order < 6 {
            return Err(Error::InsufficientInputOrder { required: 6, available: order });
        }
        let pot = p.at_order(order)?;
        let metric = metric_from_potential(&pot)?;
        let work_cap = order - 2;
        let split = phase_split(&pot)?;
        let sw = SwJet { s: sw_from_phase(&split.phi_tilde).s.truncate(work_cap) };
        let v4 = shift_to_wu(&metric.v)?.with_cap(work_cap);
        let wu = wu_layout(p.dim());
        let n = p.dim();
        let mut lap = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                row.push(metric.laplacian_coeff(i, j).embed(&wu, &[W, WBAR])?.with_cap(work_cap));
            }
            lap.push(row);
        }
        let v_inv = metric.v_inv.relabel(&w_layout(n))?;
        Ok(RecursionContext { n, work_cap, sw, v4, lap, v_inv, metric })
    }

    pub fn sw(&self) -> &SwJet<C> {
        &self.sw
    }

    pub fn v4(&self) -> &Jet<C> {
        &self.v4
    }

    pub fn metric(&self) -> &MetricJets<C> {
        &self.metric
    }

    pub fn work_cap(&self) -> u32 {
        self.work_cap
    }

    fn keep(&self, wcap: u32, ucap: u32) -> impl Fn(&[u16]) -> bool + '_ {
        let l = self.v4.layout().clone();
        move |k: &[u16]| {
            l.group_degree(k, W) + l.group_degree(k, WBAR) <= wcap
                && l.group_degree(k, U) <= ucap
                && l.group_degree(k, UBAR) <= ucap
        }
    }

    fn sw_powers(&self, max_mu: u32, wcap: u32, ucap: u32) -> Result<Vec<Jet<C>>> {
        let keep = self.keep(wcap, ucap);
        let s = self.sw.s.filter(&keep);
        let mut out = vec![Jet::one(s.layout(), self.work_cap)];
        for mu in 1..=max_mu {
            let next = out[mu as usize - 1].mul_filtered(&s, &keep)?;
            out.push(next);
        }
        Ok(out)
    }

    /// `b(w, w̄ + ū) · v(w+u, w̄+ū)` restricted to w-degree `≤ wcap` and u/ū-degrees `≤ ucap`.
    fn amplitude(&self, b_prev: &Jet<C>, wcap: u32, ucap: u32) -> Result<Jet<C>> {
        let keep = self.keep(wcap, ucap);
        // Terms kept by `keep` have total degree ≤ wcap + ucap, which b_prev must cover.
        if b_prev.cap() < wcap + ucap {
            return Err(Error::InsufficientInputOrder { required: wcap + ucap, available: b_prev.cap() });
        }
        let ext = extend_antiholomorphic(b_prev)?.filter(&keep).with_cap(self.work_cap);
        ext.mul_filtered(&self.v4, &keep)
    }

    fn term_from_parts(&self, idx: RecursionTermIndex, s_pow: &Jet<C>, amp: &Jet<C>, wcap: u32) -> Result<Jet<C>> {
        let keep = self.keep(wcap, idx.nu);
        let l = self.v4.layout().clone();
        let nu = idx.nu;
        let prod = s_pow
            .mul_filtered(amp, &keep)?
            .filter(|k| l.group_degree(k, U) == nu && l.group_degree(k, UBAR) == nu);
        let lapped = laplacian_pow_filtered(&prod, nu, &self.lap, &self.keep(wcap, nu))?;
        let pre = idx.prefactor();
        let value = lapped.eval_zero(&[U, UBAR]).truncate(wcap);
        Ok(value.scale(&C::from_rational(&pre, &BigRational::zero())))
    }

    /// One displayed term of the recursion as a `(w, w̄)`-jet through degree `wcap`.
    pub fn term(&self, idx: RecursionTermIndex, b_prev: &Jet<C>, wcap: u32) -> Result<Jet<C>> {
        self.check_wcap(wcap, idx.nu)?;
        let s_pow = self.sw_powers(idx.mu, wcap, idx.nu)?.pop().expect("at least one power");
        let amp = self.amplitude(b_prev, wcap, idx.nu)?;
        self.term_from_parts(idx, &s_pow, &amp, wcap)
    }

    fn check_wcap(&self, wcap: u32, nu: u32) -> Result<()> {
        if wcap + 2 * nu > self.work_cap {
            return Err(Error::InsufficientInputOrder { required: wcap + 2 * nu + 2, available: self.work_cap + 2 });
        }
        Ok(())
    }

    /// `b_m` through degree `wcap`, from `prev = [b_0, …, b_{m−1}]`.
    pub fn compute_bm(&self, m: u32, prev: &[Jet<C>], wcap: u32) -> Result<Jet<C>> {
        if prev.len() < m as usize {
            return Err(Error::PreconditionViolated(format!("b_0..b_{} required", m.saturating_sub(1))));
        }
        self.check_wcap(wcap, 3 * m)?;
        let spow = self.sw_powers(2 * m, wcap, 3 * m)?;
        let amps: Vec<Jet<C>> = (1..=m)
            .into_par_iter()
            .map(|j| self.amplitude(&prev[(m - j) as usize], wcap, 3 * j))
            .collect::<Result<_>>()?;
        let indices: Vec<RecursionTermIndex> = (1..=m).flat_map(RecursionTermIndex::enumerate).collect();
        // Terms are independent; the reduction below runs in (j, μ) order.
        let terms: Vec<Jet<C>> = indices
            .par_iter()
            .map(|idx| self.term_from_parts(*idx, &spow[idx.mu as usize], &amps[idx.j as usize - 1], wcap))
            .collect::<Result<_>>()?;
        let sum = Jet::sum(&w_layout(self.n), wcap, &terms)?;
        Ok(sum.mul(&self.v_inv.truncate(wcap))?.neg())
    }
}

/// `Δ F` with `Δ = Σ lap[i][j] ∂_{u_i} ∂_{ū_j}`, keeping terms accepted by `keep`.
fn apply_laplacian<C: Coeff>(f: &Jet<C>, lap: &[Vec<Jet<C>>], keep: &dyn Fn(&[u16]) -> bool) -> Result<Jet<C>> {
    let n = lap.len();
    let cap = f.cap().saturating_sub(2);
    let mut terms = Vec::with_capacity(n * n);
    for (i, row) in lap.iter().enumerate() {
        for (j, coeff) in row.iter().enumerate() {
            let d = f.derive(U, i, 1).derive(UBAR, j, 1);
            if d.is_zero() {
                continue;
            }
            terms.push(coeff.truncate(cap).mul_filtered(&d, keep)?);
        }
    }
    debug_assert!(terms.iter().all(|t| t.cap() == cap));
    Jet::sum(f.layout(), cap, &terms)
}

fn laplacian_pow_filtered<C: Coeff>(
    f: &Jet<C>,
    nu: u32,
    lap: &[Vec<Jet<C>>],
    keep: &dyn Fn(&[u16]) -> bool,
) -> Result<Jet<C>> {
    let mut out = f.clone();
    for _ in 0..nu {
        out = apply_laplacian(&out, lap, keep)?;
    }
    Ok(out)
}

/// `Δ^ν F` for `F` in `(w, w̄, u, ū)`, with `Δ = Σ g^{ij̄}(w) ∂_{u_i} ∂_{ū_j}`.
///
/// The coefficients `g^{ij̄}(w)` are multipliers only: the u-derivatives never act on them.
pub fn frozen_laplacian_pow<C: Coeff>(f: &Jet<C>, nu: u32, metric: &MetricJets<C>) -> Result<Jet<C>> {
    let n = metric.dim();
    let wu = wu_layout(n);
    if *f.layout() != wu {
        return Err(Error::LayoutMismatch("frozen Laplacian acts on (w, w̄, u, ū) jets".into()));
    }
    let mut lap = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let g = metric.laplacian_coeff(i, j);
            row.push(g.embed(&wu, &[W, WBAR])?.with_cap(f.cap().min(g.cap())));
        }
        lap.push(row);
    }
    let cap = f.cap().min(metric.g_inv[0][0].cap());
    let f = f.truncate(cap);
    let lap: Vec<Vec<Jet<C>>> = lap.into_iter().map(|r| r.into_iter().map(|j| j.truncate(cap)).collect()).collect();
    laplacian_pow_filtered(&f, nu, &lap, &|_| true)
}

/// `b(w, ȳ)` with `ȳ = w̄ + ū`, as a `(w, w̄, u, ū)` jet.
pub fn extend_antiholomorphic<C: Coeff>(b: &Jet<C>) -> Result<Jet<C>> {
    let n = b.layout().group(0).n;
    let plan = [ShiftTarget { base: W, offset: None }, ShiftTarget { base: WBAR, offset: Some(UBAR) }];
    b.shift(&wu_layout(n), &plan)
}

/// One term `(−1)^μ/(μ!ν!) Δ^ν(S_w^μ b(w,ȳ) v(y,ȳ))|_{y=w}` through w-degree `wcap`.
pub fn recursion_term<C: Coeff>(
    idx: RecursionTermIndex,
    b_prev: &Jet<C>,
    ctx: &RecursionContext<C>,
    wcap: u32,
) -> Result<Jet<C>> {
    ctx.term(idx, b_prev, wcap)
}

/// `b_m` from a table holding `b_0..b_{m−1}` (each carried through at least `wcap + 3m`).
pub fn compute_bm<C: Coeff>(m: u32, table: &CoefficientTable<C>, ctx: &RecursionContext<C>, wcap: u32) -> Result<Jet<C>> {
    ctx.compute_bm(m, &table.b, wcap)
}

/// `b_0..b_M`, each through degree `cap`.
pub fn compute_all<C: Coeff>(p: &PotentialJet<C>, m_max: u32, cap: u32) -> Result<CoefficientTable<C>> {
    let order = required_order(m_max, cap);
    if order > p.input_order() {
        return Err(Error::InsufficientInputOrder { required: order, available: p.input_order() });
    }
    let n = p.dim();
    let carry = |m: u32| cap + 3 * (m_max - m);
    let mut b = vec![Jet::one(&w_layout(n), carry(0))];
    if m_max == 0 {
        return Ok(CoefficientTable { b, n, m_max, cap, input_order: order });
    }
    let ctx = RecursionContext::new(p, order)?;
    for m in 1..=m_max {
        let bm = ctx.compute_bm(m, &b, carry(m))?;
        b.push(bm);
    }
    let b = b.into_iter().map(|j| j.truncate(cap)).collect();
    Ok(CoefficientTable { b, n, m_max, cap, input_order: order })
}

/// `b_m(x, ȳ)`: the coefficients of `b_m(w, w̄)` on independent slots.
pub fn polarize_bm<C: Coeff>(b: &Jet<C>) -> Result<Jet<C>> {
    let n = b.layout().group(0).n;
    b.relabel(&xy_layout(n))
}
