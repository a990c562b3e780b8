//! Truncated kernel expansion, remainder scans against the oracles, and
//! empirical probes of coefficient growth.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{total_degree, Jet};
use crate::kahler::{polarize, PolarizedPotential, PotentialJet};
use crate::oracles::{prefactor, KernelModel};
use crate::recursion::{polarize_bm, CoefficientTable};
use crate::scalar::Coeff;

/// Share of a partial sum the highest retained degrees may contribute
/// before a truncated evaluation is rejected.
pub const CERTIFIED_SHARE: f64 = 1e-3;

/// Polarized potential and coefficient jets in float form, ready for
/// repeated evaluation of `K_k^{(N)}(x, y)`.
#[derive(Clone, Debug)]
pub struct ExpansionSymbol {
    n: usize,
    psi: Jet<Complex64>,
    psi_exact: bool,
    b: Vec<Jet<Complex64>>,
}

impl ExpansionSymbol {
    /// `psi` is treated as a truncated series.
    pub fn new<C: Coeff>(table: &CoefficientTable<C>, psi: &PolarizedPotential<C>) -> Result<Self> {
        Self::build(table, psi, false)
    }

    /// Polynomial potentials evaluate ψ without a truncation check.
    pub fn from_potential<C: Coeff>(table: &CoefficientTable<C>, p: &PotentialJet<C>) -> Result<Self> {
        Self::build(table, &polarize(p), p.is_polynomial())
    }

    fn build<C: Coeff>(table: &CoefficientTable<C>, psi: &PolarizedPotential<C>, psi_exact: bool) -> Result<Self> {
        let n = table.n;
        if psi.psi.layout().group(0).n != n {
            return Err(Error::LayoutMismatch("potential and coefficient table differ in dimension".into()));
        }
        let b = table.b.iter().map(|bm| polarize_bm(bm).map(|j| j.to_float())).collect::<Result<Vec<_>>>()?;
        Ok(ExpansionSymbol { n, psi: psi.psi.to_float(), psi_exact, b })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Largest `N` available.
    pub fn m_max(&self) -> usize {
        self.b.len() - 1
    }

    fn point(&self, x: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.n || y.len() != self.n {
            return Err(Error::PreconditionViolated(format!("points must have {} coordinates", self.n)));
        }
        Ok(x.iter().copied().chain(y.iter().map(|v| v.conj())).collect())
    }

    /// ψ(x, ȳ)
    pub fn psi(&self, x: &[Complex64], y: &[Complex64]) -> Result<Complex64> {
        let pt = self.point(x, y)?;
        if self.psi_exact {
            Ok(self.psi.eval(&pt))
        } else {
            certified_eval(&self.psi, &pt, "psi")
        }
    }

    /// `1 + Σ_{m=1}^{N} b_m(x, ȳ) / k^m`
    pub fn symbol(&self, k: f64, n_trunc: usize, x: &[Complex64], y: &[Complex64]) -> Result<Complex64> {
        if n_trunc > self.m_max() {
            return Err(Error::PreconditionViolated(format!(
                "truncation order {n_trunc} exceeds the table (M = {})",
                self.m_max()
            )));
        }
        let pt = self.point(x, y)?;
        let mut acc = Complex64::new(1.0, 0.0);
        let mut kpow = 1.0;
        for m in 1..=n_trunc {
            kpow *= k;
            acc += certified_eval(&self.b[m], &pt, &format!("b_{m}"))? / kpow;
        }
        Ok(acc)
    }

    /// `(k/π)^n e^{kψ(x,ȳ)} (1 + Σ_{m≤N} b_m(x,ȳ)/k^m)`
    pub fn eval(&self, k: f64, n_trunc: usize, x: &[Complex64], y: &[Complex64]) -> Result<Complex64> {
        let sym = self.symbol(k, n_trunc, x, y)?;
        let psi = self.psi(x, y)?;
        Ok(prefactor(k, self.n) * (psi * k).exp() * sym)
    }
}

fn certified_eval(jet: &Jet<Complex64>, point: &[Complex64], what: &str) -> Result<Complex64> {
    if point.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
        return Ok(jet.constant_term());
    }
    let parts = jet.eval_by_degree(point);
    let value: Complex64 = parts.iter().sum();
    let cap = jet.cap() as usize;
    let top = parts[cap.saturating_sub(1)..=cap].iter().map(|c| c.norm()).fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(value);
    }
    let scale: f64 = parts.iter().map(|c| c.norm()).sum();
    if top > CERTIFIED_SHARE * scale {
        return Err(Error::TruncationUnreliable(format!(
            "{what}: top-degree share {:.3e} exceeds {CERTIFIED_SHARE:e}",
            top / scale
        )));
    }
    Ok(value)
}

/// `K_k^{(N)}(x, y)` from a coefficient table and polarized potential.
pub fn kernel_expansion_eval<C: Coeff>(
    table: &CoefficientTable<C>,
    psi: &PolarizedPotential<C>,
    k: f64,
    n_trunc: usize,
    x: &[Complex64],
    y: &[Complex64],
) -> Result<Complex64> {
    ExpansionSymbol::new(table, psi)?.eval(k, n_trunc, x, y)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionEvaluation {
    pub k: f64,
    pub n_trunc: usize,
    pub x: Vec<[f64; 2]>,
    pub y: Vec<[f64; 2]>,
    pub value: [f64; 2],
    pub truth: Option<[f64; 2]>,
    pub abs_error: Option<f64>,
    pub rel_error: Option<f64>,
}

impl ExpansionEvaluation {
    pub fn new(k: f64, n_trunc: usize, x: &[Complex64], y: &[Complex64], value: Complex64, truth: Option<Complex64>) -> Self {
        let abs_error = truth.map(|t| (value - t).norm());
        let rel_error = truth.and_then(|t| if t.norm() > 0.0 { Some((value - t).norm() / t.norm()) } else { None });
        ExpansionEvaluation {
            k,
            n_trunc,
            x: x.iter().map(|c| [c.re, c.im]).collect(),
            y: y.iter().map(|c| [c.re, c.im]).collect(),
            value: [value.re, value.im],
            truth: truth.map(|t| [t.re, t.im]),
            abs_error,
            rel_error,
        }
    }
}

/// Least-squares line `y ≈ slope·x + intercept` with root-mean-square residual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub points: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(x, y)| x.is_finite() && y.is_finite()).map(|(&x, &y)| (x, y)).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    Some(LineFit { slope, intercept, rms_residual: (rss / m).sqrt(), points: pts.len() })
}

/// Fit `log y` against `log x`, skipping non-positive entries.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        xs.iter().zip(ys).filter(|(&x, &y)| x > 0.0 && y > 0.0).map(|(x, y)| (x.ln(), y.ln())).unzip();
    fit_line(&lx, &ly)
}

/// Normalized remainders `R_N(k)` indexed `[N][k]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RemainderScan {
    pub k: Vec<f64>,
    pub n_trunc: Vec<usize>,
    pub remainders: Vec<Vec<f64>>,
    /// Oracle error estimate on the same normalized scale, per `k`.
    pub oracle_error: Vec<f64>,
    /// Log–log slope of `R_N` against `k`, per `N`.
    pub slopes: Vec<Option<LineFit>>,
}

pub fn remainder_scan(
    model: &KernelModel,
    symbol: &ExpansionSymbol,
    k_list: &[f64],
    n_list: &[usize],
    x: &[Complex64],
    y: &[Complex64],
) -> Result<RemainderScan> {
    let columns: Vec<(Vec<f64>, f64)> = k_list
        .par_iter()
        .map(|&k| -> Result<(Vec<f64>, f64)> {
            let truth = model.kernel(k, x, y)?;
            let psi = symbol.psi(x, y)?;
            let scale = prefactor(k, symbol.dim()) * (k * psi.re).exp();
            let col = n_list
                .iter()
                .map(|&n| symbol.eval(k, n, x, y).map(|v| (truth.value - v).norm() / scale))
                .collect::<Result<Vec<_>>>()?;
            Ok((col, truth.error / scale))
        })
        .collect::<Result<Vec<_>>>()?;
    let remainders: Vec<Vec<f64>> = (0..n_list.len()).map(|i| columns.iter().map(|c| c.0[i]).collect()).collect();
    let slopes = remainders.iter().map(|row| fit_loglog(k_list, row)).collect();
    Ok(RemainderScan {
        k: k_list.to_vec(),
        n_trunc: n_list.to_vec(),
        remainders,
        oracle_error: columns.iter().map(|c| c.1).collect(),
        slopes,
    })
}

/// `Σ |c_{αβ}| r^{|α|+|β|}` over the stored coefficients.
pub fn sup_norm_estimate<C: Coeff>(b: &Jet<C>, r: f64) -> f64 {
    b.terms().map(|(k, c)| c.to_c64().norm() * r.powi(total_degree(k) as i32)).fold(0.0, |a, t| a + t)
}

/// Reference index and factor for the bounded-ratio flag of [`GrowthReport`].
pub const GROWTH_REFERENCE_M: usize = 4;
pub const GROWTH_BOUND_FACTOR: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthReport {
    pub radius: f64,
    /// `S_m`, `m = 0..=M`
    pub sup_norms: Vec<f64>,
    /// `(S_m / m!)^{1/(m+1)}`
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub argmax: usize,
    /// Every ratio stays within `GROWTH_BOUND_FACTOR` times the ratio at
    /// `GROWTH_REFERENCE_M` (vacuous when the reference ratio is zero or
    /// the table is shorter).
    pub bounded: bool,
    /// Relative change of the last two ratios.
    pub last_increment: Option<f64>,
}

pub fn growth_fit<C: Coeff>(table: &CoefficientTable<C>, r: f64) -> GrowthReport {
    let sup_norms: Vec<f64> = table.b.iter().map(|b| sup_norm_estimate(b, r)).collect();
    let mut ln_fact = 0.0;
    let ratios: Vec<f64> = sup_norms
        .iter()
        .enumerate()
        .map(|(m, &s)| {
            if m > 0 {
                ln_fact += (m as f64).ln();
            }
            if s > 0.0 {
                ((s.ln() - ln_fact) / (m as f64 + 1.0)).exp()
            } else {
                0.0
            }
        })
        .collect();
    let (argmax, max_ratio) = ratios
        .iter()
        .enumerate()
        .skip(1)
        .fold((0, 0.0), |best, (m, &v)| if v > best.1 { (m, v) } else { best });
    let bounded = match ratios.get(GROWTH_REFERENCE_M) {
        Some(&reference) if reference > 0.0 => ratios[1..].iter().all(|&v| v <= GROWTH_BOUND_FACTOR * reference),
        _ => true,
    };
    let last_increment = match ratios.len() {
        l if l >= 3 && ratios[l - 2] > 0.0 => Some((ratios[l - 1] - ratios[l - 2]) / ratios[l - 2]),
        _ => None,
    };
    GrowthReport { radius: r, sup_norms, ratios, max_ratio, argmax, bounded, last_increment }
}

/// `S_{N+1} / k^{N+1}` for `N = 0..M-1`.
pub fn truncation_terms(k: f64, report: &GrowthReport) -> Vec<f64> {
    let mut kpow = 1.0;
    report.sup_norms.iter().skip(1).map(|&s| {
        kpow *= k;
        s / kpow
    }).collect()
}

/// Index of the smallest next-term bound; ties go to the smaller `N`.
pub fn optimal_truncation(k: f64, report: &GrowthReport) -> usize {
    truncation_terms(k, report)
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (n, &t)| if t < best.1 { (n, t) } else { best })
        .0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiastasisPair {
    pub x: Vec<[f64; 2]>,
    pub y: Vec<[f64; 2]>,
    pub diastasis: f64,
    /// `log(|K| e^{−kφ(x)/2−kφ(y)/2} (π/k)^n) + kD/2`, per `k`.
    pub residuals: Vec<f64>,
    pub fit: Option<LineFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiastasisReport {
    pub k: Vec<f64>,
    pub pairs: Vec<DiastasisPair>,
}

impl DiastasisReport {
    /// Largest absolute residual slope against `log k`.
    pub fn max_abs_slope(&self) -> f64 {
        self.pairs.iter().filter_map(|p| p.fit).map(|f| f.slope.abs()).fold(0.0, f64::max)
    }
}

pub fn diastasis_decay_check(
    model: &KernelModel,
    k_list: &[f64],
    pairs: &[(Vec<Complex64>, Vec<Complex64>)],
) -> Result<DiastasisReport> {
    let n = model.n;
    let pairs = pairs
        .par_iter()
        .map(|(x, y)| -> Result<DiastasisPair> {
            let (phx, phy) = (model.phi(x)?, model.phi(y)?);
            let d = phx + phy - model.psi(x, y)?.re - model.psi(y, x)?.re;
            let residuals = k_list
                .iter()
                .map(|&k| {
                    let kv = model.kernel(k, x, y)?;
                    Ok(kv.value.norm().ln() - k * (phx + phy) / 2.0 - n as f64 * (k / std::f64::consts::PI).ln()
                        + k * d / 2.0)
                })
                .collect::<Result<Vec<f64>>>()?;
            let lk: Vec<f64> = k_list.iter().map(|k| k.ln()).collect();
            let fit = fit_line(&lk, &residuals);
            Ok(DiastasisPair {
                x: x.iter().map(|c| [c.re, c.im]).collect(),
                y: y.iter().map(|c| [c.re, c.im]).collect(),
                diastasis: d,
                residuals,
                fit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiastasisReport { k: k_list.to_vec(), pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kahler::{fock_potential, fubini_study_potential, hyperbolic_potential};
    use crate::oracles::{fock_kernel, fs_kernel};
    use crate::recursion::compute_all;
    use crate::scalar::Exact;
    use num_complex::Complex64 as C;
    use std::f64::consts::PI;

    fn fock_symbol(n: usize, m: u32) -> ExpansionSymbol {
        let p = fock_potential::<Exact>(n);
        let t = compute_all(&p, m, 2).unwrap();
        ExpansionSymbol::from_potential(&t, &p).unwrap()
    }

    #[test]
    fn fock_expansion_is_bit_identical() {
        let s = fock_symbol(2, 3);
        let x = [C::new(0.3, -0.1), C::new(0.05, 0.2)];
        let y = [C::new(-0.2, 0.4), C::new(0.1, 0.0)];
        for k in [1.0, 7.0, 40.0] {
            for n in 0..=3 {
                assert_eq!(s.eval(k, n, &x, &y).unwrap(), fock_kernel(k, &x, &y));
            }
        }
    }

    #[test]
    fn fubini_study_first_order_is_exact_on_diagonal() {
        let p = fubini_study_potential::<Exact>(1, 40).unwrap();
        let t = compute_all(&p, 2, 2).unwrap();
        let s = ExpansionSymbol::new(&t, &polarize(&p)).unwrap();
        let x = [C::new(0.1, 0.05)];
        for k in [5.0, 20.0] {
            let v = s.eval(k, 1, &x, &x).unwrap();
            let truth = fs_kernel(k, x[0], x[0]);
            assert!((v - truth).norm() / truth.norm() < 1e-12);
        }
        let origin = [C::new(0.0, 0.0)];
        assert!((s.eval(10.0, 1, &origin, &origin).unwrap().re - 11.0 / PI).abs() < 1e-13);
    }

    #[test]
    fn truncated_series_outside_radius_is_rejected() {
        let p = hyperbolic_potential::<Exact>(1, 8).unwrap();
        let t = compute_all(&p, 0, 2).unwrap();
        let s = ExpansionSymbol::new(&t, &polarize(&p)).unwrap();
        let x = [C::new(0.9, 0.0)];
        assert!(matches!(s.eval(10.0, 0, &x, &x), Err(Error::TruncationUnreliable(_))));
        assert!(s.eval(10.0, 0, &[C::new(0.05, 0.0)], &[C::new(0.05, 0.0)]).is_ok());
    }

    #[test]
    fn sup_norm_examples() {
        let l = crate::kahler::z_layout(1);
        let one = Jet::<Exact>::one(&l, 4);
        assert_eq!(sup_norm_estimate(&one, 0.3), 1.0);
        let zz = Jet::<Exact>::var(&l, 4, 0, 0).mul(&Jet::var(&l, 4, 1, 0)).unwrap();
        assert_eq!(sup_norm_estimate(&zz, 0.5), 0.25);
    }

    #[test]
    fn optimal_truncation_examples() {
        let fock = fock_potential::<Exact>(1);
        let rep = growth_fit(&compute_all(&fock, 4, 2).unwrap(), 0.25);
        assert!(rep.sup_norms[1..].iter().all(|&s| s == 0.0));
        assert_eq!(optimal_truncation(40.0, &rep), 0);

        let fs = fubini_study_potential::<Exact>(1, crate::recursion::required_order(4, 2)).unwrap();
        let rep = growth_fit(&compute_all(&fs, 4, 2).unwrap(), 0.25);
        assert_eq!(rep.sup_norms[1], 1.0);
        assert!(rep.sup_norms[2..].iter().all(|&s| s == 0.0));
        assert_eq!(optimal_truncation(40.0, &rep), 1);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| -2.0 * x + 0.5).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-14 && (f.intercept - 0.5).abs() < 1e-13);
        let ks = [10.0, 20.0, 40.0];
        let rs: Vec<f64> = ks.iter().map(|k: &f64| 3.0 / k.powi(3)).collect();
        assert!((fit_loglog(&ks, &rs).unwrap().slope + 3.0).abs() < 1e-12);
    }
}
