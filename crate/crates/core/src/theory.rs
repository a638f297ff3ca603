//! Closed-form quantities of the two-cluster signed stochastic block model.
//!
//! The planted partition is the contiguous split of `n` (even) vertices into
//! halves, with informative vector `w = (1, .., 1, -1, .., -1) / sqrt(n)`.
//! All logarithms are natural.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::eigen::inverse_sqrt_spd;

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error("the two-cluster formulas need an even vertex count, got {0}")]
    OddN(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("condition violated: {condition} ({lhs} vs {rhs})")]
    ConditionViolated {
        condition: String,
        lhs: f64,
        rhs: f64,
    },
    #[error("p = {0} is too small for the degree concentration bound")]
    PTooSmallForChernoff(f64),
    #[error("hypothesis violated: {which} ({lhs} > {rhs})")]
    HypothesisViolated {
        which: String,
        lhs: f64,
        rhs: f64,
    },
}

fn invalid(msg: impl Into<String>) -> TheoryError {
    TheoryError::InvalidParams(msg.into())
}

fn check_even(n: usize) -> Result<(), TheoryError> {
    if n == 0 || n % 2 == 1 {
        return Err(TheoryError::OddN(n));
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<(), TheoryError> {
    if !(0.0..0.5).contains(&eta) {
        return Err(invalid(format!("eta = {eta} outside [0, 0.5)")));
    }
    Ok(())
}

fn check_taus(tau_plus: f64, tau_minus: f64) -> Result<(), TheoryError> {
    if !(tau_plus > 0.0 && tau_minus > 0.0) {
        return Err(invalid(format!("tau+ = {tau_plus}, tau- = {tau_minus} must be positive")));
    }
    Ok(())
}

/// `n/2 - 1 + eta`, the positive degree divided by `p`.
fn half_plus(n: usize, eta: f64) -> f64 {
    n as f64 / 2.0 - 1.0 + eta
}

/// `n/2 - eta`, the negative degree divided by `p`.
fn half_minus(n: usize, eta: f64) -> f64 {
    n as f64 / 2.0 - eta
}

/// `(n/2 - 1 + eta) / (n/2 - eta)`.
fn degree_ratio(n: usize, eta: f64) -> f64 {
    half_plus(n, eta) / half_minus(n, eta)
}

/// `(1, .., 1, -1, .., -1) / sqrt(n)`.
pub fn informative_vector(n: usize) -> Vec<f64> {
    let s = 1.0 / (n as f64).sqrt();
    (0..n).map(|i| if i < n / 2 { s } else { -s }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Eigvec {
    /// `1 / sqrt(n)`
    Constant,
    /// `w`
    Informative,
    /// Orthogonal complement of the two above.
    Bulk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralGroup {
    pub value: f64,
    pub multiplicity: usize,
    pub eigvec: Eigvec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedSpectra {
    pub d_plus: f64,
    pub d_minus: f64,
    /// Spectrum of `E L+`.
    pub l_plus: [SpectralGroup; 3],
    /// Spectrum of `E L-`.
    pub l_minus: [SpectralGroup; 3],
}

pub fn expected_spectra(n: usize, p: f64, eta: f64) -> Result<ExpectedSpectra, TheoryError> {
    check_even(n)?;
    check_eta(eta)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("p = {p} outside (0, 1]")));
    }
    let nf = n as f64;
    let group = |value, multiplicity, eigvec| SpectralGroup {
        value,
        multiplicity,
        eigvec,
    };
    Ok(ExpectedSpectra {
        d_plus: p * half_plus(n, eta),
        d_minus: p * half_minus(n, eta),
        l_plus: [
            group(0.0, 1, Eigvec::Constant),
            group(p * nf * eta, 1, Eigvec::Informative),
            group(nf * p / 2.0, n - 2, Eigvec::Bulk),
        ],
        l_minus: [
            group(0.0, 1, Eigvec::Constant),
            group(p * nf * (1.0 - eta), 1, Eigvec::Informative),
            group(nf * p / 2.0, n - 2, Eigvec::Bulk),
        ],
    })
}

/// Expected positive and negative adjacency matrices and degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedMatrices {
    pub a_plus: DMatrix<f64>,
    pub a_minus: DMatrix<f64>,
    pub d_plus: f64,
    pub d_minus: f64,
}

impl ExpectedMatrices {
    pub fn l_plus(&self) -> DMatrix<f64> {
        DMatrix::identity(self.a_plus.nrows(), self.a_plus.nrows()) * self.d_plus - &self.a_plus
    }

    pub fn l_minus(&self) -> DMatrix<f64> {
        DMatrix::identity(self.a_minus.nrows(), self.a_minus.nrows()) * self.d_minus - &self.a_minus
    }

    /// `E Lbar = E Dbar - E A`.
    pub fn signed_laplacian(&self) -> DMatrix<f64> {
        let n = self.a_plus.nrows();
        DMatrix::identity(n, n) * (self.d_plus + self.d_minus) - (&self.a_plus - &self.a_minus)
    }
}

pub fn expected_matrices(n: usize, p: f64, eta: f64) -> Result<ExpectedMatrices, TheoryError> {
    check_even(n)?;
    check_eta(eta)?;
    let same = |i: usize, j: usize| (i < n / 2) == (j < n / 2);
    let entry = |i: usize, j: usize, intra: f64, inter: f64| {
        if i == j {
            0.0
        } else if same(i, j) {
            intra
        } else {
            inter
        }
    };
    let a_plus = DMatrix::from_fn(n, n, |i, j| entry(i, j, p * (1.0 - eta), p * eta));
    let a_minus = DMatrix::from_fn(n, n, |i, j| entry(i, j, p * eta, p * (1.0 - eta)));
    Ok(ExpectedMatrices {
        d_plus: p * half_plus(n, eta),
        d_minus: p * half_minus(n, eta),
        a_plus,
        a_minus,
    })
}

/// `Tbar = (E L- + tau+ E D+)^{-1/2} (E L+ + tau- E D-) (E L- + tau+ E D+)^{-1/2}`.
pub fn tbar_matrix(
    n: usize,
    p: f64,
    eta: f64,
    tau_plus: f64,
    tau_minus: f64,
) -> Result<DMatrix<f64>, TheoryError> {
    check_taus(tau_plus, tau_minus)?;
    let e = expected_matrices(n, p, eta)?;
    let eye = DMatrix::<f64>::identity(n, n);
    let pbar = e.l_minus() + &eye * (tau_plus * e.d_plus);
    let qbar = e.l_plus() + &eye * (tau_minus * e.d_minus);
    let s = inverse_sqrt_spd(&pbar).map_err(|_| invalid("expected mass matrix is not positive definite"))?;
    Ok(&s * qbar * &s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TbarSpectrum {
    /// Eigenvector `1 / sqrt(n)`.
    pub lambda1: f64,
    /// Eigenvector `w`.
    pub lambda2: f64,
    /// Multiplicity `n - 2`.
    pub lambda3: f64,
    pub lambda1_below_bulk: bool,
    pub lambda2_below_bulk: bool,
}

impl TbarSpectrum {
    /// Separation between the informative eigenvalue(s) of `mode` and the
    /// rest of the spectrum.
    pub fn gap(&self, mode: TauMode) -> f64 {
        match mode {
            TauMode::BottomTwo => self.lambda3 - self.lambda1.max(self.lambda2),
            TauMode::BottomOne => self.lambda1.min(self.lambda3) - self.lambda2,
        }
    }
}

pub fn tbar_spectrum(n: usize, eta: f64, tau_plus: f64, tau_minus: f64) -> Result<TbarSpectrum, TheoryError> {
    check_eta(eta)?;
    check_taus(tau_plus, tau_minus)?;
    let nf = n as f64;
    let (hp, hm) = (half_plus(n, eta), half_minus(n, eta));
    let lambda1 = tau_minus * hm / (tau_plus * hp);
    let lambda2 = (nf * eta + tau_minus * hm) / (nf * (1.0 - eta) + tau_plus * hp);
    let lambda3 = (nf + 2.0 * tau_minus * hm) / (nf + 2.0 * tau_plus * hp);
    Ok(TbarSpectrum {
        lambda1,
        lambda2,
        lambda3,
        lambda1_below_bulk: lambda1 < lambda3,
        lambda2_below_bulk: lambda2 < lambda3,
    })
}

/// Which eigenvectors of `Tbar` are meant to carry the partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauMode {
    /// The bottom two, spanning `{1, w}`.
    BottomTwo,
    /// The bottom one, equal to `w`.
    BottomOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauWindow {
    /// `tau-` must stay below this for [`TauMode::BottomTwo`].
    pub upper_k2: f64,
    /// `tau-` must exceed this for [`TauMode::BottomOne`].
    pub lower_k1: f64,
}

pub fn tau_window(n: usize, eta: f64, tau_plus: f64) -> TauWindow {
    let r = degree_ratio(n, eta);
    TauWindow {
        upper_k2: tau_plus * r,
        lower_k1: tau_plus * eta / (1.0 - eta) * r,
    }
}

pub fn tau_admissible(n: usize, eta: f64, tau_plus: f64, tau_minus: f64, mode: TauMode) -> bool {
    let w = tau_window(n, eta, tau_plus);
    match mode {
        TauMode::BottomTwo => tau_minus < w.upper_k2,
        TauMode::BottomOne => tau_minus > w.lower_k1,
    }
}

fn bulk_term(eta: f64, tau_plus: f64, tau_minus: f64) -> f64 {
    (1.0 - 2.0 * eta) / 3.0 * (3.0 + tau_plus + tau_minus) / (1.0 + tau_plus).powi(2)
}

/// Lower bound on [`TbarSpectrum::gap`] under the `eps_tau`-strengthened
/// admissibility condition of `mode`.
pub fn spectral_gap_lower_bound(
    n: usize,
    eta: f64,
    tau_plus: f64,
    tau_minus: f64,
    eps_tau: f64,
    mode: TauMode,
) -> Result<f64, TheoryError> {
    check_eta(eta)?;
    check_taus(tau_plus, tau_minus)?;
    if n < 6 {
        return Err(TheoryError::ConditionViolated {
            condition: "n >= 6".into(),
            lhs: n as f64,
            rhs: 6.0,
        });
    }
    if !(eps_tau > 0.0 && eps_tau < 1.0) {
        return Err(invalid(format!("eps_tau = {eps_tau} outside (0, 1)")));
    }
    let w = tau_window(n, eta, tau_plus);
    let second = bulk_term(eta, tau_plus, tau_minus);
    match mode {
        TauMode::BottomTwo => {
            let rhs = eps_tau * w.upper_k2;
            if tau_minus > rhs {
                return Err(TheoryError::ConditionViolated {
                    condition: "tau- <= eps_tau * tau+ * ratio".into(),
                    lhs: tau_minus,
                    rhs,
                });
            }
            Ok((2.0 * (1.0 - eps_tau) / (3.0 * (1.0 + tau_plus))).min(second))
        }
        TauMode::BottomOne => {
            let rhs = w.lower_k1 / eps_tau;
            if tau_minus < rhs {
                return Err(TheoryError::ConditionViolated {
                    condition: "tau- >= (1/eps_tau) * eta/(1-eta) * ratio * tau+".into(),
                    lhs: tau_minus,
                    rhs,
                });
            }
            Ok((eta * (1.0 / eps_tau - 1.0) / (1.0 - eta + tau_plus)).min(second))
        }
    }
}

/// Spectral-norm deviation budgets for `A+-` and `D+-`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationBudget {
    pub n: usize,
    pub p: f64,
    pub eta: f64,
    pub eps_conc: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
    /// `((1 + eps) 2 sqrt 2 + 1) sqrt(n p)`
    pub delta_a: f64,
    /// `sqrt(3 p n log n)`
    pub delta_d: f64,
    /// `delta_a + delta_d (1 + tau+)`
    pub delta_ad_plus: f64,
    /// `delta_a + delta_d (1 + tau-)`
    pub delta_ad_minus: f64,
    /// `p > 6 log n / (n/2 - 1 + eta)`, needed for `delta_d` to hold for `D+`.
    pub chernoff_plus_ok: bool,
    /// `p > 6 log n / (n/2 - eta)`, needed for `delta_d` to hold for `D-`.
    pub chernoff_minus_ok: bool,
}

/// Computes the budget for any `p > 0`; whether the degree bound actually
/// applies is reported in the `chernoff_*_ok` flags.
pub fn concentration_budget(
    n: usize,
    p: f64,
    eta: f64,
    eps_conc: f64,
    tau_plus: f64,
    tau_minus: f64,
) -> Result<ConcentrationBudget, TheoryError> {
    if !(p > 0.0) {
        return Err(TheoryError::PTooSmallForChernoff(p));
    }
    if !(eps_conc > 0.0 && eps_conc <= 0.5) {
        return Err(invalid(format!("eps_conc = {eps_conc} outside (0, 1/2]")));
    }
    check_eta(eta)?;
    check_taus(tau_plus, tau_minus)?;
    let nf = n as f64;
    let delta_a = ((1.0 + eps_conc) * 2.0 * 2f64.sqrt() + 1.0) * (nf * p).sqrt();
    let delta_d = (3.0 * p * nf * nf.ln()).sqrt();
    let ln6 = 6.0 * nf.ln();
    Ok(ConcentrationBudget {
        n,
        p,
        eta,
        eps_conc,
        tau_plus,
        tau_minus,
        delta_a,
        delta_d,
        delta_ad_plus: delta_a + delta_d * (1.0 + tau_plus),
        delta_ad_minus: delta_a + delta_d * (1.0 + tau_minus),
        chernoff_plus_ok: p > ln6 / half_plus(n, eta),
        chernoff_minus_ok: p > ln6 / half_minus(n, eta),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub which: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// The two requirements `delta_ad+- <= (tau+- p / 2) * degree / p`.
pub fn perturbation_hypotheses(b: &ConcentrationBudget) -> [Hypothesis; 2] {
    let rhs_plus = b.tau_plus * b.p / 2.0 * half_plus(b.n, b.eta);
    let rhs_minus = b.tau_minus * b.p / 2.0 * half_minus(b.n, b.eta);
    [
        Hypothesis {
            which: "delta_ad_plus",
            lhs: b.delta_ad_plus,
            rhs: rhs_plus,
            holds: b.delta_ad_plus <= rhs_plus,
        },
        Hypothesis {
            which: "delta_ad_minus",
            lhs: b.delta_ad_minus,
            rhs: rhs_minus,
            holds: b.delta_ad_minus <= rhs_minus,
        },
    ]
}

/// Upper bound on `||T - Tbar||_2`; errors with the first failed hypothesis.
pub fn perturbation_bound(b: &ConcentrationBudget) -> Result<f64, TheoryError> {
    for h in perturbation_hypotheses(b) {
        if !h.holds {
            return Err(TheoryError::HypothesisViolated {
                which: h.which.into(),
                lhs: h.lhs,
                rhs: h.rhs,
            });
        }
    }
    Ok(perturbation_terms(
        b.delta_ad_plus,
        b.delta_ad_minus,
        b.n,
        b.p,
        b.eta,
        b.tau_plus,
        b.tau_minus,
    )
    .iter()
    .sum())
}

/// The five summands of the perturbation bound for given deviation budgets.
pub fn perturbation_terms(
    delta_plus: f64,
    delta_minus: f64,
    n: usize,
    p: f64,
    eta: f64,
    tau_plus: f64,
    tau_minus: f64,
) -> [f64; 5] {
    let s = tau_plus * p * half_plus(n, eta);
    let m = n as f64 / 2.0 * p + tau_minus * p * half_minus(n, eta);
    let r8 = 2.0 * 2f64.sqrt();
    [
        r8 * delta_plus.sqrt() / s.powf(1.5) * m,
        delta_minus / s,
        r8 * delta_minus * delta_plus.sqrt() / s.powf(1.5),
        2.0 * delta_plus * delta_minus / (s * s),
        2.0 * delta_plus / (s * s) * m,
    ]
}

/// `(1 + eps) 2 sqrt 2 + 1 + sqrt 3`.
pub fn c_tilde(eps_conc: f64) -> f64 {
    (1.0 + eps_conc) * 2.0 * 2f64.sqrt() + 1.0 + 3f64.sqrt()
}

pub fn c_bar(eps_conc: f64, tau_plus: f64, tau_minus: f64) -> f64 {
    let c = c_tilde(eps_conc);
    let tp = tau_plus;
    27f64.sqrt() * 2f64.sqrt() * c.sqrt() * (1.0 + tau_minus) / tp.powf(1.5)
        + 3.0 * c / tp
        + 6f64.powf(1.5) * c.powf(1.5) / tp.powf(1.5)
        + 18.0 * c * c / (tp * tp)
        + 9.0 * c * (1.0 + tau_minus) / (tp * tp)
}

/// Candidate terms of the sufficient density for subspace recovery with
/// SPONGE; the threshold is `max(terms) * log n / n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PThreshold {
    pub terms: [f64; 4],
    pub gap_lower_bound: f64,
    pub threshold: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn sponge_p_threshold(
    n: usize,
    eta: f64,
    tau_plus: f64,
    tau_minus: f64,
    eps_conc: f64,
    eps_acc: f64,
    eps_tau: f64,
    mode: TauMode,
) -> Result<PThreshold, TheoryError> {
    if !(eps_acc > 0.0 && eps_acc < 1.0) {
        return Err(invalid(format!("eps_acc = {eps_acc} outside (0, 1)")));
    }
    let gap = spectral_gap_lower_bound(n, eta, tau_plus, tau_minus, eps_tau, mode)?;
    let c = c_tilde(eps_conc);
    let terms = [
        24.0,
        36.0 * c * c / (tau_plus * tau_plus),
        36.0 * c * c / (tau_minus * tau_minus),
        (c_bar(eps_conc, tau_plus, tau_minus) / (eps_acc * gap)).powi(4),
    ];
    let nf = n as f64;
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(PThreshold {
        terms,
        gap_lower_bound: gap,
        threshold: max * nf.ln() / nf,
    })
}

/// `1 - 4/n - 2 n exp(-p n / c_eps)` for a caller-supplied constant `c_eps`.
pub fn sponge_success_probability(n: usize, p: f64, c_eps: f64) -> f64 {
    let nf = n as f64;
    1.0 - 4.0 / nf - 2.0 * nf * (-p * nf / c_eps).exp()
}

/// `1 - 2/n - n exp(-p n / (4 c_eps))` for a caller-supplied constant `c_eps`.
pub fn lbar_success_probability(n: usize, p: f64, c_eps: f64) -> f64 {
    let nf = n as f64;
    1.0 - 2.0 / nf - nf * (-p * nf / (4.0 * c_eps)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LbarSpectrum {
    pub lambda_min: f64,
    pub lambda_bulk: f64,
    pub bulk_multiplicity: usize,
    /// Eigenvector of `lambda_min`, equal to `w`.
    pub v_min: Vec<f64>,
}

/// Spectrum of the expected signed Laplacian.
pub fn signed_laplacian_expected_spectrum(n: usize, p: f64, eta: f64) -> Result<LbarSpectrum, TheoryError> {
    check_even(n)?;
    check_eta(eta)?;
    let nf = n as f64;
    Ok(LbarSpectrum {
        lambda_min: 2.0 * eta * (nf - 1.0) * p,
        lambda_bulk: (nf - 2.0 * eta) * p,
        bulk_multiplicity: n - 1,
        v_min: informative_vector(n),
    })
}

/// Density above which `v_n(Lbar)` is provably close to `w`.
pub fn lbar_p_threshold(n: usize, eta: f64, eps_conc: f64, eps_acc: f64) -> Result<f64, TheoryError> {
    check_eta(eta)?;
    if !(eps_acc > 0.0 && eps_acc < 1.0) {
        return Err(invalid(format!("eps_acc = {eps_acc} outside (0, 1)")));
    }
    if !(eps_conc > 0.0 && eps_conc <= 0.5) {
        return Err(invalid(format!("eps_conc = {eps_conc} outside (0, 1/2]")));
    }
    let nf = n as f64;
    let c = (1.0 + eps_conc) * 2.0 * 2f64.sqrt() + 1.0;
    Ok(4.0 * c * c / (eps_acc * eps_acc * (1.0 - 2.0 * eta).powi(2)) * nf.ln() / nf)
}

/// Interval containing an eigenvalue after a perturbation of norm `w_norm`.
pub fn weyl_interval(lambda_bar: f64, w_norm: f64) -> (f64, f64) {
    (lambda_bar - w_norm, lambda_bar + w_norm)
}

/// `2 exp(-mu delta^2 / 3)`.
pub fn chernoff_tail(mu: f64, delta: f64) -> f64 {
    2.0 * (-mu * delta * delta / 3.0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn expected_spectra_values() {
        let s = expected_spectra(10, 0.5, 0.1).unwrap();
        assert!(close(s.d_plus, 2.05, 1e-12));
        assert!(close(s.d_minus, 2.45, 1e-12));
        assert!(close(s.l_plus[1].value, 0.5, 1e-12));
        assert!(close(s.l_plus[2].value, 2.5, 1e-12));
        assert!(close(s.l_minus[1].value, 4.5, 1e-12));
        assert_eq!(expected_spectra(6, 1.0, 0.0).unwrap().l_plus[1].value, 0.0);
        assert!(close(expected_spectra(6, 1.0, 0.25).unwrap().l_minus[1].value, 4.5, 1e-12));
        assert_eq!(expected_spectra(7, 0.5, 0.1).unwrap_err(), TheoryError::OddN(7));
    }

    #[test]
    fn tbar_groups() {
        let t = tbar_spectrum(10, 0.1, 1.0, 0.5).unwrap();
        assert!(close(t.lambda1, 0.597561, 1e-6));
        assert!(close(t.lambda2, 0.263359, 1e-6));
        assert!(close(t.lambda3, 0.818681, 1e-6));
        assert!(t.lambda1_below_bulk && t.lambda2_below_bulk);
        let t = tbar_spectrum(10, 0.1, 1.0, 1.0).unwrap();
        assert!(close(t.lambda1, 1.195122, 1e-6));
        assert!(close(t.lambda3, 1.087912, 1e-6));
        assert!(!t.lambda1_below_bulk);
        let t = tbar_spectrum(1_000_000, 0.2, 1.3, 1.3).unwrap();
        assert!(close(t.lambda3, 1.0, 1e-5));
    }

    #[test]
    fn tau_conditions() {
        assert!(close(tau_window(10, 0.1, 1.0).upper_k2, 0.836735, 1e-6));
        assert!(tau_admissible(10, 0.1, 1.0, 0.5, TauMode::BottomTwo));
        assert!(!tau_admissible(10, 0.1, 1.0, 1.0, TauMode::BottomTwo));
        for (tp, tm) in [(0.1, 10.0), (10.0, 0.1), (1.0, 1e-6)] {
            assert!(tau_admissible(50, 0.0, tp, tm, TauMode::BottomOne));
        }
    }

    #[test]
    fn gap_bound_example() {
        let b = spectral_gap_lower_bound(10, 0.1, 1.0, 0.5, 0.6, TauMode::BottomTwo).unwrap();
        assert!(close(b, 2.0 / 15.0, 1e-12));
        let gap = tbar_spectrum(10, 0.1, 1.0, 0.5).unwrap().gap(TauMode::BottomTwo);
        assert!(close(gap, 0.221120, 1e-6) && gap >= b);
        let b0 = spectral_gap_lower_bound(10, 0.0, 1.0, 1e-3, 0.5, TauMode::BottomTwo).unwrap();
        assert!(close(b0, (2.0 * 0.5 / 6.0f64).min((3.0 + 1.0 + 1e-3) / 12.0), 1e-12));
        assert!(matches!(
            spectral_gap_lower_bound(10, 0.1, 1.0, 1.0, 0.6, TauMode::BottomTwo),
            Err(TheoryError::ConditionViolated { .. })
        ));
    }

    #[test]
    fn budget_and_perturbation() {
        let b = concentration_budget(100, 0.1, 0.1, 0.5, 1.0, 1.0).unwrap();
        assert!(close(b.delta_a, 16.5788, 2e-4));
        assert!(close(b.delta_d, 11.7539, 1e-4));
        assert!(close(b.delta_ad_plus, 40.0866, 1e-4));
        assert!(!b.chernoff_plus_ok);
        match perturbation_bound(&b).unwrap_err() {
            TheoryError::HypothesisViolated { which, lhs, rhs } => {
                assert_eq!(which, "delta_ad_plus");
                assert!(close(lhs, 40.0866, 1e-4) && close(rhs, 2.455, 1e-12));
            }
            e => panic!("unexpected {e:?}"),
        }
        assert_eq!(
            concentration_budget(100, 0.0, 0.1, 0.5, 1.0, 1.0).unwrap_err(),
            TheoryError::PTooSmallForChernoff(0.0)
        );
        let zero: f64 = perturbation_terms(0.0, 0.0, 100, 0.1, 0.1, 1.0, 1.0).iter().sum();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn lbar_and_thresholds() {
        let s = signed_laplacian_expected_spectrum(10, 0.5, 0.1).unwrap();
        assert!(close(s.lambda_min, 0.9, 1e-12) && close(s.lambda_bulk, 4.9, 1e-12));
        let s = signed_laplacian_expected_spectrum(2, 1.0, 0.25).unwrap();
        assert!(close(s.lambda_min, 0.5, 1e-12) && close(s.lambda_bulk, 1.5, 1e-12));
        assert!(close(lbar_p_threshold(1000, 0.1, 0.5, 0.5).unwrap(), 4.7465, 1e-4));
        assert!(close(chernoff_tail(12.0, 0.5), 0.735759, 1e-6));
        assert_eq!(chernoff_tail(5.0, 0.0), 2.0);
        assert_eq!(weyl_interval(2.0, 0.0), (2.0, 2.0));
    }
}
