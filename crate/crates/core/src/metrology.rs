//! Fisher information of the conditioned probe with respect to a small
//! parameter of the ancilla.
//!
//! The total information splits into the classical part carried by the
//! outcome density and the outcome-averaged pure-state QFI of the
//! conditioned probe. Both are integrated over `m` adaptively.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{coherent_state, FockVector};
use crate::gaussian_map::siegel_from_rtheta;
use crate::protocol::{correction_rate, CorrectionMode};
use crate::quadrature::{integrate, QuadOptions};
use crate::scalar::{cx, log_sum_exp, Cx, Real};

/// How a parameter `x` enters the measurement channel.
///
/// The probe sees `exp(-K(x) (g n - m)² + i ω(m, x) n)`; derivatives are
/// taken at the bias point.
pub trait EstimationModel<T: Real>: Sync {
    fn coupling(&self) -> T;
    fn bias(&self) -> T;
    fn kernel(&self, x: T) -> Cx<T>;
    /// `dK/dx` at the bias point.
    fn kernel_rate(&self) -> Cx<T>;
    /// Correction coefficient `ω(m, x)`.
    fn correction(&self, m: T, x: T) -> T;
    /// `(dω/dx) / m` at the bias point.
    fn correction_rate(&self) -> T;
    fn parameter_name(&self) -> &'static str;
}

/// Phase estimation: the ancilla angle is `θ₀ + δθ`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThetaModel<T> {
    pub r: T,
    pub theta0: T,
    pub g: T,
    pub correction: CorrectionMode,
}

impl<T: Real> ThetaModel<T> {
    pub fn new(r: T, theta0: T, g: T, correction: CorrectionMode) -> Result<Self> {
        if theta0.sin().abs() < T::lit(1e-6) {
            return Err(Error::ThetaNearSingular {
                theta0: theta0.as_f64(),
            });
        }
        if let CorrectionMode::Linear(t) = correction {
            if t.sin().abs() < 1e-6 {
                return Err(Error::ThetaNearSingular { theta0: t });
            }
        }
        if correction == CorrectionMode::Exact {
            return Err(Error::InvalidParameter(
                "exact correction presumes the angle is known; use none or linear".into(),
            ));
        }
        if !(g > T::zero()) || !(r >= T::zero()) {
            return Err(Error::InvalidParameter(format!("need r >= 0 and g > 0, got r={r}, g={g}")));
        }
        Ok(Self {
            r,
            theta0,
            g,
            correction,
        })
    }
}

impl<T: Real> EstimationModel<T> for ThetaModel<T> {
    fn coupling(&self) -> T {
        self.g
    }

    fn bias(&self) -> T {
        self.theta0
    }

    fn kernel(&self, x: T) -> Cx<T> {
        siegel_from_rtheta(self.r, x).kernel()
    }

    fn kernel_rate(&self) -> Cx<T> {
        // K = Ξ / (4(1 + i s)) with Ξ, s the Siegel denominators.
        let two = T::lit(2.0);
        let (s2, c2) = (two * self.theta0).sin_cos();
        let sh = (two * self.r).sinh();
        let anc = siegel_from_rtheta(self.r, self.theta0);
        let xi = anc.xi();
        let s = s2 * sh;
        let dxi = -two * sh * s2;
        let ds = two * c2 * sh;
        let d = cx(T::one(), s);
        (cx(dxi, T::zero()) * d - cx(T::zero(), xi * ds)) / (d * d * T::lit(4.0))
    }

    fn correction(&self, m: T, x: T) -> T {
        correction_rate(&siegel_from_rtheta(self.r, x), self.g, m, self.correction)
            .expect("validated in ThetaModel::new")
    }

    fn correction_rate(&self) -> T {
        match self.correction {
            CorrectionMode::Linear(t0) => {
                let cot = T::lit(t0).tan().recip();
                -self.g * (T::one() + cot * cot) * T::lit(0.5)
            }
            _ => T::zero(),
        }
    }

    fn parameter_name(&self) -> &'static str {
        "theta"
    }
}

/// Probe amplitudes cached as `(n, ln|c_n|²)` for the nonzero entries.
struct LogWeights<T> {
    terms: Vec<(usize, T)>,
}

impl<T: Real> LogWeights<T> {
    fn new(input: &FockVector<T>) -> Self {
        let norm = input.norm_sqr();
        let terms = input
            .populations()
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > T::zero())
            .map(|(n, p)| (n, (p / norm).ln()))
            .collect();
        Self { terms }
    }
}

/// Per-outcome quantities: density, pure-state QFI and `∂ ln P`.
#[derive(Debug, Clone, Copy)]
pub struct OutcomeInfo<T> {
    pub density: T,
    pub qfi: T,
    pub dlog_density: T,
}

fn outcome_info<T: Real, M: EstimationModel<T> + ?Sized>(model: &M, lw: &LogWeights<T>, m: T) -> OutcomeInfo<T> {
    let g = model.coupling();
    let k = model.kernel(model.bias());
    let dk = model.kernel_rate();
    let dc = model.correction_rate();
    let two = T::lit(2.0);
    let kr = k.re;

    let logs: Vec<T> = lw
        .terms
        .iter()
        .map(|&(n, l)| {
            let d = g * T::of_usize(n) - m;
            l - two * kr * d * d
        })
        .collect();
    let ln_z = log_sum_exp(logs.iter().copied());
    let (mut e_abs, mut e_df, mut e_score) = (T::zero(), cx(T::zero(), T::zero()), T::zero());
    for (&(n, _), &l) in lw.terms.iter().zip(&logs) {
        let p = (l - ln_z).exp();
        let nn = T::of_usize(n);
        let d = g * nn - m;
        let df = -dk * (d * d) + cx(T::zero(), dc * m * nn);
        e_abs = e_abs + p * df.norm_sqr();
        e_df = e_df + df * p;
        e_score = e_score + p * ((two * kr).recip() - two * d * d);
    }
    let qfi = (T::lit(4.0) * (e_abs - e_df.norm_sqr())).max(T::zero());
    let density = (two * kr / T::PI()).sqrt() * ln_z.exp();
    OutcomeInfo {
        density,
        qfi,
        dlog_density: dk.re * e_score,
    }
}

/// Pure-state QFI of the conditioned probe for outcome `m`.
pub fn qfi_pure_conditioned<T: Real>(
    input: &FockVector<T>,
    r: T,
    theta0: T,
    g: T,
    m: T,
    correction: CorrectionMode,
) -> Result<T> {
    let model = ThetaModel::new(r, theta0, g, correction)?;
    Ok(qfi_for_outcome(&model, input, m))
}

pub fn qfi_for_outcome<T: Real, M: EstimationModel<T> + ?Sized>(model: &M, input: &FockVector<T>, m: T) -> T {
    outcome_info(model, &LogWeights::new(input), m).qfi
}

pub fn outcome_information<T: Real, M: EstimationModel<T> + ?Sized>(
    model: &M,
    input: &FockVector<T>,
    m: T,
) -> OutcomeInfo<T> {
    outcome_info(model, &LogWeights::new(input), m)
}

/// Range of outcomes integrated over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum MWindow {
    /// Mixture support widened by `k` standard deviations.
    Auto { k: f64 },
    Fixed { lo: f64, hi: f64 },
}

impl Default for MWindow {
    fn default() -> Self {
        MWindow::Auto { k: 8.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherInfo<T> {
    pub classical: T,
    pub quantum_avg: T,
    pub total: T,
    /// `∫ P dm` over the window, kept as a diagnostic.
    pub mass: T,
    pub m_lo: T,
    pub m_hi: T,
}

/// Classical and outcome-averaged quantum Fisher information.
pub fn generalized_qfi<T: Real, M: EstimationModel<T> + ?Sized>(
    model: &M,
    input: &FockVector<T>,
    window: MWindow,
    opts: &QuadOptions,
) -> Result<FisherInfo<T>> {
    let lw = LogWeights::new(input);
    let g = model.coupling();
    let kr = model.kernel(model.bias()).re;
    let sd = (T::lit(4.0) * kr).recip().sqrt();
    let (lo, hi) = match window {
        MWindow::Fixed { lo, hi } => (T::lit(lo), T::lit(hi)),
        MWindow::Auto { k } => {
            let wmax = lw.terms.iter().fold(T::neg_infinity(), |a, &(_, l)| a.max(l));
            let cut = wmax + T::lit(-16.0 * std::f64::consts::LN_10);
            let live: Vec<T> = lw
                .terms
                .iter()
                .filter(|(_, l)| *l > cut)
                .map(|&(n, _)| g * T::of_usize(n))
                .collect();
            let a = live.iter().fold(T::infinity(), |a, &b| a.min(b));
            let b = live.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
            (a - T::lit(k) * sd, b + T::lit(k) * sd)
        }
    };
    let panels = ((hi - lo) / (sd + sd)).ceil().to_usize().unwrap_or(1).clamp(8, 20_000);
    let opts = QuadOptions {
        initial_panels: panels.max(opts.initial_panels),
        ..*opts
    };
    let res = integrate(
        |m| {
            let o = outcome_info(model, &lw, m);
            vec![o.density * o.dlog_density * o.dlog_density, o.density * o.qfi, o.density]
        },
        lo,
        hi,
        3,
        &opts,
    )?;
    let (classical, quantum_avg) = (res.value[0], res.value[1]);
    Ok(FisherInfo {
        classical,
        quantum_avg,
        total: classical + quantum_avg,
        mass: res.value[2],
        m_lo: lo,
        m_hi: hi,
    })
}

/// Standard quantum limit, squeezed vacuum and Kerr baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Baselines<T> {
    pub sql: T,
    pub heisenberg: T,
    pub kerr: T,
}

pub fn baselines<T: Real>(n_bar: T) -> Baselines<T> {
    let (two, three, four) = (T::lit(2.0), T::lit(3.0), T::lit(4.0));
    let n2 = n_bar * n_bar;
    Baselines {
        sql: four * n_bar,
        heisenberg: four * two * (n2 + n_bar),
        kerr: four * (four * n2 * n_bar + two * three * n2 + n_bar),
    }
}

/// Local slope `d ln F / d ln n̄`: central differences inside, one-sided at the ends.
pub fn scaling_exponent<T: Real>(n_bar: &[T], fisher: &[T]) -> Result<Vec<T>> {
    if n_bar.len() != fisher.len() {
        return Err(Error::DimensionMismatch {
            left: n_bar.len(),
            right: fisher.len(),
        });
    }
    if n_bar.len() < 3 {
        return Err(Error::InvalidParameter("scaling exponent needs at least 3 grid points".into()));
    }
    for (index, f) in fisher.iter().enumerate() {
        if !(*f > T::zero()) {
            return Err(Error::NonPositiveFI {
                index,
                value: f.as_f64(),
            });
        }
        if !(n_bar[index] > T::zero()) {
            return Err(Error::InvalidParameter(format!("n_bar[{index}] must be positive")));
        }
    }
    let lx: Vec<T> = n_bar.iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = fisher.iter().map(|x| x.ln()).collect();
    let last = lx.len() - 1;
    Ok((0..=last)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == last => (last - 1, last),
                i => (i - 1, i + 1),
            };
            (ly[b] - ly[a]) / (lx[b] - lx[a])
        })
        .collect())
}

/// `1/√(ν F)`.
pub fn cramer_rao<T: Real>(fisher_total: T, nu: usize) -> T {
    (T::of_usize(nu.max(1)) * fisher_total).sqrt().recip()
}

/// `per_decade` log-spaced points `10^(k/per_decade)` lying in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let pd = per_decade.max(1) as f64;
    let k0 = (lo.log10() * pd - 1e-9).ceil() as i64;
    let k1 = (hi.log10() * pd + 1e-9).floor() as i64;
    (k0..=k1).map(|k| 10f64.powf(k as f64 / pd)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct QfiMetadata {
    pub parameter: String,
    pub r: f64,
    pub bias: f64,
    pub g: f64,
    pub correction: CorrectionMode,
    pub n_trunc: usize,
    pub window: MWindow,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QfiReport<T> {
    pub n_bar: Vec<T>,
    pub f_classical: Vec<T>,
    pub f_quantum_avg: Vec<T>,
    pub f_total: Vec<T>,
    pub eta: Vec<T>,
    pub metadata: QfiMetadata,
}

impl<T: Real> QfiReport<T> {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_bar,F_classical,F_quantum,F_total,eta\n");
        for i in 0..self.n_bar.len() {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.n_bar[i].as_f64(),
                self.f_classical[i].as_f64(),
                self.f_quantum_avg[i].as_f64(),
                self.f_total[i].as_f64(),
                self.eta[i].as_f64()
            );
        }
        s
    }
}

/// Runs [`generalized_qfi`] for coherent probes `|√n̄⟩` on each grid point, in parallel.
pub fn sweep<T: Real, M: EstimationModel<T>>(
    model: &M,
    n_bar: &[T],
    n_trunc: usize,
    window: MWindow,
    opts: &QuadOptions,
    metadata: QfiMetadata,
) -> Result<QfiReport<T>> {
    let infos: Vec<FisherInfo<T>> = n_bar
        .par_iter()
        .map(|&nb| {
            let probe = coherent_state(cx(nb.sqrt(), T::zero()), n_trunc)?;
            generalized_qfi(model, &probe, window, opts)
        })
        .collect::<Result<_>>()?;
    let total: Vec<T> = infos.iter().map(|f| f.total).collect();
    let eta = scaling_exponent(n_bar, &total)?;
    Ok(QfiReport {
        n_bar: n_bar.to_vec(),
        f_classical: infos.iter().map(|f| f.classical).collect(),
        f_quantum_avg: infos.iter().map(|f| f.quantum_avg).collect(),
        f_total: total,
        eta,
        metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, FockVector};
    use crate::protocol::conditioned_with_phase;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn coh(a: f64, n: usize) -> FockVector<f64> {
        coherent_state(Complex64::new(a, 0.0), n).unwrap()
    }

    // 4(⟨dψ|dψ⟩ − |⟨ψ|dψ⟩|²) from conditioned states at x ± h.
    fn fd_qfi<M: EstimationModel<f64>>(model: &M, input: &FockVector<f64>, m: f64, h: f64) -> f64 {
        let x = model.bias();
        let state = |x: f64| {
            conditioned_with_phase(input, model.kernel(x), model.coupling(), m, model.correction(m, x))
                .unwrap()
                .0
        };
        let (p, c, q) = (state(x + h), state(x), state(x - h));
        let dpsi: Vec<Complex64> = p
            .amplitudes()
            .iter()
            .zip(q.amplitudes())
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        let nn: f64 = dpsi.iter().map(|d| d.norm_sqr()).sum();
        let ov: Complex64 = c.amplitudes().iter().zip(&dpsi).map(|(a, d)| a.conj() * d).sum();
        4.0 * (nn - ov.norm_sqr())
    }

    // K(θ) from the cot bracket, differentiated by central differences.
    fn cot_kernel(r: f64, t: f64) -> Complex64 {
        let e = (2.0 * r).exp();
        let c = 1.0 / t.tan();
        Complex64::new(1.0, -e * c) / Complex64::new(e, -c) / 4.0
    }

    #[test]
    fn kernel_rate_matches_cot_bracket() {
        for &(r, t) in &[(2.0, 0.5), (6.0, 0.1), (0.3, 1.2), (4.0, 2.5)] {
            let model = ThetaModel::new(r, t, 1.0, CorrectionMode::None).unwrap();
            let h = 1e-6;
            let fd = (cot_kernel(r, t + h) - cot_kernel(r, t - h)) / (2.0 * h);
            let an = model.kernel_rate();
            assert!((an - fd).norm() < 1e-6 * an.norm().max(1e-3), "r={r} t={t}: {an} vs {fd}");
        }
    }

    #[test]
    fn analytic_qfi_matches_finite_difference() {
        let input = coh(1.5, 40);
        let model = ThetaModel::new(2.0, 0.5, 1.0, CorrectionMode::Linear(0.5)).unwrap();
        let an = qfi_for_outcome(&model, &input, 3.0);
        let fd = fd_qfi(&model, &input, 3.0, 1e-5);
        assert!((an - fd).abs() < 1e-4 * an, "{an} vs {fd}");
    }

    #[test]
    fn qfi_oracle_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let r = rng.random_range(0.2..4.0);
            let t = rng.random_range(0.1..1.5);
            let g = rng.random_range(0.3..1.5);
            let a = rng.random_range(0.5..3.0);
            let mode = if rng.random_bool(0.5) {
                CorrectionMode::Linear(t)
            } else {
                CorrectionMode::None
            };
            let input = coh(a, 60);
            let m = g * a * a + rng.random_range(-2.0..2.0);
            let model = ThetaModel::new(r, t, g, mode).unwrap();
            let an = qfi_for_outcome(&model, &input, m);
            let fd = fd_qfi(&model, &input, m, 1e-5);
            assert!((an - fd).abs() < 1e-4 * an.abs().max(1e-8), "{an} vs {fd}");
        }
    }

    #[test]
    fn number_state_has_zero_qfi() {
        let input = FockVector::<f64>::number_state(3, 10).unwrap();
        let model = ThetaModel::new(2.0, 0.5, 1.0, CorrectionMode::Linear(0.5)).unwrap();
        assert_abs_diff_eq!(qfi_for_outcome(&model, &input, 2.0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn classical_score_matches_finite_difference() {
        let input = coh(1.2, 40);
        let model = ThetaModel::new(1.5, 0.7, 0.9, CorrectionMode::None).unwrap();
        let h = 1e-6;
        let pdf_at = |x: f64| {
            crate::protocol::outcome_pdf_with_kernel(&input, model.kernel(x), 0.9)
        };
        for m in [-1.0, 0.3, 1.1, 2.5] {
            let o = outcome_information(&model, &input, m);
            let fd = (pdf_at(0.7 + h).density(m) - pdf_at(0.7 - h).density(m)) / (2.0 * h) / o.density;
            assert!((o.dlog_density - fd).abs() < 1e-6 * fd.abs().max(1.0));
            assert!((o.density - pdf_at(0.7).density(m)).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_has_no_quantum_term() {
        let model = ThetaModel::new(2.0, 0.3, 1.0, CorrectionMode::Linear(0.3)).unwrap();
        let fi = generalized_qfi(&model, &FockVector::<f64>::vacuum(10), MWindow::default(), &QuadOptions::default()).unwrap();
        assert_abs_diff_eq!(fi.quantum_avg, 0.0, epsilon = 1e-12);
        assert!(fi.classical > 0.0);
        assert!((fi.mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn classical_term_is_small() {
        let model = ThetaModel::new(4.0, 0.1, 1.0, CorrectionMode::Linear(0.1)).unwrap();
        let fi = generalized_qfi(&model, &coh(10f64.sqrt(), 80), MWindow::default(), &QuadOptions::default()).unwrap();
        assert!(fi.classical / fi.quantum_avg < 0.05);
    }

    #[test]
    fn beats_squeezed_baseline() {
        let model = ThetaModel::new(6.0, 0.1, 1.0, CorrectionMode::Linear(0.1)).unwrap();
        for nb in [10.0, 20.0] {
            let fi = generalized_qfi(&model, &coh(f64::sqrt(nb), 120), MWindow::default(), &QuadOptions::default())
                .unwrap();
            assert!(fi.total > baselines(nb).heisenberg);
        }
    }

    #[test]
    fn singular_bias_rejected() {
        assert!(matches!(
            ThetaModel::new(2.0, 0.0, 1.0, CorrectionMode::None),
            Err(Error::ThetaNearSingular { .. })
        ));
        assert!(qfi_pure_conditioned(&coh(1.0, 20), 2.0, 1e-7, 1.0, 0.0, CorrectionMode::None).is_err());
    }

    #[test]
    fn baseline_values() {
        assert_eq!(baselines(0.0), Baselines { sql: 0.0, heisenberg: 0.0, kerr: 0.0 });
        assert_eq!(baselines(1.0), Baselines { sql: 4.0, heisenberg: 16.0, kerr: 44.0 });
        assert_eq!(baselines(4.0), Baselines { sql: 16.0, heisenberg: 160.0, kerr: 1424.0 });
    }

    #[test]
    fn power_law_exponent() {
        let nb = log_grid(1.0, 100.0, 12);
        let f: Vec<f64> = nb.iter().map(|x| 3.0 * x * x).collect();
        for e in scaling_exponent(&nb, &f).unwrap() {
            assert_abs_diff_eq!(e, 2.0, epsilon = 1e-10);
        }
        let nb = log_grid(50.0, 200.0, 12);
        let f: Vec<f64> = nb.iter().map(|&x| baselines(x).kerr).collect();
        let eta: Vec<f64> = scaling_exponent(&nb, &f).unwrap();
        let i = nb.iter().position(|&x| (x - 100.0).abs() < 1e-9).unwrap();
        assert!((eta[i] - 3.0).abs() < 0.05);
    }

    #[test]
    fn exponent_rejects_nonpositive() {
        assert!(matches!(
            scaling_exponent(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]),
            Err(Error::NonPositiveFI { index: 1, .. })
        ));
    }

    #[test]
    fn cramer_rao_values() {
        assert_eq!(cramer_rao(4.0, 1), 0.5);
        assert_abs_diff_eq!(cramer_rao(400.0, 1), 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(cramer_rao(1e4, 100), 1e-3, epsilon = 1e-15);
    }

    fn r6_sweep(mode: CorrectionMode, nb: &[f64], n_trunc: usize) -> QfiReport<f64> {
        let model = ThetaModel::new(6.0, 0.1, 1.0, mode).unwrap();
        let meta = QfiMetadata {
            parameter: "theta".into(),
            r: 6.0,
            bias: 0.1,
            g: 1.0,
            correction: mode,
            n_trunc,
            window: MWindow::default(),
            rel_tol: 1e-5,
        };
        sweep(&model, nb, n_trunc, MWindow::default(), &QuadOptions::default(), meta).unwrap()
    }

    #[test]
    fn fisher_grows_with_photon_number() {
        let nb = log_grid(1.0, 50.0, 12);
        for mode in [CorrectionMode::Linear(0.1), CorrectionMode::None] {
            let rep = r6_sweep(mode, &nb, 120);
            assert!(rep.f_total.windows(2).all(|w| w[1] >= w[0]), "{mode:?}");
        }
    }

    // Without correction the stochastic phase itself carries θ, worth
    // ~n̄·Var(m); the corrected n̄³ growth only overtakes it near n̄ ≈ 40.
    #[test]
    fn correction_dominates_past_crossover() {
        let nb = log_grid(1.0, 100.0, 12);
        let lin = r6_sweep(CorrectionMode::Linear(0.1), &nb, 200);
        let none = r6_sweep(CorrectionMode::None, &nb, 200);
        let ratio: Vec<f64> = lin.f_total.iter().zip(&none.f_total).map(|(a, b)| a / b).collect();
        assert!(ratio.windows(2).all(|w| w[1] > w[0]));
        for (n, r) in nb.iter().zip(&ratio) {
            if *n >= 45.0 {
                assert!(*r > 1.0, "n̄ = {n}: {r}");
            }
        }
    }

    #[test]
    fn truncation_robust_at_largest_n_bar() {
        let nb = [40.0, 45.0, 50.0];
        for mode in [CorrectionMode::Linear(0.1), CorrectionMode::None] {
            let a = r6_sweep(mode, &nb, 120);
            let b = r6_sweep(mode, &nb, 240);
            assert!((a.f_total[2] / b.f_total[2] - 1.0).abs() < 5e-3);
        }
    }

    #[test]
    fn grid_is_twelve_per_decade() {
        let g = log_grid(1.0, 10.0, 12);
        assert_eq!(g.len(), 13);
        assert_abs_diff_eq!(g[12], 10.0, epsilon = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn per_outcome_qfi_nonnegative(r in 0.0f64..6.0, t in 0.05f64..1.5, m in -5.0f64..20.0, a in 0.0f64..3.0) {
            let model = ThetaModel::new(r, t, 1.0, CorrectionMode::Linear(t)).unwrap();
            prop_assert!(qfi_for_outcome(&model, &coh(a, 50), m) >= 0.0);
        }
    }
}
