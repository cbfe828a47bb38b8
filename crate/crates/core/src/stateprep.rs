//! Cat and compass states from a single measurement round.
//!
//! The ancilla angle is tuned so that the Kerr term equals `π/2` (cat) or
//! `π/4` (compass); the linear phase is undone exactly once `m` is known,
//! leaving only the Gaussian decay `exp(-ζ (n - m/g)²)` as an error.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{apply_number_diagonal, coherent_state, fidelity, FockVector};
use crate::gaussian_map::{siegel_from_rtheta, solve_theta_for_gamma, AncillaGaussian};
use crate::protocol::{conditioned_state, outcome_pdf, CorrectionMode};
use crate::scalar::{cx, Cx, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Cat,
    Compass,
}

impl TargetKind {
    pub fn gamma<T: Real>(&self) -> T {
        match self {
            TargetKind::Cat => T::FRAC_PI_2(),
            TargetKind::Compass => T::FRAC_PI_4(),
        }
    }
}

/// `e^{-iγ n²}|α⟩`.
#[derive(Debug, Clone)]
pub struct PrepTarget<T> {
    pub kind: TargetKind,
    pub gamma_target: T,
    pub alpha: Cx<T>,
    pub state: FockVector<T>,
}

impl<T: Real> PrepTarget<T> {
    pub fn new(kind: TargetKind, alpha: Cx<T>, n_trunc: usize) -> Result<Self> {
        let gamma = kind.gamma::<T>();
        let coh = coherent_state(alpha, n_trunc)?;
        let state = kerr_evolve(&coh, gamma)?;
        Ok(Self {
            kind,
            gamma_target: gamma,
            alpha,
            state,
        })
    }
}

/// `e^{-iγ n²}` applied to `state`.
pub fn kerr_evolve<T: Real>(state: &FockVector<T>, gamma: T) -> Result<FockVector<T>> {
    let (out, _) = apply_number_diagonal(state, |n| {
        let nn = T::of_usize(n);
        cx(T::zero(), -gamma * nn * nn)
    })?;
    out.normalize()
}

/// Fixed channel for one preparation recipe.
#[derive(Debug, Clone)]
pub struct Preparation<T> {
    pub target: PrepTarget<T>,
    pub input: FockVector<T>,
    pub ancilla: AncillaGaussian<T>,
    pub g: T,
    pub theta: T,
    pub zeta: T,
}

impl<T: Real> Preparation<T> {
    pub fn new(alpha: Cx<T>, r: T, g: T, kind: TargetKind, n_trunc: usize) -> Result<Self> {
        let theta = solve_theta_for_gamma(r, g, kind.gamma::<T>())?;
        let ancilla = siegel_from_rtheta(r, theta);
        Ok(Self {
            target: PrepTarget::new(kind, alpha, n_trunc)?,
            input: coherent_state(alpha, n_trunc)?,
            ancilla,
            g,
            theta,
            zeta: ancilla.channel_params(g).zeta,
        })
    }

    /// Conditioned state and its fidelity to the target for outcome `m`.
    pub fn at_outcome(&self, m: T) -> Result<(FockVector<T>, T)> {
        let (state, _) = conditioned_state(&self.input, &self.ancilla, self.g, m, CorrectionMode::Exact)?;
        let f = fidelity(&state, &self.target.state)?;
        Ok((state, f))
    }

    pub fn run_once(&self, seed: u64) -> Result<(FockVector<T>, T, T)> {
        let pdf = outcome_pdf(&self.input, &self.ancilla, self.g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = pdf.sample(&mut rng);
        let (state, f) = self.at_outcome(m)?;
        Ok((state, m, f))
    }
}

/// Default truncation: mean plus twelve standard deviations of the photon
/// number, at least 40.
pub fn default_n_trunc(alpha_abs: f64) -> usize {
    let nb = alpha_abs * alpha_abs;
    ((nb + 12.0 * nb.sqrt() + 20.0).ceil() as usize).max(40)
}

/// Samples `m`, applies the exact correction and scores the result.
pub fn prepare_once<T: Real>(
    alpha: Cx<T>,
    r: T,
    g: T,
    kind: TargetKind,
    rng_seed: u64,
) -> Result<(FockVector<T>, T, T)> {
    let n_trunc = default_n_trunc(alpha.norm().as_f64());
    Preparation::new(alpha, r, g, kind, n_trunc)?.run_once(rng_seed)
}

/// Seed of run `index` derived from a base seed.
pub fn run_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PrepRun<T> {
    pub m: T,
    pub fidelity: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrepReport<T> {
    pub kind: TargetKind,
    pub alpha_re: T,
    pub alpha_im: T,
    pub r: T,
    pub g: T,
    pub theta: T,
    pub seed: u64,
    pub n_trunc: usize,
    pub runs: Vec<PrepRun<T>>,
    pub f_avg: T,
    /// Standard error of `f_avg`.
    pub f_std_err: T,
    pub zeta: T,
    /// `1 - ζ|α|²`
    pub asymptote: T,
    /// Closed-form `E[m]` and `E[m²]`.
    pub m_mean: T,
    pub m_second_moment: T,
}

impl<T: Real> PrepReport<T> {
    pub fn infidelity(&self) -> T {
        T::one() - self.f_avg
    }

    pub fn sample_m_moments(&self) -> (T, T) {
        let n = T::of_usize(self.runs.len());
        let m1 = self.runs.iter().map(|r| r.m).sum::<T>() / n;
        let m2 = self.runs.iter().map(|r| r.m * r.m).sum::<T>() / n;
        (m1, m2)
    }
}

pub fn average_fidelity<T: Real>(
    alpha: Cx<T>,
    r: T,
    g: T,
    kind: TargetKind,
    n_runs: usize,
    rng_seed: u64,
) -> Result<PrepReport<T>> {
    let n_trunc = default_n_trunc(alpha.norm().as_f64());
    average_fidelity_with(alpha, r, g, kind, n_runs, rng_seed, n_trunc)
}

pub fn average_fidelity_with<T: Real>(
    alpha: Cx<T>,
    r: T,
    g: T,
    kind: TargetKind,
    n_runs: usize,
    rng_seed: u64,
    n_trunc: usize,
) -> Result<PrepReport<T>> {
    if n_runs == 0 {
        return Err(Error::InvalidParameter("n_runs must be at least 1".into()));
    }
    let prep = Preparation::new(alpha, r, g, kind, n_trunc)?;
    let runs: Vec<PrepRun<T>> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let (_, m, f) = prep.run_once(run_seed(rng_seed, i))?;
            Ok(PrepRun { m, fidelity: f })
        })
        .collect::<Result<_>>()?;
    let n = T::of_usize(n_runs);
    let f_avg = runs.iter().map(|r| r.fidelity).sum::<T>() / n;
    let var = if n_runs > 1 {
        runs.iter().map(|r| (r.fidelity - f_avg).powi(2)).sum::<T>() / (n - T::one())
    } else {
        T::zero()
    };
    let a2 = alpha.norm_sqr();
    Ok(PrepReport {
        kind,
        alpha_re: alpha.re,
        alpha_im: alpha.im,
        r,
        g,
        theta: prep.theta,
        seed: rng_seed,
        n_trunc,
        runs,
        f_avg,
        f_std_err: (var / n).sqrt(),
        zeta: prep.zeta,
        asymptote: T::one() - prep.zeta * a2,
        m_mean: g * a2,
        m_second_moment: g * g * ((T::lit(4.0) * prep.zeta).recip() + a2 * (T::one() + a2)),
    })
}
