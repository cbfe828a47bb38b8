//! Ancilla measurement channel acting on the probe.
//!
//! After the number-conditioned displacement of the ancilla and a position
//! measurement with result `m`, the probe amplitudes pick up
//! `exp(-K (g n - m)²)` with `K` the ancilla kernel. The modulus of that
//! factor gives the outcome density, its phase the Kerr term and a
//! `m`-dependent linear phase that the correction removes.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::gaussian_map::AncillaGaussian;
use crate::scalar::{cx, log_sum_exp, Cx, Real};

/// Phase correction applied to the probe once `m` is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "bias", rename_all = "lowercase")]
pub enum CorrectionMode {
    None,
    /// First-order compensation around a known bias (`θ₀`, or `κ₀` for displacement sensing).
    Linear(f64),
    /// Removes the full linear phase; needs the true ancilla angle.
    Exact,
}

impl CorrectionMode {
    pub fn name(&self) -> &'static str {
        match self {
            CorrectionMode::None => "none",
            CorrectionMode::Linear(_) => "linear",
            CorrectionMode::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementOutcome<T> {
    pub m: T,
    pub prob_density: T,
}

/// Coefficient `ω` of the correction `exp(i ω n)` for outcome `m`.
pub fn correction_rate<T: Real>(anc: &AncillaGaussian<T>, g: T, m: T, mode: CorrectionMode) -> Result<T> {
    match mode {
        CorrectionMode::None => Ok(T::zero()),
        CorrectionMode::Exact => Ok(-T::lit(2.0) * g * m * anc.kernel().im),
        CorrectionMode::Linear(theta0) => {
            let t0 = T::lit(theta0);
            if t0.sin().abs() < T::lit(1e-6) {
                return Err(Error::ThetaNearSingular { theta0 });
            }
            let theta = anc.theta.ok_or_else(|| {
                Error::InvalidParameter("linear correction needs an ancilla with a known angle".into())
            })?;
            let cot = t0.tan().recip();
            let dtheta = theta - t0;
            Ok(g * m * T::lit(0.5) * (cot - (T::one() + cot * cot) * dtheta))
        }
    }
}

/// Conditioned probe state for outcome `m`, normalized with its global phase
/// fixed, and the outcome density at `m`.
pub fn conditioned_state<T: Real>(
    input: &FockVector<T>,
    anc: &AncillaGaussian<T>,
    g: T,
    m: T,
    correction: CorrectionMode,
) -> Result<(FockVector<T>, T)> {
    let omega = correction_rate(anc, g, m, correction)?;
    conditioned_with_phase(input, anc.kernel(), g, m, omega)
}

/// As [`conditioned_state`], with kernel `k` and correction coefficient `omega`
/// given directly.
pub fn conditioned_with_phase<T: Real>(
    input: &FockVector<T>,
    k: Cx<T>,
    g: T,
    m: T,
    omega: T,
) -> Result<(FockVector<T>, T)> {
    let amps = input.amplitudes();
    let zero = cx(T::zero(), T::zero());
    let logs: Vec<Option<Cx<T>>> = amps
        .iter()
        .enumerate()
        .map(|(n, c)| {
            if *c == zero {
                return None;
            }
            let nn = T::of_usize(n);
            let d = g * nn - m;
            Some(c.ln() - k * (d * d) + cx(T::zero(), omega * nn))
        })
        .collect();
    let ln_norm = log_sum_exp(logs.iter().flatten().map(|l| l.re + l.re));
    if !ln_norm.is_finite() {
        let n = logs.iter().position(|l| l.is_some()).unwrap_or(0);
        return Err(Error::NonFiniteAmplitude { n });
    }
    let half = ln_norm * T::lit(0.5);
    let out: Vec<Cx<T>> = logs
        .iter()
        .map(|l| l.map_or(zero, |l| (l - cx(half, T::zero())).exp()))
        .collect();
    let state = FockVector::from_amplitudes(out)?.normalize()?.fix_global_phase();
    let prefactor = (T::lit(2.0) * k.re / T::PI()).sqrt();
    Ok((state, prefactor * ln_norm.exp()))
}

/// The four number-diagonal factors in the `(σ, β)` picture:
/// `exp(i χ n²)`, `exp(-κ_d n²)`, `exp(i φ n)`, `exp(λ n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KrausSplit<T> {
    pub chi: T,
    pub decay: T,
    pub linear_phase: T,
    pub linear_gain: T,
}

pub fn kraus_split<T: Real>(anc: &AncillaGaussian<T>, g: T, m: T) -> KrausSplit<T> {
    let two = T::lit(2.0);
    let (sigma2, beta) = (anc.sigma2(), anc.beta());
    let mu = T::lit(4.0) * (beta * beta + (T::lit(4.0) * sigma2 * sigma2).recip());
    KrausSplit {
        chi: beta * g * g / mu,
        decay: g * g / (two * sigma2 * mu),
        linear_phase: -two * beta * m * g / mu,
        linear_gain: two * m * g / (two * sigma2 * mu),
    }
}

/// Applies the factors of [`kraus_split`] one after another and normalizes.
pub fn apply_kraus_split<T: Real>(input: &FockVector<T>, ks: &KrausSplit<T>) -> Result<FockVector<T>> {
    let mut state = input.clone();
    let steps: [&dyn Fn(T) -> Cx<T>; 4] = [
        &|n| cx(T::zero(), ks.chi * n * n),
        &|n| cx(-ks.decay * n * n, T::zero()),
        &|n| cx(T::zero(), ks.linear_phase * n),
        &|n| cx(ks.linear_gain * n, T::zero()),
    ];
    for step in steps {
        state = crate::fock::apply_number_diagonal(&state, |n| step(T::of_usize(n)))?.0;
    }
    Ok(state.normalize()?.fix_global_phase())
}

/// Outcome density as a Gaussian mixture: weight `|c_n|²`, center `g n`,
/// common variance `1/(4 Re K)`.
#[derive(Debug, Clone, Serialize)]
pub struct OutcomePdf<T> {
    pub weights: Vec<T>,
    pub g: T,
    pub variance: T,
}

pub fn outcome_pdf<T: Real>(input: &FockVector<T>, anc: &AncillaGaussian<T>, g: T) -> OutcomePdf<T> {
    outcome_pdf_with_kernel(input, anc.kernel(), g)
}

pub fn outcome_pdf_with_kernel<T: Real>(input: &FockVector<T>, k: Cx<T>, g: T) -> OutcomePdf<T> {
    let norm = input.norm_sqr();
    OutcomePdf {
        weights: input.populations().into_iter().map(|p| p / norm).collect(),
        g,
        variance: (T::lit(4.0) * k.re).recip(),
    }
}

impl<T: Real> OutcomePdf<T> {
    pub fn center(&self, n: usize) -> T {
        self.g * T::of_usize(n)
    }

    pub fn ln_density(&self, m: T) -> T {
        let two = T::lit(2.0);
        let ln_pre = -(two * T::PI() * self.variance).ln() * T::lit(0.5);
        let terms = self.weights.iter().enumerate().filter(|(_, w)| **w > T::zero()).map(|(n, w)| {
            let d = m - self.center(n);
            w.ln() - d * d / (two * self.variance)
        });
        ln_pre + log_sum_exp(terms)
    }

    pub fn density(&self, m: T) -> T {
        self.ln_density(m).exp()
    }

    pub fn mean(&self) -> T {
        self.weights
            .iter()
            .enumerate()
            .map(|(n, w)| *w * self.center(n))
            .sum()
    }

    pub fn second_moment(&self) -> T {
        self.variance
            + self
                .weights
                .iter()
                .enumerate()
                .map(|(n, w)| *w * self.center(n) * self.center(n))
                .sum::<T>()
    }

    /// `[min g n - k sd, max g n + k sd]` over components with weight above `1e-16`.
    pub fn support(&self, k: T) -> (T, T) {
        let wmax = self.weights.iter().fold(T::zero(), |a, &b| a.max(b));
        let cut = wmax * T::lit(1e-16);
        let live: Vec<usize> = (0..self.weights.len()).filter(|&n| self.weights[n] > cut).collect();
        let (lo, hi) = match (live.first(), live.last()) {
            (Some(&a), Some(&b)) => (self.center(a), self.center(b)),
            _ => (T::zero(), T::zero()),
        };
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let sd = self.variance.sqrt();
        (lo - k * sd, hi + k * sd)
    }

    /// Draws a component, then a Gaussian offset around its center.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let w: Vec<f64> = self.weights.iter().map(|w| w.as_f64()).collect();
        let n = WeightedIndex::new(&w).expect("outcome weights are positive").sample(rng);
        let normal = Normal::new(self.center(n).as_f64(), self.variance.as_f64().sqrt())
            .expect("finite outcome variance");
        T::lit(normal.sample(rng))
    }
}

/// One outcome drawn from `pdf` with a fresh generator seeded by `seed`.
pub fn sample_outcome<T: Real>(pdf: &OutcomePdf<T>, seed: u64) -> MeasurementOutcome<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = pdf.sample(&mut rng);
    MeasurementOutcome {
        m,
        prob_density: pdf.density(m),
    }
}
