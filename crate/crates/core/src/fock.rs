//! Truncated Fock-space states and number-diagonal maps.
//!
//! Quadratures follow `q = (a + a†)/√2`, `p = (a − a†)/(i√2)` with `[q, p] = i`,
//! so a coherent state `|α⟩` sits at `(q, p) = √2 (Re α, Im α)`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{cx, ln_factorials, Cx, Real};

/// Default bound on probability mass dropped by truncation.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// Complex amplitudes `c_0..=c_{n_trunc}` over number states.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector<T> {
    amps: Vec<Cx<T>>,
    normalized: bool,
}

impl<T: Real> FockVector<T> {
    /// Wraps raw amplitudes. The normalized flag is set only if the norm is
    /// already 1 to within `1e-12`.
    pub fn from_amplitudes(amps: Vec<Cx<T>>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidParameter("empty amplitude vector".into()));
        }
        if let Some(n) = amps.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFiniteAmplitude { n });
        }
        let mut v = Self {
            amps,
            normalized: false,
        };
        v.normalized = (v.norm_sqr() - T::one()).abs() < T::lit(1e-12);
        Ok(v)
    }

    /// Number state `|n⟩` in a space truncated at `n_trunc`.
    pub fn number_state(n: usize, n_trunc: usize) -> Result<Self> {
        if n > n_trunc {
            return Err(Error::TruncationTooSmall {
                n_trunc,
                tail: 1.0,
                tol: DEFAULT_TAIL_TOL,
            });
        }
        let mut amps = vec![Complex::new(T::zero(), T::zero()); n_trunc + 1];
        amps[n] = Complex::new(T::one(), T::zero());
        Ok(Self {
            amps,
            normalized: true,
        })
    }

    pub fn vacuum(n_trunc: usize) -> Self {
        Self::number_state(0, n_trunc).expect("n=0 always fits")
    }

    pub fn amplitudes(&self) -> &[Cx<T>] {
        &self.amps
    }

    pub fn n_trunc(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Photon-number distribution `|c_n|²`.
    pub fn populations(&self) -> Vec<T> {
        self.amps.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn mean_photon_number(&self) -> T {
        let norm = self.norm_sqr();
        self.amps
            .iter()
            .enumerate()
            .map(|(n, c)| T::of_usize(n) * c.norm_sqr())
            .sum::<T>()
            / norm
    }

    /// `|c_{n_trunc}|²`, the weight on the last retained level.
    pub fn edge_mass(&self) -> T {
        self.amps[self.n_trunc()].norm_sqr() / self.norm_sqr()
    }

    pub fn normalize(mut self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::NonFiniteAmplitude { n: 0 });
        }
        let inv = norm.recip();
        for c in &mut self.amps {
            *c = *c * inv;
        }
        self.normalized = true;
        Ok(self)
    }

    /// Removes the global phase so the first amplitude with `|c| > 1e-14` is real positive.
    pub fn fix_global_phase(mut self) -> Self {
        let thresh = T::lit(1e-14);
        if let Some(c0) = self.amps.iter().find(|c| c.norm() > thresh) {
            let rot = c0.conj() / c0.norm();
            for c in &mut self.amps {
                *c = *c * rot;
            }
        }
        self
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Cx<T>> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                acc + a.conj() * b
            }))
    }

    /// Zero-padded (or truncated) copy with a new cutoff.
    pub fn resized(&self, n_trunc: usize) -> Self {
        let mut amps = self.amps.clone();
        amps.resize(n_trunc + 1, Complex::new(T::zero(), T::zero()));
        let normalized = self.normalized && n_trunc >= self.n_trunc();
        Self { amps, normalized }
    }
}

/// Probability mass of Poisson(`mean`) strictly above `n_trunc`.
pub fn poisson_tail_mass(mean: f64, n_trunc: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut ln_p = -mean + (n_trunc as f64 + 1.0) * mean.ln()
        - ln_factorials::<f64>(n_trunc + 1)[n_trunc + 1];
    let mut tail = 0.0;
    let mut k = n_trunc + 1;
    loop {
        let p = ln_p.exp();
        tail += p;
        k += 1;
        ln_p += mean.ln() - (k as f64).ln();
        if (k as f64) > mean && p < tail * 1e-17 + 1e-300 {
            break;
        }
        if k > n_trunc + 100_000 {
            break;
        }
    }
    tail
}

/// Coherent state `|α⟩` renormalized over the truncated space, using the
/// default tail tolerance.
pub fn coherent_state<T: Real>(alpha: Cx<T>, n_trunc: usize) -> Result<FockVector<T>> {
    coherent_state_with_tol(alpha, n_trunc, DEFAULT_TAIL_TOL)
}

pub fn coherent_state_with_tol<T: Real>(
    alpha: Cx<T>,
    n_trunc: usize,
    tail_tol: f64,
) -> Result<FockVector<T>> {
    if n_trunc < 1 {
        return Err(Error::InvalidParameter("n_trunc must be >= 1".into()));
    }
    let nbar = alpha.norm_sqr();
    let tail = poisson_tail_mass(nbar.as_f64(), n_trunc);
    if tail > tail_tol {
        return Err(Error::TruncationTooSmall {
            n_trunc,
            tail,
            tol: tail_tol,
        });
    }
    if nbar == T::zero() {
        return Ok(FockVector::vacuum(n_trunc));
    }
    let lnf = ln_factorials::<T>(n_trunc);
    let ln_mod = alpha.norm().ln();
    let arg = alpha.arg();
    let half = T::lit(0.5);
    let amps = (0..=n_trunc)
        .map(|n| {
            let nn = T::of_usize(n);
            let ln_a = -half * nbar + nn * ln_mod - half * lnf[n];
            Complex::from_polar(ln_a.exp(), nn * arg)
        })
        .collect();
    FockVector::from_amplitudes(amps)?.normalize()
}

/// Gaussian pure state with position wavefunction `∝ exp(-w q²/2)`, `Re w > 0`.
///
/// `w = e^{2r}` is the vacuum squeezed by `r` in `q`.
pub fn gaussian_vacuum<T: Real>(w: Cx<T>, n_trunc: usize) -> Result<FockVector<T>> {
    if !(w.re > T::zero()) {
        return Err(Error::InvalidParameter(format!("gaussian_vacuum needs Re w > 0, got {w}")));
    }
    let one = cx(T::one(), T::zero());
    let lambda = (one - w) / (one + w);
    let lnf = ln_factorials::<T>(n_trunc);
    let (ln_mod, arg) = (lambda.norm().ln(), lambda.arg());
    let mut amps = vec![cx(T::zero(), T::zero()); n_trunc + 1];
    let mut kept = 0.0f64;
    for k in 0..=n_trunc / 2 {
        let kk = T::of_usize(k);
        let ln_a = if k == 0 {
            T::zero()
        } else {
            kk * (ln_mod - T::LN_2()) + T::lit(0.5) * lnf[2 * k] - lnf[k]
        };
        amps[2 * k] = Complex::from_polar(ln_a.exp(), kk * arg);
        kept += amps[2 * k].norm_sqr().as_f64();
    }
    let total = (1.0 - lambda.norm_sqr().as_f64()).sqrt().recip();
    let tail = (1.0 - kept / total).max(0.0);
    if tail > DEFAULT_TAIL_TOL {
        return Err(Error::TruncationTooSmall {
            n_trunc,
            tail,
            tol: DEFAULT_TAIL_TOL,
        });
    }
    FockVector::from_amplitudes(amps)?.normalize()
}

/// Multiplies `c_n` by `exp(phase_fn(n))`. The result is not renormalized;
/// its norm is returned alongside.
pub fn apply_number_diagonal<T: Real, F>(state: &FockVector<T>, phase_fn: F) -> Result<(FockVector<T>, T)>
where
    F: Fn(usize) -> Cx<T>,
{
    let mut amps = Vec::with_capacity(state.dim());
    for (n, c) in state.amps.iter().enumerate() {
        let e = phase_fn(n);
        let out = if *c == Complex::new(T::zero(), T::zero()) {
            *c
        } else {
            *c * e.exp()
        };
        if !(out.re.is_finite() && out.im.is_finite()) {
            return Err(Error::NonFiniteAmplitude { n });
        }
        amps.push(out);
    }
    let v = FockVector {
        amps,
        normalized: false,
    };
    let norm = v.norm_sqr().sqrt();
    Ok((v, norm))
}

/// `|⟨a|b⟩|²` for normalized states.
pub fn fidelity<T: Real>(a: &FockVector<T>, b: &FockVector<T>) -> Result<T> {
    let ov = a.inner(b)?;
    let f = ov.norm_sqr() / (a.norm_sqr() * b.norm_sqr());
    Ok(f.min(T::one()).max(T::zero()))
}

/// Wigner function sampled on a rectangular `(q, p)` grid.
#[derive(Debug, Clone, Serialize)]
pub struct WignerGrid<T> {
    pub q: Vec<T>,
    pub p: Vec<T>,
    /// `values[i][k] = W(q[i], p[k])`
    pub values: Vec<Vec<T>>,
}

pub const DEFAULT_WIGNER_RESOLUTION: usize = 201;

fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / T::of_usize(n - 1);
    (0..n).map(|i| lo + step * T::of_usize(i)).collect()
}

/// Wigner function at one phase-space point via the normalized
/// Laguerre-function recurrence over `|m⟩⟨n|` terms.
fn wigner_point<T: Real>(amps: &[Cx<T>], q: T, p: T, work: &mut [Cx<T>]) -> T {
    let dim = amps.len();
    let two = T::lit(2.0);
    let a = cx(q, p) * T::FRAC_1_SQRT_2();
    let rho = |m: usize, n: usize| amps[m] * amps[n].conj();
    work[0] = cx((-two * a.norm_sqr()).exp() * T::FRAC_1_PI(), T::zero());
    let mut w = rho(0, 0).re * work[0].re;
    for n in 1..dim {
        work[n] = a * two * work[n - 1] / T::of_usize(n).sqrt();
        w = w + two * (rho(0, n) * work[n]).re;
    }
    for m in 1..dim {
        let sm = T::of_usize(m).sqrt();
        let mut temp = work[m];
        work[m] = (a.conj() * two * temp - work[m - 1] * sm) / sm;
        w = w + (rho(m, m) * work[m]).re;
        for n in (m + 1)..dim {
            let next = (a * two * work[n - 1] - temp * sm) / T::of_usize(n).sqrt();
            temp = work[n];
            work[n] = next;
            w = w + two * (rho(m, n) * work[n]).re;
        }
    }
    w
}

/// Evaluates `W(q, p)` on a `resolution × resolution` grid.
pub fn wigner_grid<T: Real>(
    state: &FockVector<T>,
    q_range: (T, T),
    p_range: (T, T),
    resolution: usize,
) -> Result<WignerGrid<T>> {
    if resolution == 0 {
        return Err(Error::InvalidParameter("resolution must be >= 1".into()));
    }
    let norm = state.norm_sqr();
    if !(norm > T::zero()) {
        return Err(Error::NonFiniteAmplitude { n: 0 });
    }
    let scale = norm.sqrt().recip();
    let amps: Vec<Cx<T>> = state.amps.iter().map(|c| *c * scale).collect();
    let q = linspace(q_range.0, q_range.1, resolution);
    let p = linspace(p_range.0, p_range.1, resolution);
    let values = q
        .par_iter()
        .map(|&qi| {
            let mut work = vec![Complex::new(T::zero(), T::zero()); amps.len()];
            p.iter()
                .map(|&pk| wigner_point(&amps, qi, pk, &mut work))
                .collect()
        })
        .collect();
    Ok(WignerGrid { q, p, values })
}

impl<T: Real> WignerGrid<T> {
    /// Riemann sum of `W` over the grid cells.
    pub fn integral(&self) -> T {
        let dq = if self.q.len() > 1 {
            self.q[1] - self.q[0]
        } else {
            T::one()
        };
        let dp = if self.p.len() > 1 {
            self.p[1] - self.p[0]
        } else {
            T::one()
        };
        self.values.iter().flatten().copied().sum::<T>() * dq * dp
    }

    /// Grid location of the maximum.
    pub fn argmax(&self) -> (T, T) {
        let mut best = (T::neg_infinity(), 0, 0);
        for (i, row) in self.values.iter().enumerate() {
            for (k, &w) in row.iter().enumerate() {
                if w > best.0 {
                    best = (w, i, k);
                }
            }
        }
        (self.q[best.1], self.p[best.2])
    }

    pub fn min_value(&self) -> T {
        self.values
            .iter()
            .flatten()
            .fold(T::infinity(), |a, &b| a.min(b))
    }
}
