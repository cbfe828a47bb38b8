//! Displacement sensing with a two-stage ancilla.
//!
//! A first ancilla `A1` couples to the second one `A2` through
//! `exp(iκ p₁ p₂)` and is measured in position. Conditioning leaves `A2` in a
//! Gaussian state whose momentum shear depends on `κ²`; `A2` then drives the
//! usual probe channel and `κ` is estimated through it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::gaussian_map::{siegel_from_rtheta, AncillaGaussian};
use crate::metrology::{
    generalized_qfi, sweep, EstimationModel, FisherInfo, MWindow, QfiMetadata, QfiReport,
};
use crate::protocol::CorrectionMode;
use crate::quadrature::QuadOptions;
use crate::scalar::{cx, Cx, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapParams<T> {
    pub kappa: T,
    /// Squeezing of `A1`; `None` is the infinitely squeezed limit.
    pub r_prime: Option<T>,
    pub theta_prime: T,
    pub r: T,
    pub g: T,
}

impl<T: Real> BootstrapParams<T> {
    pub fn new(kappa: T, r_prime: Option<T>, r: T, g: T) -> Self {
        Self {
            kappa,
            r_prime,
            theta_prime: T::FRAC_PI_4(),
            r,
            g,
        }
    }

    /// `1/(4a')` for the `A1` momentum exponent `a'`; `-i/4` in the limit.
    fn shear_weight(&self) -> Cx<T> {
        match self.r_prime {
            None => cx(T::zero(), -T::lit(0.25)),
            Some(rp) => {
                let a1 = siegel_from_rtheta(rp, self.theta_prime);
                (cx(a1.u, -a1.v) * T::lit(4.0)).inv()
            }
        }
    }

    /// Momentum exponent `a = u - iv` of `A2` after conditioning, at `κ`.
    pub fn effective_exponent(&self, kappa: T) -> Cx<T> {
        let a2 = siegel_from_rtheta(self.r, T::zero());
        cx(a2.u, -a2.v) + self.shear_weight() * (kappa * kappa)
    }
}

/// `A2` after the `A1` measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveAncilla<T> {
    pub ancilla: AncillaGaussian<T>,
    /// The `A1` result `m₁` leaves a factor `exp(b m₁ p₂)` on `A2`; this is `b`,
    /// a displacement to be undone before the probe stage.
    pub displacement_re: T,
    pub displacement_im: T,
}

pub fn effective_ancilla<T: Real>(params: &BootstrapParams<T>) -> Result<EffectiveAncilla<T>> {
    let a = params.effective_exponent(params.kappa);
    let ancilla = AncillaGaussian::from_siegel(a.re, -a.im)?;
    let b = params.shear_weight() * (params.kappa * T::lit(2.0));
    Ok(EffectiveAncilla {
        ancilla,
        displacement_re: b.re,
        displacement_im: b.im,
    })
}

/// `|⟨ψ₁|ψ₂⟩|²` for Gaussian wavefunctions `exp(-a p²)`.
pub fn gaussian_fidelity<T: Real>(a1: Cx<T>, a2: Cx<T>) -> T {
    T::one() - gaussian_infidelity(a1, a2)
}

/// `1 - F`, computed without cancellation.
pub fn gaussian_infidelity<T: Real>(a1: Cx<T>, a2: Cx<T>) -> T {
    let s = (a1.conj() + a2).norm();
    let root = T::lit(2.0) * (a1.re * a2.re).sqrt();
    (a1 - a2).norm_sqr() / (s * (s + root))
}

/// Estimation of `κ` around a known bias `κ₀`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KappaModel<T> {
    pub params: BootstrapParams<T>,
    pub correction: CorrectionMode,
}

impl<T: Real> KappaModel<T> {
    pub fn new(params: BootstrapParams<T>, correction: CorrectionMode) -> Result<Self> {
        match correction {
            CorrectionMode::Exact => {
                return Err(Error::InvalidParameter(
                    "exact correction presumes κ is known; use none or linear".into(),
                ))
            }
            CorrectionMode::Linear(k0) if k0 == 0.0 => {
                return Err(Error::InvalidParameter(
                    "linear correction needs a nonzero bias κ₀".into(),
                ))
            }
            _ => {}
        }
        if !(params.g > T::zero()) || !(params.r >= T::zero()) {
            return Err(Error::InvalidParameter("need r >= 0 and g > 0".into()));
        }
        Ok(Self { params, correction })
    }
}

impl<T: Real> EstimationModel<T> for KappaModel<T> {
    fn coupling(&self) -> T {
        self.params.g
    }

    fn bias(&self) -> T {
        self.params.kappa
    }

    fn kernel(&self, x: T) -> Cx<T> {
        (self.params.effective_exponent(x) * T::lit(4.0)).inv()
    }

    fn kernel_rate(&self) -> Cx<T> {
        let a = self.params.effective_exponent(self.params.kappa);
        let w = self.params.shear_weight();
        -(w * (T::lit(2.0) * self.params.kappa)) / (a * a * T::lit(4.0))
    }

    fn correction(&self, m: T, x: T) -> T {
        match self.correction {
            CorrectionMode::Linear(k0) => {
                let k0 = T::lit(k0);
                let g = self.params.g;
                m * (-T::lit(2.0) * g / (k0 * k0) + T::lit(4.0) * g / (k0 * k0 * k0) * (x - k0))
            }
            _ => T::zero(),
        }
    }

    fn correction_rate(&self) -> T {
        match self.correction {
            CorrectionMode::Linear(k0) => {
                let k0 = T::lit(k0);
                T::lit(4.0) * self.params.g / (k0 * k0 * k0)
            }
            _ => T::zero(),
        }
    }

    fn parameter_name(&self) -> &'static str {
        "kappa"
    }
}

/// Fisher information about `κ` for one probe.
pub fn kappa_qfi<T: Real>(
    params: &BootstrapParams<T>,
    probe: &FockVector<T>,
    correction: CorrectionMode,
    window: MWindow,
    opts: &QuadOptions,
) -> Result<FisherInfo<T>> {
    let model = KappaModel::new(*params, correction)?;
    generalized_qfi(&model, probe, window, opts)
}

/// Coherent-probe sweep over `n̄` for `κ` estimation.
pub fn kappa_sweep<T: Real>(
    params: &BootstrapParams<T>,
    n_bar: &[T],
    n_trunc: usize,
    correction: CorrectionMode,
    window: MWindow,
    opts: &QuadOptions,
) -> Result<QfiReport<T>> {
    let model = KappaModel::new(*params, correction)?;
    let meta = QfiMetadata {
        parameter: "kappa".into(),
        r: params.r.as_f64(),
        bias: params.kappa.as_f64(),
        g: params.g.as_f64(),
        correction,
        n_trunc,
        window,
        rel_tol: opts.rel_tol,
    };
    sweep(&model, n_bar, n_trunc, window, opts, meta)
}
