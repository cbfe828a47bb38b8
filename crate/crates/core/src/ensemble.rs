//! Collective-spin realization of the protocol.
//!
//! An ensemble of `2j` spin-1/2 atoms polarized along `+X` plays the role of a
//! bosonic mode through the Holstein–Primakoff map. Weak `J_Z` measurements
//! squeeze it, rotations about `X` act as phase gates, and a final `J_Z`
//! readout stands in for the homodyne measurement of the ancilla.
//!
//! States are indexed by `k = j - m_z` in the `J_Z` basis. The frame rotation
//! `R = e^{iπJ_Y/2}` takes `J_X` to `J_Z`; the bosonic image of `R|ψ⟩` has
//! `J_X ↦ j - n`, `J_Z ↦ -√j q`, `J_Y ↦ √j p` to leading order.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Normal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{coherent_state, fidelity, FockVector};
use crate::gaussian_map::siegel_from_rtheta;
use crate::protocol::{conditioned_state, CorrectionMode};

type C = Complex64;

/// Leaked weight above which [`hp_map`] refuses.
pub const HP_LEAK_TOL: f64 = 1e-3;

fn cz(re: f64) -> C {
    C::new(re, 0.0)
}

/// `J_X`, `J_Y`, `J_Z` for spin `j = two_j / 2`.
#[derive(Debug, Clone)]
pub struct CollectiveOps {
    pub jx: DMatrix<C>,
    pub jy: DMatrix<C>,
    pub jz: DMatrix<C>,
}

fn m_of(two_j: usize, k: usize) -> f64 {
    two_j as f64 / 2.0 - k as f64
}

/// `⟨m+1|J_+|m⟩`.
fn ladder(two_j: usize, k: usize) -> f64 {
    let j = two_j as f64 / 2.0;
    let m = m_of(two_j, k);
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

/// Real symmetric tridiagonal `J_X`.
fn jx_real(two_j: usize) -> DMatrix<f64> {
    let d = two_j + 1;
    let mut jx = DMatrix::zeros(d, d);
    for k in 1..d {
        // |k⟩ has m = j - k; J_+ takes it to index k - 1.
        let e = ladder(two_j, k) / 2.0;
        jx[(k - 1, k)] = e;
        jx[(k, k - 1)] = e;
    }
    jx
}

pub fn collective_ops(two_j: usize) -> CollectiveOps {
    let d = two_j + 1;
    let jx = jx_real(two_j).map(cz);
    let mut jy = DMatrix::zeros(d, d);
    let mut jz = DMatrix::zeros(d, d);
    for k in 0..d {
        jz[(k, k)] = cz(m_of(two_j, k));
    }
    for k in 1..d {
        let e = ladder(two_j, k) / 2.0;
        // J_Y = (J_+ - J_-)/(2i)
        jy[(k - 1, k)] = C::new(0.0, -e);
        jy[(k, k - 1)] = C::new(0.0, e);
    }
    CollectiveOps { jx, jy, jz }
}

/// Rotations about `X` and `Y` through one eigendecomposition of `J_X`.
#[derive(Debug, Clone)]
pub struct SpinRotations {
    two_j: usize,
    vectors: DMatrix<f64>,
    values: DVector<f64>,
}

impl SpinRotations {
    pub fn new(two_j: usize) -> Self {
        let eig = SymmetricEigen::new(jx_real(two_j));
        Self {
            two_j,
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
        }
    }

    pub fn two_j(&self) -> usize {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_j + 1
    }

    /// `e^{-iπ m_z/2}`, with `e^{-iπJ_Z/2} J_X e^{iπJ_Z/2} = J_Y`.
    fn quarter_z(&self, k: usize) -> C {
        C::from_polar(1.0, -std::f64::consts::FRAC_PI_2 * m_of(self.two_j, k))
    }

    /// `e^{-iφJ_X} ψ`.
    pub fn rotate_x(&self, phi: f64, psi: &DVector<C>) -> DVector<C> {
        let v = &self.vectors;
        let mut y = DVector::zeros(self.dim());
        for l in 0..self.dim() {
            let s: C = (0..self.dim()).map(|k| v[(k, l)] * psi[k]).sum();
            y[l] = s * C::from_polar(1.0, -phi * self.values[l]);
        }
        DVector::from_iterator(self.dim(), (0..self.dim()).map(|k| (0..self.dim()).map(|l| v[(k, l)] * y[l]).sum()))
    }

    /// `e^{-iφJ_Y} ψ`.
    pub fn rotate_y(&self, phi: f64, psi: &DVector<C>) -> DVector<C> {
        let d = self.dim();
        let pre = DVector::from_iterator(d, (0..d).map(|k| self.quarter_z(k).conj() * psi[k]));
        let mid = self.rotate_x(phi, &pre);
        DVector::from_iterator(d, (0..d).map(|k| self.quarter_z(k) * mid[k]))
    }

    /// `⟨k| e^{-iφ_s J_Y} |ψ⟩` for several angles `φ_s` at one row `k`.
    pub fn rotate_y_row(&self, k: usize, phis: &[f64], psi: &DVector<C>) -> Vec<C> {
        let d = self.dim();
        let v = &self.vectors;
        let y: Vec<C> = (0..d)
            .map(|l| (0..d).map(|i| v[(i, l)] * self.quarter_z(i).conj() * psi[i]).sum())
            .collect();
        phis.iter()
            .map(|&phi| {
                let s: C = (0..d)
                    .map(|l| v[(k, l)] * C::from_polar(1.0, -phi * self.values[l]) * y[l])
                    .sum();
                self.quarter_z(k) * s
            })
            .collect()
    }

    /// `R ψ` with `R = e^{iπJ_Y/2}`.
    pub fn to_frame(&self, psi: &DVector<C>) -> DVector<C> {
        self.rotate_y(-std::f64::consts::FRAC_PI_2, psi)
    }

    /// `R† ψ`.
    pub fn from_frame(&self, psi: &DVector<C>) -> DVector<C> {
        self.rotate_y(std::f64::consts::FRAC_PI_2, psi)
    }

    /// Spin coherent state along `+X`, `R†|j, j⟩`.
    pub fn coherent_x(&self) -> DVector<C> {
        let mut top = DVector::zeros(self.dim());
        top[0] = cz(1.0);
        self.from_frame(&top)
    }
}

/// State of the collective spin and the resolution of its `J_Z` readout.
#[derive(Debug, Clone)]
pub struct SpinEnsemble {
    pub two_j: usize,
    pub state: DVector<C>,
    pub sigma_meas: f64,
}

impl SpinEnsemble {
    pub fn new(two_j: usize, state: DVector<C>, sigma_meas: f64) -> Result<Self> {
        if two_j == 0 {
            return Err(Error::InvalidParameter("need j >= 1/2".into()));
        }
        if state.len() != two_j + 1 {
            return Err(Error::DimensionMismatch {
                left: state.len(),
                right: two_j + 1,
            });
        }
        let n = state.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NonFiniteAmplitude { n: 0 });
        }
        Ok(Self {
            two_j,
            state: state / cz(n),
            sigma_meas,
        })
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn expect_jz(&self) -> f64 {
        self.state
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm_sqr() * m_of(self.two_j, k))
            .sum()
    }

    pub fn var_jz(&self) -> f64 {
        let mean = self.expect_jz();
        self.state
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm_sqr() * (m_of(self.two_j, k) - mean).powi(2))
            .sum()
    }

    pub fn expect(&self, op: &DMatrix<C>) -> C {
        (self.state.adjoint() * op * &self.state)[(0, 0)]
    }

    /// Draws a readout: an eigenvalue with Born weight plus Gaussian noise of width `σ`.
    pub fn sample_jz<R: Rng + ?Sized>(&self, sigma: f64, rng: &mut R) -> f64 {
        let w: Vec<f64> = self.state.iter().map(|c| c.norm_sqr()).collect();
        let k = WeightedIndex::new(&w).expect("normalized state").sample(rng);
        m_of(self.two_j, k) + Normal::new(0.0, sigma).expect("positive sigma").sample(rng)
    }
}

/// Applies `K_m = (2πσ²)^{-1/4} exp(-(J_Z - m)²/(4σ²))` and renormalizes.
pub fn weak_measure_jz(ens: &SpinEnsemble, m: f64, sigma_meas: f64) -> Result<(SpinEnsemble, f64)> {
    if !(sigma_meas > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma_meas must be positive, got {sigma_meas}")));
    }
    let pre = (2.0 * std::f64::consts::PI * sigma_meas * sigma_meas).powf(-0.25);
    let out = DVector::from_iterator(
        ens.state.len(),
        ens.state.iter().enumerate().map(|(k, c)| {
            let d = m_of(ens.two_j, k) - m;
            c * (pre * (-d * d / (4.0 * sigma_meas * sigma_meas)).exp())
        }),
    );
    let density = out.norm_squared();
    if !(density > 0.0) {
        return Err(Error::NonFiniteAmplitude { n: 0 });
    }
    Ok((SpinEnsemble::new(ens.two_j, out, ens.sigma_meas)?, density))
}

/// Fock image of the ensemble and the weight it misses.
#[derive(Debug, Clone)]
pub struct HpImage {
    pub state: FockVector<f64>,
    pub leaked: f64,
}

/// Copies `⟨j, j-k| R |ψ⟩` into `c_k` for `k ≤ n_trunc`.
pub fn hp_map(ens: &SpinEnsemble, rot: &SpinRotations, n_trunc: usize) -> Result<HpImage> {
    if n_trunc >= ens.two_j + 1 {
        return Err(Error::InvalidParameter(format!(
            "n_trunc={n_trunc} must be below 2j+1={}",
            ens.two_j + 1
        )));
    }
    let framed = rot.to_frame(&ens.state);
    let amps: Vec<C> = framed.iter().take(n_trunc + 1).copied().collect();
    let kept: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    let leaked = (1.0 - kept).max(0.0);
    if leaked > HP_LEAK_TOL {
        return Err(Error::HPViolation { leaked, n_trunc });
    }
    Ok(HpImage {
        state: FockVector::from_amplitudes(amps)?.normalize()?,
        leaked,
    })
}

/// Inverse of [`hp_map`]: `R† Σ c_k |j, j-k⟩`.
pub fn hp_embed(state: &FockVector<f64>, rot: &SpinRotations) -> Result<DVector<C>> {
    if state.dim() > rot.dim() {
        return Err(Error::DimensionMismatch {
            left: state.dim(),
            right: rot.dim(),
        });
    }
    let mut v = DVector::zeros(rot.dim());
    for (k, c) in state.amplitudes().iter().enumerate() {
        v[k] = *c;
    }
    Ok(rot.from_frame(&v))
}

/// Measurement resolution that squeezes the `+X` state to `e^{-2r}`:
/// `e^{-2r} = σ²/(σ² + j/2)`.
pub fn sigma_for_squeezing(j: f64, r: f64) -> f64 {
    let e = (-2.0 * r).exp();
    (j / 2.0 * e / (1.0 - e)).sqrt()
}

/// Squeezing reached by one `J_Z` measurement of resolution `σ` on the `+X` state.
pub fn squeezing_of_sigma(j: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    -0.5 * (s2 / (s2 + j / 2.0)).ln()
}

/// Squeezes the `+X` coherent state with one readout `m0` and re-centres `⟨J_Z⟩`
/// with a rotation about `Y`.
pub fn squeezed_ancilla(rot: &SpinRotations, sigma_meas: f64, m0: f64) -> Result<SpinEnsemble> {
    let start = SpinEnsemble::new(rot.two_j(), rot.coherent_x(), sigma_meas)?;
    let (meas, _) = weak_measure_jz(&start, m0, sigma_meas)?;
    let mz = meas.expect_jz();
    let ops_jx: f64 = meas
        .state
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, _)| {
            let e = ladder(rot.two_j(), k) / 2.0;
            2.0 * (meas.state[k - 1].conj() * meas.state[k]).re * e
        })
        .sum();
    let phi = mz.atan2(ops_jx);
    let best = [phi, -phi]
        .into_iter()
        .map(|p| SpinEnsemble::new(rot.two_j(), rot.rotate_y(p, &meas.state), sigma_meas))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min_by(|a, b| a.expect_jz().abs().total_cmp(&b.expect_jz().abs()))
        .expect("two candidates");
    Ok(best)
}

/// Truncation holding all but `1e-11` of a vacuum squeezed by `r`.
fn squeezed_n_trunc(r: f64) -> usize {
    let t2 = r.tanh().powi(2);
    if t2 < 1e-300 {
        return 8;
    }
    let k = (1e-11f64.ln() / t2.ln()).ceil().max(4.0) as usize;
    2 * k + 2
}

#[derive(Debug, Clone, Serialize)]
pub struct AtomicCheck {
    pub j: f64,
    pub sigma_meas: f64,
    pub r_equivalent: f64,
    pub m: f64,
    /// Fock fidelity of the squeezed spin ancilla to `S(r)|0⟩`.
    pub ancilla_fidelity: f64,
    pub fidelity: f64,
}

/// Runs the spin-side protocol and compares the conditioned probe with the
/// bosonic one at the same outcome.
///
/// `x0` (squeezing readout) and `m` (final outcome) are in the units of the
/// bosonic channel, where the vacuum position variance is 1; they map to
/// `J_Z = -√(j/2) x`, and `m` is snapped to the spin lattice. The phase gate
/// `e^{-iθn}` is `e^{iθJ_X}` on the spin and the coupling is
/// `exp(-i g n J_Y/√(2j))`.
pub fn atomic_protocol_check_at(
    two_j: usize,
    sigma_meas: f64,
    g: f64,
    theta: f64,
    alpha: f64,
    x0: f64,
    m: f64,
) -> Result<AtomicCheck> {
    let rot = SpinRotations::new(two_j);
    let j = rot.j();
    let scale = (j / 2.0).sqrt();
    let r = squeezing_of_sigma(j, sigma_meas);

    let anc = squeezed_ancilla(&rot, sigma_meas, -scale * x0)?;
    let n_anc = squeezed_n_trunc(r).min(two_j - 1);
    let image = hp_map(&anc, &rot, n_anc)?;
    let sq = crate::fock::gaussian_vacuum(C::new((2.0 * r).exp(), 0.0), n_anc)?;
    let ancilla_fidelity = fidelity(&image.state, &sq)?;

    let rotated = rot.rotate_x(-theta, &anc.state);

    let mu_index = {
        let mu = (-scale * m).round().clamp(-j, j);
        (j - mu).round() as usize
    };
    let m_snapped = -m_of(two_j, mu_index) / scale;

    let n_probe = crate::stateprep::default_n_trunc(alpha);
    let probe = coherent_state(C::new(alpha, 0.0), n_probe)?;
    let phis: Vec<f64> = (0..=n_probe).map(|n| g * n as f64 / (2.0 * j).sqrt()).collect();
    let row = rot.rotate_y_row(mu_index, &phis, &rotated);
    let spin_side: Vec<C> = probe.amplitudes().iter().zip(&row).map(|(c, a)| c * a).collect();
    let spin_side = FockVector::from_amplitudes(spin_side)?.normalize()?;

    let bos = siegel_from_rtheta(r, theta);
    let (boson_side, _) = conditioned_state(&probe, &bos, g, m_snapped, CorrectionMode::None)?;
    Ok(AtomicCheck {
        j,
        sigma_meas,
        r_equivalent: r,
        m: m_snapped,
        ancilla_fidelity,
        fidelity: fidelity(&spin_side, &boson_side)?,
    })
}

/// [`atomic_protocol_check_at`] with the outcome drawn from the bosonic
/// outcome density and the squeezing readout drawn from its Gaussian, both from `rng`.
pub fn atomic_protocol_check<R: Rng + ?Sized>(
    two_j: usize,
    sigma_meas: f64,
    g: f64,
    theta: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<AtomicCheck> {
    let j = two_j as f64 / 2.0;
    let r = squeezing_of_sigma(j, sigma_meas);
    // J_Z readout on the +X state has variance j/2 + σ², i.e. 1 + 2σ²/j in x units.
    let x0 = Normal::new(0.0, (1.0 + 2.0 * sigma_meas * sigma_meas / j).sqrt())
        .expect("finite width")
        .sample(rng);
    let probe = coherent_state(C::new(alpha, 0.0), crate::stateprep::default_n_trunc(alpha))?;
    let pdf = crate::protocol::outcome_pdf(&probe, &siegel_from_rtheta(r, theta), g);
    let m = pdf.sample(rng);
    atomic_protocol_check_at(two_j, sigma_meas, g, theta, alpha, x0, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn comm(a: &DMatrix<C>, b: &DMatrix<C>) -> DMatrix<C> {
        a * b - b * a
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let ops = collective_ops(1);
        let h = 0.5;
        assert_eq!(ops.jx, DMatrix::from_row_slice(2, 2, &[cz(0.0), cz(h), cz(h), cz(0.0)]));
        assert_eq!(
            ops.jy,
            DMatrix::from_row_slice(2, 2, &[cz(0.0), C::new(0.0, -h), C::new(0.0, h), cz(0.0)])
        );
        assert_eq!(ops.jz, DMatrix::from_row_slice(2, 2, &[cz(h), cz(0.0), cz(0.0), cz(-h)]));
    }

    #[test]
    fn spin_one_casimir() {
        let ops = collective_ops(2);
        let s = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(ops.jx[(0, 1)].re, s, epsilon = 1e-15);
        let cas = &ops.jx * &ops.jx + &ops.jy * &ops.jy + &ops.jz * &ops.jz;
        assert!((cas - DMatrix::identity(3, 3) * cz(2.0)).norm() < 1e-12);
    }

    #[test]
    fn commutator_at_large_spin() {
        let ops = collective_ops(100);
        let res = comm(&ops.jx, &ops.jy) - &ops.jz * C::new(0.0, 1.0);
        assert!(res.norm() < 1e-10);
    }

    fn dense_rotation(op: &DMatrix<C>, phi: f64) -> DMatrix<C> {
        // exp(-iφ op) via a Taylor series with scaling and squaring.
        let d = op.nrows();
        let scale = 2f64.powi(((phi.abs() * op.norm()).log2().ceil()).max(0.0) as i32 + 4);
        let a = op * C::new(0.0, -phi / scale);
        let mut term = DMatrix::identity(d, d);
        let mut sum = DMatrix::identity(d, d);
        for n in 1..30 {
            term = &term * &a / cz(n as f64);
            sum += &term;
        }
        let mut out = sum;
        let mut s = scale;
        while s > 1.0 {
            out = &out * &out;
            s /= 2.0;
        }
        out
    }

    #[test]
    fn rotations_match_dense_exponential() {
        let rot = SpinRotations::new(7);
        let ops = collective_ops(7);
        let psi = DVector::from_iterator(8, (0..8).map(|k| C::new(k as f64 + 1.0, 0.3 * k as f64)));
        for phi in [0.4, -1.3] {
            let a = rot.rotate_x(phi, &psi);
            let b = dense_rotation(&ops.jx, phi) * &psi;
            assert!((a - b).norm() < 1e-10);
            let a = rot.rotate_y(phi, &psi);
            let b = dense_rotation(&ops.jy, phi) * &psi;
            assert!((a - b).norm() < 1e-10);
        }
        let row = rot.rotate_y_row(3, &[0.4, 1.1], &psi);
        assert!((row[1] - rot.rotate_y(1.1, &psi)[3]).norm() < 1e-12);
    }

    #[test]
    fn frame_rotation_maps_x_to_z() {
        let rot = SpinRotations::new(40);
        let ops = collective_ops(40);
        let ens = SpinEnsemble::new(40, rot.coherent_x(), 1.0).unwrap();
        assert_abs_diff_eq!(ens.expect(&ops.jx).re, 20.0, epsilon = 1e-9 * 20.0);
        // R J_X R† = J_Z, column by column.
        for k in [0, 5, 17] {
            let mut e = DVector::zeros(41);
            e[k] = cz(1.0);
            let lhs = rot.to_frame(&(&ops.jx * rot.from_frame(&e)));
            let rhs = &ops.jz * &e;
            assert!((lhs - rhs).norm() < 1e-9);
        }
    }

    #[test]
    fn measurement_completeness() {
        let rot = SpinRotations::new(20);
        let ens = SpinEnsemble::new(20, rot.coherent_x(), 1.5).unwrap();
        let (total, _) = crate::quadrature::integrate_scalar(
            |m| weak_measure_jz(&ens, m, 1.5).unwrap().1,
            -25.0,
            25.0,
            &crate::quadrature::QuadOptions {
                rel_tol: 1e-12,
                initial_panels: 64,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn broad_measurement_leaves_state() {
        let rot = SpinRotations::new(20);
        let ens = SpinEnsemble::new(20, rot.coherent_x(), 1e6).unwrap();
        let (out, _) = weak_measure_jz(&ens, 0.7, 1e6).unwrap();
        let ov = (ens.state.adjoint() * &out.state)[(0, 0)].norm();
        assert!(1.0 - ov < 1e-6);
    }

    #[test]
    fn sharp_measurement_projects() {
        let mut psi = DVector::zeros(11);
        psi[2] = cz(0.6);
        psi[7] = cz(0.8);
        let ens = SpinEnsemble::new(10, psi, 1e-3).unwrap();
        let (out, _) = weak_measure_jz(&ens, -1.8, 0.05).unwrap();
        assert!(out.state[7].norm() > 1.0 - 1e-12);
    }

    #[test]
    fn repeated_measurement_squeezes() {
        let two_j = 40;
        let rot = SpinRotations::new(two_j);
        let j = 20.0;
        let mut ens = SpinEnsemble::new(two_j, rot.coherent_x(), j / 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut vars = vec![ens.var_jz()];
        for _ in 0..20 {
            let m = ens.sample_jz(j / 2.0, &mut rng);
            ens = weak_measure_jz(&ens, m, j / 2.0).unwrap().0;
            vars.push(ens.var_jz());
        }
        assert_abs_diff_eq!(vars[0], j / 2.0, epsilon = 1e-9);
        assert!(vars.windows(2).all(|w| w[1] < w[0]));
        // Twenty Gaussian updates of a Gaussian prior.
        let oracle = 1.0 / (2.0 / j + 20.0 / (j * j / 4.0));
        assert!((vars[20] - oracle).abs() < 0.05 * oracle, "{} vs {oracle}", vars[20]);
    }

    #[test]
    fn coherent_x_is_hp_vacuum() {
        let rot = SpinRotations::new(100);
        let ens = SpinEnsemble::new(100, rot.coherent_x(), 1.0).unwrap();
        let img = hp_map(&ens, &rot, 20).unwrap();
        assert!(img.state.amplitudes()[0].norm() > 1.0 - 1e-12);
        assert!(img.leaked < 1e-12);
    }

    #[test]
    fn hp_violation_reported() {
        let rot = SpinRotations::new(20);
        let mut psi = DVector::zeros(21);
        psi[10] = cz(1.0);
        let ens = SpinEnsemble::new(20, rot.from_frame(&psi), 1.0).unwrap();
        assert!(matches!(hp_map(&ens, &rot, 5), Err(Error::HPViolation { .. })));
    }

    #[test]
    fn lowering_operator_approaches_creation() {
        // ‖J_-/√(2j) - a†‖ on the first levels falls like 1/j.
        let n = 8;
        let err = |two_j: usize| {
            let mut d = DMatrix::<f64>::zeros(n, n);
            for k in 0..n - 1 {
                let jm = ladder(two_j, k + 1) / (two_j as f64).sqrt();
                d[(k + 1, k)] = jm - ((k + 1) as f64).sqrt();
            }
            d.singular_values().max()
        };
        for two_j in [200, 400, 800] {
            let ratio = err(two_j) / err(2 * two_j);
            assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
        }
    }

    #[test]
    fn zeeman_phase_gate() {
        let two_j = 400;
        let rot = SpinRotations::new(two_j);
        let j = 200.0;
        let probe = coherent_state(C::new(2.0, 0.0), 40).unwrap();
        let spin = hp_embed(&probe, &rot).unwrap();
        let bt = 0.37;
        let evolved = rot.rotate_x(bt, &spin);
        let ens = SpinEnsemble::new(two_j, evolved, 1.0).unwrap();
        let img = hp_map(&ens, &rot, 40).unwrap();
        let expect = crate::fock::apply_number_diagonal(&probe, |n| C::new(0.0, bt * n as f64 - bt * j))
            .unwrap()
            .0;
        assert!(fidelity(&img.state, &expect).unwrap() > 0.999);
        let ov = expect.inner(&img.state).unwrap();
        assert!((ov - cz(1.0)).norm() < 1e-9);
    }

    #[test]
    fn squeezing_identity() {
        let two_j = 400;
        let j = 200.0;
        let r = 1.0;
        let sigma = sigma_for_squeezing(j, r);
        let rot = SpinRotations::new(two_j);
        for x0 in [0.0, 1.1] {
            let anc = squeezed_ancilla(&rot, sigma, -(j / 2.0).sqrt() * x0).unwrap();
            assert!(anc.expect_jz().abs() < 1e-9);
            let n = squeezed_n_trunc(r);
            let img = hp_map(&anc, &rot, n).unwrap();
            let sq = crate::fock::gaussian_vacuum(C::new((2.0 * r).exp(), 0.0), n).unwrap();
            assert!(fidelity(&img.state, &sq).unwrap() > 0.99);
        }
    }

    #[test]
    fn vacuum_probe_converges_fast() {
        let two_j = 200;
        let c = atomic_protocol_check_at(two_j, sigma_for_squeezing(100.0, 1.0), 1.0, 0.6, 0.0, 0.3, 0.4).unwrap();
        assert!(c.fidelity > 0.999);
    }

    #[test]
    fn atomic_protocol_converges() {
        let (g, theta, alpha, r) = (1.0, 0.6, 1.0, 1.0);
        let fids: Vec<f64> = [200usize, 400, 800]
            .iter()
            .map(|&two_j| {
                let j = two_j as f64 / 2.0;
                atomic_protocol_check_at(two_j, sigma_for_squeezing(j, r), g, theta, alpha, 0.3, 1.2)
                    .unwrap()
                    .fidelity
            })
            .collect();
        assert!(fids.windows(2).all(|w| w[1] > w[0]), "{fids:?}");
        assert!(fids[2] > 0.99, "{fids:?}");
    }
}
