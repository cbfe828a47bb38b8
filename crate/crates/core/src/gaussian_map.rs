//! Parameter algebra for the squeezed, rotated ancilla.
//!
//! The ancilla `R(θ)S(r)|0⟩`, with `R(θ) = e^{-iθn}`, is tracked by its Siegel
//! coordinates `(u, v)`: its momentum wavefunction is `exp(-(u - iv)p²/2)`.
//! The shear picture reads `1/(2σ²) = u`, `β = -v`. Coupling strength `g`
//! and outcome `m` are measured in units of `x = a + a†`, whose vacuum
//! variance is 1, and every channel strength is a function of the single
//! complex kernel `K = 1/(4(u - iv))`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{cx, Cx, Real};

/// Gaussian pure state of the ancilla after squeezing and rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AncillaGaussian<T> {
    /// Squeezing, when the state was built from `(r, θ)`.
    pub r: Option<T>,
    /// Rotation angle in radians, when known.
    pub theta: Option<T>,
    pub u: T,
    pub v: T,
}

/// `Ξ = e^{-2r} sin²θ + e^{2r} cos²θ`.
pub fn xi<T: Real>(r: T, theta: T) -> T {
    let two_r = r + r;
    let (s, c) = theta.sin_cos();
    (-two_r).exp() * s * s + two_r.exp() * c * c
}

/// Siegel coordinates of `R(θ)S(r)|0⟩`.
pub fn siegel_from_rtheta<T: Real>(r: T, theta: T) -> AncillaGaussian<T> {
    let x = xi(r, theta);
    let two = T::lit(2.0);
    let shear = (two * theta).sin() * (two * r).sinh();
    AncillaGaussian {
        r: Some(r),
        theta: Some(theta),
        u: x.recip(),
        v: -shear / x,
    }
}

impl<T: Real> AncillaGaussian<T> {
    /// Ancilla given directly by its Siegel point; `u` must be positive.
    pub fn from_siegel(u: T, v: T) -> Result<Self> {
        if !(u > T::zero()) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Siegel point needs u > 0, got u={u}, v={v}"
            )));
        }
        Ok(Self {
            r: None,
            theta: None,
            u,
            v,
        })
    }

    pub fn xi(&self) -> T {
        self.u.recip()
    }

    /// `σ² = 1/(2u)`.
    pub fn sigma2(&self) -> T {
        (T::lit(2.0) * self.u).recip()
    }

    pub fn beta(&self) -> T {
        -self.v
    }

    /// Channel kernel `K = 1/(4(u - iv))`; the probe picks up `exp(-K (g n - m)²)`.
    pub fn kernel(&self) -> Cx<T> {
        cx(self.u, -self.v).inv() * T::lit(0.25)
    }

    pub fn channel_params(&self, g: T) -> ChannelParams<T> {
        channel_params(self, g)
    }
}

/// Strengths of the number-diagonal Kraus factors for coupling `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams<T> {
    pub g: T,
    /// `μ = 4(β² + 1/(4σ⁴))`
    pub mu: T,
    /// Kerr strength of `U(β) = exp(iχ n²)`, computed in the `(σ, β)` picture.
    pub chi: T,
    /// Kerr strength of `U₀ = exp(-iγ n²)`, computed in the `(u, v)` picture.
    pub gamma: T,
    /// Decay strength of `exp(-ζ n²)`.
    pub zeta: T,
}

pub fn channel_params<T: Real>(anc: &AncillaGaussian<T>, g: T) -> ChannelParams<T> {
    let g2 = g * g;
    let (sigma2, beta) = (anc.sigma2(), anc.beta());
    let mu = T::lit(4.0) * (beta * beta + (T::lit(4.0) * sigma2 * sigma2).recip());
    let chi = beta * g2 / mu;
    let d = T::lit(4.0) * (anc.u * anc.u + anc.v * anc.v);
    ChannelParams {
        g,
        mu,
        chi,
        gamma: g2 * anc.v / d,
        zeta: g2 * anc.u / d,
    }
}

fn gamma_at<T: Real>(r: T, g: T, theta: T) -> T {
    channel_params(&siegel_from_rtheta(r, theta), g).gamma
}

/// Location and value of the largest `|γ(θ)|` on `(0, π/2)`, by golden-section
/// search on `[1e-6, π/2 - 1e-6]`.
pub fn gamma_max<T: Real>(r: T, g: T) -> (T, T) {
    let lo0 = T::lit(1e-6);
    let hi0 = T::FRAC_PI_2() - T::lit(1e-6);
    let objective = |t: T| gamma_at(r, g, t).abs();
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let (mut a, mut b) = (lo0, hi0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    for _ in 0..200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = objective(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = objective(x1);
        }
        if b - a < T::epsilon() * T::lit(4.0) * (T::one() + a.abs()) {
            break;
        }
    }
    let t = (a + b) * T::lit(0.5);
    let (tc, val) = [(lo0, objective(lo0)), (t, objective(t)), (hi0, objective(hi0))]
        .into_iter()
        .fold((t, T::neg_infinity()), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
    (tc, val)
}

/// Finds `θ*` with `γ(θ*) = gamma_target` on the low-decay branch.
///
/// `γ` is negative on `(0, π/2)` and odd about `π/2`. Negative targets are
/// solved on `[θ_c, π/2]`, positive ones on the mirrored branch
/// `[π/2, π - θ_c]`; both branches keep `ζ` at its smaller value.
pub fn solve_theta_for_gamma<T: Real>(r: T, g: T, gamma_target: T) -> Result<T> {
    if !(r >= T::zero()) || !(g > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "solve_theta_for_gamma needs r >= 0 and g > 0 (r={r}, g={g})"
        )));
    }
    if gamma_target == T::zero() {
        return Ok(T::FRAC_PI_2());
    }
    let (theta_c, gmax) = gamma_max(r, g);
    if gamma_target.abs() > gmax {
        return Err(Error::NoSolution {
            target: gamma_target.as_f64(),
            gamma_max: gmax.as_f64(),
        });
    }
    let target = -gamma_target.abs();
    let f = |t: T| gamma_at(r, g, t) - target;

    // Bracketing grid over [θ_c, π/2], then plain bisection.
    let half_pi = T::FRAC_PI_2();
    let n_grid = 1000;
    let step = (half_pi - theta_c) / T::of_usize(n_grid);
    let mut lo = theta_c;
    let mut f_lo = f(lo);
    let mut bracket = None;
    for i in 1..=n_grid {
        let hi = if i == n_grid {
            half_pi
        } else {
            theta_c + step * T::of_usize(i)
        };
        let f_hi = f(hi);
        if f_lo == T::zero() {
            bracket = Some((lo, lo));
            break;
        }
        if f_lo * f_hi <= T::zero() {
            bracket = Some((lo, hi));
            break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    let (mut a, mut b) = bracket.ok_or(Error::NoSolution {
        target: gamma_target.as_f64(),
        gamma_max: gmax.as_f64(),
    })?;
    let mut fa = f(a);
    for _ in 0..80 {
        let mid = (a + b) * T::lit(0.5);
        let fm = f(mid);
        if fm == T::zero() {
            a = mid;
            b = mid;
            break;
        }
        if fa * fm < T::zero() {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    let theta = (a + b) * T::lit(0.5);
    Ok(if gamma_target > T::zero() {
        T::PI() - theta
    } else {
        theta
    })
}

/// One row of the `(θ, γ, ζ)` design curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DesignPoint<T> {
    pub theta: T,
    pub gamma: T,
    pub zeta: T,
}

/// `γ(θ)` and `ζ(θ)` on `n` evenly spaced angles in `[θ_lo, θ_hi]`.
pub fn design_curve<T: Real>(r: T, g: T, theta_lo: T, theta_hi: T, n: usize) -> Vec<DesignPoint<T>> {
    (0..n)
        .map(|i| {
            let t = if n == 1 {
                theta_lo
            } else {
                theta_lo + (theta_hi - theta_lo) * T::of_usize(i) / T::of_usize(n - 1)
            };
            let cp = channel_params(&siegel_from_rtheta(r, t), g);
            DesignPoint {
                theta: t,
                gamma: cp.gamma,
                zeta: cp.zeta,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    // Siegel point from the 2x2 symplectic product J·Rot·diag(e^{-r}, e^{r}).
    // R(θ) = e^{-iθn} acts on (q, p) as the matrix rotation by -θ.
    fn symplectic_oracle(r: f64, theta: f64) -> (f64, f64) {
        let (s, c) = (-theta).sin_cos();
        let rot = [[c, -s], [s, c]];
        let sq = [[(-r).exp(), 0.0], [0.0, r.exp()]];
        let mut m = [[0.0; 2]; 2];
        for i in 0..2 {
            for k in 0..2 {
                m[i][k] = (0..2).map(|l| rot[i][l] * sq[l][k]).sum();
            }
        }
        let j = [[0.0, -1.0], [1.0, 0.0]];
        let mut abcd = [[0.0; 2]; 2];
        for i in 0..2 {
            for k in 0..2 {
                abcd[i][k] = (0..2).map(|l| j[i][l] * m[l][k]).sum();
            }
        }
        let (a, b, c, d) = (abcd[0][0], abcd[0][1], abcd[1][0], abcd[1][1]);
        let z = Complex64::new(c, d) / Complex64::new(a, b);
        (z.im, z.re)
    }

    // γ, ζ from the cot-form bracket (1 - i e^{2r} cotθ)/(e^{2r} - i cotθ).
    fn cot_bracket_oracle(r: f64, theta: f64, g: f64) -> (f64, f64) {
        let e = (2.0 * r).exp();
        let cot = 1.0 / theta.tan();
        let b = Complex64::new(1.0, -e * cot) / Complex64::new(e, -cot);
        (g * g * b.im / 4.0, g * g * b.re / 4.0)
    }

    #[test]
    fn vacuum_is_rotation_invariant() {
        for t in [0.0, 0.3, 1.2, 2.9] {
            let a = siegel_from_rtheta(0.0, t);
            assert_abs_diff_eq!(a.u, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(a.v, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn quarter_turn_has_no_shear() {
        let a = siegel_from_rtheta(2.0, FRAC_PI_2);
        assert_abs_diff_eq!(a.xi(), (-4.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(a.u, 4.0f64.exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(a.v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn matches_symplectic_matrix_product() {
        for &(r, t) in &[(1.0, 0.7), (0.3, 2.2), (2.5, 0.05), (1.7, 1.4)] {
            let a = siegel_from_rtheta(r, t);
            let (u, v) = symplectic_oracle(r, t);
            assert_abs_diff_eq!(a.u, u, epsilon = 1e-12 * u.abs().max(1.0));
            assert_abs_diff_eq!(a.v, v, epsilon = 1e-12 * v.abs().max(1.0));
        }
    }

    // Position wavefunction exp(-w q²/2) of S(r)|0⟩ is carried by e^{-iθn}
    // through the Möbius map of a clockwise rotation; the momentum exponent is 1/w.
    fn mobius_oracle(r: f64, theta: f64) -> (f64, f64) {
        let w = Complex64::new((2.0 * r).exp(), 0.0);
        let (s, c) = (-theta).sin_cos();
        let i = Complex64::i();
        let wr = (w * c - i * s) / (c - i * w * s);
        let a = wr.inv();
        (a.re, -a.im)
    }

    #[test]
    fn matches_wavefunction_rotation() {
        for &(r, t) in &[(1.0, 0.3), (0.5, 2.0), (2.0, 1.2)] {
            let a = siegel_from_rtheta(r, t);
            let (u, v) = mobius_oracle(r, t);
            assert_abs_diff_eq!(a.u, u, epsilon = 1e-10 * u.abs().max(1.0));
            assert_abs_diff_eq!(a.v, v, epsilon = 1e-10 * v.abs().max(1.0));
        }
    }

    #[test]
    fn chi_and_gamma_are_the_same_unitary() {
        for &(r, t, g) in &[(1.0f64, 0.4f64, 0.7f64), (3.0, 2.0, 1.3), (0.5, 1.0, 1.0)] {
            let cp = siegel_from_rtheta(r, t).channel_params(g);
            assert_abs_diff_eq!(cp.chi, -cp.gamma, epsilon = 1e-12 * cp.gamma.abs().max(1.0));
        }
    }

    #[test]
    fn large_squeezing_limit() {
        let cp = siegel_from_rtheta(20.0, FRAC_PI_4).channel_params(1.0);
        assert_abs_diff_eq!(cp.gamma, -0.25, epsilon = 1e-12);
        assert!(cp.zeta <= (-40.0f64).exp());
    }

    #[test]
    fn quarter_turn_channel() {
        let cp = siegel_from_rtheta(3.0, FRAC_PI_2).channel_params(1.0);
        assert_abs_diff_eq!(cp.gamma, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cp.zeta, (-6.0f64).exp() / 4.0, epsilon = 1e-14);
        let cp0 = siegel_from_rtheta(3.0, 0.0).channel_params(1.0);
        assert_abs_diff_eq!(cp0.zeta, 6.0f64.exp() / 4.0, epsilon = 1e-10);
    }

    #[test]
    fn matches_cot_bracket() {
        let (r, t, g) = (2.0, 0.9, 0.8);
        let cp = siegel_from_rtheta(r, t).channel_params(g);
        let (gamma, zeta) = cot_bracket_oracle(r, t, g);
        assert_abs_diff_eq!(cp.gamma, gamma, epsilon = 1e-12);
        assert_abs_diff_eq!(cp.zeta, zeta, epsilon = 1e-12);
    }

    #[test]
    fn gamma_is_odd_about_quarter_turn() {
        for r in [0.5f64, 1.0, 2.0, 4.0] {
            for i in 1..50 {
                let t = i as f64 * FRAC_PI_2 / 50.0;
                let a = gamma_at(r, 1.0, t);
                let b = gamma_at(r, 1.0, PI - t);
                assert_abs_diff_eq!(a, -b, epsilon = 1e-12 * a.abs().max(1.0));
            }
        }
        assert_abs_diff_eq!(gamma_at(2.0, 1.0, 0.0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma_at(2.0, 1.0, FRAC_PI_2), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zeta_strictly_decreasing() {
        for r in [0.2, 1.0, 3.0] {
            let pts = design_curve(r, 1.0, 1e-4, FRAC_PI_2 - 1e-4, 2000);
            assert!(pts.windows(2).all(|w| w[1].zeta < w[0].zeta));
        }
    }

    #[test]
    fn gamma_max_matches_closed_form() {
        // max over c = cotθ of g² c (e^{4r} - 1) / (4(e^{4r} + c²)) is g² sinh(2r)/4
        for (r, g) in [(0.5f64, 1.0f64), (1.0, 0.7), (2.0, 1.3), (3.0, 1.0)] {
            let (tc, gm) = gamma_max(r, g);
            let closed = g * g * (2.0 * r).sinh() / 4.0;
            assert_abs_diff_eq!(gm, closed, epsilon = 1e-10 * closed);
            assert_abs_diff_eq!(tc, (-2.0 * r).exp().atan(), epsilon = 1e-6);
        }
    }

    #[test]
    fn gamma_max_increases_with_squeezing() {
        let vals: Vec<f64> = [0.5, 1.0, 1.5, 2.0, 3.0]
            .iter()
            .map(|&r| gamma_max(r, 1.0).1)
            .collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn solver_hits_target() {
        for target in [PI / 2.0, PI / 4.0, -PI / 2.0, 0.3] {
            let t = solve_theta_for_gamma(2.0, 1.0, target).unwrap();
            assert!(t > 0.0 && t < PI);
            assert!((gamma_at(2.0, 1.0, t) - target).abs() < 1e-10);
        }
        assert_eq!(solve_theta_for_gamma(2.0, 1.0, 0.0).unwrap(), FRAC_PI_2);
    }

    #[test]
    fn solver_reports_gamma_max() {
        match solve_theta_for_gamma(0.5, 1.0, PI / 2.0) {
            Err(Error::NoSolution { gamma_max, .. }) => {
                assert_abs_diff_eq!(gamma_max, 1.0f64.sinh() / 4.0, epsilon = 1e-9)
            }
            other => panic!("expected NoSolution, got {other:?}"),
        }
    }

    fn threshold(target: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 3.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if solve_theta_for_gamma(mid, 1.0, target).is_ok() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    #[test]
    fn squeezing_thresholds() {
        assert!((threshold(PI / 2.0) - 1.27).abs() <= 0.01);
        assert!((threshold(PI / 4.0) - 0.93).abs() <= 0.01);
    }

    #[test]
    fn f32_channel() {
        let cp = siegel_from_rtheta(1.0f32, 0.5).channel_params(1.0);
        let (gamma, zeta) = cot_bracket_oracle(1.0, 0.5, 1.0);
        assert!((cp.gamma as f64 - gamma).abs() < 1e-5);
        assert!((cp.zeta as f64 - zeta).abs() < 1e-5);
    }
}
