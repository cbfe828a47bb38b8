//! Globally adaptive Gauss–Kronrod (7, 15) quadrature for vector-valued integrands.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Stopping rules for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Number of equal panels the interval is cut into before refinement.
    pub initial_panels: usize,
    pub max_evaluations: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-5,
            abs_tol: 1e-300,
            initial_panels: 16,
            max_evaluations: 2_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult<T> {
    pub value: Vec<T>,
    pub error: Vec<T>,
    pub evaluations: usize,
}

struct Panel<T> {
    a: T,
    b: T,
    value: Vec<T>,
    error: Vec<T>,
}

fn gk15<T: Real, F>(f: &F, a: T, b: T, dim: usize) -> Panel<T>
where
    F: Fn(T) -> Vec<T>,
{
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let mut kron = vec![T::zero(); dim];
    let mut gauss = vec![T::zero(); dim];
    let mut add = |x: T, wk: f64, wg: Option<f64>| {
        let y = f(x);
        debug_assert_eq!(y.len(), dim);
        for i in 0..dim {
            kron[i] = kron[i] + T::lit(wk) * y[i];
            if let Some(w) = wg {
                gauss[i] = gauss[i] + T::lit(w) * y[i];
            }
        }
    };
    for k in 0..7 {
        let dx = half * T::lit(XGK[k]);
        let wg = (k % 2 == 1).then(|| WG[k / 2]);
        add(mid - dx, WGK[k], wg);
        add(mid + dx, WGK[k], wg);
    }
    add(mid, WGK[7], Some(WG[3]));
    let value: Vec<T> = kron.iter().map(|&k| k * half).collect();
    let error = kron
        .iter()
        .zip(&gauss)
        .map(|(&k, &g)| ((k - g) * half).abs())
        .collect();
    Panel { a, b, value, error }
}

/// Integrates the `dim`-component function `f` over `[a, b]`.
///
/// Refines the worst panel until every component satisfies
/// `err <= max(rel_tol * |value|, abs_tol)`.
pub fn integrate<T: Real, F>(f: F, a: T, b: T, dim: usize, opts: &QuadOptions) -> Result<QuadResult<T>>
where
    F: Fn(T) -> Vec<T>,
{
    if !(b > a) || dim == 0 {
        return Ok(QuadResult {
            value: vec![T::zero(); dim],
            error: vec![T::zero(); dim],
            evaluations: 0,
        });
    }
    let n0 = opts.initial_panels.max(1);
    let width = (b - a) / T::of_usize(n0);
    let mut panels: Vec<Panel<T>> = (0..n0)
        .map(|i| {
            let lo = a + width * T::of_usize(i);
            let hi = if i + 1 == n0 { b } else { lo + width };
            gk15(&f, lo, hi, dim)
        })
        .collect();
    let mut evaluations = 15 * n0;
    let rel = T::lit(opts.rel_tol);
    let abs = T::lit(opts.abs_tol);

    loop {
        let mut total = vec![T::zero(); dim];
        let mut err = vec![T::zero(); dim];
        for p in &panels {
            for i in 0..dim {
                total[i] = total[i] + p.value[i];
                err[i] = err[i] + p.error[i];
            }
        }
        let budget: Vec<T> = total.iter().map(|v| (rel * v.abs()).max(abs)).collect();
        if err.iter().zip(&budget).all(|(e, b)| e <= b) {
            return Ok(QuadResult {
                value: total,
                error: err,
                evaluations,
            });
        }
        if evaluations + 30 > opts.max_evaluations {
            let worst = (0..dim)
                .max_by(|&i, &k| {
                    (err[i] / budget[i])
                        .partial_cmp(&(err[k] / budget[k]))
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(0);
            return Err(Error::QuadratureNotConverged {
                lo: a.as_f64(),
                hi: b.as_f64(),
                estimate: total[worst].as_f64(),
                error: err[worst].as_f64(),
                evaluations,
            });
        }
        let score = |p: &Panel<T>| {
            (0..dim)
                .map(|i| p.error[i] / budget[i])
                .fold(T::zero(), |m, x| m.max(x))
        };
        let (idx, _) = panels
            .iter()
            .enumerate()
            .map(|(i, p)| (i, score(p)))
            .fold((0, T::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best });
        let p = panels.swap_remove(idx);
        let mid = (p.a + p.b) * T::lit(0.5);
        if !(mid > p.a && mid < p.b) {
            return Err(Error::QuadratureNotConverged {
                lo: p.a.as_f64(),
                hi: p.b.as_f64(),
                estimate: total[0].as_f64(),
                error: err[0].as_f64(),
                evaluations,
            });
        }
        panels.push(gk15(&f, p.a, mid, dim));
        panels.push(gk15(&f, mid, p.b, dim));
        evaluations += 30;
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<T: Real, F>(f: F, a: T, b: T, opts: &QuadOptions) -> Result<(T, T)>
where
    F: Fn(T) -> T,
{
    let r = integrate(|x| vec![f(x)], a, b, 1, opts)?;
    Ok((r.value[0], r.error[0]))
}
