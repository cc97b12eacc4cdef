//! Deterministic equivalents and asymptotic variances.
//!
//! These are the unobservable-side formulas, all functions of the true
//! channel Gram matrices `HH = H H^H` and `GG = G G^H`:
//!
//! * `kappa(y)` — the unique positive solution of the scalar trace fixed
//!   point `kappa = (1/M) tr(GG (GG/(1+kappa) + y HH)^{-1})`;
//! * `V_t(y)` — deterministic equivalent of the random log-determinant
//!   `logdet(y HH + Y Y^H / M)`;
//! * the SE-estimator bias value (what the SE estimator actually
//!   converges to, instead of the mutual information);
//! * the closed-form oracle parameter `y* = 1 - (1/M) tr(GG (HH+GG)^{-1})`,
//!   equivalently the solution of `y = 1/(1 + kappa(y))`;
//! * the CLT variances `alpha(y)` for the SE estimator and `theta` for the
//!   G-estimator.

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::matrix::{
    eigenvalues, logdet_hpd, solve_hpd, Cholesky, HermitianMatrix,
};

/// Below this value an asymptotic variance counts as degenerate.
const VARIANCE_FLOOR: f64 = 1e-12;

/// Everything the deterministic-equivalent layer knows about one slot.
#[derive(Debug, Clone, Copy)]
pub struct SlotEquivalents {
    /// Parameter the slot was evaluated at.
    pub y: f64,
    pub kappa: f64,
    /// Deterministic equivalent of `logdet(y HH + S)` (unnormalized).
    pub v: f64,
    /// Closed-form oracle parameter `y*` for this slot.
    pub y_star: f64,
    /// Per-slot SE variance term at `y` (before the `1/T^2` aggregation).
    pub alpha_term: f64,
    /// Per-slot G-estimator variance term (before the `1/T^2` aggregation).
    pub theta_term: f64,
}

fn validate(hh: &HermitianMatrix, gg: &HermitianMatrix, m: usize) -> Result<()> {
    if hh.dim() != gg.dim() {
        return Err(Error::DimensionMismatch(format!(
            "HH is {0}x{0} but GG is {1}x{1}",
            hh.dim(),
            gg.dim()
        )));
    }
    if m <= hh.dim() {
        return Err(Error::InvalidInput(
            "need more samples than antennas (M > N)".into(),
        ));
    }
    Ok(())
}

/// `f(x) = x - (1/M) tr(GG (GG/(1+x) + y HH)^{-1})`, the strictly
/// increasing map whose unique zero is `kappa(y)`.
fn kappa_gap(hh: &HermitianMatrix, gg: &HermitianMatrix, y: f64, m: f64, x: f64) -> Result<f64> {
    let n = gg.dim();
    let inner = gg.scaled(1.0 / (1.0 + x)).add_scaled(y, hh)?;
    let z = solve_hpd(&inner, &gg.as_matrix())?;
    let tr: f64 = (0..n).map(|i| z.get(i, i).re).sum();
    Ok(x - tr / m)
}

/// Solves the trace fixed point for `kappa(y)` by bisection on
/// `[0, N/(M-N)]`; the upper endpoint is the proven bound on the solution,
/// attained exactly when `y * HH = 0`.
pub fn solve_kappa(hh: &HermitianMatrix, gg: &HermitianMatrix, y: f64, m: usize) -> Result<f64> {
    validate(hh, gg, m)?;
    if y < 0.0 {
        return Err(Error::InvalidInput("parameter y must be >= 0".into()));
    }
    const TOL: f64 = 1e-12;
    const MAX_ITER: usize = 200;
    let n = gg.dim() as f64;
    let mf = m as f64;
    let hi = n / (mf - n);

    let f_hi = kappa_gap(hh, gg, y, mf, hi)?;
    if f_hi <= 0.0 {
        // Root sits at (or within rounding of) the bracket edge.
        return Ok(hi);
    }
    let mut a = 0.0;
    let mut b = hi;
    let mut residual = f_hi;
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (a + b);
        let f_mid = kappa_gap(hh, gg, y, mf, mid)?;
        residual = f_mid.abs();
        if residual <= TOL || (b - a) <= f64::EPSILON * (1.0 + hi) {
            return Ok(mid);
        }
        if f_mid < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Err(Error::NoConvergence {
        what: "kappa fixed point",
        iterations: MAX_ITER,
        residual,
    })
}

/// Naive fixed-point iteration `kappa <- (1/M) tr(GG (GG/(1+kappa) + y HH)^{-1})`.
/// The map is a contraction; kept as a cross-check on the bisection route.
pub fn solve_kappa_fixed_point(
    hh: &HermitianMatrix,
    gg: &HermitianMatrix,
    y: f64,
    m: usize,
) -> Result<f64> {
    validate(hh, gg, m)?;
    let mf = m as f64;
    let mut x = 0.0;
    for _ in 0..500 {
        let next = x - kappa_gap(hh, gg, y, mf, x)?;
        if (next - x).abs() <= 1e-14 * (1.0 + next.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Deterministic equivalent of `logdet(y HH + Y Y^H / M)`:
/// `V(y) = logdet(y HH + GG/(1+kappa)) + M log(1+kappa) - M kappa/(1+kappa)`.
pub fn v_slot(hh: &HermitianMatrix, gg: &HermitianMatrix, y: f64, m: usize) -> Result<f64> {
    if y <= 0.0 {
        return Err(Error::InvalidInput("parameter y must be positive".into()));
    }
    let kappa = solve_kappa(hh, gg, y, m)?;
    let mf = m as f64;
    let inner = gg.scaled(1.0 / (1.0 + kappa)).add_scaled(y, hh)?;
    Ok(logdet_hpd(&inner)? + mf * (1.0 + kappa).ln() - mf * kappa / (1.0 + kappa))
}

/// What the SE estimator converges to: the deterministic bias value
///
/// ```text
/// (1/NT) sum_t [logdet(y HH_t + GG_t/(1+kappa_t)) - logdet(GG_t)]
///   + (1/T) sum_t [(M/N) log(1+kappa_t) - (M/N) kappa_t/(1+kappa_t)]
///   + ((M-N)/N) log((M-N)/M) + 1
/// ```
pub fn se_bias_value(ch: &ChannelSet, m: usize, y: f64) -> Result<f64> {
    if y <= 0.0 {
        return Err(Error::InvalidInput("parameter y must be positive".into()));
    }
    let n = ch.scenario.receive_antennas as f64;
    let t = ch.slot_count() as f64;
    let mf = m as f64;
    let mut acc = 0.0;
    for slot in &ch.slots {
        let kappa = solve_kappa(&slot.hh, &slot.gg, y, m)?;
        let inner = slot.gg.scaled(1.0 / (1.0 + kappa)).add_scaled(y, &slot.hh)?;
        acc += (logdet_hpd(&inner)? - logdet_hpd(&slot.gg)?) / n;
        acc += mf / n * ((1.0 + kappa).ln() - kappa / (1.0 + kappa));
    }
    Ok(acc / t + (mf - n) / n * ((mf - n) / mf).ln() + 1.0)
}

/// Closed form for the oracle parameter:
/// `y* = 1 - (1/M) tr(GG (HH + GG)^{-1})`.
pub fn y_star_closed_form(hh: &HermitianMatrix, gg: &HermitianMatrix, m: usize) -> Result<f64> {
    validate(hh, gg, m)?;
    let n = gg.dim();
    let full = gg.add(hh)?;
    let z = solve_hpd(&full, &gg.as_matrix())?;
    let tr: f64 = (0..n).map(|i| z.get(i, i).re).sum();
    Ok(1.0 - tr / m as f64)
}

/// `tr((a I + y HH GG^{-1})^{-2})`, evaluated through the Hermitian-similar
/// form `a I + y L^{-1} HH L^{-H}` (with `GG = L L^H`) and its eigenvalues.
fn trace_inverse_square(
    hh: &HermitianMatrix,
    gg: &HermitianMatrix,
    a: f64,
    y: f64,
) -> Result<f64> {
    let chol = Cholesky::new(gg)?;
    let w = chol.solve_lower(&hh.as_matrix())?;
    let whitened = HermitianMatrix::symmetrized(&chol.solve_lower(&w.adjoint())?)?;
    let shifted = whitened
        .scaled(y)
        .add(&HermitianMatrix::scaled_identity(hh.dim(), a))?;
    Ok(eigenvalues(&shifted).iter().map(|l| 1.0 / (l * l)).sum())
}

/// Per-slot SE variance term at parameter `y` (before `1/T^2` weighting):
/// `2 log M - log[(M-N)(M (kappa+1)^2 - tr((I/(kappa+1) + y HH GG^{-1})^{-2}))]`.
pub fn alpha_slot(hh: &HermitianMatrix, gg: &HermitianMatrix, y: f64, m: usize) -> Result<f64> {
    if y <= 0.0 {
        return Err(Error::InvalidInput("parameter y must be positive".into()));
    }
    let kappa = solve_kappa(hh, gg, y, m)?;
    let (nf, mf) = (gg.dim() as f64, m as f64);
    let tr = trace_inverse_square(hh, gg, 1.0 / (kappa + 1.0), y)?;
    let inner = (mf - nf) * (mf * (kappa + 1.0).powi(2) - tr);
    Ok(2.0 * mf.ln() - inner.ln())
}

/// Per-slot G-estimator variance term (before `1/T^2` weighting):
/// `2 log(M y*) - log[(M-N)(M - tr((I + HH GG^{-1})^{-2}))]`.
pub fn theta_slot(hh: &HermitianMatrix, gg: &HermitianMatrix, m: usize) -> Result<f64> {
    let y_star = y_star_closed_form(hh, gg, m)?;
    let (nf, mf) = (gg.dim() as f64, m as f64);
    let tr = trace_inverse_square(hh, gg, 1.0, 1.0)?;
    let inner = (mf - nf) * (mf - tr);
    Ok(2.0 * (mf * y_star).ln() - inner.ln())
}

/// Asymptotic variance of `N * I_SE(y)` around the SE bias value:
/// `(1/T^2) sum_t alpha_slot_t(y)`. Errors with
/// [`Error::NonPositiveVariance`] when the result is not positive (e.g. a
/// zero channel, where the statistic has no fluctuation at this order).
pub fn alpha_variance(ch: &ChannelSet, m: usize, y: f64) -> Result<f64> {
    let t = ch.slot_count() as f64;
    let mut acc = 0.0;
    for slot in &ch.slots {
        acc += alpha_slot(&slot.hh, &slot.gg, y, m)?;
    }
    let alpha = acc / (t * t);
    if alpha <= VARIANCE_FLOOR {
        return Err(Error::NonPositiveVariance { value: alpha });
    }
    Ok(alpha)
}

/// Asymptotic variance of `N * (I_G - I)`: `(1/T^2) sum_t theta_slot_t`.
/// Errors with [`Error::NonPositiveVariance`] when degenerate.
pub fn theta_variance(ch: &ChannelSet, m: usize) -> Result<f64> {
    let t = ch.slot_count() as f64;
    let mut acc = 0.0;
    for slot in &ch.slots {
        acc += theta_slot(&slot.hh, &slot.gg, m)?;
    }
    let theta = acc / (t * t);
    if theta <= VARIANCE_FLOOR {
        return Err(Error::NonPositiveVariance { value: theta });
    }
    Ok(theta)
}

/// Bundles every per-slot quantity at a common `y` (used by the CLI table).
pub fn slot_equivalents(
    hh: &HermitianMatrix,
    gg: &HermitianMatrix,
    y: f64,
    m: usize,
) -> Result<SlotEquivalents> {
    Ok(SlotEquivalents {
        y,
        kappa: solve_kappa(hh, gg, y, m)?,
        v: v_slot(hh, gg, y, m)?,
        y_star: y_star_closed_form(hh, gg, m)?,
        alpha_term: alpha_slot(hh, gg, y, m)?,
        theta_term: theta_slot(hh, gg, m)?,
    })
}
