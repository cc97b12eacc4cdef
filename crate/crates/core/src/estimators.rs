//! Mutual-information estimators.
//!
//! Two estimators work from the observed `{H_t, Y_t}` only:
//!
//! * the standard empirical (SE) estimator, which plugs the empirical
//!   covariance `S_t = Y_t Y_t^H / M` straight into the mutual-information
//!   formula and is biased when `M` is comparable to `N`;
//! * the G-estimator, which first solves a scalar fixed point for a
//!   per-slot tuning parameter `yhat_t` and applies a dimension-aware
//!   correction, staying consistent when `M` and `N` grow together.
//!
//! The ground-truth mutual information (which needs the unobservable
//! `G_t`) lives here too, as the benchmark the estimators are judged
//! against.

use crate::channel::{ChannelSet, ObservationBlock};
use crate::error::{Error, Result};
use crate::matrix::{gram, logdet_hpd, Cholesky, ComplexMatrix, HermitianMatrix};

/// Root-solver bookkeeping for one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub residual: f64,
}

/// Per-slot estimator outputs.
#[derive(Debug, Clone, Copy)]
pub struct SlotEstimate {
    /// Fixed-point parameter `yhat_t`, inside `[(M-N)/M, 1 + (M-N)/M]`.
    pub yhat: f64,
    /// SE estimate for this slot, nats per antenna.
    pub i_se: f64,
    /// G-estimate for this slot, nats per antenna.
    pub i_g: f64,
    pub solver: SolverDiagnostics,
}

/// Per-slot and aggregate estimator outputs.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub slots: Vec<SlotEstimate>,
    /// Average SE estimate over the slots, nats per antenna.
    pub i_se: f64,
    /// Average G-estimate over the slots, nats per antenna.
    pub i_g: f64,
}

/// Average per-antenna mutual information of the link,
/// `(1/NT) sum_t [logdet(H_t H_t^H + G_t G_t^H) - logdet(G_t G_t^H)]`.
pub fn ground_truth_mi(ch: &ChannelSet) -> Result<f64> {
    let n = ch.scenario.receive_antennas as f64;
    let t = ch.slot_count() as f64;
    let mut acc = 0.0;
    for slot in &ch.slots {
        let full = slot.gg.add(&slot.hh)?;
        acc += logdet_hpd(&full)? - logdet_hpd(&slot.gg)?;
    }
    Ok(acc / (n * t))
}

/// SE estimator at the default parameter `y = 1`.
pub fn se_estimate(h: &[ComplexMatrix], obs: &ObservationBlock) -> Result<f64> {
    se_estimate_at(h, obs, 1.0)
}

/// Parametrized SE estimator
/// `(1/NT) sum_t [logdet(y H_t H_t^H + S_t) - logdet(S_t)]` with
/// `S_t = Y_t Y_t^H / M`.
pub fn se_estimate_at(h: &[ComplexMatrix], obs: &ObservationBlock, y: f64) -> Result<f64> {
    if y <= 0.0 {
        return Err(Error::InvalidInput("parameter y must be positive".into()));
    }
    validate_inputs(h, obs)?;
    let n = obs.receive_antennas as f64;
    let t = h.len() as f64;
    let m = obs.samples_per_slot as f64;
    let mut acc = 0.0;
    for (ht, yt) in h.iter().zip(&obs.y) {
        let s = gram(yt).scaled(1.0 / m);
        let hh = gram(ht);
        let shifted = s.add_scaled(y, &hh)?;
        acc += logdet_hpd(&shifted)? - logdet_hpd(&s)?;
    }
    Ok(acc / (n * t))
}

/// Consistent estimate of `(1/N) logdet(G G^H)` from one observation slot:
/// `(1/N) logdet(Y Y^H / M) + ((M-N)/N) log((M-N)/M) + 1`.
pub fn noise_logdet_estimate(y: &ComplexMatrix, n: usize, m: usize) -> Result<f64> {
    if y.rows() != n || y.cols() != m {
        return Err(Error::DimensionMismatch(format!(
            "observation is {}x{}, expected {n}x{m}",
            y.rows(),
            y.cols()
        )));
    }
    if m <= n {
        return Err(Error::InvalidInput(
            "need more samples than antennas (M > N)".into(),
        ));
    }
    let s = gram(y).scaled(1.0 / m as f64);
    let (nf, mf) = (n as f64, m as f64);
    Ok(logdet_hpd(&s)? / nf + (mf - nf) / nf * ((mf - nf) / mf).ln() + 1.0)
}

/// Value and derivative of the fixed-point function
/// `h(y) = (y/M) tr(HH Q(y)) + (M-N)/M - y` with `Q(y) = (y HH + S)^{-1}`.
fn fixed_point_terms(
    hh: &HermitianMatrix,
    hh_mat: &ComplexMatrix,
    s: &HermitianMatrix,
    m: f64,
    y: f64,
) -> Result<(f64, f64)> {
    let n = hh.dim();
    let shifted = s.add_scaled(y, hh)?;
    let chol = Cholesky::new(&shifted)?;
    // Z = Q(y) HH, via solves against the columns of HH.
    let z = chol.solve(hh_mat)?;
    let tr_z: f64 = (0..n).map(|i| z.get(i, i).re).sum();
    let mut tr_z2 = 0.0;
    for i in 0..n {
        for k in 0..n {
            tr_z2 += (z.get(i, k) * z.get(k, i)).re;
        }
    }
    let nf = n as f64;
    let value = y * tr_z / m + (m - nf) / m - y;
    let derivative = (tr_z - y * tr_z2) / m - 1.0;
    Ok((value, derivative))
}

/// Solves the scalar fixed point for `yhat`: the unique positive root of
/// `h(y) = (y/M) tr(HH (y HH + S)^{-1}) + (M-N)/M - y`.
///
/// `h` is concave with `h((M-N)/M) >= 0` and `h(1 + (M-N)/M) < 0`, so the
/// root is bracketed; bisection guarded by in-bracket Newton steps gives a
/// quadratic tail without losing guaranteed convergence.
pub fn solve_y_hat(
    hh: &HermitianMatrix,
    s: &HermitianMatrix,
    m: usize,
) -> Result<(f64, SolverDiagnostics)> {
    let n = hh.dim();
    if s.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "HH is {n}x{n} but S is {}x{}",
            s.dim(),
            s.dim()
        )));
    }
    if m <= n {
        return Err(Error::InvalidInput(
            "need more samples than antennas (M > N)".into(),
        ));
    }
    const TOL: f64 = 1e-12;
    const MAX_ITER: usize = 200;
    let mf = m as f64;
    let hh_mat = hh.as_matrix();
    let lo = (mf - n as f64) / mf;
    let hi = 1.0 + lo;

    let (h_lo, _) = fixed_point_terms(hh, &hh_mat, s, mf, lo)?;
    if h_lo.abs() <= TOL {
        // Zero channel: the root sits exactly at the lower bracket edge.
        return Ok((
            lo,
            SolverDiagnostics {
                iterations: 1,
                residual: h_lo.abs(),
            },
        ));
    }

    let mut a = lo;
    let mut b = hi;
    let mut y = 1.0; // always interior: lo < 1 < hi
    let mut iterations = 1;
    let mut residual = h_lo.abs();
    while iterations < MAX_ITER {
        let (hv, hd) = fixed_point_terms(hh, &hh_mat, s, mf, y)?;
        iterations += 1;
        residual = hv.abs();
        if residual <= TOL {
            return Ok((y, SolverDiagnostics { iterations, residual }));
        }
        if hv > 0.0 {
            a = y;
        } else {
            b = y;
        }
        let newton = y - hv / hd;
        y = if hd < 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    Err(Error::NoConvergence {
        what: "yhat fixed point",
        iterations,
        residual,
    })
}

fn validate_inputs(h: &[ComplexMatrix], obs: &ObservationBlock) -> Result<()> {
    if h.len() != obs.slot_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} channel slots vs {} observation slots",
            h.len(),
            obs.slot_count()
        )));
    }
    let n = obs.receive_antennas;
    if !h.iter().all(|ht| ht.rows() == n) {
        return Err(Error::DimensionMismatch(
            "channel and observation antenna counts differ".into(),
        ));
    }
    if obs.samples_per_slot <= n {
        return Err(Error::InvalidInput(
            "need more samples than antennas (M > N)".into(),
        ));
    }
    Ok(())
}

/// G-estimator: per slot, solves for `yhat_t` and evaluates
///
/// ```text
/// (1/N) [logdet(yhat HH + S) - logdet(S)]
///   + ((M-N)/N) [log((M/(M-N)) yhat) + 1] - (M/N) yhat
/// ```
///
/// then averages over slots. The report also carries the SE estimate,
/// which shares all the factorizations.
pub fn g_estimate(h: &[ComplexMatrix], obs: &ObservationBlock) -> Result<EstimateReport> {
    validate_inputs(h, obs)?;
    let n = obs.receive_antennas;
    let m = obs.samples_per_slot;
    let (nf, mf) = (n as f64, m as f64);
    let mut slots = Vec::with_capacity(h.len());
    for (ht, yt) in h.iter().zip(&obs.y) {
        let hh = gram(ht);
        let s = gram(yt).scaled(1.0 / mf);
        let logdet_s = logdet_hpd(&s)?;
        let (yhat, solver) = solve_y_hat(&hh, &s, m)?;
        let logdet_g = logdet_hpd(&s.add_scaled(yhat, &hh)?)?;
        let logdet_se = logdet_hpd(&s.add_scaled(1.0, &hh)?)?;
        let correction = (mf - nf) / nf * ((mf / (mf - nf) * yhat).ln() + 1.0) - mf / nf * yhat;
        slots.push(SlotEstimate {
            yhat,
            i_se: (logdet_se - logdet_s) / nf,
            i_g: (logdet_g - logdet_s) / nf + correction,
            solver,
        });
    }
    let t = slots.len() as f64;
    let i_se = slots.iter().map(|s| s.i_se).sum::<f64>() / t;
    let i_g = slots.iter().map(|s| s.i_g).sum::<f64>() / t;
    Ok(EstimateReport { slots, i_se, i_g })
}
