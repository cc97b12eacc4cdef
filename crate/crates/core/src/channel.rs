//! Channel and interference model.
//!
//! A scenario has `T` coherence slots. In slot `t` the receiver knows the
//! transmit channel `H_t` (N x n0) and is hit by `K` colored interferers
//! plus thermal noise, folded into `G_t = [B_t | sigma*I_N]` (N x n with
//! `n = sum(n_k) + N`). The receiver observes `Y_t = G_t W_t` over `M`
//! channel uses, with `W_t` standard complex Gaussian. Everything
//! unobservable lives in [`ChannelSet`]; estimators may only touch the
//! `H_t` matrices and an [`ObservationBlock`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{extreme_eigs, gram, ComplexMatrix, HermitianMatrix};
use crate::rng::{sample_standard_complex_gaussian, RngStream};

/// Stream-domain tags for channel matrix draws. High bits keep these
/// disjoint from trial indices used by the Monte Carlo harness.
const H_STREAM_KIND: u64 = 1 << 48;
const B_STREAM_KIND: u64 = 2 << 48;

/// Scenario dimensions and physical parameters, all in linear units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Receive antennas N.
    pub receive_antennas: usize,
    /// Transmit antennas n0.
    pub transmit_antennas: usize,
    /// Channel uses observed per slot, M.
    pub samples_per_slot: usize,
    /// Coherence slots T.
    pub slots: usize,
    /// Interferer count K.
    pub interferers: usize,
    /// Antennas per interferer, length K.
    pub interferer_antennas: Vec<usize>,
    /// Thermal noise variance sigma^2 > 0.
    pub noise_variance: f64,
    /// Target signal-to-interference ratio, linear scale.
    pub sir: f64,
    /// Seed for channel generation.
    pub seed: u64,
}

impl ScenarioConfig {
    /// Total interference dimension `n = sum(n_k) + N`.
    pub fn interference_dim(&self) -> usize {
        self.interferer_antennas.iter().sum::<usize>() + self.receive_antennas
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidInput(msg.to_string()))
            }
        };
        check(self.receive_antennas >= 1, "receive antenna count must be >= 1")?;
        check(self.transmit_antennas >= 1, "transmit antenna count must be >= 1")?;
        check(self.slots >= 1, "slot count must be >= 1")?;
        check(self.interferers >= 1, "interferer count must be >= 1")?;
        check(
            self.interferer_antennas.len() == self.interferers,
            "interferer antenna list length must equal the interferer count",
        )?;
        check(
            self.interferer_antennas.iter().all(|&nk| nk >= 1),
            "every interferer needs at least one antenna",
        )?;
        check(
            self.samples_per_slot > self.receive_antennas,
            "samples per slot must exceed the receive antenna count",
        )?;
        check(self.noise_variance > 0.0, "noise variance must be positive")?;
        check(self.sir > 0.0, "SIR must be positive")?;
        Ok(())
    }
}

/// One slot of ground truth: channels plus cached Gram matrices.
#[derive(Debug, Clone)]
pub struct ChannelSlot {
    pub h: ComplexMatrix,
    pub b: ComplexMatrix,
    pub g: ComplexMatrix,
    pub hh: HermitianMatrix,
    pub gg: HermitianMatrix,
}

/// The `T`-slot ground truth. Holds all quantities the estimators are not
/// allowed to see.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub scenario: ScenarioConfig,
    pub slots: Vec<ChannelSlot>,
}

impl ChannelSet {
    /// Assembles a channel set from explicit `(H_t, B_t)` pairs, building
    /// `G_t = [B_t | sigma*I_N]` and the cached Gram matrices. Used by the
    /// file importer and by tests that need non-Gaussian channels.
    pub fn from_parts(
        scenario: ScenarioConfig,
        parts: Vec<(ComplexMatrix, ComplexMatrix)>,
    ) -> Result<Self> {
        scenario.validate()?;
        if parts.len() != scenario.slots {
            return Err(Error::InvalidInput(format!(
                "expected {} slots, got {}",
                scenario.slots,
                parts.len()
            )));
        }
        let n = scenario.receive_antennas;
        let nb = scenario.interference_dim() - n;
        let sigma = scenario.noise_variance.sqrt();
        let noise_block = ComplexMatrix::identity(n).scaled(sigma.into());
        let mut slots = Vec::with_capacity(parts.len());
        for (t, (h, b)) in parts.into_iter().enumerate() {
            if h.rows() != n || h.cols() != scenario.transmit_antennas {
                return Err(Error::InvalidInput(format!(
                    "slot {t}: H must be {n}x{}, got {}x{}",
                    scenario.transmit_antennas,
                    h.rows(),
                    h.cols()
                )));
            }
            if b.rows() != n || b.cols() != nb {
                return Err(Error::InvalidInput(format!(
                    "slot {t}: B must be {n}x{nb}, got {}x{}",
                    b.rows(),
                    b.cols()
                )));
            }
            let g = b.hcat(&noise_block)?;
            let hh = gram(&h);
            let gg = gram(&g);
            slots.push(ChannelSlot { h, b, g, hh, gg });
        }
        Ok(Self { scenario, slots })
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// Clones the known channel matrices, the only part estimators see.
    pub fn h_matrices(&self) -> Vec<ComplexMatrix> {
        self.slots.iter().map(|s| s.h.clone()).collect()
    }
}

/// The `T`-slot observed data.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBlock {
    pub receive_antennas: usize,
    pub samples_per_slot: usize,
    pub y: Vec<ComplexMatrix>,
}

impl ObservationBlock {
    pub fn new(y: Vec<ComplexMatrix>) -> Result<Self> {
        let first = y
            .first()
            .ok_or_else(|| Error::InvalidInput("observation block needs at least one slot".into()))?;
        let (n, m) = (first.rows(), first.cols());
        if !y.iter().all(|yt| yt.rows() == n && yt.cols() == m) {
            return Err(Error::InvalidInput(
                "all observation slots must share the same dimensions".into(),
            ));
        }
        Ok(Self {
            receive_antennas: n,
            samples_per_slot: m,
            y,
        })
    }

    pub fn slot_count(&self) -> usize {
        self.y.len()
    }
}

/// Draws the per-slot channels: `H_t` and `B_t` i.i.d. standard complex
/// Gaussian, `B_t` rescaled to hit the configured SIR, and
/// `G_t = [B_t | sigma*I_N]`. Per-slot draws use substreams of `rng` that
/// do not depend on `T`, so extending the slot count keeps the earlier
/// slots' channels.
pub fn generate_channels(cfg: &ScenarioConfig, rng: &RngStream) -> Result<ChannelSet> {
    cfg.validate()?;
    let n = cfg.receive_antennas;
    let nb = cfg.interference_dim() - n;
    let mut parts = Vec::with_capacity(cfg.slots);
    for t in 0..cfg.slots {
        let mut h_rng = rng.substream(H_STREAM_KIND | t as u64);
        let mut b_rng = rng.substream(B_STREAM_KIND | t as u64);
        let h = sample_standard_complex_gaussian(n, cfg.transmit_antennas, &mut h_rng);
        let b_raw = sample_standard_complex_gaussian(n, nb, &mut b_rng);
        let b = scale_to_sir(&h, &b_raw, cfg.sir)?;
        parts.push((h, b));
    }
    ChannelSet::from_parts(cfg.clone(), parts)
}

/// Convenience wrapper seeding the stream from the scenario itself.
pub fn generate_channels_seeded(cfg: &ScenarioConfig) -> Result<ChannelSet> {
    generate_channels(cfg, &RngStream::new(cfg.seed, 0))
}

/// Rescales `B` so that `tr(H H^H) / tr(B B^H) = alpha`.
pub fn scale_to_sir(h: &ComplexMatrix, b: &ComplexMatrix, alpha: f64) -> Result<ComplexMatrix> {
    if alpha <= 0.0 {
        return Err(Error::InvalidInput("SIR must be positive".into()));
    }
    let tb = gram(b).trace();
    if tb <= 0.0 {
        return Err(Error::ZeroInterference);
    }
    let th = gram(h).trace();
    let factor = (th / (alpha * tb)).sqrt();
    Ok(b.scaled(factor.into()))
}

/// Draws one observation block `Y_t = G_t W_t` per slot, with a fresh
/// `W_t` each slot and each call (the stream advances).
pub fn sample_observations(
    ch: &ChannelSet,
    samples_per_slot: usize,
    rng: &mut RngStream,
) -> Result<ObservationBlock> {
    if samples_per_slot == 0 {
        return Err(Error::InvalidInput("samples per slot must be >= 1".into()));
    }
    let mut y = Vec::with_capacity(ch.slots.len());
    for slot in &ch.slots {
        let w = sample_standard_complex_gaussian(slot.g.cols(), samples_per_slot, rng);
        y.push(slot.g.mul(&w)?);
    }
    ObservationBlock::new(y)
}

/// Measured values and pass/fail margins for the model assumptions.
#[derive(Debug, Clone)]
pub struct SlotAssumptions {
    pub h_spectral_norm: f64,
    pub g_spectral_norm: f64,
    pub gg_min_eigenvalue: f64,
    /// `lambda_min(G G^H) >= sigma^2`.
    pub noise_floor_ok: bool,
    /// Rank of `H H^H` (eigenvalues above `1e-10 * lambda_max`).
    pub channel_rank: usize,
    /// Whether `0 < rank < N` holds strictly. Reported, not enforced:
    /// full-rank square channels are common in practice.
    pub rank_margin_ok: bool,
}

#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub receive_antennas: usize,
    pub samples_per_slot: usize,
    pub samples_exceed_antennas: bool,
    pub slots: Vec<SlotAssumptions>,
}

impl AssumptionReport {
    /// True when every hard assumption holds (the rank margin is advisory).
    pub fn hard_assumptions_pass(&self) -> bool {
        self.samples_exceed_antennas && self.slots.iter().all(|s| s.noise_floor_ok)
    }
}

/// Evaluates the model assumptions on a channel set for a given `M`.
pub fn check_assumptions(ch: &ChannelSet, samples_per_slot: usize) -> AssumptionReport {
    let n = ch.scenario.receive_antennas;
    let sigma2 = ch.scenario.noise_variance;
    let slots = ch
        .slots
        .iter()
        .map(|slot| {
            let (gg_min, gg_max) = extreme_eigs(&slot.gg);
            let (_, hh_max) = extreme_eigs(&slot.hh);
            let hh_eigs = crate::matrix::eigenvalues(&slot.hh);
            let rank = hh_eigs.iter().filter(|&&l| l > 1e-10 * hh_max).count();
            SlotAssumptions {
                h_spectral_norm: hh_max.max(0.0).sqrt(),
                g_spectral_norm: gg_max.max(0.0).sqrt(),
                gg_min_eigenvalue: gg_min,
                noise_floor_ok: gg_min >= sigma2 * (1.0 - 1e-9),
                channel_rank: rank,
                rank_margin_ok: rank > 0 && rank < n,
            }
        })
        .collect();
    AssumptionReport {
        receive_antennas: n,
        samples_per_slot,
        samples_exceed_antennas: samples_per_slot > n,
        slots,
    }
}
