//! File formats: matrix interchange, channel/observation directories,
//! experiment config, and CSV emission.
//!
//! Matrix interchange (`.cmat`, UTF-8 text): first line `rows cols
//! complex`, then one line per row with space-separated fields of the
//! form `re{+|-}im i`, e.g. `1.5-0.25i`. The parser accepts scientific
//! notation; the writer emits 17 significant digits, which round-trips
//! `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, ObservationBlock, ScenarioConfig};
use crate::detequiv::SlotEquivalents;
use crate::error::{Error, Result};
use crate::estimators::EstimateReport;
use crate::experiments::{ExperimentConfig, HistogramResult, HistogramSpec, MseCurvePoint, Sweep};
use crate::matrix::ComplexMatrix;

/// 17 significant digits: enough to reproduce any `f64` bit-exactly.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_complex(z: Complex64) -> String {
    format!("{:.16e}{:+.16e}i", z.re, z.im)
}

/// Parses `re{+|-}im i`, both parts optionally in scientific notation.
pub fn parse_complex(field: &str) -> Result<Complex64> {
    let body = field
        .strip_suffix(['i', 'I'])
        .ok_or_else(|| Error::Parse(format!("complex field `{field}` must end in `i`")))?;
    // The imaginary part starts at the last sign that is not an exponent
    // sign and not the leading sign of the real part.
    let bytes = body.as_bytes();
    let mut split = None;
    for pos in (1..bytes.len()).rev() {
        let c = bytes[pos];
        if (c == b'+' || c == b'-') && !matches!(bytes[pos - 1], b'e' | b'E') {
            split = Some(pos);
            break;
        }
    }
    let split = split.ok_or_else(|| Error::Parse(format!("`{field}` has no imaginary part")))?;
    let re: f64 = body[..split]
        .parse()
        .map_err(|_| Error::Parse(format!("bad real part in `{field}`")))?;
    let im: f64 = body[split..]
        .parse()
        .map_err(|_| Error::Parse(format!("bad imaginary part in `{field}`")))?;
    if !re.is_finite() || !im.is_finite() {
        return Err(Error::Parse(format!("non-finite entry `{field}`")));
    }
    Ok(Complex64::new(re, im))
}

pub fn write_cmat(path: &Path, m: &ComplexMatrix) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} complex", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| fmt_complex(m.get(i, j))).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_cmat(path: &Path) -> Result<ComplexMatrix> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?;
    let mut parts = header.split_whitespace();
    let rows: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse(format!("{}: bad header `{header}`", path.display())))?;
    let cols: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse(format!("{}: bad header `{header}`", path.display())))?;
    if parts.next() != Some("complex") {
        return Err(Error::Parse(format!(
            "{}: header must end with `complex`",
            path.display()
        )));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (r, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if r >= rows {
            return Err(Error::Parse(format!(
                "{}: more than {rows} data rows",
                path.display()
            )));
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != cols {
            return Err(Error::Parse(format!(
                "{}: row {r} has {} fields, expected {cols}",
                path.display(),
                fields.len()
            )));
        }
        for f in fields {
            data.push(parse_complex(f)?);
        }
    }
    ComplexMatrix::new(rows, cols, data)
}

/// Channel directory manifest: dimensions plus the physical parameters
/// the matrices were generated under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelManifest {
    pub n: usize,
    pub n0: usize,
    pub m: usize,
    pub t: usize,
    pub k: usize,
    pub nk: Vec<usize>,
    pub sigma2: f64,
    pub sir_linear: f64,
    pub seed: u64,
}

impl ChannelManifest {
    pub fn from_scenario(s: &ScenarioConfig) -> Self {
        Self {
            n: s.receive_antennas,
            n0: s.transmit_antennas,
            m: s.samples_per_slot,
            t: s.slots,
            k: s.interferers,
            nk: s.interferer_antennas.clone(),
            sigma2: s.noise_variance,
            sir_linear: s.sir,
            seed: s.seed,
        }
    }

    pub fn to_scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            receive_antennas: self.n,
            transmit_antennas: self.n0,
            samples_per_slot: self.m,
            slots: self.t,
            interferers: self.k,
            interferer_antennas: self.nk.clone(),
            noise_variance: self.sigma2,
            sir: self.sir_linear,
            seed: self.seed,
        }
    }
}

/// Writes `manifest.json`, `H_1.cmat .. H_T.cmat` and `G_1.cmat ..` into a
/// directory (created if missing).
pub fn export_channels(dir: &Path, ch: &ChannelSet) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = ChannelManifest::from_scenario(&ch.scenario);
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    for (t, slot) in ch.slots.iter().enumerate() {
        write_cmat(&dir.join(format!("H_{}.cmat", t + 1)), &slot.h)?;
        write_cmat(&dir.join(format!("G_{}.cmat", t + 1)), &slot.g)?;
    }
    Ok(())
}

/// Channel matrices read back from a directory. `G` files are optional:
/// estimation from observed data needs only `H`.
#[derive(Debug)]
pub struct ImportedChannels {
    pub manifest: ChannelManifest,
    pub h: Vec<ComplexMatrix>,
    pub g: Option<Vec<ComplexMatrix>>,
}

impl ImportedChannels {
    /// Rebuilds the full channel set; requires the `G` files.
    pub fn into_channel_set(self) -> Result<ChannelSet> {
        let g = self.g.ok_or_else(|| {
            Error::InvalidInput("channel directory has no G matrices".into())
        })?;
        let scenario = self.manifest.to_scenario();
        let n = scenario.receive_antennas;
        let nb = scenario.interference_dim() - n;
        let parts = self
            .h
            .into_iter()
            .zip(g)
            .map(|(h, g)| {
                // B is the interference block of G = [B | sigma I].
                let b = ComplexMatrix::from_fn(n, nb, |i, j| g.get(i, j));
                (h, b)
            })
            .collect();
        ChannelSet::from_parts(scenario, parts)
    }
}

pub fn import_channels(dir: &Path) -> Result<ImportedChannels> {
    let manifest: ChannelManifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)
            .map_err(|e| Error::Parse(format!("{}: {e}", dir.join("manifest.json").display())))?;
    let mut h = Vec::with_capacity(manifest.t);
    for t in 1..=manifest.t {
        h.push(read_cmat(&dir.join(format!("H_{t}.cmat")))?);
    }
    let g = if dir.join("G_1.cmat").exists() {
        let mut g = Vec::with_capacity(manifest.t);
        for t in 1..=manifest.t {
            g.push(read_cmat(&dir.join(format!("G_{t}.cmat")))?);
        }
        Some(g)
    } else {
        None
    };
    Ok(ImportedChannels { manifest, h, g })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservationManifest {
    pub n: usize,
    pub m: usize,
    pub t: usize,
}

pub fn export_observations(dir: &Path, obs: &ObservationBlock) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = ObservationManifest {
        n: obs.receive_antennas,
        m: obs.samples_per_slot,
        t: obs.slot_count(),
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    for (t, y) in obs.y.iter().enumerate() {
        write_cmat(&dir.join(format!("Y_{}.cmat", t + 1)), y)?;
    }
    Ok(())
}

pub fn import_observations(dir: &Path) -> Result<ObservationBlock> {
    let manifest: ObservationManifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)
            .map_err(|e| Error::Parse(format!("{}: {e}", dir.join("manifest.json").display())))?;
    let mut y = Vec::with_capacity(manifest.t);
    for t in 1..=manifest.t {
        y.push(read_cmat(&dir.join(format!("Y_{t}.cmat")))?);
    }
    let obs = ObservationBlock::new(y)?;
    if obs.receive_antennas != manifest.n || obs.samples_per_slot != manifest.m {
        return Err(Error::Parse(format!(
            "{}: manifest says {}x{}, files are {}x{}",
            dir.display(),
            manifest.n,
            manifest.m,
            obs.receive_antennas,
            obs.samples_per_slot
        )));
    }
    Ok(obs)
}

// --- experiment config -----------------------------------------------------

/// JSON form of a scenario; dB inputs carry a `_db` suffix and are the
/// only place dB units appear.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub n: usize,
    pub n0: usize,
    pub m: usize,
    pub t: usize,
    pub k: usize,
    /// Defaults to one antenna per interferer.
    #[serde(default)]
    pub nk: Option<Vec<usize>>,
    pub snr_db: f64,
    pub sir_db: f64,
    /// Defaults to the experiment master seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    #[serde(default)]
    pub sir_db: Option<Vec<f64>>,
    #[serde(default)]
    pub t_values: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramFile {
    pub bin_width: f64,
    pub range: (f64, f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub scenario: ScenarioFile,
    pub trials: usize,
    #[serde(default)]
    pub sweep: Option<SweepFile>,
    #[serde(default)]
    pub histogram: Option<HistogramFile>,
    pub master_seed: u64,
    #[serde(default)]
    pub parallelism: Option<usize>,
    /// Robustness mode: redraw channels each trial (default false).
    #[serde(default)]
    pub fresh_channels: bool,
}

impl ExperimentFile {
    pub fn into_config(self) -> Result<ExperimentConfig> {
        let snr = crate::experiments::from_db(self.scenario.snr_db);
        let scenario = ScenarioConfig {
            receive_antennas: self.scenario.n,
            transmit_antennas: self.scenario.n0,
            samples_per_slot: self.scenario.m,
            slots: self.scenario.t,
            interferers: self.scenario.k,
            interferer_antennas: self
                .scenario
                .nk
                .unwrap_or_else(|| vec![1; self.scenario.k]),
            noise_variance: 1.0 / snr,
            sir: crate::experiments::from_db(self.scenario.sir_db),
            seed: self.scenario.seed.unwrap_or(self.master_seed),
        };
        let sweep = match self.sweep {
            Some(SweepFile {
                sir_db: Some(v),
                t_values: None,
            }) => Sweep::SirDb(v),
            Some(SweepFile {
                sir_db: None,
                t_values: Some(v),
            }) => Sweep::Slots(v),
            Some(_) => {
                return Err(Error::InvalidInput(
                    "sweep must set exactly one of sir_db / t_values".into(),
                ))
            }
            None => Sweep::None,
        };
        let histogram = match self.histogram {
            Some(h) => HistogramSpec {
                bin_width: h.bin_width,
                range: h.range,
            },
            None => HistogramSpec::default(),
        };
        let cfg = ExperimentConfig {
            scenario,
            trials: self.trials,
            sweep,
            histogram,
            master_seed: self.master_seed,
            parallelism: self.parallelism.unwrap_or(0),
            fresh_channels: self.fresh_channels,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_experiment_config(path: &Path) -> Result<ExperimentConfig> {
    let file: ExperimentFile = serde_json::from_str(&fs::read_to_string(path)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    file.into_config()
}

// --- CSV emission ----------------------------------------------------------

pub fn mse_csv(points: &[MseCurvePoint]) -> String {
    let mut out = String::from("sweep,i_true,theta,mse_th_db,mse_g_db,mse_se_db\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_g17(p.sweep_value),
            fmt_g17(p.i_true),
            fmt_g17(p.theta),
            fmt_g17(p.mse_th_db),
            fmt_g17(p.mse_g_emp_db),
            fmt_g17(p.mse_se_emp_db),
        );
    }
    out
}

pub fn write_mse_csv(path: &Path, points: &[MseCurvePoint]) -> Result<()> {
    fs::write(path, mse_csv(points))?;
    Ok(())
}

pub fn histogram_csv(hist: &HistogramResult) -> String {
    let mut out = String::from("bin_lo,bin_hi,density\n");
    for (k, d) in hist.densities.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_g17(hist.bin_edges[k]),
            fmt_g17(hist.bin_edges[k + 1]),
            fmt_g17(*d),
        );
    }
    let _ = writeln!(
        out,
        "# ks={} n={}",
        fmt_g17(hist.ks_statistic),
        hist.sample_count
    );
    out
}

pub fn write_histogram_csv(path: &Path, hist: &HistogramResult) -> Result<()> {
    fs::write(path, histogram_csv(hist))?;
    Ok(())
}

/// Single-row estimate CSV: `i_se,i_g,yhat_1..yhat_T,iters_1..iters_T`.
/// With `bits` set, the information estimates are reported in bits per
/// antenna instead of nats (output-only conversion).
pub fn estimate_csv(report: &EstimateReport, bits: bool) -> String {
    let unit = if bits { 1.0 / std::f64::consts::LN_2 } else { 1.0 };
    let t = report.slots.len();
    let mut header = String::from("i_se,i_g");
    for i in 1..=t {
        let _ = write!(header, ",yhat_{i}");
    }
    for i in 1..=t {
        let _ = write!(header, ",iters_{i}");
    }
    let mut row = format!(
        "{},{}",
        fmt_g17(report.i_se * unit),
        fmt_g17(report.i_g * unit)
    );
    for s in &report.slots {
        let _ = write!(row, ",{}", fmt_g17(s.yhat));
    }
    for s in &report.slots {
        let _ = write!(row, ",{}", s.solver.iterations);
    }
    format!("{header}\n{row}\n")
}

pub fn write_estimate_csv(path: &Path, report: &EstimateReport, bits: bool) -> Result<()> {
    fs::write(path, estimate_csv(report, bits))?;
    Ok(())
}

/// Per-slot deterministic-equivalent table followed by aggregate rows for
/// the SE bias value, `alpha(y)` and `theta`.
pub fn detequiv_csv(
    slots: &[SlotEquivalents],
    se_bias: f64,
    alpha: Option<f64>,
    theta: Option<f64>,
) -> String {
    let mut out = String::from("t,kappa,v_t,y_star,theta_t\n");
    for (t, eq) in slots.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            t + 1,
            fmt_g17(eq.kappa),
            fmt_g17(eq.v),
            fmt_g17(eq.y_star),
            fmt_g17(eq.theta_term),
        );
    }
    let agg = |v: Option<f64>| fmt_g17(v.unwrap_or(f64::NAN));
    let _ = writeln!(out, "V,{},,,", fmt_g17(se_bias));
    let _ = writeln!(out, "alpha,{},,,", agg(alpha));
    let _ = writeln!(out, "theta,{},,,", agg(theta));
    out
}

pub fn write_detequiv_csv(
    path: &Path,
    slots: &[SlotEquivalents],
    se_bias: f64,
    alpha: Option<f64>,
    theta: Option<f64>,
) -> Result<()> {
    fs::write(path, detequiv_csv(slots, se_bias, alpha, theta))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_channels_seeded;
    use crate::rng::{sample_standard_complex_gaussian, RngStream};
    use proptest::prelude::*;

    #[test]
    fn parse_complex_basic_forms() {
        assert_eq!(
            parse_complex("1.5-0.25i").unwrap(),
            Complex64::new(1.5, -0.25)
        );
        assert_eq!(parse_complex("-1-2i").unwrap(), Complex64::new(-1.0, -2.0));
        assert_eq!(
            parse_complex("1.5e0+2.5e-1i").unwrap(),
            Complex64::new(1.5, 0.25)
        );
        assert_eq!(
            parse_complex("-3.25E-2+1E+3i").unwrap(),
            Complex64::new(-0.0325, 1000.0)
        );
    }

    #[test]
    fn parse_complex_rejects_garbage() {
        assert!(parse_complex("1.5").is_err());
        assert!(parse_complex("abci").is_err());
        assert!(parse_complex("nan+1i").is_err());
    }

    #[test]
    fn cmat_round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join("gmi-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let mut rng = RngStream::new(8, 0);
        let m = sample_standard_complex_gaussian(3, 5, &mut rng);
        let path = dir.join("round_trip.cmat");
        write_cmat(&path, &m).unwrap();
        let back = read_cmat(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn channel_directory_round_trip() {
        let cfg = crate::channel::ScenarioConfig {
            receive_antennas: 3,
            transmit_antennas: 2,
            samples_per_slot: 8,
            slots: 2,
            interferers: 2,
            interferer_antennas: vec![1, 2],
            noise_variance: 0.25,
            sir: 2.0,
            seed: 5,
        };
        let ch = generate_channels_seeded(&cfg).unwrap();
        let dir = std::env::temp_dir().join("gmi-io-channels");
        export_channels(&dir, &ch).unwrap();
        let imported = import_channels(&dir).unwrap();
        assert_eq!(imported.manifest.t, 2);
        let rebuilt = imported.into_channel_set().unwrap();
        for (a, b) in ch.slots.iter().zip(&rebuilt.slots) {
            assert_eq!(a.h, b.h);
            assert_eq!(a.g, b.g);
        }
    }

    #[test]
    fn estimate_csv_layout() {
        let cfg = crate::channel::ScenarioConfig {
            receive_antennas: 4,
            transmit_antennas: 4,
            samples_per_slot: 15,
            slots: 2,
            interferers: 8,
            interferer_antennas: vec![1; 8],
            noise_variance: 0.1,
            sir: 1.0,
            seed: 6,
        };
        let ch = generate_channels_seeded(&cfg).unwrap();
        let mut rng = RngStream::new(6, 0);
        let obs = crate::channel::sample_observations(&ch, 15, &mut rng).unwrap();
        let report = crate::estimators::g_estimate(&ch.h_matrices(), &obs).unwrap();
        let text = estimate_csv(&report, false);
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "i_se,i_g,yhat_1,yhat_2,iters_1,iters_2"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 6);
        assert_eq!(row[0].parse::<f64>().unwrap(), report.i_se);
        // bits flag only rescales the information columns
        let bits = estimate_csv(&report, true);
        let brow: Vec<&str> = bits.lines().nth(1).unwrap().split(',').collect();
        let ratio = report.i_se / brow[0].parse::<f64>().unwrap();
        assert!((ratio - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(row[2], brow[2]);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn mse_csv_parses_back_bit_exact() {
        let points = vec![MseCurvePoint {
            sweep_value: 1.0,
            i_true: 2.3456789012345678,
            theta: 0.07,
            mse_th_db: -21.00566,
            mse_g_emp_db: -20.932585,
            mse_se_emp_db: -8.767107,
            degenerate: false,
        }];
        let text = mse_csv(&points);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "sweep,i_true,theta,mse_th_db,mse_g_db,mse_se_db");
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(row[1], points[0].i_true);
        assert_eq!(row[3], points[0].mse_th_db);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn histogram_csv_has_footer() {
        let hist = HistogramResult {
            bin_edges: vec![-1.0, 0.0, 1.0],
            densities: vec![0.25, 0.75],
            ks_statistic: 0.0123,
            sample_count: 42,
        };
        let text = histogram_csv(&hist);
        assert!(text.starts_with("bin_lo,bin_hi,density\n"));
        let footer = text.lines().last().unwrap();
        assert!(footer.starts_with("# ks="));
        assert!(footer.ends_with("n=42"));
    }

    #[test]
    fn experiment_config_defaults_and_db_conversion() {
        let json = r#"{
            "scenario": {"n": 4, "n0": 4, "m": 15, "t": 10, "k": 8,
                         "snr_db": 10.0, "sir_db": 0.0},
            "trials": 100,
            "master_seed": 7
        }"#;
        let file: ExperimentFile = serde_json::from_str(json).unwrap();
        let cfg = file.into_config().unwrap();
        assert_eq!(cfg.scenario.interferer_antennas, vec![1; 8]);
        assert!((cfg.scenario.noise_variance - 0.1).abs() < 1e-15);
        assert!((cfg.scenario.sir - 1.0).abs() < 1e-15);
        assert_eq!(cfg.scenario.seed, 7);
        assert_eq!(cfg.sweep, Sweep::None);
        assert_eq!(cfg.histogram, HistogramSpec::default());
    }

    #[test]
    fn experiment_config_rejects_unknown_fields() {
        let json = r#"{
            "scenario": {"n": 4, "n0": 4, "m": 15, "t": 10, "k": 8,
                         "snr_db": 10.0, "sir_db": 0.0, "bogus": 1},
            "trials": 100,
            "master_seed": 7
        }"#;
        assert!(serde_json::from_str::<ExperimentFile>(json).is_err());
    }

    proptest! {
        #[test]
        fn complex_field_round_trips(re in -1e10f64..1e10, im in -1e10f64..1e10) {
            let z = Complex64::new(re, im);
            prop_assert_eq!(parse_complex(&fmt_complex(z)).unwrap(), z);
        }
    }
}
