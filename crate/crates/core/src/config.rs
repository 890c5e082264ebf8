//! Radar system definition: pulse train, thinned array geometry, FDMA carrier
//! plan and the Fourier sampling set, plus the structured config file that
//! produces them.
//!
//! Antenna positions are dimensionless (units of the wavelength), carriers and
//! bandwidths are in Hz, times in seconds.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("cannot read config file {path}: {message}")]
    Io { path: String, message: String },
    #[error("cannot parse config: {0}")]
    Parse(String),
}

impl ConfigError {
    pub fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    /// Dotted path of the offending field, when known.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ConfigError>;

/// Pulse train and reference array sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformParams {
    /// Pulse repetition interval τ in seconds.
    pub pri: f64,
    /// Single-transmission bandwidth B_h in Hz.
    pub bandwidth: f64,
    /// Carrier frequency f_c in Hz.
    pub carrier: f64,
    /// Pulses per transmitter, P.
    pub pulses: usize,
    /// Nyquist samples per band and PRI, N = τ·B_h.
    pub n_nyquist: usize,
    /// Reference transmitter count T of the full virtual array.
    pub t_count: usize,
    /// Reference receiver count R of the full virtual array.
    pub r_count: usize,
}

impl WaveformParams {
    pub fn new(
        pri: f64,
        bandwidth: f64,
        carrier: f64,
        pulses: usize,
        t_count: usize,
        r_count: usize,
    ) -> Result<Self> {
        if !(pri.is_finite() && pri > 0.0) {
            return Err(ConfigError::invalid("waveform.pri", "must be positive"));
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(ConfigError::invalid("waveform.bandwidth", "must be positive"));
        }
        if !(carrier.is_finite() && carrier > 0.0) {
            return Err(ConfigError::invalid("waveform.carrier", "must be positive"));
        }
        if pulses == 0 {
            return Err(ConfigError::invalid("waveform.pulses", "must be at least 1"));
        }
        if t_count == 0 {
            return Err(ConfigError::invalid("array.t", "must be at least 1"));
        }
        if r_count == 0 {
            return Err(ConfigError::invalid("array.r", "must be at least 1"));
        }
        let product = pri * bandwidth;
        let n = product.round();
        if n < 1.0 || (product - n).abs() > 1e-9 * product {
            return Err(ConfigError::invalid(
                "waveform.pri",
                format!("pri * bandwidth = {product} must be a positive integer"),
            ));
        }
        Ok(WaveformParams {
            pri,
            bandwidth,
            carrier,
            pulses,
            n_nyquist: n as usize,
            t_count,
            r_count,
        })
    }

    pub fn wavelength(&self) -> f64 {
        crate::SPEED_OF_LIGHT / self.carrier
    }

    /// Range-azimuth-Doppler grid of the full Nyquist system.
    pub fn grid(&self) -> GridDims {
        GridDims {
            range: self.t_count * self.n_nyquist,
            azimuth: self.t_count * self.r_count,
            doppler: self.pulses,
        }
    }

    /// Lowest Fourier index of a band, `-N/2`.
    pub fn band_start(&self) -> i64 {
        -(self.n_nyquist as i64 / 2)
    }
}

/// Size of the range (TN), azimuth (TR) and Doppler (P) grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridDims {
    pub range: usize,
    pub azimuth: usize,
    pub doppler: usize,
}

impl GridDims {
    pub fn new(range: usize, azimuth: usize, doppler: usize) -> Self {
        GridDims {
            range,
            azimuth,
            doppler,
        }
    }

    pub fn cells(&self) -> usize {
        self.range * self.azimuth * self.doppler
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    /// Transmitter positions ξ_m, in wavelengths.
    pub tx_positions: Vec<f64>,
    /// Receiver positions ζ_q, in wavelengths.
    pub rx_positions: Vec<f64>,
    /// Normalized aperture Z = TR/2.
    pub aperture: f64,
}

impl ArrayGeometry {
    pub fn new(tx_positions: Vec<f64>, rx_positions: Vec<f64>, aperture: f64) -> Result<Self> {
        let g = ArrayGeometry {
            tx_positions,
            rx_positions,
            aperture,
        };
        g.check_bounds()?;
        Ok(g)
    }

    fn check_bounds(&self) -> Result<()> {
        if !(self.aperture.is_finite() && self.aperture > 0.0) {
            return Err(ConfigError::invalid("array.aperture", "must be positive"));
        }
        for (field, list) in [
            ("array.tx_positions", &self.tx_positions),
            ("array.rx_positions", &self.rx_positions),
        ] {
            if list.is_empty() {
                return Err(ConfigError::invalid(field, "at least one antenna is required"));
            }
            if let Some(x) = list
                .iter()
                .find(|&&x| !(x.is_finite() && (0.0..=self.aperture).contains(&x)))
            {
                return Err(ConfigError::invalid(
                    field,
                    format!("position {x} outside [0, {}]", self.aperture),
                ));
            }
        }
        Ok(())
    }

    pub fn transmitters(&self) -> usize {
        self.tx_positions.len()
    }

    pub fn receivers(&self) -> usize {
        self.rx_positions.len()
    }
}

/// Full Nyquist virtual array: R receivers spaced by 1/2 and T transmitters
/// spaced by R/2.
pub fn build_virtual_ula(t: usize, r: usize) -> Result<ArrayGeometry> {
    if t == 0 {
        return Err(ConfigError::invalid("array.t", "must be at least 1"));
    }
    if r == 0 {
        return Err(ConfigError::invalid("array.r", "must be at least 1"));
    }
    let rx = (0..r).map(|q| q as f64 / 2.0).collect();
    let tx = (0..t).map(|m| (m * r) as f64 / 2.0).collect();
    ArrayGeometry::new(tx, rx, (t * r) as f64 / 2.0)
}

/// ULA with `m` transmitters and `q` receivers placed inside the aperture of
/// the full `t` x `r` system. Its virtual aperture is `m*q/2`.
pub fn ula_subarray(t: usize, r: usize, m: usize, q: usize) -> Result<ArrayGeometry> {
    check_counts(t, r, m, q)?;
    let small = build_virtual_ula(m, q)?;
    ArrayGeometry::new(small.tx_positions, small.rx_positions, (t * r) as f64 / 2.0)
}

fn check_counts(t: usize, r: usize, m: usize, q: usize) -> Result<()> {
    if t == 0 || r == 0 {
        return Err(ConfigError::invalid("array.t", "reference array must be non-empty"));
    }
    if m == 0 || m > t {
        return Err(ConfigError::invalid(
            "array.m",
            format!("need 1 <= M <= T, got M={m}, T={t}"),
        ));
    }
    if q == 0 || q > r {
        return Err(ConfigError::invalid(
            "array.q",
            format!("need 1 <= Q <= R, got Q={q}, R={r}"),
        ));
    }
    Ok(())
}

/// Draws `m` transmitter and `q` receiver positions uniformly on `[0, TR/2]`.
/// Positions are returned sorted.
pub fn thin_array(t: usize, r: usize, m: usize, q: usize, seed: u64) -> Result<ArrayGeometry> {
    check_counts(t, r, m, q)?;
    let aperture = (t * r) as f64 / 2.0;
    let mut rng = seed::rng(seed);
    let mut draw = |count: usize| {
        let mut v: Vec<f64> = (0..count)
            .map(|_| rng.random_range(0.0..=aperture))
            .collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let tx = draw(m);
    let rx = draw(q);
    ArrayGeometry::new(tx, rx, aperture)
}

/// FDMA carriers on the symmetric B_h grid: `f = (i - T/2) * B_h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarrierPlan {
    pub carriers: Vec<f64>,
    pub grid_indices: Vec<usize>,
}

impl CarrierPlan {
    pub fn from_indices(t: usize, indices: Vec<usize>, bandwidth: f64) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &i in &indices {
            if i > t {
                return Err(ConfigError::invalid(
                    "carriers.slots",
                    format!("slot {i} outside [0, {t}]"),
                ));
            }
            if !seen.insert(i) {
                return Err(ConfigError::invalid(
                    "carriers.slots",
                    format!("slot {i} used twice; bands would overlap"),
                ));
            }
        }
        let carriers = indices
            .iter()
            .map(|&i| (i as f64 - t as f64 / 2.0) * bandwidth)
            .collect();
        Ok(CarrierPlan {
            carriers,
            grid_indices: indices,
        })
    }

    pub fn len(&self) -> usize {
        self.carriers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.carriers.is_empty()
    }
}

/// Assigns `m` distinct carrier slots drawn without replacement from the
/// `T + 1` slots `0..=T`.
pub fn assign_carriers(t: usize, m: usize, bandwidth: f64, seed: u64) -> Result<CarrierPlan> {
    if m == 0 {
        return Err(ConfigError::invalid("array.m", "need at least one carrier"));
    }
    if m > t + 1 {
        return Err(ConfigError::invalid(
            "array.m",
            format!("{m} distinct carriers requested but only {} slots exist", t + 1),
        ));
    }
    let mut rng = seed::rng(seed);
    let indices = index::sample(&mut rng, t + 1, m).into_vec();
    CarrierPlan::from_indices(t, indices, bandwidth)
}

/// The set κ of Fourier indices acquired in every band.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub kappa: Vec<i64>,
}

impl SamplingPlan {
    /// All `N` indices `-N/2 ..= N/2 - 1` (Nyquist regime).
    pub fn full(n: usize) -> Self {
        let lo = -(n as i64 / 2);
        SamplingPlan {
            kappa: (lo..lo + n as i64).collect(),
        }
    }

    pub fn from_indices(n: usize, mut kappa: Vec<i64>) -> Result<Self> {
        let lo = -(n as i64 / 2);
        let hi = lo + n as i64 - 1;
        kappa.sort_unstable();
        if kappa.is_empty() {
            return Err(ConfigError::invalid("sampling.k", "need at least one index"));
        }
        if kappa.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::invalid("sampling.indices", "indices must be distinct"));
        }
        if let Some(k) = kappa.iter().find(|&&k| k < lo || k > hi) {
            return Err(ConfigError::invalid(
                "sampling.indices",
                format!("index {k} outside [{lo}, {hi}]"),
            ));
        }
        Ok(SamplingPlan { kappa })
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    pub fn is_full(&self, n: usize) -> bool {
        *self == SamplingPlan::full(n)
    }
}

/// Draws `k` distinct Fourier indices uniformly from `[-N/2, N/2 - 1]`.
pub fn select_fourier_indices(n: usize, k: usize, seed: u64) -> Result<SamplingPlan> {
    if k == 0 {
        return Err(ConfigError::invalid("sampling.k", "must be at least 1"));
    }
    if k > n {
        return Err(ConfigError::invalid(
            "sampling.k",
            format!("K={k} exceeds N={n}"),
        ));
    }
    let lo = -(n as i64 / 2);
    let mut rng = seed::rng(seed);
    let kappa = index::sample(&mut rng, n, k)
        .into_iter()
        .map(|i| lo + i as i64)
        .collect();
    SamplingPlan::from_indices(n, kappa)
}

/// One transmit channel as seen by the receivers. Without multi-carrier
/// transmission there is one channel per transmitter; with compression ratio
/// γ each transmitter contributes γ channels on distinct carriers, the i-th
/// launched `i/γ` PRIs into the frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxChannel {
    pub transmitter: usize,
    pub position: f64,
    pub carrier: f64,
    /// Launch offset within the PRI, as a fraction of τ.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    pub waveform: WaveformParams,
    pub geometry: ArrayGeometry,
    /// One carrier per transmit channel: `M * gamma` entries, transmitter `m`
    /// owning entries `m*gamma .. (m+1)*gamma`.
    pub carriers: CarrierPlan,
    pub sampling: SamplingPlan,
    pub multi_carrier_gamma: usize,
    /// Use β = ζ + ξ instead of β = (ζ + ξ)(1 + f/f_c).
    pub approximate_beta: bool,
}

impl RadarConfig {
    pub fn new(
        waveform: WaveformParams,
        geometry: ArrayGeometry,
        carriers: CarrierPlan,
        sampling: SamplingPlan,
        multi_carrier_gamma: usize,
        approximate_beta: bool,
    ) -> Result<Self> {
        let cfg = RadarConfig {
            waveform,
            geometry,
            carriers,
            sampling,
            multi_carrier_gamma,
            approximate_beta,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.waveform;
        let (t, r) = (w.t_count, w.r_count);
        let g = &self.geometry;
        g.check_bounds()?;
        let expected_aperture = (t * r) as f64 / 2.0;
        if (g.aperture - expected_aperture).abs() > 1e-12 * expected_aperture {
            return Err(ConfigError::invalid(
                "array.aperture",
                format!("expected TR/2 = {expected_aperture}, got {}", g.aperture),
            ));
        }
        check_counts(t, r, g.transmitters(), g.receivers())?;
        if self.multi_carrier_gamma == 0 {
            return Err(ConfigError::invalid("multi_carrier.gamma", "must be at least 1"));
        }
        let channels = g.transmitters() * self.multi_carrier_gamma;
        if self.carriers.len() != channels {
            return Err(ConfigError::invalid(
                "carriers.slots",
                format!(
                    "expected M*gamma = {channels} carriers, got {}",
                    self.carriers.len()
                ),
            ));
        }
        let plan = CarrierPlan::from_indices(t, self.carriers.grid_indices.clone(), w.bandwidth)?;
        for (a, b) in plan.carriers.iter().zip(&self.carriers.carriers) {
            if (a - b).abs() > 1e-9 * w.bandwidth {
                return Err(ConfigError::invalid(
                    "carriers.slots",
                    "carrier frequencies do not match their grid slots",
                ));
            }
        }
        for &f in &self.carriers.carriers {
            let shift = f * w.pri;
            if (shift - shift.round()).abs() > 1e-6 {
                return Err(ConfigError::invalid(
                    "carriers.slots",
                    format!("carrier {f} Hz is not an integer number of PRI harmonics"),
                ));
            }
        }
        SamplingPlan::from_indices(w.n_nyquist, self.sampling.kappa.clone())?;
        Ok(())
    }

    pub fn grid(&self) -> GridDims {
        self.waveform.grid()
    }

    pub fn transmitters(&self) -> usize {
        self.geometry.transmitters()
    }

    pub fn receivers(&self) -> usize {
        self.geometry.receivers()
    }

    /// Number of transmit channels V = M·γ.
    pub fn channel_count(&self) -> usize {
        self.transmitters() * self.multi_carrier_gamma
    }

    pub fn k(&self) -> usize {
        self.sampling.len()
    }

    pub fn channels(&self) -> Vec<TxChannel> {
        let gamma = self.multi_carrier_gamma;
        (0..self.channel_count())
            .map(|v| TxChannel {
                transmitter: v / gamma,
                position: self.geometry.tx_positions[v / gamma],
                carrier: self.carriers.carriers[v],
                offset: (v % gamma) as f64 / gamma as f64,
            })
            .collect()
    }

    /// Harmonic shift `f·τ` of a carrier, exact integer by validation.
    pub fn carrier_shift(&self, carrier: f64) -> i64 {
        (carrier * self.waveform.pri).round() as i64
    }

    pub fn beta(&self, channel: &TxChannel, q: usize) -> f64 {
        let sum = self.geometry.rx_positions[q] + channel.position;
        if self.approximate_beta {
            sum
        } else {
            sum * (1.0 + channel.carrier / self.waveform.carrier)
        }
    }

    /// β for every (channel, receiver), channel-major.
    pub fn beta_table(&self) -> Vec<Vec<f64>> {
        self.channels()
            .iter()
            .map(|c| (0..self.receivers()).map(|q| self.beta(c, q)).collect())
            .collect()
    }

    pub fn with_sampling(&self, sampling: SamplingPlan) -> Result<Self> {
        let mut c = self.clone();
        c.sampling = sampling;
        c.validate()?;
        Ok(c)
    }
}

/// Antenna layout used when a config file is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// Positions uniform at random over the aperture.
    #[default]
    Random,
    /// Uniform linear arrays forming an `m*q` element virtual ULA.
    Ula,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformSection {
    /// PRI τ in seconds.
    pub pri: f64,
    /// B_h in Hz.
    pub bandwidth: f64,
    /// f_c in Hz.
    pub carrier: f64,
    /// P.
    pub pulses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub t: usize,
    pub r: usize,
    pub m: usize,
    pub q: usize,
    #[serde(default)]
    pub layout: Layout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub k: usize,
    /// Explicit κ; drawn at random when absent (all indices when K = N).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CarrierSection {
    /// Explicit carrier slots `i` (one per channel); drawn when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiCarrierSection {
    pub gamma: usize,
}

impl Default for MultiCarrierSection {
    fn default() -> Self {
        MultiCarrierSection { gamma: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub approximate_beta: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    pub geometry: u64,
    pub carriers: u64,
    pub sampling: u64,
}

impl Default for SeedSection {
    fn default() -> Self {
        SeedSection {
            geometry: 1,
            carriers: 2,
            sampling: 3,
        }
    }
}

/// On-disk (TOML) form of a radar configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub waveform: WaveformSection,
    pub array: ArraySection,
    pub sampling: SamplingSection,
    #[serde(default)]
    pub carriers: CarrierSection,
    #[serde(default)]
    pub multi_carrier: MultiCarrierSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub seeds: SeedSection,
}

impl ConfigFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_str_with_overrides(text, &[])
    }

    /// Parses TOML and applies `path=value` overrides, e.g. `array.m=4`.
    pub fn from_toml_str_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str_with_overrides(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config file serializes")
    }

    /// Builds and validates the radar configuration, drawing every random
    /// quantity from the recorded seeds.
    pub fn resolve(&self) -> Result<RadarConfig> {
        let w = &self.waveform;
        let a = &self.array;
        let waveform = WaveformParams::new(w.pri, w.bandwidth, w.carrier, w.pulses, a.t, a.r)?;
        let geometry = match a.layout {
            Layout::Random => thin_array(a.t, a.r, a.m, a.q, self.seeds.geometry)?,
            Layout::Ula => ula_subarray(a.t, a.r, a.m, a.q)?,
        };
        let gamma = self.multi_carrier.gamma;
        if gamma == 0 {
            return Err(ConfigError::invalid("multi_carrier.gamma", "must be at least 1"));
        }
        let channels = a.m * gamma;
        let carriers = match &self.carriers.slots {
            Some(slots) => {
                if slots.len() != channels {
                    return Err(ConfigError::invalid(
                        "carriers.slots",
                        format!("expected M*gamma = {channels} slots, got {}", slots.len()),
                    ));
                }
                CarrierPlan::from_indices(a.t, slots.clone(), w.bandwidth)?
            }
            None => assign_carriers(a.t, channels, w.bandwidth, self.seeds.carriers)
                .map_err(|e| match e {
                    ConfigError::Invalid { reason, .. } => {
                        ConfigError::invalid("multi_carrier.gamma", reason)
                    }
                    other => other,
                })?,
        };
        let n = waveform.n_nyquist;
        let sampling = match &self.sampling.indices {
            Some(idx) => {
                if idx.len() != self.sampling.k {
                    return Err(ConfigError::invalid(
                        "sampling.indices",
                        format!("expected K = {} indices, got {}", self.sampling.k, idx.len()),
                    ));
                }
                SamplingPlan::from_indices(n, idx.clone())?
            }
            None if self.sampling.k == n => SamplingPlan::full(n),
            None => select_fourier_indices(n, self.sampling.k, self.seeds.sampling)?,
        };
        RadarConfig::new(
            waveform,
            geometry,
            carriers,
            sampling,
            gamma,
            self.model.approximate_beta,
        )
    }
}

/// Sets a dotted key in a TOML table. The value is parsed as a TOML value
/// and falls back to a plain string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| {
        ConfigError::Parse(format!("override `{assignment}` is not of the form key=value"))
    })?;
    let path = path.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigError::Parse(format!("bad override key `{path}`")));
    }
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::Parse(format!("override `{path}`: `{k}` is not a section")))?;
    }
    cur.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

/// Desk-scale defaults: T = R = 8, N = 32, P = 8, half the antennas, all
/// Fourier coefficients.
pub fn desk_config_file() -> ConfigFile {
    ConfigFile {
        waveform: WaveformSection {
            pri: 32.0 / 5e6,
            bandwidth: 5e6,
            carrier: 10e9,
            pulses: 8,
        },
        array: ArraySection {
            t: 8,
            r: 8,
            m: 4,
            q: 4,
            layout: Layout::Random,
        },
        sampling: SamplingSection {
            k: 32,
            indices: None,
        },
        carriers: CarrierSection::default(),
        multi_carrier: MultiCarrierSection::default(),
        model: ModelSection::default(),
        seeds: SeedSection::default(),
    }
}

/// The large system: T = R = 20, τ = 100 µs, B_h = 5 MHz (N = 500),
/// f_c = 10 GHz, P = 10, M = Q = 10, K = 250.
pub fn paper_config_file() -> ConfigFile {
    ConfigFile {
        waveform: WaveformSection {
            pri: 100e-6,
            bandwidth: 5e6,
            carrier: 10e9,
            pulses: 10,
        },
        array: ArraySection {
            t: 20,
            r: 20,
            m: 10,
            q: 10,
            layout: Layout::Random,
        },
        sampling: SamplingSection {
            k: 250,
            indices: None,
        },
        carriers: CarrierSection::default(),
        multi_carrier: MultiCarrierSection::default(),
        model: ModelSection::default(),
        seeds: SeedSection::default(),
    }
}
