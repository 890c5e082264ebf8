//! Observable data: aligned per-channel Fourier coefficients evaluated from
//! the target scene, dense time-domain receiver records used to validate the
//! acquisition path, and complex white noise.

use std::io::{self, Read, Write};

use ndarray::{Array3, Array4};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RadarConfig;
use crate::dictionaries::ChannelModel;
use crate::linalg::{cis_turns, ZERO};
use crate::scene::TargetScene;
use crate::seed;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("scene grid {scene:?} does not match the configuration grid {config:?}")]
    GridMismatch {
        scene: crate::config::GridDims,
        config: crate::config::GridDims,
    },
    #[error("coefficient tensor has shape {got:?}, configuration expects {expected:?}")]
    ShapeMismatch {
        got: (usize, usize, usize, usize),
        expected: (usize, usize, usize, usize),
    },
    #[error("oversampling factor must be finite and at least 1, got {0}")]
    Oversample(f64),
    #[error("pulse taper must lie in [0, 1), got {0}")]
    Taper(f64),
    #[error("coefficient dump: {0}")]
    Dump(String),
}

impl From<io::Error> for ModelError {
    fn from(e: io::Error) -> Self {
        ModelError::Dump(e.to_string())
    }
}

/// Aligned Fourier coefficients `y[v][q][p][k]` for transmit channel `v`,
/// receiver `q`, pulse `p` and the `k`-th element of κ.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCoefficients {
    pub data: Array4<Complex64>,
    pub kappa: Vec<i64>,
}

impl ChannelCoefficients {
    pub fn zeros(config: &RadarConfig) -> Self {
        ChannelCoefficients {
            data: Array4::zeros(expected_shape(config)),
            kappa: config.sampling.kappa.clone(),
        }
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        self.data.dim()
    }

    pub fn check_shape(&self, config: &RadarConfig) -> Result<(), ModelError> {
        let expected = expected_shape(config);
        if self.shape() != expected || self.kappa != config.sampling.kappa {
            return Err(ModelError::ShapeMismatch {
                got: self.shape(),
                expected,
            });
        }
        Ok(())
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Little-endian dump: magic, version, `V Q P K` as u32, κ as i32, then
    /// interleaved f32 (re, im) pairs in `v, q, p, k` order.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<(), ModelError> {
        let (v, q, p, k) = self.shape();
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&1u32.to_le_bytes())?;
        for d in [v, q, p, k] {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &kk in &self.kappa {
            w.write_all(&(kk as i32).to_le_bytes())?;
        }
        for z in self.data.iter() {
            w.write_all(&(z.re as f32).to_le_bytes())?;
            w.write_all(&(z.im as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self, ModelError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(ModelError::Dump("bad magic".into()));
        }
        let mut word = [0u8; 4];
        let mut next_u32 = |r: &mut R| -> Result<u32, ModelError> {
            r.read_exact(&mut word)?;
            Ok(u32::from_le_bytes(word))
        };
        let version = next_u32(&mut r)?;
        if version != 1 {
            return Err(ModelError::Dump(format!("unsupported version {version}")));
        }
        let dims: Vec<usize> = (0..4)
            .map(|_| next_u32(&mut r).map(|d| d as usize))
            .collect::<Result<_, _>>()?;
        let kappa = (0..dims[3])
            .map(|_| next_u32(&mut r).map(|x| x as i32 as i64))
            .collect::<Result<Vec<_>, _>>()?;
        let count = dims.iter().product::<usize>();
        let mut values = Vec::with_capacity(count);
        let mut pair = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut pair)?;
            let re = f32::from_le_bytes(pair[..4].try_into().unwrap());
            let im = f32::from_le_bytes(pair[4..].try_into().unwrap());
            values.push(Complex64::new(re as f64, im as f64));
        }
        let data = Array4::from_shape_vec((dims[0], dims[1], dims[2], dims[3]), values)
            .map_err(|e| ModelError::Dump(e.to_string()))?;
        Ok(ChannelCoefficients { data, kappa })
    }
}

const DUMP_MAGIC: &[u8; 8] = b"SUMRCOEF";

pub fn expected_shape(config: &RadarConfig) -> (usize, usize, usize, usize) {
    (
        config.channel_count(),
        config.receivers(),
        config.waveform.pulses,
        config.k(),
    )
}

/// Per-target phase factors, kept separate so tests can check each one.
pub(crate) struct PhaseTerms {
    /// `exp(j2π β_vq ϑ)`, indexed `[v][q]`.
    pub azimuth: Vec<Vec<Complex64>>,
    /// `exp(-j2π (k/τ + f_v) τ_l)`, indexed `[v][k]`.
    pub delay: Vec<Vec<Complex64>>,
    /// `exp(j2π f_D (p + o_v) τ)`, indexed `[v][p]`.
    pub doppler: Vec<Vec<Complex64>>,
}

pub(crate) fn phase_terms(model: &ChannelModel, s: usize, r: usize, u: usize) -> PhaseTerms {
    let grid = model.grid;
    let (tn, tr, pp) = (grid.range as i64, grid.azimuth, grid.doppler);
    let theta = -1.0 + 2.0 * r as f64 / tr as f64;
    let azimuth = model
        .betas
        .iter()
        .map(|row| row.iter().map(|b| cis_turns(b * theta)).collect())
        .collect();
    let delay = (0..model.channels())
        .map(|v| {
            model
                .harmonics(v)
                .map(|h| {
                    // exact reduction of (k + fτ) s / TN
                    let num = (h * s as i64).rem_euclid(tn);
                    cis_turns(-(num as f64) / tn as f64)
                })
                .collect()
        })
        .collect();
    let doppler_turns = -0.5 + u as f64 / pp as f64;
    let doppler = model
        .offsets
        .iter()
        .map(|o| (0..pp).map(|p| cis_turns(doppler_turns * (p as f64 + o))).collect())
        .collect();
    PhaseTerms {
        azimuth,
        delay,
        doppler,
    }
}

/// Evaluates the noiseless aligned coefficients
/// `y[v][q][p][k] = Σ_l α_l e^{j2πβϑ_l} e^{-j2π(κ_k/τ + f_v)τ_l} e^{j2π f_D,l (p + o_v) τ}`.
pub fn synthesize_coefficients(
    scene: &TargetScene,
    config: &RadarConfig,
) -> Result<ChannelCoefficients, ModelError> {
    synthesize_model(scene, &ChannelModel::from_config(config))
}

/// Same evaluation for an arbitrary channel model.
pub fn synthesize_model(scene: &TargetScene, model: &ChannelModel) -> Result<ChannelCoefficients, ModelError> {
    if scene.dims != model.grid {
        return Err(ModelError::GridMismatch {
            scene: scene.dims,
            config: model.grid,
        });
    }
    let (nv, nq, np, nk) = (model.channels(), model.receivers(), model.grid.doppler, model.k());
    let mut out = ChannelCoefficients {
        data: Array4::zeros((nv, nq, np, nk)),
        kappa: model.kappa.clone(),
    };
    for t in &scene.targets {
        let ph = phase_terms(model, t.s, t.r, t.u);
        for v in 0..nv {
            for q in 0..nq {
                let aq = t.amplitude * ph.azimuth[v][q];
                for p in 0..np {
                    let apq = aq * ph.doppler[v][p];
                    for k in 0..nk {
                        out.data[[v, q, p, k]] += apq * ph.delay[v][k];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Which SNR definition a noise level refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrDefinition {
    /// Pulse power over the noise power in one band `B_h`.
    SingleBand,
    /// Total power of the `M` active transmitters over the noise in the full
    /// band `T B_h`, the convention used when comparing with classic
    /// processing.
    CdmaEquivalent,
}

impl SnrDefinition {
    pub fn name(&self) -> &'static str {
        match self {
            SnrDefinition::SingleBand => "single_band",
            SnrDefinition::CdmaEquivalent => "cdma_equivalent",
        }
    }
}

/// Per-coefficient noise variance for a unit-amplitude target at `snr_db`.
///
/// Single band: `σ² = 1 / snr`. CDMA-equivalent: that SNR equals
/// `(M/T)` times the single-band one, so `σ² = (M/T) / snr`.
pub fn noise_variance(snr_db: f64, definition: SnrDefinition, config: &RadarConfig) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    let snr = 10f64.powf(snr_db / 10.0);
    match definition {
        SnrDefinition::SingleBand => 1.0 / snr,
        SnrDefinition::CdmaEquivalent => {
            let ratio = config.transmitters() as f64 / config.waveform.t_count as f64;
            ratio / snr
        }
    }
}

/// Adds i.i.d. circular complex Gaussian noise of the given variance.
pub fn add_noise_variance(coeffs: &ChannelCoefficients, variance: f64, seed: u64) -> ChannelCoefficients {
    let mut out = coeffs.clone();
    if variance == 0.0 {
        return out;
    }
    let sd = (variance / 2.0).sqrt();
    let mut rng = seed::rng(seed);
    for z in out.data.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *z += Complex64::new(sd * re, sd * im);
    }
    out
}

/// Adds white noise at `snr_db` (use `f64::INFINITY` for none).
pub fn add_noise(
    coeffs: &ChannelCoefficients,
    snr_db: f64,
    definition: SnrDefinition,
    config: &RadarConfig,
    seed: u64,
) -> ChannelCoefficients {
    add_noise_variance(coeffs, noise_variance(snr_db, definition, config), seed)
}

/// Baseband pulse with a real spectrum on the `N` harmonics of its band:
/// `H_0(n) = amplitude * (1 - taper * (2n/N)^2)` for `n` in `[-N/2, N/2)`,
/// zero elsewhere. `taper = 0` is the ideal rectangular spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub amplitude: f64,
    pub taper: f64,
}

impl Default for PulseSpec {
    fn default() -> Self {
        PulseSpec {
            amplitude: 1.0,
            taper: 0.0,
        }
    }
}

impl PulseSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(0.0..1.0).contains(&self.taper) {
            return Err(ModelError::Taper(self.taper));
        }
        Ok(())
    }

    /// Spectrum at band-relative harmonic `n`.
    pub fn spectrum(&self, n: i64, n_nyquist: usize) -> f64 {
        let lo = -(n_nyquist as i64 / 2);
        if n < lo || n >= lo + n_nyquist as i64 {
            return 0.0;
        }
        let x = 2.0 * n as f64 / n_nyquist as f64;
        self.amplitude * (1.0 - self.taper * x * x)
    }
}

/// Dense baseband samples of every receiver, `samples[q][p][d]`, with `D`
/// samples per PRI at `t = pτ + dτ/D`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDomainRecord {
    pub samples: Array3<Complex64>,
    pub samples_per_frame: usize,
    pub sample_rate: f64,
    pub pulse: PulseSpec,
}

impl TimeDomainRecord {
    pub fn total_samples(&self) -> usize {
        self.samples.len() / self.samples.dim().0
    }
}

/// Dense receiver signals for the scene.
///
/// Each PRI frame holds the echoes of the pulses launched in it; the pulse is
/// band-limited, so within a frame it is represented by its τ-periodic
/// extension (echo energy that would spill past the frame end wraps to its
/// start). The sample rate is `oversample * T * B_h`.
pub fn synthesize_time_domain(
    scene: &TargetScene,
    config: &RadarConfig,
    oversample: f64,
    pulse: PulseSpec,
) -> Result<TimeDomainRecord, ModelError> {
    if !(oversample.is_finite() && oversample >= 1.0) {
        return Err(ModelError::Oversample(oversample));
    }
    pulse.validate()?;
    if scene.dims != config.grid() {
        return Err(ModelError::GridMismatch {
            scene: scene.dims,
            config: config.grid(),
        });
    }
    let w = &config.waveform;
    let n = w.n_nyquist;
    let tn = config.grid().range as f64;
    let d_count = (oversample * (w.t_count * n) as f64).ceil() as usize;
    let nq = config.receivers();
    let np = w.pulses;
    let channels = config.channels();
    let betas = config.beta_table();
    let lo = w.band_start();
    let spectrum: Vec<(f64, f64)> = (lo..lo + n as i64)
        .map(|h| (h as f64, pulse.spectrum(h, n) / w.pri))
        .collect();
    let mut samples = Array3::<Complex64>::zeros((nq, np, d_count));
    for t in &scene.targets {
        let theta = -1.0 + 2.0 * t.r as f64 / config.grid().azimuth as f64;
        let doppler_turns = -0.5 + t.u as f64 / np as f64;
        let delay_frac = t.s as f64 / tn;
        for (v, ch) in channels.iter().enumerate() {
            let shift = config.carrier_shift(ch.carrier) as f64;
            // pulse envelope over one frame, shared by all receivers/pulses
            let envelope: Vec<Complex64> = (0..d_count)
                .map(|d| {
                    let phi = d as f64 / d_count as f64 - delay_frac - ch.offset;
                    spectrum
                        .iter()
                        .map(|&(h, amp)| amp * cis_turns((h + shift) * phi))
                        .sum()
                })
                .collect();
            for q in 0..nq {
                let az = t.amplitude * cis_turns(betas[v][q] * theta);
                for p in 0..np {
                    let g = az * cis_turns(doppler_turns * (p as f64 + ch.offset));
                    for (d, e) in envelope.iter().enumerate() {
                        samples[[q, p, d]] += g * e;
                    }
                }
            }
        }
    }
    Ok(TimeDomainRecord {
        samples,
        samples_per_frame: d_count,
        sample_rate: d_count as f64 / w.pri,
        pulse,
    })
}

pub fn zero_like(coeffs: &ChannelCoefficients) -> ChannelCoefficients {
    ChannelCoefficients {
        data: Array4::from_elem(coeffs.data.dim(), ZERO),
        kappa: coeffs.kappa.clone(),
    }
}
