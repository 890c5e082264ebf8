//! Sub-Nyquist acquisition: Fourier coefficients of each receiver frame at
//! the κ harmonics of every active band, then per-channel matched filtering,
//! normalization and alignment.

use ndarray::{Array4, Axis};
use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::config::RadarConfig;
use crate::linalg::cis_turns;
use crate::synthesis::{ChannelCoefficients, PulseSpec, TimeDomainRecord};

#[derive(Debug, Error, PartialEq)]
pub enum AcquisitionError {
    #[error("{samples} samples per frame cannot resolve a harmonic span of {span}; raise the oversampling factor")]
    Aliasing { span: usize, samples: usize },
    #[error("pulse spectrum vanishes at harmonic {harmonic}; cannot normalize")]
    Normalization { harmonic: i64 },
    #[error("record has {got:?} receivers/pulses, configuration expects {expected:?}")]
    Shape { got: (usize, usize), expected: (usize, usize) },
}

/// Raw frame coefficients `c[v][q][p][k]`: the Fourier coefficient of
/// receiver `q`, frame `p` at harmonic `κ_k + f_v τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCoefficients {
    pub data: Array4<Complex64>,
    pub kappa: Vec<i64>,
    /// `f_v τ` per channel.
    pub shifts: Vec<i64>,
}

impl RawCoefficients {
    /// Number of coefficients acquired per receiver per frame.
    pub fn per_frame(&self) -> usize {
        self.shifts.len() * self.kappa.len()
    }
}

/// Harmonics occupied by the transmitted bands, as `(lowest, highest)`.
fn occupied_span(config: &RadarConfig) -> (i64, i64) {
    let lo = config.waveform.band_start();
    let hi = lo + config.waveform.n_nyquist as i64 - 1;
    config
        .channels()
        .iter()
        .map(|ch| config.carrier_shift(ch.carrier))
        .fold((i64::MAX, i64::MIN), |(a, b), s| (a.min(lo + s), b.max(hi + s)))
}

/// `c[h] = (1/τ) ∫_0^τ x(t) e^{-j2πht/τ} dt` for every frame, evaluated with
/// the rectangle rule on the dense grid (exact for band-limited periodic
/// frames below the aliasing limit).
pub fn extract_coefficients(
    record: &TimeDomainRecord,
    config: &RadarConfig,
) -> Result<RawCoefficients, AcquisitionError> {
    let (nq, np, d) = record.samples.dim();
    let expected = (config.receivers(), config.waveform.pulses);
    if (nq, np) != expected {
        return Err(AcquisitionError::Shape {
            got: (nq, np),
            expected,
        });
    }
    let (lo, hi) = occupied_span(config);
    let span = (hi - lo + 1) as usize;
    if span > d {
        return Err(AcquisitionError::Aliasing { span, samples: d });
    }
    let shifts: Vec<i64> = config
        .channels()
        .iter()
        .map(|ch| config.carrier_shift(ch.carrier))
        .collect();
    let kappa = config.sampling.kappa.clone();
    let mut data = Array4::zeros((shifts.len(), nq, np, kappa.len()));
    let fft = FftPlanner::<f64>::new().plan_fft_forward(d);
    let mut buf = vec![Complex64::new(0.0, 0.0); d];
    let scale = 1.0 / d as f64;
    for q in 0..nq {
        for p in 0..np {
            buf.iter_mut()
                .zip(record.samples.index_axis(Axis(0), q).index_axis(Axis(0), p))
                .for_each(|(b, x)| *b = *x);
            fft.process(&mut buf);
            for (v, &shift) in shifts.iter().enumerate() {
                for (ki, &k) in kappa.iter().enumerate() {
                    let bin = (k + shift).rem_euclid(d as i64) as usize;
                    data[[v, q, p, ki]] = buf[bin] * scale;
                }
            }
        }
    }
    Ok(RawCoefficients {
        data,
        kappa,
        shifts,
    })
}

/// Applies the conjugate pulse filter, divides by `|H_0|²`, scales by `τ` and
/// removes the launch offset of each channel.
pub fn matched_filter_align(
    raw: &RawCoefficients,
    config: &RadarConfig,
    pulse: &PulseSpec,
) -> Result<ChannelCoefficients, AcquisitionError> {
    let n = config.waveform.n_nyquist;
    let lo = config.waveform.band_start();
    let peak = (lo..lo + n as i64)
        .map(|h| pulse.spectrum(h, n).powi(2))
        .fold(0.0, f64::max);
    let filter: Vec<Complex64> = raw
        .kappa
        .iter()
        .map(|&k| {
            let h = pulse.spectrum(k, n);
            let power = h * h;
            if !(power >= 1e-12 * peak) || power == 0.0 {
                return Err(AcquisitionError::Normalization { harmonic: k });
            }
            Ok(Complex64::new(config.waveform.pri * h / power, 0.0))
        })
        .collect::<Result<_, _>>()?;
    let channels = config.channels();
    let mut out = raw.data.clone();
    for (v, ch) in channels.iter().enumerate() {
        let shift = raw.shifts[v];
        let align: Vec<Complex64> = raw
            .kappa
            .iter()
            .zip(&filter)
            .map(|(&k, f)| f * cis_turns((k + shift) as f64 * ch.offset))
            .collect();
        for mut lane in out.index_axis_mut(Axis(0), v).lanes_mut(Axis(2)) {
            for (z, a) in lane.iter_mut().zip(&align) {
                *z *= a;
            }
        }
    }
    Ok(ChannelCoefficients {
        data: out,
        kappa: raw.kappa.clone(),
    })
}

/// Full acquisition chain from dense samples to aligned coefficients.
pub fn acquire(record: &TimeDomainRecord, config: &RadarConfig) -> Result<ChannelCoefficients, AcquisitionError> {
    let raw = extract_coefficients(record, config)?;
    matched_filter_align(&raw, config, &record.pulse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{assign_carriers, select_fourier_indices, thin_array, CarrierPlan, WaveformParams};
    use crate::scene::{generate_scene, TargetScene};
    use crate::synthesis::{synthesize_coefficients, synthesize_time_domain};
    use ndarray::Array3;

    fn config(gamma: usize) -> RadarConfig {
        let w = WaveformParams::new(8.0 / 5e6, 5e6, 1e10, 4, 4, 3).unwrap();
        let g = thin_array(4, 3, 2, 3, 5).unwrap();
        let c = assign_carriers(4, 2 * gamma, 5e6, 6).unwrap();
        let s = select_fourier_indices(8, 5, 7).unwrap();
        RadarConfig::new(w, g, c, s, gamma, false).unwrap()
    }

    fn rel_err(a: &ChannelCoefficients, b: &ChannelCoefficients) -> f64 {
        let num: f64 = a.data.iter().zip(b.data.iter()).map(|(x, y)| (x - y).norm_sqr()).sum();
        (num / b.energy()).sqrt()
    }

    #[test]
    fn zero_record_gives_zero() {
        let cfg = config(1);
        let rec = synthesize_time_domain(&TargetScene::empty(cfg.grid()), &cfg, 2.0, PulseSpec::default()).unwrap();
        let raw = extract_coefficients(&rec, &cfg).unwrap();
        assert!(raw.data.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_tone_lands_on_its_harmonic() {
        let cfg = config(1);
        let d = 96;
        let shift = cfg.carrier_shift(cfg.channels()[0].carrier);
        let k0 = cfg.sampling.kappa[2] + shift;
        let mut samples = Array3::zeros((3, 4, d));
        for ((_, _, i), z) in samples.indexed_iter_mut() {
            *z = cis_turns(k0 as f64 * i as f64 / d as f64);
        }
        let rec = TimeDomainRecord {
            samples,
            samples_per_frame: d,
            sample_rate: d as f64 / cfg.waveform.pri,
            pulse: PulseSpec::default(),
        };
        let raw = extract_coefficients(&rec, &cfg).unwrap();
        for ((v, _, _, k), z) in raw.data.indexed_iter() {
            if v == 0 && k == 2 {
                assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-9);
            } else {
                assert!(z.norm() < 1e-6);
            }
        }
    }

    #[test]
    fn undersampled_record_is_rejected() {
        let cfg = config(1);
        let rec = synthesize_time_domain(&TargetScene::empty(cfg.grid()), &cfg, 1.0, PulseSpec::default()).unwrap();
        let (lo, hi) = occupied_span(&cfg);
        let result = extract_coefficients(&rec, &cfg);
        if (hi - lo + 1) as usize > rec.samples_per_frame {
            assert!(matches!(result, Err(AcquisitionError::Aliasing { .. })));
        } else {
            assert!(result.is_ok());
        }
        // carriers at the two band edges always need more than T*N samples
        let w = WaveformParams::new(8.0 / 5e6, 5e6, 1e10, 1, 4, 3).unwrap();
        let c = CarrierPlan::from_indices(4, vec![0, 4], 5e6).unwrap();
        let edge = RadarConfig::new(w, thin_array(4, 3, 2, 1, 0).unwrap(), c, crate::config::SamplingPlan::full(8), 1, false).unwrap();
        let rec = synthesize_time_domain(&TargetScene::empty(edge.grid()), &edge, 1.0, PulseSpec::default()).unwrap();
        assert!(matches!(extract_coefficients(&rec, &edge), Err(AcquisitionError::Aliasing { .. })));
    }

    #[test]
    fn flat_filter_is_tau_times_raw() {
        let cfg = config(1);
        let scene = generate_scene(2, cfg.grid(), 3).unwrap();
        let rec = synthesize_time_domain(&scene, &cfg, 2.0, PulseSpec::default()).unwrap();
        let raw = extract_coefficients(&rec, &cfg).unwrap();
        let y = matched_filter_align(&raw, &cfg, &PulseSpec::default()).unwrap();
        // γ = 1: offsets are zero, so alignment is a pure scale
        for (a, b) in y.data.iter().zip(raw.data.iter()) {
            assert!((a - b * cfg.waveform.pri).norm() < 1e-12);
        }
    }

    #[test]
    fn vanishing_spectrum_is_a_normalization_error() {
        let cfg = config(1).with_sampling(crate::config::SamplingPlan::full(8)).unwrap();
        let rec = synthesize_time_domain(&TargetScene::empty(cfg.grid()), &cfg, 2.0, PulseSpec::default()).unwrap();
        let raw = extract_coefficients(&rec, &cfg).unwrap();
        let bad = PulseSpec { amplitude: 1.0, taper: 1.0 };
        assert_eq!(
            matched_filter_align(&raw, &cfg, &bad),
            Err(AcquisitionError::Normalization { harmonic: -4 })
        );
    }

    #[test]
    fn end_to_end_matches_analytic_coefficients() {
        for gamma in [1, 2] {
            let cfg = config(gamma);
            let scene = generate_scene(3, cfg.grid(), 10 + gamma as u64).unwrap();
            let pulse = PulseSpec { amplitude: 2.0, taper: 0.5 };
            let rec = synthesize_time_domain(&scene, &cfg, 4.0, pulse).unwrap();
            let y = acquire(&rec, &cfg).unwrap();
            let expect = synthesize_coefficients(&scene, &cfg).unwrap();
            assert_eq!(y.shape(), expect.shape());
            assert!(rel_err(&y, &expect) < 1e-3, "gamma {gamma}");
        }
    }

    #[test]
    fn sample_count_accounting() {
        let cfg = config(1);
        let rec = synthesize_time_domain(&TargetScene::empty(cfg.grid()), &cfg, 2.0, PulseSpec::default()).unwrap();
        let raw = extract_coefficients(&rec, &cfg).unwrap();
        assert_eq!(raw.per_frame(), cfg.transmitters() * cfg.k());
        assert_eq!(raw.data.len(), 3 * 4 * cfg.transmitters() * cfg.k());
    }
}
