//! Hit-or-miss scoring and Monte-Carlo SNR sweeps: time compression,
//! resolution under spatial compression and multi-carrier restoration.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{
    assign_carriers, build_virtual_ula, select_fourier_indices, thin_array, ula_subarray, CarrierPlan,
    ConfigError, ConfigFile, GridDims, RadarConfig, SamplingPlan, WaveformParams,
};
use crate::dictionaries::{build_dictionaries, build_from_model, ChannelModel, DictionarySet};
use crate::recovery::{classic_process, omp_focus_3d, OmpOptions, SparseTargetMap};
use crate::scene::{generate_close_pair, generate_scene, Axis, SceneError, TargetScene};
use crate::seed::{self, stream};
use crate::synthesis::{add_noise_variance, noise_variance, synthesize_model, SnrDefinition};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("experiment: {0}")]
    Invalid(String),
    #[error("could not build thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HitScore {
    pub hits: usize,
    pub targets: usize,
}

impl HitScore {
    pub fn rate(&self) -> f64 {
        if self.targets == 0 {
            1.0
        } else {
            self.hits as f64 / self.targets as f64
        }
    }
}

/// A found point hits a true target when it lies within one bin of it on
/// every axis. Each point matches at most one target and vice versa, and the
/// score is the size of a maximum matching, so it does not depend on the
/// order of either list.
pub fn hit_or_miss(truth: &TargetScene, found: &SparseTargetMap) -> HitScore {
    let near = |a: usize, b: usize| a.abs_diff(b) <= 1;
    let edges: Vec<Vec<usize>> = truth
        .targets
        .iter()
        .map(|t| {
            let e = found.entries.iter().enumerate();
            e.filter(|(_, e)| near(t.s, e.s) && near(t.r, e.r) && near(t.u, e.u))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    // Kuhn's augmenting paths; owner[i] is the target holding found point i.
    fn augment(j: usize, edges: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &i in &edges[j] {
            if !seen[i] {
                seen[i] = true;
                if owner[i].is_none_or(|k| augment(k, edges, seen, owner)) {
                    owner[i] = Some(j);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; found.entries.len()];
    let hits = (0..edges.len())
        .filter(|&j| augment(j, &edges, &mut vec![false; owner.len()], &mut owner))
        .count();
    HitScore {
        hits,
        targets: truth.targets.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Focused 3D OMP on the sub-Nyquist coefficients.
    Summer,
    /// Five-stage classic processing on full-band FDMA coefficients.
    Classic,
    /// Classic processing on ideally separated full-band CDMA waveforms.
    ClassicCdma,
    /// Focused 3D OMP with γ > 1 carriers per transmitter.
    MultiCarrier,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Summer => "summer",
            Algorithm::Classic => "classic",
            Algorithm::ClassicCdma => "classic_cdma",
            Algorithm::MultiCarrier => "multi_carrier",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Algorithm::Summer, Algorithm::Classic, Algorithm::ClassicCdma, Algorithm::MultiCarrier]
            .into_iter()
            .find(|a| a.name() == s)
    }
}

/// How a curve turns per-trial scores into a rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Fraction of true targets hit, pooled over trials.
    TargetFraction,
    /// Fraction of trials in which every target is hit.
    AllTargets,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::TargetFraction => "target_fraction",
            Metric::AllTargets => "all_targets",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScenePolicy {
    /// `targets` distinct grid points with unit random-phase amplitudes.
    Random { targets: usize },
    /// Two targets adjacent along one axis.
    ClosePair { axis: Axis },
}

impl ScenePolicy {
    pub fn targets(&self) -> usize {
        match self {
            ScenePolicy::Random { targets } => *targets,
            ScenePolicy::ClosePair { .. } => 2,
        }
    }

    pub fn draw(&self, dims: GridDims, seed: u64) -> Result<TargetScene, SceneError> {
        match *self {
            ScenePolicy::Random { targets } => generate_scene(targets, dims, seed),
            ScenePolicy::ClosePair { axis } => generate_close_pair(axis, dims, seed),
        }
    }
}

/// Where each trial's configuration comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ConfigSource {
    Fixed(Box<RadarConfig>),
    /// Geometry, carriers and κ are redrawn for every trial from seeds
    /// derived from the experiment seed and trial index.
    Redraw(Box<ConfigFile>),
}

impl ConfigSource {
    pub fn for_trial(&self, seed: u64, trial: usize) -> Result<RadarConfig, ConfigError> {
        match self {
            ConfigSource::Fixed(c) => Ok((**c).clone()),
            ConfigSource::Redraw(file) => {
                let mut f = (**file).clone();
                let sub = |s| seed::derive(seed, &[stream::GEOMETRY, trial as u64, s]);
                f.seeds.geometry = sub(stream::GEOMETRY);
                f.seeds.carriers = sub(stream::CARRIERS);
                f.seeds.sampling = sub(stream::SAMPLING);
                f.resolve()
            }
        }
    }

    /// SHA-256 of the JSON form, as hex.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("configuration serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub source: ConfigSource,
    pub algorithm: Algorithm,
    pub scene: ScenePolicy,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub snr_definition: SnrDefinition,
    pub metric: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRateCurve {
    pub snr_points_db: Vec<f64>,
    pub hit_rate: Vec<f64>,
    /// Integer score behind each rate (hits or fully-hit trials).
    pub counts: Vec<u64>,
    pub trials: usize,
    pub targets: usize,
    pub algorithm: String,
    pub metric: Metric,
    pub snr_definition: SnrDefinition,
    pub config_hash: String,
    pub seed: u64,
    /// `(snr index, trial)` of trials whose recovery failed (scored as
    /// zero hits).
    pub failed_trials: Vec<(usize, usize)>,
}

impl HitRateCurve {
    /// SNR at which the curve first reaches `rate`, linearly interpolated.
    pub fn snr_at_rate(&self, rate: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .snr_points_db
            .iter()
            .copied()
            .zip(self.hit_rate.iter().copied())
            .filter(|(s, _)| s.is_finite())
            .collect();
        if pts.first()?.1 >= rate {
            return Some(pts[0].0);
        }
        pts.windows(2).find_map(|w| {
            let ((s0, r0), (s1, r1)) = (w[0], w[1]);
            (r0 < rate && r1 >= rate).then(|| s0 + (rate - r0) / (r1 - r0) * (s1 - s0))
        })
    }

    /// Every point is at least the running maximum minus `tol`.
    pub fn is_monotone_within(&self, tol: f64) -> bool {
        let mut peak = f64::NEG_INFINITY;
        self.hit_rate.iter().all(|&r| {
            peak = peak.max(r);
            r >= peak - tol
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# summer-curve v1 metric={} snr_definition={} targets={}\nsnr_db,hit_rate,trials,algorithm,config_hash,seed\n",
            self.metric.name(),
            self.snr_definition.name(),
            self.targets
        );
        for (s, r) in self.snr_points_db.iter().zip(&self.hit_rate) {
            let _ = writeln!(
                out,
                "{},{:.6},{},{},{},{}",
                s, r, self.trials, self.algorithm, self.config_hash, self.seed
            );
        }
        out
    }
}

/// Rayon pool honouring `SUMMER_THREADS` when it is set.
pub fn thread_pool() -> Result<rayon::ThreadPool, EvalError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("SUMMER_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            b = b.num_threads(n);
        }
    }
    b.build().map_err(|e| EvalError::Pool(e.to_string()))
}

/// Dictionaries, channel model and noise scaling used by one algorithm.
struct Pipeline {
    dict: DictionarySet,
    variance_scale: f64,
    classic: bool,
}

impl Pipeline {
    fn new(config: &RadarConfig, algorithm: Algorithm) -> Result<Self, EvalError> {
        Ok(match algorithm {
            Algorithm::Summer | Algorithm::MultiCarrier => Pipeline {
                dict: build_dictionaries(config),
                variance_scale: 1.0,
                classic: false,
            },
            Algorithm::Classic => {
                let full = config.with_sampling(SamplingPlan::full(config.waveform.n_nyquist))?;
                Pipeline {
                    dict: build_dictionaries(&full),
                    variance_scale: 1.0,
                    classic: true,
                }
            }
            Algorithm::ClassicCdma => Pipeline {
                dict: build_from_model(ChannelModel::ideal_cdma(config)),
                // the same pulse energy spread over T bands
                variance_scale: config.waveform.t_count as f64,
                classic: true,
            },
        })
    }

    /// `None` when synthesis or recovery fails.
    fn run(&self, scene: &TargetScene, variance: f64, noise_seed: u64) -> Option<SparseTargetMap> {
        let clean = synthesize_model(scene, &self.dict.model).ok()?;
        let noisy = add_noise_variance(&clean, variance * self.variance_scale, noise_seed);
        let targets = scene.targets.len();
        if self.classic {
            classic_process(&noisy, &self.dict, targets).ok()
        } else {
            omp_focus_3d(&noisy, &self.dict, OmpOptions::new(targets)).ok().map(|r| r.map)
        }
    }
}

/// Seed of the scene in a trial; shared by all SNR points so that curves
/// compare the same scenes.
pub fn scene_seed(seed: u64, trial: usize) -> u64 {
    seed::derive(seed, &[stream::SCENE, trial as u64])
}

pub fn noise_seed(seed: u64, snr_index: usize, trial: usize) -> u64 {
    seed::derive(seed, &[stream::NOISE, snr_index as u64, trial as u64])
}

/// Runs every `(snr, trial)` pair, in parallel, and aggregates integer
/// scores. The result depends only on the experiment description.
pub fn run_monte_carlo(exp: &Experiment) -> Result<HitRateCurve, EvalError> {
    if exp.trials == 0 {
        return Err(EvalError::Invalid("trials must be at least 1".into()));
    }
    if exp.snr_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
        return Err(EvalError::Invalid("SNR points must be finite or +inf".into()));
    }
    let probe = exp.source.for_trial(exp.seed, 0)?;
    if exp.algorithm == Algorithm::MultiCarrier && probe.multi_carrier_gamma < 2 {
        return Err(EvalError::Invalid("multi_carrier needs multi_carrier.gamma >= 2".into()));
    }
    let targets = exp.scene.targets();
    // per-trial pipelines (configs may be redrawn per trial)
    let pipelines: Vec<(RadarConfig, Pipeline)> = match &exp.source {
        ConfigSource::Fixed(c) => vec![((**c).clone(), Pipeline::new(c, exp.algorithm)?)],
        ConfigSource::Redraw(_) => (0..exp.trials)
            .map(|t| {
                let c = exp.source.for_trial(exp.seed, t)?;
                let p = Pipeline::new(&c, exp.algorithm)?;
                Ok((c, p))
            })
            .collect::<Result<_, EvalError>>()?,
    };
    let scenes: Vec<TargetScene> = (0..exp.trials)
        .map(|t| exp.scene.draw(probe.grid(), scene_seed(exp.seed, t)))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..exp.snr_db.len())
        .flat_map(|i| (0..exp.trials).map(move |t| (i, t)))
        .collect();
    let pool = thread_pool()?;
    let outcomes: Vec<Option<HitScore>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, t)| {
                let (cfg, pipe) = &pipelines[t.min(pipelines.len() - 1)];
                let variance = noise_variance(exp.snr_db[i], exp.snr_definition, cfg);
                pipe.run(&scenes[t], variance, noise_seed(exp.seed, i, t))
                    .map(|map| hit_or_miss(&scenes[t], &map))
            })
            .collect()
    });
    let mut counts = vec![0u64; exp.snr_db.len()];
    let mut failed_trials = Vec::new();
    for (&(i, t), out) in jobs.iter().zip(&outcomes) {
        match out {
            Some(score) => {
                counts[i] += match exp.metric {
                    Metric::TargetFraction => score.hits as u64,
                    Metric::AllTargets => u64::from(score.hits == score.targets),
                }
            }
            None => failed_trials.push((i, t)),
        }
    }
    let denom = match exp.metric {
        Metric::TargetFraction => (exp.trials * targets) as f64,
        Metric::AllTargets => exp.trials as f64,
    };
    Ok(HitRateCurve {
        snr_points_db: exp.snr_db.clone(),
        hit_rate: counts.iter().map(|&c| c as f64 / denom).collect(),
        counts,
        trials: exp.trials,
        targets,
        algorithm: exp.algorithm.name().to_string(),
        metric: exp.metric,
        snr_definition: exp.snr_definition,
        config_hash: exp.source.fingerprint(),
        seed: exp.seed,
        failed_trials,
    })
}

/// One recovery of `scene` at `snr_db` with the pipeline of `algorithm`,
/// outside any sweep.
pub fn recover_once(
    config: &RadarConfig,
    algorithm: Algorithm,
    scene: &TargetScene,
    snr_db: f64,
    definition: SnrDefinition,
    noise_seed: u64,
) -> Result<SparseTargetMap, EvalError> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(EvalError::Invalid("SNR must be finite or +inf".into()));
    }
    let pipe = Pipeline::new(config, algorithm)?;
    let variance = noise_variance(snr_db, definition, config);
    pipe.run(scene, variance, noise_seed)
        .ok_or_else(|| EvalError::Invalid("recovery failed for this scene".into()))
}

/// Array dimensions and sweep settings shared by the resolution and
/// multi-carrier studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyParams {
    pub t: usize,
    pub r: usize,
    pub n: usize,
    pub pulses: usize,
    pub bandwidth: f64,
    pub carrier: f64,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl StudyParams {
    pub fn desk() -> Self {
        StudyParams {
            t: 8,
            r: 8,
            n: 32,
            pulses: 1,
            bandwidth: 5e6,
            carrier: 10e9,
            snr_db: vec![-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0],
            trials: 50,
            seed: 1,
        }
    }

    fn waveform(&self) -> Result<WaveformParams, ConfigError> {
        WaveformParams::new(self.n as f64 / self.bandwidth, self.bandwidth, self.carrier, self.pulses, self.t, self.r)
    }

    fn sub(&self, tag: u64) -> u64 {
        seed::derive(self.seed, &[stream::GEOMETRY, tag])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionResult {
    pub axis: Axis,
    pub compressed: bool,
    pub summer: HitRateCurve,
    pub classic: HitRateCurve,
}

/// Close-pair scenes recovered by SUMMeR and by classic processing.
///
/// Without compression both methods see the same full virtual-ULA data.
/// With compression SUMMeR uses `T/2` transmitters and `R/2` receivers at
/// random positions, and classic processing the same counts as a
/// uniform array. Both use full-band sampling and the CDMA-equivalent SNR.
pub fn resolution_experiment(params: &StudyParams, axis: Axis, compressed: bool) -> Result<ResolutionResult, EvalError> {
    let w = params.waveform()?;
    let full = SamplingPlan::full(params.n);
    let (summer_cfg, classic_cfg) = if compressed {
        let (m, q) = (params.t / 2, params.r / 2);
        let carriers = assign_carriers(params.t, m, params.bandwidth, params.sub(stream::CARRIERS))?;
        let thin = thin_array(params.t, params.r, m, q, params.sub(stream::GEOMETRY))?;
        let ula = ula_subarray(params.t, params.r, m, q)?;
        (
            RadarConfig::new(w.clone(), thin, carriers.clone(), full.clone(), 1, false)?,
            RadarConfig::new(w, ula, carriers, full, 1, false)?,
        )
    } else {
        let carriers = CarrierPlan::from_indices(params.t, (0..params.t).collect(), params.bandwidth)?;
        let cfg = RadarConfig::new(w, build_virtual_ula(params.t, params.r)?, carriers, full, 1, false)?;
        (cfg.clone(), cfg)
    };
    let exp = |cfg: RadarConfig, algorithm| Experiment {
        source: ConfigSource::Fixed(Box::new(cfg)),
        algorithm,
        scene: ScenePolicy::ClosePair { axis },
        snr_db: params.snr_db.clone(),
        trials: params.trials,
        seed: params.seed,
        snr_definition: SnrDefinition::CdmaEquivalent,
        metric: Metric::AllTargets,
    };
    Ok(ResolutionResult {
        axis,
        compressed,
        summer: run_monte_carlo(&exp(summer_cfg, Algorithm::Summer))?,
        classic: run_monte_carlo(&exp(classic_cfg, Algorithm::ClassicCdma))?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiCarrierResult {
    pub gamma: usize,
    pub multi_carrier: HitRateCurve,
    pub uncompressed: HitRateCurve,
}

/// Multi-carrier SUMMeR with `T/γ` transmitters and `R/γ` receivers against
/// SUMMeR with all `T` transmitters and `R` receivers, both at random
/// positions and sampling `k` Fourier indices per band.
pub fn multicarrier_experiment(
    params: &StudyParams,
    gamma: usize,
    k: usize,
    targets: usize,
) -> Result<MultiCarrierResult, EvalError> {
    if gamma < 2 || !params.t.is_multiple_of(gamma) || !params.r.is_multiple_of(gamma) {
        return Err(EvalError::Invalid(format!("gamma {gamma} must be ≥ 2 and divide T and R")));
    }
    let w = params.waveform()?;
    let sampling = select_fourier_indices(params.n, k, params.sub(stream::SAMPLING))?;
    let (m, q) = (params.t / gamma, params.r / gamma);
    let mc = RadarConfig::new(
        w.clone(),
        thin_array(params.t, params.r, m, q, params.sub(stream::GEOMETRY))?,
        assign_carriers(params.t, m * gamma, params.bandwidth, params.sub(stream::CARRIERS))?,
        sampling.clone(),
        gamma,
        false,
    )?;
    let full = RadarConfig::new(
        w,
        thin_array(params.t, params.r, params.t, params.r, params.sub(stream::GEOMETRY + 100))?,
        assign_carriers(params.t, params.t, params.bandwidth, params.sub(stream::CARRIERS + 100))?,
        sampling,
        1,
        false,
    )?;
    let exp = |cfg: RadarConfig, algorithm| Experiment {
        source: ConfigSource::Fixed(Box::new(cfg)),
        algorithm,
        scene: ScenePolicy::Random { targets },
        snr_db: params.snr_db.clone(),
        trials: params.trials,
        seed: params.seed,
        snr_definition: SnrDefinition::CdmaEquivalent,
        metric: Metric::TargetFraction,
    };
    Ok(MultiCarrierResult {
        gamma,
        multi_carrier: run_monte_carlo(&exp(mc, Algorithm::MultiCarrier))?,
        uncompressed: run_monte_carlo(&exp(full, Algorithm::Summer))?,
    })
}

/// Time-compression study: the same experiment at each `K` in `ks`.
pub fn time_compression(base: &ConfigFile, ks: &[usize], exp: &Experiment) -> Result<Vec<HitRateCurve>, EvalError> {
    ks.iter()
        .map(|&k| {
            let mut file = base.clone();
            file.sampling.k = k;
            file.sampling.indices = None;
            let source = match &exp.source {
                ConfigSource::Fixed(_) => ConfigSource::Fixed(Box::new(file.resolve()?)),
                ConfigSource::Redraw(_) => ConfigSource::Redraw(Box::new(file)),
            };
            run_monte_carlo(&Experiment {
                source,
                ..exp.clone()
            })
        })
        .collect()
}
