use std::fs;
use std::path::Path;

use anyhow::Context;
use clap::Parser;
use serde_json::{json, Value};
use summer_core::config::{desk_config_file, paper_config_file, ConfigFile, RadarConfig};
use summer_core::dictionaries::{check_recovery_conditions, coherence_search, lemma1_suite};
use summer_core::eval::{
    hit_or_miss, multicarrier_experiment, noise_seed, recover_once, resolution_experiment, scene_seed,
    time_compression, Algorithm, ConfigSource, Experiment, HitRateCurve, Metric, ScenePolicy, StudyParams,
};
use summer_core::recovery::{estimate_params, targets_to_text, SparseTargetMap};
use summer_core::scene::{generate_scene, TargetScene};
use summer_core::synthesis::SnrDefinition;

use crate::manifest::{self, Manifest};
use crate::{Cli, Command, Common, Failure, Scale};

type Outcome = Result<(), Failure>;

/// Artifacts of one run, collected for the manifest.
struct Run<'a> {
    common: &'a Common,
    command: &'static str,
    args: Vec<String>,
    config: Option<ConfigFile>,
    outputs: Vec<String>,
    details: Value,
    failed: Vec<String>,
}

impl<'a> Run<'a> {
    fn new(command: &'static str, common: &'a Common, args: Vec<String>) -> Result<Self, Failure> {
        fs::create_dir_all(&common.output)
            .with_context(|| format!("creating {}", common.output.display()))?;
        Ok(Run {
            common,
            command,
            args,
            config: None,
            outputs: Vec::new(),
            details: json!({}),
            failed: Vec::new(),
        })
    }

    fn emit(&mut self, name: &str, contents: &str) -> Outcome {
        let path = self.common.output.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(name.to_owned());
        Ok(())
    }

    fn emit_json(&mut self, name: &str, value: &Value) -> Outcome {
        let text = serde_json::to_string_pretty(value).context("serializing report")? + "\n";
        self.emit(name, &text)
    }

    fn emit_curve(&mut self, name: &str, curve: &HitRateCurve) -> Outcome {
        if !curve.failed_trials.is_empty() {
            self.failed.push(format!("{name}: {:?}", curve.failed_trials));
        }
        self.emit(name, &curve.to_csv())
    }

    fn finish(self) -> Outcome {
        Manifest {
            command: self.command.to_owned(),
            args: self.args,
            seed: self.common.seed,
            config_toml: self.config.as_ref().map(ConfigFile::to_toml_string),
            details: self.details,
            outputs: self.outputs,
        }
        .write(&self.common.output)?;
        if self.failed.is_empty() {
            Ok(())
        } else {
            Err(Failure::Runtime(format!(
                "trials failed (snr index, trial): {}",
                self.failed.join("; ")
            )))
        }
    }
}

pub fn dispatch(command: Command, argv: &[String]) -> Outcome {
    match command {
        Command::Rerun { manifest, output } => {
            let (args, config) = manifest::read(&manifest)?;
            let mut full = vec!["summer".to_owned()];
            full.extend(args.iter().cloned());
            let mut cli = Cli::try_parse_from(&full)
                .map_err(|e| Failure::Config(format!("manifest arguments do not parse: {e}")))?;
            if matches!(cli.command, Command::Rerun { .. }) {
                return Err(Failure::Config("a manifest cannot record a rerun".into()));
            }
            let common = common_mut(&mut cli.command).expect("experiment command");
            common.output = output;
            common.config_text = config;
            run(cli.command, args)
        }
        other => run(other, manifest::replayable_args(argv)),
    }
}

fn common_mut(command: &mut Command) -> Option<&mut Common> {
    match command {
        Command::Fig5Map { common, .. }
        | Command::FigTimeCompression { common, .. }
        | Command::FigResolution { common, .. }
        | Command::FigMulticarrier { common, .. }
        | Command::Lemma1Check { common, .. }
        | Command::CoherenceSearch { common, .. }
        | Command::Recover { common, .. }
        | Command::CheckConditions { common, .. } => Some(common),
        Command::Rerun { .. } => None,
    }
}

fn run(command: Command, args: Vec<String>) -> Outcome {
    match command {
        Command::Fig5Map { targets, common } => fig5_map(&common, args, targets),
        Command::FigTimeCompression { targets, redraw, common } => {
            fig_time_compression(&common, args, targets, redraw)
        }
        Command::FigResolution { axis, common } => fig_resolution(&common, args, axis.into()),
        Command::FigMulticarrier { gamma, k, targets, common } => fig_multicarrier(&common, args, gamma, k, targets),
        Command::Lemma1Check { random, planted, common } => lemma1_check(&common, args, random, planted),
        Command::CoherenceSearch { mode, draws, common } => search(&common, args, mode.into(), draws),
        Command::Recover { scene, snr, common } => recover(&common, args, &scene, snr),
        Command::CheckConditions { targets, common } => conditions(&common, args, targets),
        Command::Rerun { .. } => unreachable!("handled by dispatch"),
    }
}

fn load_config(common: &Common) -> Result<(ConfigFile, RadarConfig), Failure> {
    let file = if let Some(text) = &common.config_text {
        ConfigFile::from_toml_str_with_overrides(text, &common.overrides)?
    } else if let Some(path) = &common.config {
        ConfigFile::load(path, &common.overrides)?
    } else {
        let preset = match common.scale {
            Scale::Desk => desk_config_file(),
            Scale::Paper => paper_config_file(),
        };
        ConfigFile::from_toml_str_with_overrides(&preset.to_toml_string(), &common.overrides)?
    };
    let config = file.resolve()?;
    Ok((file, config))
}

fn snr_points(common: &Common, default: &[f64]) -> Vec<f64> {
    common.snr_list.clone().unwrap_or_else(|| default.to_vec())
}

fn trials(common: &Common) -> usize {
    common.trials.unwrap_or(match common.scale {
        Scale::Desk => 50,
        Scale::Paper => 100,
    })
}

fn snr_strings(points: &[f64]) -> Vec<String> {
    points.iter().map(f64::to_string).collect()
}

fn study_params(file: &ConfigFile, common: &Common, default_snr: &[f64]) -> StudyParams {
    StudyParams {
        t: file.array.t,
        r: file.array.r,
        n: (file.waveform.pri * file.waveform.bandwidth).round() as usize,
        pulses: file.waveform.pulses,
        bandwidth: file.waveform.bandwidth,
        carrier: file.waveform.carrier,
        snr_db: snr_points(common, default_snr),
        trials: trials(common),
        seed: common.seed,
    }
}

fn listing(map: &SparseTargetMap, pri: f64) -> String {
    targets_to_text(&estimate_params(map, pri))
}

fn fig5_map(common: &Common, args: Vec<String>, targets: Option<usize>) -> Outcome {
    let (file, cfg) = load_config(common)?;
    let mut run = Run::new("fig5-map", common, args)?;
    let l = targets.unwrap_or(match common.scale {
        Scale::Desk => 4,
        Scale::Paper => 7,
    });
    let snr = snr_points(common, &[-10.0])[0];
    let scene = generate_scene(l, cfg.grid(), scene_seed(common.seed, 0)).map_err(|e| Failure::Runtime(e.to_string()))?;
    let map = recover_once(&cfg, common.algorithm, &scene, snr, common.snr_definition.into(), noise_seed(common.seed, 0, 0))?;
    let score = hit_or_miss(&scene, &map);
    println!("{}: {}/{} hits at {snr} dB", common.algorithm.name(), score.hits, score.targets);
    run.emit("truth.txt", &scene.to_text())?;
    run.emit("recovered.txt", &listing(&map, cfg.waveform.pri))?;
    run.details = json!({
        "algorithm": common.algorithm.name(),
        "snr_db": snr.to_string(),
        "snr_definition": SnrDefinition::from(common.snr_definition).name(),
        "targets": l,
        "hits": score.hits,
    });
    run.config = Some(file);
    run.finish()
}

fn fig_time_compression(common: &Common, args: Vec<String>, targets: usize, redraw: bool) -> Outcome {
    let (file, cfg) = load_config(common)?;
    let mut run = Run::new("fig-time-compression", common, args)?;
    let n = cfg.waveform.n_nyquist;
    let ks: Vec<usize> = [n, n / 2, n / 4].into_iter().filter(|&k| k > 0).collect();
    let snr = snr_points(common, &[-40.0, -36.0, -32.0, -28.0, -24.0, -20.0, -16.0]);
    let source = if redraw {
        ConfigSource::Redraw(Box::new(file.clone()))
    } else {
        ConfigSource::Fixed(Box::new(cfg))
    };
    let exp = Experiment {
        source,
        algorithm: common.algorithm,
        scene: ScenePolicy::Random { targets },
        snr_db: snr.clone(),
        trials: trials(common),
        seed: common.seed,
        snr_definition: common.snr_definition.into(),
        metric: Metric::TargetFraction,
    };
    let curves = time_compression(&file, &ks, &exp)?;
    let mut half = Vec::new();
    for (k, curve) in ks.iter().zip(&curves) {
        run.emit_curve(&format!("curve_k{k}.csv"), curve)?;
        let at = curve.snr_at_rate(0.5);
        println!("K={k}: SNR at rate 0.5 = {}", at.map_or("not reached".into(), |v| format!("{v:.2} dB")));
        half.push(json!({ "k": k, "snr_at_half": at }));
    }
    run.details = json!({ "ks": ks, "snr_db": snr_strings(&snr), "snr_at_half": half, "redraw": redraw });
    run.config = Some(file);
    run.finish()
}

fn fig_resolution(common: &Common, args: Vec<String>, axis: summer_core::scene::Axis) -> Outcome {
    let (file, _) = load_config(common)?;
    let mut run = Run::new("fig-resolution", common, args)?;
    let params = study_params(&file, common, &[-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0, 10.0]);
    for compressed in [false, true] {
        let r = resolution_experiment(&params, axis, compressed)?;
        let tag = if compressed { "compressed" } else { "uncompressed" };
        run.emit_curve(&format!("resolution_{tag}_summer.csv"), &r.summer)?;
        run.emit_curve(&format!("resolution_{tag}_classic.csv"), &r.classic)?;
        println!("{tag}: summer {:?}", r.summer.hit_rate);
        println!("{tag}: classic {:?}", r.classic.hit_rate);
    }
    run.details = json!({ "study": params_json(&params), "axis": axis });
    run.config = Some(file);
    run.finish()
}

fn params_json(p: &StudyParams) -> Value {
    json!({
        "t": p.t, "r": p.r, "n": p.n, "pulses": p.pulses,
        "bandwidth": p.bandwidth, "carrier": p.carrier,
        "snr_db": snr_strings(&p.snr_db), "trials": p.trials, "seed": p.seed,
    })
}

fn fig_multicarrier(common: &Common, args: Vec<String>, gamma: usize, k: Option<usize>, targets: usize) -> Outcome {
    let (file, _) = load_config(common)?;
    let mut run = Run::new("fig-multicarrier", common, args)?;
    let params = study_params(&file, common, &[-36.0, -32.0, -28.0, -24.0, -20.0, -16.0]);
    let k = k.unwrap_or(params.n / 2);
    let r = multicarrier_experiment(&params, gamma, k, targets)?;
    run.emit_curve("multicarrier.csv", &r.multi_carrier)?;
    run.emit_curve("uncompressed.csv", &r.uncompressed)?;
    println!("multi-carrier {:?}", r.multi_carrier.hit_rate);
    println!("uncompressed  {:?}", r.uncompressed.hit_rate);
    run.details = json!({ "study": params_json(&params), "gamma": gamma, "k": k, "targets": targets });
    run.config = Some(file);
    run.finish()
}

fn lemma1_check(common: &Common, args: Vec<String>, random: usize, planted: usize) -> Outcome {
    let mut run = Run::new("lemma1-check", common, args)?;
    let suite = lemma1_suite(common.seed, random, planted);
    println!(
        "random: {}/{} equal; planted: {}/{} equal; minimum attained: {}/{} equal; lower bound: {}/{}",
        suite.random_equal,
        suite.random_total,
        suite.planted_equal,
        suite.planted_total,
        suite.attained_equal,
        suite.attained_total,
        suite.lower_bound_holds,
        suite.cases.len()
    );
    run.emit_json("lemma1.json", &serde_json::to_value(&suite).context("serializing suite")?)?;
    run.details = json!({ "random": random, "planted": planted });
    run.finish()
}

fn search(common: &Common, args: Vec<String>, mode: summer_core::dictionaries::SearchMode, draws: usize) -> Outcome {
    let (file, cfg) = load_config(common)?;
    let mut run = Run::new("coherence-search", common, args)?;
    let result = coherence_search(&cfg, draws, common.seed, mode)?;
    println!("best draw {} with coherence {:.4}", result.best_trial, result.best_score);
    let mut csv = String::from("trial,range_coherence,azimuth_coherence,score\n");
    for p in &result.trace {
        csv.push_str(&format!("{},{},{},{}\n", p.trial, p.range_coherence, p.azimuth_coherence, p.score));
    }
    run.emit("search_trace.csv", &csv)?;
    run.emit_json("best_config.json", &serde_json::to_value(&result.best).context("serializing config")?)?;
    run.details = json!({ "mode": mode, "draws": draws, "best_trial": result.best_trial, "best_score": result.best_score });
    run.config = Some(file);
    run.finish()
}

fn recover(common: &Common, args: Vec<String>, scene_path: &Path, snr: f64) -> Outcome {
    let (file, cfg) = load_config(common)?;
    let mut run = Run::new("recover", common, args)?;
    let text = fs::read_to_string(scene_path).with_context(|| format!("reading {}", scene_path.display()))?;
    let scene = TargetScene::from_text(&text).map_err(|e| Failure::Runtime(format!("{}: {e}", scene_path.display())))?;
    if scene.dims != cfg.grid() {
        return Err(Failure::Config(format!(
            "scene grid {:?} does not match the configuration grid {:?}",
            scene.dims,
            cfg.grid()
        )));
    }
    let algorithm = if common.algorithm == Algorithm::MultiCarrier { Algorithm::Summer } else { common.algorithm };
    let map = recover_once(&cfg, algorithm, &scene, snr, common.snr_definition.into(), noise_seed(common.seed, 0, 0))?;
    let out = listing(&map, cfg.waveform.pri);
    print!("{out}");
    let score = hit_or_miss(&scene, &map);
    run.emit("recovered.txt", &out)?;
    run.details = json!({
        "scene": text,
        "snr_db": snr.to_string(),
        "algorithm": algorithm.name(),
        "hits": score.hits,
        "targets": score.targets,
    });
    run.config = Some(file);
    run.finish()
}

fn conditions(common: &Common, args: Vec<String>, targets: usize) -> Outcome {
    let (file, cfg) = load_config(common)?;
    let mut run = Run::new("check-conditions", common, args)?;
    let report = check_recovery_conditions(&cfg, targets);
    println!(
        "samples {} (need {}): {}; channels {} (need {}): {}; pulses {} (need {}): {}",
        report.samples_per_receiver,
        2 * targets,
        verdict(report.samples_ok),
        report.virtual_channels,
        2 * targets,
        verdict(report.channels_ok),
        report.pulses,
        2 * targets,
        verdict(report.pulses_ok)
    );
    run.emit_json("conditions.json", &serde_json::to_value(&report).context("serializing report")?)?;
    run.details = json!({ "targets": targets, "all_pass": report.all_pass() });
    run.config = Some(file);
    run.finish()
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "insufficient"
    }
}
