//! On-grid point-target scenes.
//!
//! Targets live on the Nyquist grid: delay `τ s / TN`, azimuth sine
//! `-1 + 2 r / TR` and Doppler `-1/(2τ) + u / (Pτ)`.

use std::collections::HashSet;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{GridDims, WaveformParams};
use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("cannot place {requested} distinct targets on a grid of {cells} cells")]
    TooManyTargets { requested: usize, cells: usize },
    #[error("target {index} at ({s}, {r}, {u}) is outside the {dims:?} grid")]
    OutOfGrid {
        index: usize,
        s: usize,
        r: usize,
        u: usize,
        dims: GridDims,
    },
    #[error("targets {first} and {second} share the cell ({s}, {r}, {u})")]
    Duplicate {
        first: usize,
        second: usize,
        s: usize,
        r: usize,
        u: usize,
    },
    #[error("target {0} has zero amplitude")]
    ZeroAmplitude(usize),
    #[error("grid needs at least two cells along the {0:?} axis")]
    AxisTooShort(Axis),
    #[error("{quantity} = {value} is outside [{lo}, {hi})")]
    OutOfDomain {
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("scene file line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Range,
    Azimuth,
    Doppler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    /// Delay index in `[0, TN)`.
    pub s: usize,
    /// Azimuth index in `[0, TR)`.
    pub r: usize,
    /// Doppler index in `[0, P)`.
    pub u: usize,
    pub amplitude: Complex64,
}

impl Target {
    pub fn cell(&self) -> (usize, usize, usize) {
        (self.s, self.r, self.u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetScene {
    pub targets: Vec<Target>,
    pub dims: GridDims,
}

impl TargetScene {
    pub fn new(targets: Vec<Target>, dims: GridDims) -> Result<Self, SceneError> {
        let mut seen = std::collections::HashMap::new();
        for (i, t) in targets.iter().enumerate() {
            if t.s >= dims.range || t.r >= dims.azimuth || t.u >= dims.doppler {
                return Err(SceneError::OutOfGrid {
                    index: i,
                    s: t.s,
                    r: t.r,
                    u: t.u,
                    dims,
                });
            }
            if t.amplitude.norm() == 0.0 {
                return Err(SceneError::ZeroAmplitude(i));
            }
            if let Some(first) = seen.insert(t.cell(), i) {
                return Err(SceneError::Duplicate {
                    first,
                    second: i,
                    s: t.s,
                    r: t.r,
                    u: t.u,
                });
            }
        }
        Ok(TargetScene { targets, dims })
    }

    pub fn empty(dims: GridDims) -> Self {
        TargetScene {
            targets: Vec::new(),
            dims,
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn cells(&self) -> HashSet<(usize, usize, usize)> {
        self.targets.iter().map(Target::cell).collect()
    }

    /// Text form: a header, a `dims` line and one `s r u re im` line per
    /// target.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# summer-scene v1: s r u re(alpha) im(alpha)\n");
        let d = self.dims;
        writeln!(out, "dims {} {} {}", d.range, d.azimuth, d.doppler).unwrap();
        for t in &self.targets {
            writeln!(
                out,
                "{} {} {} {:e} {:e}",
                t.s, t.r, t.u, t.amplitude.re, t.amplitude.im
            )
            .unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SceneError> {
        let mut dims = None;
        let mut targets = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| SceneError::Parse {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields[0] == "dims" {
                if fields.len() != 4 {
                    return Err(err("expected `dims TN TR P`".into()));
                }
                let v: Result<Vec<usize>, _> = fields[1..].iter().map(|f| f.parse()).collect();
                let v = v.map_err(|e| err(e.to_string()))?;
                dims = Some(GridDims::new(v[0], v[1], v[2]));
                continue;
            }
            if fields.len() != 5 {
                return Err(err(format!("expected 5 fields, got {}", fields.len())));
            }
            let idx: Result<Vec<usize>, _> = fields[..3].iter().map(|f| f.parse()).collect();
            let idx = idx.map_err(|e| err(e.to_string()))?;
            let amp: Result<Vec<f64>, _> = fields[3..].iter().map(|f| f.parse()).collect();
            let amp = amp.map_err(|e| err(e.to_string()))?;
            targets.push(Target {
                s: idx[0],
                r: idx[1],
                u: idx[2],
                amplitude: Complex64::new(amp[0], amp[1]),
            });
        }
        let dims = dims.ok_or(SceneError::Parse {
            line: 0,
            message: "missing `dims` line".into(),
        })?;
        TargetScene::new(targets, dims)
    }
}

fn random_phase(rng: &mut seed::Rng) -> Complex64 {
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(1.0, phi)
}

/// `L` targets on distinct cells drawn uniformly without replacement, unit
/// amplitudes with uniform random phases.
pub fn generate_scene(l: usize, dims: GridDims, seed: u64) -> Result<TargetScene, SceneError> {
    let cells = dims.cells();
    if l > cells {
        return Err(SceneError::TooManyTargets {
            requested: l,
            cells,
        });
    }
    let mut rng = seed::rng(seed);
    let picks = index::sample(&mut rng, cells, l).into_vec();
    let targets = picks
        .into_iter()
        .map(|lin| {
            let s = lin % dims.range;
            let r = (lin / dims.range) % dims.azimuth;
            let u = lin / (dims.range * dims.azimuth);
            Target {
                s,
                r,
                u,
                amplitude: random_phase(&mut rng),
            }
        })
        .collect();
    TargetScene::new(targets, dims)
}

/// Two targets one grid step apart along `axis`, identical on the other two
/// axes. The common indices are drawn at random.
pub fn generate_close_pair(axis: Axis, dims: GridDims, seed: u64) -> Result<TargetScene, SceneError> {
    let len = match axis {
        Axis::Range => dims.range,
        Axis::Azimuth => dims.azimuth,
        Axis::Doppler => dims.doppler,
    };
    if len < 2 {
        return Err(SceneError::AxisTooShort(axis));
    }
    let mut rng = seed::rng(seed);
    let mut draw = |n: usize, shrink: bool| rng.random_range(0..if shrink { n - 1 } else { n });
    let s = draw(dims.range, axis == Axis::Range);
    let r = draw(dims.azimuth, axis == Axis::Azimuth);
    let u = draw(dims.doppler, axis == Axis::Doppler);
    let a = Target {
        s,
        r,
        u,
        amplitude: random_phase(&mut rng),
    };
    let mut b = Target {
        amplitude: random_phase(&mut rng),
        ..a
    };
    match axis {
        Axis::Range => b.s += 1,
        Axis::Azimuth => b.r += 1,
        Axis::Doppler => b.u += 1,
    }
    TargetScene::new(vec![a, b], dims)
}

/// Physical parameters of a grid cell: (delay s, azimuth sine, Doppler Hz).
pub fn grid_point(s: usize, r: usize, u: usize, dims: GridDims, pri: f64) -> (f64, f64, f64) {
    (
        pri * s as f64 / dims.range as f64,
        -1.0 + 2.0 * r as f64 / dims.azimuth as f64,
        -1.0 / (2.0 * pri) + u as f64 / (dims.doppler as f64 * pri),
    )
}

fn nearest(x: f64, n: usize) -> usize {
    // Half-way points go to the lower index.
    let i = (x - 0.5).ceil();
    i.clamp(0.0, (n - 1) as f64) as usize
}

/// Snaps continuous parameters to the nearest grid cell.
pub fn quantize(
    delay: f64,
    azimuth_sine: f64,
    doppler: f64,
    dims: GridDims,
    waveform: &WaveformParams,
) -> Result<(usize, usize, usize), SceneError> {
    let tau = waveform.pri;
    let check = |quantity, value: f64, lo: f64, hi: f64| {
        if value.is_finite() && value >= lo && value < hi {
            Ok(())
        } else {
            Err(SceneError::OutOfDomain {
                quantity,
                value,
                lo,
                hi,
            })
        }
    };
    check("delay", delay, 0.0, tau)?;
    check("azimuth sine", azimuth_sine, -1.0, 1.0)?;
    check("doppler", doppler, -0.5 / tau, 0.5 / tau)?;
    let xs = delay / tau * dims.range as f64;
    let xr = (azimuth_sine + 1.0) * dims.azimuth as f64 / 2.0;
    let xu = (doppler * tau + 0.5) * dims.doppler as f64;
    Ok((
        nearest(xs, dims.range),
        nearest(xr, dims.azimuth),
        nearest(xu, dims.doppler),
    ))
}
