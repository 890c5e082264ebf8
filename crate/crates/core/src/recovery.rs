//! Sparse recovery of the range-azimuth(-Doppler) map: matrix OMP for a
//! single pulse, Doppler focusing, focused 3D OMP, grid-to-physical
//! conversion and the classic matched-filter/beamforming baseline.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use ndarray::{Array2, Array4, ArrayView2, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::GridDims;
use crate::dictionaries::{ChannelModel, DictionarySet};
use crate::linalg::{cis_turns, least_squares, norm, CMatrix, ZERO};
use crate::synthesis::ChannelCoefficients;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("observation has shape {got:?}, dictionaries expect {expected:?}")]
    Shape {
        got: (usize, usize, usize, usize),
        expected: (usize, usize, usize, usize),
    },
    #[error("selected atoms are linearly dependent at iteration {iteration}; support is ill-posed")]
    IllPosed { iteration: usize },
}

/// One recovered grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub s: usize,
    pub r: usize,
    pub u: usize,
    pub amplitude: Complex64,
    /// Iteration (1-based) or rank at which the point was selected.
    pub iteration: usize,
}

impl TargetEstimate {
    pub fn cell(&self) -> (usize, usize, usize) {
        (self.s, self.r, self.u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseTargetMap {
    pub entries: Vec<TargetEstimate>,
    pub dims: GridDims,
}

impl SparseTargetMap {
    pub fn support(&self) -> BTreeSet<(usize, usize, usize)> {
        self.entries.iter().map(TargetEstimate::cell).collect()
    }

    /// Row and column of an entry in the `TN·TR × P` sparse matrix layout.
    pub fn layout_index(&self, e: &TargetEstimate) -> (usize, usize) {
        (e.r * self.dims.range + e.s, e.u)
    }
}

/// Grid estimates converted to physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveredTarget {
    pub s: usize,
    pub r: usize,
    pub u: usize,
    /// Seconds, in `[0, τ)`.
    pub delay: f64,
    /// Azimuth sine, in `[-1, 1)`.
    pub azimuth_sine: f64,
    /// Hz, in `[-1/2τ, 1/2τ)`.
    pub doppler: f64,
    pub amplitude: Complex64,
    pub iteration: usize,
}

pub fn estimate_params(map: &SparseTargetMap, pri: f64) -> Vec<RecoveredTarget> {
    let d = map.dims;
    map.entries
        .iter()
        .map(|e| RecoveredTarget {
            s: e.s,
            r: e.r,
            u: e.u,
            delay: pri * e.s as f64 / d.range as f64,
            azimuth_sine: -1.0 + 2.0 * e.r as f64 / d.azimuth as f64,
            doppler: (-0.5 + e.u as f64 / d.doppler as f64) / pri,
            amplitude: e.amplitude,
            iteration: e.iteration,
        })
        .collect()
}

/// One target per line: iteration, grid indices, physical values, amplitude.
pub fn targets_to_text(targets: &[RecoveredTarget]) -> String {
    let mut out = String::from("# summer-targets v1\n# iteration s r u delay_s azimuth_sine doppler_hz amp_re amp_im\n");
    for t in targets {
        let _ = writeln!(
            out,
            "{} {} {} {} {:.12e} {:.12} {:.12e} {:.12e} {:.12e}",
            t.iteration, t.s, t.r, t.u, t.delay, t.azimuth_sine, t.doppler, t.amplitude.re, t.amplitude.im
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmpOptions {
    /// Number of iterations (the known target count L).
    pub targets: usize,
    /// Stop once `‖R‖ ≤ η ‖Y‖`; off when `None`.
    pub residual_threshold: Option<f64>,
}

impl OmpOptions {
    pub fn new(targets: usize) -> Self {
        OmpOptions {
            targets,
            residual_threshold: None,
        }
    }

    pub fn with_threshold(self, eta: f64) -> Self {
        OmpOptions {
            residual_threshold: Some(eta),
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmpReport {
    pub map: SparseTargetMap,
    /// `‖Y‖` followed by the residual norm after each iteration.
    pub residual_norms: Vec<f64>,
    /// Iterations where the largest projection fell on an already selected
    /// atom and the next best was taken instead.
    pub duplicate_skips: usize,
    pub stopped_early: bool,
    pub warnings: Vec<String>,
}

/// Inverse-FFT realization of `Σ_v (A^v)^H W^v` for range blocks built from
/// harmonics, reused across iterations.
struct Projector {
    tn: usize,
    tr: usize,
    bins: Vec<Vec<usize>>,
    ifft: std::sync::Arc<dyn Fft<f64>>,
}

impl Projector {
    fn new(dict: &DictionarySet) -> Self {
        let m = &dict.model;
        let tn = m.grid.range;
        let bins = (0..m.channels())
            .map(|v| m.harmonics(v).map(|h| h.rem_euclid(tn as i64) as usize).collect())
            .collect();
        Projector {
            tn,
            tr: m.grid.azimuth,
            bins,
            ifft: FftPlanner::new().plan_fft_inverse(tn),
        }
    }

    /// `Ψ = Σ_v (A^v)^H R^v B^v` with `R^v` given as `Q×K` views
    /// (receiver-major, as stored). Returns a `TN×TR` matrix stored
    /// column-major per `r` for the FFT, i.e. `out[[r, s]]`.
    fn project(&self, frames: &[ArrayView2<Complex64>], b: &[CMatrix]) -> Array2<Complex64> {
        let mut spec = Array2::<Complex64>::zeros((self.tr, self.tn));
        for (v, frame) in frames.iter().enumerate() {
            // W = R^T B : K×TR, accumulated straight into the spectrum
            let w = frame.t().dot(&b[v]);
            for (k, &bin) in self.bins[v].iter().enumerate() {
                for r in 0..self.tr {
                    spec[[r, bin]] += w[[k, r]];
                }
            }
        }
        for mut row in spec.rows_mut() {
            let slice = row.as_slice_mut().expect("standard layout");
            self.ifft.process(slice);
        }
        spec
    }
}

/// Dense reference for the projection, used to cross-check the FFT path.
pub fn project_dense(frames: &[CMatrix], dict: &DictionarySet) -> CMatrix {
    let (tn, tr) = dict.grid();
    let mut out = Array2::zeros((tn, tr));
    for (v, r) in frames.iter().enumerate() {
        let ah = dict.a[v].t().mapv(|z| z.conj());
        out = out + ah.dot(r).dot(&dict.b[v]);
    }
    out
}

/// Doppler focusing of every channel on the grid `ν_j = -1/2τ + j/Pτ`:
/// `Φ^j[v][q][k] = e^{-j2πν_j o_v τ} Σ_p y[v][q][p][k] e^{-j2πν_j p τ}`.
/// The launch-offset factor re-phases staggered channels so that they add
/// coherently; it is 1 when γ = 1. Output layout is `[v][q][j][k]`.
pub fn doppler_focus(data: &Array4<Complex64>, offsets: &[f64]) -> Array4<Complex64> {
    let (nv, nq, np, nk) = data.dim();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(np);
    let mut out = Array4::zeros((nv, nq, np, nk));
    let mut buf = vec![ZERO; np];
    for v in 0..nv {
        let shifts: Vec<Complex64> = (0..np)
            .map(|j| cis_turns(-(-0.5 + j as f64 / np as f64) * offsets[v]))
            .collect();
        for q in 0..nq {
            for k in 0..nk {
                for (p, b) in buf.iter_mut().enumerate() {
                    let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                    *b = data[[v, q, p, k]] * sign;
                }
                fft.process(&mut buf);
                for j in 0..np {
                    out[[v, q, j, k]] = buf[j] * shifts[j];
                }
            }
        }
    }
    out
}

/// Direct `O(P²)` evaluation of [`doppler_focus`].
pub fn doppler_focus_direct(data: &Array4<Complex64>, offsets: &[f64]) -> Array4<Complex64> {
    let (nv, nq, np, nk) = data.dim();
    Array4::from_shape_fn((nv, nq, np, nk), |(v, q, j, k)| {
        let nu = -0.5 + j as f64 / np as f64;
        (0..np)
            .map(|p| data[[v, q, p, k]] * cis_turns(-nu * (p as f64 + offsets[v])))
            .sum()
    })
}

/// Atom of grid point `(s, r, u)` laid out like the data, `[v][q][p][k]`.
/// With `doppler = false` the pulse factor is omitted (single-pulse model).
pub fn atom(dict: &DictionarySet, s: usize, r: usize, u: usize, pulses: usize, doppler: bool) -> Vec<Complex64> {
    let m = &dict.model;
    let (nv, nq, nk) = (m.channels(), m.receivers(), m.k());
    let turns = -0.5 + u as f64 / m.grid.doppler as f64;
    let mut out = Vec::with_capacity(nv * nq * pulses * nk);
    for v in 0..nv {
        for q in 0..nq {
            let bq = dict.b[v][[q, r]].conj();
            for p in 0..pulses {
                let d = if doppler {
                    cis_turns(turns * (p as f64 + m.offsets[v]))
                } else {
                    Complex64::new(1.0, 0.0)
                };
                for k in 0..nk {
                    out.push(dict.a[v][[k, s]] * bq * d);
                }
            }
        }
    }
    out
}

/// `vec` of the observation: channel blocks in order, each block the
/// column-major `vec(Y^v)` of every pulse in turn.
pub fn vectorize(data: &Array4<Complex64>) -> Vec<Complex64> {
    let (nv, nq, np, nk) = data.dim();
    let mut out = Vec::with_capacity(data.len());
    for v in 0..nv {
        for q in 0..nq {
            for p in 0..np {
                for k in 0..nk {
                    out.push(data[[v, q, p, k]]);
                }
            }
        }
    }
    out
}

fn check_shape(data: &Array4<Complex64>, dict: &DictionarySet, pulses: usize) -> Result<(), RecoveryError> {
    let m = &dict.model;
    let expected = (m.channels(), m.receivers(), pulses, m.k());
    if data.dim() != expected {
        return Err(RecoveryError::Shape {
            got: data.dim(),
            expected,
        });
    }
    Ok(())
}

fn bound_warnings(dict: &DictionarySet, targets: usize) -> Vec<String> {
    let m = &dict.model;
    let need = 2 * targets;
    let mut w = Vec::new();
    if m.channels() * m.k() < need {
        w.push(format!("MK = {} < 2L = {need}", m.channels() * m.k()));
    }
    if m.channels() * m.receivers() < need {
        w.push(format!("MQ = {} < 2L = {need}", m.channels() * m.receivers()));
    }
    w
}

/// Shared greedy loop. `doppler` selects the focused 3D variant.
fn omp_engine(
    data: &Array4<Complex64>,
    dict: &DictionarySet,
    opts: OmpOptions,
    doppler: bool,
) -> Result<OmpReport, RecoveryError> {
    let np = data.dim().2;
    let grid = dict.model.grid;
    let dims = if doppler { grid } else { GridDims::new(grid.range, grid.azimuth, 1) };
    let projector = Projector::new(dict);
    let z = vectorize(data);
    let z_norm = norm(z.iter().copied());
    let mut residual = data.clone();
    let mut residual_norms = vec![z_norm];
    let mut selected: Vec<(usize, usize, usize)> = Vec::new();
    let mut atoms: Vec<Vec<Complex64>> = Vec::new();
    let mut amplitudes: Vec<Complex64> = Vec::new();
    let mut duplicate_skips = 0;
    let mut stopped_early = false;
    let mut warnings = bound_warnings(dict, opts.targets);
    if doppler && np < 2 * opts.targets {
        warnings.push(format!("P = {np} < 2L = {}", 2 * opts.targets));
    }
    for iteration in 1..=opts.targets {
        if let Some(eta) = opts.residual_threshold {
            if residual_norms[residual_norms.len() - 1] <= eta * z_norm {
                stopped_early = true;
                break;
            }
        }
        let focused = if doppler {
            doppler_focus(&residual, &dict.model.offsets)
        } else {
            residual.clone()
        };
        let bins = if doppler { np } else { 1 };
        // best unselected and best overall; ties go to the smallest (s, r, u)
        let mut best: Option<(f64, (usize, usize, usize))> = None;
        let mut best_any: Option<(f64, (usize, usize, usize))> = None;
        let beats = |val: f64, cell: (usize, usize, usize), cur: Option<(f64, (usize, usize, usize))>| {
            cur.is_none_or(|(b, c)| val > b || (val == b && cell < c))
        };
        for j in 0..bins {
            let frames: Vec<ArrayView2<Complex64>> = (0..dict.model.channels())
                .map(|v| focused.index_axis(Axis(0), v).index_axis_move(Axis(1), j))
                .collect();
            let proj = projector.project(&frames, &dict.b);
            for ((r, s), z) in proj.indexed_iter() {
                let (val, cell) = (z.norm(), (s, r, j));
                if beats(val, cell, best_any) {
                    best_any = Some((val, cell));
                }
                if !selected.contains(&cell) && beats(val, cell, best) {
                    best = Some((val, cell));
                }
            }
        }
        let Some((_, cell)) = best else { break };
        if best_any.map(|b| b.1) != Some(cell) {
            duplicate_skips += 1;
        }
        selected.push(cell);
        atoms.push(atom(dict, cell.0, cell.1, cell.2, np, doppler));
        amplitudes =
            least_squares(&atoms, &z).map_err(|_| RecoveryError::IllPosed { iteration })?;
        let mut res = z.clone();
        for (a, x) in atoms.iter().zip(&amplitudes) {
            for (r, ai) in res.iter_mut().zip(a) {
                *r -= ai * x;
            }
        }
        residual_norms.push(norm(res.iter().copied()));
        residual = Array4::from_shape_vec(data.dim(), res).expect("same length");
    }
    let entries = selected
        .iter()
        .zip(&amplitudes)
        .enumerate()
        .map(|(i, (&(s, r, u), &amplitude))| TargetEstimate {
            s,
            r,
            u,
            amplitude,
            iteration: i + 1,
        })
        .collect();
    Ok(OmpReport {
        map: SparseTargetMap { entries, dims },
        residual_norms,
        duplicate_skips,
        stopped_early,
        warnings,
    })
}

/// Simultaneous sparse matrix recovery from one pulse: `y[v]` is the `K×Q`
/// observation `Y^v = A^v X (B^v)^H`. The projection is `(A^v)^H R^v B^v`
/// summed over channels.
pub fn omp_matrix(y: &[CMatrix], dict: &DictionarySet, opts: OmpOptions) -> Result<OmpReport, RecoveryError> {
    let m = &dict.model;
    let (nk, nq) = (m.k(), m.receivers());
    if y.len() != m.channels() || y.iter().any(|b| b.dim() != (nk, nq)) {
        return Err(RecoveryError::Shape {
            got: (y.len(), y.first().map_or(0, |b| b.ncols()), 1, y.first().map_or(0, |b| b.nrows())),
            expected: (m.channels(), nq, 1, nk),
        });
    }
    let data = Array4::from_shape_fn((m.channels(), nq, 1, nk), |(v, q, _, k)| y[v][[k, q]]);
    omp_engine(&data, dict, opts, false)
}

/// `Y^v` of one pulse, as `K×Q` matrices.
pub fn pulse_matrices(coeffs: &ChannelCoefficients, p: usize) -> Vec<CMatrix> {
    coeffs
        .data
        .axis_iter(Axis(0))
        .map(|ch| ch.index_axis(Axis(1), p).t().to_owned())
        .collect()
}

/// Focused 3D recovery over range, azimuth and Doppler.
pub fn omp_focus_3d(
    z: &ChannelCoefficients,
    dict: &DictionarySet,
    opts: OmpOptions,
) -> Result<OmpReport, RecoveryError> {
    check_shape(&z.data, dict, dict.model.grid.doppler)?;
    omp_engine(&z.data, dict, opts, true)
}

/// Range and azimuth extent, in grid bins, of the classic resolution cell:
/// the grid size over the occupied harmonic span and over the virtual
/// aperture, rounded and at least one. A full band and a full virtual ULA
/// give `(1, 1)`.
pub fn resolution_cell(model: &ChannelModel) -> (usize, usize) {
    let (lo, hi) = model
        .shifts
        .iter()
        .flat_map(|sh| model.kappa.iter().map(move |k| k + sh))
        .fold((i64::MAX, i64::MIN), |(a, b), h| (a.min(h), b.max(h)));
    let harmonics = (hi - lo + 1).max(1) as f64;
    let (blo, bhi) = model
        .betas
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let elements = 2.0 * (bhi - blo).max(0.0) + 1.0;
    let cell = |grid: usize, span: f64| ((grid as f64 / span).round() as usize).max(1);
    (cell(model.grid.range, harmonics), cell(model.grid.azimuth, elements))
}

/// Classic processing: matched filtering of every waveform, beamforming over
/// the azimuth grid, a Doppler FFT over pulses and selection of the `L`
/// strongest points of the resulting map. A selected point masks the cells
/// within its resolution cell (see [`resolution_cell`]), so one response is
/// never reported twice.
///
/// The input holds the full-band coefficients of each separated waveform;
/// `dict` describes their harmonics (FDMA bands or the ideal CDMA model).
pub fn classic_process(
    coeffs: &ChannelCoefficients,
    dict: &DictionarySet,
    targets: usize,
) -> Result<SparseTargetMap, RecoveryError> {
    let grid = dict.model.grid;
    check_shape(&coeffs.data, dict, grid.doppler)?;
    let projector = Projector::new(dict);
    let focused = doppler_focus(&coeffs.data, &dict.model.offsets);
    let (tn, tr, np) = (grid.range, grid.azimuth, grid.doppler);
    let mut cube = Vec::with_capacity(np);
    let mut values = Vec::with_capacity(np);
    for j in 0..np {
        let frames: Vec<ArrayView2<Complex64>> = (0..dict.model.channels())
            .map(|v| focused.index_axis(Axis(0), v).index_axis_move(Axis(1), j))
            .collect();
        let proj = projector.project(&frames, &dict.b);
        values.push(proj.mapv(|z| z.norm()));
        cube.push(proj);
    }
    let gain = (dict.model.channels() * dict.model.receivers() * dict.model.k() * np) as f64;
    let (cell_s, cell_r) = resolution_cell(&dict.model);
    let mut order: Vec<(f64, (usize, usize, usize))> = Vec::with_capacity(tn * tr * np);
    for s in 0..tn {
        for r in 0..tr {
            for u in 0..np {
                order.push((values[u][[r, s]], (s, r, u)));
            }
        }
    }
    // stable sort keeps lexicographic order among equal values
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut peaks: Vec<(f64, (usize, usize, usize))> = Vec::with_capacity(targets);
    for &(val, (s, r, u)) in &order {
        if peaks.len() == targets {
            break;
        }
        let masked = peaks
            .iter()
            .any(|&(_, (ps, pr, pu))| ps.abs_diff(s) < cell_s && pr.abs_diff(r) < cell_r && pu == u);
        if !masked {
            peaks.push((val, (s, r, u)));
        }
    }
    // every cell masked: fall back to the strongest unused cells
    for &(val, cell) in &order {
        if peaks.len() == targets {
            break;
        }
        if !peaks.iter().any(|p| p.1 == cell) {
            peaks.push((val, cell));
        }
    }
    let entries = peaks
        .into_iter()
        .take(targets)
        .enumerate()
        .map(|(i, (_, (s, r, u)))| TargetEstimate {
            s,
            r,
            u,
            amplitude: cube[u][[r, s]] / gain,
            iteration: i + 1,
        })
        .collect();
    Ok(SparseTargetMap { entries, dims: grid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{
        assign_carriers, build_virtual_ula, select_fourier_indices, thin_array, CarrierPlan, RadarConfig,
        SamplingPlan, WaveformParams,
    };
    use crate::dictionaries::{build_dictionaries, build_from_model, ChannelModel};
    use crate::scene::{generate_scene, quantize, Target, TargetScene};
    use crate::synthesis::{synthesize_coefficients, synthesize_model};

    fn config(t: usize, r: usize, pulses: usize, m: usize, q: usize, k: usize, seed: u64) -> RadarConfig {
        let n = 8;
        let w = WaveformParams::new(n as f64 / 5e6, 5e6, 1e10, pulses, t, r).unwrap();
        RadarConfig::new(
            w,
            thin_array(t, r, m, q, seed).unwrap(),
            assign_carriers(t, m, 5e6, seed + 1).unwrap(),
            select_fourier_indices(n, k, seed + 2).unwrap(),
            1,
            false,
        )
        .unwrap()
    }

    fn one(s: usize, r: usize, u: usize, re: f64, im: f64, dims: GridDims) -> TargetScene {
        TargetScene::new(vec![Target { s, r, u, amplitude: Complex64::new(re, im) }], dims).unwrap()
    }

    #[test]
    fn fft_projection_matches_dense() {
        let cfg = config(4, 4, 1, 3, 3, 5, 3);
        let dict = build_dictionaries(&cfg);
        let y = synthesize_coefficients(&generate_scene(3, cfg.grid(), 1).unwrap(), &cfg).unwrap();
        let frames = pulse_matrices(&y, 0);
        let dense = project_dense(&frames, &dict);
        let views: Vec<_> = y.data.axis_iter(Axis(0)).map(|c| c.index_axis_move(Axis(1), 0)).collect();
        let fast = Projector::new(&dict).project(&views, &dict.b);
        for ((s, r), z) in dense.indexed_iter() {
            assert!((fast[[r, s]] - z).norm() < 1e-9);
        }
    }

    #[test]
    fn single_atom_projection_peaks_at_truth() {
        let cfg = config(4, 4, 1, 4, 4, 8, 7);
        let dict = build_dictionaries(&cfg);
        let scene = one(13, 6, 0, 1.0, 0.0, cfg.grid());
        let y = synthesize_coefficients(&scene, &cfg).unwrap();
        let psi = project_dense(&pulse_matrices(&y, 0), &dict);
        let (best, _) = psi
            .indexed_iter()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert_eq!(best, (13, 6));
        // the conjugated-B reading does not peak there
        let mut alt = Array2::<Complex64>::zeros(psi.dim());
        for (v, frame) in pulse_matrices(&y, 0).iter().enumerate() {
            let ah = dict.a[v].t().mapv(|z| z.conj());
            alt = alt + ah.dot(frame).dot(&dict.b[v].mapv(|z| z.conj()));
        }
        assert!(alt[[13, 6]].norm() < psi[[13, 6]].norm() * 0.999);
    }

    #[test]
    fn omp_matrix_single_target_exact() {
        let cfg = config(4, 4, 1, 4, 4, 8, 11);
        let dict = build_dictionaries(&cfg);
        let amp = Complex64::new(0.7, -0.4);
        let scene = one(21, 9, 0, amp.re, amp.im, cfg.grid());
        let y = synthesize_coefficients(&scene, &cfg).unwrap();
        let yv = pulse_matrices(&y, 0);
        // exhaustive oracle: ‖Y − α·atom‖ minimized over all atoms
        let z = vectorize(&y.data);
        let mut best = (f64::INFINITY, (0, 0));
        for s in 0..32 {
            for r in 0..16 {
                let a = atom(&dict, s, r, 0, 1, false);
                let e: f64 = a.iter().map(|x| x.norm_sqr()).sum();
                let alpha: Complex64 = a.iter().zip(&z).map(|(x, y)| x.conj() * y).sum::<Complex64>() / e;
                let err = norm(a.iter().zip(&z).map(|(x, y)| y - alpha * x));
                if err < best.0 {
                    best = (err, (s, r));
                }
            }
        }
        assert_eq!(best.1, (21, 9));
        let rep = omp_matrix(&yv, &dict, OmpOptions::new(1)).unwrap();
        let e = rep.map.entries[0];
        assert_eq!((e.s, e.r, e.u), (21, 9, 0));
        assert!((e.amplitude - amp).norm() < 1e-9);
    }

    #[test]
    fn omp_matrix_zero_input() {
        let cfg = config(4, 4, 1, 2, 2, 4, 1);
        let dict = build_dictionaries(&cfg);
        let y = vec![Array2::zeros((4, 2)); 2];
        let rep = omp_matrix(&y, &dict, OmpOptions::new(3)).unwrap();
        assert_eq!(rep.map.entries.len(), 3);
        assert!(rep.map.entries.iter().all(|e| e.amplitude.norm() == 0.0));
        let rep = omp_matrix(&y, &dict, OmpOptions::new(3).with_threshold(1e-8)).unwrap();
        assert!(rep.stopped_early && rep.map.entries.is_empty());
    }

    #[test]
    fn omp_matrix_two_orthogonal_atoms() {
        // full-band virtual ULA with on-grid β: A and B are full DFTs, so
        // distinct atoms are exactly orthogonal
        let (t, r, n) = (2, 2, 4);
        let w = WaveformParams::new(n as f64 / 5e6, 5e6, 1e10, 1, t, r).unwrap();
        let cfg = RadarConfig::new(
            w,
            build_virtual_ula(t, r).unwrap(),
            CarrierPlan::from_indices(t, vec![0, 1], 5e6).unwrap(),
            SamplingPlan::full(n),
            1,
            true,
        )
        .unwrap();
        let dict = build_dictionaries(&cfg);
        let a1 = atom(&dict, 1, 2, 0, 1, false);
        let a2 = atom(&dict, 6, 0, 0, 1, false);
        let ip: Complex64 = a1.iter().zip(&a2).map(|(x, y)| x.conj() * y).sum();
        assert!(ip.norm() < 1e-9);
        let scene = TargetScene::new(
            vec![
                Target { s: 1, r: 2, u: 0, amplitude: Complex64::new(1.0, 0.5) },
                Target { s: 6, r: 0, u: 0, amplitude: Complex64::new(-0.3, 0.9) },
            ],
            cfg.grid(),
        )
        .unwrap();
        let y = synthesize_coefficients(&scene, &cfg).unwrap();
        let rep = omp_matrix(&pulse_matrices(&y, 0), &dict, OmpOptions::new(2)).unwrap();
        assert_eq!(rep.map.support(), [(1, 2, 0), (6, 0, 0)].into_iter().collect());
        assert!(*rep.residual_norms.last().unwrap() < 1e-9);
    }

    #[test]
    fn focusing_identity_and_fft_equivalence() {
        let cfg = config(4, 4, 8, 2, 2, 4, 5);
        for u in 0..8 {
            let y = synthesize_coefficients(&one(3, 5, u, 0.6, 0.8, cfg.grid()), &cfg).unwrap();
            let offsets = vec![0.0; 2];
            let phi = doppler_focus(&y.data, &offsets);
            let direct = doppler_focus_direct(&y.data, &offsets);
            for ((v, q, j, k), z) in phi.indexed_iter() {
                assert!((z - direct[[v, q, j, k]]).norm() < 1e-10 * 8.0);
                if j == u {
                    assert!((z.norm() - 8.0 * y.data[[v, q, 0, k]].norm()).abs() < 1e-10 * 8.0);
                } else {
                    assert!(z.norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn focusing_single_pulse_is_identity() {
        let cfg = config(4, 4, 1, 2, 2, 4, 5);
        let y = synthesize_coefficients(&generate_scene(2, cfg.grid(), 3).unwrap(), &cfg).unwrap();
        assert_eq!(doppler_focus(&y.data, &[0.0, 0.0]), y.data);
    }

    #[test]
    fn focused_omp_recovers_three_axes() {
        let cfg = config(4, 4, 8, 2, 2, 4, 21);
        let dict = build_dictionaries(&cfg);
        let scene = TargetScene::new(
            vec![
                Target { s: 4, r: 2, u: 1, amplitude: Complex64::new(1.0, 0.0) },
                Target { s: 20, r: 11, u: 6, amplitude: Complex64::new(0.0, -0.8) },
            ],
            cfg.grid(),
        )
        .unwrap();
        let z = synthesize_coefficients(&scene, &cfg).unwrap();
        let rep = omp_focus_3d(&z, &dict, OmpOptions::new(2)).unwrap();
        assert_eq!(rep.map.support(), scene.cells().into_iter().collect());
        for w in rep.residual_norms.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        assert!(rep.residual_norms[2] < 1e-9);
        let e = rep.map.entries.iter().find(|e| e.u == 6).unwrap();
        assert_eq!(rep.map.layout_index(e), (11 * 32 + 20, 6));
    }

    #[test]
    fn focused_omp_with_staggered_channels() {
        let n = 8;
        let w = WaveformParams::new(n as f64 / 5e6, 5e6, 1e10, 8, 4, 4).unwrap();
        let cfg = RadarConfig::new(
            w,
            thin_array(4, 4, 2, 2, 8).unwrap(),
            assign_carriers(4, 4, 5e6, 9).unwrap(),
            select_fourier_indices(n, 4, 10).unwrap(),
            2,
            false,
        )
        .unwrap();
        let dict = build_dictionaries(&cfg);
        let scene = generate_scene(2, cfg.grid(), 77).unwrap();
        let z = synthesize_coefficients(&scene, &cfg).unwrap();
        let rep = omp_focus_3d(&z, &dict, OmpOptions::new(2)).unwrap();
        assert_eq!(rep.map.support(), scene.cells().into_iter().collect());
    }

    #[test]
    fn zero_doppler_reduces_to_matrix_omp() {
        let cfg = config(4, 4, 8, 2, 2, 4, 31);
        let dict = build_dictionaries(&cfg);
        let scene = TargetScene::new(
            vec![
                Target { s: 2, r: 3, u: 4, amplitude: Complex64::new(1.0, 0.2) },
                Target { s: 17, r: 12, u: 4, amplitude: Complex64::new(-0.5, 0.5) },
            ],
            cfg.grid(),
        )
        .unwrap();
        let z = synthesize_coefficients(&scene, &cfg).unwrap();
        let rep3 = omp_focus_3d(&z, &dict, OmpOptions::new(2)).unwrap();
        let summed: Vec<CMatrix> = (0..2)
            .map(|v| (0..8).map(|p| pulse_matrices(&z, p)[v].clone()).fold(Array2::zeros((4, 2)), |a, b| a + b))
            .collect();
        let rep2 = omp_matrix(&summed, &dict, OmpOptions::new(2)).unwrap();
        let s3: BTreeSet<_> = rep3.map.entries.iter().map(|e| (e.s, e.r)).collect();
        let s2: BTreeSet<_> = rep2.map.entries.iter().map(|e| (e.s, e.r)).collect();
        assert_eq!(s3, s2);
        assert!(rep3.map.entries.iter().all(|e| e.u == 4));
    }

    #[test]
    fn vec_order_matches_block_stacking() {
        let cfg = config(4, 4, 1, 2, 3, 2, 2);
        let y = synthesize_coefficients(&generate_scene(2, cfg.grid(), 5).unwrap(), &cfg).unwrap();
        let z = vectorize(&y.data);
        let mats = pulse_matrices(&y, 0);
        // vec(Y^0) then vec(Y^1), each column-major K×Q
        let mut expect = Vec::new();
        for m in &mats {
            for q in 0..3 {
                for k in 0..2 {
                    expect.push(m[[k, q]]);
                }
            }
        }
        assert_eq!(z, expect);
    }

    #[test]
    fn estimate_params_grid_points() {
        let dims = GridDims::new(32, 16, 8);
        let pri = 8.0 / 5e6;
        let map = SparseTargetMap {
            entries: vec![
                TargetEstimate { s: 0, r: 0, u: 0, amplitude: ZERO, iteration: 1 },
                TargetEstimate { s: 31, r: 8, u: 4, amplitude: ZERO, iteration: 2 },
            ],
            dims,
        };
        let est = estimate_params(&map, pri);
        assert_eq!((est[0].delay, est[0].azimuth_sine), (0.0, -1.0));
        assert!((est[0].doppler + 0.5 / pri).abs() < 1e-6);
        assert!((est[1].delay - pri * 31.0 / 32.0).abs() < 1e-18);
        assert_eq!(est[1].azimuth_sine, 0.0);
        assert_eq!(est[1].doppler, 0.0);
        let w = WaveformParams::new(pri, 5e6, 1e10, 8, 4, 4).unwrap();
        for s in 0..32 {
            for r in 0..16 {
                for u in 0..8 {
                    let m = SparseTargetMap {
                        entries: vec![TargetEstimate { s, r, u, amplitude: ZERO, iteration: 1 }],
                        dims,
                    };
                    let e = estimate_params(&m, pri)[0];
                    assert_eq!(quantize(e.delay, e.azimuth_sine, e.doppler, dims, &w).unwrap(), (s, r, u));
                }
            }
        }
        let text = targets_to_text(&est);
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(3).unwrap().starts_with("2 31 8 4 "));
    }

    #[test]
    fn classic_finds_single_target() {
        let cfg = config(4, 4, 8, 4, 4, 8, 41).with_sampling(SamplingPlan::full(8)).unwrap();
        let dict = build_dictionaries(&cfg);
        let scene = one(19, 5, 2, 0.5, 0.5, cfg.grid());
        let y = synthesize_coefficients(&scene, &cfg).unwrap();
        let map = classic_process(&y, &dict, 1).unwrap();
        assert_eq!(map.entries[0].cell(), (19, 5, 2));
        // ideal CDMA model, same scene
        let model = ChannelModel::ideal_cdma(&cfg);
        let cdma = build_from_model(model.clone());
        let yc = synthesize_model(&scene, &model).unwrap();
        let map = classic_process(&yc, &cdma, 1).unwrap();
        assert_eq!(map.entries[0].cell(), (19, 5, 2));
        assert!((map.entries[0].amplitude - Complex64::new(0.5, 0.5)).norm() < 1e-9);
    }

    fn ula_config(small: Option<(usize, usize)>) -> RadarConfig {
        let w = WaveformParams::new(8.0 / 5e6, 5e6, 1e10, 1, 4, 4).unwrap();
        let (geometry, m) = match small {
            None => (build_virtual_ula(4, 4).unwrap(), 4),
            Some((m, q)) => (crate::config::ula_subarray(4, 4, m, q).unwrap(), m),
        };
        let carriers = CarrierPlan::from_indices(4, (0..m).collect(), 5e6).unwrap();
        RadarConfig::new(w, geometry, carriers, SamplingPlan::full(8), 1, true).unwrap()
    }

    #[test]
    fn resolution_cell_tracks_aperture() {
        let full = ChannelModel::ideal_cdma(&ula_config(None));
        assert_eq!(resolution_cell(&full), (1, 1));
        let small = ChannelModel::ideal_cdma(&ula_config(Some((2, 2))));
        assert_eq!(resolution_cell(&small), (1, 4));
        // two of four bands, at the low end, cover half the harmonics
        let w = WaveformParams::new(8.0 / 5e6, 5e6, 1e10, 1, 4, 4).unwrap();
        let c = CarrierPlan::from_indices(4, vec![0, 1], 5e6).unwrap();
        let cfg = RadarConfig::new(w, thin_array(4, 4, 2, 4, 1).unwrap(), c, SamplingPlan::full(8), 1, true).unwrap();
        assert_eq!(resolution_cell(&ChannelModel::from_config(&cfg)).0, 2);
    }

    #[test]
    fn classic_separates_adjacent_pair_only_on_full_aperture() {
        let model = ChannelModel::ideal_cdma(&ula_config(None));
        let at = |r| Target { s: 9, r, u: 0, amplitude: Complex64::new(1.0, 0.0) };
        let scene = TargetScene::new(vec![at(6), at(7)], model.grid).unwrap();
        let y = synthesize_model(&scene, &model).unwrap();
        let map = classic_process(&y, &build_from_model(model), 2).unwrap();
        assert_eq!(map.support(), [(9, 6, 0), (9, 7, 0)].into_iter().collect());

        let model = ChannelModel::ideal_cdma(&ula_config(Some((2, 2))));
        let y = synthesize_model(&scene, &model).unwrap();
        let map = classic_process(&y, &build_from_model(model), 2).unwrap();
        let (a, b) = (&map.entries[0], &map.entries[1]);
        assert!(a.r.abs_diff(b.r) >= 4 || a.s != b.s, "one response reported once");
        assert!(crate::eval::hit_or_miss(&scene, &map).hits < 2);
    }

    #[test]
    fn classic_returns_l_peaks_on_noise() {
        let cfg = config(4, 4, 4, 2, 2, 8, 4).with_sampling(SamplingPlan::full(8)).unwrap();
        let dict = build_dictionaries(&cfg);
        let zeros = ChannelCoefficients::zeros(&cfg);
        let noisy = crate::synthesis::add_noise_variance(&zeros, 1.0, 3);
        let map = classic_process(&noisy, &dict, 5).unwrap();
        assert_eq!(map.entries.len(), 5);
        assert_eq!(map.support().len(), 5);
        assert_eq!(classic_process(&zeros, &dict, 3).unwrap().entries.len(), 3);
    }
}
