//! Small dense complex linear-algebra helpers shared by the dictionaries and
//! the recovery algorithms.

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

pub type CMatrix = Array2<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `exp(j 2π x)`, with `x` reduced to `[-1/2, 1/2]` before scaling so that
/// large arguments keep full precision.
#[inline]
pub fn cis_turns(x: f64) -> Complex64 {
    let r = x - x.round();
    let (s, c) = (2.0 * std::f64::consts::PI * r).sin_cos();
    Complex64::new(c, s)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ArrayView2<Complex64>, b: &ArrayView2<Complex64>) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let s = a[[i, j]];
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = s * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Stacks matrices with equal column counts on top of each other.
pub fn vstack(blocks: &[CMatrix]) -> CMatrix {
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    ndarray::concatenate(ndarray::Axis(0), &views).expect("blocks share a column count")
}

pub fn to_nalgebra(a: &ArrayView2<Complex64>) -> DMatrix<Complex64> {
    let (r, c) = a.dim();
    DMatrix::from_fn(r, c, |i, j| a[[i, j]])
}

/// Singular values in descending order.
pub fn singular_values(a: &ArrayView2<Complex64>) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let m = to_nalgebra(a);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn norm(v: impl IntoIterator<Item = Complex64>) -> f64 {
    v.into_iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankDeficient {
    /// Column (in insertion order) whose pivot collapsed.
    pub column: usize,
}

/// Least-squares solution of `D x ≈ y` through a thin QR factorization.
/// `columns` holds the columns of `D`, each of length `y.len()`.
pub fn least_squares(
    columns: &[Vec<Complex64>],
    y: &[Complex64],
) -> Result<Vec<Complex64>, RankDeficient> {
    let n = y.len();
    let t = columns.len();
    if t == 0 {
        return Ok(Vec::new());
    }
    let d = DMatrix::from_fn(n, t, |i, j| columns[j][i]);
    let qr = d.qr();
    let r = qr.r();
    let scale = (0..t).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    if let Some(column) = (0..t).find(|&i| r[(i, i)].norm() <= 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        return Err(RankDeficient { column });
    }
    let rhs = qr.q().adjoint() * nalgebra::DVector::from_column_slice(y);
    let x = r
        .solve_upper_triangular(&rhs)
        .ok_or(RankDeficient { column: t - 1 })?;
    Ok(x.iter().copied().collect())
}
