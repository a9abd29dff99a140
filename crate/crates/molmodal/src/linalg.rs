//! Small dense linear-algebra helpers shared by every numeric module.
//!
//! Matrices are row-major `Vec<Vec<T>>`; at desk scale (hundreds of rows,
//! double-digit dimensions) this keeps shapes visible in the code and the
//! serialized formats, and nothing here is performance-critical enough to
//! justify a dedicated matrix library.

use crate::scalar::Scalar;

/// Dot product. Panics on length mismatch (internal invariant; public entry
/// points validate shapes before calling in here).
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Squared Euclidean distance between two equal-length vectors.
pub fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// `y += alpha * x`.
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

/// Freshly allocated zero vector.
pub fn zeros<T: Scalar>(n: usize) -> Vec<T> {
    vec![T::zero(); n]
}

/// Freshly allocated zero matrix.
pub fn zeros_matrix<T: Scalar>(rows: usize, cols: usize) -> Vec<Vec<T>> {
    vec![vec![T::zero(); cols]; rows]
}

/// Affine map `w @ x + b` where `w` has one row per output entry.
pub fn affine<T: Scalar>(w: &[Vec<T>], b: &[T], x: &[T]) -> Vec<T> {
    debug_assert_eq!(w.len(), b.len());
    w.iter().zip(b).map(|(row, &bi)| dot(row, x) + bi).collect()
}

/// Transposed matrix-vector product `wᵀ @ y`; this is the input-side gradient
/// of [`affine`].
pub fn matvec_transposed<T: Scalar>(w: &[Vec<T>], y: &[T]) -> Vec<T> {
    debug_assert_eq!(w.len(), y.len());
    let cols = w.first().map_or(0, Vec::len);
    let mut out = zeros(cols);
    for (row, &yi) in w.iter().zip(y) {
        axpy(yi, row, &mut out);
    }
    out
}

/// Accumulate the weight gradient of [`affine`]: `gw += gy ⊗ x`.
pub fn accumulate_outer<T: Scalar>(gw: &mut [Vec<T>], gy: &[T], x: &[T]) {
    debug_assert_eq!(gw.len(), gy.len());
    for (grow, &gyi) in gw.iter_mut().zip(gy) {
        axpy(gyi, x, grow);
    }
}

/// Cosine similarity, `None` when either vector has zero norm.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> Option<T> {
    let (na, nb) = (norm(a), norm(b));
    if na == T::zero() || nb == T::zero() {
        return None;
    }
    Some(dot(a, b) / (na * nb))
}

/// Cosine similarity together with its gradients with respect to both
/// arguments; `None` when either vector has zero norm.
///
/// With `c = cos(a, b)`:  `∂c/∂a = b/(‖a‖‖b‖) − c·a/‖a‖²`  and symmetrically
/// for `b`.
pub fn cosine_with_grads<T: Scalar>(a: &[T], b: &[T]) -> Option<(T, Vec<T>, Vec<T>)> {
    let (na, nb) = (norm(a), norm(b));
    if na == T::zero() || nb == T::zero() {
        return None;
    }
    let c = dot(a, b) / (na * nb);
    let ga = a
        .iter()
        .zip(b)
        .map(|(&ai, &bi)| bi / (na * nb) - c * ai / (na * na))
        .collect();
    let gb = a
        .iter()
        .zip(b)
        .map(|(&ai, &bi)| ai / (na * nb) - c * bi / (nb * nb))
        .collect();
    Some((c, ga, gb))
}

/// Solve `a @ x = rhs` for a square system with one or more right-hand-side
/// columns (`rhs` is m×k), using Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot underflows, i.e. the system is numerically
/// singular. `a` and `rhs` are consumed as scratch space.
pub fn solve_dense<T: Scalar>(mut a: Vec<Vec<T>>, mut rhs: Vec<Vec<T>>) -> Option<Vec<Vec<T>>> {
    let m = a.len();
    debug_assert_eq!(rhs.len(), m);
    let tiny = T::of_f64(1e-12);

    for col in 0..m {
        let pivot_row = (col..m)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .expect("pivot comparison on finite values")
            })
            .expect("non-empty pivot range");
        if a[pivot_row][col].abs() < tiny {
            return None;
        }
        a.swap(col, pivot_row);
        rhs.swap(col, pivot_row);

        for row in (col + 1)..m {
            let factor = a[row][col] / a[col][col];
            if factor == T::zero() {
                continue;
            }
            for k in col..m {
                let update = factor * a[col][k];
                a[row][k] = a[row][k] - update;
            }
            for k in 0..rhs[row].len() {
                let update = factor * rhs[col][k];
                rhs[row][k] = rhs[row][k] - update;
            }
        }
    }

    // Back substitution.
    for col in (0..m).rev() {
        let inv = T::one() / a[col][col];
        for k in 0..rhs[col].len() {
            let mut acc = rhs[col][k];
            for j in (col + 1)..m {
                acc = acc - a[col][j] * rhs[j][k];
            }
            rhs[col][k] = acc * inv;
        }
    }
    Some(rhs)
}

/// Central finite difference `(f(x+h) − f(x−h)) / 2h`, the independent
/// gradient oracle used by the verification tests and the `gradcheck` command.
pub fn central_difference<T: Scalar>(mut f: impl FnMut(T) -> T, x: T, h: T) -> T {
    (f(x + h) - f(x - h)) / (T::of_f64(2.0) * h)
}

/// Relative disagreement between an analytic and a numeric derivative,
/// measured against a scale floor of 1 so near-zero pairs compare absolutely.
pub fn relative_error<T: Scalar>(analytic: T, numeric: T) -> T {
    let scale = T::one().max(analytic.abs()).max(numeric.abs());
    (analytic - numeric).abs() / scale
}
