//! Cross-modal alignment losses over a shared latent space.
//!
//! Each modality owns an affine [`Projector`] into the shared d-dimensional
//! space. The molecular projections sum row-wise into an *anchor*; alignment
//! then combines
//!
//! * [`info_nce`] — a temperature-scaled contrastive loss on cosine
//!   similarity that pulls each anchor toward its own context projection and
//!   away from other rows in the batch, and
//! * [`vicreg`] — an invariance + variance-hinge + covariance penalty between
//!   a context projection and its imputation-augmented twin that prevents the
//!   embedding from collapsing.
//!
//! Every function returns hand-derived analytic gradients alongside the loss
//! value; the tests check them against central finite differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Affine map `x ↦ W x + b` from one modality's feature space into the shared
/// latent space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projector<T> {
    /// Name of the modality this projector belongs to.
    pub modality: String,
    /// `output_dim × input_dim` weight matrix.
    pub weight: Vec<Vec<T>>,
    /// `output_dim` bias vector.
    pub bias: Vec<T>,
}

impl<T: Scalar> Projector<T> {
    pub fn input_dim(&self) -> usize {
        self.weight.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.bias.len()
    }

    /// Project a single feature vector.
    pub fn project(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.input_dim() {
            return Err(Error::LengthMismatch {
                context: "projector input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(linalg::affine(&self.weight, &self.bias, x))
    }

    /// Project every row of a matrix.
    pub fn project_rows(&self, rows: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
        rows.iter().map(|row| self.project(row)).collect()
    }
}

// ---------------------------------------------------------------------------
// InfoNCE
// ---------------------------------------------------------------------------

/// Value and gradients of the contrastive loss.
#[derive(Clone, Debug)]
pub struct InfoNce<T> {
    pub loss: T,
    pub grad_anchors: Vec<Vec<T>>,
    pub grad_positives: Vec<Vec<T>>,
}

/// Temperature-scaled InfoNCE on cosine similarity.
///
/// With `s_ij = cos(a_i, p_j)/τ` the loss is the mean over rows of
/// `−log softmax_j(s_ij)[i]`, i.e. each anchor must identify its own positive
/// among all positives in the batch. A single-row batch has loss exactly zero.
pub fn info_nce<T: Scalar>(anchors: &[Vec<T>], positives: &[Vec<T>], tau: T) -> Result<InfoNce<T>> {
    let n = anchors.len();
    if positives.len() != n {
        return Err(Error::LengthMismatch {
            context: "info_nce positives vs anchors",
            expected: n,
            actual: positives.len(),
        });
    }
    if n == 0 {
        return Err(Error::BatchTooSmall { minimum: 1, actual: 0 });
    }
    let tau_f = tau.to_f64_lossy();
    if !(tau_f.is_finite() && tau_f > 0.0) {
        return Err(Error::InvalidTemperature(tau_f));
    }
    for (i, row) in anchors.iter().enumerate() {
        if linalg::norm(row) == T::zero() {
            return Err(Error::ZeroNormRow { row: i });
        }
    }
    for (j, row) in positives.iter().enumerate() {
        if linalg::norm(row) == T::zero() {
            return Err(Error::ZeroNormRow { row: j });
        }
    }

    // Cosine similarities and their gradients for every (anchor, positive)
    // pair; N is batch-sized so the quadratic table is cheap.
    let mut scores = linalg::zeros_matrix::<T>(n, n);
    let mut grads_a = vec![Vec::new(); n * n];
    let mut grads_p = vec![Vec::new(); n * n];
    for i in 0..n {
        for j in 0..n {
            let (c, ga, gp) = linalg::cosine_with_grads(&anchors[i], &positives[j])
                .expect("zero norms were rejected above");
            scores[i][j] = c / tau;
            grads_a[i * n + j] = ga;
            grads_p[i * n + j] = gp;
        }
    }

    let inv_n = T::one() / T::of_usize(n);
    let mut loss = T::zero();
    let mut grad_anchors: Vec<Vec<T>> = anchors.iter().map(|r| linalg::zeros(r.len())).collect();
    let mut grad_positives: Vec<Vec<T>> =
        positives.iter().map(|r| linalg::zeros(r.len())).collect();
    for i in 0..n {
        // Log-sum-exp with the row maximum factored out for stability.
        let row_max = scores[i].iter().copied().fold(T::neg_infinity(), T::max);
        let sum_exp: T = scores[i].iter().map(|&s| (s - row_max).exp()).sum();
        let lse = row_max + sum_exp.ln();
        loss = loss + (lse - scores[i][i]) * inv_n;

        for j in 0..n {
            let softmax = (scores[i][j] - row_max).exp() / sum_exp;
            let delta = if i == j { T::one() } else { T::zero() };
            // d loss / d s_ij, including the 1/τ from s = cos/τ.
            let coeff = (softmax - delta) * inv_n / tau;
            linalg::axpy(coeff, &grads_a[i * n + j], &mut grad_anchors[i]);
            linalg::axpy(coeff, &grads_p[i * n + j], &mut grad_positives[j]);
        }
    }
    Ok(InfoNce { loss, grad_anchors, grad_positives })
}

// ---------------------------------------------------------------------------
// Variance / invariance / covariance regularizer
// ---------------------------------------------------------------------------

/// The three summands of the regularizer, reported separately.
#[derive(Clone, Copy, Debug, Default)]
pub struct VicRegComponents<T> {
    /// Mean squared row distance between the two views.
    pub invariance: T,
    /// Hinge on per-coordinate population variance of the first view.
    pub variance: T,
    /// Squared Frobenius distance of the first view's covariance from identity.
    pub covariance: T,
}

impl<T: Scalar> VicRegComponents<T> {
    pub fn total(&self) -> T {
        self.invariance + self.variance + self.covariance
    }
}

/// Value and gradients of [`vicreg`].
#[derive(Clone, Debug)]
pub struct VicReg<T> {
    pub components: VicRegComponents<T>,
    pub loss: T,
    pub grad_z: Vec<Vec<T>>,
    pub grad_zp: Vec<Vec<T>>,
}

/// Invariance + variance + covariance regularizer between two N×d views.
///
/// `loss = (1/N) Σ_i ‖z_i − z'_i‖² + Σ_j max(0, 1 − Var(Z_:,j))
///        + ‖Cov(Z) − I‖_F²`
/// with population variance and `Cov(Z) = (1/N) Zᵀ Z − mean·meanᵀ`. The
/// variance and covariance terms look at the first view only; the second view
/// enters through the invariance term. Requires N ≥ 2 so that variances are
/// meaningful.
pub fn vicreg<T: Scalar>(z: &[Vec<T>], zp: &[Vec<T>]) -> Result<VicReg<T>> {
    let n = z.len();
    if n < 2 {
        return Err(Error::BatchTooSmall { minimum: 2, actual: n });
    }
    if zp.len() != n {
        return Err(Error::LengthMismatch {
            context: "vicreg second view rows",
            expected: n,
            actual: zp.len(),
        });
    }
    let d = z[0].len();
    for (i, (a, b)) in z.iter().zip(zp).enumerate() {
        if a.len() != d || b.len() != d {
            return Err(Error::FeatureDimMismatch {
                record: i,
                modality: "vicreg view".into(),
                expected: d,
                actual: if a.len() != d { a.len() } else { b.len() },
            });
        }
    }

    let inv_n = T::one() / T::of_usize(n);
    let two = T::of_f64(2.0);
    let mut grad_z = linalg::zeros_matrix::<T>(n, d);
    let mut grad_zp = linalg::zeros_matrix::<T>(n, d);

    // Invariance.
    let mut invariance = T::zero();
    for i in 0..n {
        invariance = invariance + linalg::squared_distance(&z[i], &zp[i]) * inv_n;
        for j in 0..d {
            let diff = z[i][j] - zp[i][j];
            grad_z[i][j] = grad_z[i][j] + two * inv_n * diff;
            grad_zp[i][j] = grad_zp[i][j] - two * inv_n * diff;
        }
    }

    // Column means and population variances of the first view.
    let mut mean = linalg::zeros::<T>(d);
    for row in z {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m = *m + v * inv_n;
        }
    }
    let mut variance = T::zero();
    for j in 0..d {
        let var_j: T = z.iter().map(|row| (row[j] - mean[j]) * (row[j] - mean[j])).sum::<T>() * inv_n;
        if var_j < T::one() {
            variance = variance + (T::one() - var_j);
            // d(−var_j)/d z_ij = −(2/N)(z_ij − mean_j); the mean-coupling
            // terms cancel exactly because deviations sum to zero.
            for i in 0..n {
                grad_z[i][j] = grad_z[i][j] - two * inv_n * (z[i][j] - mean[j]);
            }
        }
    }

    // Covariance of the first view against the identity.
    let mut cov = linalg::zeros_matrix::<T>(d, d);
    for row in z {
        for a in 0..d {
            for b in 0..d {
                cov[a][b] = cov[a][b] + row[a] * row[b] * inv_n;
            }
        }
    }
    for a in 0..d {
        for b in 0..d {
            cov[a][b] = cov[a][b] - mean[a] * mean[b];
        }
    }
    let mut covariance = T::zero();
    let mut gain = linalg::zeros_matrix::<T>(d, d); // G = 2 (Cov − I)
    for a in 0..d {
        for b in 0..d {
            let delta = if a == b { T::one() } else { T::zero() };
            let diff = cov[a][b] - delta;
            covariance = covariance + diff * diff;
            gain[a][b] = two * diff;
        }
    }
    // ∂‖Cov−I‖²/∂z_ij = (2/N) Σ_b G_jb (z_ib − mean_b), using G's symmetry.
    for i in 0..n {
        for j in 0..d {
            let mut acc = T::zero();
            for b in 0..d {
                acc = acc + gain[j][b] * (z[i][b] - mean[b]);
            }
            grad_z[i][j] = grad_z[i][j] + two * inv_n * acc;
        }
    }

    let components = VicRegComponents { invariance, variance, covariance };
    Ok(VicReg { loss: components.total(), components, grad_z, grad_zp })
}

// ---------------------------------------------------------------------------
// Combined semantic-consistency loss
// ---------------------------------------------------------------------------

/// Settings for [`sca_loss`]. The two switches support ablations that drop
/// either alignment channel.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScaConfig {
    /// InfoNCE temperature.
    pub tau: f64,
    /// Contrastive (anchor ↔ context) channel on/off.
    pub infonce_enabled: bool,
    /// Variance/invariance/covariance (context ↔ augmented) channel on/off.
    pub vicreg_enabled: bool,
}

impl Default for ScaConfig {
    fn default() -> Self {
        ScaConfig { tau: 0.1, infonce_enabled: true, vicreg_enabled: true }
    }
}

/// One context modality inside a [`ProjectedBatch`]: the projection of the
/// raw (placeholder-zeroed) features and of the augmented features.
#[derive(Clone, Debug)]
pub struct CellularProjections<T> {
    pub name: String,
    pub raw: Vec<Vec<T>>,
    pub augmented: Vec<Vec<T>>,
}

/// Projections of one batch through every modality projector, with the
/// molecular anchor rows precomputed.
#[derive(Clone, Debug)]
pub struct ProjectedBatch<T> {
    /// `(modality name, N×d projections)` for each molecular modality.
    pub molecular: Vec<(String, Vec<Vec<T>>)>,
    /// Raw and augmented projections for each context modality.
    pub cellular: Vec<CellularProjections<T>>,
    /// Row-wise sum of the molecular projections.
    pub anchor: Vec<Vec<T>>,
}

impl<T: Scalar> ProjectedBatch<T> {
    /// Assemble a batch and compute the anchor rows. All matrices must agree
    /// on the number of rows and the latent width.
    pub fn new(
        molecular: Vec<(String, Vec<Vec<T>>)>,
        cellular: Vec<CellularProjections<T>>,
    ) -> Result<Self> {
        let (_, first) = molecular
            .first()
            .ok_or(Error::NoSuchModalities("batch has no molecular projections"))?;
        let n = first.len();
        let d = first.first().map_or(0, Vec::len);
        let check = |rows: &[Vec<T>], context: &'static str| -> Result<()> {
            if rows.len() != n {
                return Err(Error::LengthMismatch { context, expected: n, actual: rows.len() });
            }
            for row in rows {
                if row.len() != d {
                    return Err(Error::LengthMismatch {
                        context,
                        expected: d,
                        actual: row.len(),
                    });
                }
            }
            Ok(())
        };
        for (_, rows) in &molecular {
            check(rows, "molecular projection shape")?;
        }
        for c in &cellular {
            check(&c.raw, "cellular raw projection shape")?;
            check(&c.augmented, "cellular augmented projection shape")?;
        }

        let mut anchor = linalg::zeros_matrix::<T>(n, d);
        for (_, rows) in &molecular {
            for (acc, row) in anchor.iter_mut().zip(rows) {
                linalg::axpy(T::one(), row, acc);
            }
        }
        Ok(ProjectedBatch { molecular, cellular, anchor })
    }
}

/// Value and gradients of [`sca_loss`]. Gradient layout mirrors
/// [`ProjectedBatch`]: one matrix for the anchor (the caller fans it out to
/// each molecular projection, since the anchor is their sum) and one matrix
/// per cellular view.
#[derive(Clone, Debug)]
pub struct ScaLoss<T> {
    pub loss: T,
    pub infonce: T,
    pub vicreg: T,
    pub vicreg_components: VicRegComponents<T>,
    pub grad_anchor: Vec<Vec<T>>,
    pub grad_cellular_raw: Vec<Vec<Vec<T>>>,
    pub grad_cellular_augmented: Vec<Vec<Vec<T>>>,
}

/// Combined alignment loss: mean InfoNCE of (anchor, raw context projection)
/// plus mean VICReg-style regularization of (raw, augmented), each averaged
/// over the context modalities present.
pub fn sca_loss<T: Scalar>(batch: &ProjectedBatch<T>, config: &ScaConfig) -> Result<ScaLoss<T>> {
    if batch.cellular.is_empty() {
        return Err(Error::NoSuchModalities("batch has no cellular projections"));
    }
    let n = batch.anchor.len();
    let d = batch.anchor.first().map_or(0, Vec::len);
    let share = T::one() / T::of_usize(batch.cellular.len());
    let tau = T::of_f64(config.tau);

    let mut out = ScaLoss {
        loss: T::zero(),
        infonce: T::zero(),
        vicreg: T::zero(),
        vicreg_components: VicRegComponents::default(),
        grad_anchor: linalg::zeros_matrix(n, d),
        grad_cellular_raw: batch.cellular.iter().map(|_| linalg::zeros_matrix(n, d)).collect(),
        grad_cellular_augmented: batch
            .cellular
            .iter()
            .map(|_| linalg::zeros_matrix(n, d))
            .collect(),
    };

    for (c_idx, cellular) in batch.cellular.iter().enumerate() {
        if config.infonce_enabled {
            let nce = info_nce(&batch.anchor, &cellular.raw, tau)?;
            out.infonce = out.infonce + nce.loss * share;
            for (acc, g) in out.grad_anchor.iter_mut().zip(&nce.grad_anchors) {
                linalg::axpy(share, g, acc);
            }
            for (acc, g) in out.grad_cellular_raw[c_idx].iter_mut().zip(&nce.grad_positives) {
                linalg::axpy(share, g, acc);
            }
        }
        if config.vicreg_enabled {
            let vr = vicreg(&cellular.raw, &cellular.augmented)?;
            out.vicreg = out.vicreg + vr.loss * share;
            out.vicreg_components.invariance =
                out.vicreg_components.invariance + vr.components.invariance * share;
            out.vicreg_components.variance =
                out.vicreg_components.variance + vr.components.variance * share;
            out.vicreg_components.covariance =
                out.vicreg_components.covariance + vr.components.covariance * share;
            for (acc, g) in out.grad_cellular_raw[c_idx].iter_mut().zip(&vr.grad_z) {
                linalg::axpy(share, g, acc);
            }
            for (acc, g) in out.grad_cellular_augmented[c_idx].iter_mut().zip(&vr.grad_zp) {
                linalg::axpy(share, g, acc);
            }
        }
    }
    out.loss = out.infonce + out.vicreg;
    Ok(out)
}
