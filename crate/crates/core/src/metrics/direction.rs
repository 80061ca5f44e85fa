use crate::error::{Error, Result};
use crate::ndcore::{dot, Matrix};

const POWER_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 100_000;
/// Relative eigengap below which the top axis is reported as degenerate.
pub const DEGENERATE_GAP: f64 = 1e-6;

/// Top principal axis of a point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalDirection {
    /// Unit vector; its first nonzero coordinate is positive.
    pub direction: Vec<f64>,
    pub eigenvalue: f64,
    /// `(λ1 − λ2) / λ1`.
    pub relative_gap: f64,
    pub degenerate: bool,
}

impl PrincipalDirection {
    /// `|cos|` of the angle between the axis and `reference`.
    pub fn alignment(&self, reference: &[f64]) -> Result<f64> {
        alignment(&self.direction, reference)
    }
}

/// `|cos|` of the angle between two nonzero vectors.
pub fn alignment(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape("alignment", "vector lengths differ"));
    }
    let (na, nb) = (dot(a, a).sqrt(), dot(b, b).sqrt());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidArgument("alignment of a zero vector".into()));
    }
    Ok((dot(a, b) / (na * nb)).abs().min(1.0))
}

fn normalize_signed(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n == 0.0 {
        return 0.0;
    }
    let sign = match v.iter().find(|x| **x != 0.0) {
        Some(x) if *x < 0.0 => -1.0,
        _ => 1.0,
    };
    v.iter_mut().for_each(|x| *x *= sign / n);
    n
}

fn mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    m.iter_rows().map(|r| dot(r, v)).collect()
}

/// Power iteration on a symmetric PSD matrix. Returns `(eigenvalue, vector)`.
fn power_iteration(m: &Matrix) -> (f64, Vec<f64>) {
    let d = m.cols();
    // fixed low-discrepancy start, unlikely to be orthogonal to the top axis
    let mut v: Vec<f64> = (0..d).map(|i| ((i as f64 + 1.0) * 0.618_033_988_749_895).fract() + 0.5).collect();
    normalize_signed(&mut v);
    for _ in 0..MAX_ITERS {
        let mut next = mat_vec(m, &v);
        if normalize_signed(&mut next) == 0.0 {
            return (0.0, v);
        }
        let delta: f64 = next.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        v = next;
        if delta < POWER_TOL {
            break;
        }
    }
    (dot(&v, &mat_vec(m, &v)), v)
}

/// Top eigenvector of the mean-centred covariance of `features`.
pub fn principal_direction(features: &Matrix) -> Result<PrincipalDirection> {
    let cov = features.covariance()?;
    if cov.data().iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidArgument("features have zero variance".into()));
    }
    let (l1, v1) = power_iteration(&cov);
    let d = cov.cols();
    let l2 = if d > 1 {
        let mut deflated = cov.clone();
        for i in 0..d {
            for j in 0..d {
                deflated.set(i, j, cov.get(i, j) - l1 * v1[i] * v1[j]);
            }
        }
        power_iteration(&deflated).0.max(0.0)
    } else {
        0.0
    };
    let relative_gap = (l1 - l2) / l1;
    Ok(PrincipalDirection {
        direction: v1,
        eigenvalue: l1,
        relative_gap,
        degenerate: relative_gap < DEGENERATE_GAP,
    })
}
