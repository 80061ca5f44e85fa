//! Losses of the two-layer bias-free ReLU toy network `x ↦ relu(x·W1)·W2`.

use crate::error::{Error, Result};
use crate::ndcore::{Matrix, SeededRng};

#[derive(Debug, Clone, PartialEq)]
pub struct ToyGrads {
    pub w1: Matrix,
    pub w2: Matrix,
}

fn relu_forward(x: &Matrix, w1: &Matrix) -> Result<(Matrix, Matrix)> {
    let z = x.matmul(w1)?;
    let h = z.map(|v| v.max(0.0));
    Ok((z, h))
}

fn relu_gate(dh: &Matrix, z: &Matrix) -> Matrix {
    let mut dz = dh.clone();
    for (g, &zv) in dz.data_mut().iter_mut().zip(z.data()) {
        if zv <= 0.0 {
            *g = 0.0;
        }
    }
    dz
}

/// Mean over rows of `‖relu(x·W1)·W2 − y‖²`.
pub fn toy_sup_loss(w1: &Matrix, w2: &Matrix, x: &Matrix, y: &Matrix) -> Result<(f64, ToyGrads)> {
    if x.cols() != w1.rows() || w1.cols() != w2.rows() || y.cols() != w2.cols() || y.rows() != x.rows() {
        return Err(Error::shape(
            "toy_sup_loss",
            format!(
                "x {:?}, W1 {:?}, W2 {:?}, y {:?}",
                x.shape(),
                w1.shape(),
                w2.shape(),
                y.shape()
            ),
        ));
    }
    let n = x.rows().max(1) as f64;
    let (z, h) = relu_forward(x, w1)?;
    let resid = h.matmul(w2)?.sub(y)?;
    let loss = resid.norm_sq() / n;
    let dout = resid.scale(2.0 / n);
    let gw2 = h.t_matmul(&dout)?;
    let dz = relu_gate(&dout.matmul_t(w2)?, &z);
    let gw1 = x.t_matmul(&dz)?;
    Ok((loss, ToyGrads { w1: gw1, w2: gw2 }))
}

/// Mean over rows of `‖relu((x + ε)·W1) − relu((x + ε′)·W1)‖²` for given perturbations.
/// Gradient flows through both branches.
pub fn toy_ssl_loss_with_noise(w1: &Matrix, x: &Matrix, eps1: &Matrix, eps2: &Matrix) -> Result<(f64, Matrix)> {
    if x.cols() != w1.rows() {
        return Err(Error::shape(
            "toy_ssl_loss",
            format!("x {:?}, W1 {:?}", x.shape(), w1.shape()),
        ));
    }
    let x1 = x.add(eps1)?;
    let x2 = x.add(eps2)?;
    let (z1, h1) = relu_forward(&x1, w1)?;
    let (z2, h2) = relu_forward(&x2, w1)?;
    let n = x.rows().max(1) as f64;
    let d = h1.sub(&h2)?;
    let loss = d.norm_sq() / n;
    let dh = d.scale(2.0 / n);
    let g1 = x1.t_matmul(&relu_gate(&dh, &z1))?;
    let g2 = x2.t_matmul(&relu_gate(&dh.scale(-1.0), &z2))?;
    Ok((loss, g1.add(&g2)?))
}

/// [`toy_ssl_loss_with_noise`] with `ε, ε′ ~ N(0, sigma²·I)` drawn from `rng`.
pub fn toy_ssl_loss(w1: &Matrix, x: &Matrix, rng: &mut SeededRng, sigma: f64) -> Result<(f64, Matrix)> {
    let (eps1, eps2) = toy_perturbations(x.rows(), x.cols(), rng, sigma)?;
    toy_ssl_loss_with_noise(w1, x, &eps1, &eps2)
}

/// Two independent Gaussian perturbation matrices.
pub fn toy_perturbations(rows: usize, cols: usize, rng: &mut SeededRng, sigma: f64) -> Result<(Matrix, Matrix)> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be > 0, got {sigma}")));
    }
    let mut draw = || Matrix::new(rows, cols, (0..rows * cols).map(|_| sigma * rng.normal()).collect());
    let a = draw()?;
    let b = draw()?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictor_has_zero_loss() {
        let w1 = Matrix::identity(2);
        let w2 = Matrix::identity(2);
        let x = Matrix::from_rows(&[[1.0, 2.0], [0.5, 0.0]]).unwrap();
        let (l, g) = toy_sup_loss(&w1, &w2, &x, &x).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.w1.data().iter().chain(g.w2.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn zero_weights_give_mean_target_norm() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [0.5, 0.0]]).unwrap();
        let y = Matrix::from_rows(&[[1.0, 0.0], [0.0, 3.0]]).unwrap();
        let (l, _) = toy_sup_loss(&Matrix::zeros(2, 3), &Matrix::zeros(3, 2), &x, &y).unwrap();
        assert!((l - 5.0).abs() < 1e-15);
    }

    #[test]
    fn ssl_collapse_point_and_small_noise() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, -1.0]]).unwrap();
        let mut rng = SeededRng::new(4);
        let (l0, _) = toy_ssl_loss(&Matrix::zeros(2, 2), &x, &mut rng, 0.5).unwrap();
        assert_eq!(l0, 0.0);
        let (small, _) = toy_ssl_loss(&Matrix::identity(2), &x, &mut rng, 1e-6).unwrap();
        assert!(small < 1e-10);
        assert!(toy_ssl_loss(&Matrix::identity(2), &x, &mut rng, 0.0).is_err());
    }

    #[test]
    fn dims_are_checked() {
        let x = Matrix::zeros(2, 3);
        assert!(toy_sup_loss(&Matrix::zeros(2, 2), &Matrix::zeros(2, 1), &x, &Matrix::zeros(2, 1)).is_err());
    }
}
