//! Dense 4×4 helpers for the Gaussian mixtures.

use crate::Scalar;

pub type Vec4<T> = [T; 4];
pub type Mat4<T> = [[T; 4]; 4];

pub fn identity<T: Scalar>() -> Mat4<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { T::one() } else { T::zero() }))
}

pub fn trace<T: Scalar>(m: &Mat4<T>) -> T {
    (0..4).fold(T::zero(), |acc, i| acc + m[i][i])
}

/// Lower-triangular `L` with `L·Lᵀ = m`, or `None` if `m` is not positive definite.
pub fn cholesky<T: Scalar>(m: &Mat4<T>) -> Option<Mat4<T>> {
    let mut l = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s = s - l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > T::zero()) {
                    return None;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solves `L·y = b` by forward substitution.
pub fn forward_solve<T: Scalar>(l: &Mat4<T>, b: &Vec4<T>) -> Vec4<T> {
    let mut y = [T::zero(); 4];
    for i in 0..4 {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    y
}

pub fn lower_mul<T: Scalar>(l: &Mat4<T>, z: &Vec4<T>) -> Vec4<T> {
    std::array::from_fn(|i| (0..=i).fold(T::zero(), |acc, k| acc + l[i][k] * z[k]))
}

pub fn log_det_from_cholesky<T: Scalar>(l: &Mat4<T>) -> T {
    (0..4).fold(T::zero(), |acc, i| acc + l[i][i].ln()) * T::lit(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let m = [
            [4.0, 2.0, 0.4, 0.0],
            [2.0, 5.0, 1.0, 0.3],
            [0.4, 1.0, 3.0, 0.2],
            [0.0, 0.3, 0.2, 2.0],
        ];
        let l = cholesky(&m).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let v: f64 = (0..4).map(|k| l[i][k] * l[j][k]).sum();
                assert!((v - m[i][j]).abs() < 1e-12);
            }
        }
        let b = [1.0, -2.0, 0.5, 3.0];
        let y = forward_solve(&l, &b);
        let back = lower_mul(&l, &y);
        for i in 0..4 {
            assert!((back[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut m: Mat4<f64> = identity();
        m[2][2] = -1.0;
        assert!(cholesky(&m).is_none());
    }
}
