use nalgebra::Matrix3;

use crate::error::{Error, Result};

/// Polar factors `A = R₀ S` and the eigenvalue shifts of `S = √(AᵀA)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarData {
    pub a: Matrix3<f64>,
    pub r0: Matrix3<f64>,
    pub s: Matrix3<f64>,
    /// Eigenvalues of `S`, ascending.
    pub alpha: [f64; 3],
    /// `αᵢ − 1`.
    pub lambda_shifts: [f64; 3],
    /// `Σ (αᵢ − 1)`.
    pub lambda_sum: f64,
    /// `Σ (αᵢ − 1)²`, the squared distance of `A` to SO(3).
    pub lambda_sq: f64,
    pub det_a: f64,
}

impl PolarData {
    /// `1 + λ + ½(λ² − Λ²) + λ₁λ₂λ₃`, equal to `det A`.
    pub fn det_from_shifts(&self) -> f64 {
        let l = self.lambda_sum;
        let [l1, l2, l3] = self.lambda_shifts;
        1.0 + l + 0.5 * (l * l - self.lambda_sq) + l1 * l2 * l3
    }
}

/// Polar decomposition through the SVD `A = U Σ Vᵀ`: `R₀ = U Vᵀ`, `S = V Σ Vᵀ`.
pub fn polar_decompose(a: &Matrix3<f64>) -> Result<PolarData> {
    let det_a = a.determinant();
    if !(det_a > 0.0) {
        return Err(Error::OutOfRegime(format!(
            "det A = {det_a} is not positive"
        )));
    }
    let svd = a.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let sigma = svd.singular_values;
    let r0 = u * v_t;
    let s = v_t.transpose() * Matrix3::from_diagonal(&sigma) * v_t;
    let mut alpha = [sigma[0], sigma[1], sigma[2]];
    alpha.sort_by(f64::total_cmp);
    let lambda_shifts = alpha.map(|a| a - 1.0);
    Ok(PolarData {
        a: *a,
        r0,
        s,
        alpha,
        lambda_shifts,
        lambda_sum: lambda_shifts.iter().sum(),
        lambda_sq: lambda_shifts.iter().map(|l| l * l).sum(),
        det_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let p = polar_decompose(&Matrix3::identity()).unwrap();
        assert!((p.r0 - Matrix3::identity()).norm() < 1e-15);
        assert!(p.lambda_sq.abs() < 1e-30);

        let a = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.1, 1.0, 1.0));
        let p = polar_decompose(&a).unwrap();
        assert!((p.r0 - Matrix3::identity()).norm() < 1e-15);
        assert!((p.lambda_sq - 0.01).abs() < 1e-15);
        assert!((p.lambda_sum - 0.1).abs() < 1e-15);
        assert_eq!(p.alpha[2], p.alpha.iter().copied().fold(f64::MIN, f64::max));
    }

    #[test]
    fn negative_determinant_out_of_regime() {
        let reflection = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, -1.0));
        assert!(matches!(
            polar_decompose(&reflection),
            Err(Error::OutOfRegime(_))
        ));
        assert!(polar_decompose(&Matrix3::zeros()).is_err());
    }
}
