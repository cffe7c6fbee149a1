use nalgebra::DMatrix;

/// A root counts as outside the unit circle only if its modulus exceeds
/// `1 + ROOT_TOLERANCE`.
pub const ROOT_TOLERANCE: f64 = 1e-8;

/// Whether a polynomial acts on lags (`L`) or leads (`L^{-1}`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Backward,
    Forward,
}

/// `1 - c_1 z - ... - c_k z^k`, applied to lags or leads.
#[derive(Debug, Clone, PartialEq)]
pub struct LagPolynomial {
    coeffs: Vec<f64>,
    direction: Direction,
}

impl LagPolynomial {
    pub fn new(coeffs: Vec<f64>, direction: Direction) -> Self {
        Self { coeffs, direction }
    }

    pub fn backward(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs, Direction::Backward)
    }

    pub fn forward(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs, Direction::Forward)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Root moduli of `1 - c_1 z - ... - c_k z^k`.
    pub fn root_moduli(&self) -> Vec<f64> {
        root_moduli(&self.coeffs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub stationary: bool,
    pub root_moduli: Vec<f64>,
}

/// Moduli of the roots of `1 - c_1 z - ... - c_k z^k`, via the eigenvalues of
/// the companion matrix of the reciprocal polynomial (the eigenvalues are the
/// inverse roots). A zero eigenvalue is a root at infinity.
pub fn root_moduli(coeffs: &[f64]) -> Vec<f64> {
    let k = coeffs.len();
    match k {
        0 => Vec::new(),
        1 => vec![1.0 / coeffs[0].abs()],
        _ => {
            let mut c = DMatrix::<f64>::zeros(k, k);
            for (j, v) in coeffs.iter().enumerate() {
                c[(0, j)] = *v;
            }
            for i in 1..k {
                c[(i, i - 1)] = 1.0;
            }
            c.complex_eigenvalues()
                .iter()
                .map(|l| 1.0 / l.norm())
                .collect()
        }
    }
}

pub fn is_stationary_coeffs(coeffs: &[f64]) -> bool {
    root_moduli(coeffs).iter().all(|m| *m > 1.0 + ROOT_TOLERANCE)
}

pub fn check_stationarity(poly: &LagPolynomial) -> StationarityReport {
    let root_moduli = poly.root_moduli();
    StationarityReport {
        stationary: root_moduli.iter().all(|m| *m > 1.0 + ROOT_TOLERANCE),
        root_moduli,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_lead_coefficient() {
        let r = check_stationarity(&LagPolynomial::forward(vec![0.94]));
        assert!(r.stationary);
        assert!((r.root_moduli[0] - 1.0 / 0.94).abs() < 1e-12);
        assert!((r.root_moduli[0] - 1.0638).abs() < 1e-4);
    }

    #[test]
    fn explosive_and_empty() {
        assert!(!check_stationarity(&LagPolynomial::backward(vec![1.2])).stationary);
        assert!(check_stationarity(&LagPolynomial::backward(vec![])).stationary);
        assert!(!is_stationary_coeffs(&[1.0]));
        assert!(!is_stationary_coeffs(&[1.0 - 1e-12]));
    }

    #[test]
    fn order_two_factorization() {
        // (1 - 0.5z)(1 - 0.8z) = 1 - 1.3z + 0.4z^2
        let mut m = root_moduli(&[1.3, -0.4]);
        m.sort_by(f64::total_cmp);
        assert!((m[0] - 1.25).abs() < 1e-10 && (m[1] - 2.0).abs() < 1e-10);
        assert!(is_stationary_coeffs(&[1.3, -0.4]));
        // (1 - 0.5z)(1 - 1.1z)
        assert!(!is_stationary_coeffs(&[1.6, -0.55]));
    }
}
