//! Ensemble complexity parameter `Y - Y0` and the rescaled evolution
//! parameter `Lambda`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::math;

/// Normalization of the QREM closed form, echoed into output records.
pub const QREM_PREFACTOR: &str = "1/(2(N+1)gamma)";

/// What `M` counts in the generic formula.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterCount {
    /// All independent entries, `N (N + 1) / 2`.
    #[default]
    AllEntries,
    /// Only entries whose mean or variance differs from the initial tables.
    Evolving,
}

/// `Y - Y0` for uncorrelated real-symmetric Gaussian ensembles given current
/// and initial tables of variances and means. Entries whose variance (or
/// mean) is unchanged contribute nothing to the corresponding term; zero
/// means do not participate in the mean term.
pub fn y_generic(
    v: &Matrix,
    b: &Matrix,
    v0: &Matrix,
    b0: &Matrix,
    gamma: f64,
    beta: u8,
    count: ParameterCount,
) -> Result<f64> {
    if beta != 1 {
        return Err(invalid("beta", "only real symmetric ensembles are supported"));
    }
    if !(gamma > 0.0) {
        return Err(invalid("gamma", "must be positive"));
    }
    let n = v.rows();
    for t in [v, b, v0, b0] {
        if t.rows() != n || t.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: t.rows().max(t.cols()),
            });
        }
    }
    let var_term = |g: f64, x: f64, row: usize, col: usize| -> Result<f64> {
        let d = math::abs(g - 2.0 * gamma * x);
        if d <= f64::EPSILON * g {
            return Err(Error::SingularComplexityTerm { row, col });
        }
        Ok(math::ln(d))
    };
    let mean_term = |x: f64| if x == 0.0 { 0.0 } else { 2.0 * math::ln(math::abs(x)) };
    let mut sum = 0.0;
    let mut evolving = 0usize;
    for i in 0..n {
        for j in i..n {
            let g = if i == j { 2.0 } else { 1.0 };
            let (vc, vi) = (v[(i, j)], v0[(i, j)]);
            let (bc, bi) = (b[(i, j)], b0[(i, j)]);
            let mut moved = false;
            if vc != vi {
                sum += var_term(g, vc, i, j)? - var_term(g, vi, i, j)?;
                moved = true;
            }
            if bc != bi {
                sum += mean_term(bc) - mean_term(bi);
                moved = true;
            }
            evolving += moved as usize;
        }
    }
    let m = match count {
        ParameterCount::AllEntries => n * (n + 1) / 2,
        ParameterCount::Evolving => evolving,
    };
    if m == 0 {
        return Ok(0.0);
    }
    Ok(-sum / (2.0 * m as f64 * gamma))
}

/// Closed form of `Y - Y0` for the QREM started from `b = 0`.
pub fn y_qrem(b: f64, l: usize, gamma: f64) -> Result<f64> {
    if !(b >= 0.0) {
        return Err(invalid("b", "must be non-negative"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid("gamma", "must lie in (0, 1)"));
    }
    if b == 0.0 {
        return Ok(0.0);
    }
    let n = (1u64 << l) as f64;
    let mut s = 0.0;
    for r in 0..l {
        let x = (1u64 << r) as f64 / b;
        s += math::ln(math::abs(1.0 - 2.0 * gamma / (1.0 + x * x)));
    }
    Ok(-s / (2.0 * (n + 1.0) * gamma))
}

/// Large-`L` form of `Y - Y0` for the random-field Heisenberg chain, relative
/// to `(h0, D0)`.
pub fn y_rfhm(h: f64, d: f64, h0: f64, d0: f64, gamma: f64) -> Result<f64> {
    for (name, x) in [("h", h), ("D", d), ("h0", h0), ("D0", d0), ("gamma", gamma)] {
        if !(x > 0.0) || !x.is_finite() {
            return Err(invalid(name, "must be positive and finite"));
        }
    }
    let ratio = math::ln(h0 / h);
    Ok((4.0 * ratio + math::ln(d / d0)) / gamma)
}

/// Empirical `chi_0` forms: `Lambda = (Y - Y0) Delta_e^a Omega_e^b / <I2>^c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Chi0Recipe {
    #[serde(rename = "QREM_mean")]
    QremMean,
    #[serde(rename = "QREM_var")]
    QremVar,
    #[serde(rename = "RFHM_both")]
    RfhmBoth,
    #[serde(rename = "custom")]
    Custom { a: f64, b: f64, c: f64 },
}

impl Chi0Recipe {
    /// `(a, b, c)`.
    pub fn exponents(self) -> (f64, f64, f64) {
        match self {
            Chi0Recipe::QremMean => (-1.0, 2.0, 1.0),
            Chi0Recipe::QremVar => (-2.4, 2.0, 0.0),
            Chi0Recipe::RfhmBoth => (1.1, 3.5, 0.0),
            Chi0Recipe::Custom { a, b, c } => (a, b, c),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Chi0Recipe::QremMean => "QREM_mean",
            Chi0Recipe::QremVar => "QREM_var",
            Chi0Recipe::RfhmBoth => "RFHM_both",
            Chi0Recipe::Custom { .. } => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "QREM_mean" => Some(Chi0Recipe::QremMean),
            "QREM_var" => Some(Chi0Recipe::QremVar),
            "RFHM_both" => Some(Chi0Recipe::RfhmBoth),
            _ => None,
        }
    }

    /// Model the recipe was calibrated for, if any.
    pub fn model(self) -> Option<&'static str> {
        match self {
            Chi0Recipe::QremMean | Chi0Recipe::QremVar => Some("QREM"),
            Chi0Recipe::RfhmBoth => Some("RFHM"),
            Chi0Recipe::Custom { .. } => None,
        }
    }
}

/// Inputs of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointInputs {
    pub y_minus_y0: f64,
    pub delta_e: f64,
    pub omega_e: f64,
    pub ipr_paper: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityPoint {
    pub y_minus_y0: f64,
    pub delta_e: f64,
    pub omega_e: f64,
    pub ipr_paper: f64,
    pub chi0_recipe: Chi0Recipe,
    pub lambda: f64,
    pub n_lambda: f64,
    /// `(Y - Y0) / Delta_e^2`.
    pub lambda_e: f64,
    /// Set when the recipe was calibrated for another model.
    pub recipe_mismatch: bool,
}

pub fn lambda_psi(inputs: PointInputs, recipe: Chi0Recipe, model: Option<&str>) -> Result<ComplexityPoint> {
    let PointInputs {
        y_minus_y0: y,
        delta_e,
        omega_e,
        ipr_paper,
        n,
    } = inputs;
    if !(delta_e > 0.0) {
        return Err(invalid("delta_e", "must be positive"));
    }
    let floor = 1.0 / n as f64;
    if !(omega_e >= floor * (1.0 - 1e-12) && omega_e <= 1.0) {
        return Err(invalid("omega_e", "must lie in [1/N, 1]"));
    }
    if !(y >= 0.0) {
        return Err(invalid("y_minus_y0", "must be non-negative"));
    }
    let (a, b, c) = recipe.exponents();
    if c != 0.0 && !(ipr_paper > 0.0) {
        return Err(invalid("ipr_paper", "must be positive for this recipe"));
    }
    let lambda = if y == 0.0 {
        0.0
    } else {
        y * math::powf(delta_e, a) * math::powf(omega_e, b) / math::powf(ipr_paper, c)
    };
    let recipe_mismatch = match (recipe.model(), model) {
        (Some(r), Some(m)) => r != m,
        _ => false,
    };
    Ok(ComplexityPoint {
        y_minus_y0: y,
        delta_e,
        omega_e,
        ipr_paper,
        chi0_recipe: recipe,
        lambda,
        n_lambda: n as f64 * lambda,
        lambda_e: y / (delta_e * delta_e),
        recipe_mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::qrem_tables;

    #[test]
    fn qrem_hand_value() {
        let y = y_qrem(1.0, 2, 0.5).unwrap();
        let expect = (2.0f64.ln() + 1.25f64.ln()) / 5.0;
        assert!((y - expect).abs() < 1e-15);
        assert!((y - 0.18326).abs() < 1e-5);
        assert_eq!(y_qrem(0.0, 8, 0.5).unwrap(), 0.0);
        assert_eq!(y_qrem(f64::INFINITY, 4, 0.5).unwrap(), f64::INFINITY);
    }

    #[test]
    fn rfhm_values() {
        assert_eq!(y_rfhm(1.0, 1.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert!((y_rfhm(1.0, 1.0, 10.0, 1.0, 1.0).unwrap() - 1e4f64.ln()).abs() < 1e-12);
        assert!((y_rfhm(10.0, 2.0, 10.0, 1.0, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(y_rfhm(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn generic_matches_qrem() {
        for &(l, b) in &[(2usize, 1.0), (4, 0.7), (5, 3.0)] {
            let (m, v) = qrem_tables(l, b);
            let (m0, v0) = qrem_tables(l, 0.0);
            let y = y_generic(&v, &m, &v0, &m0, 0.5, 1, ParameterCount::AllEntries).unwrap();
            let expect = y_qrem(b, l, 0.5).unwrap();
            assert!((y - expect).abs() < 1e-13, "{y} vs {expect}");
        }
    }

    #[test]
    fn generic_identity_and_singularity() {
        let (m, v) = qrem_tables(3, 2.0);
        assert_eq!(
            y_generic(&v, &m, &v, &m, 0.5, 1, ParameterCount::Evolving).unwrap(),
            0.0
        );
        let (m0, v0) = qrem_tables(3, 0.0);
        let (_, vinf) = qrem_tables(3, f64::INFINITY);
        assert!(matches!(
            y_generic(&vinf, &m, &v0, &m0, 0.5, 1, ParameterCount::AllEntries),
            Err(Error::SingularComplexityTerm { .. })
        ));
    }

    #[test]
    fn recipes() {
        let base = PointInputs {
            y_minus_y0: 0.18,
            delta_e: 0.01,
            omega_e: 0.5,
            ipr_paper: 0.1,
            n: 1024,
        };
        let p = lambda_psi(base, Chi0Recipe::QremMean, Some("QREM")).unwrap();
        assert!((p.lambda - 45.0).abs() < 1e-9);
        assert_eq!(p.n_lambda, 1024.0 * p.lambda);
        assert!(!p.recipe_mismatch);
        let r = PointInputs {
            y_minus_y0: 9.2103,
            delta_e: 0.1,
            ..base
        };
        let p = lambda_psi(r, Chi0Recipe::RfhmBoth, Some("QREM")).unwrap();
        assert!((p.lambda - 0.0647).abs() < 5e-5);
        assert!(p.recipe_mismatch);
        for recipe in [Chi0Recipe::QremMean, Chi0Recipe::QremVar, Chi0Recipe::RfhmBoth] {
            let zero = PointInputs {
                y_minus_y0: 0.0,
                ..base
            };
            assert_eq!(lambda_psi(zero, recipe, None).unwrap().lambda, 0.0);
        }
        let bad = PointInputs { omega_e: 1e-4, ..base };
        assert!(lambda_psi(bad, Chi0Recipe::QremVar, None).is_err());
    }
}
