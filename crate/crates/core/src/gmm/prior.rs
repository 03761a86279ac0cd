use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result};

/// Dirichlet + Normal–Wishart prior hyperparameters for `K` components in
/// `D` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmPrior {
    alpha0: DVector<f64>,
    lambda0: DVector<f64>,
    m0: DMatrix<f64>,
    w0: DMatrix<f64>,
    w0_inv: DMatrix<f64>,
    log_det_w0: f64,
    nu0: f64,
}

impl GmmPrior {
    /// Validates and caches `W0⁻¹` and `ln |W0|`.
    pub fn new(
        alpha0: DVector<f64>,
        lambda0: DVector<f64>,
        m0: DMatrix<f64>,
        w0: DMatrix<f64>,
        nu0: f64,
    ) -> Result<Self> {
        let k = alpha0.len();
        let d = m0.nrows();
        if k == 0 {
            return Err(Error::InvalidParameter("prior needs at least one component".into()));
        }
        if lambda0.len() != k {
            return Err(Error::DimensionMismatch {
                context: "prior lambda0",
                expected: k,
                found: lambda0.len(),
            });
        }
        if m0.ncols() != k {
            return Err(Error::DimensionMismatch {
                context: "prior m0 columns",
                expected: k,
                found: m0.ncols(),
            });
        }
        if w0.nrows() != d || w0.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "prior W0",
                expected: d,
                found: w0.nrows(),
            });
        }
        if let Some(a) = alpha0.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha0 entries must be > 0, got {a}")));
        }
        if let Some(l) = lambda0.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda0 entries must be > 0, got {l}")));
        }
        if m0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prior m0"));
        }
        if !(nu0 > d as f64 - 1.0) || !nu0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "nu0 must exceed D - 1 = {}, got {nu0}",
                d as f64 - 1.0
            )));
        }
        let chol = linalg::cholesky(&w0, "prior W0")?;
        let log_det_w0 = linalg::log_det_chol(&chol);
        let w0_inv = linalg::symmetrize(&chol.inverse());
        Ok(Self {
            alpha0,
            lambda0,
            m0,
            w0,
            w0_inv,
            log_det_w0,
            nu0,
        })
    }

    pub fn k(&self) -> usize {
        self.alpha0.len()
    }

    pub fn dim(&self) -> usize {
        self.m0.nrows()
    }

    pub fn alpha0(&self) -> &DVector<f64> {
        &self.alpha0
    }

    pub fn lambda0(&self) -> &DVector<f64> {
        &self.lambda0
    }

    pub fn m0(&self) -> &DMatrix<f64> {
        &self.m0
    }

    pub fn w0(&self) -> &DMatrix<f64> {
        &self.w0
    }

    pub fn w0_inv(&self) -> &DMatrix<f64> {
        &self.w0_inv
    }

    pub fn log_det_w0(&self) -> f64 {
        self.log_det_w0
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    /// Reorder the per-component entries: component `i` of the result is
    /// component `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let alpha0 = DVector::from_iterator(perm.len(), perm.iter().map(|&p| self.alpha0[p]));
        let lambda0 = DVector::from_iterator(perm.len(), perm.iter().map(|&p| self.lambda0[p]));
        let m0 = DMatrix::from_columns(&perm.iter().map(|&p| self.m0.column(p)).collect::<Vec<_>>());
        Self {
            alpha0,
            lambda0,
            m0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vec(Vec<f64>),
}

impl ScalarOrVec {
    fn broadcast(&self, k: usize, name: &str) -> Result<DVector<f64>> {
        match self {
            ScalarOrVec::Scalar(v) => Ok(DVector::from_element(k, *v)),
            ScalarOrVec::Vec(v) if v.len() == k => Ok(DVector::from_column_slice(v)),
            ScalarOrVec::Vec(v) => Err(Error::InvalidParameter(format!(
                "{name} has {} entries, expected 1 or {k}",
                v.len()
            ))),
        }
    }
}

/// Prior mean: one `D`-vector shared by all components, or one per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeanSpec {
    Shared(Vec<f64>),
    PerComponent(Vec<Vec<f64>>),
}

/// Wishart scale: a scalar multiple of the identity or a full matrix (rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    ScaledIdentity(f64),
    Full(Vec<Vec<f64>>),
}

/// Partially specified prior; omitted fields take data-driven defaults.
///
/// Defaults: `alpha = 1/k`, `lambda = 1`, `m` = column means of the data,
/// `w = I`, `nu = D + 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmPriorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<ScalarOrVec>,
    #[serde(default, skip_serializing_if = "Option::is_none", alias = "beta")]
    pub lambda: Option<ScalarOrVec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<MeanSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none", alias = "v")]
    pub nu: Option<f64>,
}

impl GmmPriorSpec {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha: Some(ScalarOrVec::Scalar(alpha)),
            ..Self::default()
        }
    }

    pub fn resolve(&self, data: &DMatrix<f64>, k: usize) -> Result<GmmPrior> {
        let d = data.ncols();
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        let alpha0 = match &self.alpha {
            Some(a) => a.broadcast(k, "alpha")?,
            None => DVector::from_element(k, 1.0 / k as f64),
        };
        let lambda0 = match &self.lambda {
            Some(l) => l.broadcast(k, "lambda")?,
            None => DVector::from_element(k, 1.0),
        };
        let m0 = match &self.m {
            None => {
                if data.nrows() == 0 {
                    return Err(Error::Empty("cannot default prior mean without data".into()));
                }
                let means = column_means(data);
                DMatrix::from_fn(d, k, |i, _| means[i])
            }
            Some(MeanSpec::Shared(v)) => {
                check_len(v.len(), d, "prior m")?;
                DMatrix::from_fn(d, k, |i, _| v[i])
            }
            Some(MeanSpec::PerComponent(cols)) => {
                check_len(cols.len(), k, "prior m components")?;
                for c in cols {
                    check_len(c.len(), d, "prior m")?;
                }
                DMatrix::from_fn(d, k, |i, j| cols[j][i])
            }
        };
        let w0 = match &self.w {
            None => DMatrix::identity(d, d),
            Some(MatrixSpec::ScaledIdentity(s)) => DMatrix::identity(d, d) * *s,
            Some(MatrixSpec::Full(rows)) => {
                check_len(rows.len(), d, "prior W rows")?;
                for r in rows {
                    check_len(r.len(), d, "prior W columns")?;
                }
                DMatrix::from_fn(d, d, |i, j| rows[i][j])
            }
        };
        let nu0 = self.nu.unwrap_or(d as f64 + 1.0);
        GmmPrior::new(alpha0, lambda0, m0, w0, nu0)
    }
}

fn check_len(found: usize, expected: usize, context: &'static str) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

pub(crate) fn column_means(data: &DMatrix<f64>) -> Vec<f64> {
    let n = data.nrows() as f64;
    (0..data.ncols())
        .map(|j| {
            let mut s = 0.0;
            for i in 0..data.nrows() {
                s += data[(i, j)];
            }
            s / n
        })
        .collect()
}
