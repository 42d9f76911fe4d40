//! Estimates, covariance, selectors, and polyhedral deviation sets.
//!
//! All types validate their invariants on construction and are immutable
//! afterwards.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_probability, Error, Result, RowViolation};

/// Relative symmetry tolerance for covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Minimum ratio of smallest to largest covariance eigenvalue.
pub const PD_TOL: f64 = 1e-12;

fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NotFinite(what))
    }
}

fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

/// Stacked pre-registered and post estimates with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateVector {
    values: DVector<f64>,
    labels: Vec<String>,
}

impl EstimateVector {
    pub fn new(values: DVector<f64>, labels: Vec<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("estimate vector"));
        }
        check_finite(values.as_slice(), "estimate vector")?;
        check_dim("estimate labels", values.len(), labels.len())?;
        Ok(Self { values, labels })
    }

    /// Estimates labelled `b0`, `b1`, ...
    pub fn unlabeled(values: DVector<f64>) -> Result<Self> {
        let labels = (0..values.len()).map(|i| format!("b{i}")).collect();
        Self::new(values, labels)
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::unlabeled(DVector::from_column_slice(values))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A symmetric positive definite covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("covariance matrix"));
        }
        check_dim("covariance columns", entries.nrows(), entries.ncols())?;
        check_finite(entries.as_slice(), "covariance matrix")?;
        let scale = entries.amax();
        let tol = SYMMETRY_TOL * scale;
        let d = entries.nrows();
        for i in 0..d {
            for j in (i + 1)..d {
                let gap = (entries[(i, j)] - entries[(j, i)]).abs();
                if gap > tol {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        gap,
                        tol,
                    });
                }
            }
        }
        let eig = SymmetricEigen::new(entries.clone());
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max > 0.0 && min > PD_TOL * max) {
            return Err(Error::NotPositiveDefinite { min, max });
        }
        Ok(Self { entries })
    }

    /// Build from row-major entries of a `d x d` matrix.
    pub fn from_row_slice(d: usize, rows: &[f64]) -> Result<Self> {
        check_dim("covariance entries", d * d, rows.len())?;
        Self::new(DMatrix::from_row_slice(d, d, rows))
    }

    pub fn identity(d: usize) -> Self {
        Self {
            entries: DMatrix::identity(d, d),
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `w' S w`.
    pub fn quadratic_form(&self, w: &DVector<f64>) -> Result<f64> {
        check_dim("quadratic form", self.dim(), w.len())?;
        Ok((&self.entries * w).dot(w))
    }

    /// Multiply every entry by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "covariance scale factor {factor} must be positive"
            )));
        }
        Ok(Self {
            entries: &self.entries * factor,
        })
    }

    /// Symmetric square root `V diag(sqrt(lambda)) V'`.
    pub fn symmetric_sqrt(&self) -> DMatrix<f64> {
        let eig = SymmetricEigen::new(self.entries.clone());
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
    }
}

/// A nonzero linear-combination vector embedded in the full estimate space.
#[derive(Debug, Clone, PartialEq)]
pub struct Selector {
    weights: DVector<f64>,
}

impl Selector {
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        check_finite(weights.as_slice(), "selector")?;
        if weights.iter().all(|w| *w == 0.0) {
            return Err(Error::ZeroSelector);
        }
        Ok(Self { weights })
    }

    pub fn from_slice(w: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(w))
    }

    /// Unit vector `e_index` in dimension `d`.
    pub fn unit(d: usize, index: usize) -> Result<Self> {
        if index >= d {
            return Err(Error::DimensionMismatch {
                context: "unit selector index",
                expected: d,
                found: index,
            });
        }
        let mut w = DVector::zeros(d);
        w[index] = 1.0;
        Ok(Self { weights: w })
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim("selector application", self.dim(), x.len())?;
        Ok(self.weights.dot(x))
    }
}

/// `{x : A x <= c}` with nonzero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    a: DMatrix<f64>,
    c: DVector<f64>,
}

impl Polyhedron {
    /// `c` may contain `+inf` (a vacuous row) but not NaN.
    pub fn new(a: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::Empty("polyhedron constraint matrix"));
        }
        check_dim("polyhedron cutoff vector", a.nrows(), c.len())?;
        check_finite(a.as_slice(), "polyhedron constraint matrix")?;
        if c.iter().any(|v| v.is_nan()) {
            return Err(Error::NotFinite("polyhedron cutoff vector"));
        }
        for (j, row) in a.row_iter().enumerate() {
            if row.iter().all(|v| *v == 0.0) {
                return Err(Error::ZeroRow { row: j });
            }
        }
        Ok(Self { a, c })
    }

    /// Single half-space `{x : w'x <= c}`.
    pub fn half_space(w: &DVector<f64>, c: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_row_slice(1, w.len(), w.as_slice()),
            DVector::from_element(1, c),
        )
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    /// `c - A x`, componentwise.
    pub fn slack(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("polyhedron membership", self.dim(), x.len())?;
        Ok(&self.c - &self.a * x)
    }

    pub fn contains(&self, x: &DVector<f64>) -> Result<bool> {
        Ok(self.slack(x)?.iter().all(|s| *s >= 0.0))
    }

    /// Row-stack two polyhedra (their intersection).
    pub fn stack(&self, other: &Polyhedron) -> Result<Polyhedron> {
        check_dim("polyhedron intersection", self.dim(), other.dim())?;
        let m = self.rows() + other.rows();
        let a = DMatrix::from_fn(m, self.dim(), |i, j| {
            if i < self.rows() {
                self.a[(i, j)]
            } else {
                other.a[(i - self.rows(), j)]
            }
        });
        let c = DVector::from_iterator(m, self.c.iter().chain(other.c.iter()).copied());
        Ok(Polyhedron { a, c })
    }

    pub(crate) fn scaled_cutoffs(&self, factor: f64) -> Polyhedron {
        Polyhedron {
            a: self.a.clone(),
            c: &self.c * factor,
        }
    }
}

/// A union of polyhedra: the set of estimate realizations under which the
/// post estimate is reported.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationSet {
    polyhedra: Vec<Polyhedron>,
    provenance: String,
}

impl DeviationSet {
    pub fn new(polyhedra: Vec<Polyhedron>, provenance: impl Into<String>) -> Result<Self> {
        let first = polyhedra.first().ok_or(Error::Empty("deviation set"))?;
        let d = first.dim();
        for p in &polyhedra {
            check_dim("deviation set member", d, p.dim())?;
        }
        Ok(Self {
            polyhedra,
            provenance: provenance.into(),
        })
    }

    /// The whole space: the post estimate would be reported for any data.
    pub fn full(d: usize) -> Result<Self> {
        let mut w = DVector::zeros(d);
        if d == 0 {
            return Err(Error::Empty("deviation set dimension"));
        }
        w[0] = 1.0;
        Self::new(
            vec![Polyhedron::half_space(&w, f64::INFINITY)?],
            "unconditional reporting",
        )
    }

    pub fn polyhedra(&self) -> &[Polyhedron] {
        &self.polyhedra
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.polyhedra[0].dim()
    }

    /// True iff some polyhedron contains `x` (closed inequalities).
    pub fn contains(&self, x: &DVector<f64>) -> Result<bool> {
        check_dim("deviation membership", self.dim(), x.len())?;
        for p in &self.polyhedra {
            if p.contains(x)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Slack `c_k - A_k x` for every polyhedron.
    pub fn slacks(&self, x: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        self.polyhedra.iter().map(|p| p.slack(x)).collect()
    }

    /// Violated rows of the polyhedron that comes closest to containing `x`
    /// (fewest violated rows, then smallest total violation).
    pub fn violations(&self, x: &DVector<f64>) -> Result<Vec<RowViolation>> {
        let mut best: Option<(usize, f64, Vec<RowViolation>)> = None;
        for (k, s) in self.slacks(x)?.iter().enumerate() {
            let rows: Vec<RowViolation> = s
                .iter()
                .enumerate()
                .filter(|(_, v)| **v < 0.0)
                .map(|(j, v)| RowViolation {
                    polyhedron: k,
                    row: j,
                    slack: *v,
                })
                .collect();
            let total: f64 = rows.iter().map(|r| -r.slack).sum();
            let better = match &best {
                None => true,
                Some((n, t, _)) => rows.len() < *n || (rows.len() == *n && total < *t),
            };
            if better {
                best = Some((rows.len(), total, rows));
            }
        }
        Ok(best.map(|b| b.2).unwrap_or_default())
    }

    /// Scale every cutoff vector by `factor`.
    pub fn scaled_cutoffs(&self, factor: f64) -> Self {
        Self {
            polyhedra: self
                .polyhedra
                .iter()
                .map(|p| p.scaled_cutoffs(factor))
                .collect(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Direct membership evaluation of a deviation set.
pub fn deviation_membership(deviation: &DeviationSet, point: &DVector<f64>) -> Result<bool> {
    deviation.contains(point)
}

/// `l' S l`.
pub fn select_variance(covariance: &CovarianceMatrix, target: &Selector) -> Result<f64> {
    let v = covariance.quadratic_form(target.weights())?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonPositiveVariance(v))
    }
}

/// Decomposition `x = gamma * (l'x) + rhat` with `rhat` uncorrelated with `l'x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Residualization {
    /// `S l / (l' S l)`
    pub gamma: DVector<f64>,
    pub rhat: DVector<f64>,
    pub sigma_post: f64,
    /// `l' x`
    pub observed: f64,
}

impl Residualization {
    pub fn compute(
        values: &DVector<f64>,
        covariance: &CovarianceMatrix,
        target: &Selector,
    ) -> Result<Self> {
        check_dim("residualization estimates", covariance.dim(), values.len())?;
        check_dim("residualization target", covariance.dim(), target.dim())?;
        let sigma2 = select_variance(covariance, target)?;
        let gamma = covariance.entries() * target.weights() / sigma2;
        let observed = target.weights().dot(values);
        let rhat = values - &gamma * observed;
        Ok(Self {
            gamma,
            rhat,
            sigma_post: sigma2.sqrt(),
            observed,
        })
    }
}

/// Everything needed to correct one post estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceProblem {
    pub estimates: EstimateVector,
    pub covariance: CovarianceMatrix,
    pub target: Selector,
    pub deviation: DeviationSet,
    pub alpha: f64,
}

impl InferenceProblem {
    pub fn new(
        estimates: EstimateVector,
        covariance: CovarianceMatrix,
        target: Selector,
        deviation: DeviationSet,
        alpha: f64,
    ) -> Result<Self> {
        let d = estimates.dim();
        check_dim("covariance", d, covariance.dim())?;
        check_dim("target selector", d, target.dim())?;
        check_dim("deviation set", d, deviation.dim())?;
        check_probability("alpha", alpha)?;
        Ok(Self {
            estimates,
            covariance,
            target,
            deviation,
            alpha,
        })
    }

    pub fn with_deviation(&self, deviation: DeviationSet) -> Result<Self> {
        Self::new(
            self.estimates.clone(),
            self.covariance.clone(),
            self.target.clone(),
            deviation,
            self.alpha,
        )
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_probability("alpha", alpha)?;
        Ok(Self {
            alpha,
            ..self.clone()
        })
    }

    /// Fails with the offending rows when the estimates are outside the set.
    pub fn check_membership(&self) -> Result<()> {
        let x = self.estimates.values();
        if self.deviation.contains(x)? {
            Ok(())
        } else {
            Err(Error::NotInDeviationSet {
                violations: self.deviation.violations(x)?,
            })
        }
    }
}

pub fn residualize(problem: &InferenceProblem) -> Result<Residualization> {
    Residualization::compute(
        problem.estimates.values(),
        &problem.covariance,
        &problem.target,
    )
}
