//! Exact Gaussian-process regression with an optional non-zero prior mean
//! and the causal kernel `k_RBF(x, x') + σ(x)σ(x')`.
//!
//! Inputs are mapped from their domain box to the unit cube before the RBF
//! distance is taken, so lengthscales are in box units. Mean and σ functions
//! see the raw values.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::estimation::DoEffectSurface;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error("expected {expected}-dimensional input, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("covariance factorization failed after maximum jitter")]
    NumericalFailure,
    #[error("need at least {needed} training points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
}

/// Squared-exponential kernel `v·exp(−‖x−x'‖²/(2l²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rbf {
    pub lengthscale: f64,
    pub variance: f64,
}

impl Default for Rbf {
    fn default() -> Self {
        Rbf {
            lengthscale: 1.0,
            variance: 1.0,
        }
    }
}

impl Rbf {
    pub fn new(lengthscale: f64, variance: f64) -> Result<Rbf, GpError> {
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(GpError::InvalidHyperparameter(format!(
                "lengthscale {lengthscale}"
            )));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(GpError::InvalidHyperparameter(format!("variance {variance}")));
        }
        Ok(Rbf {
            lengthscale,
            variance,
        })
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        self.variance * (-d2 / (2.0 * self.lengthscale * self.lengthscale)).exp()
    }
}

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Kernel {
    Rbf(Rbf),
    /// RBF plus the rank-one term `σ(x)σ(x')`.
    Causal { base: Rbf, sigma: PointFn },
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Rbf(r) => f.debug_tuple("Rbf").field(r).finish(),
            Kernel::Causal { base, .. } => f.debug_struct("Causal").field("base", base).finish(),
        }
    }
}

impl Kernel {
    pub fn base(&self) -> Rbf {
        match self {
            Kernel::Rbf(r) | Kernel::Causal { base: r, .. } => *r,
        }
    }

    pub fn with_base(&self, base: Rbf) -> Kernel {
        match self {
            Kernel::Rbf(_) => Kernel::Rbf(base),
            Kernel::Causal { sigma, .. } => Kernel::Causal {
                base,
                sigma: Arc::clone(sigma),
            },
        }
    }

    /// σ at a raw input; 0 for the plain RBF.
    pub fn sigma(&self, x: &[f64]) -> f64 {
        match self {
            Kernel::Rbf(_) => 0.0,
            Kernel::Causal { sigma, .. } => sigma(x),
        }
    }

    /// Kernel value between two points, without unit scaling.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        self.base().eval(a, b) + self.sigma(a) * self.sigma(b)
    }

    /// Gram matrix over raw points (no unit scaling).
    pub fn gram(&self, points: &[Vec<f64>]) -> DMatrix<f64> {
        let s: Vec<f64> = points.iter().map(|p| self.sigma(p)).collect();
        let base = self.base();
        DMatrix::from_fn(points.len(), points.len(), |i, j| {
            base.eval(&points[i], &points[j]) + s[i] * s[j]
        })
    }
}

#[derive(Clone, Default)]
pub enum MeanFunction {
    #[default]
    Zero,
    Function(PointFn),
}

impl fmt::Debug for MeanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanFunction::Zero => f.write_str("Zero"),
            MeanFunction::Function(_) => f.write_str("Function"),
        }
    }
}

impl MeanFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            MeanFunction::Zero => 0.0,
            MeanFunction::Function(m) => m(x),
        }
    }
}

/// Prior mean and kernel derived from an effect surface: the surface mean,
/// and an RBF inflated by the surface's standard deviation.
pub fn causal_prior(surface: Arc<DoEffectSurface>, base: Rbf) -> (MeanFunction, Kernel) {
    let s = Arc::clone(&surface);
    let mean: PointFn = Arc::new(move |x| s.mean(x).unwrap_or(f64::NAN));
    let sigma: PointFn = Arc::new(move |x| surface.var(x).map_or(f64::NAN, f64::sqrt));
    (MeanFunction::Function(mean), Kernel::Causal { base, sigma })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub mean: f64,
    pub variance: f64,
}

impl Posterior {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// A training input with its cached prior quantities.
#[derive(Debug, Clone)]
struct TrainPoint {
    raw: Vec<f64>,
    unit: Vec<f64>,
    y: f64,
    prior_mean: f64,
    sigma: f64,
}

#[derive(Debug, Clone)]
struct Factor {
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    /// Jitter actually added to the diagonal.
    jitter: f64,
}

/// Candidate hyperparameters. Variances and noises are multiples of the
/// mean squared residual (floored at 1e-2), so the grid is scale-free.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub lengthscales: Vec<f64>,
    pub variances: Vec<f64>,
    pub noises: Vec<f64>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            lengthscales: vec![0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0, 2.0],
            variances: vec![0.1, 0.3, 1.0, 3.0, 10.0],
            noises: vec![1e-6, 1e-4, 1e-2],
        }
    }
}

pub const DEFAULT_NOISE: f64 = 1e-5;
const JITTERS: [f64; 7] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-4];

#[derive(Debug, Clone)]
pub struct GpModel {
    lower: Vec<f64>,
    width: Vec<f64>,
    mean: MeanFunction,
    kernel: Kernel,
    noise: f64,
    train: Vec<TrainPoint>,
    factor: Option<Factor>,
}

impl GpModel {
    /// An untrained model over the box `bounds` (one `(lo, hi)` per input).
    pub fn new(bounds: &[(f64, f64)], mean: MeanFunction, kernel: Kernel, noise: f64) -> GpModel {
        GpModel {
            lower: bounds.iter().map(|b| b.0).collect(),
            width: bounds
                .iter()
                .map(|&(lo, hi)| if hi > lo { hi - lo } else { 1.0 })
                .collect(),
            mean,
            kernel,
            noise: noise.max(0.0),
            train: Vec::new(),
            factor: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty()
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn jitter(&self) -> f64 {
        self.factor.as_ref().map_or(0.0, |f| f.jitter)
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.train.iter().map(|p| p.raw.clone()).collect()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.train.iter().map(|p| p.y).collect()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), GpError> {
        if x.len() != self.dim() {
            return Err(GpError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.width))
            .map(|(v, (lo, w))| (v - lo) / w)
            .collect()
    }

    fn point(&self, x: &[f64], y: f64) -> Result<TrainPoint, GpError> {
        self.check_dim(x)?;
        let prior_mean = self.mean.eval(x);
        let sigma = self.kernel.sigma(x);
        if !prior_mean.is_finite() || !sigma.is_finite() || !y.is_finite() {
            return Err(GpError::NumericalFailure);
        }
        Ok(TrainPoint {
            raw: x.to_vec(),
            unit: self.unit(x),
            y,
            prior_mean,
            sigma,
        })
    }

    fn k(&self, a: &TrainPoint, b: &TrainPoint) -> f64 {
        self.kernel.base().eval(&a.unit, &b.unit) + a.sigma * b.sigma
    }

    /// Returns the model conditioned on `points` in addition to its current
    /// training set.
    pub fn with_data(&self, xs: &[Vec<f64>], ys: &[f64]) -> Result<GpModel, GpError> {
        assert_eq!(xs.len(), ys.len(), "inputs and targets differ in length");
        let mut next = self.clone();
        for (x, &y) in xs.iter().zip(ys) {
            let p = next.point(x, y)?;
            next.train.push(p);
        }
        next.refactor()?;
        Ok(next)
    }

    pub fn with_point(&self, x: &[f64], y: f64) -> Result<GpModel, GpError> {
        self.with_data(&[x.to_vec()], &[y])
    }

    /// Same training data under different hyperparameters.
    pub fn with_hyperparameters(&self, base: Rbf, noise: f64) -> Result<GpModel, GpError> {
        let mut next = self.clone();
        next.kernel = self.kernel.with_base(base);
        next.noise = noise.max(0.0);
        next.refactor()?;
        Ok(next)
    }

    /// Same training data under a new prior (the causal prior is rebuilt
    /// whenever the observational data grows).
    pub fn with_prior(&self, mean: MeanFunction, kernel: Kernel) -> Result<GpModel, GpError> {
        let mut next = GpModel {
            mean,
            kernel,
            train: Vec::new(),
            factor: None,
            ..self.clone()
        };
        let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) =
            self.train.iter().map(|p| (p.raw.clone(), p.y)).unzip();
        for (x, y) in xs.iter().zip(ys) {
            let p = next.point(x, y)?;
            next.train.push(p);
        }
        next.refactor()?;
        Ok(next)
    }

    fn refactor(&mut self) -> Result<(), GpError> {
        let n = self.train.len();
        if n == 0 {
            self.factor = None;
            return Ok(());
        }
        let mut k = DMatrix::from_fn(n, n, |i, j| self.k(&self.train[i], &self.train[j]));
        let mean_diag = (0..n).map(|i| k[(i, i)]).sum::<f64>() / n as f64;
        for i in 0..n {
            k[(i, i)] += self.noise;
        }
        let r = DVector::from_iterator(n, self.train.iter().map(|p| p.y - p.prior_mean));
        for &j in &JITTERS {
            let jitter = j * mean_diag.max(f64::MIN_POSITIVE);
            let mut kj = k.clone();
            for i in 0..n {
                kj[(i, i)] += jitter;
            }
            if let Some(chol) = Cholesky::new(kj) {
                if (0..n).all(|i| chol.l_dirty()[(i, i)] > 0.0) {
                    let alpha = chol.solve(&r);
                    if alpha.iter().all(|v| v.is_finite()) {
                        self.factor = Some(Factor {
                            chol,
                            alpha,
                            jitter,
                        });
                        return Ok(());
                    }
                }
            }
        }
        Err(GpError::NumericalFailure)
    }

    pub fn posterior(&self, x: &[f64]) -> Result<Posterior, GpError> {
        let q = self.point(x, 0.0)?;
        let prior_var = self.k(&q, &q);
        let Some(factor) = &self.factor else {
            return Ok(Posterior {
                mean: q.prior_mean,
                variance: prior_var.max(0.0),
            });
        };
        let kx = DVector::from_iterator(self.train.len(), self.train.iter().map(|p| self.k(p, &q)));
        let mean = q.prior_mean + kx.dot(&factor.alpha);
        let v = factor
            .chol
            .l_dirty()
            .solve_lower_triangular(&kx)
            .ok_or(GpError::NumericalFailure)?;
        let variance = (prior_var - v.dot(&v)).max(0.0);
        if !mean.is_finite() || !variance.is_finite() {
            return Err(GpError::NumericalFailure);
        }
        Ok(Posterior { mean, variance })
    }

    /// Exact log marginal likelihood of the residuals `y − m(X)`.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let Some(factor) = &self.factor else {
            return 0.0;
        };
        let n = self.train.len();
        let r = DVector::from_iterator(n, self.train.iter().map(|p| p.y - p.prior_mean));
        let l = factor.chol.l_dirty();
        let logdet: f64 = (0..n).map(|i| l[(i, i)].ln()).sum();
        -0.5 * r.dot(&factor.alpha) - logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
    }

    /// Grid search over `(l, v, σ_n²)` maximizing the marginal likelihood.
    /// Ties go to the smallest lengthscale, then the smallest variance.
    pub fn fit_hyperparameters(&self, grid: &HyperGrid) -> Result<GpModel, GpError> {
        let n = self.train.len();
        if n < 2 {
            return Err(GpError::InsufficientData { needed: 2, got: n });
        }
        let scale = (self
            .train
            .iter()
            .map(|p| (p.y - p.prior_mean).powi(2))
            .sum::<f64>()
            / n as f64)
            .max(1e-2);
        let mut best: Option<(f64, GpModel)> = None;
        for &l in &grid.lengthscales {
            for &v in &grid.variances {
                for &s in &grid.noises {
                    let Ok(base) = Rbf::new(l, v * scale) else {
                        continue;
                    };
                    let Ok(model) = self.with_hyperparameters(base, s * scale) else {
                        continue;
                    };
                    let lml = model.log_marginal_likelihood();
                    if !lml.is_finite() {
                        continue;
                    }
                    // Strict improvement keeps the earliest (smallest) candidate.
                    if best.as_ref().is_none_or(|(b, _)| lml > *b) {
                        best = Some((lml, model));
                    }
                }
            }
        }
        best.map(|(_, m)| m).ok_or(GpError::NumericalFailure)
    }
}
