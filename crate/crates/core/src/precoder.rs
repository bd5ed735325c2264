//! Omnidirectional precoder design.
//!
//! The design problem is
//!
//! ```text
//! maximize   g(P) = sum_j h_j^T P P^T h_j = trace(P^T R P),   R = H^T H
//! subject to every row of P has unit Euclidean norm
//! ```
//!
//! which keeps the mean transmit power equal across LEDs. It is solved by
//! projected gradient ascent: a step along `R P`, then row normalization
//! back onto the constraint set (the oblique manifold). With the large step
//! sizes used in practice the update behaves like a row-normalized power
//! iteration and settles within a handful of iterations.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::ChannelMatrix;
use crate::csv_out::Table;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// `M_t x q` precoder whose rows all have unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecodingMatrix(DMatrix<f64>);

impl PrecodingMatrix {
    /// Accepted deviation of a row norm from one.
    pub const ROW_NORM_TOL: f64 = 1e-9;

    /// Wrap a matrix that already satisfies the unit-row-norm constraint.
    pub fn from_matrix(p: DMatrix<f64>) -> Result<Self> {
        Self::from_matrix_with_tol(p, Self::ROW_NORM_TOL)
    }

    /// As [`from_matrix`](Self::from_matrix) with a caller-chosen tolerance,
    /// for matrices printed with few digits.
    pub fn from_matrix_with_tol(p: DMatrix<f64>, tol: f64) -> Result<Self> {
        if p.nrows() == 0 || p.ncols() == 0 {
            return Err(Error::invalid("precoding matrix must be non-empty"));
        }
        let candidate = Self(p);
        let err = candidate.max_row_norm_error();
        if err.is_nan() || err > tol {
            return Err(Error::invalid(format!(
                "precoding rows must have unit norm (max deviation {err:e} > {tol:e})"
            )));
        }
        Ok(candidate)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Number of LEDs `M_t`.
    pub fn n_leds(&self) -> usize {
        self.0.nrows()
    }

    /// Number of symbol streams `q`.
    pub fn n_streams(&self) -> usize {
        self.0.ncols()
    }

    /// Largest `| ||p_m|| - 1 |` over rows.
    pub fn max_row_norm_error(&self) -> f64 {
        self.0
            .row_iter()
            .map(|r| (r.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Row-major CSV, one LED per line, header `stream_1..stream_q`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new((1..=self.n_streams()).map(|k| format!("stream_{k}")));
        for r in self.0.row_iter() {
            t.push_row(r.iter().copied().collect());
        }
        t
    }

    /// Parse the CSV layout of [`to_table`](Self::to_table) into a raw
    /// matrix. The constraint is not checked here.
    pub fn parse_csv(text: &str) -> Result<DMatrix<f64>> {
        let t = Table::parse(text)?;
        if t.rows.is_empty() {
            return Err(Error::Csv("precoder CSV has no rows".into()));
        }
        let q = t.header.len();
        Ok(DMatrix::from_row_iterator(t.rows.len(), q, t.rows.into_iter().flatten()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopMode {
    /// Stop when `|g_{k+1} - g_k| < epsilon`.
    Absolute,
    /// Stop when `|g_{k+1} - g_k| < epsilon * |g_k|`.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Step size.
    pub mu: f64,
    /// Threshold on the change of the objective between iterations.
    pub epsilon: f64,
    pub max_iter: usize,
    pub stop_mode: StopMode,
    /// Seed of the random initial precoder.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            mu: 1e8,
            epsilon: 1e-4,
            max_iter: 500,
            stop_mode: StopMode::Relative,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::invalid(format!("step size must be positive, got {}", self.mu)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        Ok(())
    }

    fn should_stop(&self, previous: f64, current: f64) -> bool {
        let change = (current - previous).abs();
        match self.stop_mode {
            StopMode::Absolute => change < self.epsilon,
            StopMode::Relative => change < self.epsilon * previous.abs().max(f64::MIN_POSITIVE),
        }
    }
}

/// Objective history of one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptTrace {
    /// `g(P_0), g(P_1), ...`; one entry more than `iterations_run`.
    pub objective_history: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

impl OptTrace {
    pub fn final_objective(&self) -> f64 {
        *self.objective_history.last().expect("trace holds the initial value")
    }
}

/// `R = H^T H = sum_j h_j h_j^T`.
pub fn correlation_matrix(h: &ChannelMatrix) -> DMatrix<f64> {
    let m = h.matrix();
    let mut r = m.tr_mul(m);
    // Symmetrize away the rounding differences between the two triangles.
    for i in 0..r.nrows() {
        for k in 0..i {
            let v = 0.5 * (r[(i, k)] + r[(k, i)]);
            r[(i, k)] = v;
            r[(k, i)] = v;
        }
    }
    r
}

fn check_dims(p: &DMatrix<f64>, r: &DMatrix<f64>) {
    assert!(
        r.is_square() && r.nrows() == p.nrows(),
        "dimension mismatch: R is {}x{}, P is {}x{}",
        r.nrows(),
        r.ncols(),
        p.nrows(),
        p.ncols()
    );
}

/// `g(P) = trace(P^T R P)`, the summed received mean power.
///
/// Takes a raw matrix so that off-manifold points can be probed.
pub fn objective(p: &DMatrix<f64>, r: &DMatrix<f64>) -> f64 {
    check_dims(p, r);
    p.dot(&(r * p))
}

/// Gradient of the minimization form `f = -g`: `-2 R P`.
pub fn gradient(p: &DMatrix<f64>, r: &DMatrix<f64>) -> DMatrix<f64> {
    check_dims(p, r);
    (r * p) * -2.0
}

/// Scale every row to unit norm, i.e. `diag(P P^T)^{-1/2} P`.
pub fn project_rows(mut raw: DMatrix<f64>) -> Result<PrecodingMatrix> {
    if raw.nrows() == 0 || raw.ncols() == 0 {
        return Err(Error::invalid("cannot project an empty matrix"));
    }
    for (m, mut row) in raw.row_iter_mut().enumerate() {
        let norm = row.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::DegenerateRow { row: m, norm });
        }
        row /= norm;
    }
    Ok(PrecodingMatrix(raw))
}

/// Gaussian matrix with normalized rows: rows are uniform on the unit
/// sphere, independently.
pub fn random_precoder(m_t: usize, q: usize, seed: u64) -> Result<PrecodingMatrix> {
    if m_t == 0 || q == 0 {
        return Err(Error::invalid(format!("random precoder needs M_t, q >= 1, got {m_t}x{q}")));
    }
    let mut rng = rng_from_seed(seed);
    let raw = DMatrix::from_row_iterator(m_t, q, (0..m_t * q).map(|_| rng.sample::<f64, _>(StandardNormal)));
    project_rows(raw)
}

/// Design a precoder with `q` streams for the sampled channel `h`, starting
/// from `random_precoder(M_t, q, cfg.seed)`.
pub fn optimize(h: &ChannelMatrix, q: usize, cfg: &OptimizerConfig) -> Result<(PrecodingMatrix, OptTrace)> {
    cfg.validate()?;
    if q == 0 {
        return Err(Error::invalid("q must be at least 1"));
    }
    if h.is_zero() {
        return Err(Error::NoSignal);
    }
    let r = correlation_matrix(h);
    let initial = random_precoder(h.n_leds(), q, cfg.seed)?;
    optimize_from(&r, initial, cfg)
}

/// Projected ascent from an explicit starting point on the manifold.
pub fn optimize_from(r: &DMatrix<f64>, initial: PrecodingMatrix, cfg: &OptimizerConfig) -> Result<(PrecodingMatrix, OptTrace)> {
    cfg.validate()?;
    if r.iter().all(|&v| v == 0.0) {
        return Err(Error::NoSignal);
    }
    if !r.is_square() || r.nrows() != initial.n_leds() {
        return Err(Error::DimensionMismatch(format!(
            "R is {}x{}, initial precoder has {} rows",
            r.nrows(),
            r.ncols(),
            initial.n_leds()
        )));
    }

    let mut p = initial;
    let mut current = objective(p.matrix(), r);
    let mut trace = OptTrace {
        objective_history: vec![current],
        iterations_run: 0,
        converged: false,
    };

    for _ in 0..cfg.max_iter {
        // P - mu * grad f(P) = P + 2 mu R P
        let step = gradient(p.matrix(), r) * -cfg.mu;
        p = project_rows(p.into_matrix() + step)?;
        let next = objective(p.matrix(), r);
        trace.objective_history.push(next);
        trace.iterations_run += 1;
        if cfg.should_stop(current, next) {
            trace.converged = true;
            break;
        }
        current = next;
    }
    Ok((p, trace))
}
