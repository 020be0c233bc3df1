//! Iterative least-squares position estimation from double differences.
//!
//! The model for diff `i` with serving gNB `s` is the range difference
//! `f_i(x) = |x − g_i| − |x − g_s| − Δd_n,i`. Each iteration linearizes `f`
//! at the current candidate and applies the Gauss-Newton step
//! `Δx = (GᵀG)⁻¹ Gᵀ h`, where `h` holds the observed-minus-predicted
//! residuals and `G` the rows from [`design_row`].

use std::f64::consts::TAU;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::differencing::DoubleDiffSet;
use crate::error::{Error, Result};
use crate::geometry::{distance, Position3D};

/// Largest accepted condition number of `GᵀG`.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialGuess {
    /// Serving gNB `(x, y)`, one meter below the lowest involved gNB.
    ServingGnb,
    Custom(Position3D),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Convergence threshold on the update norm, meters.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub initial_guess: InitialGuess,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_iterations: 50,
            initial_guess: InitialGuess::ServingGnb,
        }
    }
}

impl SolverConfig {
    pub fn is_valid(&self) -> bool {
        self.epsilon.is_finite() && self.epsilon > 0.0 && self.max_iterations >= 1
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// x-y plane error, meters.
    pub horizontal: f64,
    /// |dz|, meters.
    pub vertical: f64,
    pub error_3d: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub estimate: Position3D,
    pub iterations: usize,
    pub converged: bool,
    pub final_update_norm: f64,
    /// Filled by [`EstimationResult::with_truth`].
    pub errors: Option<ErrorMetrics>,
}

impl EstimationResult {
    pub fn with_truth(mut self, truth: &Position3D) -> Self {
        self.errors = Some(error_metrics(&self.estimate, truth));
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    /// Candidate before the update.
    pub candidate: Position3D,
    /// ‖h‖ at that candidate.
    pub residual_norm: f64,
    pub update_norm: f64,
}

/// Partial derivatives of `|x − g_i| − |x − g_s|` at `candidate`.
pub fn design_row(candidate: &Position3D, gnb_i: &Position3D, serving: &Position3D) -> Result<[f64; 3]> {
    let di = distance(candidate, gnb_i);
    let ds = distance(candidate, serving);
    if di <= f64::EPSILON || ds <= f64::EPSILON {
        return Err(Error::SingularGeometry(
            "candidate coincides with a gNB position".into(),
        ));
    }
    Ok([
        (candidate.x - gnb_i.x) / di - (candidate.x - serving.x) / ds,
        (candidate.y - gnb_i.y) / di - (candidate.y - serving.y) / ds,
        (candidate.z - gnb_i.z) / di - (candidate.z - serving.z) / ds,
    ])
}

struct Row {
    neighbor: Position3D,
    observed: f64,
    reference_delta: f64,
}

fn rows(set: &DoubleDiffSet, lambda: f64) -> Result<(Position3D, Vec<Row>)> {
    let serving = set.serving_position().ok_or_else(|| {
        Error::MissingMeasurement(format!("serving gNB {} position unknown", set.serving_gnb_id))
    })?;
    let rows = set
        .diffs
        .iter()
        .map(|d| {
            let neighbor = *set.gnb_positions.get(&d.neighbor_gnb_id).ok_or_else(|| {
                Error::MissingMeasurement(format!("gNB {} position unknown", d.neighbor_gnb_id))
            })?;
            Ok(Row {
                neighbor,
                observed: lambda * d.value / TAU,
                reference_delta: d.reference_delta_distance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((serving, rows))
}

fn residuals(candidate: &Position3D, serving: &Position3D, rows: &[Row]) -> Vec<f64> {
    let ds = distance(candidate, serving);
    rows.iter()
        .map(|r| r.observed - (distance(candidate, &r.neighbor) - ds - r.reference_delta))
        .collect()
}

/// Observed minus predicted double-differenced range per diff, meters.
pub fn residual_vector(candidate: &Position3D, set: &DoubleDiffSet, lambda: f64) -> Result<Vec<f64>> {
    let (serving, rows) = rows(set, lambda)?;
    Ok(residuals(candidate, &serving, &rows))
}

fn condition_number(a: &Matrix3<f64>) -> f64 {
    let eig = SymmetricEigen::new(*a).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn solve(set: &DoubleDiffSet, lambda: f64, config: &SolverConfig) -> Result<EstimationResult> {
    solve_with_history(set, lambda, config).map(|(r, _)| r)
}

/// [`solve`] that also returns one record per iteration.
pub fn solve_with_history(
    set: &DoubleDiffSet,
    lambda: f64,
    config: &SolverConfig,
) -> Result<(EstimationResult, Vec<IterationRecord>)> {
    if set.diffs.len() < 3 {
        return Err(Error::InsufficientGeometry(format!(
            "{} double differences, need 3",
            set.diffs.len()
        )));
    }
    let (serving, rows) = rows(set, lambda)?;
    let mut candidate = match config.initial_guess {
        InitialGuess::ServingGnb => {
            let lowest = set.gnb_positions.values().map(|p| p.z).fold(f64::INFINITY, f64::min);
            Position3D::new(serving.x, serving.y, lowest - 1.0)
        }
        InitialGuess::Custom(p) => p,
    };

    // Divergence box: ten times the extent of the involved gNBs around their centroid.
    let n = set.gnb_positions.len() as f64;
    let centroid = set
        .gnb_positions
        .values()
        .fold(Vector3::zeros(), |acc, p| acc + p.to_vector())
        / n;
    let span = set
        .gnb_positions
        .values()
        .map(|p| (p.to_vector() - centroid).amax())
        .fold(1.0_f64, f64::max);
    let limit = 10.0 * span;

    let mut history = Vec::new();
    let mut prev_norm = f64::INFINITY;
    let mut converged = false;
    let mut update_norm = f64::INFINITY;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let h = residuals(&candidate, &serving, &rows);
        let mut gtg = Matrix3::zeros();
        let mut gth = Vector3::zeros();
        for (r, hi) in rows.iter().zip(&h) {
            let g = Vector3::from(design_row(&candidate, &r.neighbor, &serving)?);
            gtg += g * g.transpose();
            gth += g * *hi;
        }
        let condition = condition_number(&gtg);
        if condition > MAX_CONDITION {
            return Err(Error::IllConditioned { condition, limit: MAX_CONDITION });
        }
        let step = gtg
            .cholesky()
            .map(|c| c.solve(&gth))
            .ok_or(Error::IllConditioned { condition, limit: MAX_CONDITION })?;
        update_norm = step.norm();
        history.push(IterationRecord {
            candidate,
            residual_norm: h.iter().map(|v| v * v).sum::<f64>().sqrt(),
            update_norm,
        });
        candidate = Position3D::from_vector(&(candidate.to_vector() + step));

        if update_norm < config.epsilon {
            converged = true;
            break;
        }
        let outside = (candidate.to_vector() - centroid).amax() > limit;
        if update_norm > 10.0 * prev_norm || outside || !update_norm.is_finite() {
            break;
        }
        prev_norm = update_norm;
    }

    Ok((
        EstimationResult {
            estimate: candidate,
            iterations,
            converged,
            final_update_norm: update_norm,
            errors: None,
        },
        history,
    ))
}

pub fn error_metrics(estimate: &Position3D, truth: &Position3D) -> ErrorMetrics {
    let (dx, dy, dz) = (estimate.x - truth.x, estimate.y - truth.y, estimate.z - truth.z);
    ErrorMetrics {
        horizontal: dx.hypot(dy),
        vertical: dz.abs(),
        error_3d: (dx * dx + dy * dy + dz * dz).sqrt(),
    }
}
