//! Least-squares fitting of path-loss curves to (distance, loss) points.
//!
//! [`fit_log_distance`] solves the log-distance model in closed form.
//! [`fit_general`] is a damped Gauss-Newton (Levenberg-Marquardt) engine
//! for arbitrary parametric curves, using a central-difference Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_finite, Error, Result};
use crate::exec::{map_slice, Execution};
use crate::units::Distance;

/// `pl0 + 10 n log10(d / d0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDistanceModel {
    pub pl0_db: f64,
    pub exponent: f64,
    pub reference: Distance,
}

impl LogDistanceModel {
    pub fn predict(&self, d: Distance) -> f64 {
        self.pl0_db + 10.0 * self.exponent * (d.m() / self.reference.m()).log10()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: LogDistanceModel,
    pub rmse_db: f64,
    /// Observed minus predicted, in input order.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Outcome of [`fit_general`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralFit {
    pub parameters: Vec<f64>,
    pub rmse_db: f64,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Sum of squared residuals: initial value, then after each accepted step.
    pub cost_history: Vec<f64>,
    /// Infinity norm of `J^T r` at the returned parameters.
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the cost by less than this fraction.
    pub relative_cost_tolerance: f64,
    pub gradient_tolerance: f64,
    pub initial_damping: f64,
    pub max_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            relative_cost_tolerance: 1e-10,
            gradient_tolerance: 1e-12,
            initial_damping: 1e-3,
            max_damping: 1e16,
        }
    }
}

fn check_points(points: &[(Distance, f64)]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit("need at least two points"));
    }
    for &(_, pl) in points {
        ensure_finite("path loss", pl)?;
    }
    let first = points[0].0.m();
    if points.iter().all(|(d, _)| d.m() == first) {
        return Err(Error::DegenerateFit("all distances are equal"));
    }
    Ok(())
}

fn rmse(residuals: &[f64]) -> f64 {
    (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt()
}

/// Closed-form least-squares fit with a 1 m reference distance.
pub fn fit_log_distance(points: &[(Distance, f64)]) -> Result<FitResult> {
    fit_log_distance_with_reference(points, Distance::from_m(1.0)?)
}

pub fn fit_log_distance_with_reference(
    points: &[(Distance, f64)],
    reference: Distance,
) -> Result<FitResult> {
    check_points(points)?;
    let n = points.len() as f64;
    let xs: Vec<f64> = points
        .iter()
        .map(|(d, _)| 10.0 * (d.m() / reference.m()).log10())
        .collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let (sxy, sxx) = xs
        .iter()
        .zip(points)
        .fold((0.0, 0.0), |(sxy, sxx), (x, (_, y))| {
            let dx = x - x_mean;
            (sxy + dx * (y - y_mean), sxx + dx * dx)
        });
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all distances are equal"));
    }
    let exponent = sxy / sxx;
    let model = LogDistanceModel {
        pl0_db: y_mean - exponent * x_mean,
        exponent,
        reference,
    };
    let residuals: Vec<f64> = points.iter().map(|&(d, y)| y - model.predict(d)).collect();
    Ok(FitResult {
        model,
        rmse_db: rmse(&residuals),
        residuals,
        iterations: 0,
        converged: true,
    })
}

/// Fits many independent datasets.
pub fn fit_log_distance_batch(
    datasets: &[Vec<(Distance, f64)>],
    exec: Execution,
) -> Vec<Result<FitResult>> {
    map_slice(exec, datasets, |pts| fit_log_distance(pts))
}

/// Central-difference step for one parameter.
pub fn fd_step(theta: f64) -> f64 {
    (1e-6 * theta.abs()).max(1e-6)
}

/// Jacobian of the curve values with respect to the parameters, one row per
/// point, by central differences.
pub fn finite_difference_jacobian<F>(
    predict: &F,
    theta: &[f64],
    distances: &[Distance],
) -> DMatrix<f64>
where
    F: Fn(&[f64], Distance) -> f64,
{
    let mut jac = DMatrix::zeros(distances.len(), theta.len());
    let mut probe = theta.to_vec();
    for j in 0..theta.len() {
        let h = fd_step(theta[j]);
        for (i, &d) in distances.iter().enumerate() {
            probe[j] = theta[j] + h;
            let up = predict(&probe, d);
            probe[j] = theta[j] - h;
            let down = predict(&probe, d);
            jac[(i, j)] = (up - down) / (2.0 * h);
        }
        probe[j] = theta[j];
    }
    jac
}

fn residual_vector<F>(predict: &F, theta: &[f64], points: &[(Distance, f64)]) -> DVector<f64>
where
    F: Fn(&[f64], Distance) -> f64,
{
    DVector::from_iterator(
        points.len(),
        points.iter().map(|&(d, y)| y - predict(theta, d)),
    )
}

fn solve_damped(a: &DMatrix<f64>, g: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let mut m = a.clone();
    for k in 0..m.nrows() {
        let diag = a[(k, k)].max(1e-12);
        m[(k, k)] += lambda * diag;
    }
    match m.clone().cholesky() {
        Some(ch) => Some(ch.solve(g)),
        None => m.lu().solve(g),
    }
}

/// Levenberg-Marquardt fit of `predict(theta, d)` to the points.
pub fn fit_general<F>(predict: F, initial: &[f64], points: &[(Distance, f64)]) -> Result<GeneralFit>
where
    F: Fn(&[f64], Distance) -> f64,
{
    fit_general_with(predict, initial, points, &LmOptions::default())
}

pub fn fit_general_with<F>(
    predict: F,
    initial: &[f64],
    points: &[(Distance, f64)],
    opts: &LmOptions,
) -> Result<GeneralFit>
where
    F: Fn(&[f64], Distance) -> f64,
{
    check_points(points)?;
    if initial.is_empty() {
        return Err(Error::Empty("initial parameters"));
    }
    if points.len() < initial.len() {
        return Err(Error::DegenerateFit("fewer points than parameters"));
    }
    for &p in initial {
        ensure_finite("initial parameter", p)?;
    }
    let distances: Vec<Distance> = points.iter().map(|(d, _)| *d).collect();

    let mut theta = initial.to_vec();
    let mut r = residual_vector(&predict, &theta, points);
    let mut cost = r.norm_squared();
    if !cost.is_finite() {
        return Err(Error::NonFinite {
            quantity: "initial cost",
            value: cost,
        });
    }
    let mut history = vec![cost];
    let mut lambda = opts.initial_damping;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = finite_difference_jacobian(&predict, &theta, &distances);
        let g = jac.tr_mul(&r);
        if cost == 0.0 || g.amax() <= opts.gradient_tolerance * (1.0 + cost) {
            converged = true;
            break;
        }
        let a = jac.tr_mul(&jac);

        let mut accepted = false;
        while lambda <= opts.max_damping {
            let Some(step) = solve_damped(&a, &g, lambda) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            let trial_r = residual_vector(&predict, &trial, points);
            let trial_cost = trial_r.norm_squared();
            if trial_cost.is_finite() && trial_cost <= cost {
                let rel = (cost - trial_cost) / cost;
                theta = trial;
                r = trial_r;
                cost = trial_cost;
                history.push(cost);
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if rel < opts.relative_cost_tolerance {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged || !accepted {
            break;
        }
    }

    let jac = finite_difference_jacobian(&predict, &theta, &distances);
    let gradient_norm = jac.tr_mul(&r).amax();
    if !converged && gradient_norm <= opts.gradient_tolerance * (1.0 + cost) {
        converged = true;
    }
    let residuals: Vec<f64> = r.iter().copied().collect();
    Ok(GeneralFit {
        parameters: theta,
        rmse_db: rmse(&residuals),
        residuals,
        iterations,
        converged,
        cost_history: history,
        gradient_norm,
    })
}

/// The log-distance curve as a `[pl0, n]` parametric callback.
pub fn log_distance_curve(reference: Distance) -> impl Fn(&[f64], Distance) -> f64 + Sync + Send {
    move |theta: &[f64], d: Distance| theta[0] + 10.0 * theta[1] * (d.m() / reference.m()).log10()
}

/// Log-distance fit through the iterative engine, starting at `pl0 = 40 dB`,
/// `n = 2`.
pub fn fit_log_distance_iterative(points: &[(Distance, f64)]) -> Result<FitResult> {
    let reference = Distance::from_m(1.0)?;
    let fit = fit_general(log_distance_curve(reference), &[40.0, 2.0], points)?;
    Ok(FitResult {
        model: LogDistanceModel {
            pl0_db: fit.parameters[0],
            exponent: fit.parameters[1],
            reference,
        },
        rmse_db: fit.rmse_db,
        residuals: fit.residuals,
        iterations: fit.iterations,
        converged: fit.converged,
    })
}
