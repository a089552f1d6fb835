//! Parameter identification: the pulse-rise/damping fit against a base
//! torque trace, plus the power-law and straight-line fits used for sweeps.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::actuation::{driving_set, PressureProfile};
use crate::config::Model;
use crate::dynamics::JointState;
use crate::kinematics::JointConfig;
use crate::simulate::{simulate_joint, PulseSchedule, SimulationError};

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Named estimates, in the order the fit defines them.
    pub params: Vec<(&'static str, f64)>,
    pub rmse: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| *v)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FitError {
    #[error("simplex did not converge after {} iterations (rmse {})", .0.iterations, .0.rmse)]
    NotConverged(FitResult),
    #[error("power-law fit needs strictly positive data")]
    NonPositiveData,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("abscissae are all equal")]
    DegenerateAbscissa,
    #[error("{xs} abscissae but {ys} ordinates")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("torque trace is empty or not strictly increasing in time")]
    BadTrace,
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error("trace file {path}: {source}")]
    Csv { path: String, source: csv::Error },
}

/// `y = coefficient · x^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub coefficient: f64,
    pub exponent: f64,
}

/// `y = slope · x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

fn check_lengths(xs: &[f64], ys: &[f64], needed: usize) -> Result<(), FitError> {
    if xs.len() != ys.len() {
        return Err(FitError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    if xs.len() < needed {
        return Err(FitError::TooFewPoints {
            needed,
            got: xs.len(),
        });
    }
    Ok(())
}

/// Ordinary least squares.
pub fn fit_linear(xs: &[f64], ys: &[f64]) -> Result<LinearFit, FitError> {
    check_lengths(xs, ys, 2)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(FitError::DegenerateAbscissa);
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    // A constant ordinate is fitted exactly by the zero-slope line.
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Least squares on `ln y = ln a + b ln x`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLaw, FitError> {
    check_lengths(xs, ys, 3)?;
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(FitError::NonPositiveData);
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let line = fit_linear(&lx, &ly)?;
    Ok(PowerLaw {
        coefficient: line.intercept.exp(),
        exponent: line.slope,
    })
}

/// Measured or synthetic base-torque samples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TorqueTrace {
    pub times: Vec<f64>,
    pub torques: Vec<f64>,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct TraceRow {
    time_s: f64,
    #[serde(rename = "torque_Nm")]
    torque_nm: f64,
}

impl TorqueTrace {
    pub fn is_valid(&self) -> bool {
        !self.times.is_empty()
            && self.times.len() == self.torques.len()
            && self.times.windows(2).all(|w| w[1] > w[0])
    }

    /// Reads a `time_s,torque_Nm` CSV.
    pub fn load(path: &Path) -> Result<Self, FitError> {
        let wrap = |source| FitError::Csv {
            path: path.display().to_string(),
            source,
        };
        let mut reader = csv::Reader::from_path(path).map_err(wrap)?;
        let mut trace = TorqueTrace::default();
        for row in reader.deserialize::<TraceRow>() {
            let row = row.map_err(wrap)?;
            trace.times.push(row.time_s);
            trace.torques.push(row.torque_nm);
        }
        Ok(trace)
    }

    pub fn save(&self, path: &Path) -> Result<(), FitError> {
        let wrap = |source| FitError::Csv {
            path: path.display().to_string(),
            source,
        };
        let mut writer = csv::Writer::from_path(path).map_err(wrap)?;
        for (&time_s, &torque_nm) in self.times.iter().zip(&self.torques) {
            writer
                .serialize(TraceRow { time_s, torque_nm })
                .map_err(wrap)?;
        }
        writer.flush().map_err(|e| wrap(e.into()))
    }
}

/// The open-loop pulse experiment a torque trace comes from.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseExperiment {
    pub model: Model,
    /// Bending direction φ (rad).
    pub direction: f64,
    pub peak: f64,
    pub hold: f64,
    pub vacuum: f64,
    pub duration: f64,
    pub dt: f64,
}

impl PulseExperiment {
    /// The 2-bar flexion pulse with a −90 kPa release.
    pub fn flexion_2bar(model: Model) -> Self {
        Self {
            model,
            direction: std::f64::consts::FRAC_PI_2,
            peak: 2e5,
            hold: 0.06,
            vacuum: -9e4,
            duration: 0.25,
            dt: 2e-4,
        }
    }

    /// Base torque at every integration sample for rise time `t0` and
    /// damping `c`.
    pub fn simulate(&self, t0: f64, c: f64) -> Result<TorqueTrace, SimulationError> {
        let mut model = self.model.clone();
        model.soa.damping = c;
        let profile = PressureProfile {
            peak: self.peak,
            rise_time: t0,
            hold: self.hold,
            vacuum: self.vacuum,
        };
        let mut schedule = PulseSchedule::new(profile, driving_set(self.direction, &model.anchors));
        let start = JointState::at_rest(JointConfig::new(self.direction, 0.0));
        let traj = simulate_joint(&model, start, &mut schedule, self.duration, self.dt)?;
        Ok(TorqueTrace {
            torques: traj.inputs.iter().map(|r| r.reaction.torque).collect(),
            times: traj.times,
        })
    }

    /// Self-generated trace with additive Gaussian noise whose standard
    /// deviation is `noise_fraction` of the peak |torque|.
    pub fn synthesize(
        &self,
        t0: f64,
        c: f64,
        noise_fraction: f64,
        seed: u64,
    ) -> Result<TorqueTrace, SimulationError> {
        let mut trace = self.simulate(t0, c)?;
        if noise_fraction > 0.0 {
            let peak = trace.torques.iter().fold(0.0f64, |m, t| m.max(t.abs()));
            let normal = Normal::new(0.0, noise_fraction * peak).expect("finite spread");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for t in &mut trace.torques {
                *t += normal.sample(&mut rng);
            }
        }
        Ok(trace)
    }

    /// RMSE (N·m) between the model and `trace`, the model interpolated
    /// linearly onto the trace times. Samples outside the simulated window
    /// are ignored.
    pub fn rmse(&self, trace: &TorqueTrace, t0: f64, c: f64) -> Result<f64, SimulationError> {
        let sim = self.simulate(t0, c)?;
        let mut sum = 0.0;
        let mut count = 0usize;
        for (&t, &y) in trace.times.iter().zip(&trace.torques) {
            if let Some(m) = interpolate(&sim.times, &sim.torques, t) {
                sum += (m - y) * (m - y);
                count += 1;
            }
        }
        Ok(if count == 0 {
            f64::INFINITY
        } else {
            (sum / count as f64).sqrt()
        })
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let last = *xs.last()?;
    if x < xs[0] || x > last + 1e-12 * last.abs().max(1.0) {
        return None;
    }
    let k = xs.partition_point(|&v| v <= x);
    if k == 0 {
        return Some(ys[0]);
    }
    if k >= xs.len() {
        return Some(ys[xs.len() - 1]);
    }
    let s = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    Some(ys[k - 1] + s * (ys[k] - ys[k - 1]))
}

/// Box bounds and stopping rules of the (t0, c) fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub t0_bounds: (f64, f64),
    pub c_bounds: (f64, f64),
    pub grid: usize,
    pub max_iter: usize,
    /// Simplex diameter, relative to the box, below which the fit stops.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            t0_bounds: (0.0, 0.2),
            c_bounds: (0.0, 500.0),
            grid: 11,
            max_iter: 400,
            tolerance: 1e-7,
        }
    }
}

/// Bounded Nelder–Mead on the unit square. Points are clamped into the box
/// before evaluation. Returns the best vertex, its value, the iteration
/// count and whether the simplex shrank below `tol`.
fn nelder_mead<F: FnMut([f64; 2]) -> f64>(
    mut f: F,
    start: [f64; 2],
    step: f64,
    tol: f64,
    max_iter: usize,
    lower: [f64; 2],
) -> ([f64; 2], f64, usize, bool) {
    let clamp = |p: [f64; 2]| [p[0].clamp(lower[0], 1.0), p[1].clamp(lower[1], 1.0)];
    let mut simplex: Vec<[f64; 2]> = vec![
        clamp(start),
        clamp([start[0] + step, start[1]]),
        clamp([start[0], start[1] + step]),
    ];
    // A vertex clamped onto another would collapse the simplex.
    if simplex[1] == simplex[0] {
        simplex[1] = clamp([start[0] - step, start[1]]);
    }
    if simplex[2] == simplex[0] {
        simplex[2] = clamp([start[0], start[1] - step]);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(*p)).collect();
    let diameter = |s: &[[f64; 2]]| {
        let mut d: f64 = 0.0;
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                d = d.max(((s[i][0] - s[j][0]).powi(2) + (s[i][1] - s[j][1]).powi(2)).sqrt());
            }
        }
        d
    };
    for it in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i]).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if diameter(&simplex) < tol {
            return (simplex[0], values[0], it, true);
        }
        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let along = |s: f64| {
            clamp([
                centroid[0] + s * (simplex[2][0] - centroid[0]),
                centroid[1] + s * (simplex[2][1] - centroid[1]),
            ])
        };
        let reflected = along(-1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let contracted = if fr < values[2] {
                along(-0.5)
            } else {
                along(0.5)
            };
            let fc = f(contracted);
            if fc < values[2].min(fr) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = [
                        0.5 * (simplex[0][0] + simplex[i][0]),
                        0.5 * (simplex[0][1] + simplex[i][1]),
                    ];
                    values[i] = f(simplex[i]);
                }
            }
        }
    }
    let best = (0..3)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    (
        simplex[best],
        values[best],
        max_iter,
        diameter(&simplex) < tol,
    )
}

/// Identifies the pulse rise time `t0` and damping `c` that make the
/// simulated base torque match `trace` in the RMSE sense: a parallel grid
/// search over the bounds, then a bounded simplex from the best grid node.
pub fn fit_damping_rise(
    trace: &TorqueTrace,
    experiment: &PulseExperiment,
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    if !trace.is_valid() {
        return Err(FitError::BadTrace);
    }
    let (t_lo, t_hi) = options.t0_bounds;
    let (c_lo, c_hi) = options.c_bounds;
    let to_params = |u: [f64; 2]| (t_lo + u[0] * (t_hi - t_lo), c_lo + u[1] * (c_hi - c_lo));
    // The lower t0 bound is open; keep a sliver away from it.
    let u0_min = 1e-4;

    let n = options.grid.max(2);
    let nodes: Vec<[f64; 2]> = (0..n)
        .flat_map(|i| (0..n).map(move |j| [(i + 1) as f64 / n as f64, j as f64 / (n - 1) as f64]))
        .collect();
    let grid: Vec<(usize, f64)> = nodes
        .par_iter()
        .enumerate()
        .map(|(k, u)| {
            let (t0, c) = to_params(*u);
            (k, experiment.rmse(trace, t0, c).unwrap_or(f64::INFINITY))
        })
        .collect();
    let (best, best_rmse) = grid
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    if !best_rmse.is_finite() {
        experiment.rmse(trace, to_params(nodes[best]).0, to_params(nodes[best]).1)?;
    }

    let mut failure = None;
    let objective = |u: [f64; 2]| {
        let (t0, c) = to_params(u);
        match experiment.rmse(trace, t0, c) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        }
    };
    let step = 0.5 / n as f64;
    let (u, rmse, iterations, converged) = nelder_mead(
        objective,
        nodes[best],
        step,
        options.tolerance,
        options.max_iter,
        [u0_min, 0.0],
    );
    let (t0, c) = to_params(u);
    let result = FitResult {
        params: vec![("t0", t0), ("c", c)],
        rmse,
        iterations,
        converged,
    };
    if !rmse.is_finite() {
        if let Some(e) = failure {
            return Err(e.into());
        }
    }
    if converged {
        Ok(result)
    } else {
        Err(FitError::NotConverged(result))
    }
}
