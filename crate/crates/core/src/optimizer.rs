//! Coordinate-descent maximization over the nulling range, the nulling
//! budget `L` and the file diversity gain `ξ`.

use serde::{Deserialize, Serialize};

use crate::analytic::{match_fixed_range, stp_total};
use crate::error::{invalid, Result};
use crate::meta::{beta_meta, MomentSummary};
use crate::model::{InScheme, NetworkConfig};
use crate::parallel::{map_indexed, Execution};

/// Largest value the inverse-variance objective reports.
pub const INVERSE_VARIANCE_CAP: f64 = 1e12;
/// A round counts as converged when it improves the objective by less.
pub const ROUND_TOL: f64 = 1e-6;
/// Default upper bound on the flexible ratio `μ`.
pub const MU_MAX: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Objective {
    Stp,
    InverseVariance,
    Meta { x0: f64 },
    /// `η·p_s + (1-η)·F̄(x0)`.
    Weighted { eta: f64, x0: f64 },
}

impl Objective {
    fn validate(&self) -> Result<()> {
        let check_x0 = |x0: f64| {
            if (0.0..=1.0).contains(&x0) {
                Ok(())
            } else {
                Err(invalid("x0", format!("must lie in [0, 1], got {x0}")))
            }
        };
        match *self {
            Objective::Stp | Objective::InverseVariance => Ok(()),
            Objective::Meta { x0 } => check_x0(x0),
            Objective::Weighted { eta, x0 } => {
                if !(0.0..=1.0).contains(&eta) {
                    return Err(invalid("eta", format!("must lie in [0, 1], got {eta}")));
                }
                check_x0(x0)
            }
        }
    }
}

/// A candidate `(R_I, L, ξ)`; `r_i` is meters (fixed) or a ratio (flexible).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub r_i: f64,
    pub l: usize,
    pub xi: f64,
}

impl Point {
    pub fn apply(&self, cfg: &NetworkConfig) -> NetworkConfig {
        NetworkConfig { l: self.l, xi: self.xi, scheme: cfg.scheme.with_range(self.r_i), ..cfg.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub r_i: (f64, f64),
    pub l: (usize, usize),
    pub xi: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Precisions {
    pub r_i: f64,
    pub l: usize,
    pub xi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationProblem {
    pub objective: Objective,
    /// Linear SIR threshold.
    pub tau: f64,
    pub bounds: Bounds,
    pub precisions: Precisions,
    pub max_rounds: usize,
    pub initial: Point,
}

impl OptimizationProblem {
    /// Full box for `cfg`'s scheme with the default precisions and a
    /// midpoint start.
    pub fn with_defaults(objective: Objective, tau: f64, cfg: &NetworkConfig) -> Result<OptimizationProblem> {
        cfg.validate()?;
        let (r_max, r_step) = match cfg.scheme {
            InScheme::Fixed { .. } => (match_fixed_range(MU_MAX, cfg.lambda_bs, cfg.xi_max())?, 5.0),
            InScheme::Flexible { .. } => (MU_MAX, 0.05),
        };
        let bounds = Bounds { r_i: (0.0, r_max), l: (0, cfg.m - 1), xi: (1.0, cfg.xi_max()) };
        let precisions = Precisions { r_i: r_step, l: 1, xi: 0.05 };
        let initial = midpoint(&bounds, &precisions);
        Ok(OptimizationProblem { objective, tau, bounds, precisions, max_rounds: 20, initial })
    }

    pub fn validate(&self, cfg: &NetworkConfig) -> Result<()> {
        self.objective.validate()?;
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(invalid("tau", format!("must be finite and nonnegative, got {}", self.tau)));
        }
        let Bounds { r_i, l, xi } = self.bounds;
        if !(r_i.0 >= 0.0 && r_i.0 <= r_i.1 && r_i.1.is_finite()) {
            return Err(invalid("bounds.r_i", format!("need 0 <= lo <= hi, got {r_i:?}")));
        }
        if l.0 > l.1 || l.1 + 1 > cfg.m {
            return Err(invalid("bounds.l", format!("need lo <= hi <= M-1 = {}, got {l:?}", cfg.m - 1)));
        }
        if !(xi.0 >= 1.0 - 1e-12 && xi.0 <= xi.1 && xi.1 <= cfg.xi_max() + 1e-12) {
            return Err(invalid("bounds.xi", format!("need 1 <= lo <= hi <= N/C = {}, got {xi:?}", cfg.xi_max())));
        }
        let p = self.precisions;
        if !(p.r_i > 0.0) || !(p.xi > 0.0) || p.l == 0 {
            return Err(invalid("precisions", format!("must be positive, got {p:?}")));
        }
        if self.max_rounds == 0 {
            return Err(invalid("max_rounds", "must be at least 1"));
        }
        Ok(())
    }
}

/// Grid `lo, lo+step, …` capped at and always including `hi`.
pub fn real_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    if hi - grid[n] > 1e-9 * step.max(hi.abs()) {
        grid.push(hi);
    } else {
        grid[n] = hi;
    }
    grid
}

pub fn integer_grid(lo: usize, hi: usize, step: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (lo..=hi).step_by(step).collect();
    if *grid.last().expect("lo <= hi") != hi {
        grid.push(hi);
    }
    grid
}

fn snap(grid: &[f64], v: f64) -> f64 {
    *grid
        .iter()
        .min_by(|a, b| (*a - v).abs().total_cmp(&(*b - v).abs()))
        .expect("grid is nonempty")
}

/// Box midpoint snapped to the grids, with `L = ⌊(lo+hi)/2⌋`.
pub fn midpoint(bounds: &Bounds, precisions: &Precisions) -> Point {
    let r_grid = real_grid(bounds.r_i.0, bounds.r_i.1, precisions.r_i);
    let xi_grid = real_grid(bounds.xi.0, bounds.xi.1, precisions.xi);
    let l_grid = integer_grid(bounds.l.0, bounds.l.1, precisions.l);
    let l_mid = (bounds.l.0 + bounds.l.1) / 2;
    let l = *l_grid.iter().min_by_key(|&&l| l.abs_diff(l_mid)).expect("grid is nonempty");
    Point {
        r_i: snap(&r_grid, 0.5 * (bounds.r_i.0 + bounds.r_i.1)),
        l,
        xi: snap(&xi_grid, 0.5 * (bounds.xi.0 + bounds.xi.1)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: f64,
    /// Inverse variance hit [`INVERSE_VARIANCE_CAP`].
    pub capped: bool,
}

/// Objective on hit-mass weighted totals at `point`.
pub fn evaluate_objective(objective: &Objective, tau: f64, point: &Point, cfg: &NetworkConfig) -> Result<Evaluation> {
    let cfg = point.apply(cfg);
    cfg.validate()?;
    let hit = cfg.cache_design()?.hit_mass;
    let meta_at = |x0: f64| -> Result<f64> { Ok(hit * beta_meta(&MomentSummary::compute(tau, &cfg)?, x0)?) };
    let plain = |value: f64| Evaluation { value, capped: false };
    match *objective {
        Objective::Stp => Ok(plain(stp_total(tau, &cfg)?)),
        Objective::Meta { x0 } => Ok(plain(meta_at(x0)?)),
        Objective::Weighted { eta, x0 } => {
            let stp = if eta > 0.0 { stp_total(tau, &cfg)? } else { 0.0 };
            let meta = if eta < 1.0 { meta_at(x0)? } else { 0.0 };
            Ok(plain(eta * stp + (1.0 - eta) * meta))
        }
        Objective::InverseVariance => {
            let v = hit * MomentSummary::compute(tau, &cfg)?.variance();
            if v * INVERSE_VARIANCE_CAP <= 1.0 {
                Ok(Evaluation { value: INVERSE_VARIANCE_CAP, capped: true })
            } else {
                Ok(plain(1.0 / v))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinate {
    Start,
    RI,
    L,
    Xi,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryStep {
    pub round: usize,
    pub coordinate: Coordinate,
    pub point: Point,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub point: Point,
    /// Objective re-evaluated at `point`.
    pub objective_value: f64,
    pub rounds: usize,
    pub converged: bool,
    /// `max_rounds` ran out before a round improved by less than [`ROUND_TOL`].
    pub budget_exhausted: bool,
    pub capped: bool,
    pub trajectory: Vec<TrajectoryStep>,
}

/// Index of the first maximum, so ties go to the smaller coordinate.
fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Cyclic exhaustive grid scans over `R_I`, then `L`, then `ξ`.
pub fn coordinate_descent(problem: &OptimizationProblem, cfg: &NetworkConfig, exec: Execution) -> Result<OptimizationResult> {
    problem.validate(cfg)?;
    let b = problem.bounds;
    let p = problem.precisions;
    let r_grid = real_grid(b.r_i.0, b.r_i.1, p.r_i);
    let l_grid = integer_grid(b.l.0, b.l.1, p.l);
    let xi_grid = real_grid(b.xi.0, b.xi.1, p.xi);
    let mut point = Point {
        r_i: snap(&r_grid, problem.initial.r_i),
        l: *l_grid
            .iter()
            .min_by_key(|&&l| l.abs_diff(problem.initial.l))
            .expect("grid is nonempty"),
        xi: snap(&xi_grid, problem.initial.xi),
    };
    let eval = |pt: &Point| evaluate_objective(&problem.objective, problem.tau, pt, cfg).map(|e| e.value);
    let mut value = eval(&point)?;
    let mut trajectory = vec![TrajectoryStep { round: 0, coordinate: Coordinate::Start, point, value }];
    let mut converged = false;
    let mut rounds = 0;
    while rounds < problem.max_rounds {
        rounds += 1;
        let start = value;
        for coordinate in [Coordinate::RI, Coordinate::L, Coordinate::Xi] {
            let candidates: Vec<Point> = match coordinate {
                Coordinate::RI => r_grid.iter().map(|&r_i| Point { r_i, ..point }).collect(),
                Coordinate::L => l_grid.iter().map(|&l| Point { l, ..point }).collect(),
                Coordinate::Xi => xi_grid.iter().map(|&xi| Point { xi, ..point }).collect(),
                Coordinate::Start => unreachable!(),
            };
            if candidates.len() < 2 {
                continue;
            }
            let values = map_indexed(exec, candidates.len(), |k| eval(&candidates[k]))
                .into_iter()
                .collect::<Result<Vec<f64>>>()?;
            let best = first_argmax(&values);
            point = candidates[best];
            value = values[best];
            trajectory.push(TrajectoryStep { round: rounds, coordinate, point, value });
        }
        if value - start < ROUND_TOL {
            converged = true;
            break;
        }
    }
    let check = evaluate_objective(&problem.objective, problem.tau, &point, cfg)?;
    Ok(OptimizationResult {
        point,
        objective_value: check.value,
        rounds,
        converged,
        budget_exhausted: !converged,
        capped: check.capped,
        trajectory,
    })
}
