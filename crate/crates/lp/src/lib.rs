//! Self-contained linear programming engine.
//!
//! [`solve`] runs a two-phase, bounded-variable revised simplex on a [`LinearProgram`]. The basis
//! is kept as a sparse LU factorization with product-form updates and is refactorized every
//! [`SolverOptions::refactor_interval`] pivots. Entering variables are chosen by largest reduced
//! cost with lowest-index tie-breaking; after a run of degenerate pivots the solver falls back to
//! Bland's rule until progress resumes.
//!
//! [`warm_start_solve`] starts from a previously returned [`Basis`], which is how parameter
//! sweeps that only move right-hand sides avoid starting over.

mod factor;
pub mod mps;
mod problem;
mod simplex;

use thiserror::Error;

pub use problem::{LinearProgram, ModelError, Row, RowId, RowSense, VarId};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Primal feasibility tolerance on bounds and rows.
    pub tol_feas: f64,
    /// Optimality tolerance on reduced costs.
    pub tol_opt: f64,
    /// Pivots between basis refactorizations.
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots before Bland's rule engages.
    pub bland_threshold: usize,
    pub max_iterations: Option<usize>,
    /// Seed the initial basis with a triangular set of structural columns for equality rows.
    pub crash: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_feas: 1e-7,
            tol_opt: 1e-9,
            refactor_interval: 100,
            bland_threshold: 50,
            max_iterations: None,
            crash: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

/// Basic/nonbasic status of every structural column and every row's logical variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Basis {
    pub columns: Vec<VarStatus>,
    pub rows: Vec<VarStatus>,
}

/// What phase 1 ended with when no feasible point exists.
#[derive(Clone, Debug, PartialEq)]
pub struct Infeasibility {
    /// Remaining sum of bound and row violations.
    pub residual: f64,
    /// Rows carrying a nonzero phase-1 multiplier; together they cannot be satisfied.
    pub certificate_rows: Vec<RowId>,
    /// Rows still violated at the phase-1 optimum.
    pub violated_rows: Vec<RowId>,
    /// Basic structural variables left outside their bounds.
    pub violated_vars: Vec<VarId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    /// Primal values of the structural variables.
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// Row multipliers; for an optimal solution `duals[i]` is the rate of change of the optimum
    /// with respect to the right-hand side of row `i`.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    pub basis: Basis,
    pub infeasibility: Option<Infeasibility>,
    /// Improving direction along which the objective decreases without bound.
    pub ray: Option<Vec<f64>>,
    pub warm_started: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
    #[error("solver failure after {iterations} iterations: {message}")]
    NumericalFailure {
        message: String,
        iterations: usize,
        log: Vec<String>,
    },
    #[error("iteration limit reached after {iterations} iterations")]
    IterationLimit { iterations: usize, log: Vec<String> },
}

impl SolveError {
    /// Trailing iteration log captured at the time of failure.
    pub fn log(&self) -> &[String] {
        match self {
            SolveError::Model(_) => &[],
            SolveError::NumericalFailure { log, .. } | SolveError::IterationLimit { log, .. } => {
                log
            }
        }
    }
}

pub fn solve(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, SolveError> {
    warm_start_solve(lp, None, opts)
}

/// Solves `lp`, starting from `hint` when it fits the problem's dimensions.
///
/// A hint with the wrong shape or the wrong number of basic variables is ignored with a warning.
pub fn warm_start_solve(
    lp: &LinearProgram,
    hint: Option<&Basis>,
    opts: &SolverOptions,
) -> Result<LpSolution, SolveError> {
    lp.check()?;
    let mut simplex = simplex::Simplex::new(lp, opts);
    let warm = match hint {
        Some(basis) => {
            let ok = simplex.warm_start(basis);
            if !ok {
                log::warn!("basis hint does not fit the problem; starting cold");
                simplex = simplex::Simplex::new(lp, opts);
                simplex.cold_start();
            }
            ok
        }
        None => {
            simplex.cold_start();
            false
        }
    };
    simplex.solve(warm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn single_bounded_variable() {
        let mut lp = LinearProgram::new();
        lp.add_var(-1.0, 0.0, 5.0);
        let sol = solve(&lp, &opts()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.x, vec![5.0]);
        assert_eq!(sol.objective_value, -5.0);
    }

    #[test]
    fn symmetric_covering_row() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, 0.0, f64::INFINITY);
        let y = lp.add_var(1.0, 0.0, f64::INFINITY);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], RowSense::Ge, 1.0);
        let sol = solve(&lp, &opts()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-12);
        assert!((sol.x[0] + sol.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_reports_ray() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(-1.0, 0.0, f64::INFINITY);
        let y = lp.add_var(0.0, 0.0, f64::INFINITY);
        lp.add_row(vec![(x, 1.0), (y, -1.0)], RowSense::Le, 2.0);
        let sol = solve(&lp, &opts()).unwrap();
        assert_eq!(sol.status, Status::Unbounded);
        let ray = sol.ray.unwrap();
        assert!(ray[0] > 0.0);
        // Moving along the ray keeps the row satisfied.
        assert!(ray[0] - ray[1] <= 1e-12);
    }

    #[test]
    fn infeasible_reports_certificate_rows() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, 0.0, 10.0);
        let a = lp.add_named_row("at_least_three", vec![(x, 1.0)], RowSense::Ge, 3.0);
        let b = lp.add_named_row("at_most_two", vec![(x, 1.0)], RowSense::Le, 2.0);
        let unrelated = lp.add_var(0.0, 0.0, 1.0);
        lp.add_row(vec![(unrelated, 1.0)], RowSense::Le, 1.0);
        let sol = solve(&lp, &opts()).unwrap();
        assert_eq!(sol.status, Status::Infeasible);
        let info = sol.infeasibility.unwrap();
        assert!((info.residual - 1.0).abs() < 1e-9);
        assert_eq!(info.certificate_rows, vec![a, b]);
    }

    #[test]
    fn equality_rows_and_free_variables() {
        // min x + 2y - z  s.t.  x + y + z = 4, x - y = 1, z free but z <= 3
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, 0.0, f64::INFINITY);
        let y = lp.add_var(2.0, 0.0, f64::INFINITY);
        let z = lp.add_var(-1.0, f64::NEG_INFINITY, 3.0);
        lp.add_row(vec![(x, 1.0), (y, 1.0), (z, 1.0)], RowSense::Eq, 4.0);
        lp.add_row(vec![(x, 1.0), (y, -1.0)], RowSense::Eq, 1.0);
        let sol = solve(&lp, &opts()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        // y = 0, x = 1, z = 3
        assert!((sol.objective_value - (1.0 - 3.0)).abs() < 1e-9);
        assert!(lp.max_violation(&sol.x) < 1e-9);
    }

    #[test]
    fn duals_price_the_binding_row() {
        // min -x - y s.t. x + 2y <= 4, x <= 3 (bound)
        let mut lp = LinearProgram::new();
        let x = lp.add_var(-1.0, 0.0, 3.0);
        let y = lp.add_var(-1.0, 0.0, f64::INFINITY);
        lp.add_row(vec![(x, 1.0), (y, 2.0)], RowSense::Le, 4.0);
        let sol = solve(&lp, &opts()).unwrap();
        assert!((sol.objective_value + 3.5).abs() < 1e-12);
        assert!((sol.duals[0] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_models() {
        let mut lp = LinearProgram::new();
        lp.add_var(1.0, 2.0, 1.0);
        assert!(matches!(
            solve(&lp, &opts()),
            Err(SolveError::Model(ModelError::BadBounds { .. }))
        ));

        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, 0.0, 1.0);
        lp.add_row(vec![(x, f64::NAN)], RowSense::Le, 1.0);
        assert!(matches!(
            solve(&lp, &opts()),
            Err(SolveError::Model(ModelError::NonFiniteCoefficient { .. }))
        ));
    }

    #[test]
    fn mismatched_hint_falls_back_to_cold_start() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, 0.0, 10.0);
        lp.add_row(vec![(x, 1.0)], RowSense::Ge, 2.0);
        let hint = Basis {
            columns: vec![VarStatus::Basic; 3],
            rows: vec![],
        };
        let sol = warm_start_solve(&lp, Some(&hint), &opts()).unwrap();
        assert!(!sol.warm_started);
        assert!((sol.objective_value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_infeasible_row() {
        let mut lp = LinearProgram::new();
        lp.add_var(1.0, 0.0, 1.0);
        let r = lp.add_row(vec![], RowSense::Le, -1.0);
        let sol = solve(&lp, &opts()).unwrap();
        assert_eq!(sol.status, Status::Infeasible);
        assert_eq!(sol.infeasibility.unwrap().violated_rows, vec![r]);
    }
}
