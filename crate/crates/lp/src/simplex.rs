//! Two-phase primal simplex over bounded variables.
//!
//! Every row `i` gets a logical variable `rᵢ = aᵢ·x` whose bounds encode the row sense, so the
//! working system is the homogeneous `A x − r = 0`. Nonbasic variables sit at a bound (or at zero
//! when free). Phase 1 minimizes the sum of bound violations of the basic variables; phase 2
//! minimizes `cᵀx` from the feasible basis.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use log::{debug, warn};

use crate::factor::{ColumnRef, Factor};
use crate::problem::{LinearProgram, RowId};
use crate::{Basis, Infeasibility, LpSolution, SolveError, SolverOptions, Status, VarStatus};

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const TRAIL_LEN: usize = 32;
const MAX_REPAIRS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic(usize),
    Lower,
    Upper,
    Free,
}

enum Step {
    Flip(f64),
    Pivot {
        pos: usize,
        theta: f64,
        to_upper: bool,
    },
    Unbounded,
}

enum Outcome {
    Optimal,
    Infeasible,
    Unbounded { entering: usize, dir: f64 },
}

pub(crate) struct Simplex<'a> {
    lp: &'a LinearProgram,
    opts: &'a SolverOptions,
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    row_index: Vec<usize>,
    neg_one: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    head: Vec<usize>,
    factor: Option<Factor>,
    y: Vec<f64>,
    d: Vec<f64>,
    alpha: Vec<f64>,
    iterations: usize,
    degenerate_run: usize,
    bland: bool,
    trail: VecDeque<String>,
}

impl<'a> Simplex<'a> {
    pub fn new(lp: &'a LinearProgram, opts: &'a SolverOptions) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();

        let mut counts = vec![0usize; n + 1];
        for row in lp.rows() {
            for &(v, _) in &row.coeffs {
                counts[v.0 + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let nnz = col_start[n];
        let mut col_row = vec![0; nnz];
        let mut col_val = vec![0.0; nnz];
        for (i, row) in lp.rows().iter().enumerate() {
            for &(v, a) in &row.coeffs {
                if a != 0.0 {
                    col_row[fill[v.0]] = i;
                    col_val[fill[v.0]] = a;
                    fill[v.0] += 1;
                }
            }
        }
        // Explicit zeros were skipped above; compact each column.
        let mut cs = vec![0usize; n + 1];
        let mut w = 0;
        for j in 0..n {
            for idx in col_start[j]..fill[j] {
                col_row[w] = col_row[idx];
                col_val[w] = col_val[idx];
                w += 1;
            }
            cs[j + 1] = w;
        }
        col_row.truncate(w);
        col_val.truncate(w);

        let mut cost = lp.objective.clone();
        cost.resize(n + m, 0.0);
        let mut lo = lp.lower.clone();
        let mut hi = lp.upper.clone();
        for row in lp.rows() {
            let (l, h) = row.activity_bounds();
            lo.push(l);
            hi.push(h);
        }

        Simplex {
            lp,
            opts,
            n,
            m,
            col_start: cs,
            col_row,
            col_val,
            row_index: (0..m).collect(),
            neg_one: vec![-1.0; m],
            cost,
            lo,
            hi,
            x: vec![0.0; n + m],
            state: vec![State::Lower; n + m],
            head: vec![0; m],
            factor: None,
            y: vec![0.0; m],
            d: vec![0.0; n + m],
            alpha: vec![0.0; m],
            iterations: 0,
            degenerate_run: 0,
            bland: false,
            trail: VecDeque::with_capacity(TRAIL_LEN),
        }
    }

    fn column(&self, j: usize) -> (&[usize], &[f64]) {
        if j < self.n {
            let (s, e) = (self.col_start[j], self.col_start[j + 1]);
            (&self.col_row[s..e], &self.col_val[s..e])
        } else {
            let i = j - self.n;
            (&self.row_index[i..i + 1], &self.neg_one[i..i + 1])
        }
    }

    fn set_nonbasic_at_natural_bound(&mut self, j: usize) {
        let (l, h) = (self.lo[j], self.hi[j]);
        if l.is_finite() {
            self.state[j] = State::Lower;
            self.x[j] = l;
        } else if h.is_finite() {
            self.state[j] = State::Upper;
            self.x[j] = h;
        } else {
            self.state[j] = State::Free;
            self.x[j] = 0.0;
        }
    }

    /// Slack basis, with equality rows taken over by structural columns where a triangular
    /// assignment exists.
    pub fn cold_start(&mut self) {
        for j in 0..self.n {
            self.set_nonbasic_at_natural_bound(j);
        }
        for i in 0..self.m {
            self.head[i] = self.n + i;
            self.state[self.n + i] = State::Basic(i);
        }
        if self.opts.crash {
            self.crash();
        }
    }

    fn crash(&mut self) {
        #[derive(PartialEq)]
        struct Cand {
            range: f64,
            j: usize,
        }
        impl Eq for Cand {}
        impl Ord for Cand {
            fn cmp(&self, other: &Self) -> Ordering {
                self.range
                    .total_cmp(&other.range)
                    .then_with(|| other.j.cmp(&self.j))
            }
        }
        impl PartialOrd for Cand {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }

        let (n, m) = (self.n, self.m);
        let mut active: Vec<bool> = self
            .lp
            .rows()
            .iter()
            .map(|r| r.sense == crate::RowSense::Eq)
            .collect();
        let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        let eligible: Vec<bool> = (0..n).map(|j| self.lo[j] < self.hi[j]).collect();
        let mut count = vec![0usize; n];
        for j in 0..n {
            let (rows, _) = self.column(j);
            for &r in rows {
                row_cols[r].push(j);
                if active[r] && eligible[j] {
                    count[j] += 1;
                }
            }
        }
        let mut heap: BinaryHeap<Cand> = (0..n)
            .filter(|&j| eligible[j] && count[j] == 1)
            .map(|j| Cand {
                range: self.hi[j] - self.lo[j],
                j,
            })
            .collect();
        let mut used = vec![false; n];
        let mut assigned = 0;
        while let Some(Cand { j, .. }) = heap.pop() {
            if used[j] || count[j] != 1 {
                continue;
            }
            let (rows, vals) = self.column(j);
            let max_abs = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let Some((r, _)) = rows
                .iter()
                .zip(vals)
                .find(|&(&r, &a)| active[r] && a.abs() >= 0.01 * max_abs)
            else {
                continue;
            };
            let r = *r;
            used[j] = true;
            active[r] = false;
            self.head[r] = j;
            self.state[j] = State::Basic(r);
            self.set_nonbasic_at_natural_bound(n + r);
            assigned += 1;
            for &k in &row_cols[r] {
                if eligible[k] && !used[k] {
                    count[k] -= 1;
                    if count[k] == 1 {
                        heap.push(Cand {
                            range: self.hi[k] - self.lo[k],
                            j: k,
                        });
                    }
                }
            }
        }
        debug!("crash placed {assigned} structural columns in the initial basis");
    }

    /// Installs a user basis. Returns false when the hint does not fit this problem.
    pub fn warm_start(&mut self, hint: &Basis) -> bool {
        if hint.columns.len() != self.n || hint.rows.len() != self.m {
            return false;
        }
        let basics = hint
            .columns
            .iter()
            .chain(&hint.rows)
            .filter(|s| **s == VarStatus::Basic)
            .count();
        if basics != self.m {
            return false;
        }
        let mut pos = 0;
        for (j, status) in hint.columns.iter().chain(&hint.rows).enumerate() {
            let (l, h) = (self.lo[j], self.hi[j]);
            match status {
                VarStatus::Basic => {
                    self.head[pos] = j;
                    self.state[j] = State::Basic(pos);
                    pos += 1;
                }
                VarStatus::AtUpper if h.is_finite() => {
                    self.state[j] = State::Upper;
                    self.x[j] = h;
                }
                VarStatus::AtLower if l.is_finite() => {
                    self.state[j] = State::Lower;
                    self.x[j] = l;
                }
                _ => self.set_nonbasic_at_natural_bound(j),
            }
        }
        true
    }

    fn refactor(&mut self) -> Result<(), SolveError> {
        for attempt in 0..=MAX_REPAIRS {
            let cols: Vec<ColumnRef<'_>> = self
                .head
                .iter()
                .map(|&j| {
                    let (rows, vals) = self.column(j);
                    ColumnRef { rows, vals }
                })
                .collect();
            match Factor::new(self.m, &cols) {
                Ok(f) => {
                    self.factor = Some(f);
                    return Ok(());
                }
                Err(singular) => {
                    if attempt == MAX_REPAIRS {
                        break;
                    }
                    warn!(
                        "basis singular in {} positions; replacing with logical columns",
                        singular.positions.len()
                    );
                    for (&p, &r) in singular.positions.iter().zip(&singular.rows) {
                        let old = self.head[p];
                        self.set_nonbasic_at_natural_bound(old);
                        let logical = self.n + r;
                        self.head[p] = logical;
                        self.state[logical] = State::Basic(p);
                    }
                    self.push_trail(format!(
                        "repair: {} singular basis positions",
                        singular.positions.len()
                    ));
                }
            }
        }
        Err(self.failure("basis remains singular after repeated repair"))
    }

    fn factor_mut(&mut self) -> &mut Factor {
        self.factor.as_mut().expect("basis factorized")
    }

    fn recompute_basics(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if matches!(self.state[j], State::Basic(_)) || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            let (rows, vals) = self.column(j);
            for (&r, &a) in rows.iter().zip(vals) {
                rhs[r] -= a * xj;
            }
        }
        self.factor_mut().ftran(&mut rhs);
        for (p, v) in rhs.into_iter().enumerate() {
            let j = self.head[p];
            self.x[j] = v;
        }
    }

    /// Phase-1 cost of a basic variable: -1 below its lower bound, +1 above its upper bound.
    fn infeasibility_sign(&self, j: usize) -> f64 {
        let tol = self.opts.tol_feas;
        if self.x[j] < self.lo[j] - tol {
            -1.0
        } else if self.x[j] > self.hi[j] + tol {
            1.0
        } else {
            0.0
        }
    }

    fn sum_infeasibility(&self) -> f64 {
        self.head
            .iter()
            .map(|&j| {
                (self.lo[j] - self.x[j])
                    .max(self.x[j] - self.hi[j])
                    .max(0.0)
            })
            .sum()
    }

    fn compute_duals(&mut self, phase1: bool) {
        let mut cb: Vec<f64> = self
            .head
            .iter()
            .map(|&j| {
                if phase1 {
                    self.infeasibility_sign(j)
                } else {
                    self.cost[j]
                }
            })
            .collect();
        self.factor_mut().btran(&mut cb);
        self.y = cb;
    }

    fn compute_reduced_costs(&mut self, phase1: bool) {
        for j in 0..self.n {
            if matches!(self.state[j], State::Basic(_)) {
                self.d[j] = 0.0;
                continue;
            }
            let (s, e) = (self.col_start[j], self.col_start[j + 1]);
            let mut dj = if phase1 { 0.0 } else { self.cost[j] };
            for idx in s..e {
                dj -= self.y[self.col_row[idx]] * self.col_val[idx];
            }
            self.d[j] = dj;
        }
        for i in 0..self.m {
            let j = self.n + i;
            self.d[j] = if matches!(self.state[j], State::Basic(_)) {
                0.0
            } else {
                self.y[i]
            };
        }
    }

    /// Improving direction for a nonbasic variable, if any.
    fn improving_dir(&self, j: usize) -> Option<f64> {
        let tol = self.opts.tol_opt;
        let dj = self.d[j];
        match self.state[j] {
            State::Basic(_) => None,
            _ if self.lo[j] == self.hi[j] => None,
            State::Lower if dj < -tol => Some(1.0),
            State::Upper if dj > tol => Some(-1.0),
            State::Free if dj.abs() > tol => Some(-dj.signum()),
            _ => None,
        }
    }

    fn select_entering(&self) -> Option<(usize, f64)> {
        let total = self.n + self.m;
        if self.bland {
            return (0..total).find_map(|j| self.improving_dir(j).map(|dir| (j, dir)));
        }
        let best = (0..total)
            .filter(|&j| self.improving_dir(j).is_some())
            .map(|j| self.d[j].abs())
            .fold(0.0f64, f64::max);
        if best == 0.0 {
            return None;
        }
        (0..total).find_map(|j| {
            let dir = self.improving_dir(j)?;
            (self.d[j].abs() >= best - self.opts.tol_opt).then_some((j, dir))
        })
    }

    fn ratio_test(&self, q: usize, dir: f64, phase1: bool) -> Step {
        let relax = if self.bland { 0.0 } else { self.opts.tol_feas };
        let tol = self.opts.tol_feas;
        let range = if dir > 0.0 {
            self.hi[q] - self.x[q]
        } else {
            self.x[q] - self.lo[q]
        };

        let mut hard = range.max(0.0);
        let mut breakpoints: Vec<(f64, usize, bool)> = Vec::new();
        for p in 0..self.m {
            let a = self.alpha[p];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.head[p];
            let delta = -dir * a;
            let (xj, l, h) = (self.x[j], self.lo[j], self.hi[j]);
            if phase1 && xj < l - tol {
                if delta > 0.0 {
                    breakpoints.push(((l - xj) / delta, p, false));
                    if h.is_finite() {
                        hard = hard.min((h - xj + relax) / delta);
                    }
                }
            } else if phase1 && xj > h + tol {
                if delta < 0.0 {
                    breakpoints.push(((xj - h) / -delta, p, true));
                    if l.is_finite() {
                        hard = hard.min((xj - l + relax) / -delta);
                    }
                }
            } else if delta > 0.0 && h.is_finite() {
                hard = hard.min((h - xj + relax) / delta);
            } else if delta < 0.0 && l.is_finite() {
                hard = hard.min((xj - l + relax) / -delta);
            }
        }

        if phase1 && !breakpoints.is_empty() {
            breakpoints.retain(|b| b.0 <= hard);
            breakpoints.sort_by(|a, b| {
                a.0.total_cmp(&b.0)
                    .then_with(|| self.head[a.1].cmp(&self.head[b.1]))
            });
            let mut slope = self.d[q] * dir;
            for &(t, p, from_above) in &breakpoints {
                slope += self.alpha[p].abs();
                if self.bland || slope >= -DEGENERATE_STEP {
                    return Step::Pivot {
                        pos: p,
                        theta: t.max(0.0),
                        to_upper: from_above,
                    };
                }
            }
        }

        if hard.is_infinite() {
            return Step::Unbounded;
        }
        if range <= hard {
            return Step::Flip(range.max(0.0));
        }

        // Among rows blocking within the relaxed step, take the largest pivot.
        let mut best: Option<(usize, f64, bool, f64)> = None;
        for p in 0..self.m {
            let a = self.alpha[p];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.head[p];
            let delta = -dir * a;
            let (xj, l, h) = (self.x[j], self.lo[j], self.hi[j]);
            let below = phase1 && xj < l - tol;
            let above = phase1 && xj > h + tol;
            let (ratio, to_upper) = if delta > 0.0 && h.is_finite() && !above {
                ((h - xj) / delta, true)
            } else if delta < 0.0 && l.is_finite() && !below {
                ((xj - l) / -delta, false)
            } else {
                continue;
            };
            if ratio > hard {
                continue;
            }
            let better = match best {
                None => true,
                Some((bp, br, _, ba)) => {
                    if self.bland {
                        ratio < br - DEGENERATE_STEP
                            || (ratio <= br + DEGENERATE_STEP && j < self.head[bp])
                    } else {
                        a.abs() > ba || (a.abs() == ba && j < self.head[bp])
                    }
                }
            };
            if better {
                best = Some((p, ratio, to_upper, a.abs()));
            }
        }
        match best {
            Some((pos, ratio, to_upper, _)) => Step::Pivot {
                pos,
                theta: ratio.max(0.0),
                to_upper,
            },
            None => Step::Flip(range.max(0.0)),
        }
    }

    fn push_trail(&mut self, entry: String) {
        if self.trail.len() == TRAIL_LEN {
            self.trail.pop_front();
        }
        self.trail.push_back(entry);
    }

    fn failure(&self, message: &str) -> SolveError {
        SolveError::NumericalFailure {
            message: message.to_string(),
            iterations: self.iterations,
            log: self.trail.iter().cloned().collect(),
        }
    }

    fn run(&mut self) -> Result<Outcome, SolveError> {
        let limit = self
            .opts
            .max_iterations
            .unwrap_or_else(|| 50_000usize.max(50 * (self.n + self.m)));
        self.refactor()?;
        self.recompute_basics();
        let mut fresh = true;
        let mut stuck = 0usize;

        loop {
            if self.factor_mut().num_etas() >= self.opts.refactor_interval {
                self.refactor()?;
                self.recompute_basics();
                fresh = true;
            }
            let phase1 = self.head.iter().any(|&j| self.infeasibility_sign(j) != 0.0);
            self.compute_duals(phase1);
            self.compute_reduced_costs(phase1);

            let Some((q, dir)) = self.select_entering() else {
                if !fresh {
                    self.refactor()?;
                    self.recompute_basics();
                    fresh = true;
                    continue;
                }
                return Ok(if phase1 {
                    Outcome::Infeasible
                } else {
                    Outcome::Optimal
                });
            };

            if self.iterations >= limit {
                return Err(SolveError::IterationLimit {
                    iterations: self.iterations,
                    log: self.trail.iter().cloned().collect(),
                });
            }

            let mut alpha = vec![0.0; self.m];
            {
                let (rows, vals) = self.column(q);
                for (&r, &a) in rows.iter().zip(vals) {
                    alpha[r] = a;
                }
            }
            self.factor_mut().ftran(&mut alpha);
            self.alpha = alpha;

            let step = self.ratio_test(q, dir, phase1);
            let theta = match step {
                Step::Unbounded if !phase1 => {
                    return Ok(Outcome::Unbounded { entering: q, dir });
                }
                Step::Unbounded => {
                    // Cannot happen with exact arithmetic: a phase-1 descent direction always
                    // meets a breakpoint. Refresh the factors and retry a few times.
                    stuck += 1;
                    if stuck > 3 {
                        return Err(self.failure("phase-1 direction without breakpoint"));
                    }
                    self.refactor()?;
                    self.recompute_basics();
                    fresh = true;
                    continue;
                }
                Step::Flip(theta) => theta,
                Step::Pivot { theta, .. } => theta,
            };

            self.x[q] += dir * theta;
            if theta != 0.0 {
                for p in 0..self.m {
                    let a = self.alpha[p];
                    if a != 0.0 {
                        let j = self.head[p];
                        self.x[j] -= dir * theta * a;
                    }
                }
            }

            let leaving = match step {
                Step::Flip(_) => {
                    if dir > 0.0 {
                        self.state[q] = State::Upper;
                        self.x[q] = self.hi[q];
                    } else {
                        self.state[q] = State::Lower;
                        self.x[q] = self.lo[q];
                    }
                    None
                }
                Step::Pivot { pos, to_upper, .. } => {
                    let j = self.head[pos];
                    if to_upper && self.lo[j] < self.hi[j] {
                        self.state[j] = State::Upper;
                        self.x[j] = self.hi[j];
                    } else if to_upper {
                        self.state[j] = State::Lower;
                        self.x[j] = self.hi[j];
                    } else {
                        self.state[j] = State::Lower;
                        self.x[j] = self.lo[j];
                    }
                    self.head[pos] = q;
                    self.state[q] = State::Basic(pos);
                    let alpha = std::mem::take(&mut self.alpha);
                    self.factor_mut().update(pos, &alpha);
                    self.alpha = alpha;
                    Some(j)
                }
                Step::Unbounded => unreachable!(),
            };

            self.iterations += 1;
            fresh = false;
            stuck = 0;
            if theta <= DEGENERATE_STEP {
                self.degenerate_run += 1;
                if !self.bland && self.degenerate_run > self.opts.bland_threshold {
                    debug!("switching to Bland's rule at iteration {}", self.iterations);
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
                self.bland = false;
            }
            let entry = format!(
                "it {} phase {} enter {} leave {:?} theta {:.3e}{}",
                self.iterations,
                if phase1 { 1 } else { 2 },
                q,
                leaving,
                theta,
                if self.bland { " bland" } else { "" }
            );
            self.push_trail(entry);
        }
    }

    pub fn solve(mut self, warm_started: bool) -> Result<LpSolution, SolveError> {
        let outcome = self.run()?;
        let n = self.n;
        let x: Vec<f64> = self.x[..n].to_vec();
        let objective_value = self.lp.objective_value(&x);
        let basis = Basis {
            columns: self.state[..n].iter().map(to_status).collect(),
            rows: self.state[n..].iter().map(to_status).collect(),
        };
        let mut solution = LpSolution {
            status: Status::Optimal,
            x,
            objective_value,
            duals: self.y.clone(),
            reduced_costs: self.d[..n].to_vec(),
            iterations: self.iterations,
            basis,
            infeasibility: None,
            ray: None,
            warm_started,
        };
        match outcome {
            Outcome::Optimal => {}
            Outcome::Infeasible => {
                solution.status = Status::Infeasible;
                let tol = self.opts.tol_feas;
                let certificate_rows = (0..self.m)
                    .filter(|&i| self.y[i].abs() > 1e-9)
                    .map(RowId)
                    .collect();
                let violated_rows = (0..self.m)
                    .filter(|&i| self.infeasibility_sign(n + i) != 0.0)
                    .map(RowId)
                    .collect();
                let violated_vars = (0..n)
                    .filter(|&j| {
                        matches!(self.state[j], State::Basic(_))
                            && (self.x[j] < self.lo[j] - tol || self.x[j] > self.hi[j] + tol)
                    })
                    .map(crate::VarId)
                    .collect();
                solution.infeasibility = Some(Infeasibility {
                    residual: self.sum_infeasibility(),
                    certificate_rows,
                    violated_rows,
                    violated_vars,
                });
            }
            Outcome::Unbounded { entering, dir } => {
                solution.status = Status::Unbounded;
                let mut ray = vec![0.0; n];
                if entering < n {
                    ray[entering] = dir;
                }
                for p in 0..self.m {
                    let j = self.head[p];
                    if j < n {
                        ray[j] = -dir * self.alpha[p];
                    }
                }
                solution.ray = Some(ray);
            }
        }
        Ok(solution)
    }
}

fn to_status(s: &State) -> VarStatus {
    match s {
        State::Basic(_) => VarStatus::Basic,
        State::Lower => VarStatus::AtLower,
        State::Upper => VarStatus::AtUpper,
        State::Free => VarStatus::Free,
    }
}
