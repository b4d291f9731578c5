use std::fmt;

use thiserror::Error;

/// Index of a structural variable in a [`LinearProgram`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// Index of a constraint row in a [`LinearProgram`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Row {
    /// Activity `a·x` of the row at the given point.
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, a)| a * x[v.0]).sum()
    }

    /// Amount by which the row is violated at `x` (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.sense {
            RowSense::Le => (act - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - act).max(0.0),
            RowSense::Eq => (act - self.rhs).abs(),
        }
    }

    /// Bounds `[lo, hi]` on the row activity implied by the sense.
    pub(crate) fn activity_bounds(&self) -> (f64, f64) {
        match self.sense {
            RowSense::Le => (f64::NEG_INFINITY, self.rhs),
            RowSense::Eq => (self.rhs, self.rhs),
            RowSense::Ge => (self.rhs, f64::INFINITY),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("variable {var}: non-finite objective coefficient {value}")]
    NonFiniteCost { var: String, value: f64 },
    #[error("variable {var}: inconsistent bounds [{lo}, {hi}]")]
    BadBounds { var: String, lo: f64, hi: f64 },
    #[error("row {row}: non-finite coefficient for variable {var}")]
    NonFiniteCoefficient { row: String, var: String },
    #[error("row {row}: non-finite right-hand side {value}")]
    NonFiniteRhs { row: String, value: f64 },
    #[error("row {row}: reference to unknown variable index {index}")]
    UnknownVariable { row: String, index: usize },
    #[error("row {row}: variable {var} appears more than once")]
    DuplicateEntry { row: String, var: String },
}

/// A minimization problem `min cᵀx` subject to sparse rows and per-variable box bounds.
///
/// Variable upper bounds may be `+∞` and lower bounds `-∞`; everything else must be finite.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub(crate) objective: Vec<f64>,
    pub(crate) lower: Vec<f64>,
    pub(crate) upper: Vec<f64>,
    pub(crate) rows: Vec<Row>,
    pub(crate) var_names: Vec<Option<String>>,
    pub(crate) row_names: Vec<Option<String>>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> VarId {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.var_names.push(None);
        VarId(self.objective.len() - 1)
    }

    pub fn add_named_var(
        &mut self,
        name: impl Into<String>,
        cost: f64,
        lower: f64,
        upper: f64,
    ) -> VarId {
        let v = self.add_var(cost, lower, upper);
        self.var_names[v.0] = Some(name.into());
        v
    }

    pub fn add_row(&mut self, coeffs: Vec<(VarId, f64)>, sense: RowSense, rhs: f64) -> RowId {
        self.rows.push(Row { coeffs, sense, rhs });
        self.row_names.push(None);
        RowId(self.rows.len() - 1)
    }

    pub fn add_named_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(VarId, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> RowId {
        let r = self.add_row(coeffs, sense, rhs);
        self.row_names[r.0] = Some(name.into());
        r
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn set_cost(&mut self, var: VarId, cost: f64) {
        self.objective[var.0] = cost;
    }

    pub fn bounds(&self, var: VarId) -> (f64, f64) {
        (self.lower[var.0], self.upper[var.0])
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        self.lower[var.0] = lower;
        self.upper[var.0] = upper;
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row(&self, row: RowId) -> &Row {
        &self.rows[row.0]
    }

    pub fn set_rhs(&mut self, row: RowId, rhs: f64) {
        self.rows[row.0].rhs = rhs;
    }

    /// Variable label, falling back to `x<index>`.
    pub fn var_name(&self, var: VarId) -> String {
        self.var_names[var.0]
            .clone()
            .unwrap_or_else(|| format!("x{}", var.0))
    }

    /// Row label, falling back to `r<index>`.
    pub fn row_name(&self, row: RowId) -> String {
        self.row_names[row.0]
            .clone()
            .unwrap_or_else(|| format!("r{}", row.0))
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest bound or row violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds =
            (0..self.num_vars()).map(|j| (self.lower[j] - x[j]).max(x[j] - self.upper[j]).max(0.0));
        let rows = self.rows.iter().map(|r| r.violation(x));
        bounds.chain(rows).fold(0.0, f64::max)
    }

    pub fn check(&self) -> Result<(), ModelError> {
        for j in 0..self.num_vars() {
            let (c, lo, hi) = (self.objective[j], self.lower[j], self.upper[j]);
            if !c.is_finite() {
                return Err(ModelError::NonFiniteCost {
                    var: self.var_name(VarId(j)),
                    value: c,
                });
            }
            if lo.is_nan()
                || hi.is_nan()
                || lo > hi
                || lo == f64::INFINITY
                || hi == f64::NEG_INFINITY
            {
                return Err(ModelError::BadBounds {
                    var: self.var_name(VarId(j)),
                    lo,
                    hi,
                });
            }
        }
        let mut seen = vec![usize::MAX; self.num_vars()];
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(ModelError::NonFiniteRhs {
                    row: self.row_name(RowId(i)),
                    value: row.rhs,
                });
            }
            for &(v, a) in &row.coeffs {
                if v.0 >= self.num_vars() {
                    return Err(ModelError::UnknownVariable {
                        row: self.row_name(RowId(i)),
                        index: v.0,
                    });
                }
                if !a.is_finite() {
                    return Err(ModelError::NonFiniteCoefficient {
                        row: self.row_name(RowId(i)),
                        var: self.var_name(v),
                    });
                }
                if seen[v.0] == i {
                    return Err(ModelError::DuplicateEntry {
                        row: self.row_name(RowId(i)),
                        var: self.var_name(v),
                    });
                }
                seen[v.0] = i;
            }
        }
        Ok(())
    }
}
