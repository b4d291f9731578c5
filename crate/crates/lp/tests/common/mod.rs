use gridsched_lp::{LinearProgram, RowSense, VarId};
use gridsched_testkit::vertex::{DenseLp, Sense};

pub fn to_sparse(d: &DenseLp) -> LinearProgram {
    let mut lp = LinearProgram::new();
    let vars: Vec<VarId> = (0..d.num_vars())
        .map(|j| lp.add_var(d.cost[j], d.lower[j], d.upper[j]))
        .collect();
    for row in &d.rows {
        let coeffs = row
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(j, &a)| (vars[j], a))
            .collect();
        let sense = match row.sense {
            Sense::Le => RowSense::Le,
            Sense::Eq => RowSense::Eq,
            Sense::Ge => RowSense::Ge,
        };
        lp.add_row(coeffs, sense, row.rhs);
    }
    lp
}
