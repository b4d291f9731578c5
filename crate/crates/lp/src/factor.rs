//! Sparse LU factorization of the simplex basis with product-form (eta) updates.
//!
//! The basis is factorized left-looking, one column at a time. Columns are taken in order of
//! their remaining count in unpivoted rows, so the triangular parts of the basis (logicals,
//! storage chains) factor without fill. The pivot inside a column is chosen by threshold partial
//! pivoting, preferring rows with few remaining entries.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

const PIVOT_THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

/// A basis column in row space.
pub(crate) struct ColumnRef<'a> {
    pub rows: &'a [usize],
    pub vals: &'a [f64],
}

#[derive(Debug)]
pub(crate) struct Singular {
    /// Basis positions whose columns are linearly dependent on earlier ones.
    pub positions: Vec<usize>,
    /// Rows left without a pivot; pairs with `positions` for basis repair.
    pub rows: Vec<usize>,
}

struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

pub(crate) struct Factor {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_pos: Vec<usize>,
    row_to_k: Vec<usize>,
    l_start: Vec<usize>,
    l_row: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_k: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
    etas: Vec<Eta>,
    work: Vec<f64>,
}

impl Factor {
    /// Factorizes the `m × m` basis whose column at position `p` is `cols[p]`.
    pub fn new(m: usize, cols: &[ColumnRef<'_>]) -> Result<Self, Singular> {
        debug_assert_eq!(cols.len(), m);

        // Row-wise pattern of the basis, used to maintain remaining counts.
        let mut row_start = vec![0usize; m + 1];
        for c in cols {
            for &r in c.rows {
                row_start[r + 1] += 1;
            }
        }
        for r in 0..m {
            row_start[r + 1] += row_start[r];
        }
        let mut fill = row_start.clone();
        let mut row_pos = vec![0usize; row_start[m]];
        for (p, c) in cols.iter().enumerate() {
            for &r in c.rows {
                row_pos[fill[r]] = p;
                fill[r] += 1;
            }
        }

        let mut col_count: Vec<usize> = cols.iter().map(|c| c.rows.len()).collect();
        let mut row_count: Vec<usize> = (0..m).map(|r| row_start[r + 1] - row_start[r]).collect();
        let mut col_done = vec![false; m];
        let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
            (0..m).map(|p| Reverse((col_count[p], p))).collect();

        let mut f = Factor {
            m,
            pivot_row: Vec::with_capacity(m),
            pivot_pos: Vec::with_capacity(m),
            row_to_k: vec![usize::MAX; m],
            l_start: vec![0],
            l_row: Vec::new(),
            l_val: Vec::new(),
            u_start: vec![0],
            u_k: Vec::new(),
            u_val: Vec::new(),
            u_diag: Vec::with_capacity(m),
            etas: Vec::new(),
            work: vec![0.0; m],
        };

        let mut w = vec![0.0; m];
        let mut mark = vec![false; m];
        let mut topo: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut singular_positions = Vec::new();

        while let Some(Reverse((count, p))) = heap.pop() {
            if col_done[p] || count != col_count[p] {
                continue;
            }
            col_done[p] = true;
            let col = &cols[p];

            // Symbolic reach through the L columns built so far, in topological order.
            topo.clear();
            for &r0 in col.rows {
                if mark[r0] {
                    continue;
                }
                stack.push((r0, 0));
                mark[r0] = true;
                while let Some(&(r, next)) = stack.last() {
                    let k = f.row_to_k[r];
                    let (start, end) = if k == usize::MAX {
                        (0, 0)
                    } else {
                        (f.l_start[k], f.l_start[k + 1])
                    };
                    let mut i = start + next;
                    let mut child = None;
                    while i < end {
                        let c = f.l_row[i];
                        i += 1;
                        if !mark[c] {
                            child = Some(c);
                            break;
                        }
                    }
                    if let Some(top) = stack.last_mut() {
                        top.1 = i - start;
                    }
                    match child {
                        Some(c) => {
                            mark[c] = true;
                            stack.push((c, 0));
                        }
                        None => {
                            topo.push(r);
                            stack.pop();
                        }
                    }
                }
            }

            for (&r, &v) in col.rows.iter().zip(col.vals) {
                w[r] = v;
            }
            // Numeric solve with L, visiting rows in reverse post-order.
            for &r in topo.iter().rev() {
                let k = f.row_to_k[r];
                if k == usize::MAX {
                    continue;
                }
                let v = w[r];
                if v == 0.0 {
                    continue;
                }
                for idx in f.l_start[k]..f.l_start[k + 1] {
                    w[f.l_row[idx]] -= f.l_val[idx] * v;
                }
            }

            let mut max_abs = 0.0f64;
            for &r in &topo {
                if f.row_to_k[r] == usize::MAX {
                    max_abs = max_abs.max(w[r].abs());
                }
            }

            if max_abs <= SINGULAR_TOL {
                singular_positions.push(p);
                for &r in &topo {
                    w[r] = 0.0;
                    mark[r] = false;
                }
                continue;
            }

            let mut pivot_r = usize::MAX;
            for &r in &topo {
                if f.row_to_k[r] != usize::MAX || w[r].abs() < PIVOT_THRESHOLD * max_abs {
                    continue;
                }
                let better = pivot_r == usize::MAX
                    || row_count[r] < row_count[pivot_r]
                    || (row_count[r] == row_count[pivot_r] && r < pivot_r);
                if better {
                    pivot_r = r;
                }
            }
            let pivot = w[pivot_r];
            let k = f.pivot_row.len();

            for &r in &topo {
                let v = w[r];
                let rk = f.row_to_k[r];
                if rk != usize::MAX {
                    if v.abs() > DROP_TOL {
                        f.u_k.push(rk);
                        f.u_val.push(v);
                    }
                } else if r != pivot_r && v.abs() > DROP_TOL {
                    f.l_row.push(r);
                    f.l_val.push(v / pivot);
                }
                w[r] = 0.0;
                mark[r] = false;
            }
            f.u_start.push(f.u_k.len());
            f.l_start.push(f.l_row.len());
            f.u_diag.push(pivot);
            f.pivot_row.push(pivot_r);
            f.pivot_pos.push(p);
            f.row_to_k[pivot_r] = k;

            for &r in col.rows {
                row_count[r] -= 1;
            }
            for idx in row_start[pivot_r]..row_start[pivot_r + 1] {
                let q = row_pos[idx];
                if !col_done[q] {
                    col_count[q] -= 1;
                    heap.push(Reverse((col_count[q], q)));
                }
            }
        }

        if !singular_positions.is_empty() {
            let rows = (0..m).filter(|&r| f.row_to_k[r] == usize::MAX).collect();
            return Err(Singular {
                positions: singular_positions,
                rows,
            });
        }
        Ok(f)
    }

    pub fn num_etas(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B z = b` in place: `rhs` holds `b` (row space) on entry and `z` (basis positions)
    /// on exit.
    pub fn ftran(&mut self, rhs: &mut [f64]) {
        let m = self.m;
        // L solve in row space.
        for k in 0..m {
            let v = rhs[self.pivot_row[k]];
            if v == 0.0 {
                continue;
            }
            for idx in self.l_start[k]..self.l_start[k + 1] {
                rhs[self.l_row[idx]] -= self.l_val[idx] * v;
            }
        }
        // U solve in pivot order.
        let z = &mut self.work;
        for k in 0..m {
            z[k] = rhs[self.pivot_row[k]];
        }
        for k in (0..m).rev() {
            let v = z[k] / self.u_diag[k];
            z[k] = v;
            if v == 0.0 {
                continue;
            }
            for idx in self.u_start[k]..self.u_start[k + 1] {
                z[self.u_k[idx]] -= self.u_val[idx] * v;
            }
        }
        for k in 0..m {
            rhs[self.pivot_pos[k]] = z[k];
        }
        for eta in &self.etas {
            let zp = rhs[eta.pos] / eta.pivot;
            if zp != 0.0 {
                for &(i, a) in &eta.entries {
                    rhs[i] -= a * zp;
                }
            }
            rhs[eta.pos] = zp;
        }
    }

    /// Solves `Bᵀ y = c` in place: `rhs` holds `c` (basis positions) on entry and `y` (row space)
    /// on exit.
    pub fn btran(&mut self, rhs: &mut [f64]) {
        let m = self.m;
        for eta in self.etas.iter().rev() {
            let mut v = rhs[eta.pos];
            for &(i, a) in &eta.entries {
                v -= a * rhs[i];
            }
            rhs[eta.pos] = v / eta.pivot;
        }
        let s = &mut self.work;
        for k in 0..m {
            let mut v = rhs[self.pivot_pos[k]];
            for idx in self.u_start[k]..self.u_start[k + 1] {
                v -= self.u_val[idx] * s[self.u_k[idx]];
            }
            s[k] = v / self.u_diag[k];
        }
        for k in (0..m).rev() {
            let mut v = s[k];
            for idx in self.l_start[k]..self.l_start[k + 1] {
                v -= self.l_val[idx] * rhs[self.l_row[idx]];
            }
            rhs[self.pivot_row[k]] = v;
        }
    }

    /// Records the replacement of the column at `pos` by a column whose FTRAN image is `alpha`.
    pub fn update(&mut self, pos: usize, alpha: &[f64]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != pos && a.abs() > DROP_TOL)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_cols(a: &[Vec<f64>]) -> (Vec<Vec<usize>>, Vec<Vec<f64>>) {
        let m = a.len();
        let mut rows = vec![Vec::new(); m];
        let mut vals = vec![Vec::new(); m];
        for (r, row) in a.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    rows[c].push(r);
                    vals[c].push(v);
                }
            }
        }
        (rows, vals)
    }

    fn factor(a: &[Vec<f64>]) -> Result<Factor, Singular> {
        let (rows, vals) = dense_cols(a);
        let cols: Vec<_> = rows
            .iter()
            .zip(&vals)
            .map(|(r, v)| ColumnRef { rows: r, vals: v })
            .collect();
        Factor::new(a.len(), &cols)
    }

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
            .collect()
    }

    fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..a.len())
            .map(|c| a.iter().map(|row| row[c]).collect())
            .collect()
    }

    #[test]
    fn solves_both_directions() {
        let a = vec![
            vec![2.0, 0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0, 3.0],
            vec![1.0, 4.0, 0.0, 0.0],
            vec![0.0, 0.0, 5.0, 1.0],
        ];
        let mut f = factor(&a).unwrap();
        let x = vec![1.0, -2.0, 0.5, 3.0];
        let mut b = matvec(&a, &x);
        f.ftran(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
        let mut c = matvec(&transpose(&a), &x);
        f.btran(&mut c);
        for (u, v) in c.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_updates_track_column_replacement() {
        let mut a = vec![
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 1.0, 0.0],
            vec![0.0, -1.0, 1.0],
        ];
        let mut f = factor(&a).unwrap();
        let new_col = [3.0, 1.0, -2.0];
        let mut alpha = new_col.to_vec();
        f.ftran(&mut alpha);
        f.update(1, &alpha);
        for (r, row) in a.iter_mut().enumerate() {
            row[1] = new_col[r];
        }
        let x = vec![0.25, -1.0, 2.0];
        let mut b = matvec(&a, &x);
        f.ftran(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
        let mut c = matvec(&transpose(&a), &x);
        f.btran(&mut c);
        for (u, v) in c.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_dependent_columns() {
        let a = vec![
            vec![1.0, 2.0, 0.0],
            vec![2.0, 4.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let err = factor(&a).err().expect("singular");
        assert_eq!(err.positions.len(), 1);
        assert_eq!(err.rows.len(), 1);
    }
}
