//! Exhaustive vertex enumeration for tiny linear programs with finite lower bounds.

use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct DenseRow {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `min cᵀx` over rows and `lower ≤ x ≤ upper`. Lower bounds are finite so the feasible set is
/// pointed; upper bounds may be infinite.
#[derive(Clone, Debug)]
pub struct DenseLp {
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<DenseRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

impl DenseLp {
    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        let bounds_ok = x
            .iter()
            .enumerate()
            .all(|(j, &v)| v >= self.lower[j] - tol && v <= self.upper[j] + tol);
        bounds_ok
            && self.rows.iter().all(|r| {
                let act: f64 = r.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
                match r.sense {
                    Sense::Le => act <= r.rhs + tol,
                    Sense::Ge => act >= r.rhs - tol,
                    Sense::Eq => (act - r.rhs).abs() <= tol,
                }
            })
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// Random instance with integer data: costs and coefficients in `[-5, 5]`, finite lower bounds.
pub fn random_lp(rng: &mut impl Rng, max_vars: usize, max_rows: usize) -> DenseLp {
    let n = rng.random_range(1..=max_vars);
    let m = rng.random_range(1..=max_rows);
    let cost = (0..n).map(|_| rng.random_range(-5..=5) as f64).collect();
    let lower: Vec<f64> = (0..n).map(|_| rng.random_range(-3..=2) as f64).collect();
    let upper: Vec<f64> = lower
        .iter()
        .map(|&l| {
            if rng.random_bool(0.25) {
                f64::INFINITY
            } else {
                l + rng.random_range(0..=6) as f64
            }
        })
        .collect();
    // Half of the instances get rows built around an integer point so they are feasible.
    let planted: Option<Vec<f64>> = rng.random_bool(0.5).then(|| {
        lower
            .iter()
            .zip(&upper)
            .map(|(&l, &u): (&f64, &f64)| {
                let top = if u.is_finite() { u } else { l + 6.0 };
                rng.random_range(l as i64..=top as i64) as f64
            })
            .collect()
    });
    let rows = (0..m)
        .map(|_| {
            let coeffs: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.random_bool(0.35) {
                        0.0
                    } else {
                        rng.random_range(-5..=5) as f64
                    }
                })
                .collect();
            let u: f64 = rng.random();
            let sense = if u < 0.45 {
                Sense::Le
            } else if u < 0.8 {
                Sense::Ge
            } else {
                Sense::Eq
            };
            let rhs = match &planted {
                Some(x0) => {
                    let act: f64 = coeffs.iter().zip(x0).map(|(a, v)| a * v).sum();
                    let slack = rng.random_range(0..=3) as f64;
                    match sense {
                        Sense::Le => act + slack,
                        Sense::Ge => act - slack,
                        Sense::Eq => act,
                    }
                }
                None => rng.random_range(-10..=10) as f64,
            };
            DenseRow { coeffs, sense, rhs }
        })
        .collect();
    DenseLp {
        cost,
        lower,
        upper,
        rows,
    }
}

/// Solves the square system in place with partial pivoting; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..k {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..k {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Best feasible vertex after capping infinite upper bounds at `big`.
fn best_vertex(lp: &DenseLp, big: f64) -> Option<(f64, Vec<f64>)> {
    let n = lp.num_vars();
    let m = lp.rows.len();
    let upper: Vec<f64> = lp
        .upper
        .iter()
        .map(|&u| if u.is_finite() { u } else { big })
        .collect();
    let boxed = DenseLp {
        upper: upper.clone(),
        ..lp.clone()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;

    for row_mask in 0u32..(1 << m) {
        let t = row_mask.count_ones() as usize;
        if t > n {
            continue;
        }
        let rows: Vec<usize> = (0..m).filter(|i| row_mask & (1 << i) != 0).collect();
        for var_mask in 0u32..(1 << n) {
            if var_mask.count_ones() as usize != n - t {
                continue;
            }
            let at_bound: Vec<usize> = (0..n).filter(|j| var_mask & (1 << j) != 0).collect();
            let free: Vec<usize> = (0..n).filter(|j| var_mask & (1 << j) == 0).collect();
            for choice in 0u32..(1 << at_bound.len()) {
                let mut x = vec![0.0; n];
                for (b, &j) in at_bound.iter().enumerate() {
                    x[j] = if choice & (1 << b) != 0 {
                        upper[j]
                    } else {
                        lp.lower[j]
                    };
                }
                if t > 0 {
                    let a: Vec<Vec<f64>> = rows
                        .iter()
                        .map(|&i| free.iter().map(|&j| lp.rows[i].coeffs[j]).collect())
                        .collect();
                    let rhs: Vec<f64> = rows
                        .iter()
                        .map(|&i| {
                            let fixed: f64 =
                                at_bound.iter().map(|&j| lp.rows[i].coeffs[j] * x[j]).sum();
                            lp.rows[i].rhs - fixed
                        })
                        .collect();
                    let Some(sol) = solve_square(a, rhs) else {
                        continue;
                    };
                    for (k, &j) in free.iter().enumerate() {
                        x[j] = sol[k];
                    }
                }
                if !boxed.is_feasible(&x, 1e-7) {
                    continue;
                }
                let obj = lp.objective(&x);
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, x));
                }
            }
        }
    }
    best
}

pub fn enumerate_vertices(lp: &DenseLp) -> Verdict {
    const BIG: f64 = 1e6;
    let Some((obj, x)) = best_vertex(lp, BIG) else {
        return Verdict::Infeasible;
    };
    let touches_cap = x
        .iter()
        .zip(&lp.upper)
        .any(|(&v, &u)| !u.is_finite() && (v - BIG).abs() < 1e-3);
    if touches_cap {
        let (obj2, _) = best_vertex(lp, 2.0 * BIG).expect("larger box stays feasible");
        if obj2 < obj - 1e-6 * (1.0 + obj.abs()) {
            return Verdict::Unbounded;
        }
    }
    Verdict::Optimal(obj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_instance() {
        // max 3x + 2y s.t. x + y <= 4, x + 3y <= 6, x <= 3  → optimum 11 at (3, 1)
        let lp = DenseLp {
            cost: vec![-3.0, -2.0],
            lower: vec![0.0, 0.0],
            upper: vec![3.0, f64::INFINITY],
            rows: vec![
                DenseRow {
                    coeffs: vec![1.0, 1.0],
                    sense: Sense::Le,
                    rhs: 4.0,
                },
                DenseRow {
                    coeffs: vec![1.0, 3.0],
                    sense: Sense::Le,
                    rhs: 6.0,
                },
            ],
        };
        assert_eq!(enumerate_vertices(&lp), Verdict::Optimal(-11.0));
    }

    #[test]
    fn detects_unbounded_and_infeasible() {
        let unbounded = DenseLp {
            cost: vec![-1.0, 0.0],
            lower: vec![0.0, 0.0],
            upper: vec![f64::INFINITY, 1.0],
            rows: vec![DenseRow {
                coeffs: vec![1.0, -1.0],
                sense: Sense::Ge,
                rhs: 0.0,
            }],
        };
        assert_eq!(enumerate_vertices(&unbounded), Verdict::Unbounded);
        let infeasible = DenseLp {
            cost: vec![1.0],
            lower: vec![0.0],
            upper: vec![2.0],
            rows: vec![DenseRow {
                coeffs: vec![1.0],
                sense: Sense::Ge,
                rhs: 3.0,
            }],
        };
        assert_eq!(enumerate_vertices(&infeasible), Verdict::Infeasible);
    }
}
