mod common;

use std::time::Instant;

use gridsched_lp::{solve, SolverOptions, Status};
use gridsched_testkit::vertex::{enumerate_vertices, random_lp, Verdict};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_vertex_enumeration_on_random_instances() {
    let opts = SolverOptions::default();
    let start = Instant::now();
    let mut counts = [0usize; 3];
    for seed in 0..600u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dense = random_lp(&mut rng, 8, 6);
        let lp = common::to_sparse(&dense);
        let sol = solve(&lp, &opts).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        match enumerate_vertices(&dense) {
            Verdict::Optimal(best) => {
                counts[0] += 1;
                assert_eq!(sol.status, Status::Optimal, "seed {seed}");
                assert!(
                    (sol.objective_value - best).abs() <= 1e-6,
                    "seed {seed}: solver {} oracle {best}",
                    sol.objective_value
                );
                assert!(lp.max_violation(&sol.x) <= 1e-7, "seed {seed}");
            }
            Verdict::Infeasible => {
                counts[1] += 1;
                assert_eq!(sol.status, Status::Infeasible, "seed {seed}");
                assert!(sol.infeasibility.is_some());
            }
            Verdict::Unbounded => {
                counts[2] += 1;
                assert_eq!(sol.status, Status::Unbounded, "seed {seed}");
                assert!(sol.ray.is_some());
            }
        }
    }
    eprintln!(
        "optimal/infeasible/unbounded = {counts:?} in {:?}",
        start.elapsed()
    );
    // The generator must exercise all three outcomes for the comparison to mean anything.
    assert!(counts.iter().all(|&c| c >= 20), "{counts:?}");
}

#[test]
fn unbounded_rays_are_improving_and_feasible() {
    let opts = SolverOptions::default();
    for seed in 0..600u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dense = random_lp(&mut rng, 8, 6);
        let lp = common::to_sparse(&dense);
        let sol = solve(&lp, &opts).unwrap();
        let Some(ray) = sol.ray else { continue };
        let slope: f64 = lp.objective().iter().zip(&ray).map(|(c, r)| c * r).sum();
        assert!(slope < -1e-9, "seed {seed}: slope {slope}");
        for row in lp.rows() {
            let a: f64 = row.coeffs.iter().map(|&(v, c)| c * ray[v.0]).sum();
            match row.sense {
                gridsched_lp::RowSense::Le => assert!(a <= 1e-9, "seed {seed}"),
                gridsched_lp::RowSense::Ge => assert!(a >= -1e-9, "seed {seed}"),
                gridsched_lp::RowSense::Eq => assert!(a.abs() <= 1e-9, "seed {seed}"),
            }
        }
        for (j, &r) in ray.iter().enumerate() {
            let (lo, hi) = lp.bounds(gridsched_lp::VarId(j));
            if hi.is_finite() {
                assert!(r <= 1e-9, "seed {seed}: var {j}");
            }
            if lo.is_finite() {
                assert!(r >= -1e-9, "seed {seed}: var {j}");
            }
        }
    }
}
