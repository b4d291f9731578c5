//! Exhaustive search over a discretized single-vehicle charging problem.
//!
//! Power is restricted to multiples of `step_kw` and energy is tracked in quanta of
//! `step_kw * dt`, so every reachable state is exact and the dynamic program below visits the
//! whole discrete decision tree. When the continuous optimum lies on that lattice (integral
//! data, breakpoints on multiples of the step) the two optima coincide.

use rand::Rng;

#[derive(Clone, Debug)]
pub struct SingleEvCase {
    pub dt: f64,
    pub charge_price: Vec<f64>,
    pub discharge_price: Vec<f64>,
    pub connected: Vec<bool>,
    /// Energy consumed while driving in each interval (kWh).
    pub driving: Vec<f64>,
    /// Headroom `c - l` on the connected zone's cap, `None` when uncapped.
    pub headroom: Vec<Option<f64>>,
    pub max_charge_kw: f64,
    /// Zero for a unidirectional vehicle.
    pub max_discharge_kw: f64,
    pub capacity: f64,
    pub initial: f64,
    pub target: f64,
}

impl SingleEvCase {
    pub fn intervals(&self) -> usize {
        self.charge_price.len()
    }
}

fn quanta(value: f64, q: f64) -> i64 {
    let k = (value / q).round();
    assert!(
        (k * q - value).abs() < 1e-9,
        "{value} is not a multiple of {q}"
    );
    k as i64
}

fn levels(case: &SingleEvCase, step: f64, t: usize) -> Vec<i64> {
    if !case.connected[t] {
        return vec![0];
    }
    let lo = -((case.max_discharge_kw / step) + 1e-9).floor() as i64;
    let mut hi = ((case.max_charge_kw / step) + 1e-9).floor() as i64;
    let mut out = Vec::new();
    if let Some(h) = case.headroom[t] {
        hi = hi.min(((h / step) + 1e-9).floor() as i64);
    }
    for k in lo..=hi {
        if let Some(h) = case.headroom[t] {
            // Discharge always relieves the cap; charge must fit under it.
            if k as f64 * step > h + 1e-9 {
                continue;
            }
        }
        out.push(k);
    }
    out
}

fn stage_cost(case: &SingleEvCase, step: f64, t: usize, k: i64) -> f64 {
    let p = k as f64 * step;
    if p >= 0.0 {
        case.dt * case.charge_price[t] * p
    } else {
        case.dt * case.discharge_price[t] * p
    }
}

/// Minimum cost over all power sequences on the `step_kw` lattice, or `None` if none is feasible.
pub fn lattice_optimum(case: &SingleEvCase, step_kw: f64) -> Option<f64> {
    let q = step_kw * case.dt;
    let cap = quanta(case.capacity, q);
    let init = quanta(case.initial, q);
    let target = quanta(case.target, q);
    let mut cost = vec![f64::INFINITY; cap as usize + 1];
    cost[init as usize] = 0.0;
    for t in 0..case.intervals() {
        let drive = quanta(case.driving[t], q);
        let acts = levels(case, step_kw, t);
        let mut next = vec![f64::INFINITY; cost.len()];
        for (s, &c) in cost.iter().enumerate() {
            if !c.is_finite() {
                continue;
            }
            for &k in &acts {
                let s2 = s as i64 + k - drive;
                if s2 < 0 || s2 > cap {
                    continue;
                }
                let v = c + stage_cost(case, step_kw, t, k);
                if v < next[s2 as usize] {
                    next[s2 as usize] = v;
                }
            }
        }
        cost = next;
    }
    cost[target.max(0) as usize..]
        .iter()
        .copied()
        .filter(|c| c.is_finite())
        .min_by(f64::total_cmp)
}

/// Same search by plain recursion over every power sequence; only for a handful of intervals.
pub fn enumerate_optimum(case: &SingleEvCase, step_kw: f64) -> Option<f64> {
    fn go(
        case: &SingleEvCase,
        step: f64,
        t: usize,
        energy: f64,
        spent: f64,
        best: &mut Option<f64>,
    ) {
        let tol = 1e-9;
        if t == case.intervals() {
            if energy >= case.target - tol && best.is_none_or(|b| spent < b) {
                *best = Some(spent);
            }
            return;
        }
        for k in levels(case, step, t) {
            let e = energy + k as f64 * step * case.dt - case.driving[t];
            if e < -tol || e > case.capacity + tol {
                continue;
            }
            go(
                case,
                step,
                t + 1,
                e,
                spent + stage_cost(case, step, t, k),
                best,
            );
        }
    }
    let mut best = None;
    go(case, step_kw, 0, case.initial, 0.0, &mut best);
    best
}

/// Random case on the 0.1 kW / 0.5 h lattice. Prices come in tenths.
pub fn random_case(rng: &mut impl Rng, max_intervals: usize, bidirectional: bool) -> SingleEvCase {
    let n = rng.random_range(1..=max_intervals);
    let dt = 0.5;
    let capacity = [10.0, 20.0, 60.0][rng.random_range(0..3)];
    let half_kwh = |rng: &mut dyn rand::RngCore, max: f64| {
        rng.random_range(0..=(max * 2.0) as i64) as f64 * 0.5
    };
    let initial = half_kwh(rng, capacity);
    let target = half_kwh(rng, capacity);
    let mut charge_price = Vec::with_capacity(n);
    let mut discharge_price = Vec::with_capacity(n);
    let mut connected = Vec::with_capacity(n);
    let mut driving = Vec::with_capacity(n);
    let mut headroom = Vec::with_capacity(n);
    for _ in 0..n {
        let lam = rng.random_range(1..=30) as f64 / 10.0;
        let eta = if rng.random_bool(0.7) {
            lam
        } else {
            lam - rng.random_range(0..=5) as f64 / 10.0
        };
        charge_price.push(lam);
        discharge_price.push(eta.max(0.0));
        let on = rng.random_bool(0.75);
        connected.push(on);
        driving.push(if on {
            0.0
        } else {
            rng.random_range(0..=40) as f64 * 0.05
        });
        headroom.push(if on && rng.random_bool(0.4) {
            Some(rng.random_range(0..=80) as f64 / 10.0)
        } else {
            None
        });
    }
    SingleEvCase {
        dt,
        charge_price,
        discharge_price,
        connected,
        driving,
        headroom,
        max_charge_kw: 7.4,
        max_discharge_kw: if bidirectional { 7.4 } else { 0.0 },
        capacity,
        initial,
        target,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dp_matches_plain_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let bidirectional = rng.random_bool(0.5);
            let case = random_case(&mut rng, 2, bidirectional);
            let a = lattice_optimum(&case, 0.1);
            let b = enumerate_optimum(&case, 0.1);
            match (a, b) {
                (Some(x), Some(y)) => assert!((x - y).abs() < 1e-9, "{case:?}: {x} vs {y}"),
                (None, None) => {}
                _ => panic!("{case:?}: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn cheapest_interval_is_used_first() {
        let case = SingleEvCase {
            dt: 0.5,
            charge_price: vec![0.3, 0.1],
            discharge_price: vec![0.3, 0.1],
            connected: vec![true, true],
            driving: vec![0.0, 0.0],
            headroom: vec![None, None],
            max_charge_kw: 7.4,
            max_discharge_kw: 0.0,
            capacity: 60.0,
            initial: 24.0,
            target: 26.0,
        };
        // 2 kWh at 0.1 per kWh
        assert!((lattice_optimum(&case, 0.1).unwrap() - 0.2).abs() < 1e-12);
    }
}
