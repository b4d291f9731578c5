//! Bundled synthetic demand and price profiles.
//!
//! Each profile is a deterministic function of weekday and hour of day, so it can be sampled on
//! any grid. Demand shapes are normalized to a weekday peak of exactly 1.0 and scaled per zone.

use chrono::Weekday;
use thiserror::Error;

use crate::model::{is_weekend, PriceProfile, PriceSchedule, TimeGrid, Zone, ZoneKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("reference demand is constant; normalized prices need at least two distinct values")]
    ConstantDemand,
    #[error("reference price range is empty")]
    EmptyPriceRange,
    #[error("zone `{0}` has no kind, so bundled prices cannot be assigned")]
    MissingZoneKind(String),
}

/// Piecewise-linear interpolation over `(hour, value)` knots that wraps at midnight.
fn interpolate(knots: &[(f64, f64)], hour: f64) -> f64 {
    let h = hour.rem_euclid(24.0);
    let n = knots.len();
    for k in 0..n {
        let (h0, v0) = knots[k];
        let (h1, v1) = if k + 1 < n {
            knots[k + 1]
        } else {
            (knots[0].0 + 24.0, knots[0].1)
        };
        if h >= h0 && h < h1 {
            return v0 + (v1 - v0) * (h - h0) / (h1 - h0);
        }
    }
    // Only reachable before the first knot; wrap from the last one.
    let (h0, v0) = knots[n - 1];
    let (h1, v1) = (knots[0].0 + 24.0, knots[0].1);
    v0 + (v1 - v0) * (h + 24.0 - h0) / (h1 - h0)
}

/// Small deterministic day-to-day variation so the seven days are not identical.
fn day_factor(day: Weekday) -> f64 {
    match day {
        Weekday::Mon => 0.97,
        Weekday::Tue => 1.0,
        Weekday::Wed => 0.99,
        Weekday::Thu => 0.98,
        Weekday::Fri => 0.95,
        Weekday::Sat => 0.9,
        Weekday::Sun => 0.88,
    }
}

/// Demand relative to the zone's peak. CBD peaks around midday on weekdays, Suburb in the
/// evening, Rural stays nearly flat.
pub fn demand_shape(kind: ZoneKind, day: Weekday, hour: f64) -> f64 {
    let weekend = is_weekend(day);
    let v = match (kind, weekend) {
        (ZoneKind::Cbd, false) => interpolate(
            &[
                (0.0, 0.36),
                (5.0, 0.35),
                (7.0, 0.55),
                (9.0, 0.85),
                (12.5, 1.0),
                (14.0, 0.98),
                (17.0, 0.85),
                (20.0, 0.5),
                (23.0, 0.38),
            ],
            hour,
        ),
        (ZoneKind::Cbd, true) => interpolate(
            &[
                (0.0, 0.34),
                (6.0, 0.33),
                (10.0, 0.5),
                (13.0, 0.58),
                (17.0, 0.52),
                (21.0, 0.4),
            ],
            hour,
        ),
        (ZoneKind::Suburb, false) => interpolate(
            &[
                (0.0, 0.4),
                (4.0, 0.33),
                (7.0, 0.6),
                (9.0, 0.5),
                (13.0, 0.45),
                (16.0, 0.6),
                (19.0, 1.0),
                (21.0, 0.85),
                (23.0, 0.55),
            ],
            hour,
        ),
        (ZoneKind::Suburb, true) => interpolate(
            &[
                (0.0, 0.42),
                (4.0, 0.34),
                (9.0, 0.62),
                (13.0, 0.55),
                (16.0, 0.62),
                (19.0, 0.97),
                (21.0, 0.82),
                (23.0, 0.55),
            ],
            hour,
        ),
        (ZoneKind::Rural, _) => interpolate(
            &[
                (0.0, 0.78),
                (5.0, 0.75),
                (8.0, 0.85),
                (12.0, 0.82),
                (18.5, 1.0),
                (21.0, 0.9),
            ],
            hour,
        ),
    };
    let scale = if kind == ZoneKind::Rural || !weekend {
        day_factor(day)
    } else {
        1.0
    };
    v * scale
}

/// Local demand series for a zone of the given kind and weekly peak.
pub fn synthetic_demand(grid: &TimeGrid, kind: ZoneKind, peak_kw: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..grid.interval_count)
        .map(|t| {
            let (day, hour) = grid.clock(t);
            demand_shape(kind, day, hour)
        })
        .collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    raw.iter().map(|v| v / max * peak_kw).collect()
}

/// Wholesale energy price (currency/kWh): cheap overnight, near zero in the solar trough,
/// expensive in the evening ramp.
pub fn wholesale_price(day: Weekday, hour: f64) -> f64 {
    let base = interpolate(
        &[
            (0.0, 0.075),
            (4.0, 0.065),
            (7.0, 0.11),
            (8.5, 0.14),
            (10.5, 0.04),
            (12.0, 0.02),
            (14.5, 0.025),
            (16.5, 0.12),
            (18.5, 0.30),
            (20.5, 0.22),
            (22.5, 0.09),
        ],
        hour,
    );
    let weekend = if is_weekend(day) { 0.85 } else { 1.0 };
    base * weekend * (0.5 + 0.5 * day_factor(day))
}

/// Network charge added on top of the wholesale price.
pub fn network_price(kind: ZoneKind, day: Weekday, hour: f64) -> f64 {
    let peak = !is_weekend(day) && (15.0..21.0).contains(&hour);
    let business = !is_weekend(day) && (7.0..19.0).contains(&hour);
    match kind {
        ZoneKind::Cbd => {
            if business {
                0.075
            } else {
                0.035
            }
        }
        ZoneKind::Suburb => {
            if peak {
                0.09
            } else {
                0.04
            }
        }
        ZoneKind::Rural => {
            if peak {
                0.07
            } else {
                0.055
            }
        }
    }
}

/// Retail time-of-use tariff: peak 15:00–21:00, shoulder 07:00–15:00 and 21:00–22:00 on
/// weekdays, off-peak otherwise.
pub fn retail_price(kind: ZoneKind, day: Weekday, hour: f64) -> f64 {
    let adj = match kind {
        ZoneKind::Cbd => 0.0,
        ZoneKind::Suburb => 0.015,
        ZoneKind::Rural => 0.03,
    };
    let base = if is_weekend(day) {
        if (7.0..22.0).contains(&hour) {
            0.28
        } else {
            0.19
        }
    } else if (15.0..21.0).contains(&hour) {
        0.44
    } else if (7.0..22.0).contains(&hour) {
        0.29
    } else {
        0.19
    };
    base + adj
}

fn zone_kinds(zones: &[Zone]) -> Result<Vec<ZoneKind>, ProfileError> {
    zones
        .iter()
        .map(|z| {
            z.kind
                .ok_or_else(|| ProfileError::MissingZoneKind(z.id.clone()))
        })
        .collect()
}

fn matched(profile_kind: PriceProfile, charge: Vec<Vec<f64>>) -> PriceSchedule {
    PriceSchedule {
        profile_kind,
        discharge_price: charge.clone(),
        charge_price: charge,
    }
}

/// Wholesale price shared by all zones plus each zone's network charge; discharge is credited
/// at the charge price.
pub fn real_time_prices(grid: &TimeGrid, zones: &[Zone]) -> Result<PriceSchedule, ProfileError> {
    let kinds = zone_kinds(zones)?;
    let charge = kinds
        .iter()
        .map(|&k| {
            (0..grid.interval_count)
                .map(|t| {
                    let (day, hour) = grid.clock(t);
                    wholesale_price(day, hour) + network_price(k, day, hour)
                })
                .collect()
        })
        .collect();
    Ok(matched(PriceProfile::RealTime, charge))
}

pub fn retail_prices(grid: &TimeGrid, zones: &[Zone]) -> Result<PriceSchedule, ProfileError> {
    let kinds = zone_kinds(zones)?;
    let charge = kinds
        .iter()
        .map(|&k| {
            (0..grid.interval_count)
                .map(|t| {
                    let (day, hour) = grid.clock(t);
                    retail_price(k, day, hour)
                })
                .collect()
        })
        .collect();
    Ok(matched(PriceProfile::RetailToU, charge))
}

/// Rescales total demand affinely onto the reference price range:
/// `λ(t) = λmin + (L(t) − Lmin)(λmax − λmin)/(Lmax − Lmin)`.
///
/// The result is the same in every zone (one row per reference zone) and discharge is credited
/// at the charge price.
pub fn normalized_demand_price(
    total_demand: &[f64],
    reference: &PriceSchedule,
) -> Result<PriceSchedule, ProfileError> {
    let all = reference.charge_price.iter().flatten().copied();
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(ProfileError::EmptyPriceRange);
    }
    let lmin = total_demand.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax = total_demand
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(lmax > lmin) {
        return Err(ProfileError::ConstantDemand);
    }
    let series: Vec<f64> = total_demand
        .iter()
        .map(|&l| lo + (l - lmin) * (hi - lo) / (lmax - lmin))
        .collect();
    let zones = reference.charge_price.len().max(1);
    Ok(matched(PriceProfile::NormalizedDemand, vec![series; zones]))
}

/// Sum of local demand over zones at each interval.
pub fn total_demand(zones: &[Zone], intervals: usize) -> Vec<f64> {
    (0..intervals)
        .map(|t| zones.iter().map(|z| z.local_demand[t]).sum())
        .collect()
}

/// Bundled prices of the requested kind for these zones.
pub fn bundled_prices(
    profile: PriceProfile,
    grid: &TimeGrid,
    zones: &[Zone],
) -> Result<PriceSchedule, ProfileError> {
    match profile {
        PriceProfile::RealTime => real_time_prices(grid, zones),
        PriceProfile::RetailToU => retail_prices(grid, zones),
        PriceProfile::NormalizedDemand => {
            let rt = real_time_prices(grid, zones)?;
            normalized_demand_price(&total_demand(zones, grid.interval_count), &rt)
        }
    }
}
