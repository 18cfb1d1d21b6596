//! Seeded analytic boundary and obstacle data, so experiments are
//! reproducible from a problem spec alone.

use crate::grid::{GridDomain, Region, ScalarField};
use crate::rng::SplitMix64;
use std::f64::consts::PI;

/// Analytic boundary data tags.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryData {
    Constant { value: f64 },
    /// Two-valued step: `high` on the half circle starting at `theta0`.
    Step { theta0: f64, low: f64, high: f64 },
    /// `|angle - theta0|^alpha` with the singular point rotated by seed.
    Holder { alpha: f64, seed: u64 },
    /// Piecewise-constant in angle: `count` sectors with seeded values.
    Sectors { seed: u64, count: u32, values: Vec<f64> },
}

fn wrap_angle(mut a: f64) -> f64 {
    while a <= -PI {
        a += 2.0 * PI;
    }
    while a > PI {
        a -= 2.0 * PI;
    }
    a
}

fn node_angle(domain: &GridDomain, i: usize) -> f64 {
    let (x, y) = domain.position(i);
    y.atan2(x)
}

/// Evaluate a boundary tag on the ring.
pub fn boundary_field(domain: &GridDomain, data: &BoundaryData) -> ScalarField {
    match data {
        BoundaryData::Constant { value } => {
            ScalarField::from_fn(domain, Region::Ring, |_| *value)
        }
        BoundaryData::Step { theta0, low, high } => {
            ScalarField::from_fn(domain, Region::Ring, |i| {
                let rel = wrap_angle(node_angle(domain, i) - theta0);
                if rel >= 0.0 {
                    *high
                } else {
                    *low
                }
            })
        }
        BoundaryData::Holder { alpha, seed } => {
            let theta0 = 2.0 * PI * SplitMix64::new(*seed).next_f64() - PI;
            ScalarField::from_fn(domain, Region::Ring, |i| {
                wrap_angle(node_angle(domain, i) - theta0).abs().powf(*alpha)
            })
        }
        BoundaryData::Sectors { seed, count, values } => {
            let k = (*count).max(1) as usize;
            let mut rng = SplitMix64::new(*seed);
            let mut splits: Vec<f64> = (0..k).map(|_| rng.range_f64(-PI, PI)).collect();
            splits.sort_by(f64::total_cmp);
            let vals: Vec<f64> = if values.is_empty() {
                (0..k).map(|_| (rng.next_f64() * 4.0).round() / 2.0).collect()
            } else {
                (0..k).map(|j| values[j % values.len()]).collect()
            };
            ScalarField::from_fn(domain, Region::Ring, |i| {
                let th = node_angle(domain, i);
                let sector = splits.iter().filter(|&&b| th >= b).count() % k;
                vals[sector]
            })
        }
    }
}

/// Analytic obstacle tags.
#[derive(Clone, Debug, PartialEq)]
pub enum ObstacleData {
    /// Inactive: the constant minimum of the boundary data.
    None,
    Cone { apex: (f64, f64), height: f64, slope: f64 },
    /// Seeded cones scaled to die out below `min g` before the ring, so
    /// the data is admissible by construction.
    Bumps { seed: u64, count: u32 },
}

/// Evaluate an obstacle tag on interior and ring nodes. Needs the
/// boundary data to anchor the inactive floor and the bump scaling.
pub fn obstacle_field(domain: &GridDomain, data: &ObstacleData, g: &ScalarField) -> ScalarField {
    let (gmin, gmax) = g.min_max().expect("boundary data is nonempty");
    match data {
        ObstacleData::None => ScalarField::from_fn(domain, Region::Omega, |_| gmin),
        ObstacleData::Cone { apex, height, slope } => {
            ScalarField::from_fn(domain, Region::Omega, |i| {
                let (x, y) = domain.position(i);
                let dist = ((x - apex.0).powi(2) + (y - apex.1).powi(2)).sqrt();
                (height - slope * dist).max(gmin)
            })
        }
        ObstacleData::Bumps { seed, count } => {
            let mut rng = SplitMix64::new(*seed);
            let span = (gmax - gmin).max(1e-9);
            // Bounding box of Omega in physical coordinates.
            let mut lo = (f64::INFINITY, f64::INFINITY);
            let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for i in domain.omega_nodes() {
                let (x, y) = domain.position(i);
                lo = (lo.0.min(x), lo.1.min(y));
                hi = (hi.0.max(x), hi.1.max(y));
            }
            let ring_pos: Vec<(f64, f64)> = domain.ring_nodes().map(|i| domain.position(i)).collect();
            let k = (*count).max(1) as usize;
            let mut cones = Vec::with_capacity(k);
            for _ in 0..k {
                let cx = rng.range_f64(lo.0 * 0.6, hi.0 * 0.6);
                let cy = rng.range_f64(lo.1 * 0.6, hi.1 * 0.6);
                let height = gmin + span * rng.range_f64(0.2, 0.8);
                let ring_dist = ring_pos
                    .iter()
                    .map(|&(rx, ry)| ((cx - rx).powi(2) + (cy - ry).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min);
                // Slope chosen so the cone falls under min g two grid
                // steps before the ring: the superlevel closure dilates
                // by one node and must never force a ring node.
                let reach = (ring_dist - 2.0 * domain.spacing()).max(domain.spacing());
                let slope = (height - (gmin - 0.1 * span)) / reach;
                cones.push(((cx, cy), height, slope));
            }
            ScalarField::from_fn(domain, Region::Omega, |i| {
                let (x, y) = domain.position(i);
                cones
                    .iter()
                    .map(|&((cx, cy), height, slope)| {
                        height - slope * ((x - cx).powi(2) + (y - cy).powi(2)).sqrt()
                    })
                    .fold(gmin, f64::max)
            })
        }
    }
}

/// Round every value to the nearest multiple of `step`; keeps quantized
/// ladders small for continuous data.
pub fn quantize_field(domain: &GridDomain, f: &ScalarField, step: f64) -> ScalarField {
    ScalarField::from_fn(domain, f.region(), |i| (f.value(i) / step).round() * step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainSpec;

    fn disc() -> GridDomain {
        GridDomain::build(&DomainSpec::Disc { radius: 1.0 }, 0.1, 2, true).unwrap()
    }

    #[test]
    fn step_splits_ring_in_half() {
        let d = disc();
        let g = boundary_field(&d, &BoundaryData::Step { theta0: -PI / 2.0, low: 0.0, high: 1.0 });
        let highs = d.ring_nodes().filter(|&i| g.value(i) == 1.0).count();
        let total = d.ring_nodes().count();
        assert!((highs as f64 / total as f64 - 0.5).abs() < 0.1);
        // Right half carries the high value for this rotation.
        for i in d.ring_nodes() {
            let (x, _) = d.position(i);
            if x > 0.3 {
                assert_eq!(g.value(i), 1.0);
            }
            if x < -0.3 {
                assert_eq!(g.value(i), 0.0);
            }
        }
    }

    #[test]
    fn holder_data_peaks_at_pi_and_vanishes_at_rotated_origin() {
        let d = disc();
        let g = boundary_field(&d, &BoundaryData::Holder { alpha: 0.5, seed: 3 });
        let (lo, hi) = g.min_max().unwrap();
        assert!(lo < 0.2, "some node near the singular point");
        assert!(hi > 1.5 && hi <= PI.powf(0.5) + 1e-9);
        // Deterministic for a fixed seed.
        let g2 = boundary_field(&d, &BoundaryData::Holder { alpha: 0.5, seed: 3 });
        for i in d.ring_nodes() {
            assert_eq!(g.value(i).to_bits(), g2.value(i).to_bits());
        }
    }

    #[test]
    fn bumps_stay_below_boundary_data_on_ring() {
        let d = disc();
        let g = boundary_field(&d, &BoundaryData::Sectors { seed: 5, count: 3, values: vec![] });
        for seed in 0..20u64 {
            let psi = obstacle_field(&d, &ObstacleData::Bumps { seed, count: 3 }, &g);
            for i in d.ring_nodes() {
                assert!(psi.value(i) <= g.value(i) + 1e-12, "seed {seed} node {i}");
            }
            // And the obstacle pokes above the floor somewhere.
            let gmin = g.min_max().unwrap().0;
            assert!(d.omega_nodes().any(|i| psi.value(i) > gmin + 1e-9), "seed {seed}");
        }
    }

    #[test]
    fn quantize_rounds_to_step() {
        let d = disc();
        let g = boundary_field(&d, &BoundaryData::Holder { alpha: 1.0, seed: 1 });
        let q = quantize_field(&d, &g, 0.25);
        for i in d.ring_nodes() {
            let v = q.value(i);
            assert!((v / 0.25 - (v / 0.25).round()).abs() < 1e-12);
            assert!((v - g.value(i)).abs() <= 0.125 + 1e-12);
        }
    }
}
