//! Brute-force enumeration over all admissible sets of a level problem.
//!
//! This is the independent reference for the min-cut solver: it walks
//! every membership pattern of the free nodes in Gray-code order,
//! maintaining the exact integer perimeter incrementally, and returns
//! the minimum together with the intersection and union of all
//! minimizers (the lattice extremes the solver must reproduce).

use crate::grid::{GridDomain, PixelSet};
use crate::perimeter::{perimeter, PerimeterRegion, Stencil, MAX_ORACLE_WINDOW};
use std::fmt;

#[derive(Debug)]
pub enum OracleError {
    TooManyFreeNodes(usize),
    DomainMismatch,
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::TooManyFreeNodes(n) => {
                write!(f, "{n} free nodes exceed the enumeration bound {MAX_ORACLE_WINDOW}")
            }
            OracleError::DomainMismatch => write!(f, "constraint sets do not match the domain"),
        }
    }
}

impl std::error::Error for OracleError {}

/// Result of exhausting a level problem.
#[derive(Clone, Debug)]
pub struct LevelOracle {
    /// Minimum perimeter over the whole grid, in weight units.
    pub min_units: u64,
    /// Intersection of all minimizers.
    pub e_min: PixelSet,
    /// Union of all minimizers (the volume-maximal minimizer).
    pub e_max: PixelSet,
    /// Number of distinct minimizers.
    pub n_minimizers: u64,
    /// Explicit minimizers, up to the requested collection cap.
    pub minimizers: Vec<PixelSet>,
}

/// Enumerate all sets containing `forced_in`, excluding `forced_out`,
/// and free elsewhere. `collect` caps how many explicit minimizers are
/// materialized (0 keeps only the aggregates).
pub fn enumerate_level(
    domain: &GridDomain,
    stencil: &Stencil,
    forced_in: &PixelSet,
    forced_out: &PixelSet,
    collect: usize,
) -> Result<LevelOracle, OracleError> {
    if forced_in.len() != domain.len() || forced_out.len() != domain.len() {
        return Err(OracleError::DomainMismatch);
    }
    let free: Vec<usize> = domain
        .nodes()
        .filter(|&i| !forced_in.contains(i) && !forced_out.contains(i))
        .collect();
    if free.len() > MAX_ORACLE_WINDOW {
        return Err(OracleError::TooManyFreeNodes(free.len()));
    }
    let n = free.len();

    let mut cur = forced_in.clone();
    let mut total = perimeter(domain, &cur, PerimeterRegion::Plane, stencil)
        .map_err(|_| OracleError::DomainMismatch)?
        .total_units() as i64;

    let mut min_units = total;
    let mut union_mask: u32 = 0;
    let mut inter_mask: u32 = 0;
    let mut count: u64 = 1;
    let mut collected: Vec<u32> = vec![0];
    let mut mask: u32 = 0;

    for step in 1u64..(1u64 << n) {
        let k = step.trailing_zeros() as usize;
        let v = free[k];
        let member = cur.contains(v);
        for ((dx, dy), units) in stencil.families() {
            for (sx, sy) in [(dx, dy), (-dx, -dy)] {
                if let Some(q) = domain.offset(v, sx, sy) {
                    if member != cur.contains(q) {
                        total -= units as i64;
                    } else {
                        total += units as i64;
                    }
                }
            }
        }
        cur.set(v, !member);
        mask ^= 1 << k;

        if total < min_units {
            min_units = total;
            union_mask = mask;
            inter_mask = mask;
            count = 1;
            collected.clear();
            collected.push(mask);
        } else if total == min_units {
            union_mask |= mask;
            inter_mask &= mask;
            count += 1;
            if collected.len() < collect {
                collected.push(mask);
            }
        }
    }

    let materialize = |m: u32| {
        let mut s = forced_in.clone();
        for (k, &v) in free.iter().enumerate() {
            if (m >> k) & 1 == 1 {
                s.insert(v);
            }
        }
        s
    };

    Ok(LevelOracle {
        min_units: min_units as u64,
        e_min: materialize(inter_mask),
        e_max: materialize(union_mask),
        n_minimizers: count,
        minimizers: collected.into_iter().take(collect.max(1)).map(materialize).collect(),
    })
}
