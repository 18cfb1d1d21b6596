//! Discrete perimeter of pixel sets and brute-force minimality oracles.
//!
//! Perimeter is measured by a cut metric: a symmetric stencil of node
//! offsets with Cauchy-Crofton weights, so that the total weight of
//! stencil edges cut by a set boundary approximates its Euclidean length.
//! Weights are integer multiples of `h / 2^20`, which keeps every
//! perimeter comparison in this crate exact integer arithmetic; floats
//! appear only when reporting lengths.
//!
//! The minimality oracle enumerates all perturbations of a set inside a
//! small window and is the independent reference the min-cut solver is
//! tested against.

use crate::grid::{GridDomain, NodeLabel, PixelSet};
use std::fmt;

/// Integer weight units per factor of `h`; all stencil weights are
/// `units * h / WEIGHT_SCALE`.
pub const WEIGHT_SCALE: u64 = 1 << 20;

/// Largest window the enumeration oracle accepts (2^22 candidate sets).
pub const MAX_ORACLE_WINDOW: usize = 22;

#[derive(Debug)]
pub enum PerimeterError {
    UnsupportedOrder(usize),
    DomainMismatch,
    RegionOutsideGrid,
    WindowTooLarge(usize),
}

impl fmt::Display for PerimeterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerimeterError::UnsupportedOrder(o) => {
                write!(f, "unsupported stencil order {o} (supported: 4, 8, 16)")
            }
            PerimeterError::DomainMismatch => write!(f, "pixel set does not match the domain"),
            PerimeterError::RegionOutsideGrid => {
                write!(f, "perimeter region extends outside the grid")
            }
            PerimeterError::WindowTooLarge(n) => {
                write!(f, "oracle window of {n} nodes exceeds {MAX_ORACLE_WINDOW}")
            }
        }
    }
}

impl std::error::Error for PerimeterError {}

/// Symmetric neighborhood with positive edge weights.
///
/// Only one representative of each `{o, -o}` pair is stored; iteration
/// over unordered edges uses the stored half, symmetric queries expand it.
#[derive(Clone, Debug)]
pub struct Stencil {
    order: usize,
    families: Vec<(i32, i32)>,
    units: Vec<u64>,
}

/// Cauchy-Crofton weight units for the stored half-families of an order.
///
/// For a direction family at angle `phi_k` with angular cell `dphi_k`
/// (half the span between the neighboring families) and offset length
/// `|e_k|` in lattice steps, the weight is `h * dphi_k / (2 |e_k|)`.
/// Order 4 is pinned to the anisotropic Manhattan metric (weight `h`).
fn family_table(order: usize) -> Option<(Vec<(i32, i32)>, Vec<f64>)> {
    let atan_half = 0.5f64.atan();
    let pi = std::f64::consts::PI;
    match order {
        4 => Some((vec![(1, 0), (0, 1)], vec![1.0, 1.0])),
        8 => {
            let ax = (pi / 4.0) / 2.0;
            let di = (pi / 4.0) / (2.0 * 2f64.sqrt());
            Some((vec![(1, 0), (0, 1), (1, 1), (1, -1)], vec![ax, ax, di, di]))
        }
        16 => {
            let w_axis = atan_half / 2.0;
            let w_diag = ((2f64.atan() - atan_half) / 2.0) / (2.0 * 2f64.sqrt());
            let w_knight = (pi / 8.0) / (2.0 * 5f64.sqrt());
            Some((
                vec![(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2)],
                vec![w_axis, w_axis, w_diag, w_diag, w_knight, w_knight, w_knight, w_knight],
            ))
        }
        _ => None,
    }
}

/// Build the stencil for a supported neighborhood order (4, 8 or 16).
pub fn make_stencil(order: usize) -> Result<Stencil, PerimeterError> {
    let (families, weights) =
        family_table(order).ok_or(PerimeterError::UnsupportedOrder(order))?;
    let units: Vec<u64> =
        weights.iter().map(|w| (w * WEIGHT_SCALE as f64).round() as u64).collect();
    debug_assert!(units.iter().all(|&u| u > 0));
    Ok(Stencil { order, families, units })
}

impl Stencil {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Stored half of the symmetric offset set, with weight units.
    pub fn families(&self) -> impl Iterator<Item = ((i32, i32), u64)> + '_ {
        self.families.iter().copied().zip(self.units.iter().copied())
    }

    /// All offsets with weights (both signs), for symmetric inspection.
    pub fn offsets(&self) -> Vec<((i32, i32), u64)> {
        let mut all = Vec::with_capacity(2 * self.families.len());
        for ((dx, dy), u) in self.families() {
            all.push(((dx, dy), u));
            all.push(((-dx, -dy), u));
        }
        all
    }

    /// Chebyshev radius of the neighborhood in nodes.
    pub fn radius(&self) -> usize {
        self.families.iter().map(|&(dx, dy)| dx.abs().max(dy.abs()) as usize).max().unwrap_or(0)
    }

    /// Physical weight of a family for spacing `h`.
    pub fn weight(&self, family: usize, h: f64) -> f64 {
        self.units[family] as f64 * h / WEIGHT_SCALE as f64
    }
}

/// Region a perimeter is measured over. Edges are assigned by midpoint:
/// both endpoints in Omega counts as interior, Omega-collar as crossing,
/// collar-collar as exterior.
#[derive(Clone, Copy, Debug)]
pub enum PerimeterRegion {
    /// Interior edges only (the open domain).
    Omega,
    /// Every edge of the grid.
    Plane,
    /// Edges whose midpoint lies within distance `radius` of node `center`.
    Ball { center: usize, radius: f64 },
}

/// Perimeter split by edge location, in exact weight units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PerimeterValue {
    /// Cut edges with both endpoints in Omega.
    pub interior_units: u64,
    /// Cut edges joining Omega to the collar.
    pub crossing_units: u64,
    /// Cut edges with both endpoints in the collar.
    pub exterior_units: u64,
    /// Weight units per unit length times WEIGHT_SCALE; kept to convert.
    scale: u64,
    h_bits: u64,
}

impl PerimeterValue {
    fn new(interior: u64, crossing: u64, exterior: u64, h: f64) -> PerimeterValue {
        PerimeterValue {
            interior_units: interior,
            crossing_units: crossing,
            exterior_units: exterior,
            scale: WEIGHT_SCALE,
            h_bits: h.to_bits(),
        }
    }

    fn unit(&self) -> f64 {
        f64::from_bits(self.h_bits) / self.scale as f64
    }

    pub fn total_units(&self) -> u64 {
        self.interior_units + self.crossing_units + self.exterior_units
    }

    /// Total length.
    pub fn total(&self) -> f64 {
        self.total_units() as f64 * self.unit()
    }

    /// Length of the part inside Omega.
    pub fn interior(&self) -> f64 {
        self.interior_units as f64 * self.unit()
    }

    /// Length of the Omega-collar crossing part.
    pub fn crossing(&self) -> f64 {
        self.crossing_units as f64 * self.unit()
    }

    pub fn exterior(&self) -> f64 {
        self.exterior_units as f64 * self.unit()
    }
}

/// Discrete perimeter of `set` over `region`: total stencil weight of
/// unordered edges `{p, q}` with exactly one endpoint in the set.
pub fn perimeter(
    domain: &GridDomain,
    set: &PixelSet,
    region: PerimeterRegion,
    stencil: &Stencil,
) -> Result<PerimeterValue, PerimeterError> {
    if set.len() != domain.len() {
        return Err(PerimeterError::DomainMismatch);
    }
    if let PerimeterRegion::Ball { center, radius } = region {
        if center >= domain.len() || !(radius > 0.0) {
            return Err(PerimeterError::RegionOutsideGrid);
        }
        let (cx, cy) = domain.position(center);
        let h = domain.spacing();
        let half_w = (domain.width() as f64 - 1.0) / 2.0 * h;
        let half_h = (domain.height() as f64 - 1.0) / 2.0 * h;
        if cx - radius < -half_w
            || cx + radius > half_w
            || cy - radius < -half_h
            || cy + radius > half_h
        {
            return Err(PerimeterError::RegionOutsideGrid);
        }
    }

    let mut interior = 0u64;
    let mut crossing = 0u64;
    let mut exterior = 0u64;
    for p in domain.nodes() {
        let mp = set.contains(p);
        for ((dx, dy), units) in stencil.families() {
            let q = match domain.offset(p, dx, dy) {
                Some(q) => q,
                None => continue,
            };
            if mp == set.contains(q) {
                continue;
            }
            match region {
                PerimeterRegion::Omega => {
                    if domain.in_omega(p) && domain.in_omega(q) {
                        interior += units;
                    }
                }
                PerimeterRegion::Plane => match (domain.label(p), domain.label(q)) {
                    (NodeLabel::Collar, NodeLabel::Collar) => exterior += units,
                    (NodeLabel::Collar, _) | (_, NodeLabel::Collar) => crossing += units,
                    _ => interior += units,
                },
                PerimeterRegion::Ball { center, radius } => {
                    let (px, py) = domain.position(p);
                    let (qx, qy) = domain.position(q);
                    let (mx, my) = ((px + qx) / 2.0, (py + qy) / 2.0);
                    let (cx, cy) = domain.position(center);
                    if (mx - cx).powi(2) + (my - cy).powi(2) < radius * radius {
                        match (domain.label(p), domain.label(q)) {
                            (NodeLabel::Collar, NodeLabel::Collar) => exterior += units,
                            (NodeLabel::Collar, _) | (_, NodeLabel::Collar) => crossing += units,
                            _ => interior += units,
                        }
                    }
                }
            }
        }
    }
    Ok(PerimeterValue::new(interior, crossing, exterior, domain.spacing()))
}

/// Submodularity of the cut metric:
/// `P(E u F) + P(E n F) <= P(E) + P(F)`, exact in weight units.
pub fn submodularity_check(
    domain: &GridDomain,
    e: &PixelSet,
    f: &PixelSet,
    stencil: &Stencil,
) -> bool {
    let p = |s: &PixelSet| {
        perimeter(domain, s, PerimeterRegion::Plane, stencil).expect("same domain").total_units()
    };
    p(&e.union(f)) + p(&e.intersection(f)) <= p(e) + p(f)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MinimalityMode {
    /// Compare against every perturbation in the window.
    Min,
    /// Compare against unions only (supersets within the window).
    Super,
    /// Compare against intersections only (subsets within the window).
    Sub,
}

#[derive(Clone, Debug)]
pub enum MinimalityVerdict {
    Holds,
    /// A strictly cheaper competitor; of minimal symmetric difference,
    /// ties broken by the smallest selection bitmask (bit k = k-th window
    /// node in ascending index order).
    Violated { witness: PixelSet, witness_units: u64, base_units: u64 },
}

impl MinimalityVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, MinimalityVerdict::Holds)
    }
}

/// Enumerate all competitors of `set` whose symmetric difference lies in
/// `window` (filtered per `mode`) and report whether `set` has minimal
/// perimeter over the whole grid.
pub fn minimality_oracle(
    domain: &GridDomain,
    set: &PixelSet,
    window: &[usize],
    mode: MinimalityMode,
    stencil: &Stencil,
) -> Result<MinimalityVerdict, PerimeterError> {
    if set.len() != domain.len() {
        return Err(PerimeterError::DomainMismatch);
    }
    let mut window: Vec<usize> = window.to_vec();
    window.sort_unstable();
    window.dedup();
    let positions: Vec<usize> = match mode {
        MinimalityMode::Min => window,
        MinimalityMode::Super => window.into_iter().filter(|&i| !set.contains(i)).collect(),
        MinimalityMode::Sub => window.into_iter().filter(|&i| set.contains(i)).collect(),
    };
    if positions.len() > MAX_ORACLE_WINDOW {
        return Err(PerimeterError::WindowTooLarge(positions.len()));
    }

    let base = perimeter(domain, set, PerimeterRegion::Plane, stencil)?.total_units();
    let mut cur = set.clone();
    let mut total = base as i64;
    let mut mask: u32 = 0;
    let n = positions.len();
    let mut best: Option<(u32, u32, i64)> = None; // (symdiff, mask, units)

    for step in 1u64..(1u64 << n) {
        let k = step.trailing_zeros() as usize;
        let v = positions[k];
        // Toggling one node flips the cut status of every incident edge.
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

        if total < base as i64 {
            let sd = mask.count_ones();
            let better = match best {
                None => true,
                Some((bsd, bmask, _)) => sd < bsd || (sd == bsd && mask < bmask),
            };
            if better {
                best = Some((sd, mask, total));
            }
        }
    }

    match best {
        None => Ok(MinimalityVerdict::Holds),
        Some((_, mask, units)) => {
            let mut witness = set.clone();
            for (k, &v) in positions.iter().enumerate() {
                let flip = (mask >> k) & 1 == 1;
                if flip {
                    witness.set(v, !set.contains(v));
                }
            }
            Ok(MinimalityVerdict::Violated {
                witness,
                witness_units: units as u64,
                base_units: base,
            })
        }
    }
}
