//! Exact planar geometry for sparse superminimizing sets: the density
//! constant delta(2), the two-ball obstacle configuration, and the
//! finite-stage foamy construction.
//!
//! The two-ball problem admits a closed form in the plane: minimal
//! boundaries are circle arcs joined by straight segments, so the only
//! competitors are the disjoint union and the convex hull of the two
//! discs. The foamy construction stacks shrinking balls on a dense point
//! sequence, with each radius chosen small enough that (a) the ball
//! clears the region boundary and all previous balls, (b) its perimeter
//! is under half the current margin, and (c) joining it to any previous
//! ball costs strictly more than keeping them separate.

use crate::grid::{DomainSpec, GridDomain, PixelSet};
use crate::rng::SplitMix64;
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug)]
pub enum FoamError {
    OverlappingBalls,
    BadParams(String),
    /// No admissible radius remains at this stage; the region is too
    /// small for the requested construction.
    Infeasible { stage: usize },
}

impl fmt::Display for FoamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoamError::OverlappingBalls => write!(f, "closed balls must be disjoint"),
            FoamError::BadParams(m) => write!(f, "bad foam parameters: {m}"),
            FoamError::Infeasible { stage } => {
                write!(f, "no admissible ball radius at stage {stage}; region too small")
            }
        }
    }
}

impl std::error::Error for FoamError {}

/// Closed ball in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallSpec {
    pub center: (f64, f64),
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: (f64, f64), radius: f64) -> BallSpec {
        debug_assert!(radius > 0.0);
        BallSpec { center, radius }
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * PI * self.radius
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn distance_to(&self, other: &BallSpec) -> f64 {
        let dx = self.center.0 - other.center.0;
        let dy = self.center.1 - other.center.1;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        let dx = p.0 - self.center.0;
        let dy = p.1 - self.center.1;
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

/// Axis-aligned open rectangle.
#[derive(Clone, Copy, Debug)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn unit() -> Rect {
        Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        p.0 > self.x0 && p.0 < self.x1 && p.1 > self.y0 && p.1 < self.y1
    }

    /// Distance from an interior point to the rectangle boundary.
    pub fn boundary_distance(&self, p: (f64, f64)) -> f64 {
        (p.0 - self.x0).min(self.x1 - p.0).min(p.1 - self.y0).min(self.y1 - p.1)
    }
}

/// The planar density constant: area fraction of the unit disc cut off
/// by a unit-radius arc meeting the unit circle orthogonally.
///
/// Orthogonal unit circles have centers sqrt(2) apart, so the cut-off
/// region is the lens of two unit circles at that distance. Each half of
/// the lens is a circular segment with half-angle pi/4, giving lens area
/// 2 (pi/4 - sin(pi/4) cos(pi/4)) * 2 = pi/2 - 1.
pub fn delta_2() -> f64 {
    (PI / 2.0 - 1.0) / PI
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoBallOptimal {
    /// The disjoint union of the two balls.
    Union,
    /// The convex hull of the two balls.
    Hull,
}

/// Closed-form comparison of the two admissible minimizer shapes.
#[derive(Clone, Copy, Debug)]
pub struct TwoBallSolution {
    pub optimal: TwoBallOptimal,
    pub union_perimeter: f64,
    pub hull_perimeter: f64,
    /// Absolute perimeter gap between the two shapes.
    pub margin: f64,
}

/// Perimeter of the convex hull of two discs: two external tangent
/// segments plus the arcs outside the tangent points.
pub fn hull_perimeter(b0: &BallSpec, b1: &BallSpec) -> f64 {
    let d = b0.distance_to(b1);
    let (big, small) = (b0.radius.max(b1.radius), b0.radius.min(b1.radius));
    let tangent = (d * d - (big - small) * (big - small)).sqrt();
    let theta = ((big - small) / d).acos();
    2.0 * tangent + big * (2.0 * PI - 2.0 * theta) + 2.0 * small * theta
}

/// Decide union vs hull for two disjoint closed balls and report the
/// margin between them.
pub fn two_ball_solution(b0: &BallSpec, b1: &BallSpec) -> Result<TwoBallSolution, FoamError> {
    let d = b0.distance_to(b1);
    if d <= b0.radius + b1.radius {
        return Err(FoamError::OverlappingBalls);
    }
    let union = b0.perimeter() + b1.perimeter();
    let hull = hull_perimeter(b0, b1);
    let optimal = if union <= hull { TwoBallOptimal::Union } else { TwoBallOptimal::Hull };
    Ok(TwoBallSolution {
        optimal,
        union_perimeter: union,
        hull_perimeter: hull,
        margin: (hull - union).abs(),
    })
}

/// One processed entry of the foamy sequence.
#[derive(Clone, Debug)]
pub struct StageRecord {
    /// The placed ball; `None` when the point already lay in the set.
    pub ball: Option<BallSpec>,
    /// Margin available after this entry.
    pub delta_after: f64,
}

/// A finite stage of the foamy construction.
#[derive(Clone, Debug)]
pub struct FoamStage {
    /// Number of processed sequence entries.
    pub index: usize,
    pub region: Rect,
    pub epsilon: f64,
    pub records: Vec<StageRecord>,
}

impl FoamStage {
    pub fn balls(&self) -> Vec<BallSpec> {
        self.records.iter().filter_map(|r| r.ball).collect()
    }

    pub fn delta_final(&self) -> f64 {
        self.records.last().map(|r| r.delta_after).unwrap_or(0.0)
    }

    pub fn total_area(&self) -> f64 {
        self.balls().iter().map(|b| b.area()).sum()
    }

    pub fn total_perimeter(&self) -> f64 {
        self.balls().iter().map(|b| b.perimeter()).sum()
    }

    /// Arithmetic check of the tail bound: after every entry `j`, the
    /// perimeters placed later sum below the margin recorded at `j`.
    pub fn tail_bounds_ok(&self) -> bool {
        for j in 0..self.records.len() {
            let delta_j = self.records[j].delta_after;
            let tail: f64 = self.records[j + 1..]
                .iter()
                .filter_map(|r| r.ball.map(|b| b.perimeter()))
                .sum();
            if !(tail < delta_j) {
                return false;
            }
        }
        true
    }

    /// All margins strictly positive.
    pub fn margins_positive(&self) -> bool {
        self.records.iter().all(|r| r.delta_after > 0.0)
    }
}

// Radii decay like 2^-j by construction, so deep stages are legitimately
// tiny; this floor only guards against true degeneracy and underflow.
const MIN_RADIUS: f64 = 1e-140;

/// Deterministic dense point sequence for the region: a shuffled lattice.
fn point_sequence(region: &Rect, seed: u64, count: usize) -> Vec<(f64, f64)> {
    let side = 64usize;
    let mut pts = Vec::with_capacity(side * side);
    for iy in 0..side {
        for ix in 0..side {
            pts.push((
                region.x0 + region.width() * (ix as f64 + 0.5) / side as f64,
                region.y0 + region.height() * (iy as f64 + 0.5) / side as f64,
            ));
        }
    }
    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut pts);
    pts.truncate(count);
    pts
}

/// Build `stages` entries of the foamy construction inside `region`.
///
/// Radii follow the inductive schedule: the first radius is below
/// `epsilon / 2`, every later one is at most half its predecessor, has
/// perimeter below half the current margin, clears the region boundary
/// and all prior balls, and keeps the union strictly cheaper than any
/// hull with a prior ball. The halving schedule makes the total area sum
/// a geometric series below `pi * epsilon^2`.
pub fn foamy_construct(
    region: &Rect,
    epsilon: f64,
    stages: usize,
    seed: u64,
) -> Result<FoamStage, FoamError> {
    if !(epsilon > 0.0) {
        return Err(FoamError::BadParams(format!("epsilon {epsilon} must be positive")));
    }
    if stages == 0 {
        return Err(FoamError::BadParams("need at least one stage".into()));
    }
    if !(region.width() > 0.0 && region.height() > 0.0) {
        return Err(FoamError::BadParams("empty region".into()));
    }
    let points = point_sequence(region, seed, stages);
    if points.len() < stages {
        return Err(FoamError::BadParams(format!("sequence shorter than {stages} stages")));
    }

    let mut records: Vec<StageRecord> = Vec::with_capacity(stages);
    let mut balls: Vec<BallSpec> = Vec::new();
    let mut delta = f64::INFINITY;
    let mut last_radius = f64::INFINITY;

    for (j, &p) in points.iter().enumerate() {
        if balls.iter().any(|b| b.contains(p)) {
            records.push(StageRecord { ball: None, delta_after: delta });
            continue;
        }
        let mut cap = region.boundary_distance(p) / 2.0;
        // The first ball must reach a sane fraction of the requested
        // scale; a region that cannot host it is reported, not shrunk.
        if balls.is_empty() && cap < epsilon / 64.0 {
            return Err(FoamError::Infeasible { stage: j + 1 });
        }
        cap = cap.min(epsilon / 2.0 * (1.0 - 1e-12));
        cap = cap.min(last_radius / 2.0);
        if delta.is_finite() {
            cap = cap.min(delta / (4.0 * PI) * (1.0 - 1e-12));
        }
        for b in &balls {
            let clearance = p_dist(p, b.center) - b.radius;
            cap = cap.min(clearance / 2.0);
        }
        if !(cap > MIN_RADIUS) {
            return Err(FoamError::Infeasible { stage: j + 1 });
        }

        // Shrink until joining this ball to every prior one is strictly
        // worse than keeping them apart.
        let mut r = cap;
        let mut pair_margin;
        let mut tries = 0;
        loop {
            let cand = BallSpec::new(p, r);
            let mut ok = true;
            pair_margin = f64::INFINITY;
            for b in &balls {
                match two_ball_solution(&cand, b) {
                    Ok(sol) if sol.optimal == TwoBallOptimal::Union && sol.margin > 0.0 => {
                        pair_margin = pair_margin.min(sol.margin);
                    }
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                break;
            }
            r /= 2.0;
            tries += 1;
            if r < MIN_RADIUS || tries > 200 {
                return Err(FoamError::Infeasible { stage: j + 1 });
            }
        }

        let ball = BallSpec::new(p, r);
        delta = if balls.is_empty() {
            ball.perimeter()
        } else {
            (delta / 2.0).min(pair_margin)
        };
        balls.push(ball);
        last_radius = r;
        records.push(StageRecord { ball: Some(ball), delta_after: delta });
    }

    Ok(FoamStage { index: stages, region: *region, epsilon, records })
}

fn p_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Fraction of a sample lattice within distance `d` of the stage set;
/// a denseness proxy that grows with the stage count.
pub fn coverage(stage: &FoamStage, d: f64, samples_per_side: usize) -> f64 {
    let region = &stage.region;
    let balls = stage.balls();
    let mut hit = 0usize;
    let n = samples_per_side;
    for iy in 0..n {
        for ix in 0..n {
            let p = (
                region.x0 + region.width() * (ix as f64 + 0.5) / n as f64,
                region.y0 + region.height() * (iy as f64 + 0.5) / n as f64,
            );
            if balls.iter().any(|b| p_dist(p, b.center) <= b.radius + d) {
                hit += 1;
            }
        }
    }
    hit as f64 / (n * n) as f64
}

/// Rasterize the stage set onto a centered grid of the given node count
/// per side (excluding collar).
pub fn rasterize_stage(
    stage: &FoamStage,
    nodes_per_side: usize,
    collar: usize,
) -> (GridDomain, PixelSet) {
    let region = &stage.region;
    let extent = region.width().max(region.height());
    let h = extent / nodes_per_side as f64;
    let domain = GridDomain::build(
        &DomainSpec::Rectangle { width: region.width(), height: region.height() },
        h,
        collar,
        true,
    )
    .expect("raster domain");
    let cx = (region.x0 + region.x1) / 2.0;
    let cy = (region.y0 + region.y1) / 2.0;
    let balls = stage.balls();
    let mut set = PixelSet::empty(&domain);
    for i in domain.nodes() {
        let (x, y) = domain.position(i);
        let p = (x + cx, y + cy);
        if domain.in_omega(i) && balls.iter().any(|b| b.contains(p)) {
            set.insert(i);
        }
    }
    (domain, set)
}

/// Raster boundary statistics of a stage: the fraction of region nodes
/// on the inner boundary of the rasterized set, and the share of the
/// set's own nodes that are boundary. The first grows with the stage
/// count while the area bound keeps the set sparse; the second tends to
/// one — the set is nearly all boundary.
pub fn boundary_share(stage: &FoamStage, nodes_per_side: usize) -> (f64, f64) {
    let (domain, raster) = rasterize_stage(stage, nodes_per_side, 2);
    let boundary = crate::solver::inner_boundary(&domain, &raster);
    let region_nodes = domain.omega_nodes().count().max(1);
    let set_nodes = raster.volume().max(1);
    (
        boundary.volume() as f64 / region_nodes as f64,
        boundary.volume() as f64 / set_nodes as f64,
    )
}

/// Perimeter increase from joining two balls by an axis tube of width
/// `w` along the center line (closed form): two tube sides replace the
/// arcs the tube covers on each circle.
pub fn tube_perimeter_increase(b0: &BallSpec, b1: &BallSpec, w: f64) -> Result<f64, FoamError> {
    let d = b0.distance_to(b1);
    if d <= b0.radius + b1.radius {
        return Err(FoamError::OverlappingBalls);
    }
    if !(w > 0.0) || w >= 2.0 * b0.radius.min(b1.radius) {
        return Err(FoamError::BadParams(format!("tube width {w} out of range")));
    }
    let phi0 = (w / (2.0 * b0.radius)).asin();
    let phi1 = (w / (2.0 * b1.radius)).asin();
    let side = d - b0.radius * phi0.cos() - b1.radius * phi1.cos();
    Ok(2.0 * side - 2.0 * b0.radius * phi0 - 2.0 * b1.radius * phi1)
}

/// Result of the rasterized superminimality probe.
#[derive(Clone, Debug)]
pub struct FoamCheck {
    pub windows_tested: usize,
    pub windows_held: usize,
    /// Per tube competitor: (ball i, ball k, width, perimeter increase,
    /// recorded pair margin).
    pub tube_rows: Vec<(usize, usize, f64, f64, f64)>,
    pub all_super_hold: bool,
    pub tubes_all_increase: bool,
}

/// Probe superminimality of a rasterized stage: random enumeration
/// windows must find no cheaper superset, and closed-form tube
/// competitors must increase perimeter by at least the recorded pair
/// margin.
pub fn foam_superminimality_check(
    stage: &FoamStage,
    trials: usize,
    seed: u64,
) -> Result<FoamCheck, FoamError> {
    use crate::perimeter::{make_stencil, minimality_oracle, MinimalityMode};

    let stencil = make_stencil(16).map_err(|e| FoamError::BadParams(e.to_string()))?;
    let (domain, raster) = rasterize_stage(stage, 192, stencil.radius().max(1) * 4);
    let mut rng = SplitMix64::new(seed ^ 0x0F0A_0A0F);
    let margin_nodes = 4 * stencil.radius();
    let mut held = 0usize;
    let mut tested = 0usize;
    while tested < trials {
        let x = margin_nodes + rng.next_usize(domain.width() - 2 * margin_nodes - 4);
        let y = margin_nodes + rng.next_usize(domain.height() - 2 * margin_nodes - 5);
        let anchor = domain.index(x, y);
        let mut window = Vec::with_capacity(20);
        for dx in 0..4i32 {
            for dy in 0..5i32 {
                if let Some(q) = domain.offset(anchor, dx, dy) {
                    window.push(q);
                }
            }
        }
        if window.len() < 20 {
            continue;
        }
        tested += 1;
        let v = minimality_oracle(&domain, &raster, &window, MinimalityMode::Super, &stencil)
            .map_err(|e| FoamError::BadParams(e.to_string()))?;
        if v.holds() {
            held += 1;
        }
    }

    let balls = stage.balls();
    let mut tube_rows = Vec::new();
    let mut tubes_ok = true;
    for i in 0..balls.len().min(4) {
        for k in i + 1..balls.len().min(4) {
            let pair = two_ball_solution(&balls[i], &balls[k])?;
            for frac in [0.25, 0.5, 0.75] {
                let w = 2.0 * balls[i].radius.min(balls[k].radius) * frac;
                let dp = tube_perimeter_increase(&balls[i], &balls[k], w)?;
                // A tube-joined set is a connected competitor, so it can
                // never beat the hull margin.
                if !(dp > 0.0) || dp + 1e-12 < pair.margin {
                    tubes_ok = false;
                }
                tube_rows.push((i, k, w, dp, pair.margin));
            }
        }
    }

    Ok(FoamCheck {
        windows_tested: tested,
        windows_held: held,
        tube_rows,
        all_super_hold: held == tested,
        tubes_all_increase: tubes_ok,
    })
}
