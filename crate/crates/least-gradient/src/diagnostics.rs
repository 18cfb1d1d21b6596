//! Numerical verification of the structural properties a stacked
//! solution must carry: the co-area ledger, boundary Hölder modulus,
//! barrier sandwiches, boundary-contact classification for nested
//! minimizers, and density monotonicity of subminimizing sets.

use crate::grid::{GridDomain, NodeLabel, PixelSet, Region, ScalarField};
use crate::perimeter::{
    minimality_oracle, MinimalityMode, PerimeterError, Stencil,
};
use crate::rng::SplitMix64;
use crate::solver::{edgewise_tv, inner_boundary, Solution};
use std::fmt;

#[derive(Debug)]
pub enum DiagnosticsError {
    LambdaTooSmall { lambda: f64, delta: f64 },
    NotOnRing(usize),
    NotNested,
    TooFewPairs { got: usize, need: usize },
    RadiiNotIncreasing,
    RadiusOverflow,
    NotOnBoundary(usize),
    /// The subminimality precondition failed in the window anchored here.
    NotSubminimizing(usize),
    Perimeter(PerimeterError),
}

impl fmt::Display for DiagnosticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticsError::LambdaTooSmall { lambda, delta } => {
                write!(f, "lambda {lambda} must exceed 2 delta = {}", 2.0 * delta)
            }
            DiagnosticsError::NotOnRing(i) => write!(f, "node {i} is not a ring node"),
            DiagnosticsError::NotNested => write!(f, "first set is not contained in the second"),
            DiagnosticsError::TooFewPairs { got, need } => {
                write!(f, "{got} sample pairs, need at least {need}")
            }
            DiagnosticsError::RadiiNotIncreasing => write!(f, "radii must increase"),
            DiagnosticsError::RadiusOverflow => write!(f, "ball leaves the grid"),
            DiagnosticsError::NotOnBoundary(i) => {
                write!(f, "node {i} is not on the discrete boundary")
            }
            DiagnosticsError::NotSubminimizing(i) => {
                write!(f, "subminimality precondition fails in the window at node {i}")
            }
            DiagnosticsError::Perimeter(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for DiagnosticsError {}

impl From<PerimeterError> for DiagnosticsError {
    fn from(e: PerimeterError) -> Self {
        DiagnosticsError::Perimeter(e)
    }
}

/// One co-area ledger row.
#[derive(Clone, Copy, Debug)]
pub struct LedgerRow {
    pub t: f64,
    pub value: f64,
    /// Perimeter of the level set inside Omega.
    pub p_omega: f64,
    /// Gap to the previous stacked value.
    pub dt: f64,
    pub dt_p: f64,
}

#[derive(Clone, Debug)]
pub struct CoareaLedger {
    pub rows: Vec<LedgerRow>,
    pub ledger_sum: f64,
    pub edgewise: f64,
    pub rel_err: f64,
    pub ok: bool,
}

/// Relative tolerance for the co-area identity: pure float accumulation.
pub const COAREA_RTOL: f64 = 1e-9;

/// The exact discrete co-area identity: the value-weighted perimeter sum
/// of the level family must reproduce the edge-wise total variation of
/// the stacked field.
pub fn coarea_ledger(domain: &GridDomain, sol: &Solution, stencil: &Stencil) -> CoareaLedger {
    let mut rows = Vec::with_capacity(sol.levels.len());
    let mut prev = sol.ladder.floor();
    let mut sum = 0f64;
    for lvl in &sol.levels {
        let dt = lvl.value - prev;
        let p = lvl.perimeter.interior();
        rows.push(LedgerRow { t: lvl.t, value: lvl.value, p_omega: p, dt, dt_p: dt * p });
        sum += dt * p;
        prev = lvl.value;
    }
    let edgewise = edgewise_tv(domain, &sol.u, stencil);
    let denom = sum.abs().max(edgewise.abs()).max(f64::MIN_POSITIVE);
    let rel_err = (sum - edgewise).abs() / denom;
    let ok = rel_err < COAREA_RTOL || (sum == 0.0 && edgewise == 0.0);
    CoareaLedger { rows, ledger_sum: sum, edgewise, rel_err, ok }
}

/// Result of the boundary Hölder fit.
#[derive(Clone, Copy, Debug)]
pub enum HolderFit {
    /// All sampled differences vanish; the exponent is undefined.
    Undefined,
    Fit { beta: f64, c: f64, residual: f64, pairs_used: usize },
}

/// Minimum pair count the fit accepts.
pub const HOLDER_MIN_PAIRS: usize = 100;

/// Sample `(ring, omega)` node pairs with separations in
/// `[2h, diameter/4]`, deterministically from the seed.
pub fn sample_boundary_pairs(
    domain: &GridDomain,
    count: usize,
    seed: u64,
) -> Vec<(usize, usize)> {
    let ring: Vec<usize> = domain.ring_nodes().collect();
    let omega: Vec<usize> = domain.omega_nodes().collect();
    let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
    for &i in &omega {
        let (x, y) = domain.position(i);
        lo = (lo.0.min(x), lo.1.min(y));
        hi = (hi.0.max(x), hi.1.max(y));
    }
    let diam = ((hi.0 - lo.0).powi(2) + (hi.1 - lo.1).powi(2)).sqrt();
    let (dmin, dmax) = (2.0 * domain.spacing(), diam / 4.0);
    let mut rng = SplitMix64::new(seed);
    let mut pairs = Vec::with_capacity(count);
    let mut tries = 0usize;
    while pairs.len() < count && tries < count * 200 {
        tries += 1;
        let r = ring[rng.next_usize(ring.len())];
        let o = omega[rng.next_usize(omega.len())];
        let (rx, ry) = domain.position(r);
        let (ox, oy) = domain.position(o);
        let d = ((rx - ox).powi(2) + (ry - oy).powi(2)).sqrt();
        if d >= dmin && d <= dmax {
            pairs.push((r, o));
        }
    }
    pairs
}

/// Distances and absolute differences for the sampled pairs; the raw
/// rows behind the fit (and the plot TSV).
pub fn holder_rows(
    domain: &GridDomain,
    u: &ScalarField,
    pairs: &[(usize, usize)],
) -> Vec<(f64, f64)> {
    pairs
        .iter()
        .map(|&(r, o)| {
            let (rx, ry) = domain.position(r);
            let (ox, oy) = domain.position(o);
            let d = ((rx - ox).powi(2) + (ry - oy).powi(2)).sqrt();
            (d, (u.value(o) - u.value(r)).abs())
        })
        .collect()
}

/// Least-squares fit of `log |u(x) - u(x0)|` against `log |x - x0|` over
/// boundary-anchored pairs with nonzero difference.
pub fn holder_exponent(
    domain: &GridDomain,
    u: &ScalarField,
    pairs: &[(usize, usize)],
) -> Result<HolderFit, DiagnosticsError> {
    if pairs.len() < HOLDER_MIN_PAIRS {
        return Err(DiagnosticsError::TooFewPairs { got: pairs.len(), need: HOLDER_MIN_PAIRS });
    }
    let rows = holder_rows(domain, u, pairs);
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|(_, du)| *du > 0.0).map(|&(d, du)| (d.ln(), du.ln())).collect();
    if pts.is_empty() {
        return Ok(HolderFit::Undefined);
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-12 {
        return Ok(HolderFit::Undefined);
    }
    let beta = (n * sxy - sx * sy) / det;
    let intercept = (sy - beta * sx) / n;
    let residual = (pts
        .iter()
        .map(|&(x, y)| {
            let e = y - (beta * x + intercept);
            e * e
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(HolderFit::Fit { beta, c: intercept.exp(), residual, pairs_used: pts.len() })
}

/// Barrier pair around a boundary point, with the sandwich verdict.
#[derive(Clone, Debug)]
pub struct BarrierEval {
    pub lower: ScalarField,
    pub upper: ScalarField,
    pub nodes_checked: usize,
    pub violations: usize,
    pub sandwich_ok: bool,
}

/// Evaluate the power barriers `g(x0) -/+ K v^(alpha/2)` with
/// `v = |x - x0|^2 + lambda d(x)` on the patch `B(x0, delta)` inside the
/// domain, the lower one floored at the obstacle, and check the field is
/// sandwiched node-wise.
#[allow(clippy::too_many_arguments)]
pub fn barrier_eval(
    domain: &GridDomain,
    g: &ScalarField,
    psi: &ScalarField,
    u: &ScalarField,
    x0: usize,
    delta: f64,
    lambda: f64,
    kappa: f64,
    alpha: f64,
) -> Result<BarrierEval, DiagnosticsError> {
    if domain.label(x0) != NodeLabel::BoundaryRing {
        return Err(DiagnosticsError::NotOnRing(x0));
    }
    if !(lambda > 2.0 * delta) {
        return Err(DiagnosticsError::LambdaTooSmall { lambda, delta });
    }
    let (cx, cy) = domain.position(x0);
    let g0 = g.value(x0);
    let ring_pos: Vec<(f64, f64)> = domain.ring_nodes().map(|i| domain.position(i)).collect();
    let patch: Vec<usize> = domain
        .omega_nodes()
        .filter(|&i| {
            let (x, y) = domain.position(i);
            (x - cx).powi(2) + (y - cy).powi(2) < delta * delta
        })
        .collect();

    let mut lower_vals = vec![f64::NAN; domain.len()];
    let mut upper_vals = vec![f64::NAN; domain.len()];
    let mut violations = 0usize;
    let tol = 1e-9 * (1.0 + g0.abs());
    for &i in &patch {
        let (x, y) = domain.position(i);
        let dist_sq = (x - cx).powi(2) + (y - cy).powi(2);
        let d_boundary = ring_pos
            .iter()
            .map(|&(rx, ry)| ((x - rx).powi(2) + (y - ry).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        let v = dist_sq + lambda * d_boundary;
        let power = kappa * v.powf(alpha / 2.0);
        let lo = (g0 - power).max(if psi.defined(i) { psi.value(i) } else { f64::NEG_INFINITY });
        let hi = g0 + power;
        lower_vals[i] = lo;
        upper_vals[i] = hi;
        let uu = u.value(i);
        if uu + tol < lo || uu > hi + tol {
            violations += 1;
        }
    }
    Ok(BarrierEval {
        lower: ScalarField::from_values(domain, Region::Omega, lower_vals)
            .expect("patch field shape"),
        upper: ScalarField::from_values(domain, Region::Omega, upper_vals)
            .expect("patch field shape"),
        nodes_checked: patch.len(),
        violations,
        sandwich_ok: violations == 0,
    })
}

/// Sweep barrier constants and return the first that sandwiches the
/// field, with its evaluation.
#[allow(clippy::too_many_arguments)]
pub fn barrier_sweep(
    domain: &GridDomain,
    g: &ScalarField,
    psi: &ScalarField,
    u: &ScalarField,
    x0: usize,
    delta: f64,
    lambda: f64,
    alpha: f64,
    kappas: &[f64],
) -> Result<Option<(f64, BarrierEval)>, DiagnosticsError> {
    for &k in kappas {
        let eval = barrier_eval(domain, g, psi, u, x0, delta, lambda, k, alpha)?;
        if eval.sandwich_ok {
            return Ok(Some((k, eval)));
        }
    }
    Ok(None)
}

/// How two nested sets meet inside a window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ContactVerdict {
    /// No shared boundary node in the window core.
    DisjointBoundaries,
    /// Boundaries share nodes and agree within the locality radius of
    /// every shared node.
    LocallyEqual,
    /// Boundaries share a node but diverge within its locality.
    Violation { witness: usize },
}

/// Classify the boundary contact of nested sets inside a window.
/// `locality` is the node radius (Chebyshev) within which shared
/// boundaries must agree; callers pass the stencil radius.
pub fn contact_probe(
    domain: &GridDomain,
    e: &PixelSet,
    f: &PixelSet,
    window: &[usize],
    locality: usize,
) -> Result<ContactVerdict, DiagnosticsError> {
    if !e.is_subset(f) {
        return Err(DiagnosticsError::NotNested);
    }
    let b_e = inner_boundary(domain, e);
    let b_f = inner_boundary(domain, f);
    let mut in_window = PixelSet::with_len(domain.len());
    for &i in window {
        in_window.insert(i);
    }
    let r = locality as i32;
    let core: Vec<usize> = window
        .iter()
        .copied()
        .filter(|&i| {
            let mut all = true;
            for dx in -r..=r {
                for dy in -r..=r {
                    match domain.offset(i, dx, dy) {
                        Some(q) if in_window.contains(q) => {}
                        _ => {
                            all = false;
                        }
                    }
                }
            }
            all
        })
        .collect();

    let shared: Vec<usize> =
        core.iter().copied().filter(|&i| b_e.contains(i) && b_f.contains(i)).collect();
    if shared.is_empty() {
        return Ok(ContactVerdict::DisjointBoundaries);
    }
    for &x in &shared {
        for dx in -r..=r {
            for dy in -r..=r {
                if let Some(q) = domain.offset(x, dx, dy) {
                    if in_window.contains(q) && b_e.contains(q) != b_f.contains(q) {
                        return Ok(ContactVerdict::Violation { witness: q });
                    }
                }
            }
        }
    }
    Ok(ContactVerdict::LocallyEqual)
}

/// Tally of a randomized contact sweep over nested level-set pairs.
#[derive(Clone, Debug, Default)]
pub struct ContactSweep {
    pub windows: usize,
    /// Windows whose minimality preconditions both passed the oracle.
    pub accepted: usize,
    pub disjoint: usize,
    pub locally_equal: usize,
    pub violations: usize,
}

/// Probe random interior windows against nested level-set pairs: each
/// accepted window has the inner set minimal and the outer set
/// superminimal there (oracle-verified), and is then classified by
/// [`contact_probe`] at one-node locality (a 4x5 window cannot core a
/// wider neighborhood under the enumeration bound).
pub fn contact_sweep(
    domain: &GridDomain,
    levels: &[crate::solver::LevelSolution],
    stencil: &Stencil,
    windows: usize,
    seed: u64,
) -> Result<ContactSweep, DiagnosticsError> {
    let mut sweep = ContactSweep::default();
    if levels.len() < 2 {
        return Ok(sweep);
    }
    let interior: Vec<usize> = domain.interior_nodes().collect();
    if interior.is_empty() {
        return Ok(sweep);
    }
    let mut rng = SplitMix64::new(seed);
    while sweep.windows < windows {
        sweep.windows += 1;
        let i = rng.next_usize(levels.len() - 1);
        let j = i + 1 + rng.next_usize(levels.len() - 1 - i);
        let (outer, inner) = (&levels[i].e_t, &levels[j].e_t);
        let anchor = interior[rng.next_usize(interior.len())];
        let mut window = Vec::with_capacity(20);
        for dx in 0..4i32 {
            for dy in 0..5i32 {
                if let Some(q) = domain.offset(anchor, dx, dy) {
                    if domain.in_omega(q) {
                        window.push(q);
                    }
                }
            }
        }
        if window.len() < 20 {
            continue;
        }
        let inner_ok =
            minimality_oracle(domain, inner, &window, MinimalityMode::Min, stencil)?.holds();
        let outer_ok =
            minimality_oracle(domain, outer, &window, MinimalityMode::Super, stencil)?.holds();
        if !inner_ok || !outer_ok {
            continue;
        }
        sweep.accepted += 1;
        match contact_probe(domain, inner, outer, &window, 1)? {
            ContactVerdict::DisjointBoundaries => sweep.disjoint += 1,
            ContactVerdict::LocallyEqual => sweep.locally_equal += 1,
            ContactVerdict::Violation { .. } => sweep.violations += 1,
        }
    }
    Ok(sweep)
}

#[derive(Clone, Copy, Debug)]
pub struct DensityRow {
    pub radius: f64,
    pub ratio: f64,
    /// Ball-discretization tolerance at this radius.
    pub tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct DensityProfile {
    pub rows: Vec<DensityRow>,
    pub monotone_ok: bool,
}

fn ball_counts(domain: &GridDomain, e: &PixelSet, x: usize, r: f64) -> (usize, usize) {
    let (cx, cy) = domain.position(x);
    let mut inside = 0usize;
    let mut member = 0usize;
    for i in domain.nodes() {
        let (px, py) = domain.position(i);
        if (px - cx).powi(2) + (py - cy).powi(2) < r * r {
            inside += 1;
            if e.contains(i) {
                member += 1;
            }
        }
    }
    (member, inside)
}

fn ball_in_grid(domain: &GridDomain, x: usize, r: f64) -> bool {
    let (cx, cy) = domain.position(x);
    let h = domain.spacing();
    let half_w = (domain.width() as f64 - 1.0) / 2.0 * h;
    let half_h = (domain.height() as f64 - 1.0) / 2.0 * h;
    cx - r >= -half_w && cx + r <= half_w && cy - r >= -half_h && cy + r <= half_h
}

/// Node-count density ratios `|E n B_r| / |B_r|` over increasing radii,
/// with a monotonicity verdict at tolerance `2h/r` per step.
pub fn density_profile(
    domain: &GridDomain,
    e: &PixelSet,
    x: usize,
    radii: &[f64],
) -> Result<DensityProfile, DiagnosticsError> {
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|&r| r <= 0.0) {
        return Err(DiagnosticsError::RadiiNotIncreasing);
    }
    let rmax = *radii.last().ok_or(DiagnosticsError::RadiiNotIncreasing)?;
    if !ball_in_grid(domain, x, rmax) {
        return Err(DiagnosticsError::RadiusOverflow);
    }
    let h = domain.spacing();
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let (member, inside) = ball_counts(domain, e, x, r);
        let ratio = member as f64 / inside.max(1) as f64;
        rows.push(DensityRow { radius: r, ratio, tolerance: 2.0 * h / r });
    }
    let monotone_ok =
        rows.windows(2).all(|w| w[1].ratio >= w[0].ratio - w[0].tolerance);
    Ok(DensityProfile { rows, monotone_ok })
}

fn on_discrete_boundary(domain: &GridDomain, e: &PixelSet, x: usize) -> bool {
    let member = e.contains(x);
    domain.neighbors4(x).any(|n| e.contains(n) != member)
}

/// Verify the subminimality precondition by exhausting 4x4 enumeration
/// windows tiling the ball `B(x, r)`.
pub fn verify_subminimizing(
    domain: &GridDomain,
    e: &PixelSet,
    x: usize,
    r: f64,
    stencil: &Stencil,
) -> Result<(), DiagnosticsError> {
    let (cx, cy) = domain.coords(x);
    let span = (r / domain.spacing()).ceil() as i32;
    let mut ay = cy as i32 - span;
    while ay <= cy as i32 + span {
        let mut ax = cx as i32 - span;
        while ax <= cx as i32 + span {
            let mut window = Vec::with_capacity(16);
            for dx in 0..4i32 {
                for dy in 0..4i32 {
                    let nx = ax + dx;
                    let ny = ay + dy;
                    if nx >= 0
                        && ny >= 0
                        && (nx as usize) < domain.width()
                        && (ny as usize) < domain.height()
                    {
                        window.push(domain.index(nx as usize, ny as usize));
                    }
                }
            }
            if !window.is_empty() {
                let anchor = window[0];
                let v = minimality_oracle(domain, e, &window, MinimalityMode::Sub, stencil)?;
                if !v.holds() {
                    return Err(DiagnosticsError::NotSubminimizing(anchor));
                }
            }
            ax += 4;
        }
        ay += 4;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
pub struct DensityBound {
    pub ratio: f64,
    pub bound: f64,
    pub ok: bool,
}

/// One-sided density bound at a boundary point of an oracle-verified
/// subminimizing set: the ball ratio must reach `delta2` up to the
/// discretization allowance `4h/r`.
pub fn density_lower_bound(
    domain: &GridDomain,
    e: &PixelSet,
    x: usize,
    r: f64,
    delta2: f64,
    stencil: &Stencil,
) -> Result<DensityBound, DiagnosticsError> {
    if !on_discrete_boundary(domain, e, x) {
        return Err(DiagnosticsError::NotOnBoundary(x));
    }
    if !ball_in_grid(domain, x, r) {
        return Err(DiagnosticsError::RadiusOverflow);
    }
    verify_subminimizing(domain, e, x, r, stencil)?;
    let (member, inside) = ball_counts(domain, e, x, r);
    let ratio = member as f64 / inside.max(1) as f64;
    let bound = delta2 - 4.0 * domain.spacing() / r;
    Ok(DensityBound { ratio, bound, ok: ratio >= bound })
}
