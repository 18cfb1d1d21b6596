//! End-to-end construction of the solution field: level ladder, per-level
//! constrained min cuts, nesting audit, and monotone stacking.
//!
//! Levels are placed strictly between data values (quantized mode), so
//! each superlevel problem is solved at a threshold no data point sits
//! on; the value stacked into the field is the data value the level
//! represents. The bottom level of a quantized ladder always pins the
//! whole collar, so every node carries at least the minimum boundary
//! value. Levels are solved independently (optionally across threads)
//! and the assembly is a deterministic reduction over level index, so
//! worker count never changes the result.

use crate::grid::{
    exterior_superlevel, extend_boundary_data, obstacle_superlevel, GridDomain, GridError,
    PixelSet, Region, ScalarField,
};
use crate::mincut::{build_network, MincutError};
use crate::perimeter::{PerimeterValue, Stencil};
use std::fmt;
use std::io::{BufRead, Write};

#[derive(Debug)]
pub enum SolveError {
    EmptyData,
    BadLadder(String),
    /// The obstacle exceeds the boundary data somewhere on the ring; the
    /// constrained problem has no admissible field.
    ObstacleAboveBoundary { node: usize, psi: f64, g: f64 },
    /// The obstacle superlevel closure touches a ring node below the
    /// threshold: the obstacle rises faster than one grid step allows
    /// next to the boundary.
    ObstacleClosureAtRing { node: usize, t: f64 },
    /// A discretization defect: a higher level escaped a lower one. The
    /// solver aborts rather than silently repairing.
    Nesting { s: f64, t: f64, witnesses: Vec<usize> },
    Grid(GridError),
    Mincut(MincutError),
    Io(std::io::Error),
    Format(String),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::EmptyData => write!(f, "no finite data to build a ladder from"),
            SolveError::BadLadder(m) => write!(f, "bad ladder: {m}"),
            SolveError::ObstacleAboveBoundary { node, psi, g } => {
                write!(f, "obstacle {psi} exceeds boundary data {g} at ring node {node}")
            }
            SolveError::ObstacleClosureAtRing { node, t } => write!(
                f,
                "obstacle superlevel at threshold {t} reaches ring node {node} whose data \
                 lies below it; flatten the obstacle near the boundary"
            ),
            SolveError::Nesting { s, t, witnesses } => write!(
                f,
                "nesting violation: E_{t} escapes E_{s} at {} node(s), first {:?}",
                witnesses.len(),
                witnesses.first()
            ),
            SolveError::Grid(e) => write!(f, "{e}"),
            SolveError::Mincut(e) => write!(f, "{e}"),
            SolveError::Io(e) => write!(f, "i/o error: {e}"),
            SolveError::Format(m) => write!(f, "bad solution file: {m}"),
        }
    }
}

impl std::error::Error for SolveError {}

impl From<GridError> for SolveError {
    fn from(e: GridError) -> Self {
        SolveError::Grid(e)
    }
}

impl From<MincutError> for SolveError {
    fn from(e: MincutError) -> Self {
        SolveError::Mincut(e)
    }
}

impl From<std::io::Error> for SolveError {
    fn from(e: std::io::Error) -> Self {
        SolveError::Io(e)
    }
}

/// How ladder levels are chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LadderMode {
    /// One level per distinct data value, cut half a minimal gap below it.
    Quantized,
    /// The given number of equispaced cuts strictly inside (a, b).
    Uniform(usize),
}

/// Finite set of thresholds with the data values they represent.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelLadder {
    cuts: Vec<f64>,
    values: Vec<f64>,
    a: f64,
    b: f64,
}

impl LevelLadder {
    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    /// Threshold the superlevel problem is solved at.
    pub fn cut(&self, k: usize) -> f64 {
        self.cuts[k]
    }

    /// Data value stacked into the field for this level.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Bottom of the data interval; the floor value of the stacked field.
    pub fn floor(&self) -> f64 {
        self.a
    }

    pub fn top(&self) -> f64 {
        self.b
    }

    /// Largest gap between consecutive stacked values (including the floor).
    pub fn max_gap(&self) -> f64 {
        let mut prev = self.a;
        let mut gap = 0f64;
        for &v in &self.values {
            gap = gap.max(v - prev);
            prev = v;
        }
        gap
    }
}

/// Build the level ladder from boundary and obstacle data. The interval
/// [a, b] is the smallest one containing both ranges.
pub fn make_ladder(
    g: &ScalarField,
    psi: &ScalarField,
    mode: LadderMode,
) -> Result<LevelLadder, SolveError> {
    let mut data: Vec<f64> = g.defined_nodes().map(|i| g.value(i)).collect();
    if data.is_empty() {
        return Err(SolveError::EmptyData);
    }
    data.extend(psi.defined_nodes().map(|i| psi.value(i)));
    data.sort_by(f64::total_cmp);
    data.dedup();
    let a = data[0];
    let b = *data.last().unwrap();

    match mode {
        LadderMode::Quantized => {
            let eps = if data.len() < 2 {
                1.0
            } else {
                let min_gap =
                    data.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
                min_gap / 2.0
            };
            let cuts: Vec<f64> = data.iter().map(|v| v - eps).collect();
            Ok(LevelLadder { cuts, values: data, a, b })
        }
        LadderMode::Uniform(m) => {
            if m == 0 {
                return Err(SolveError::BadLadder("uniform ladder needs m >= 1".into()));
            }
            if b - a == 0.0 {
                // Constant data: one all-in level below the single value.
                return Ok(LevelLadder { cuts: vec![a - 1.0], values: vec![a], a, b });
            }
            let cuts: Vec<f64> =
                (1..=m).map(|k| a + (b - a) * k as f64 / (m as f64 + 1.0)).collect();
            Ok(LevelLadder { cuts: cuts.clone(), values: cuts, a, b })
        }
    }
}

/// One solved level.
#[derive(Clone, Debug)]
pub struct LevelSolution {
    /// Threshold of the constrained problem.
    pub t: f64,
    /// Stacked data value.
    pub value: f64,
    /// Volume-maximal minimizer (collar pattern plus interior part).
    pub e_t: PixelSet,
    /// `e_t` restricted to interior and ring nodes.
    pub a_t: PixelSet,
    /// Perimeter of `e_t` over the whole grid; `.interior()` is P(E_t, Omega).
    pub perimeter: PerimeterValue,
    pub flow_units: u64,
    pub offset_units: u64,
    pub augmentations: u64,
}

/// Forced membership of the level problem at threshold `t`: the collar
/// follows the extended data superlevel, the obstacle superlevel closure
/// is forced in, and the ring is pinned to the trace superlevel of `g`.
///
/// Thresholds sit strictly between data values, where boundary
/// membership of a level set is fully determined, so the trace is
/// imposed as a constraint rather than left to the cut metric, whose
/// anisotropy cannot see the curvature margins that settle it in the
/// continuum.
pub fn level_constraints(
    domain: &GridDomain,
    g_ext: &ScalarField,
    psi: &ScalarField,
    t: f64,
) -> Result<(PixelSet, PixelSet), SolveError> {
    let l_t = obstacle_superlevel(domain, psi, t);
    let cal_t = exterior_superlevel(domain, g_ext, t);
    let mut forced_in = l_t.union(&cal_t);
    let mut forced_out = PixelSet::empty(domain);
    for i in domain.collar_nodes() {
        if !cal_t.contains(i) {
            forced_out.insert(i);
        }
    }
    for i in domain.ring_nodes() {
        if g_ext.value(i) >= t {
            forced_in.insert(i);
        } else if l_t.contains(i) {
            // The obstacle superlevel closure reaches a ring node whose
            // data sits below the threshold: the discrete data jumps too
            // steeply at the boundary for an admissible level set.
            return Err(SolveError::ObstacleClosureAtRing { node: i, t });
        } else {
            forced_out.insert(i);
        }
    }
    Ok((forced_in, forced_out))
}

/// Solve the constrained problem at a single threshold.
pub fn solve_level(
    domain: &GridDomain,
    g_ext: &ScalarField,
    psi: &ScalarField,
    t: f64,
    value: f64,
    stencil: &Stencil,
) -> Result<LevelSolution, SolveError> {
    let (forced_in, forced_out) = level_constraints(domain, g_ext, psi, t)?;
    let mut net = build_network(domain, stencil, &forced_in, &forced_out)?;
    net.max_flow();
    let cut = net.extract_cuts(domain, stencil)?;
    let mut a_t = PixelSet::empty(domain);
    for i in domain.omega_nodes() {
        if cut.e_max.contains(i) {
            a_t.insert(i);
        }
    }
    Ok(LevelSolution {
        t,
        value,
        e_t: cut.e_max,
        a_t,
        perimeter: cut.perimeter,
        flow_units: cut.flow_units,
        offset_units: cut.offset_units,
        augmentations: net.augmentations(),
    })
}

/// Outcome of checking that higher levels stay inside lower ones.
#[derive(Clone, Debug)]
pub struct NestingAudit {
    pub ok: bool,
    /// First violating adjacent pair, with up to eight witness nodes.
    pub violation: Option<(f64, f64, Vec<usize>)>,
    /// Per adjacent pair: number of shared inner-boundary nodes of the
    /// A_t parts (touching is legal; the count is reported, not judged).
    pub touching: Vec<usize>,
    pub pairs_checked: usize,
}

/// Verify `E_t` stays inside `E_s` for every adjacent pair of `levels`
/// (sorted ascending in `t`), and collect touching statistics.
pub fn nesting_audit(domain: &GridDomain, levels: &[LevelSolution]) -> NestingAudit {
    let mut touching = Vec::new();
    let mut violation = None;
    for w in levels.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        if violation.is_none() && !hi.e_t.is_subset(&lo.e_t) {
            let witnesses = hi.e_t.witness_difference(&lo.e_t, 8);
            violation = Some((lo.t, hi.t, witnesses));
        }
        let b_lo = inner_boundary(domain, &lo.a_t);
        let b_hi = inner_boundary(domain, &hi.a_t);
        touching.push(b_lo.intersection(&b_hi).volume());
    }
    NestingAudit {
        ok: violation.is_none(),
        violation,
        touching,
        pairs_checked: levels.len().saturating_sub(1),
    }
}

/// Nodes of the set with a 4-neighbor outside it.
pub fn inner_boundary(domain: &GridDomain, set: &PixelSet) -> PixelSet {
    let mut b = PixelSet::empty(domain);
    for i in set.iter() {
        if domain.neighbors4(i).any(|n| !set.contains(n)) {
            b.insert(i);
        }
    }
    b
}

/// The stacked solution.
#[derive(Clone, Debug)]
pub struct Solution {
    /// Field on interior and ring nodes.
    pub u: ScalarField,
    pub ladder: LevelLadder,
    pub levels: Vec<LevelSolution>,
    /// Co-area total: sum of value-gap times interior perimeter.
    pub tv: f64,
    pub touching: Vec<usize>,
}

/// Solve every ladder level, audit nesting, and stack the field.
/// `threads` caps the worker count; the result is identical for any value.
pub fn solve(
    domain: &GridDomain,
    g: &ScalarField,
    psi: &ScalarField,
    stencil: &Stencil,
    ladder: &LevelLadder,
    threads: usize,
) -> Result<Solution, SolveError> {
    for i in domain.ring_nodes() {
        if !g.defined(i) {
            return Err(SolveError::Grid(GridError::UndefinedRingValue(i)));
        }
        if psi.defined(i) && psi.value(i) > g.value(i) {
            return Err(SolveError::ObstacleAboveBoundary {
                node: i,
                psi: psi.value(i),
                g: g.value(i),
            });
        }
    }
    let g_ext = extend_boundary_data(domain, g)?;
    let m = ladder.len();
    if m == 0 {
        return Err(SolveError::BadLadder("empty ladder".into()));
    }

    let workers = threads.max(1).min(m);
    let mut slots: Vec<Option<Result<LevelSolution, SolveError>>> = Vec::new();
    slots.resize_with(m, || None);
    if workers == 1 {
        for (k, slot) in slots.iter_mut().enumerate() {
            *slot =
                Some(solve_level(domain, &g_ext, psi, ladder.cut(k), ladder.value(k), stencil));
        }
    } else {
        let g_ext_ref = &g_ext;
        let chunks: Vec<Vec<(usize, Result<LevelSolution, SolveError>)>> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = (0..workers)
                    .map(|w| {
                        scope.spawn(move || {
                            let mut out = Vec::new();
                            let mut k = w;
                            while k < m {
                                out.push((
                                    k,
                                    solve_level(
                                        domain,
                                        g_ext_ref,
                                        psi,
                                        ladder.cut(k),
                                        ladder.value(k),
                                        stencil,
                                    ),
                                ));
                                k += workers;
                            }
                            out
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("level worker panicked"))
                    .collect()
            });
        for chunk in chunks {
            for (k, r) in chunk {
                slots[k] = Some(r);
            }
        }
    }

    let mut levels = Vec::with_capacity(m);
    for slot in slots {
        levels.push(slot.expect("level not solved")?);
    }

    let audit = nesting_audit(domain, &levels);
    if let Some((s, t, witnesses)) = audit.violation {
        return Err(SolveError::Nesting { s, t, witnesses });
    }

    // Stack: the field takes the value of the highest level containing
    // the node, with the interval floor as fallback.
    let a = ladder.floor();
    let u = ScalarField::from_fn(domain, Region::Omega, |i| {
        let mut v = a;
        for lvl in &levels {
            if lvl.a_t.contains(i) {
                v = lvl.value;
            } else {
                break;
            }
        }
        v
    });

    let mut tv = 0f64;
    let mut prev = a;
    for lvl in &levels {
        tv += (lvl.value - prev) * lvl.perimeter.interior();
        prev = lvl.value;
    }

    Ok(Solution { u, ladder: ladder.clone(), levels, tv, touching: audit.touching })
}

/// Edge-wise total variation of a field over interior edges, using the
/// stencil weights. The independent side of the co-area identity.
pub fn edgewise_tv(domain: &GridDomain, field: &ScalarField, stencil: &Stencil) -> f64 {
    let h = domain.spacing();
    let mut tv = 0f64;
    for p in domain.omega_nodes() {
        if !field.defined(p) {
            continue;
        }
        for (fam, ((dx, dy), _)) in stencil.families().enumerate() {
            if let Some(q) = domain.offset(p, dx, dy) {
                if domain.in_omega(q) && field.defined(q) {
                    tv += stencil.weight(fam, h) * (field.value(p) - field.value(q)).abs();
                }
            }
        }
    }
    tv
}

/// Write the level family in the LGOBV1 run-length format: a magic line,
/// a shape line `width height h level-count`, then per level a `t value`
/// line followed by run lengths of the A_t bitmask in row-major order,
/// alternating runs of 0s and 1s starting with a (possibly empty) 0-run.
pub fn write_levels(
    solution: &Solution,
    domain: &GridDomain,
    writer: &mut impl Write,
) -> Result<(), SolveError> {
    writeln!(writer, "LGOBV1")?;
    writeln!(
        writer,
        "{} {} {} {}",
        domain.width(),
        domain.height(),
        domain.spacing(),
        solution.levels.len()
    )?;
    for lvl in &solution.levels {
        writeln!(writer, "{} {}", lvl.t, lvl.value)?;
        let mut runs: Vec<usize> = Vec::new();
        let mut current = false;
        let mut run = 0usize;
        for i in 0..domain.len() {
            let bit = lvl.a_t.contains(i);
            if bit == current {
                run += 1;
            } else {
                runs.push(run);
                current = bit;
                run = 1;
            }
        }
        runs.push(run);
        let line: Vec<String> = runs.iter().map(|r| r.to_string()).collect();
        writeln!(writer, "{}", line.join(","))?;
    }
    Ok(())
}

/// Parse an LGOBV1 stream back into `(width, height, h, levels)` where
/// each level is `(t, value, row-major bitmask)`.
pub fn read_levels(
    reader: &mut impl BufRead,
) -> Result<(usize, usize, f64, Vec<(f64, f64, Vec<bool>)>), SolveError> {
    let mut lines = reader.lines();
    let magic = lines.next().ok_or_else(|| SolveError::Format("empty".into()))??;
    if magic.trim() != "LGOBV1" {
        return Err(SolveError::Format(format!("bad magic {magic:?}")));
    }
    let shape = lines.next().ok_or_else(|| SolveError::Format("missing shape".into()))??;
    let parts: Vec<&str> = shape.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(SolveError::Format("shape line needs 4 fields".into()));
    }
    let w: usize = parts[0].parse().map_err(|_| SolveError::Format("bad width".into()))?;
    let h: usize = parts[1].parse().map_err(|_| SolveError::Format("bad height".into()))?;
    let spacing: f64 =
        parts[2].parse().map_err(|_| SolveError::Format("bad spacing".into()))?;
    let m: usize = parts[3].parse().map_err(|_| SolveError::Format("bad level count".into()))?;
    let mut levels = Vec::with_capacity(m);
    for _ in 0..m {
        let head = lines.next().ok_or_else(|| SolveError::Format("missing level".into()))??;
        let hp: Vec<&str> = head.split_whitespace().collect();
        if hp.len() != 2 {
            return Err(SolveError::Format("level line needs t and value".into()));
        }
        let t: f64 = hp[0].parse().map_err(|_| SolveError::Format("bad t".into()))?;
        let v: f64 = hp[1].parse().map_err(|_| SolveError::Format("bad value".into()))?;
        let rle = lines.next().ok_or_else(|| SolveError::Format("missing runs".into()))??;
        let mut bits = Vec::with_capacity(w * h);
        let mut current = false;
        for tok in rle.split(',') {
            let run: usize =
                tok.trim().parse().map_err(|_| SolveError::Format("bad run".into()))?;
            bits.extend(std::iter::repeat_n(current, run));
            current = !current;
        }
        if bits.len() != w * h {
            return Err(SolveError::Format(format!(
                "level decodes to {} bits, expected {}",
                bits.len(),
                w * h
            )));
        }
        levels.push((t, v, bits));
    }
    Ok((w, h, spacing, levels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainSpec;
    use crate::oracle::enumerate_level;
    use crate::perimeter::{make_stencil, minimality_oracle, MinimalityMode, PerimeterRegion};
    use crate::rng::SplitMix64;

    fn disc(radius: f64, h: f64, collar: usize) -> GridDomain {
        GridDomain::build(&DomainSpec::Disc { radius }, h, collar, true).unwrap()
    }

    fn angle(domain: &GridDomain, i: usize) -> f64 {
        let (x, y) = domain.position(i);
        y.atan2(x)
    }

    #[test]
    fn quantized_ladder_of_two_valued_g_and_constant_psi() {
        let d = disc(1.0, 0.25, 1);
        let g = ScalarField::from_fn(
            &d,
            Region::Ring,
            |i| if angle(&d, i) >= 0.0 { 1.0 } else { 0.0 },
        );
        let psi = ScalarField::from_fn(&d, Region::Omega, |_| -1.0);
        let l = make_ladder(&g, &psi, LadderMode::Quantized).unwrap();
        assert_eq!(l.values(), &[-1.0, 0.0, 1.0]);
        assert_eq!(l.cuts(), &[-1.5, -0.5, 0.5]);
        assert_eq!((l.floor(), l.top()), (-1.0, 1.0));
    }

    #[test]
    fn uniform_ladder_is_equispaced_open() {
        let d = disc(1.0, 0.25, 1);
        let g = ScalarField::from_fn(
            &d,
            Region::Ring,
            |i| if angle(&d, i) >= 0.0 { 1.0 } else { 0.0 },
        );
        let psi = ScalarField::from_fn(&d, Region::Omega, |_| 0.0);
        let l = make_ladder(&g, &psi, LadderMode::Uniform(5)).unwrap();
        for (k, &c) in l.cuts().iter().enumerate() {
            let expect = (k + 1) as f64 / 6.0;
            assert!((c - expect).abs() < 1e-12);
        }
        assert!(matches!(
            make_ladder(&g, &psi, LadderMode::Uniform(0)),
            Err(SolveError::BadLadder(_))
        ));
    }

    #[test]
    fn quantized_ladder_size_counts_distinct_samples() {
        let d = disc(1.0, 0.05, 1);
        let g = ScalarField::from_fn(&d, Region::Ring, |i| angle(&d, i).abs().sqrt());
        let psi = ScalarField::from_fn(&d, Region::Omega, |_| 0.0);
        let mut distinct: Vec<f64> = d.ring_nodes().map(|i| g.value(i)).collect();
        distinct.push(0.0);
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let l = make_ladder(&g, &psi, LadderMode::Quantized).unwrap();
        assert_eq!(l.len(), distinct.len());
    }

    fn two_valued_instance(
        radius: f64,
        h: f64,
    ) -> (GridDomain, ScalarField, ScalarField, LevelLadder) {
        let d = disc(radius, h, 1);
        let g = ScalarField::from_fn(
            &d,
            Region::Ring,
            |i| if d.position(i).0 >= 0.0 { 1.0 } else { 0.0 },
        );
        let psi = ScalarField::from_fn(&d, Region::Omega, |_| 0.0);
        let ladder = make_ladder(&g, &psi, LadderMode::Quantized).unwrap();
        (d, g, psi, ladder)
    }

    #[test]
    fn extreme_levels_are_all_in_and_empty() {
        let (d, g, psi, _) = two_valued_instance(1.0, 0.25);
        let g_ext = extend_boundary_data(&d, &g).unwrap();
        let s = make_stencil(4).unwrap();
        let low = solve_level(&d, &g_ext, &psi, -5.0, -5.0, &s).unwrap();
        assert_eq!(low.e_t, PixelSet::full(&d));
        assert_eq!(low.a_t.volume(), d.omega_nodes().count());
        let high = solve_level(&d, &g_ext, &psi, 5.0, 5.0, &s).unwrap();
        assert!(high.e_t.is_empty());
        assert_eq!(high.perimeter.total_units(), 0);
    }

    #[test]
    fn constant_boundary_gives_constant_field_zero_tv() {
        let d = disc(1.0, 0.25, 1);
        let g = ScalarField::from_fn(&d, Region::Ring, |_| 2.5);
        let psi = ScalarField::from_fn(&d, Region::Omega, |_| 2.5);
        let ladder = make_ladder(&g, &psi, LadderMode::Quantized).unwrap();
        let s = make_stencil(4).unwrap();
        let sol = solve(&d, &g, &psi, &s, &ladder, 1).unwrap();
        for i in d.omega_nodes() {
            assert_eq!(sol.u.value(i), 2.5);
        }
        assert_eq!(sol.tv, 0.0);
    }

    #[test]
    fn chord_instance_boundary_and_obstacle_exact() {
        let (d, g, psi, ladder) = two_valued_instance(1.0, 0.125);
        let s = make_stencil(8).unwrap();
        let sol = solve(&d, &g, &psi, &s, &ladder, 1).unwrap();
        for i in d.ring_nodes() {
            assert_eq!(sol.u.value(i), g.value(i), "trace at ring node {i}");
        }
        for i in d.omega_nodes() {
            assert!(sol.u.value(i) >= psi.value(i), "obstacle at node {i}");
        }
        // The top level set hugs the vertical chord.
        let high = sol.levels.last().unwrap();
        for i in d.omega_nodes() {
            let (x, _) = d.position(i);
            if high.a_t.contains(i) {
                assert!(x >= -2.0 * d.spacing(), "member far left of chord at node {i}");
            } else {
                assert!(x <= 2.0 * d.spacing(), "non-member far right of chord at node {i}");
            }
        }
    }

    fn quantize(domain: &GridDomain, f: &ScalarField, step: f64) -> ScalarField {
        ScalarField::from_fn(domain, f.region(), |i| (f.value(i) / step).round() * step)
    }

    #[test]
    fn nesting_holds_and_shuffled_levels_violate() {
        let d = disc(1.0, 0.2, 1);
        let g = ScalarField::from_fn(&d, Region::Ring, |i| angle(&d, i).abs());
        let raw = ScalarField::from_fn(&d, Region::Omega, |i| {
            let (x, y) = d.position(i);
            (1.2 - 2.0 * (x * x + y * y).sqrt()).min(0.0)
        });
        let psi = quantize(&d, &raw, 0.4);
        let ladder = make_ladder(&g, &psi, LadderMode::Uniform(6)).unwrap();
        let s = make_stencil(8).unwrap();
        let sol = solve(&d, &g, &psi, &s, &ladder, 2).unwrap();
        let audit = nesting_audit(&d, &sol.levels);
        assert!(audit.ok);
        assert_eq!(audit.pairs_checked, sol.levels.len() - 1);
        // Reversing the level order must report a violation with witnesses
        // whenever the family is not constant.
        let mut reversed = sol.levels.clone();
        reversed.reverse();
        if sol.levels.first().unwrap().e_t != sol.levels.last().unwrap().e_t {
            let bad = nesting_audit(&d, &reversed);
            assert!(!bad.ok);
            let (_, _, witnesses) = bad.violation.unwrap();
            assert!(!witnesses.is_empty());
        }
    }

    #[test]
    fn uniform_mode_respects_gap_tolerances() {
        // With a coarse uniform ladder the field tracks data and
        // obstacle only up to the largest stacked-value gap.
        let d = disc(1.0, 0.1, 1);
        let g = ScalarField::from_fn(&d, Region::Ring, |i| {
            let (x, y) = d.position(i);
            (y.atan2(x).abs() / std::f64::consts::PI).sqrt()
        });
        let psi = ScalarField::from_fn(&d, Region::Omega, |i| {
            let (x, y) = d.position(i);
            (0.6 - 1.5 * ((x - 0.2).powi(2) + y * y).sqrt()).max(0.0)
        });
        let psi = quantize(&d, &psi, 0.3);
        let ladder = make_ladder(&g, &psi, LadderMode::Uniform(7)).unwrap();
        let s = make_stencil(8).unwrap();
        let sol = solve(&d, &g, &psi, &s, &ladder, 2).unwrap();
        let gap = ladder.max_gap();
        assert!(gap > 0.0);
        for i in d.ring_nodes() {
            assert!(
                (sol.u.value(i) - g.value(i)).abs() <= gap + 1e-12,
                "ring node {i}: |u - g| exceeds the ladder gap"
            );
        }
        for i in d.omega_nodes() {
            assert!(
                sol.u.value(i) >= psi.value(i) - gap - 1e-12,
                "node {i}: u dips more than one gap under the obstacle"
            );
        }
    }

    #[test]
    fn ladder_from_no_data_errors() {
        let d = disc(1.0, 0.25, 1);
        let empty = ScalarField::from_fn(&d, Region::Ring, |_| f64::NAN);
        let psi = ScalarField::from_fn(&d, Region::Omega, |_| 0.0);
        assert!(matches!(
            make_ladder(&empty, &psi, LadderMode::Quantized),
            Err(SolveError::EmptyData)
        ));
    }

    #[test]
    fn monotone_ramp_gives_strictly_nested_levels() {
        let d = disc(1.0, 0.1, 1);
        let g = ScalarField::from_fn(&d, Region::Ring, |i| {
            ((d.position(i).0 * 4.0).round()) / 4.0
        });
        // Inactive floor obstacle: every ladder level cuts the ramp, so
        // consecutive level sets differ strictly.
        let psi = ScalarField::from_fn(&d, Region::Omega, |_| -1.0);
        let ladder = make_ladder(&g, &psi, LadderMode::Quantized).unwrap();
        let s = make_stencil(8).unwrap();
        let sol = solve(&d, &g, &psi, &s, &ladder, 2).unwrap();
        for w in sol.levels.windows(2) {
            assert!(w[1].e_t.is_subset(&w[0].e_t));
            assert!(
                w[1].e_t.volume() < w[0].e_t.volume(),
                "ramp levels at {} and {} are not strictly nested",
                w[0].t,
                w[1].t
            );
        }
    }

    #[test]
    fn coarea_identity_on_random_instances() {
        let mut rng = SplitMix64::new(2024);
        for trial in 0..8 {
            let d = disc(1.0, 0.2, 2);
            let k = 2 + (trial % 3);
            let vals: Vec<f64> =
                (0..k).map(|_| (rng.next_f64() * 4.0).round() / 2.0).collect();
            let mut splits: Vec<f64> = (0..k)
                .map(|_| rng.range_f64(-std::f64::consts::PI, std::f64::consts::PI))
                .collect();
            splits.sort_by(f64::total_cmp);
            let g = ScalarField::from_fn(&d, Region::Ring, |i| {
                let th = angle(&d, i);
                let sector = splits.iter().filter(|&&b| th >= b).count() % vals.len();
                vals[sector]
            });
            let gmin = g.min_max().unwrap().0;
            let psi = ScalarField::from_fn(&d, Region::Omega, |i| {
                let (x, y) = d.position(i);
                let cone = gmin + 0.6 - 2.0 * (x * x + y * y).sqrt();
                let v = (cone.max(gmin - 0.5) * 4.0).round() / 4.0;
                v.min(gmin)
            });
            let ladder = make_ladder(&g, &psi, LadderMode::Quantized).unwrap();
            let s = make_stencil([4, 8, 16][trial % 3]).unwrap();
            let sol = solve(&d, &g, &psi, &s, &ladder, 1 + trial % 3).unwrap();
            let ledger: f64 = sol.tv;
            let edge = edgewise_tv(&d, &sol.u, &s);
            let denom = ledger.abs().max(1e-12);
            assert!(
                ((ledger - edge) / denom).abs() < 1e-9,
                "coarea mismatch trial {trial}: ledger {ledger} edge {edge}"
            );
        }
    }

    fn rng_angle(rng: &mut SplitMix64) -> f64 {
        rng.range_f64(-std::f64::consts::PI, std::f64::consts::PI)
    }

    #[test]
    fn inactive_obstacle_matches_floor_obstacle_bitwise() {
        let mut rng = SplitMix64::new(77);
        for _ in 0..5 {
            let d = disc(1.0, 0.2, 1);
            let split = rng_angle(&mut rng);
            let g = ScalarField::from_fn(
                &d,
                Region::Ring,
                |i| if angle(&d, i) >= split { 1.0 } else { 0.25 },
            );
            let gmin = g.min_max().unwrap().0;
            // Random quantized obstacle strictly below min g.
            let psi_inactive = ScalarField::from_fn(&d, Region::Omega, |i| {
                let (x, y) = d.position(i);
                gmin - 0.25 - 0.5 * ((x * x + y * y).sqrt() * 4.0).round() / 4.0
            });
            let lad1 = make_ladder(&g, &psi_inactive, LadderMode::Quantized).unwrap();
            let a = lad1.floor();
            let psi_floor = ScalarField::from_fn(&d, Region::Omega, |_| a);
            let lad2 = make_ladder(&g, &psi_floor, LadderMode::Quantized).unwrap();
            let s = make_stencil(4).unwrap();
            let sol1 = solve(&d, &g, &psi_inactive, &s, &lad1, 1).unwrap();
            let sol2 = solve(&d, &g, &psi_floor, &s, &lad2, 1).unwrap();
            for i in d.omega_nodes() {
                assert_eq!(sol1.u.value(i).to_bits(), sol2.u.value(i).to_bits());
            }
            assert_eq!(sol1.tv.to_bits(), sol2.tv.to_bits());
        }
    }

    #[test]
    fn obstacle_above_boundary_errors() {
        let d = disc(1.0, 0.25, 1);
        let g = ScalarField::from_fn(&d, Region::Ring, |_| 0.0);
        let psi = ScalarField::from_fn(&d, Region::Omega, |_| 1.0);
        let ladder = make_ladder(&g, &psi, LadderMode::Quantized).unwrap();
        let s = make_stencil(4).unwrap();
        assert!(matches!(
            solve(&d, &g, &psi, &s, &ladder, 1),
            Err(SolveError::ObstacleAboveBoundary { .. })
        ));
    }

    #[test]
    fn tiny_instances_match_full_enumeration() {
        // Disc of radius 2.5h: 21 Omega nodes, inside the oracle bound.
        let mut rng = SplitMix64::new(4242);
        for trial in 0..6 {
            let d = disc(2.5, 1.0, 1);
            assert!(d.omega_nodes().count() <= 22);
            let vals = [0.0, 0.5, 1.0, 1.5];
            let split = rng_angle(&mut rng);
            let g = ScalarField::from_fn(&d, Region::Ring, |i| {
                let th = angle(&d, i);
                vals[(usize::from(th >= split) + trial) % 4]
            });
            let (gmin, gmax) = g.min_max().unwrap();
            // Single-node bump at the center: its superlevel closure
            // stays strictly interior on this disc.
            let bump = gmin + 0.5 * f64::from(gmax > gmin);
            let psi = ScalarField::from_fn(&d, Region::Omega, |i| {
                let (x, y) = d.position(i);
                if x == 0.0 && y == 0.0 {
                    bump
                } else {
                    gmin
                }
            });
            let ladder = make_ladder(&g, &psi, LadderMode::Quantized).unwrap();
            let s = make_stencil(4).unwrap();
            let sol = solve(&d, &g, &psi, &s, &ladder, 1).unwrap();
            let g_ext = extend_boundary_data(&d, &g).unwrap();
            let mut oracle_tv = 0f64;
            let mut prev = ladder.floor();
            for k in 0..ladder.len() {
                let t = ladder.cut(k);
                let (fin, fout) = level_constraints(&d, &g_ext, &psi, t).unwrap();
                let o = enumerate_level(&d, &s, &fin, &fout, 0).unwrap();
                assert_eq!(sol.levels[k].e_t, o.e_max, "level {k} trial {trial}");
                assert_eq!(
                    sol.levels[k].perimeter.total_units(),
                    o.min_units,
                    "level {k} trial {trial}"
                );
                let p_omega =
                    crate::perimeter::perimeter(&d, &o.e_max, PerimeterRegion::Omega, &s)
                        .unwrap()
                        .interior();
                oracle_tv += (ladder.value(k) - prev) * p_omega;
                prev = ladder.value(k);
            }
            assert_eq!(sol.tv.to_bits(), oracle_tv.to_bits(), "tv equality trial {trial}");
        }
    }

    #[test]
    fn level_sets_are_superminimizing_in_interior_windows() {
        let (d, g, psi, ladder) = two_valued_instance(1.0, 0.1);
        let s = make_stencil(8).unwrap();
        let sol = solve(&d, &g, &psi, &s, &ladder, 1).unwrap();
        let top = sol.levels.last().unwrap();
        let mut rng = SplitMix64::new(5);
        let interior: Vec<usize> = d.interior_nodes().collect();
        let mut checked = 0;
        for _ in 0..400 {
            let anchor = interior[rng.next_usize(interior.len())];
            let mut window = Vec::new();
            for dx in 0..4i32 {
                for dy in 0..5i32 {
                    if let Some(q) = d.offset(anchor, dx, dy) {
                        // Stay off the ring: trace nodes are constrained.
                        if d.label(q) == crate::grid::NodeLabel::Interior {
                            window.push(q);
                        }
                    }
                }
            }
            if window.len() < 20 {
                continue;
            }
            let v = minimality_oracle(&d, &top.e_t, &window, MinimalityMode::Super, &s).unwrap();
            assert!(v.holds(), "superminimality failed in window at {anchor}");
            checked += 1;
            if checked >= 40 {
                break;
            }
        }
        assert!(checked >= 20, "too few usable windows");
    }

    #[test]
    fn determinism_across_thread_counts() {
        let (d, g, psi, ladder) = two_valued_instance(1.0, 0.125);
        let s = make_stencil(8).unwrap();
        let sol1 = solve(&d, &g, &psi, &s, &ladder, 1).unwrap();
        let sol4 = solve(&d, &g, &psi, &s, &ladder, 4).unwrap();
        for i in d.omega_nodes() {
            assert_eq!(sol1.u.value(i).to_bits(), sol4.u.value(i).to_bits());
        }
        assert_eq!(sol1.tv.to_bits(), sol4.tv.to_bits());
        for (a, b) in sol1.levels.iter().zip(&sol4.levels) {
            assert_eq!(a.e_t, b.e_t);
        }
    }

    #[test]
    fn levels_file_round_trips() {
        let (d, g, psi, ladder) = two_valued_instance(1.0, 0.25);
        let s = make_stencil(4).unwrap();
        let sol = solve(&d, &g, &psi, &s, &ladder, 1).unwrap();
        let mut buf = Vec::new();
        write_levels(&sol, &d, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("LGOBV1\n"));
        let (w, h, spacing, levels) = read_levels(&mut buf.as_slice()).unwrap();
        assert_eq!((w, h), (d.width(), d.height()));
        assert_eq!(spacing, d.spacing());
        assert_eq!(levels.len(), sol.levels.len());
        for (k, (t, v, bits)) in levels.iter().enumerate() {
            assert_eq!(*t, sol.levels[k].t);
            assert_eq!(*v, sol.levels[k].value);
            for i in 0..d.len() {
                assert_eq!(bits[i], sol.levels[k].a_t.contains(i));
            }
        }
    }
}
