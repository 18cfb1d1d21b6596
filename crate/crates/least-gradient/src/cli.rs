//! Problem-spec ingestion, orchestration, and artifact emission behind
//! the `lgob` binary.
//!
//! A run is a JSON spec plus optional flag overrides (flag beats file
//! beats default). Artifacts are deterministic for a fixed spec and
//! seed: worker count (`LG_THREADS`) never changes a byte. Wall-clock
//! timings go to stderr only.

use crate::diagnostics::{
    barrier_sweep, coarea_ledger, contact_sweep, density_lower_bound, holder_exponent,
    holder_rows, sample_boundary_pairs, HolderFit,
};
use crate::fields::{boundary_field, obstacle_field, BoundaryData, ObstacleData};
use crate::foam::{foamy_construct, FoamError, Rect};
use crate::grid::{
    pixelset_to_pgm, DomainSpec, GridDomain, Region, ScalarField,
};
use crate::oracle::enumerate_level;
use crate::perimeter::{make_stencil, perimeter, PerimeterRegion, Stencil};
use crate::report::{
    validate_report, BarrierRow, BoundarySection, CoareaSection, ContactSection,
    DensityProbeRow, DensitySection, GridMeta, HolderSection, LevelRow, Meta, NestingSection,
    ObstacleSection, SolveReport, Timings, Tolerances,
};
use crate::rng::SplitMix64;
use crate::solver::{
    inner_boundary, make_ladder, solve, write_levels, LadderMode, LevelLadder, Solution,
    SolveError,
};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_NESTING: i32 = 2;
pub const EXIT_SPEC: i32 = 3;
pub const EXIT_FOAM_INFEASIBLE: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Unusable spec, missing files, or inadmissible data.
    Spec(String),
    /// The solver reported a nesting violation.
    Nesting(String),
    /// The foam construction cannot fit the region.
    FoamInfeasible(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) => EXIT_SPEC,
            CliError::Nesting(_) => EXIT_NESTING,
            CliError::FoamInfeasible(_) => EXIT_FOAM_INFEASIBLE,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Spec(m) => write!(f, "spec error: {m}"),
            CliError::Nesting(m) => write!(f, "nesting violation: {m}"),
            CliError::FoamInfeasible(m) => write!(f, "foam infeasible: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn spec_err(e: impl fmt::Display) -> CliError {
    CliError::Spec(e.to_string())
}

// ---------------------------------------------------------------------
// Spec file shapes
// ---------------------------------------------------------------------

#[derive(Deserialize, Serialize, Clone, Debug)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpecJson {
    Disc { radius: f64 },
    Rectangle { width: f64, height: f64 },
    Mask { path: String },
}

#[derive(Deserialize, Serialize, Clone, Debug)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BoundarySpecJson {
    Constant { value: f64 },
    Step { theta0: f64, low: f64, high: f64 },
    Holder { alpha: f64 },
    Sectors { count: u32, #[serde(default)] values: Vec<f64> },
    Csv { path: String },
}

#[derive(Deserialize, Serialize, Clone, Debug)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObstacleSpecJson {
    None,
    Cone { apex: [f64; 2], height: f64, slope: f64 },
    Bumps { count: u32 },
    Csv { path: String },
}

#[derive(Deserialize, Serialize, Clone, Debug)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum LadderSpecJson {
    Quantized,
    Uniform { m: usize },
}

#[derive(Deserialize, Serialize, Clone, Debug)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsToggles {
    pub coarea: bool,
    pub holder: bool,
    pub barriers: bool,
    pub contact: bool,
    pub density: bool,
}

impl Default for DiagnosticsToggles {
    fn default() -> Self {
        DiagnosticsToggles {
            coarea: true,
            holder: true,
            barriers: false,
            contact: false,
            density: false,
        }
    }
}

fn default_collar() -> usize {
    2
}
fn default_connected() -> bool {
    true
}
fn default_stencil() -> usize {
    16
}
fn default_ladder() -> LadderSpecJson {
    LadderSpecJson::Quantized
}
fn default_output() -> String {
    "out".into()
}

#[derive(Deserialize, Serialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub domain: DomainSpecJson,
    pub h: f64,
    #[serde(default = "default_collar")]
    pub collar_width: usize,
    #[serde(default = "default_connected")]
    pub connected: bool,
    pub boundary: BoundarySpecJson,
    pub obstacle: ObstacleSpecJson,
    #[serde(default = "default_stencil")]
    pub stencil: usize,
    #[serde(default = "default_ladder")]
    pub ladder: LadderSpecJson,
    #[serde(default)]
    pub diagnostics: DiagnosticsToggles,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dimacs_dump: bool,
}

#[derive(Deserialize, Serialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct FoamSpec {
    #[serde(default = "Rect::unit", with = "rect_array")]
    pub region: Rect,
    pub epsilon: f64,
    pub stages: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default = "default_check_windows")]
    pub check_windows: usize,
}

fn default_check_windows() -> usize {
    200
}

mod rect_array {
    use super::Rect;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(r: &Rect, s: S) -> Result<S::Ok, S::Error> {
        [r.x0, r.y0, r.x1, r.y1].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rect, D::Error> {
        let v = <[f64; 4]>::deserialize(d)?;
        Ok(Rect { x0: v[0], y0: v[1], x1: v[2], y1: v[3] })
    }
}

/// Flag overrides; flag beats file beats default.
#[derive(Default, Clone, Debug)]
pub struct Overrides {
    pub levels: Option<usize>,
    pub stencil: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Worker cap from the environment, defaulting to the machine width.
pub fn threads_from_env() -> usize {
    match std::env::var("LG_THREADS") {
        Ok(v) => v.trim().parse::<usize>().unwrap_or(1).max(1),
        Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    }
}

struct BuiltProblem {
    domain: GridDomain,
    g: ScalarField,
    psi: ScalarField,
    stencil: Stencil,
    ladder: LevelLadder,
    ladder_mode_name: String,
    seed: u64,
    out_dir: PathBuf,
    spec: ProblemSpec,
}

fn read_spec(path: &Path) -> Result<ProblemSpec, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Spec(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Spec(format!("cannot parse {}: {e}", path.display())))
}

fn build_problem(path: &Path, ov: &Overrides) -> Result<BuiltProblem, CliError> {
    let mut spec = read_spec(path)?;
    if let Some(s) = ov.stencil {
        spec.stencil = s;
    }
    if let Some(m) = ov.levels {
        spec.ladder = LadderSpecJson::Uniform { m };
    }
    if let Some(s) = ov.seed {
        spec.seed = s;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &str| -> PathBuf {
        let pb = PathBuf::from(p);
        if pb.is_absolute() {
            pb
        } else {
            base.join(pb)
        }
    };

    let domain_spec = match &spec.domain {
        DomainSpecJson::Disc { radius } => DomainSpec::Disc { radius: *radius },
        DomainSpecJson::Rectangle { width, height } => {
            DomainSpec::Rectangle { width: *width, height: *height }
        }
        DomainSpecJson::Mask { path } => {
            let file = fs::File::open(resolve(path))
                .map_err(|e| CliError::Spec(format!("mask file {path}: {e}")))?;
            GridDomain::mask_from_pgm(&mut std::io::BufReader::new(file)).map_err(spec_err)?
        }
    };
    let domain = GridDomain::build(&domain_spec, spec.h, spec.collar_width, spec.connected)
        .map_err(spec_err)?;

    let g = match &spec.boundary {
        BoundarySpecJson::Constant { value } => {
            boundary_field(&domain, &BoundaryData::Constant { value: *value })
        }
        BoundarySpecJson::Step { theta0, low, high } => boundary_field(
            &domain,
            &BoundaryData::Step { theta0: *theta0, low: *low, high: *high },
        ),
        BoundarySpecJson::Holder { alpha } => {
            boundary_field(&domain, &BoundaryData::Holder { alpha: *alpha, seed: spec.seed })
        }
        BoundarySpecJson::Sectors { count, values } => boundary_field(
            &domain,
            &BoundaryData::Sectors { seed: spec.seed, count: *count, values: values.clone() },
        ),
        BoundarySpecJson::Csv { path } => {
            let file = fs::File::open(resolve(path))
                .map_err(|e| CliError::Spec(format!("boundary csv {path}: {e}")))?;
            ScalarField::from_csv(&domain, Region::Ring, &mut std::io::BufReader::new(file))
                .map_err(spec_err)?
        }
    };

    let psi = match &spec.obstacle {
        ObstacleSpecJson::None => obstacle_field(&domain, &ObstacleData::None, &g),
        ObstacleSpecJson::Cone { apex, height, slope } => obstacle_field(
            &domain,
            &ObstacleData::Cone { apex: (apex[0], apex[1]), height: *height, slope: *slope },
            &g,
        ),
        ObstacleSpecJson::Bumps { count } => {
            obstacle_field(&domain, &ObstacleData::Bumps { seed: spec.seed, count: *count }, &g)
        }
        ObstacleSpecJson::Csv { path } => {
            let file = fs::File::open(resolve(path))
                .map_err(|e| CliError::Spec(format!("obstacle csv {path}: {e}")))?;
            ScalarField::from_csv(&domain, Region::Omega, &mut std::io::BufReader::new(file))
                .map_err(spec_err)?
        }
    };

    let stencil = make_stencil(spec.stencil).map_err(spec_err)?;
    let (mode, ladder_mode_name) = match &spec.ladder {
        LadderSpecJson::Quantized => (LadderMode::Quantized, "quantized".to_string()),
        LadderSpecJson::Uniform { m } => (LadderMode::Uniform(*m), format!("uniform({m})")),
    };
    let ladder = make_ladder(&g, &psi, mode).map_err(spec_err)?;

    let out_dir = ov.out.clone().unwrap_or_else(|| PathBuf::from(&spec.output));
    Ok(BuiltProblem {
        domain,
        g,
        psi,
        stencil,
        ladder,
        ladder_mode_name,
        seed: spec.seed,
        out_dir,
        spec,
    })
}

fn map_solve_err(e: SolveError) -> CliError {
    match e {
        SolveError::Nesting { .. } => CliError::Nesting(e.to_string()),
        SolveError::Io(io) => CliError::Internal(io.to_string()),
        other => CliError::Spec(other.to_string()),
    }
}

/// Solve a spec and write `u.csv`, `levels.lgobv`, `holder.tsv` and
/// `report.json` into the output directory.
pub fn run_solve(path: &Path, ov: &Overrides) -> Result<PathBuf, CliError> {
    let wall = std::time::Instant::now();
    let p = build_problem(path, ov)?;
    let threads = threads_from_env();
    let sol =
        solve(&p.domain, &p.g, &p.psi, &p.stencil, &p.ladder, threads).map_err(map_solve_err)?;
    let solve_elapsed = wall.elapsed();

    fs::create_dir_all(&p.out_dir)
        .map_err(|e| CliError::Internal(format!("create {}: {e}", p.out_dir.display())))?;
    let io_err = |e: std::io::Error| CliError::Internal(e.to_string());

    let mut u_csv = BufWriter::new(fs::File::create(p.out_dir.join("u.csv")).map_err(io_err)?);
    sol.u.to_csv(&mut u_csv).map_err(spec_err)?;
    u_csv.flush().map_err(io_err)?;

    let mut lv =
        BufWriter::new(fs::File::create(p.out_dir.join("levels.lgobv")).map_err(io_err)?);
    write_levels(&sol, &p.domain, &mut lv).map_err(map_solve_err)?;
    lv.flush().map_err(io_err)?;

    // Boundary-anchored pairs back both the TSV and the fit.
    let pairs = sample_boundary_pairs(&p.domain, 300, p.seed ^ 0x48_4F_4C);
    let mut tsv =
        BufWriter::new(fs::File::create(p.out_dir.join("holder.tsv")).map_err(io_err)?);
    writeln!(tsv, "# distance\tabs_du").map_err(io_err)?;
    for (dist, du) in holder_rows(&p.domain, &sol.u, &pairs) {
        writeln!(tsv, "{dist}\t{du}").map_err(io_err)?;
    }
    tsv.flush().map_err(io_err)?;

    let report = build_report(&p, &sol, &pairs)?;
    validate_report(&report).map_err(|e| CliError::Internal(format!("report schema: {e}")))?;
    fs::write(p.out_dir.join("report.json"), report.to_json()).map_err(io_err)?;

    if p.spec.dimacs_dump {
        let top = sol.levels.last().expect("ladder nonempty");
        let g_ext = crate::grid::extend_boundary_data(&p.domain, &p.g).map_err(spec_err)?;
        let (fin, fout) = crate::solver::level_constraints(&p.domain, &g_ext, &p.psi, top.t)
            .map_err(map_solve_err)?;
        let net = crate::mincut::build_network(&p.domain, &p.stencil, &fin, &fout)
            .map_err(spec_err)?;
        let mut dim =
            BufWriter::new(fs::File::create(p.out_dir.join("network.dimacs")).map_err(io_err)?);
        net.write_dimacs(&mut dim).map_err(io_err)?;
        dim.flush().map_err(io_err)?;
    }

    eprintln!(
        "solved {} levels in {:.3}s (writing took {:.3}s more)",
        sol.levels.len(),
        solve_elapsed.as_secs_f64(),
        wall.elapsed().as_secs_f64() - solve_elapsed.as_secs_f64()
    );
    Ok(p.out_dir.clone())
}

fn build_report(
    p: &BuiltProblem,
    sol: &Solution,
    pairs: &[(usize, usize)],
) -> Result<SolveReport, CliError> {
    let domain = &p.domain;
    let levels: Vec<LevelRow> = sol
        .levels
        .iter()
        .map(|l| LevelRow {
            t: l.t,
            value: l.value,
            p_omega: l.perimeter.interior(),
            p_crossing: l.perimeter.crossing(),
            p_total: l.perimeter.total(),
            volume: l.e_t.volume(),
        })
        .collect();

    let ledger = coarea_ledger(domain, sol, &p.stencil);

    let mut max_mismatch = 0f64;
    for i in domain.ring_nodes() {
        max_mismatch = max_mismatch.max((sol.u.value(i) - p.g.value(i)).abs());
    }
    let mut min_slack = f64::INFINITY;
    for i in domain.omega_nodes() {
        if p.psi.defined(i) {
            min_slack = min_slack.min(sol.u.value(i) - p.psi.value(i));
        }
    }
    if !min_slack.is_finite() {
        min_slack = 0.0;
    }

    let undefined_holder = HolderSection {
        defined: false,
        beta: None,
        c: None,
        residual: None,
        pairs_used: 0,
    };
    let holder = if p.spec.diagnostics.holder {
        // Domains too small to span the sampling range get an undefined
        // fit rather than a failed run.
        Some(match holder_exponent(domain, &sol.u, pairs) {
            Err(crate::diagnostics::DiagnosticsError::TooFewPairs { .. }) => undefined_holder,
            Err(e) => return Err(spec_err(e)),
            Ok(HolderFit::Undefined) => undefined_holder,
            Ok(HolderFit::Fit { beta, c, residual, pairs_used }) => HolderSection {
                defined: true,
                beta: Some(beta),
                c: Some(c),
                residual: Some(residual),
                pairs_used,
            },
        })
    } else {
        None
    };

    let barriers = if p.spec.diagnostics.barriers {
        let ring: Vec<usize> = domain.ring_nodes().collect();
        let step = (ring.len() / 4).max(1);
        let delta = (domain.spacing() * 4.0).max(0.125);
        let lambda = 2.5 * delta;
        let kappas: Vec<f64> = (0..16).map(|k| 2f64.powi(k)).collect();
        let mut rows = Vec::new();
        for &x0 in ring.iter().step_by(step).take(4) {
            let found = barrier_sweep(
                domain, &p.g, &p.psi, &sol.u, x0, delta, lambda, 1.0, &kappas,
            )
            .map_err(spec_err)?;
            let (x, y) = domain.position(x0);
            match found {
                Some((kappa, eval)) => rows.push(BarrierRow {
                    x0: [x, y],
                    kappa: Some(kappa),
                    nodes_checked: eval.nodes_checked,
                    violations: eval.violations,
                    ok: true,
                }),
                None => rows.push(BarrierRow {
                    x0: [x, y],
                    kappa: None,
                    nodes_checked: 0,
                    violations: 0,
                    ok: false,
                }),
            }
        }
        Some(rows)
    } else {
        None
    };

    let contact = if p.spec.diagnostics.contact {
        let sweep = contact_sweep(domain, &sol.levels, &p.stencil, 200, p.seed ^ 0xC0_17_AC)
            .map_err(spec_err)?;
        Some(ContactSection {
            windows: sweep.windows,
            accepted: sweep.accepted,
            disjoint: sweep.disjoint,
            locally_equal: sweep.locally_equal,
            violations: sweep.violations,
            ok: sweep.violations == 0,
        })
    } else {
        None
    };

    let density = if p.spec.diagnostics.density {
        let delta2 = crate::foam::delta_2();
        let mut probes = Vec::new();
        // Probe boundary nodes of the highest nonempty level set.
        if let Some(top) = sol.levels.iter().rev().find(|l| !l.a_t.is_empty()) {
            let boundary = inner_boundary(domain, &top.a_t);
            let r = 6.0 * domain.spacing();
            let mut rng = SplitMix64::new(p.seed ^ 0xDE_25);
            let candidates: Vec<usize> = boundary.iter().collect();
            let mut taken = 0;
            let mut tries = 0;
            while taken < 4 && tries < 64 && !candidates.is_empty() {
                tries += 1;
                let x = candidates[rng.next_usize(candidates.len())];
                match density_lower_bound(domain, &top.e_t, x, r, delta2, &p.stencil) {
                    Ok(b) => {
                        probes.push(DensityProbeRow {
                            node: x,
                            radius: r,
                            ratio: b.ratio,
                            bound: b.bound,
                            ok: b.ok,
                        });
                        taken += 1;
                    }
                    Err(_) => continue, // precondition unmet at this probe
                }
            }
        }
        let ok = probes.iter().all(|p| p.ok);
        Some(DensitySection { delta2, probes, ok })
    } else {
        None
    };

    Ok(SolveReport {
        meta: Meta {
            tool: "lgob".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: p.seed,
            stencil_order: p.stencil.order(),
            ladder_mode: p.ladder_mode_name.clone(),
            grid: GridMeta {
                width: domain.width(),
                height: domain.height(),
                spacing: domain.spacing(),
                collar_width: domain.collar_width(),
            },
            tolerances: Tolerances::default(),
            timings: Timings {
                level_solves: sol.levels.len(),
                maxflow_augmentations: sol.levels.iter().map(|l| l.augmentations).sum(),
                unit: "deterministic work counters; wall-clock goes to stderr".into(),
            },
        },
        levels,
        nesting: NestingSection {
            ok: true,
            pairs_checked: sol.levels.len().saturating_sub(1),
            touching: sol.touching.clone(),
        },
        coarea: CoareaSection {
            ledger_sum: ledger.ledger_sum,
            edgewise_tv: ledger.edgewise,
            rel_err: ledger.rel_err,
            ok: ledger.ok,
        },
        boundary: BoundarySection { max_abs_mismatch: max_mismatch, exact: max_mismatch == 0.0 },
        obstacle: ObstacleSection { min_slack, satisfied: min_slack >= 0.0 },
        holder,
        barriers,
        contact,
        density,
    })
}

#[derive(Serialize, Debug)]
struct OracleLevelRow {
    t: f64,
    free_nodes: usize,
    solver_units: u64,
    oracle_units: u64,
    match_units: bool,
    match_e_max: bool,
    match_e_min: bool,
    n_minimizers: u64,
}

#[derive(Serialize, Debug)]
struct OracleReport {
    levels: Vec<OracleLevelRow>,
    tv_solver: f64,
    tv_oracle: f64,
    tv_match: bool,
    all_match: bool,
    corrupted_hook: bool,
}

/// Cross-check a tiny instance against full enumeration. Returns whether
/// everything matched; artifacts go to `oracle_report.json`.
pub fn run_oracle(path: &Path, ov: &Overrides) -> Result<bool, CliError> {
    let p = build_problem(path, ov)?;
    // Free nodes are the interior (collar and ring are pinned).
    let interior_count = p.domain.interior_nodes().count();
    if interior_count > crate::perimeter::MAX_ORACLE_WINDOW {
        return Err(CliError::Spec(format!(
            "grid too large for enumeration: {interior_count} interior nodes (max {})",
            crate::perimeter::MAX_ORACLE_WINDOW
        )));
    }
    let sol = solve(&p.domain, &p.g, &p.psi, &p.stencil, &p.ladder, threads_from_env())
        .map_err(map_solve_err)?;

    // Test-only fault injection: corrupt the solver output so the
    // comparison below must flag a mismatch.
    let corrupt = std::env::var("LGOB_TEST_CORRUPT").is_ok_and(|v| v == "1");

    let g_ext = crate::grid::extend_boundary_data(&p.domain, &p.g).map_err(spec_err)?;
    let mut rows = Vec::new();
    let mut tv_oracle = 0f64;
    let mut prev = sol.ladder.floor();
    let mut all = true;
    for (k, lvl) in sol.levels.iter().enumerate() {
        let (fin, fout) = crate::solver::level_constraints(&p.domain, &g_ext, &p.psi, lvl.t)
            .map_err(map_solve_err)?;
        let oracle =
            enumerate_level(&p.domain, &p.stencil, &fin, &fout, 0).map_err(spec_err)?;
        let mut net = crate::mincut::build_network(&p.domain, &p.stencil, &fin, &fout)
            .map_err(spec_err)?;
        net.max_flow();
        let cut = net.extract_cuts(&p.domain, &p.stencil).map_err(spec_err)?;

        let mut solver_e_max = lvl.e_t.clone();
        if corrupt && k == sol.levels.len() - 1 {
            if let Some(node) = p.domain.interior_nodes().next() {
                solver_e_max.set(node, !solver_e_max.contains(node));
            }
        }

        let free = net.free_count();
        let match_units = lvl.perimeter.total_units() == oracle.min_units;
        let match_e_max = solver_e_max == oracle.e_max;
        let match_e_min = cut.e_min == oracle.e_min;
        all &= match_units && match_e_max && match_e_min;
        let p_omega = perimeter(&p.domain, &oracle.e_max, PerimeterRegion::Omega, &p.stencil)
            .map_err(spec_err)?
            .interior();
        tv_oracle += (lvl.value - prev) * p_omega;
        prev = lvl.value;
        rows.push(OracleLevelRow {
            t: lvl.t,
            free_nodes: free,
            solver_units: lvl.perimeter.total_units(),
            oracle_units: oracle.min_units,
            match_units,
            match_e_max,
            match_e_min,
            n_minimizers: oracle.n_minimizers,
        });
    }
    let tv_match = sol.tv.to_bits() == tv_oracle.to_bits();
    all &= tv_match;

    fs::create_dir_all(&p.out_dir).map_err(|e| CliError::Internal(e.to_string()))?;
    let report = OracleReport {
        levels: rows,
        tv_solver: sol.tv,
        tv_oracle,
        tv_match,
        all_match: all,
        corrupted_hook: corrupt,
    };
    fs::write(
        p.out_dir.join("oracle_report.json"),
        serde_json::to_string_pretty(&report).expect("serializes"),
    )
    .map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(all)
}

#[derive(Serialize, Debug)]
struct FoamBallRow {
    center: [f64; 2],
    radius: f64,
    delta_after: f64,
    perimeter: f64,
}

#[derive(Serialize, Debug)]
struct FoamReport {
    stages: usize,
    balls: usize,
    epsilon: f64,
    total_area: f64,
    area_bound: f64,
    area_ok: bool,
    margins_positive: bool,
    tail_bounds_ok: bool,
    delta2: f64,
    windows_tested: usize,
    windows_held: usize,
    super_ok: bool,
    tubes_all_increase: bool,
    /// Fraction of region raster nodes on the set boundary.
    boundary_fraction: f64,
    /// Share of the set's own raster nodes that are boundary.
    boundary_share_of_set: f64,
}

fn read_foam_spec(path: &Path) -> Result<FoamSpec, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Spec(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Spec(format!("cannot parse {}: {e}", path.display())))
}

/// Run the foamy construction: stage JSON, raster PGM, verdict report.
pub fn run_foam(path: &Path, ov: &Overrides) -> Result<PathBuf, CliError> {
    let mut spec = read_foam_spec(path)?;
    if let Some(s) = ov.seed {
        spec.seed = s;
    }
    let out_dir = ov.out.clone().unwrap_or_else(|| PathBuf::from(&spec.output));

    let stage = foamy_construct(&spec.region, spec.epsilon, spec.stages, spec.seed).map_err(
        |e| match e {
            FoamError::Infeasible { .. } => CliError::FoamInfeasible(e.to_string()),
            other => CliError::Spec(other.to_string()),
        },
    )?;

    fs::create_dir_all(&out_dir).map_err(|e| CliError::Internal(e.to_string()))?;
    let io_err = |e: std::io::Error| CliError::Internal(e.to_string());

    let ball_rows: Vec<FoamBallRow> = stage
        .records
        .iter()
        .filter_map(|r| {
            r.ball.map(|b| FoamBallRow {
                center: [b.center.0, b.center.1],
                radius: b.radius,
                delta_after: r.delta_after,
                perimeter: b.perimeter(),
            })
        })
        .collect();
    fs::write(
        out_dir.join("stage.json"),
        serde_json::to_string_pretty(&ball_rows).expect("serializes"),
    )
    .map_err(io_err)?;

    let (raster_domain, raster) = crate::foam::rasterize_stage(&stage, 256, 8);
    let mut pgm = BufWriter::new(fs::File::create(out_dir.join("raster.pgm")).map_err(io_err)?);
    pixelset_to_pgm(&raster_domain, &raster, &mut pgm).map_err(spec_err)?;
    pgm.flush().map_err(io_err)?;

    let check = crate::foam::foam_superminimality_check(&stage, spec.check_windows, spec.seed)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let (boundary_fraction, boundary_share_of_set) = crate::foam::boundary_share(&stage, 256);
    let report = FoamReport {
        stages: stage.index,
        balls: stage.balls().len(),
        epsilon: stage.epsilon,
        total_area: stage.total_area(),
        area_bound: std::f64::consts::PI * stage.epsilon * stage.epsilon,
        area_ok: stage.total_area() < std::f64::consts::PI * stage.epsilon * stage.epsilon,
        margins_positive: stage.margins_positive(),
        tail_bounds_ok: stage.tail_bounds_ok(),
        delta2: crate::foam::delta_2(),
        windows_tested: check.windows_tested,
        windows_held: check.windows_held,
        super_ok: check.all_super_hold,
        tubes_all_increase: check.tubes_all_increase,
        boundary_fraction,
        boundary_share_of_set,
    };
    fs::write(
        out_dir.join("foam_report.json"),
        serde_json::to_string_pretty(&report).expect("serializes"),
    )
    .map_err(io_err)?;
    Ok(out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trips_and_defaults_apply() {
        let text = r#"{
            "domain": {"kind": "disc", "radius": 1.0},
            "h": 0.25,
            "boundary": {"kind": "step", "theta0": -1.5707963, "low": 0.0, "high": 1.0},
            "obstacle": {"kind": "none"}
        }"#;
        let spec: ProblemSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.collar_width, 2);
        assert_eq!(spec.stencil, 16);
        assert!(matches!(spec.ladder, LadderSpecJson::Quantized));
        assert!(spec.diagnostics.coarea && spec.diagnostics.holder);
        assert!(!spec.diagnostics.contact);
        assert_eq!(spec.output, "out");
        assert_eq!(spec.seed, 0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
            "domain": {"kind": "disc", "radius": 1.0},
            "h": 0.25,
            "boundary": {"kind": "constant", "value": 1.0},
            "obstacle": {"kind": "none"},
            "typo_field": 1
        }"#;
        assert!(serde_json::from_str::<ProblemSpec>(text).is_err());
    }

    #[test]
    fn foam_spec_parses_region_array() {
        let text = r#"{"region": [0.0, 0.0, 2.0, 1.0], "epsilon": 0.1, "stages": 5}"#;
        let spec: FoamSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.region.x1, 2.0);
        assert_eq!(spec.check_windows, 200);
    }
}
