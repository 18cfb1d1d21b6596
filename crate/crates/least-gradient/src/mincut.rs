//! Exact min-cut solver for per-level constrained perimeter minimization.
//!
//! A level problem fixes membership on part of the grid (collar pattern
//! and obstacle superlevel) and asks for the cheapest cut separating the
//! forced-in nodes from the forced-out ones. Forced nodes are contracted
//! into the terminals: an edge from a forced-in node to a free node
//! becomes source capacity, symmetrically for forced-out; edges between
//! oppositely forced nodes are a pre-paid constant kept in
//! `offset_units` and excluded from the network. Any max flow then gives
//! two canonical minimum cuts: the source-reachable side (minimal source
//! side) and the complement of the sink-reaching side, which is the
//! volume-maximal minimizer by the lattice structure of minimum cuts.
//!
//! The solve is deterministic: arcs are laid out in node-index and
//! family order and the augmenting search visits them in that order, so
//! repeated solves give bit-identical cuts.

use crate::grid::{GridDomain, PixelSet};
use crate::perimeter::{perimeter, PerimeterRegion, PerimeterValue, Stencil};
use std::fmt;
use std::io::Write;

const FREE_NONE: i32 = -1;
const FORCED_IN: i32 = -2;
const FORCED_OUT: i32 = -3;

#[derive(Debug)]
pub enum MincutError {
    OverlappingConstraints(usize),
    DomainMismatch,
    CollarThinnerThanStencil { collar: usize, radius: usize },
    NotSolved,
}

impl fmt::Display for MincutError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MincutError::OverlappingConstraints(i) => {
                write!(f, "node {i} is both forced in and forced out")
            }
            MincutError::DomainMismatch => write!(f, "constraint sets do not match the domain"),
            MincutError::CollarThinnerThanStencil { collar, radius } => write!(
                f,
                "collar width {collar} is thinner than the stencil radius {radius}"
            ),
            MincutError::NotSolved => write!(f, "cuts requested before max_flow"),
        }
    }
}

impl std::error::Error for MincutError {}

/// Grid flow network with contracted terminals.
pub struct FlowNetwork {
    free_ids: Vec<u32>,
    free_index: Vec<i32>,
    adj_start: Vec<u32>,
    arc_head: Vec<u32>,
    arc_rev: Vec<u32>,
    arc_cap: Vec<u64>,
    src_cap: Vec<u64>,
    sink_cap: Vec<u64>,
    offset_units: u64,
    flow_units: u64,
    augmentations: u64,
    solved: bool,
    forced_in: PixelSet,
    // level-search scratch
    level: Vec<u32>,
    ptr: Vec<u32>,
    queue: Vec<u32>,
    t_level: u32,
}

/// Both canonical minimum cuts of a solved network.
#[derive(Clone, Debug)]
pub struct CutResult {
    /// Max-flow value = cut capacity of the network, in weight units.
    pub flow_units: u64,
    /// Minimal source side: forced-in plus nodes residual-reachable from
    /// the source. The intersection of all minimum cuts.
    pub e_min: PixelSet,
    /// Maximal source side: complement of the nodes that reach the sink
    /// in the residual graph. The union of all minimum cuts, hence the
    /// volume-maximal minimizer.
    pub e_max: PixelSet,
    /// Perimeter of `e_max` over the whole grid.
    pub perimeter: PerimeterValue,
    /// Pre-paid weight of cut edges between oppositely forced nodes.
    pub offset_units: u64,
}

/// Encode a constrained perimeter minimization as an s-t cut problem.
pub fn build_network(
    domain: &GridDomain,
    stencil: &Stencil,
    forced_in: &PixelSet,
    forced_out: &PixelSet,
) -> Result<FlowNetwork, MincutError> {
    if forced_in.len() != domain.len() || forced_out.len() != domain.len() {
        return Err(MincutError::DomainMismatch);
    }
    if stencil.radius() > domain.collar_width() {
        return Err(MincutError::CollarThinnerThanStencil {
            collar: domain.collar_width(),
            radius: stencil.radius(),
        });
    }
    if !forced_in.is_disjoint(forced_out) {
        let clash = forced_in
            .iter()
            .find(|&i| forced_out.contains(i))
            .expect("non-disjoint sets share a node");
        return Err(MincutError::OverlappingConstraints(clash));
    }

    let mut free_index = vec![FREE_NONE; domain.len()];
    let mut free_ids = Vec::new();
    for i in domain.nodes() {
        if forced_in.contains(i) {
            free_index[i] = FORCED_IN;
        } else if forced_out.contains(i) {
            free_index[i] = FORCED_OUT;
        } else {
            free_index[i] = free_ids.len() as i32;
            free_ids.push(i as u32);
        }
    }
    let n = free_ids.len();

    // Degree count, then CSR fill; every unordered free-free edge becomes
    // one arc in each direction, each the other's reverse.
    let mut degree = vec![0u32; n];
    let mut offset_units = 0u64;
    let mut src_cap = vec![0u64; n];
    let mut sink_cap = vec![0u64; n];
    for (fi, &gid) in free_ids.iter().enumerate() {
        for ((dx, dy), units) in stencil.families() {
            for (sx, sy) in [(dx, dy), (-dx, -dy)] {
                if let Some(q) = domain.offset(gid as usize, sx, sy) {
                    match free_index[q] {
                        FORCED_IN => src_cap[fi] += units,
                        FORCED_OUT => sink_cap[fi] += units,
                        _ => degree[fi] += 1,
                    }
                }
            }
        }
    }
    // Pre-paid cuts between oppositely forced nodes (counted once).
    for p in domain.nodes() {
        if free_index[p] != FORCED_IN {
            continue;
        }
        for ((dx, dy), units) in stencil.families() {
            for (sx, sy) in [(dx, dy), (-dx, -dy)] {
                if let Some(q) = domain.offset(p, sx, sy) {
                    if free_index[q] == FORCED_OUT {
                        offset_units += units;
                    }
                }
            }
        }
    }

    let mut adj_start = vec![0u32; n + 1];
    for i in 0..n {
        adj_start[i + 1] = adj_start[i] + degree[i];
    }
    let m = adj_start[n] as usize;
    let mut arc_head = vec![0u32; m];
    let mut arc_rev = vec![0u32; m];
    let mut arc_cap = vec![0u64; m];
    let mut cursor: Vec<u32> = adj_start[..n].to_vec();
    for (fi, &gid) in free_ids.iter().enumerate() {
        for ((dx, dy), units) in stencil.families() {
            // Canonical direction only, so each pair is filled exactly once.
            if let Some(q) = domain.offset(gid as usize, dx, dy) {
                let qi = free_index[q];
                if qi >= 0 {
                    let a = cursor[fi];
                    cursor[fi] += 1;
                    let b = cursor[qi as usize];
                    cursor[qi as usize] += 1;
                    arc_head[a as usize] = qi as u32;
                    arc_head[b as usize] = fi as u32;
                    arc_rev[a as usize] = b;
                    arc_rev[b as usize] = a;
                    arc_cap[a as usize] = units;
                    arc_cap[b as usize] = units;
                }
            }
        }
    }

    // Pre-push flow through nodes that see both terminals.
    let mut flow_units = 0u64;
    for v in 0..n {
        let f = src_cap[v].min(sink_cap[v]);
        if f > 0 {
            src_cap[v] -= f;
            sink_cap[v] -= f;
            flow_units += f;
        }
    }

    Ok(FlowNetwork {
        free_ids,
        free_index,
        adj_start,
        arc_head,
        arc_rev,
        arc_cap,
        src_cap,
        sink_cap,
        offset_units,
        flow_units,
        augmentations: 0,
        solved: false,
        forced_in: forced_in.clone(),
        level: vec![0; n],
        ptr: vec![0; n],
        queue: Vec::with_capacity(n),
        t_level: 0,
    })
}

impl FlowNetwork {
    pub fn free_count(&self) -> usize {
        self.free_ids.len()
    }

    pub fn offset_units(&self) -> u64 {
        self.offset_units
    }

    pub fn augmentations(&self) -> u64 {
        self.augmentations
    }

    /// Compute the exact max flow by shortest augmenting paths over
    /// level graphs. Deterministic: the value and the final residual
    /// graph depend only on the construction order.
    pub fn max_flow(&mut self) -> u64 {
        let n = self.free_count();
        loop {
            if !self.bfs() {
                break;
            }
            self.ptr.iter_mut().for_each(|p| *p = 0);
            for v in 0..n {
                if self.level[v] != 0 {
                    continue;
                }
                while self.src_cap[v] > 0 {
                    let f = self.dfs(v, self.src_cap[v]);
                    if f == 0 {
                        break;
                    }
                    self.src_cap[v] -= f;
                    self.flow_units += f;
                    self.augmentations += 1;
                }
            }
        }
        self.solved = true;
        self.flow_units
    }

    fn bfs(&mut self) -> bool {
        const UNSET: u32 = u32::MAX;
        self.level.iter_mut().for_each(|l| *l = UNSET);
        self.queue.clear();
        let mut t_level = UNSET;
        for v in 0..self.free_count() {
            if self.src_cap[v] > 0 {
                self.level[v] = 0;
                self.queue.push(v as u32);
                if self.sink_cap[v] > 0 {
                    t_level = 1;
                }
            }
        }
        let mut head = 0usize;
        while head < self.queue.len() {
            let u = self.queue[head] as usize;
            head += 1;
            let lu = self.level[u];
            if lu + 1 >= t_level {
                continue;
            }
            for a in self.adj_start[u]..self.adj_start[u + 1] {
                let a = a as usize;
                if self.arc_cap[a] == 0 {
                    continue;
                }
                let v = self.arc_head[a] as usize;
                if self.level[v] == UNSET {
                    self.level[v] = lu + 1;
                    if self.sink_cap[v] > 0 {
                        t_level = t_level.min(lu + 2);
                    }
                    self.queue.push(v as u32);
                }
            }
        }
        self.t_level = t_level;
        t_level != UNSET
    }

    fn dfs(&mut self, u: usize, limit: u64) -> u64 {
        if self.level[u] + 1 == self.t_level && self.sink_cap[u] > 0 {
            let f = limit.min(self.sink_cap[u]);
            self.sink_cap[u] -= f;
            return f;
        }
        while self.ptr[u] < self.adj_start[u + 1] - self.adj_start[u] {
            let a = (self.adj_start[u] + self.ptr[u]) as usize;
            let v = self.arc_head[a] as usize;
            if self.arc_cap[a] > 0 && self.level[v] == self.level[u] + 1 {
                let f = self.dfs(v, limit.min(self.arc_cap[a]));
                if f > 0 {
                    self.arc_cap[a] -= f;
                    self.arc_cap[self.arc_rev[a] as usize] += f;
                    return f;
                }
            }
            self.ptr[u] += 1;
        }
        0
    }

    /// Extract the minimal and maximal minimum cuts from the residual
    /// graph of the computed max flow.
    pub fn extract_cuts(
        &self,
        domain: &GridDomain,
        stencil: &Stencil,
    ) -> Result<CutResult, MincutError> {
        if !self.solved {
            return Err(MincutError::NotSolved);
        }
        let n = self.free_count();

        // Source side: residual-reachable from s.
        let mut reach_s = vec![false; n];
        let mut stack: Vec<u32> = Vec::new();
        for v in 0..n {
            if self.src_cap[v] > 0 {
                reach_s[v] = true;
                stack.push(v as u32);
            }
        }
        while let Some(u) = stack.pop() {
            let u = u as usize;
            for a in self.adj_start[u]..self.adj_start[u + 1] {
                let a = a as usize;
                if self.arc_cap[a] > 0 {
                    let v = self.arc_head[a] as usize;
                    if !reach_s[v] {
                        reach_s[v] = true;
                        stack.push(v as u32);
                    }
                }
            }
        }

        // Sink side: nodes that reach t through residual arcs.
        let mut reach_t = vec![false; n];
        stack.clear();
        for v in 0..n {
            if self.sink_cap[v] > 0 {
                reach_t[v] = true;
                stack.push(v as u32);
            }
        }
        while let Some(w) = stack.pop() {
            let w = w as usize;
            for a in self.adj_start[w]..self.adj_start[w + 1] {
                let a = a as usize;
                // v -> w has residual iff the reverse arc of (w -> v) does.
                if self.arc_cap[self.arc_rev[a] as usize] > 0 {
                    let v = self.arc_head[a] as usize;
                    if !reach_t[v] {
                        reach_t[v] = true;
                        stack.push(v as u32);
                    }
                }
            }
        }

        let mut e_min = self.forced_in.clone();
        let mut e_max = self.forced_in.clone();
        for v in 0..n {
            let gid = self.free_ids[v] as usize;
            if reach_s[v] {
                e_min.insert(gid);
            }
            if !reach_t[v] {
                e_max.insert(gid);
            }
        }
        debug_assert!(e_min.is_subset(&e_max));

        let perim = perimeter(domain, &e_max, PerimeterRegion::Plane, stencil)
            .map_err(|_| MincutError::DomainMismatch)?;
        Ok(CutResult {
            flow_units: self.flow_units,
            e_min,
            e_max,
            perimeter: perim,
            offset_units: self.offset_units,
        })
    }

    /// DIMACS max-flow dump for debugging. Node 1 is the source, node 2
    /// the sink, free node `v` is `v + 3`.
    pub fn write_dimacs(&self, w: &mut impl Write) -> std::io::Result<()> {
        let n = self.free_count();
        let m_terminal: usize = (0..n)
            .map(|v| usize::from(self.src_cap[v] > 0) + usize::from(self.sink_cap[v] > 0))
            .sum();
        writeln!(w, "p max {} {}", n + 2, self.arc_head.len() + m_terminal)?;
        writeln!(w, "n 1 s")?;
        writeln!(w, "n 2 t")?;
        for v in 0..n {
            if self.src_cap[v] > 0 {
                writeln!(w, "a 1 {} {}", v + 3, self.src_cap[v])?;
            }
            if self.sink_cap[v] > 0 {
                writeln!(w, "a {} 2 {}", v + 3, self.sink_cap[v])?;
            }
            for a in self.adj_start[v]..self.adj_start[v + 1] {
                let a = a as usize;
                writeln!(
                    w,
                    "a {} {} {}",
                    v + 3,
                    self.arc_head[a] as usize + 3,
                    self.arc_cap[a]
                )?;
            }
        }
        Ok(())
    }

    /// Forced status of a grid node, for diagnostics.
    pub fn is_forced(&self, grid_node: usize) -> bool {
        self.free_index[grid_node] < FREE_NONE
    }
}
