//! Discrete domains, scalar fields on them, and the per-level constraint
//! sets built from obstacle and extended boundary data.
//!
//! A [`GridDomain`] is a rectangular node lattice with spacing `h`, split
//! into three labels: `Interior` (the open domain), `BoundaryRing`
//! (interior nodes 4-adjacent to the outside — the discrete trace of the
//! boundary), and `Collar` (the fixed exterior band on which extended
//! boundary data lives). The collar is everywhere at least `collar_width`
//! nodes thick, which must dominate the radius of any stencil used, so
//! that membership beyond the grid never influences a cut.

use std::fmt;
use std::io::{BufRead, Write};

/// Classification of a grid node.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NodeLabel {
    /// Inside the domain, not adjacent to the collar.
    Interior,
    /// Interior node with a 4-neighbor in the collar; carries boundary data.
    BoundaryRing,
    /// Outside the closed domain; membership and data are pinned here.
    Collar,
}

/// Where a scalar field is defined.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Region {
    /// Interior plus boundary ring (the closed domain, node-wise).
    Omega,
    /// Boundary ring only.
    Ring,
    /// Collar plus boundary ring (extended boundary data).
    CollarAndRing,
    /// Every node of the grid.
    Everywhere,
}

#[derive(Debug)]
pub enum GridError {
    EmptyInterior,
    BadCollarWidth(usize),
    BadSpacing(f64),
    DisconnectedInterior,
    UndefinedRingValue(usize),
    MaskFormat(String),
    FieldShape { expected: (usize, usize), got: (usize, usize) },
    Io(std::io::Error),
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::EmptyInterior => write!(f, "domain has no interior nodes"),
            GridError::BadCollarWidth(w) => write!(f, "collar width {w} must be >= 1"),
            GridError::BadSpacing(h) => write!(f, "grid spacing {h} must be positive"),
            GridError::DisconnectedInterior => {
                write!(f, "interior is not 4-connected and the connectivity flag is set")
            }
            GridError::UndefinedRingValue(i) => {
                write!(f, "boundary data undefined on ring node {i}")
            }
            GridError::MaskFormat(m) => write!(f, "bad mask file: {m}"),
            GridError::FieldShape { expected, got } => write!(
                f,
                "field shape {}x{} does not match grid {}x{}",
                got.0, got.1, expected.0, expected.1
            ),
            GridError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for GridError {}

impl From<std::io::Error> for GridError {
    fn from(e: std::io::Error) -> Self {
        GridError::Io(e)
    }
}

/// What to build a domain from.
#[derive(Clone, Debug)]
pub enum DomainSpec {
    /// Disc of the given radius, centered on the grid.
    Disc { radius: f64 },
    /// Axis-aligned rectangle of the given physical extent, centered.
    Rectangle { width: f64, height: f64 },
    /// Explicit interior mask (row-major booleans); collar is synthesized.
    Mask { width: usize, height: usize, interior: Vec<bool> },
}

/// Rectangular node lattice with labels and spacing.
#[derive(Clone, Debug)]
pub struct GridDomain {
    width: usize,
    height: usize,
    h: f64,
    collar_width: usize,
    mask: Vec<NodeLabel>,
    /// Physical coordinate of node (0,0); node (x,y) sits at origin + (x,y)*h.
    origin: (f64, f64),
}

impl GridDomain {
    /// Build a domain from a descriptor. `connected` additionally requires
    /// the interior to be a single 4-connected component.
    pub fn build(
        spec: &DomainSpec,
        h: f64,
        collar_width: usize,
        connected: bool,
    ) -> Result<GridDomain, GridError> {
        if !(h > 0.0) {
            return Err(GridError::BadSpacing(h));
        }
        if collar_width < 1 {
            return Err(GridError::BadCollarWidth(collar_width));
        }
        let (iw, ih, inside): (usize, usize, Box<dyn Fn(usize, usize) -> bool>) = match spec {
            DomainSpec::Disc { radius } => {
                let r = *radius;
                // Node count chosen so the disc |x| < r fits symmetrically.
                let n = (2.0 * r / h).ceil() as usize + 1;
                let c = (n as f64 - 1.0) / 2.0;
                (
                    n,
                    n,
                    Box::new(move |x, y| {
                        let dx = (x as f64 - c) * h;
                        let dy = (y as f64 - c) * h;
                        dx * dx + dy * dy < r * r
                    }),
                )
            }
            DomainSpec::Rectangle { width, height } => {
                let nx = (width / h).round() as usize;
                let ny = (height / h).round() as usize;
                (nx.max(1), ny.max(1), Box::new(|_, _| true))
            }
            DomainSpec::Mask { width, height, interior } => {
                if interior.len() != width * height {
                    return Err(GridError::MaskFormat(format!(
                        "mask length {} != {}x{}",
                        interior.len(),
                        width,
                        height
                    )));
                }
                let w = *width;
                let m = interior.clone();
                (w, *height, Box::new(move |x, y| m[y * w + x]))
            }
        };

        let width = iw + 2 * collar_width;
        let height = ih + 2 * collar_width;
        let mut omega = vec![false; width * height];
        let mut n_omega = 0usize;
        for y in 0..ih {
            for x in 0..iw {
                if inside(x, y) {
                    omega[(y + collar_width) * width + (x + collar_width)] = true;
                    n_omega += 1;
                }
            }
        }
        if n_omega == 0 {
            return Err(GridError::EmptyInterior);
        }

        let mut mask = vec![NodeLabel::Collar; width * height];
        for y in 0..height {
            for x in 0..width {
                let i = y * width + x;
                if !omega[i] {
                    continue;
                }
                let mut ring = false;
                for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                        ring = true;
                        break;
                    }
                    if !omega[ny as usize * width + nx as usize] {
                        ring = true;
                        break;
                    }
                }
                mask[i] = if ring { NodeLabel::BoundaryRing } else { NodeLabel::Interior };
            }
        }

        let origin = (
            -(width as f64 - 1.0) / 2.0 * h,
            -(height as f64 - 1.0) / 2.0 * h,
        );
        let dom = GridDomain { width, height, h, collar_width, mask, origin };

        if connected && !dom.omega_connected() {
            return Err(GridError::DisconnectedInterior);
        }
        Ok(dom)
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn len(&self) -> usize {
        self.width * self.height
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn spacing(&self) -> f64 {
        self.h
    }
    pub fn collar_width(&self) -> usize {
        self.collar_width
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.width, i / self.width)
    }

    /// Physical position of a node.
    #[inline]
    pub fn position(&self, i: usize) -> (f64, f64) {
        let (x, y) = self.coords(i);
        (self.origin.0 + x as f64 * self.h, self.origin.1 + y as f64 * self.h)
    }

    #[inline]
    pub fn label(&self, i: usize) -> NodeLabel {
        self.mask[i]
    }

    #[inline]
    pub fn in_omega(&self, i: usize) -> bool {
        self.mask[i] != NodeLabel::Collar
    }

    pub fn nodes(&self) -> std::ops::Range<usize> {
        0..self.len()
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes().filter(|&i| self.mask[i] == NodeLabel::Interior)
    }

    pub fn ring_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes().filter(|&i| self.mask[i] == NodeLabel::BoundaryRing)
    }

    pub fn collar_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes().filter(|&i| self.mask[i] == NodeLabel::Collar)
    }

    pub fn omega_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes().filter(|&i| self.mask[i] != NodeLabel::Collar)
    }

    /// 4-neighbors inside the grid.
    pub fn neighbors4(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = self.coords(i);
        [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)].into_iter().filter_map(move |(dx, dy)| {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx < 0 || ny < 0 || nx >= self.width as i64 || ny >= self.height as i64 {
                None
            } else {
                Some(ny as usize * self.width + nx as usize)
            }
        })
    }

    /// Node at an integer offset from `i`, if it stays on the grid.
    #[inline]
    pub fn offset(&self, i: usize, dx: i32, dy: i32) -> Option<usize> {
        let (x, y) = self.coords(i);
        let nx = x as i64 + dx as i64;
        let ny = y as i64 + dy as i64;
        if nx < 0 || ny < 0 || nx >= self.width as i64 || ny >= self.height as i64 {
            None
        } else {
            Some(ny as usize * self.width + nx as usize)
        }
    }

    fn omega_connected(&self) -> bool {
        let first = match self.nodes().find(|&i| self.in_omega(i)) {
            Some(i) => i,
            None => return true,
        };
        let mut seen = vec![false; self.len()];
        let mut stack = vec![first];
        seen[first] = true;
        let mut count = 1usize;
        while let Some(i) = stack.pop() {
            for n in self.neighbors4(i) {
                if self.in_omega(n) && !seen[n] {
                    seen[n] = true;
                    count += 1;
                    stack.push(n);
                }
            }
        }
        count == self.omega_nodes().count()
    }

    /// Read an interior mask from PGM (P2 or P5): 0 = exterior, 255 = interior.
    pub fn mask_from_pgm(reader: &mut impl BufRead) -> Result<DomainSpec, GridError> {
        let mut raw = Vec::new();
        reader.read_to_end(&mut raw)?;
        let (magic, rest) =
            split_token(&raw).ok_or_else(|| GridError::MaskFormat("empty".into()))?;
        let binary = match magic {
            b"P2" => false,
            b"P5" => true,
            _ => return Err(GridError::MaskFormat("expected P2 or P5".into())),
        };
        let (w, rest) = parse_pgm_int(rest)?;
        let (h, rest) = parse_pgm_int(rest)?;
        let (maxval, mut rest) = parse_pgm_int(rest)?;
        if maxval != 255 {
            return Err(GridError::MaskFormat(format!("maxval {maxval}, expected 255")));
        }
        let mut interior = Vec::with_capacity(w * h);
        if binary {
            // Single whitespace byte separates header from raster.
            if rest.is_empty() {
                return Err(GridError::MaskFormat("truncated raster".into()));
            }
            rest = &rest[1..];
            if rest.len() < w * h {
                return Err(GridError::MaskFormat("truncated raster".into()));
            }
            for &b in &rest[..w * h] {
                interior.push(pgm_pixel(b)?);
            }
        } else {
            let mut data = rest;
            for _ in 0..w * h {
                let (v, d) = parse_pgm_int(data)?;
                data = d;
                if v > 255 {
                    return Err(GridError::MaskFormat(format!("pixel {v} out of range")));
                }
                interior.push(pgm_pixel(v as u8)?);
            }
        }
        Ok(DomainSpec::Mask { width: w, height: h, interior })
    }

    /// Write the interior mask (Omega nodes, collar stripped) as P5.
    pub fn mask_to_pgm(&self, writer: &mut impl Write) -> Result<(), GridError> {
        let c = self.collar_width;
        let w = self.width - 2 * c;
        let h = self.height - 2 * c;
        writeln!(writer, "P5")?;
        writeln!(writer, "{} {}", w, h)?;
        writeln!(writer, "255")?;
        for y in 0..h {
            for x in 0..w {
                let i = self.index(x + c, y + c);
                let v: u8 = if self.in_omega(i) { 255 } else { 0 };
                writer.write_all(&[v])?;
            }
        }
        Ok(())
    }
}

/// Write a pixel set over the full grid (collar included) as P5.
pub fn pixelset_to_pgm(
    domain: &GridDomain,
    set: &PixelSet,
    writer: &mut impl Write,
) -> Result<(), GridError> {
    writeln!(writer, "P5")?;
    writeln!(writer, "{} {}", domain.width(), domain.height())?;
    writeln!(writer, "255")?;
    for i in domain.nodes() {
        writer.write_all(&[if set.contains(i) { 255 } else { 0 }])?;
    }
    Ok(())
}

fn pgm_pixel(b: u8) -> Result<bool, GridError> {
    match b {
        0 => Ok(false),
        255 => Ok(true),
        v => Err(GridError::MaskFormat(format!("pixel value {v}, expected 0 or 255"))),
    }
}

fn split_token(data: &[u8]) -> Option<(&[u8], &[u8])> {
    let start = data.iter().position(|b| !b.is_ascii_whitespace())?;
    let data = &data[start..];
    let end = data.iter().position(|b| b.is_ascii_whitespace()).unwrap_or(data.len());
    Some((&data[..end], &data[end..]))
}

fn parse_pgm_int(data: &[u8]) -> Result<(usize, &[u8]), GridError> {
    // Skip whitespace and comment lines.
    let mut rest = data;
    loop {
        let start = rest
            .iter()
            .position(|b| !b.is_ascii_whitespace())
            .ok_or_else(|| GridError::MaskFormat("truncated header".into()))?;
        rest = &rest[start..];
        if rest[0] == b'#' {
            let nl = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| GridError::MaskFormat("unterminated comment".into()))?;
            rest = &rest[nl + 1..];
        } else {
            break;
        }
    }
    let end = rest.iter().position(|b| b.is_ascii_whitespace()).unwrap_or(rest.len());
    let tok = std::str::from_utf8(&rest[..end])
        .map_err(|_| GridError::MaskFormat("non-ascii header".into()))?;
    let v = tok
        .parse::<usize>()
        .map_err(|_| GridError::MaskFormat(format!("bad integer {tok:?}")))?;
    Ok((v, &rest[end..]))
}

/// Real values on grid nodes; NaN outside the defining region. Reads go
/// through [`ScalarField::value`], which must never hit a NaN.
#[derive(Clone, Debug)]
pub struct ScalarField {
    region: Region,
    values: Vec<f64>,
    width: usize,
    height: usize,
}

impl ScalarField {
    /// Build a field by evaluating `f` on every node of `region`.
    pub fn from_fn(domain: &GridDomain, region: Region, f: impl Fn(usize) -> f64) -> ScalarField {
        let mut values = vec![f64::NAN; domain.len()];
        for i in domain.nodes() {
            if region_contains(region, domain.label(i)) {
                values[i] = f(i);
            }
        }
        ScalarField { region, values, width: domain.width(), height: domain.height() }
    }

    pub fn from_values(
        domain: &GridDomain,
        region: Region,
        values: Vec<f64>,
    ) -> Result<ScalarField, GridError> {
        if values.len() != domain.len() {
            return Err(GridError::FieldShape {
                expected: (domain.width(), domain.height()),
                got: (values.len(), 1),
            });
        }
        Ok(ScalarField { region, values, width: domain.width(), height: domain.height() })
    }

    pub fn region(&self) -> Region {
        self.region
    }

    /// Value at a node inside the defining region.
    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        let v = self.values[i];
        debug_assert!(v.is_finite(), "read of undefined field value at node {i}");
        v
    }

    /// Raw value, NaN permitted.
    #[inline]
    pub fn raw(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn defined(&self, i: usize) -> bool {
        self.values[i].is_finite()
    }

    pub fn defined_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).filter(|&i| self.values[i].is_finite())
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        let mut mm: Option<(f64, f64)> = None;
        for &v in &self.values {
            if v.is_finite() {
                mm = Some(match mm {
                    None => (v, v),
                    Some((lo, hi)) => (lo.min(v), hi.max(v)),
                });
            }
        }
        mm
    }

    /// Row-major CSV, `NaN` for undefined nodes.
    pub fn to_csv(&self, writer: &mut impl Write) -> Result<(), GridError> {
        for y in 0..self.height {
            let mut line = String::new();
            for x in 0..self.width {
                if x > 0 {
                    line.push(',');
                }
                let v = self.values[y * self.width + x];
                if v.is_finite() {
                    line.push_str(&format!("{v}"));
                } else {
                    line.push_str("NaN");
                }
            }
            writeln!(writer, "{line}")?;
        }
        Ok(())
    }

    /// Parse a row-major CSV with `NaN` markers; shape must match the grid.
    pub fn from_csv(
        domain: &GridDomain,
        region: Region,
        reader: &mut impl BufRead,
    ) -> Result<ScalarField, GridError> {
        let mut values = Vec::with_capacity(domain.len());
        let mut rows = 0usize;
        let mut cols = 0usize;
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|t| {
                    let t = t.trim();
                    if t.eq_ignore_ascii_case("nan") {
                        Ok(f64::NAN)
                    } else {
                        t.parse::<f64>()
                            .map_err(|_| GridError::MaskFormat(format!("bad csv value {t:?}")))
                    }
                })
                .collect::<Result<_, _>>()?;
            if rows == 0 {
                cols = row.len();
            } else if row.len() != cols {
                return Err(GridError::MaskFormat("ragged csv".into()));
            }
            rows += 1;
            values.extend(row);
        }
        if (cols, rows) != (domain.width(), domain.height()) {
            return Err(GridError::FieldShape {
                expected: (domain.width(), domain.height()),
                got: (cols, rows),
            });
        }
        ScalarField::from_values(domain, region, values)
    }
}

pub fn region_contains(region: Region, label: NodeLabel) -> bool {
    match region {
        Region::Omega => label != NodeLabel::Collar,
        Region::Ring => label == NodeLabel::BoundaryRing,
        Region::CollarAndRing => label != NodeLabel::Interior,
        Region::Everywhere => true,
    }
}

/// Binary set of grid nodes, packed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PixelSet {
    bits: Vec<u64>,
    len: usize,
}

impl PixelSet {
    pub fn empty(domain: &GridDomain) -> PixelSet {
        PixelSet::with_len(domain.len())
    }

    pub fn with_len(len: usize) -> PixelSet {
        PixelSet { bits: vec![0; len.div_ceil(64)], len }
    }

    pub fn full(domain: &GridDomain) -> PixelSet {
        let mut s = PixelSet::empty(domain);
        for i in 0..s.len {
            s.insert(i);
        }
        s
    }

    pub fn from_nodes(domain: &GridDomain, nodes: impl IntoIterator<Item = usize>) -> PixelSet {
        let mut s = PixelSet::empty(domain);
        for i in nodes {
            s.insert(i);
        }
        s
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        (self.bits[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.bits[i / 64] |= 1u64 << (i % 64);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.bits[i / 64] &= !(1u64 << (i % 64));
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        if value {
            self.insert(i)
        } else {
            self.remove(i)
        }
    }

    /// Number of member nodes.
    pub fn volume(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.contains(i))
    }

    pub fn union(&self, other: &PixelSet) -> PixelSet {
        assert_eq!(self.len, other.len);
        PixelSet {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a | b).collect(),
            len: self.len,
        }
    }

    pub fn intersection(&self, other: &PixelSet) -> PixelSet {
        assert_eq!(self.len, other.len);
        PixelSet {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a & b).collect(),
            len: self.len,
        }
    }

    pub fn difference(&self, other: &PixelSet) -> PixelSet {
        assert_eq!(self.len, other.len);
        PixelSet {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a & !b).collect(),
            len: self.len,
        }
    }

    pub fn is_subset(&self, other: &PixelSet) -> bool {
        assert_eq!(self.len, other.len);
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &PixelSet) -> bool {
        assert_eq!(self.len, other.len);
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & b == 0)
    }

    /// Nodes of self not in other, up to `cap` of them, in index order.
    pub fn witness_difference(&self, other: &PixelSet, cap: usize) -> Vec<usize> {
        self.iter().filter(|&i| !other.contains(i)).take(cap).collect()
    }
}

/// Extend ring data to the collar by nearest ring node in Euclidean
/// distance; ties broken by the smaller row-major node index. The result
/// is defined on collar and ring, equals `g` on the ring, and takes values
/// only from `g`'s range.
pub fn extend_boundary_data(
    domain: &GridDomain,
    g: &ScalarField,
) -> Result<ScalarField, GridError> {
    let ring: Vec<usize> = domain.ring_nodes().collect();
    for &i in &ring {
        if !g.defined(i) {
            return Err(GridError::UndefinedRingValue(i));
        }
    }
    let ring_pos: Vec<(f64, f64)> = ring.iter().map(|&i| domain.position(i)).collect();
    let mut values = vec![f64::NAN; domain.len()];
    for &i in &ring {
        values[i] = g.value(i);
    }
    for c in domain.collar_nodes() {
        let (px, py) = domain.position(c);
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (k, &(rx, ry)) in ring_pos.iter().enumerate() {
            let d = (px - rx) * (px - rx) + (py - ry) * (py - ry);
            // Strict improvement keeps the smallest node index on ties
            // because ring nodes are scanned in index order.
            if d < best_d {
                best_d = d;
                best = ring[k];
            }
        }
        values[c] = g.value(best);
    }
    ScalarField::from_values(domain, Region::CollarAndRing, values)
}

/// Obstacle superlevel set: interior nodes with `psi > t` together with
/// their Omega 4-neighbors (one dilation = the discrete closure).
pub fn obstacle_superlevel(domain: &GridDomain, psi: &ScalarField, t: f64) -> PixelSet {
    let mut core = PixelSet::empty(domain);
    for i in domain.omega_nodes() {
        if psi.defined(i) && psi.value(i) > t {
            core.insert(i);
        }
    }
    let mut out = core.clone();
    for i in core.iter() {
        for n in domain.neighbors4(i) {
            if domain.in_omega(n) {
                out.insert(n);
            }
        }
    }
    out
}

/// Exterior superlevel set: collar nodes with `G >= t`.
pub fn exterior_superlevel(domain: &GridDomain, g_ext: &ScalarField, t: f64) -> PixelSet {
    let mut out = PixelSet::empty(domain);
    for i in domain.collar_nodes() {
        if g_ext.value(i) >= t {
            out.insert(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(radius: f64, h: f64) -> GridDomain {
        GridDomain::build(&DomainSpec::Disc { radius }, h, 2, true).unwrap()
    }

    #[test]
    fn disc_mask_is_four_fold_symmetric() {
        let d = disc(1.0, 0.25);
        let w = d.width();
        let hgt = d.height();
        for y in 0..hgt {
            for x in 0..w {
                let a = d.label(d.index(x, y));
                assert_eq!(a, d.label(d.index(w - 1 - x, y)));
                assert_eq!(a, d.label(d.index(x, hgt - 1 - y)));
                assert_eq!(a, d.label(d.index(y, x)));
            }
        }
        // Interior = nodes with |x| < 1.
        for i in d.nodes() {
            let (x, y) = d.position(i);
            let inside = x * x + y * y < 1.0;
            assert_eq!(d.in_omega(i), inside, "node at ({x},{y})");
        }
    }

    #[test]
    fn rectangle_counts() {
        let d =
            GridDomain::build(&DomainSpec::Rectangle { width: 2.0, height: 1.0 }, 0.5, 1, true)
                .unwrap();
        // 4x2 Omega block; every Omega node touches the collar, so all ring.
        assert_eq!(d.omega_nodes().count(), 8);
        assert_eq!(d.ring_nodes().count(), 8);
        assert_eq!(d.interior_nodes().count(), 0);
        assert_eq!(d.width(), 6);
        assert_eq!(d.height(), 4);
    }

    #[test]
    fn ring_is_exactly_omega_nodes_adjacent_to_collar() {
        let d = disc(1.0, 0.2);
        for i in d.nodes() {
            if !d.in_omega(i) {
                continue;
            }
            let touches = d.neighbors4(i).any(|n| !d.in_omega(n));
            assert_eq!(d.label(i) == NodeLabel::BoundaryRing, touches);
        }
        assert!(d.interior_nodes().count() > 0);
    }

    #[test]
    fn disconnected_mask_with_flag_errors() {
        let mut interior = vec![false; 50];
        interior[11] = true;
        interior[18] = true; // two far-apart nodes in a 10x5 mask
        let spec = DomainSpec::Mask { width: 10, height: 5, interior: interior.clone() };
        let r = GridDomain::build(&spec, 1.0, 1, true);
        assert!(matches!(r, Err(GridError::DisconnectedInterior)));
        // Without the flag it builds.
        assert!(GridDomain::build(&spec, 1.0, 1, false).is_ok());
    }

    #[test]
    fn bad_parameters_error() {
        assert!(matches!(
            GridDomain::build(&DomainSpec::Disc { radius: 1.0 }, 0.0, 1, false),
            Err(GridError::BadSpacing(_))
        ));
        assert!(matches!(
            GridDomain::build(&DomainSpec::Disc { radius: 1.0 }, 0.5, 0, false),
            Err(GridError::BadCollarWidth(0))
        ));
        let empty = DomainSpec::Mask { width: 3, height: 3, interior: vec![false; 9] };
        assert!(matches!(GridDomain::build(&empty, 1.0, 1, false), Err(GridError::EmptyInterior)));
    }

    #[test]
    fn constant_boundary_extends_constant() {
        let d = disc(1.0, 0.25);
        let g = ScalarField::from_fn(&d, Region::Ring, |_| 3.0);
        let ext = extend_boundary_data(&d, &g).unwrap();
        for i in d.collar_nodes() {
            assert_eq!(ext.value(i), 3.0);
        }
        for i in d.ring_nodes() {
            assert_eq!(ext.value(i), 3.0);
        }
        for i in d.interior_nodes() {
            assert!(!ext.defined(i));
        }
    }

    #[test]
    fn extension_is_nearest_neighbor_and_range_preserving() {
        let d = disc(1.0, 0.25);
        let g = ScalarField::from_fn(&d, Region::Ring, |i| d.position(i).0);
        let ext = extend_boundary_data(&d, &g).unwrap();
        let (lo, hi) = g.min_max().unwrap();
        for c in d.collar_nodes() {
            let v = ext.value(c);
            assert!(v >= lo && v <= hi);
            // Nearest ring node by brute force must give the same value.
            let (px, py) = d.position(c);
            let mut best = (f64::INFINITY, usize::MAX);
            for r in d.ring_nodes() {
                let (rx, ry) = d.position(r);
                let dd = (px - rx).powi(2) + (py - ry).powi(2);
                if dd < best.0 {
                    best = (dd, r);
                }
            }
            assert_eq!(v, g.value(best.1));
        }
        // A collar node on the +x axis takes the value of the ring node near (1,0).
        let c = d
            .collar_nodes()
            .find(|&i| {
                let (x, y) = d.position(i);
                y == 0.0 && x > 1.0
            })
            .unwrap();
        let ring_on_axis = d
            .ring_nodes()
            .find(|&i| d.position(i).1 == 0.0 && d.position(i).0 > 0.0)
            .unwrap();
        assert_eq!(ext.value(c), g.value(ring_on_axis));
    }

    #[test]
    fn equidistant_tie_takes_smaller_node_index() {
        // Two isolated Omega nodes with a collar node exactly between them.
        let spec = DomainSpec::Mask {
            width: 3,
            height: 1,
            interior: vec![true, false, true],
        };
        let d = GridDomain::build(&spec, 1.0, 1, false).unwrap();
        // Grid 5x3; ring nodes at (1,1) and (3,1); collar node (2,1) is at
        // distance 1 from both.
        let ra = d.index(1, 1);
        let rb = d.index(3, 1);
        assert_eq!(d.label(ra), NodeLabel::BoundaryRing);
        assert_eq!(d.label(rb), NodeLabel::BoundaryRing);
        let mut v = vec![f64::NAN; d.len()];
        v[ra] = 7.0;
        v[rb] = 9.0;
        let g = ScalarField::from_values(&d, Region::Ring, v).unwrap();
        let ext = extend_boundary_data(&d, &g).unwrap();
        assert_eq!(ext.value(d.index(2, 1)), 7.0);
    }

    #[test]
    fn undefined_ring_value_errors() {
        let d = disc(1.0, 0.25);
        let g = ScalarField::from_fn(&d, Region::Ring, |_| f64::NAN);
        assert!(matches!(
            extend_boundary_data(&d, &g),
            Err(GridError::UndefinedRingValue(_))
        ));
    }

    #[test]
    fn obstacle_superlevel_cases() {
        let d = disc(1.0, 0.25);
        let psi = ScalarField::from_fn(&d, Region::Omega, |i| {
            let (x, y) = d.position(i);
            1.0 - (x * x + y * y).sqrt()
        });
        // t >= max psi -> empty.
        let top = psi.min_max().unwrap().1;
        assert!(obstacle_superlevel(&d, &psi, top).is_empty());
        // Direct evaluation oracle: core nodes are psi > t; closure adds
        // one ring of Omega 4-neighbors.
        let t = 0.5;
        let l = obstacle_superlevel(&d, &psi, t);
        for i in d.omega_nodes() {
            let core = psi.value(i) > t;
            let near_core = core || d.neighbors4(i).any(|n| d.in_omega(n) && psi.value(n) > t);
            assert_eq!(l.contains(i), near_core);
        }
        // Superlevel of the cone at t=0.5 contains the node-wise disc r<0.5.
        for i in d.omega_nodes() {
            let (x, y) = d.position(i);
            if (x * x + y * y).sqrt() < 0.5 {
                assert!(l.contains(i));
            }
        }
        // Collar stays out.
        for i in d.collar_nodes() {
            assert!(!l.contains(i));
        }
    }

    #[test]
    fn single_spike_superlevel_is_node_plus_neighbors() {
        let d = GridDomain::build(&DomainSpec::Rectangle { width: 5.0, height: 5.0 }, 1.0, 1, true)
            .unwrap();
        let p = d.index(3, 3);
        let psi = ScalarField::from_fn(&d, Region::Omega, |i| if i == p { 1.0 } else { 0.0 });
        let l = obstacle_superlevel(&d, &psi, 0.5);
        let mut expected = PixelSet::empty(&d);
        expected.insert(p);
        for n in d.neighbors4(p) {
            if d.in_omega(n) {
                expected.insert(n);
            }
        }
        assert_eq!(l, expected);
    }

    #[test]
    fn exterior_superlevel_cases() {
        let d = disc(1.0, 0.25);
        let g = ScalarField::from_fn(
            &d,
            Region::Ring,
            |i| if d.position(i).0 >= 0.0 { 1.0 } else { 0.0 },
        );
        let ext = extend_boundary_data(&d, &g).unwrap();
        let all = exterior_superlevel(&d, &ext, -1.0);
        assert_eq!(all.volume(), d.collar_nodes().count());
        let none = exterior_superlevel(&d, &ext, 1.5);
        assert!(none.is_empty());
        let half = exterior_superlevel(&d, &ext, 0.5);
        for i in d.collar_nodes() {
            assert_eq!(half.contains(i), ext.value(i) >= 0.5, "node {i}");
        }
        assert!(half.volume() > 0 && half.volume() < all.volume());
    }

    #[test]
    fn superlevels_monotone_over_ladder() {
        let d = disc(1.0, 0.2);
        let g = ScalarField::from_fn(&d, Region::Ring, |i| {
            let (x, y) = d.position(i);
            x + 0.3 * y
        });
        let ext = extend_boundary_data(&d, &g).unwrap();
        let psi = ScalarField::from_fn(&d, Region::Omega, |i| {
            let (x, y) = d.position(i);
            0.7 - x * x - y * y
        });
        let ts: Vec<f64> = (0..17).map(|k| -1.4 + 0.17 * k as f64).collect();
        for w in ts.windows(2) {
            let (s, t) = (w[0], w[1]);
            assert!(
                exterior_superlevel(&d, &ext, t).is_subset(&exterior_superlevel(&d, &ext, s))
            );
            assert!(
                obstacle_superlevel(&d, &psi, t).is_subset(&obstacle_superlevel(&d, &psi, s))
            );
        }
    }

    proptest::proptest! {
        #[test]
        fn superlevels_monotone_over_random_ladders(seed in proptest::prelude::any::<u64>()) {
            let d = disc(0.8, 0.25);
            let mut rng = crate::rng::SplitMix64::new(seed);
            let g = {
                let vals: Vec<f64> = d.nodes().map(|_| rng.range_f64(-2.0, 2.0)).collect();
                ScalarField::from_fn(&d, Region::Ring, |i| vals[i])
            };
            let ext = extend_boundary_data(&d, &g).unwrap();
            let psi = {
                let vals: Vec<f64> = d.nodes().map(|_| rng.range_f64(-2.0, 2.0)).collect();
                ScalarField::from_fn(&d, Region::Omega, |i| vals[i])
            };
            let mut ladder: Vec<f64> = (0..9).map(|_| rng.range_f64(-2.5, 2.5)).collect();
            ladder.sort_by(f64::total_cmp);
            for w in ladder.windows(2) {
                let (s, t) = (w[0], w[1]);
                proptest::prop_assert!(exterior_superlevel(&d, &ext, t)
                    .is_subset(&exterior_superlevel(&d, &ext, s)));
                proptest::prop_assert!(obstacle_superlevel(&d, &psi, t)
                    .is_subset(&obstacle_superlevel(&d, &psi, s)));
            }
        }
    }

    #[test]
    fn pgm_round_trip_and_errors() {
        let d = disc(1.0, 0.25);
        let mut buf = Vec::new();
        d.mask_to_pgm(&mut buf).unwrap();
        let spec = GridDomain::mask_from_pgm(&mut buf.as_slice()).unwrap();
        let d2 = GridDomain::build(&spec, d.spacing(), d.collar_width(), true).unwrap();
        assert_eq!(d.width(), d2.width());
        for i in d.nodes() {
            assert_eq!(d.label(i), d2.label(i));
        }
        // P2 parse with comment.
        let text = b"P2\n# comment\n2 2\n255\n255 0\n0 255\n";
        let spec = GridDomain::mask_from_pgm(&mut text.as_slice()).unwrap();
        match spec {
            DomainSpec::Mask { width, height, interior } => {
                assert_eq!((width, height), (2, 2));
                assert_eq!(interior, vec![true, false, false, true]);
            }
            _ => panic!(),
        }
        let bad = b"P2\n2 2\n255\n255 7\n0 255\n";
        assert!(GridDomain::mask_from_pgm(&mut bad.as_slice()).is_err());
        let bad_magic = b"P3\n2 2\n255\n";
        assert!(GridDomain::mask_from_pgm(&mut bad_magic.as_slice()).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_nan_pattern() {
        let d = disc(0.8, 0.4);
        let f = ScalarField::from_fn(&d, Region::Omega, |i| i as f64 * 0.5);
        let mut buf = Vec::new();
        f.to_csv(&mut buf).unwrap();
        let f2 = ScalarField::from_csv(&d, Region::Omega, &mut buf.as_slice()).unwrap();
        for i in d.nodes() {
            assert_eq!(f.defined(i), f2.defined(i));
            if f.defined(i) {
                assert_eq!(f.value(i), f2.value(i));
            }
        }
    }
}
