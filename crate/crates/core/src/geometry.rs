//! Rasterized planar and three-dimensional domains.
//!
//! A [`GridDomain2D`] is a uniform node grid with spacing `h` and a boolean
//! mask. A node is inside when its center lies in the ideal (closed) shape.
//! Every node carries the weight `h²`, so `measure = inside_count · h²`.
//!
//! [`GridDomain3D`] stacks layers in `t`. Bounded stacks put layer centers at
//! `(l + ½) h_t`, so `nt` layers tile `(0, nt·h_t)`; periodic stacks put them
//! at `l · h_t` and wrap.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative slack used by the shape predicates so that nodes lying on the
/// ideal boundary (up to rounding of `origin + i*h`) count as inside.
const RASTER_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl BoundingBox {
    pub fn point(z: [f64; 2]) -> Self {
        Self { min: z, max: z }
    }

    pub fn inflate(&self, r: f64) -> Self {
        Self {
            min: [self.min[0] - r, self.min[1] - r],
            max: [self.max[0] + r, self.max[1] + r],
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            min: [self.min[0].min(other.min[0]), self.min[1].min(other.min[1])],
            max: [self.max[0].max(other.max[0]), self.max[1].max(other.max[1])],
        }
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
        ]
    }

    pub fn diameter(&self) -> f64 {
        libm::hypot(self.width(), self.height())
    }

    pub fn contains_box(&self, other: &Self) -> bool {
        self.min[0] <= other.min[0]
            && self.min[1] <= other.min[1]
            && self.max[0] >= other.max[0]
            && self.max[1] >= other.max[1]
    }
}

/// Which face of a node a boundary segment sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    West,
    East,
    South,
    North,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::West, Side::East, Side::South, Side::North];

    pub fn offset(self) -> (isize, isize) {
        match self {
            Side::West => (-1, 0),
            Side::East => (1, 0),
            Side::South => (0, -1),
            Side::North => (0, 1),
        }
    }
}

/// Unit-length piece of the raster boundary between an inside node and an
/// outside neighbor. Its length is `h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySegment {
    pub node: usize,
    pub side: Side,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain2D", into = "RawDomain2D")]
pub struct GridDomain2D {
    origin: [f64; 2],
    h: f64,
    nx: usize,
    ny: usize,
    mask: Vec<bool>,
    inside: Vec<usize>,
    segments: Vec<BoundarySegment>,
}

impl GridDomain2D {
    /// Builds a domain from an explicit mask over `(nx+1) × (ny+1)` nodes,
    /// row-major in `y`.
    pub fn new(origin: [f64; 2], h: f64, nx: usize, ny: usize, mask: Vec<bool>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("spacing h = {h}")));
        }
        if !(origin[0].is_finite() && origin[1].is_finite()) {
            return Err(Error::InvalidParameter("non-finite origin".into()));
        }
        let count = (nx + 1) * (ny + 1);
        if mask.len() != count {
            return Err(Error::LengthMismatch {
                left: mask.len(),
                right: count,
            });
        }
        let inside: Vec<usize> = (0..count).filter(|&id| mask[id]).collect();
        match inside.len() {
            0 => return Err(Error::EmptyDomain),
            n if n < 4 => return Err(Error::TooFewNodes(n)),
            _ => {}
        }
        let mut d = Self {
            origin,
            h,
            nx,
            ny,
            mask,
            inside,
            segments: Vec::new(),
        };
        let components = d.count_components();
        if components != 1 {
            return Err(Error::DisconnectedDomain { components });
        }
        d.segments = d.collect_segments();
        Ok(d)
    }

    fn count_components(&self) -> usize {
        let mut seen = vec![false; self.mask.len()];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for &start in &self.inside {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(id) = queue.pop_front() {
                for side in Side::ALL {
                    if let Some(nb) = self.neighbor(id, side) {
                        if !seen[nb] {
                            seen[nb] = true;
                            queue.push_back(nb);
                        }
                    }
                }
            }
        }
        components
    }

    fn collect_segments(&self) -> Vec<BoundarySegment> {
        let mut out = Vec::new();
        for &node in &self.inside {
            for side in Side::ALL {
                if self.neighbor(node, side).is_none() {
                    out.push(BoundarySegment { node, side });
                }
            }
        }
        out
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Cell counts `(nx, ny)`; the grid has `(nx+1) × (ny+1)` nodes.
    pub fn cells(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn nodes_x(&self) -> usize {
        self.nx + 1
    }

    pub fn nodes_y(&self) -> usize {
        self.ny + 1
    }

    pub fn node_count(&self) -> usize {
        self.mask.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn node_id(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn coords(&self, id: usize) -> (usize, usize) {
        (id % (self.nx + 1), id / (self.nx + 1))
    }

    pub fn point(&self, id: usize) -> [f64; 2] {
        let (i, j) = self.coords(id);
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    /// Inside test for possibly off-grid integer coordinates.
    pub fn is_inside(&self, i: isize, j: isize) -> bool {
        if i < 0 || j < 0 || i > self.nx as isize || j > self.ny as isize {
            return false;
        }
        self.mask[self.node_id(i as usize, j as usize)]
    }

    /// The inside neighbor of `id` across `side`, if any.
    pub fn neighbor(&self, id: usize, side: Side) -> Option<usize> {
        let (i, j) = self.coords(id);
        let (di, dj) = side.offset();
        let (ni, nj) = (i as isize + di, j as isize + dj);
        if self.is_inside(ni, nj) {
            Some(self.node_id(ni as usize, nj as usize))
        } else {
            None
        }
    }

    /// Inside node ids in increasing order.
    pub fn inside_nodes(&self) -> &[usize] {
        &self.inside
    }

    pub fn inside_count(&self) -> usize {
        self.inside.len()
    }

    /// Inside nodes whose four lattice neighbors are inside too.
    pub fn interior_nodes(&self) -> Vec<usize> {
        self.inside
            .iter()
            .copied()
            .filter(|&id| Side::ALL.iter().all(|&s| self.neighbor(id, s).is_some()))
            .collect()
    }

    /// Weight of one node, `h²`.
    pub fn node_weight(&self) -> f64 {
        self.h * self.h
    }

    pub fn measure(&self) -> f64 {
        self.inside.len() as f64 * self.node_weight()
    }

    pub fn boundary_segments(&self) -> &[BoundarySegment] {
        &self.segments
    }

    pub fn segment_midpoint(&self, seg: &BoundarySegment) -> [f64; 2] {
        let p = self.point(seg.node);
        let (di, dj) = seg.side.offset();
        [
            p[0] + 0.5 * di as f64 * self.h,
            p[1] + 0.5 * dj as f64 * self.h,
        ]
    }

    /// Total raster boundary length.
    pub fn perimeter(&self) -> f64 {
        self.segments.len() as f64 * self.h
    }

    /// `Σ_segments f(midpoint) · h`, a first-order rule for `∫_{∂Ω} f dω`.
    pub fn boundary_quadrature<F: Fn([f64; 2]) -> f64>(&self, f: F) -> f64 {
        crate::math::pairwise_sum(self.segments.len(), |s| {
            f(self.segment_midpoint(&self.segments[s])) * self.h
        })
    }

    /// Bounding box of the inside nodes.
    pub fn bounding_box(&self) -> BoundingBox {
        let mut bb = BoundingBox::point(self.point(self.inside[0]));
        for &id in &self.inside[1..] {
            bb = bb.union(&BoundingBox::point(self.point(id)));
        }
        bb
    }

    pub fn diameter(&self) -> f64 {
        self.bounding_box().diameter()
    }

    /// Same mask, origin shifted by `shift`.
    pub fn translated(&self, shift: [f64; 2]) -> Self {
        let mut d = self.clone();
        d.origin = [self.origin[0] + shift[0], self.origin[1] + shift[1]];
        d
    }
}

/// Ideal shapes, centered at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Disk {
        radius: f64,
    },
    Square {
        side: f64,
    },
    Rectangle {
        width: f64,
        height: f64,
    },
    Annulus {
        inner: f64,
        outer: f64,
    },
    /// The square `[-side/2, side/2]²` minus its open upper-right quadrant.
    Lshape {
        side: f64,
    },
}

impl Shape {
    fn half_extents(&self) -> [f64; 2] {
        match *self {
            Shape::Disk { radius } => [radius, radius],
            Shape::Square { side } | Shape::Lshape { side } => [0.5 * side, 0.5 * side],
            Shape::Rectangle { width, height } => [0.5 * width, 0.5 * height],
            Shape::Annulus { outer, .. } => [outer, outer],
        }
    }

    fn lengths(&self) -> Vec<f64> {
        match *self {
            Shape::Disk { radius } => vec![radius],
            Shape::Square { side } | Shape::Lshape { side } => vec![side],
            Shape::Rectangle { width, height } => vec![width, height],
            Shape::Annulus { inner, outer } => vec![inner, outer],
        }
    }

    fn contains(&self, p: [f64; 2], eps: f64) -> bool {
        let [x, y] = p;
        match *self {
            Shape::Disk { radius } => libm::hypot(x, y) <= radius + eps,
            Shape::Square { side } => x.abs() <= 0.5 * side + eps && y.abs() <= 0.5 * side + eps,
            Shape::Rectangle { width, height } => {
                x.abs() <= 0.5 * width + eps && y.abs() <= 0.5 * height + eps
            }
            Shape::Annulus { inner, outer } => {
                let r = libm::hypot(x, y);
                r >= inner - eps && r <= outer + eps
            }
            Shape::Lshape { side } => {
                let in_square = x.abs() <= 0.5 * side + eps && y.abs() <= 0.5 * side + eps;
                in_square && !(x > eps && y > eps)
            }
        }
    }
}

/// Rasterizes `shape` on a node grid of spacing `h` anchored at the lower-left
/// corner of the shape's bounding box.
pub fn make_shape(shape: Shape, h: f64) -> Result<GridDomain2D> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("spacing h = {h}")));
    }
    for len in shape.lengths() {
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::InvalidParameter(format!("shape length {len}")));
        }
    }
    if let Shape::Annulus { inner, outer } = shape {
        if inner >= outer {
            return Err(Error::EmptyDomain);
        }
    }
    let [a, b] = shape.half_extents();
    let nx = libm::ceil(2.0 * a / h - RASTER_EPS) as usize;
    let ny = libm::ceil(2.0 * b / h - RASTER_EPS) as usize;
    let origin = [-a, -b];
    let eps = RASTER_EPS * h;
    let mut mask = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let p = [origin[0] + i as f64 * h, origin[1] + j as f64 * h];
            mask.push(shape.contains(p, eps));
        }
    }
    GridDomain2D::new(origin, h, nx, ny, mask)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TTopology {
    Bounded,
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain3D", into = "RawDomain3D")]
pub struct GridDomain3D {
    origin: [f64; 3],
    h_xy: f64,
    h_t: f64,
    nx: usize,
    ny: usize,
    nt: usize,
    mask: Vec<bool>,
    topology: TTopology,
    inside: Vec<usize>,
}

impl GridDomain3D {
    /// `origin[2]` is the `t` coordinate of layer 0. The mask is layer-major:
    /// `nt` layers of `(nx+1) × (ny+1)` nodes.
    pub fn new(
        origin: [f64; 3],
        h_xy: f64,
        h_t: f64,
        (nx, ny, nt): (usize, usize, usize),
        mask: Vec<bool>,
        topology: TTopology,
    ) -> Result<Self> {
        for (name, v) in [("h_xy", h_xy), ("h_t", h_t)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v}")));
            }
        }
        if nt == 0 || (topology == TTopology::Periodic && nt < 2) {
            return Err(Error::InvalidParameter(format!("nt = {nt}")));
        }
        let count = (nx + 1) * (ny + 1) * nt;
        if mask.len() != count {
            return Err(Error::LengthMismatch {
                left: mask.len(),
                right: count,
            });
        }
        let inside: Vec<usize> = (0..count).filter(|&id| mask[id]).collect();
        match inside.len() {
            0 => return Err(Error::EmptyDomain),
            n if n < 4 => return Err(Error::TooFewNodes(n)),
            _ => {}
        }
        let d = Self {
            origin,
            h_xy,
            h_t,
            nx,
            ny,
            nt,
            mask,
            topology,
            inside,
        };
        if topology == TTopology::Periodic && !d.is_t_independent() {
            return Err(Error::InvalidParameter(
                "periodic topology requires a t-independent mask".into(),
            ));
        }
        let components = d.count_components();
        if components != 1 {
            return Err(Error::DisconnectedDomain { components });
        }
        Ok(d)
    }

    fn count_components(&self) -> usize {
        let mut seen = vec![false; self.mask.len()];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for &start in &self.inside {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(id) = queue.pop_front() {
                for off in NEIGHBORS_6 {
                    if let Some(nb) = self.neighbor(id, off) {
                        if !seen[nb] {
                            seen[nb] = true;
                            queue.push_back(nb);
                        }
                    }
                }
            }
        }
        components
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn h_xy(&self) -> f64 {
        self.h_xy
    }

    pub fn h_t(&self) -> f64 {
        self.h_t
    }

    /// `(nx, ny, nt)`: cells in `x`, `y` and layers in `t`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nx, self.ny, self.nt)
    }

    pub fn topology(&self) -> TTopology {
        self.topology
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn node_count(&self) -> usize {
        self.mask.len()
    }

    fn layer_size(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn node_id(&self, i: usize, j: usize, l: usize) -> usize {
        (l * (self.ny + 1) + j) * (self.nx + 1) + i
    }

    pub fn coords(&self, id: usize) -> (usize, usize, usize) {
        let l = id / self.layer_size();
        let rem = id % self.layer_size();
        (rem % (self.nx + 1), rem / (self.nx + 1), l)
    }

    pub fn point(&self, id: usize) -> [f64; 3] {
        let (i, j, l) = self.coords(id);
        [
            self.origin[0] + i as f64 * self.h_xy,
            self.origin[1] + j as f64 * self.h_xy,
            self.origin[2] + l as f64 * self.h_t,
        ]
    }

    /// Grid node at offset `(di, dj, dl)` from `id`, wrapping in `t` when
    /// periodic; `None` when off-grid (mask not consulted).
    pub fn offset(&self, id: usize, (di, dj, dl): (isize, isize, isize)) -> Option<usize> {
        let (i, j, l) = self.coords(id);
        let ni = i as isize + di;
        let nj = j as isize + dj;
        if ni < 0 || nj < 0 || ni > self.nx as isize || nj > self.ny as isize {
            return None;
        }
        let nt = self.nt as isize;
        let mut nl = l as isize + dl;
        match self.topology {
            TTopology::Periodic => nl = nl.rem_euclid(nt),
            TTopology::Bounded => {
                if nl < 0 || nl >= nt {
                    return None;
                }
            }
        }
        Some(self.node_id(ni as usize, nj as usize, nl as usize))
    }

    /// Inside node at the given offset.
    pub fn neighbor(&self, id: usize, off: (isize, isize, isize)) -> Option<usize> {
        self.offset(id, off).filter(|&nb| self.mask[nb])
    }

    pub fn inside_nodes(&self) -> &[usize] {
        &self.inside
    }

    pub fn inside_count(&self) -> usize {
        self.inside.len()
    }

    pub fn node_weight(&self) -> f64 {
        self.h_xy * self.h_xy * self.h_t
    }

    pub fn measure(&self) -> f64 {
        self.inside.len() as f64 * self.node_weight()
    }

    /// Length of the `t` extent, `nt · h_t`.
    pub fn t_extent(&self) -> f64 {
        self.nt as f64 * self.h_t
    }

    pub fn layer_mask(&self, l: usize) -> &[bool] {
        let n = self.layer_size();
        &self.mask[l * n..(l + 1) * n]
    }

    pub fn is_t_independent(&self) -> bool {
        let first = self.layer_mask(0);
        (1..self.nt).all(|l| self.layer_mask(l) == first)
    }

    fn planar(&self, mask: Vec<bool>) -> Result<GridDomain2D> {
        GridDomain2D::new(
            [self.origin[0], self.origin[1]],
            self.h_xy,
            self.nx,
            self.ny,
            mask,
        )
    }

    /// Cross-section of a t-independent domain.
    pub fn base(&self) -> Result<GridDomain2D> {
        if !self.is_t_independent() {
            return Err(Error::InvalidParameter("mask depends on t".into()));
        }
        self.planar(self.layer_mask(0).to_vec())
    }

    /// Projection of the domain onto the `(x, y)` plane.
    pub fn shadow(&self) -> Result<GridDomain2D> {
        let n = self.layer_size();
        let mut mask = vec![false; n];
        for l in 0..self.nt {
            for (m, &v) in mask.iter_mut().zip(self.layer_mask(l)) {
                *m |= v;
            }
        }
        self.planar(mask)
    }
}

/// Serialized form: the mask as one string per grid row, `#` inside and
/// `.` outside, rows ordered by increasing `y` (and layer by layer in 3D).
#[derive(Serialize, Deserialize)]
struct RawDomain2D {
    origin: [f64; 2],
    h: f64,
    nx: usize,
    ny: usize,
    rows: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawDomain3D {
    origin: [f64; 3],
    h_xy: f64,
    h_t: f64,
    nx: usize,
    ny: usize,
    nt: usize,
    topology: TTopology,
    rows: Vec<String>,
}

fn mask_rows(mask: &[bool], width: usize) -> Vec<String> {
    mask.chunks(width)
        .map(|row| row.iter().map(|&b| if b { '#' } else { '.' }).collect())
        .collect()
}

fn parse_rows(rows: &[String], width: usize) -> Result<Vec<bool>> {
    let mut mask = Vec::with_capacity(rows.len() * width);
    for row in rows {
        if row.chars().count() != width {
            return Err(Error::LengthMismatch {
                left: row.chars().count(),
                right: width,
            });
        }
        for ch in row.chars() {
            mask.push(match ch {
                '#' => true,
                '.' => false,
                _ => return Err(Error::InvalidParameter(format!("mask character {ch:?}"))),
            });
        }
    }
    Ok(mask)
}

impl From<GridDomain2D> for RawDomain2D {
    fn from(d: GridDomain2D) -> Self {
        let rows = mask_rows(&d.mask, d.nx + 1);
        Self {
            origin: d.origin,
            h: d.h,
            nx: d.nx,
            ny: d.ny,
            rows,
        }
    }
}

impl TryFrom<RawDomain2D> for GridDomain2D {
    type Error = Error;

    fn try_from(r: RawDomain2D) -> Result<Self> {
        let mask = parse_rows(&r.rows, r.nx + 1)?;
        GridDomain2D::new(r.origin, r.h, r.nx, r.ny, mask)
    }
}

impl From<GridDomain3D> for RawDomain3D {
    fn from(d: GridDomain3D) -> Self {
        let rows = mask_rows(&d.mask, d.nx + 1);
        Self {
            origin: d.origin,
            h_xy: d.h_xy,
            h_t: d.h_t,
            nx: d.nx,
            ny: d.ny,
            nt: d.nt,
            topology: d.topology,
            rows,
        }
    }
}

impl TryFrom<RawDomain3D> for GridDomain3D {
    type Error = Error;

    fn try_from(r: RawDomain3D) -> Result<Self> {
        let mask = parse_rows(&r.rows, r.nx + 1)?;
        GridDomain3D::new(
            r.origin,
            r.h_xy,
            r.h_t,
            (r.nx, r.ny, r.nt),
            mask,
            r.topology,
        )
    }
}

const NEIGHBORS_6: [(isize, isize, isize); 6] = [
    (-1, 0, 0),
    (1, 0, 0),
    (0, -1, 0),
    (0, 1, 0),
    (0, 0, -1),
    (0, 0, 1),
];

/// Stacks `nt = round(T / h_t)` copies of `base` in `t`.
pub fn extrude(
    base: &GridDomain2D,
    t_len: f64,
    h_t: f64,
    topology: TTopology,
) -> Result<GridDomain3D> {
    if !(h_t > 0.0 && h_t.is_finite()) {
        return Err(Error::InvalidParameter(format!("h_t = {h_t}")));
    }
    if !(t_len >= h_t) {
        return Err(Error::InvalidParameter(format!(
            "extrusion length {t_len} shorter than h_t = {h_t}"
        )));
    }
    let nt = libm::round(t_len / h_t) as usize;
    let t0 = match topology {
        TTopology::Bounded => 0.5 * h_t,
        TTopology::Periodic => 0.0,
    };
    let layer = base.mask();
    let mut mask = Vec::with_capacity(layer.len() * nt);
    for _ in 0..nt {
        mask.extend_from_slice(layer);
    }
    let (nx, ny) = base.cells();
    let o = base.origin();
    GridDomain3D::new(
        [o[0], o[1], t0],
        base.h(),
        h_t,
        (nx, ny, nt),
        mask,
        topology,
    )
}
