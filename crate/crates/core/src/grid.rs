//! Uniform 2-D grids, cell sets over them, and per-cell weight fields.
//!
//! Cells are indexed row-major from the lower-left corner: cell `(i, j)` has
//! linear index `j * nx + i`, with `i` growing along x and `j` along y.

use std::collections::VecDeque;

use crate::error::{CheegerError, Result};
use crate::scalar::Scalar;

/// Ambient dimension of the discretization. The formulas that mention the
/// dimension take it as a parameter; only the rasterization is planar.
pub const DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    nx: usize,
    ny: usize,
    h: T,
    origin: [T; 2],
}

impl<T: Scalar> Grid<T> {
    pub fn new(nx: usize, ny: usize, h: T, origin: [T; 2]) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(CheegerError::InvalidGrid(format!("cell counts must be positive, got {nx}x{ny}")));
        }
        if !(h > T::zero()) || !h.is_finite() {
            return Err(CheegerError::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        Ok(Grid { nx, ny, h, origin })
    }

    /// Grid of `n x n` cells covering `[0, side]^2`.
    pub fn square(n: usize, side: T) -> Result<Self> {
        Self::new(n, n, side / T::from_usize_lossy(n.max(1)), [T::zero(), T::zero()])
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn origin(&self) -> [T; 2] {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> T {
        self.h * self.h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn center(&self, idx: usize) -> [T; 2] {
        let (i, j) = self.coords(idx);
        let half = T::lit(0.5);
        [
            self.origin[0] + (T::from_usize_lossy(i) + half) * self.h,
            self.origin[1] + (T::from_usize_lossy(j) + half) * self.h,
        ]
    }

    /// Index of the cell reached from `idx` by the integer offset `d`, if it is on the grid.
    #[inline]
    pub fn offset(&self, idx: usize, d: (i32, i32)) -> Option<usize> {
        let (i, j) = self.coords(idx);
        let ni = i as i64 + d.0 as i64;
        let nj = j as i64 + d.1 as i64;
        if ni < 0 || nj < 0 || ni >= self.nx as i64 || nj >= self.ny as i64 {
            None
        } else {
            Some(nj as usize * self.nx + ni as usize)
        }
    }

    /// Cell whose closed square contains `p`, if any.
    pub fn locate(&self, p: [T; 2]) -> Option<usize> {
        let fx = ((p[0] - self.origin[0]) / self.h).floor();
        let fy = ((p[1] - self.origin[1]) / self.h).floor();
        let i = fx.to_i64()?;
        let j = fy.to_i64()?;
        if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
            return None;
        }
        Some(self.index(i as usize, j as usize))
    }
}

/// A measurable set, discretized as a mask over the cells of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSet<T> {
    grid: Grid<T>,
    mask: Vec<bool>,
}

impl<T: Scalar> CellSet<T> {
    pub fn empty(grid: Grid<T>) -> Self {
        CellSet { mask: vec![false; grid.len()], grid }
    }

    pub fn full(grid: Grid<T>) -> Self {
        CellSet { mask: vec![true; grid.len()], grid }
    }

    pub fn from_mask(grid: Grid<T>, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(CheegerError::InvalidInput(format!(
                "mask has {} entries, grid has {} cells",
                mask.len(),
                grid.len()
            )));
        }
        Ok(CellSet { grid, mask })
    }

    pub fn from_cells(grid: Grid<T>, cells: impl IntoIterator<Item = usize>) -> Self {
        let mut set = Self::empty(grid);
        for c in cells {
            set.mask[c] = true;
        }
        set
    }

    /// Cells whose centers satisfy `pred`.
    pub fn from_predicate(grid: Grid<T>, mut pred: impl FnMut([T; 2]) -> bool) -> Self {
        let mask = (0..grid.len()).map(|idx| pred(grid.center(idx))).collect();
        CellSet { grid, mask }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn insert(&mut self, idx: usize) {
        self.mask[idx] = true;
    }

    pub fn remove(&mut self, idx: usize) {
        self.mask[idx] = false;
    }

    pub fn cardinality(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    /// Euclidean area, `cardinality * h^2`.
    pub fn area(&self) -> T {
        T::from_usize_lossy(self.cardinality()) * self.grid.cell_area()
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn cell_list(&self) -> Vec<usize> {
        self.cells().collect()
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(CheegerError::GridMismatch("cell sets live on different grids"));
        }
        Ok(())
    }

    pub fn is_subset_of(&self, other: &Self) -> Result<bool> {
        self.check_grid(other)?;
        Ok(self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b))
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(&a, &b)| a || b).collect();
        Ok(CellSet { grid: self.grid, mask })
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(&a, &b)| a && b).collect();
        Ok(CellSet { grid: self.grid, mask })
    }

    /// `self \ other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(&a, &b)| a && !b).collect();
        Ok(CellSet { grid: self.grid, mask })
    }

    /// `parent \ self`, requiring `self ⊆ parent`.
    pub fn complement_in(&self, parent: &Self) -> Result<Self> {
        if !self.is_subset_of(parent)? {
            return Err(CheegerError::NotSubset);
        }
        parent.difference(self)
    }

    /// Complement within the whole grid.
    pub fn complement(&self) -> Self {
        CellSet { grid: self.grid, mask: self.mask.iter().map(|&b| !b).collect() }
    }

    /// Cells of the set with at least one 4-neighbor outside it (or off the grid).
    pub fn boundary_cells(&self) -> Vec<usize> {
        self.cells()
            .filter(|&c| {
                FACE_OFFSETS
                    .iter()
                    .any(|&d| self.grid.offset(c, d).map_or(true, |q| !self.mask[q]))
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        connected_components(self).len() <= 1
    }
}

/// Offsets of the four face neighbours.
pub const FACE_OFFSETS: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// Cells whose centers lie within `radius` of `center`.
pub fn make_disk<T: Scalar>(grid: Grid<T>, center: [T; 2], radius: T) -> Result<CellSet<T>> {
    if !(radius > T::zero()) {
        return Err(CheegerError::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    let r2 = radius * radius;
    let set = CellSet::from_predicate(grid, |p| {
        let dx = p[0] - center[0];
        let dy = p[1] - center[1];
        dx * dx + dy * dy <= r2
    });
    if set.is_empty() {
        return Err(CheegerError::DegenerateRasterization { radius: radius.to_f64_lossy() });
    }
    Ok(set)
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`, rasterized by cell centers.
pub fn make_rectangle<T: Scalar>(grid: Grid<T>, lo: [T; 2], hi: [T; 2]) -> CellSet<T> {
    CellSet::from_predicate(grid, |p| p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1])
}

/// Cells with center distance from `center` in `[inner, outer]`.
pub fn make_annulus<T: Scalar>(grid: Grid<T>, center: [T; 2], inner: T, outer: T) -> Result<CellSet<T>> {
    if !(inner >= T::zero() && outer > inner) {
        return Err(CheegerError::InvalidInput(format!("annulus radii must satisfy 0 <= inner < outer, got {inner}, {outer}")));
    }
    let (i2, o2) = (inner * inner, outer * outer);
    let set = CellSet::from_predicate(grid, |p| {
        let dx = p[0] - center[0];
        let dy = p[1] - center[1];
        let d2 = dx * dx + dy * dy;
        d2 >= i2 && d2 <= o2
    });
    if set.is_empty() {
        return Err(CheegerError::DegenerateRasterization { radius: outer.to_f64_lossy() });
    }
    Ok(set)
}

/// Partition of `set` into 4-connected components, ordered by smallest cell index.
pub fn connected_components<T: Scalar>(set: &CellSet<T>) -> Vec<CellSet<T>> {
    let grid = *set.grid();
    let mut label = vec![usize::MAX; grid.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in set.cells() {
        if label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut comp = CellSet::empty(grid);
        label[start] = id;
        queue.push_back(start);
        while let Some(c) = queue.pop_front() {
            comp.insert(c);
            for &d in &FACE_OFFSETS {
                if let Some(q) = grid.offset(c, d) {
                    if set.contains(q) && label[q] == usize::MAX {
                        label[q] = id;
                        queue.push_back(q);
                    }
                }
            }
        }
        out.push(comp);
    }
    out
}

pub const DEFAULT_ORACLE_CAP: usize = 20;

/// Every nonempty subset of a small set, enumerated by binary counting over
/// the parent's cells in index order.
pub struct Subsets<T> {
    grid: Grid<T>,
    cells: Vec<usize>,
    next: u64,
    end: u64,
}

impl<T: Scalar> Subsets<T> {
    pub fn len_total(&self) -> u64 {
        self.end - 1
    }

    pub fn parent_cells(&self) -> &[usize] {
        &self.cells
    }
}

impl<T: Scalar> Iterator for Subsets<T> {
    type Item = CellSet<T>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let bits = self.next;
        self.next += 1;
        Some(subset_from_bits(self.grid, &self.cells, bits))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

pub(crate) fn subset_from_bits<T: Scalar>(grid: Grid<T>, cells: &[usize], bits: u64) -> CellSet<T> {
    let mut set = CellSet::empty(grid);
    for (k, &c) in cells.iter().enumerate() {
        if bits >> k & 1 == 1 {
            set.insert(c);
        }
    }
    set
}

/// All `2^|A| - 1` nonempty subsets of `a`, refusing parents larger than `cap`.
pub fn subsets_of<T: Scalar>(a: &CellSet<T>, cap: usize) -> Result<Subsets<T>> {
    let cells = a.cell_list();
    if cells.len() > cap || cells.len() > 62 {
        return Err(CheegerError::OracleCap { cells: cells.len(), cap });
    }
    Ok(Subsets { grid: *a.grid(), end: 1u64 << cells.len(), cells, next: 1 })
}

/// Strictly positive per-cell weight, the volume density `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    grid: Grid<T>,
    values: Vec<T>,
    sup_norm: T,
}

impl<T: Scalar> ScalarField<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CheegerError::InvalidField(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        let mut sup = T::zero();
        for (idx, &v) in values.iter().enumerate() {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(CheegerError::InvalidField(format!("value {v} at cell {idx} is not positive and finite")));
            }
            sup = sup.max(v);
        }
        Ok(ScalarField { grid, values, sup_norm: sup })
    }

    pub fn uniform(grid: Grid<T>, value: T) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn from_fn(grid: Grid<T>, mut f: impl FnMut([T; 2]) -> T) -> Result<Self> {
        let values = (0..grid.len()).map(|idx| f(grid.center(idx))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn value(&self, idx: usize) -> T {
        self.values[idx]
    }

    pub fn sup_norm(&self) -> T {
        self.sup_norm
    }

    /// The same field multiplied by `s > 0`.
    pub fn scaled(&self, s: T) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| v * s).collect())
    }
}
