#![allow(dead_code)]

use cheeger::grid::{CellSet, Grid, ScalarField, FACE_OFFSETS};
use cheeger::{Anisotropy, Stencil};
use rand::Rng;

/// Even crystalline weight `s(x) (|v| + max_j |⟨u_j, v⟩|) / 2` with
/// `s ∈ [1, 2]` per cell, so that every value lies in `[1/2, 2]`.
pub fn random_crystalline(grid: Grid<f64>, stencil: Stencil, rng: &mut impl Rng) -> Anisotropy<f64> {
    let m = rng.gen_range(2..5);
    let facets: Vec<[f64; 2]> = (0..m)
        .map(|_| {
            let t: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            [t.cos(), t.sin()]
        })
        .collect();
    let scale: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(1.0..2.0)).collect();
    Anisotropy::from_fn(grid, stencil, Some(2.0), |x, v| {
        let s = scale[grid.locate(x).expect("cell center")];
        let support = facets.iter().map(|u| (u[0] * v[0] + u[1] * v[1]).abs()).fold(0.0, f64::max);
        s * 0.5 * (1.0 + support)
    })
    .expect("values inside [1/2, 2] and convex")
}

pub fn random_field(grid: Grid<f64>, lo: f64, hi: f64, rng: &mut impl Rng) -> ScalarField<f64> {
    ScalarField::new(grid, (0..grid.len()).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

/// A random 4-connected set of exactly `size` cells inside `within` (or
/// fewer when the component is smaller).
pub fn random_blob(within: &CellSet<f64>, size: usize, rng: &mut impl Rng) -> CellSet<f64> {
    let grid = *within.grid();
    let cells = within.cell_list();
    let start = cells[rng.gen_range(0..cells.len())];
    let mut set = CellSet::empty(grid);
    let mut frontier = vec![start];
    let mut queued = CellSet::empty(grid);
    queued.insert(start);
    while set.cardinality() < size && !frontier.is_empty() {
        let c = frontier.swap_remove(rng.gen_range(0..frontier.len()));
        set.insert(c);
        for d in FACE_OFFSETS {
            if let Some(q) = grid.offset(c, d) {
                if within.contains(q) && !queued.contains(q) {
                    queued.insert(q);
                    frontier.push(q);
                }
            }
        }
    }
    set
}

/// A random connected domain of at most `max_cells` cells on a small grid.
pub fn random_domain(grid: Grid<f64>, max_cells: usize, rng: &mut impl Rng) -> CellSet<f64> {
    let size = rng.gen_range(1..=max_cells);
    random_blob(&CellSet::full(grid), size, rng)
}
