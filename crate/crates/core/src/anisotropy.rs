//! Surface weights `g(x, v)` sampled on a fixed stencil of lattice directions.
//!
//! Two stencils are available. [`Stencil::Axis4`] counts cell faces, which is
//! exact for axis-aligned boundaries and is what small hand-checkable
//! examples use. [`Stencil::Crofton16`] is the Cauchy–Crofton quadrature on
//! the 8-neighborhood plus knight moves and is the one to use for shapes with
//! curved or slanted boundaries.
//!
//! Crofton weights: the perimeter of a curve is `1/2 ∫∫ n(φ, ρ) dρ dφ` over
//! lines at angle `φ ∈ [0, π)` and offset `ρ`, `n` counting intersections.
//! Lines through cell centers along the lattice vector `d` have offset
//! spacing `h / |d|` (in grid units `1/|d|`), and the angular cell of `d`
//! is `Δφ = (φ_next − φ_prev) / 2`. A crossing along `d` therefore carries
//! `Δφ / (2 |d|)` times `h`:
//!
//! | family | `|d|` | `Δφ`              | weight          |
//! |--------|-------|-------------------|-----------------|
//! | axis   | 1     | `atan(1/2)`       | 0.2318238045... |
//! | diag   | √2    | `π/4 − atan(1/2)` | 0.1137559994... |
//! | knight | √5    | `π/8`             | 0.0878101841... |

use crate::error::{CheegerError, Result};
use crate::grid::Grid;
use crate::scalar::Scalar;

const AXIS4_DIRECTIONS: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
const AXIS4_WEIGHTS: [f64; 4] = [1.0; 4];

const CROFTON16_DIRECTIONS: [(i32, i32); 16] = [
    (1, 0),
    (2, 1),
    (1, 1),
    (1, 2),
    (0, 1),
    (-1, 2),
    (-1, 1),
    (-2, 1),
    (-1, 0),
    (-2, -1),
    (-1, -1),
    (-1, -2),
    (0, -1),
    (1, -2),
    (1, -1),
    (2, -1),
];

const W_AXIS: f64 = 0.231_823_804_500_403_05;
const W_DIAG: f64 = 0.113_755_999_432_198_4;
const W_KNIGHT: f64 = 0.087_810_184_138_009_08;

const CROFTON16_WEIGHTS: [f64; 16] = [
    W_AXIS, W_KNIGHT, W_DIAG, W_KNIGHT, W_AXIS, W_KNIGHT, W_DIAG, W_KNIGHT, W_AXIS, W_KNIGHT, W_DIAG, W_KNIGHT,
    W_AXIS, W_KNIGHT, W_DIAG, W_KNIGHT,
];

/// Lattice directions used to probe the boundary, sorted by angle and closed
/// under negation (direction `k + D/2` is `-d_k`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Stencil {
    /// Face counting: weight 1 per axis crossing.
    Axis4,
    /// Cauchy–Crofton quadrature on 16 directions.
    #[default]
    Crofton16,
}

impl Stencil {
    pub fn directions(self) -> &'static [(i32, i32)] {
        match self {
            Stencil::Axis4 => &AXIS4_DIRECTIONS,
            Stencil::Crofton16 => &CROFTON16_DIRECTIONS,
        }
    }

    /// Dimensionless weight `c_k`; a crossing contributes `c_k * h * g`.
    pub fn weights(self) -> &'static [f64] {
        match self {
            Stencil::Axis4 => &AXIS4_WEIGHTS,
            Stencil::Crofton16 => &CROFTON16_WEIGHTS,
        }
    }

    pub fn len(self) -> usize {
        self.directions().len()
    }

    pub fn is_empty(self) -> bool {
        false
    }

    #[inline]
    pub fn opposite(self, k: usize) -> usize {
        let d = self.len();
        (k + d / 2) % d
    }

    pub fn unit(self, k: usize) -> [f64; 2] {
        let (a, b) = self.directions()[k];
        let n = ((a * a + b * b) as f64).sqrt();
        [a as f64 / n, b as f64 / n]
    }

    pub fn name(self) -> &'static str {
        match self {
            Stencil::Axis4 => "axis4",
            Stencil::Crofton16 => "crofton16",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "axis4" => Some(Stencil::Axis4),
            "crofton16" => Some(Stencil::Crofton16),
            _ => None,
        }
    }
}

/// Per-cell surface weight `g(x_cell, d_k)` on the stencil directions, plus the
/// comparability constant `C` with `1/C <= g <= C` on unit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Anisotropy<T> {
    grid: Grid<T>,
    stencil: Stencil,
    values: Vec<T>,
    comparability: T,
}

impl<T: Scalar> Anisotropy<T> {
    /// Builds and validates a weight table laid out as `values[cell * D + k]`.
    ///
    /// With `comparability = None` the tightest constant is used. Values at
    /// `d_k` and `-d_k` must agree to a relative `1e-12`; the table is then
    /// symmetrized so evenness holds exactly.
    pub fn new(grid: Grid<T>, stencil: Stencil, mut values: Vec<T>, comparability: Option<T>) -> Result<Self> {
        let d = stencil.len();
        if values.len() != grid.len() * d {
            return Err(CheegerError::InvalidAnisotropy(format!(
                "expected {} values ({} cells x {} directions), got {}",
                grid.len() * d,
                grid.len(),
                d,
                values.len()
            )));
        }
        let mut lo = T::infinity();
        let mut hi = T::zero();
        for (i, &v) in values.iter().enumerate() {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(CheegerError::InvalidAnisotropy(format!(
                    "value {v} at cell {}, direction {} is not positive and finite",
                    i / d,
                    i % d
                )));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let tight = hi.max(T::one() / lo);
        let c = match comparability {
            Some(c) => {
                let slack = T::one() + T::lit(1e-12);
                if !(c >= T::one()) || hi > c * slack || lo * c * slack < T::one() {
                    return Err(CheegerError::InvalidAnisotropy(format!(
                        "values span [{lo}, {hi}], not inside [1/C, C] for C = {c}"
                    )));
                }
                c
            }
            None => tight,
        };
        let tol = T::lit(1e-12);
        for cell in 0..grid.len() {
            for k in 0..d / 2 {
                let a = values[cell * d + k];
                let b = values[cell * d + stencil.opposite(k)];
                if (a - b).abs() > tol * a.max(b) {
                    return Err(CheegerError::InvalidAnisotropy(format!(
                        "odd weight at cell {cell}: g(d_{k}) = {a} but g(-d_{k}) = {b}"
                    )));
                }
                values[cell * d + stencil.opposite(k)] = a;
            }
        }
        let aniso = Anisotropy { grid, stencil, values, comparability: c };
        for cell in 0..grid.len() {
            aniso.check_convex(cell)?;
        }
        Ok(aniso)
    }

    pub fn euclidean(grid: Grid<T>, stencil: Stencil) -> Self {
        Anisotropy { grid, stencil, values: vec![T::one(); grid.len() * stencil.len()], comparability: T::one() }
    }

    /// Constant `g(x, v) = s |v|`, with `C = max(s, 1/s)`.
    pub fn scaled(grid: Grid<T>, stencil: Stencil, s: T) -> Result<Self> {
        Self::new(grid, stencil, vec![s; grid.len() * stencil.len()], None)
    }

    /// Spatially uniform weight given by one value per stencil direction.
    pub fn from_direction_table(grid: Grid<T>, stencil: Stencil, table: &[T], comparability: Option<T>) -> Result<Self> {
        if table.len() != stencil.len() {
            return Err(CheegerError::InvalidAnisotropy(format!(
                "direction table has {} entries, stencil {} has {}",
                table.len(),
                stencil.name(),
                stencil.len()
            )));
        }
        let mut values = Vec::with_capacity(grid.len() * table.len());
        for _ in 0..grid.len() {
            values.extend_from_slice(table);
        }
        Self::new(grid, stencil, values, comparability)
    }

    /// Samples `g(center, d̂_k)` for the first half of the stencil and mirrors it.
    pub fn from_fn(
        grid: Grid<T>,
        stencil: Stencil,
        comparability: Option<T>,
        mut g: impl FnMut([T; 2], [T; 2]) -> T,
    ) -> Result<Self> {
        let d = stencil.len();
        let mut values = vec![T::zero(); grid.len() * d];
        for cell in 0..grid.len() {
            let x = grid.center(cell);
            for k in 0..d / 2 {
                let u = stencil.unit(k);
                let v = g(x, [T::lit(u[0]), T::lit(u[1])]);
                values[cell * d + k] = v;
                values[cell * d + stencil.opposite(k)] = v;
            }
        }
        Self::new(grid, stencil, values, comparability)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    pub fn comparability(&self) -> T {
        self.comparability
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn value(&self, cell: usize, k: usize) -> T {
        self.values[cell * self.stencil.len() + k]
    }

    /// `g` at the midpoint of the crossing from `p` along `d_k`: the mean of the
    /// two cell samples, or the sample at `p` when the crossing leaves the grid.
    #[inline]
    pub fn midpoint_value(&self, p: usize, q: Option<usize>, k: usize) -> T {
        match q {
            Some(q) => (self.value(p, k) + self.value(q, k)) * T::lit(0.5),
            None => self.value(p, k),
        }
    }

    /// Weight `c_k h g(x_pq, d̂_k)` of one stencil crossing.
    #[inline]
    pub fn crossing_weight(&self, p: usize, q: Option<usize>, k: usize) -> T {
        T::lit(self.stencil.weights()[k]) * self.grid.h() * self.midpoint_value(p, q, k)
    }

    /// `s * g`, comparability adjusted.
    pub fn scaled_by(&self, s: T) -> Result<Self> {
        let values = self.values.iter().map(|&v| v * s).collect();
        let c = self.comparability * s.max(T::one() / s);
        Self::new(self.grid, self.stencil, values, Some(c))
    }

    /// The same weight sampled on a coarser stencil whose directions are a
    /// subset of this one's (the face stencil from the sixteen-direction one).
    /// Sub-sampling keeps the bounds and evenness; the face stencil's ball is a
    /// centred parallelogram, hence always convex.
    pub fn restricted(&self, stencil: Stencil) -> Result<Self> {
        let map: Vec<usize> = stencil
            .directions()
            .iter()
            .map(|d| {
                self.stencil.directions().iter().position(|e| e == d).ok_or_else(|| {
                    CheegerError::InvalidAnisotropy(format!(
                        "direction {d:?} of {} is not in {}",
                        stencil.name(),
                        self.stencil.name()
                    ))
                })
            })
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(self.grid.len() * map.len());
        for cell in 0..self.grid.len() {
            values.extend(map.iter().map(|&k| self.value(cell, k)));
        }
        Self::new(self.grid, stencil, values, Some(self.comparability))
    }

    /// Vertex `d̂_k / g(x, d̂_k)` of the unit ball `{v : g(x, v) <= 1}`.
    fn ball_vertex(&self, cell: usize, k: usize) -> [T; 2] {
        let u = self.stencil.unit(k);
        let g = self.value(cell, k);
        [T::lit(u[0]) / g, T::lit(u[1]) / g]
    }

    fn check_convex(&self, cell: usize) -> Result<()> {
        let d = self.stencil.len();
        let tol = T::lit(1e-9);
        for k in 0..d {
            let a = self.ball_vertex(cell, (k + d - 1) % d);
            let b = self.ball_vertex(cell, k);
            let c = self.ball_vertex(cell, (k + 1) % d);
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            let scale = (a[0] * a[0] + a[1] * a[1]).max(c[0] * c[0] + c[1] * c[1]);
            if cross < -tol * scale {
                return Err(CheegerError::InvalidAnisotropy(format!(
                    "unit ball not convex at cell {cell}, direction {k}"
                )));
            }
        }
        Ok(())
    }

    /// `g(x_cell, v)` for arbitrary `v`: the gauge of the polygon through the
    /// stencil ball vertices, which is convex and positively 1-homogeneous and
    /// agrees with the stored values on the stencil directions.
    pub fn eval(&self, cell: usize, v: [T; 2]) -> T {
        if v[0] == T::zero() && v[1] == T::zero() {
            return T::zero();
        }
        let d = self.stencil.len();
        let two_pi = T::PI() + T::PI();
        let mut theta = v[1].atan2(v[0]);
        if theta < T::zero() {
            theta = theta + two_pi;
        }
        let step_angle = |k: usize| {
            let u = self.stencil.unit(k);
            let a = T::lit(u[1]).atan2(T::lit(u[0]));
            if a < T::zero() {
                a + two_pi
            } else {
                a
            }
        };
        let mut k = d - 1;
        for j in 0..d {
            let lo = step_angle(j);
            let hi = if j + 1 == d { two_pi } else { step_angle(j + 1) };
            if theta >= lo && theta < hi {
                k = j;
                break;
            }
        }
        let p = self.ball_vertex(cell, k);
        let q = self.ball_vertex(cell, (k + 1) % d);
        let det = p[0] * q[1] - p[1] * q[0];
        let a = (v[0] * q[1] - v[1] * q[0]) / det;
        let b = (p[0] * v[1] - p[1] * v[0]) / det;
        a + b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crofton_weights_match_derivation() {
        let dirs = Stencil::Crofton16.directions();
        let angle = |k: usize| {
            let (a, b) = dirs[k];
            (b as f64).atan2(a as f64).rem_euclid(2.0 * std::f64::consts::PI)
        };
        for k in 0..16 {
            let prev = angle((k + 15) % 16);
            let next = angle((k + 1) % 16);
            let span = (next - prev).rem_euclid(2.0 * std::f64::consts::PI) / 2.0;
            let (a, b) = dirs[k];
            let len = ((a * a + b * b) as f64).sqrt();
            let w = span / (2.0 * len);
            assert!((w - Stencil::Crofton16.weights()[k]).abs() < 1e-15, "k={k}: {w}");
        }
        // angular cells cover [0, 2π)
        let total: f64 = (0..16)
            .map(|k| {
                let (a, b) = dirs[k];
                Stencil::Crofton16.weights()[k] * 2.0 * ((a * a + b * b) as f64).sqrt()
            })
            .sum();
        assert!((total - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn stencils_closed_under_negation() {
        for s in [Stencil::Axis4, Stencil::Crofton16] {
            for k in 0..s.len() {
                let (a, b) = s.directions()[k];
                assert_eq!(s.directions()[s.opposite(k)], (-a, -b));
                assert_eq!(s.weights()[k], s.weights()[s.opposite(k)]);
            }
        }
    }

    #[test]
    fn euclidean_is_convex() {
        let g = Grid::<f64>::square(3, 1.0).unwrap();
        for s in [Stencil::Axis4, Stencil::Crofton16] {
            let e = Anisotropy::euclidean(g, s);
            Anisotropy::new(g, s, e.values().to_vec(), None).unwrap();
        }
    }

    #[test]
    fn rejects_odd_weights() {
        let g = Grid::<f64>::square(1, 1.0).unwrap();
        let err = Anisotropy::from_direction_table(g, Stencil::Axis4, &[1.0, 1.0, 1.5, 1.0], None).unwrap_err();
        assert!(matches!(err, CheegerError::InvalidAnisotropy(_)));
    }

    #[test]
    fn rejects_nonconvex_ball() {
        let g = Grid::<f64>::square(1, 1.0).unwrap();
        // a spike in the diagonal direction makes the ball star-shaped but not convex
        let mut table = [1.0; 16];
        table[2] = 0.5;
        table[10] = 0.5;
        let err = Anisotropy::from_direction_table(g, Stencil::Crofton16, &table, None).unwrap_err();
        assert!(err.to_string().contains("convex"), "{err}");
    }

    #[test]
    fn rejects_out_of_bound_values() {
        let g = Grid::<f64>::square(1, 1.0).unwrap();
        assert!(Anisotropy::from_direction_table(g, Stencil::Axis4, &[3.0; 4], Some(2.0)).is_err());
        let a = Anisotropy::from_direction_table(g, Stencil::Axis4, &[2.0, 0.5, 2.0, 0.5], None).unwrap();
        assert_eq!(a.comparability(), 2.0);
    }

    #[test]
    fn eval_is_homogeneous_and_interpolating() {
        let g = Grid::<f64>::square(1, 1.0).unwrap();
        let a = Anisotropy::from_fn(g, Stencil::Crofton16, None, |_, v| v[0].abs() + v[1].abs()).unwrap();
        for k in 0..16 {
            let u = Stencil::Crofton16.unit(k);
            assert!((a.eval(0, u) - a.value(0, k)).abs() < 1e-12);
            assert!((a.eval(0, [3.0 * u[0], 3.0 * u[1]]) - 3.0 * a.value(0, k)).abs() < 1e-12);
        }
        // l1 is exactly represented: stencil vertices lie on its unit ball
        let v = [0.3, -0.7];
        assert!((a.eval(0, v) - 1.0).abs() < 1e-12);
        let e = Anisotropy::<f64>::euclidean(g, Stencil::Crofton16);
        assert_eq!(e.eval(0, [0.0, 0.0]), 0.0);
        // inscribed polygon: the gauge overestimates |v| by at most sec(13.3°)
        let val = e.eval(0, [0.6, 0.8]);
        assert!(val >= 1.0 - 1e-12 && val < 1.03, "{val}");
    }

    #[test]
    fn restriction_to_faces() {
        let g = Grid::new(2, 1, 1.0, [0.0, 0.0]).unwrap();
        let a = Anisotropy::from_fn(g, Stencil::Crofton16, None, |x: [f64; 2], v: [f64; 2]| 1.0 + x[0] * v[0].abs() * 0.5).unwrap();
        let r = a.restricted(Stencil::Axis4).unwrap();
        assert_eq!(r.stencil(), Stencil::Axis4);
        for cell in 0..2 {
            assert_eq!(r.value(cell, 0), a.value(cell, 0));
            assert_eq!(r.value(cell, 1), a.value(cell, 4));
        }
        assert!(r.restricted(Stencil::Crofton16).is_err());
    }
}
