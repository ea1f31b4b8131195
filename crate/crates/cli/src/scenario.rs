//! Scenario files: TOML with a fixed set of sections, see `docs/scenario.md`.

use std::path::{Path, PathBuf};

use cheeger::grid::{make_annulus, make_disk, make_rectangle};
use cheeger::io::{parse_anisotropy, parse_scalar_field, parse_text_mask, read_pgm};
use cheeger::measures::check_alpha;
use cheeger::{Anisotropy, CellSet, CheegerError, CheegerProblem, Grid, ScalarField, Stencil};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSection>,
    #[serde(default)]
    pub weights: WeightsSection,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cantor: Option<CantorSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    /// Physical width along x; `h = side / nx`.
    #[serde(default = "one")]
    pub side: f64,
    #[serde(default)]
    pub origin: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Square,
    Disk,
    Annulus,
    Mask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub shape: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<[f64; 2]>,
    /// `.pgm` or plain-text mask, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StencilName {
    Axis4,
    #[default]
    Crofton16,
}

impl From<StencilName> for Stencil {
    fn from(s: StencilName) -> Self {
        match s {
            StencilName::Axis4 => Stencil::Axis4,
            StencilName::Crofton16 => Stencil::Crofton16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FKind {
    #[default]
    Uniform,
    Radial,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GKind {
    #[default]
    Euclidean,
    Scaled,
    Crystalline,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    #[serde(default)]
    pub stencil: StencilName,
    #[serde(default)]
    pub f: FKind,
    #[serde(default = "one")]
    pub f_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_center: Option<[f64; 2]>,
    #[serde(default = "one")]
    pub f_a: f64,
    #[serde(default)]
    pub f_b: f64,
    #[serde(default = "one")]
    pub f_power: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_file: Option<PathBuf>,
    #[serde(default)]
    pub g: GKind,
    #[serde(default = "one")]
    pub g_scale: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub g_table: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparability: Option<f64>,
}

impl Default for WeightsSection {
    fn default() -> Self {
        WeightsSection {
            stencil: StencilName::default(),
            f: FKind::default(),
            f_value: 1.0,
            f_center: None,
            f_a: 1.0,
            f_b: 0.0,
            f_power: 1.0,
            f_file: None,
            g: GKind::default(),
            g_scale: 1.0,
            g_table: Vec::new(),
            g_file: None,
            comparability: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(default = "one")]
    pub alpha: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection { alpha: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    #[default]
    Auto,
    Oracle,
    Dinkelbach,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub method: MethodName,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_cap")]
    pub oracle_cap: usize,
    #[serde(default)]
    pub compare_oracle: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            method: MethodName::Auto,
            tol: default_tol(),
            max_iter: default_max_iter(),
            oracle_cap: default_cap(),
            compare_oracle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_cap")]
    pub exhaustive_cap: usize,
    /// Stencil for the unweighted checks (relative isoperimetry, growth).
    #[serde(default)]
    pub stencil: StencilName,
    /// Stencil `g` is restricted to for the relative-perimeter chain.
    #[serde(default = "axis4")]
    pub lemma_stencil: StencilName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default = "default_ladder")]
    pub ladder: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            enabled: false,
            budget: default_budget(),
            seed: None,
            slack: default_slack(),
            exhaustive_cap: default_cap(),
            stencil: StencilName::Crofton16,
            lemma_stencil: StencilName::Axis4,
            point: None,
            rho: None,
            r_min: None,
            r_max: None,
            ladder: default_ladder(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantorSection {
    pub epsilon: f64,
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub probe: bool,
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// Largest resolution the adaptive probe may refine to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ceiling: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// Written by every run; ignored when a manifest is read back as a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSection {
    pub inputs_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: String,
    pub stage: String,
}

fn one() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    100
}
fn default_cap() -> usize {
    20
}
fn default_budget() -> usize {
    1000
}
fn default_slack() -> f64 {
    0.05
}
fn default_ladder() -> usize {
    8
}
fn axis4() -> StencilName {
    StencilName::Axis4
}

fn config(field: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{field}: {msg}"))
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let s: Scenario = toml::from_str(text).map_err(|e| Failure::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Reads a scenario and makes every referenced path absolute.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        let mut s = Self::parse(&text).map_err(|e| match e {
            Failure::Config(m) => Failure::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = std::path::absolute(&base).map_err(|e| Failure::Io(e.to_string()))?;
        s.resolve_paths(&base);
        s.check_files()?;
        Ok(s)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        if let Some(d) = self.domain.as_mut() {
            fix(&mut d.mask);
        }
        fix(&mut self.weights.f_file);
        fix(&mut self.weights.g_file);
        fix(&mut self.output.dir);
    }

    fn referenced_files(&self) -> Vec<(&'static str, &Path)> {
        let mut v = Vec::new();
        if let Some(p) = self.domain.as_ref().and_then(|d| d.mask.as_deref()) {
            v.push(("domain.mask", p));
        }
        if self.weights.f == FKind::File {
            if let Some(p) = self.weights.f_file.as_deref() {
                v.push(("weights.f_file", p));
            }
        }
        if self.weights.g == GKind::File {
            if let Some(p) = self.weights.g_file.as_deref() {
                v.push(("weights.g_file", p));
            }
        }
        v
    }

    fn check_files(&self) -> Result<(), Failure> {
        for (field, p) in self.referenced_files() {
            if !p.is_file() {
                return Err(config(field, format!("file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Structural checks that need no file contents.
    pub fn validate(&self) -> Result<(), Failure> {
        if let Some(g) = &self.grid {
            match (g.n, g.nx, g.ny) {
                (Some(_), None, None) | (None, Some(_), Some(_)) => {}
                _ => return Err(config("grid", "give either n or both nx and ny")),
            }
            if !(g.side > 0.0 && g.side.is_finite()) {
                return Err(config("grid.side", format!("must be positive, got {}", g.side)));
            }
        }
        if let Some(d) = &self.domain {
            let need = |v: Option<f64>, f: &str| v.map(|_| ()).ok_or_else(|| config(f, "required for this shape"));
            match d.shape {
                Shape::Disk => need(d.radius, "domain.radius")?,
                Shape::Annulus => {
                    need(d.inner, "domain.inner")?;
                    need(d.outer, "domain.outer")?;
                }
                Shape::Mask => {
                    d.mask.as_ref().ok_or_else(|| config("domain.mask", "required for shape = \"mask\""))?;
                }
                Shape::Square => {}
            }
            if d.shape != Shape::Mask && self.grid.is_none() {
                return Err(config("grid", "required for builtin shapes"));
            }
        }
        check_alpha::<f64>(2, self.problem.alpha).map_err(|e| config("problem.alpha", e))?;
        let w = &self.weights;
        if w.f == FKind::File && w.f_file.is_none() {
            return Err(config("weights.f_file", "required for f = \"file\""));
        }
        if w.g == GKind::File && w.g_file.is_none() {
            return Err(config("weights.g_file", "required for g = \"file\""));
        }
        if w.g == GKind::Crystalline {
            let d = Stencil::from(w.stencil).len();
            if w.g_table.len() != d / 2 && w.g_table.len() != d {
                return Err(config("weights.g_table", format!("expected {} or {d} entries, got {}", d / 2, w.g_table.len())));
            }
        }
        if !(self.solver.tol > 0.0) {
            return Err(config("solver.tol", "must be positive"));
        }
        if !(self.verify.slack >= 0.0) {
            return Err(config("verify.slack", "must be non-negative"));
        }
        if let Some(c) = &self.cantor {
            if !(c.epsilon > 0.0 && c.epsilon < 1.0) {
                return Err(config("cantor.epsilon", format!("must lie in (0, 1), got {}", c.epsilon)));
            }
        }
        Ok(())
    }

    /// Sampled checks need a seed; `--seed` may supply it after parsing.
    pub fn require_seed(&self) -> Result<u64, Failure> {
        self.verify.seed.ok_or_else(|| config("verify.seed", "required when verify runs (or pass --seed)"))
    }

    /// Canonical TOML of the scenario without the output and manifest sections.
    /// File paths are replaced by their role, their contents are hashed instead.
    pub fn inputs_sha256(&self) -> Result<String, Failure> {
        let mut canon = self.clone();
        canon.output = OutputSection::default();
        canon.manifest = None;
        let files: Vec<(&str, PathBuf)> = self.referenced_files().into_iter().map(|(f, p)| (f, p.to_path_buf())).collect();
        if let Some(d) = canon.domain.as_mut() {
            d.mask = d.mask.as_ref().map(|_| PathBuf::from("domain.mask"));
        }
        canon.weights.f_file = canon.weights.f_file.as_ref().map(|_| PathBuf::from("weights.f_file"));
        canon.weights.g_file = canon.weights.g_file.as_ref().map(|_| PathBuf::from("weights.g_file"));
        let text = toml::to_string(&canon).map_err(|e| Failure::Config(e.to_string()))?;
        let mut h = Sha256::new();
        h.update(text.as_bytes());
        for (field, p) in files {
            let bytes = std::fs::read(&p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
            h.update(format!("\n[{field}] {} bytes\n", bytes.len()).as_bytes());
            h.update(&bytes);
        }
        Ok(hex::encode(h.finalize()))
    }

    pub fn to_toml(&self) -> Result<String, Failure> {
        toml::to_string(self).map_err(|e| Failure::Config(e.to_string()))
    }

    fn read(p: &Path) -> Result<Vec<u8>, Failure> {
        std::fs::read(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))
    }

    fn read_mask(p: &Path) -> Result<cheeger::io::MaskImage, Failure> {
        let bytes = Self::read(p)?;
        let parsed = if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
            read_pgm(&bytes)
        } else {
            parse_text_mask(&String::from_utf8_lossy(&bytes))
        };
        parsed.map_err(|e| config("domain.mask", format!("{}: {e}", p.display())))
    }

    pub fn build_grid(&self) -> Result<Grid<f64>, Failure> {
        let (nx, ny, side, origin) = match (&self.grid, &self.domain) {
            (Some(g), _) => {
                let (nx, ny) = match g.n {
                    Some(n) => (n, n),
                    None => (g.nx.unwrap_or(0), g.ny.unwrap_or(0)),
                };
                (nx, ny, g.side, g.origin)
            }
            (None, Some(d)) if d.shape == Shape::Mask => {
                let img = Self::read_mask(d.mask.as_deref().expect("validated"))?;
                (img.nx, img.ny, 1.0, [0.0, 0.0])
            }
            _ => return Err(config("grid", "missing")),
        };
        Grid::new(nx, ny, side / nx.max(1) as f64, origin).map_err(|e| config("grid", e))
    }

    pub fn build_domain(&self, grid: Grid<f64>) -> Result<CellSet<f64>, Failure> {
        let d = self.domain.as_ref().ok_or_else(|| config("domain", "missing"))?;
        let o = grid.origin();
        let ext = [grid.nx() as f64 * grid.h(), grid.ny() as f64 * grid.h()];
        let center = d.center.unwrap_or([o[0] + ext[0] / 2.0, o[1] + ext[1] / 2.0]);
        let set = match d.shape {
            Shape::Square => Ok(make_rectangle(
                grid,
                d.lo.unwrap_or(o),
                d.hi.unwrap_or([o[0] + ext[0], o[1] + ext[1]]),
            )),
            Shape::Disk => make_disk(grid, center, d.radius.expect("validated")),
            Shape::Annulus => make_annulus(grid, center, d.inner.expect("validated"), d.outer.expect("validated")),
            Shape::Mask => Self::read_mask(d.mask.as_deref().expect("validated"))?.into_set(grid),
        }
        .map_err(|e| config("domain", e))?;
        if set.is_empty() {
            return Err(config("domain", CheegerError::EmptyDomain));
        }
        Ok(set)
    }

    pub fn build_f(&self, grid: Grid<f64>) -> Result<ScalarField<f64>, Failure> {
        let w = &self.weights;
        match w.f {
            FKind::Uniform => ScalarField::uniform(grid, w.f_value),
            FKind::Radial => {
                let o = grid.origin();
                let c = w.f_center.unwrap_or([
                    o[0] + grid.nx() as f64 * grid.h() / 2.0,
                    o[1] + grid.ny() as f64 * grid.h() / 2.0,
                ]);
                ScalarField::from_fn(grid, |x| w.f_a + w.f_b * (x[0] - c[0]).hypot(x[1] - c[1]).powf(w.f_power))
            }
            FKind::File => {
                let p = w.f_file.as_deref().expect("validated");
                parse_scalar_field(&String::from_utf8_lossy(&Self::read(p)?), grid)
            }
        }
        .map_err(|e| config("weights.f", e))
    }

    pub fn build_g(&self, grid: Grid<f64>) -> Result<Anisotropy<f64>, Failure> {
        let w = &self.weights;
        let stencil = Stencil::from(w.stencil);
        match w.g {
            GKind::Euclidean => Ok(Anisotropy::euclidean(grid, stencil)),
            GKind::Scaled => Anisotropy::scaled(grid, stencil, w.g_scale),
            GKind::Crystalline => {
                let d = stencil.len();
                let mut table = w.g_table.clone();
                if table.len() == d / 2 {
                    table.extend_from_within(..);
                }
                Anisotropy::from_direction_table(grid, stencil, &table, w.comparability)
            }
            GKind::File => {
                let p = w.g_file.as_deref().expect("validated");
                parse_anisotropy(&String::from_utf8_lossy(&Self::read(p)?), grid, stencil, w.comparability)
            }
        }
        .map_err(|e| config("weights.g", e))
    }

    pub fn build_problem(&self) -> Result<CheegerProblem<f64>, Failure> {
        let grid = self.build_grid()?;
        let domain = self.build_domain(grid)?;
        let f = self.build_f(grid)?;
        let g = self.build_g(grid)?;
        CheegerProblem::new(domain, f, g, self.problem.alpha).map_err(|e| config("problem", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let s = Scenario::parse("[grid]\nn = 8\n[domain]\nshape = \"square\"\n").unwrap();
        assert_eq!(s.problem.alpha, 1.0);
        assert_eq!(s.solver.oracle_cap, 20);
        let p = s.build_problem().unwrap();
        assert_eq!(p.domain().cardinality(), 64);
    }

    #[test]
    fn alpha_rejected_with_field() {
        let err = Scenario::parse("[problem]\nalpha = 2.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("problem.alpha") && msg.contains("alpha out of [1, 1*)"), "{msg}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = Scenario::parse("[grid]\nn = 8\nsize = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("size"), "{msg}");
    }

    #[test]
    fn verify_needs_seed() {
        let s = Scenario::parse("[verify]\nenabled = true\n").unwrap();
        assert!(s.require_seed().unwrap_err().to_string().contains("verify.seed"));
    }

    #[test]
    fn half_table_is_mirrored() {
        let s = Scenario::parse(
            "[grid]\nn = 4\n[domain]\nshape = \"square\"\n[weights]\nstencil = \"axis4\"\ng = \"crystalline\"\ng_table = [1.0, 2.0]\n",
        )
        .unwrap();
        let g = s.build_g(s.build_grid().unwrap()).unwrap();
        assert_eq!(&g.values()[..4], &[1.0, 2.0, 1.0, 2.0]);
        assert_eq!(g.comparability(), 2.0);
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = Scenario::parse("[grid]\nn = 4\n[output]\ndir = \"x\"\n").unwrap();
        let b = Scenario::parse("[grid]\nn = 4\n").unwrap();
        let c = Scenario::parse("[grid]\nn = 5\n").unwrap();
        assert_eq!(a.inputs_sha256().unwrap(), b.inputs_sha256().unwrap());
        assert_ne!(b.inputs_sha256().unwrap(), c.inputs_sha256().unwrap());
    }

    #[test]
    fn toml_round_trip() {
        let s = Scenario::parse(
            "[grid]\nn = 16\n[domain]\nshape = \"disk\"\nradius = 0.3\n[verify]\nenabled = true\nseed = 7\n[cantor]\nepsilon = 0.2\ndepth = 3\n",
        )
        .unwrap();
        assert_eq!(Scenario::parse(&s.to_toml().unwrap()).unwrap(), s);
    }
}
