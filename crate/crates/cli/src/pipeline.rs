//! Stages and the artifacts they write.

use std::fmt;
use std::path::Path;

use cheeger::cantor::{boundary_gap_report, build_domain, gap_bookkeeping, limit_measure, self_cheeger_probe_adaptive, CantorSpec};
use cheeger::io::pgm_bytes;
use cheeger::measures::{comparability_check, isoperimetric_check};
use cheeger::solver::{dinkelbach_solve, oracle_solve, solve, DinkelbachOptions, MethodChoice, SolveOptions, SolveReport};
use cheeger::verify::{
    check_lemma_relperimeter, localized_sup, relative_isoperimetric_constant, trace_constant, volume_growth_check,
    InequalityReport, VerifyOptions,
};
use cheeger::{CellSet, CheegerError, CheegerProblem, Grid, Stencil};

use crate::scenario::{ManifestSection, MethodName, Scenario};
use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Stage {
    Solve,
    Verify,
    Cantor,
    Oracle,
    #[default]
    All,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Solve => "solve",
            Stage::Verify => "verify",
            Stage::Cantor => "cantor",
            Stage::Oracle => "oracle",
            Stage::All => "all",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Solve => 3,
            Stage::Verify => 4,
            Stage::Cantor => 5,
            Stage::Oracle => 6,
            Stage::All => 3,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn write(out: &Path, name: &str, bytes: &[u8]) -> Result<(), Failure> {
    let p = out.join(name);
    std::fs::write(&p, bytes).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))
}

/// Buffers rows of text fields and writes them as one CSV file.
struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("writing to memory");
        Table { w }
    }

    fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).expect("writing to memory");
    }

    fn save(self, out: &Path, name: &str) -> Result<(), Failure> {
        let bytes = self.w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
        write(out, name, &bytes)
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn dinkelbach_opts(s: &Scenario) -> DinkelbachOptions<f64> {
    DinkelbachOptions { tol: s.solver.tol, max_iter: s.solver.max_iter }
}

/// Runs `stage` for one scenario, writing everything under `out`.
///
/// `All` runs solve, then verify when enabled, cantor when the section is
/// present and oracle when the domain is small enough.
pub fn run_scenario(s: &Scenario, stage: Stage, out: &Path) -> Result<(), Failure> {
    if matches!(stage, Stage::Verify) || (stage == Stage::All && s.verify.enabled && s.domain.is_some()) {
        s.require_seed()?;
    }
    if matches!(stage, Stage::Solve | Stage::Verify | Stage::Oracle) && s.domain.is_none() {
        return Err(Failure::Config(format!("domain: required by the {stage} stage")));
    }
    if stage == Stage::Cantor && s.cantor.is_none() {
        return Err(Failure::Config("cantor: required by the cantor stage".into()));
    }
    if stage == Stage::All && s.domain.is_none() && s.cantor.is_none() {
        return Err(Failure::Config("nothing to run: give a [domain] or a [cantor] section".into()));
    }
    let problem = match &s.domain {
        Some(_) if stage != Stage::Cantor => Some(s.build_problem()?),
        _ => None,
    };
    std::fs::create_dir_all(out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    write_manifest(s, stage, out)?;

    if let Some(p) = &problem {
        if matches!(stage, Stage::Solve | Stage::Verify | Stage::All) {
            let report = solve_stage(s, p, out)?;
            if stage == Stage::Verify || (stage == Stage::All && s.verify.enabled) {
                verify_stage(s, p, &report, out)?;
            }
        }
        let small = p.domain().cardinality() <= s.solver.oracle_cap;
        if stage == Stage::Oracle || (stage == Stage::All && small) {
            oracle_stage(s, p, out)?;
        }
    }
    if matches!(stage, Stage::Cantor | Stage::All) && s.cantor.is_some() {
        cantor_stage(s, out)?;
    }
    Ok(())
}

fn write_manifest(s: &Scenario, stage: Stage, out: &Path) -> Result<(), Failure> {
    let mut m = s.clone();
    m.output.dir = Some(std::path::absolute(out)?);
    m.manifest = Some(ManifestSection {
        inputs_sha256: s.inputs_sha256()?,
        seed: s.verify.seed,
        version: cheeger::VERSION.to_string(),
        stage: stage.name().to_string(),
    });
    write(out, "manifest.toml", m.to_toml()?.as_bytes())
}

pub fn solve_stage(s: &Scenario, p: &CheegerProblem<f64>, out: &Path) -> Result<SolveReport<f64>, Failure> {
    let opts = SolveOptions {
        method: match s.solver.method {
            MethodName::Auto => MethodChoice::Auto,
            MethodName::Oracle => MethodChoice::Oracle,
            MethodName::Dinkelbach => MethodChoice::Dinkelbach,
        },
        dinkelbach: dinkelbach_opts(s),
        oracle_cap: s.solver.oracle_cap,
        compare_oracle: s.solver.compare_oracle,
    };
    let rep = solve(p, opts).map_err(|e| Failure::stage(Stage::Solve, e))?;
    let r = &rep.result;
    if !r.converged {
        log::warn!("solver stopped after {} subproblems without converging", r.subproblem_count);
    }
    write(out, "minimizer.pgm", &pgm_bytes(&r.minimizer))?;

    let mut trace = Table::new(&["iter", "lambda", "volume", "perimeter"]);
    for t in &r.trace {
        trace.row([t.iter.to_string(), num(t.lambda), num(t.volume), num(t.perimeter)]);
    }
    trace.save(out, "trace.csv")?;

    let mut comps = Table::new(&["component", "cells", "ratio"]);
    for (i, c) in rep.components.iter().enumerate() {
        comps.row([i.to_string(), c.cells.to_string(), num(c.ratio)]);
    }
    comps.save(out, "components.csv")?;

    let mut summary = Table::new(&["key", "value"]);
    summary.row(["method", r.method.name()]);
    summary.row(["ratio".to_string(), num(r.ratio)]);
    summary.row(["domain_ratio".to_string(), num(rep.domain_ratio)]);
    summary.row(["cells".to_string(), r.minimizer.cardinality().to_string()]);
    summary.row(["subproblems".to_string(), r.subproblem_count.to_string()]);
    summary.row(["converged".to_string(), r.converged.to_string()]);
    summary.row(["oracle_gap".to_string(), opt(rep.oracle_gap)]);
    summary.save(out, "summary.csv")?;
    Ok(rep)
}

/// Rows of `verify.csv`; a margin below 1 marks a failed check.
struct VerifyTable<'a> {
    out: &'a Path,
    table: Table,
    failures: Vec<String>,
    grid: Grid<f64>,
}

impl VerifyTable<'_> {
    fn witness(&self, check: &str, set: &CellSet<f64>) -> Result<String, Failure> {
        let name = format!("witness_{check}.pgm");
        write(self.out, &name, &pgm_bytes(set))?;
        Ok(name)
    }

    fn row(&mut self, check: &str, constant: f64, witness: &str, margin: Option<f64>) {
        if margin.is_some_and(|m| !(m >= 1.0)) {
            self.failures.push(format!("{check}: margin {}", opt(margin)));
        }
        self.table.row([check.to_string(), num(constant), witness.to_string(), opt(margin)]);
    }

    fn estimate(&mut self, check: &str, rep: &InequalityReport<f64>) -> Result<(), Failure> {
        let set = rep.unbounded_witness.as_ref().unwrap_or(&rep.witness);
        let w = self.witness(check, set)?;
        if !rep.constant_estimate.is_finite() {
            self.failures.push(format!("{check}: unbounded"));
        }
        self.row(check, rep.constant_estimate, &w, None);
        Ok(())
    }

    /// Records a core error as a failed row, or passes other errors through.
    fn violation(&mut self, e: CheegerError) -> Result<(), Failure> {
        match e {
            CheegerError::InequalityViolation { check, ratio, threshold, witness } => {
                let w = self.witness(check, &CellSet::from_cells(self.grid, witness))?;
                self.table.row([check.to_string(), num(ratio), w, num(threshold / ratio)]);
                self.failures.push(format!("{check}: value {ratio} against threshold {threshold}"));
                Ok(())
            }
            other => {
                self.failures.push(other.to_string());
                Ok(())
            }
        }
    }
}

fn best_component(rep: &SolveReport<f64>) -> CellSet<f64> {
    let mut best = &rep.components[0];
    for c in &rep.components[1..] {
        if c.ratio < best.ratio {
            best = c;
        }
    }
    best.set.clone()
}

/// Center of the rightmost boundary cell, lowest row first on ties.
fn default_point(a: &CellSet<f64>) -> [f64; 2] {
    let grid = a.grid();
    let c = a
        .boundary_cells()
        .into_iter()
        .max_by_key(|&c| {
            let (i, j) = grid.coords(c);
            (i, std::cmp::Reverse(j))
        })
        .expect("nonempty set");
    grid.center(c)
}

fn half_extent(a: &CellSet<f64>) -> f64 {
    let grid = a.grid();
    let (mut i0, mut i1, mut j0, mut j1) = (usize::MAX, 0, usize::MAX, 0);
    for c in a.cells() {
        let (i, j) = grid.coords(c);
        i0 = i0.min(i);
        i1 = i1.max(i);
        j0 = j0.min(j);
        j1 = j1.max(j);
    }
    (i1 - i0 + 1).max(j1 - j0 + 1) as f64 * grid.h() / 2.0
}

pub fn verify_stage(s: &Scenario, p: &CheegerProblem<f64>, rep: &SolveReport<f64>, out: &Path) -> Result<(), Failure> {
    let v = &s.verify;
    let opts = VerifyOptions {
        budget: v.budget,
        seed: s.require_seed()?,
        slack: v.slack,
        exhaustive_cap: v.exhaustive_cap,
        stencil: Stencil::from(v.stencil),
    };
    let minimizer = &rep.result.minimizer;
    let a = best_component(rep);
    let g = p.g();
    let mut t = VerifyTable {
        out,
        table: Table::new(&["check", "constant", "witness", "margin"]),
        failures: Vec::new(),
        grid: *a.grid(),
    };

    t.row("ratio", rep.result.ratio, "minimizer.pgm", Some(rep.domain_ratio / rep.result.ratio));

    match trace_constant(&a, g, &opts) {
        Ok(r) => t.estimate("trace_constant", &r)?,
        Err(e) => t.violation(e)?,
    }

    let k_rel = match relative_isoperimetric_constant(&a, &opts) {
        Ok(r) => {
            t.estimate("relative_isoperimetric", &r)?;
            Some(r.constant_estimate)
        }
        Err(e) => {
            t.violation(e)?;
            None
        }
    };

    match g.restricted(Stencil::from(v.lemma_stencil)).and_then(|gl| check_lemma_relperimeter(&a, &gl, &opts)) {
        Ok(r) => {
            let w = t.witness("lemma_relperimeter", &r.worst)?;
            t.row("lemma_relperimeter", r.constant, &w, Some(r.worst_margin));
        }
        Err(e) => t.violation(e)?,
    }

    let x = v.point.unwrap_or_else(|| default_point(&a));
    let r_max = v.r_max.unwrap_or_else(|| half_extent(&a));
    let r_min = v.r_min.unwrap_or(r_max / 8.0);
    let rho = v.rho.unwrap_or(r_max / 2.0);
    match localized_sup(&a, g, x, rho, &opts) {
        Ok(r) => t.estimate("localized_sup", &r)?,
        Err(e) => t.violation(e)?,
    }

    match k_rel {
        Some(k) if k > 0.0 && k.is_finite() => match volume_growth_check(&a, x, r_min, r_max, v.ladder, 1.0 / k, &opts) {
            Ok(r) => {
                t.row("volume_growth", r.c, "", Some(r.min_margin));
                // Diagnostic only: the finite-difference quotient is not an inequality.
                t.table.row([
                    "volume_growth_derivative".to_string(),
                    num(r.max_derivative_error),
                    String::new(),
                    String::new(),
                ]);
            }
            Err(e) => t.violation(e)?,
        },
        _ => log::warn!("volume growth skipped: no usable relative isoperimetric constant"),
    }

    match isoperimetric_check(minimizer, p.f(), g, v.slack) {
        Ok(r) => t.row("isoperimetric", r.bound, "minimizer.pgm", Some((1.0 + v.slack) * r.margin)),
        Err(e) => t.violation(e)?,
    }

    match comparability_check(minimizer, g) {
        Ok(r) => t.row("comparability", r.ratio, "minimizer.pgm", Some(r.lower_margin.min(r.upper_margin))),
        Err(e) => t.violation(e)?,
    }

    let failures = std::mem::take(&mut t.failures);
    t.table.save(out, "verify.csv")?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::stage(Stage::Verify, failures.join("; ")))
    }
}

/// Cells per side when `[cantor] resolution` is absent.
pub const DEFAULT_CANTOR_RESOLUTION: usize = 257;

pub fn cantor_stage(s: &Scenario, out: &Path) -> Result<(), Failure> {
    let c = s.cantor.as_ref().ok_or_else(|| Failure::Config("cantor: missing".into()))?;
    let fail = |e: CheegerError| Failure::stage(Stage::Cantor, e);
    let spec = CantorSpec::new(c.epsilon, c.depth, Some(c.resolution.unwrap_or(DEFAULT_CANTOR_RESOLUTION))).map_err(|e| Failure::Config(format!("cantor: {e}")))?;
    let d = build_domain(&spec).map_err(fail)?;
    write(out, "cantor_domain.pgm", &pgm_bytes(&d.omega))?;

    let full = gap_bookkeeping(&d.set);
    let raster = boundary_gap_report(&d).map_err(fail)?;
    let mut t = Table::new(&["depth", "exact_cantor_measure", "raster_perimeter", "proxy", "gap"]);
    for row in &full.rows {
        let r = raster.rows.get(row.depth);
        t.row([
            row.depth.to_string(),
            num(row.cantor_measure),
            opt(r.and_then(|r| r.raster_perimeter)),
            opt(r.and_then(|r| r.proxy)),
            num(row.gap),
        ]);
    }
    t.row(["limit".to_string(), num(limit_measure(c.epsilon)), String::new(), String::new(), num(full.limit)]);
    t.save(out, "cantor.csv")?;

    if c.probe {
        let n = spec.grid().map_err(fail)?.nx();
        let probes =
            self_cheeger_probe_adaptive(&spec, c.slack, c.ceiling.unwrap_or(n), dinkelbach_opts(s)).map_err(fail)?;
        let mut t = Table::new(&["resolution", "domain_ratio", "minimizer_ratio", "passed", "converged"]);
        for r in &probes {
            t.row([
                r.resolution.to_string(),
                num(r.domain_ratio),
                num(r.minimizer_ratio),
                r.passed.to_string(),
                r.converged.to_string(),
            ]);
        }
        t.save(out, "cantor_probe.csv")?;
        let last = probes.last().expect("at least one probe");
        if !last.passed {
            return Err(Failure::stage(
                Stage::Cantor,
                format!(
                    "self-Cheeger probe: minimizer ratio {} below (1 - {}) x domain ratio {} at {}²",
                    last.minimizer_ratio, c.slack, last.domain_ratio, last.resolution
                ),
            ));
        }
    }
    Ok(())
}

pub fn oracle_stage(s: &Scenario, p: &CheegerProblem<f64>, out: &Path) -> Result<(), Failure> {
    let fail = |e: CheegerError| Failure::stage(Stage::Oracle, e);
    let o = oracle_solve(p, false, s.solver.oracle_cap).map_err(fail)?;
    let dk = dinkelbach_solve(p, dinkelbach_opts(s)).map_err(fail)?;
    write(out, "oracle_minimizer.pgm", &pgm_bytes(&o.minimizer))?;
    let gap = dk.ratio - o.ratio;
    let mut t = Table::new(&["method", "ratio", "cells"]);
    t.row(["oracle".to_string(), num(o.ratio), o.minimizer.cardinality().to_string()]);
    t.row(["dinkelbach".to_string(), num(dk.ratio), dk.minimizer.cardinality().to_string()]);
    t.row(["gap".to_string(), num(gap), String::new()]);
    t.save(out, "oracle.csv")?;
    let tol = 1e-9 * o.ratio.max(1.0);
    // The cut is exact only for alpha = 1; otherwise a positive gap is expected.
    if gap < -tol || (p.alpha() == 1.0 && gap > tol) {
        return Err(Failure::stage(Stage::Oracle, format!("oracle ratio {} but dinkelbach {}", o.ratio, dk.ratio)));
    }
    Ok(())
}
