//! Benchmark driver: run configuration, time stepping with diagnostics,
//! convergence sweeps, and deterministic CSV/manifest output.

use crate::basis::BasisSpec;
use crate::field::{fmt_e17, neumaier_sum, project_1d, project_2d, DGField1D, DGField2D, Norms};
use crate::flows::{catalog, BenchmarkProblem};
use crate::grid::{Grid1D, Grid2D};
use crate::limiters::{bp_filter, minmod_limiter};
use crate::update::{step1d, step2d};
use crate::upstream::CellMode;
use crate::{Result, SldgError};
use std::path::Path;
use std::time::Instant;

/// Limiter selection, applied each step in the order minmod then bp.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LimiterChoice {
    #[default]
    None,
    Bp,
    Minmod,
    MinmodBp,
}

impl std::str::FromStr for LimiterChoice {
    type Err = SldgError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "bp" => Ok(Self::Bp),
            "minmod" => Ok(Self::Minmod),
            "minmod+bp" => Ok(Self::MinmodBp),
            other => Err(SldgError::InvalidInput(format!("unknown limiter '{other}'"))),
        }
    }
}

impl std::fmt::Display for LimiterChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::None => "none",
            Self::Bp => "bp",
            Self::Minmod => "minmod",
            Self::MinmodBp => "minmod+bp",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub problem: String,
    pub degree: usize,
    /// Upstream cell shape (2D only).
    pub mode: CellMode,
    pub nx: usize,
    /// Defaults to `nx` when zero (2D only).
    pub ny: usize,
    /// `dt = cfl * dx`.
    pub cfl: f64,
    /// `None` runs to the problem's default final time.
    pub t_final: Option<f64>,
    pub limiter: LimiterChoice,
    pub tvb_m: f64,
    pub snapshot_times: Vec<f64>,
    pub trace_substeps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "linear2d".into(),
            degree: 2,
            mode: CellMode::Qc,
            nx: 40,
            ny: 0,
            cfl: 0.5,
            t_final: None,
            limiter: LimiterChoice::None,
            tvb_m: 1.0,
            snapshot_times: Vec::new(),
            trace_substeps: 1,
        }
    }
}

impl RunConfig {
    /// Parses a flat `key = value` config file; `#` starts a comment.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SldgError::InvalidInput(format!("config line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |k: &str, v: &str| SldgError::InvalidInput(format!("bad value '{v}' for {k}"));
        match key {
            "problem" => self.problem = value.to_string(),
            "degree" | "k" => self.degree = value.parse().map_err(|_| bad(key, value))?,
            "mode" | "scheme" => {
                self.mode = match value {
                    "quad" => CellMode::Quad,
                    "qc" => CellMode::Qc,
                    _ => return Err(bad(key, value)),
                }
            }
            "nx" | "n" => self.nx = value.parse().map_err(|_| bad(key, value))?,
            "ny" => self.ny = value.parse().map_err(|_| bad(key, value))?,
            "cfl" => self.cfl = value.parse().map_err(|_| bad(key, value))?,
            "t-final" | "t_final" => {
                self.t_final = Some(value.parse().map_err(|_| bad(key, value))?)
            }
            "limiter" => self.limiter = value.parse()?,
            "tvb-m" | "tvb_m" => self.tvb_m = value.parse().map_err(|_| bad(key, value))?,
            "trace-substeps" | "trace_substeps" => {
                self.trace_substeps = value.parse().map_err(|_| bad(key, value))?
            }
            "snapshot-times" | "snapshot_times" => {
                self.snapshot_times = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse().map_err(|_| bad(key, value)))
                    .collect::<Result<_>>()?;
            }
            other => {
                return Err(SldgError::InvalidInput(format!("unknown config key '{other}'")))
            }
        }
        Ok(())
    }

    pub fn kv_echo(&self) -> String {
        let mut s = String::new();
        use std::fmt::Write;
        writeln!(s, "problem = {}", self.problem).unwrap();
        writeln!(s, "degree = {}", self.degree).unwrap();
        writeln!(
            s,
            "mode = {}",
            if self.mode == CellMode::Qc { "qc" } else { "quad" }
        )
        .unwrap();
        writeln!(s, "nx = {}", self.nx).unwrap();
        writeln!(s, "ny = {}", self.resolved_ny()).unwrap();
        writeln!(s, "cfl = {}", self.cfl).unwrap();
        if let Some(t) = self.t_final {
            writeln!(s, "t_final = {t}").unwrap();
        }
        writeln!(s, "limiter = {}", self.limiter).unwrap();
        writeln!(s, "tvb_m = {}", self.tvb_m).unwrap();
        writeln!(s, "trace_substeps = {}", self.trace_substeps).unwrap();
        s
    }

    pub fn resolved_ny(&self) -> usize {
        if self.ny == 0 {
            self.nx
        } else {
            self.ny
        }
    }
}

/// Relative mass error over time: `(m(t) - m(0)) / m(0)`, with the
/// denominator replaced by the initial L1 mass when the signed mass is
/// essentially zero (sinusoidal data).
#[derive(Clone, Debug, Default)]
pub struct MassSeries {
    pub samples: Vec<(f64, f64)>,
    pub mass0: f64,
    denom: f64,
}

impl MassSeries {
    fn new(mass0: f64, l1_mass: f64) -> Self {
        let denom = if mass0.abs() > 1e-8 * l1_mass.max(1e-300) {
            mass0.abs()
        } else {
            l1_mass.max(1e-300)
        };
        Self { samples: vec![(0.0, 0.0)], mass0, denom }
    }

    fn record(&mut self, t: f64, mass: f64) {
        self.samples.push((t, (mass - self.mass0) / self.denom));
    }

    pub fn max_abs_error(&self) -> f64 {
        self.samples.iter().map(|(_, e)| e.abs()).fold(0.0, f64::max)
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("t,rel_mass_error\n");
        for (t, e) in &self.samples {
            s.push_str(&fmt_e17(*t));
            s.push(',');
            s.push_str(&fmt_e17(*e));
            s.push('\n');
        }
        s
    }
}

/// Everything a single benchmark run produces.
#[derive(Debug)]
pub struct RunResult {
    pub problem: BenchmarkProblem,
    pub field2d: Option<DGField2D>,
    pub field1d: Option<DGField1D>,
    pub mass: MassSeries,
    /// Error norms against the exact solution, when known at the final time.
    pub norms: Option<Norms>,
    pub steps: usize,
    pub area_flagged: usize,
    pub wall_seconds: f64,
    /// `(time, csv)` snapshots captured at the requested times.
    pub snapshots: Vec<(f64, String)>,
}

/// Caps rayon's worker count from `SLDG_THREADS` (first call wins).
pub fn configure_threads() {
    if let Ok(v) = std::env::var("SLDG_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}

/// Runs one configuration from `t = 0` to the final time, applying the
/// selected limiters each step and recording the mass series.
pub fn run(config: &RunConfig) -> Result<RunResult> {
    configure_threads();
    let started = Instant::now();
    let problem = catalog(&config.problem)?;
    let spec = BasisSpec::new(config.degree)?;
    if !(config.cfl > 0.0) {
        return Err(SldgError::InvalidInput(format!("cfl must be positive, got {}", config.cfl)));
    }
    let t_final = config.t_final.unwrap_or(problem.default_t_final);
    if t_final < 0.0 {
        return Err(SldgError::InvalidInput(format!("negative final time {t_final}")));
    }

    let mut snapshots: Vec<(f64, String)> = Vec::new();
    let mut snap_queue = config.snapshot_times.clone();
    snap_queue.sort_by(f64::total_cmp);

    if problem.dim == 1 {
        let grid = Grid1D::new(problem.domain[0], problem.domain[1], config.nx)?;
        let dt0 = config.cfl * grid.dx;
        let mut u = project_1d(|x| problem.initial(x, 0.0), &grid, spec)?;
        let l1_mass = (0..grid.n_cells)
            .map(|i| u.cell_average(i).abs() * grid.dx)
            .sum::<f64>();
        let mut mass = MassSeries::new(u.total_mass(), l1_mass);
        let mut steps = 0usize;
        while u.time < t_final - 1e-12 * t_final.max(1.0) {
            let dt = dt0.min(t_final - u.time);
            u = step1d(&u, dt, &problem.field, config.trace_substeps)?;
            steps += 1;
            mass.record(u.time, u.total_mass());
        }
        let norms = problem
            .has_exact_at(u.time)
            .then(|| u.error_norms(|x| problem.exact(x, 0.0, u.time).unwrap()));
        return Ok(RunResult {
            problem,
            field2d: None,
            field1d: Some(u),
            mass,
            norms,
            steps,
            area_flagged: 0,
            wall_seconds: started.elapsed().as_secs_f64(),
            snapshots,
        });
    }

    let grid = Grid2D::new(problem.domain, config.nx, config.resolved_ny())?;
    let dt0 = config.cfl * grid.dx;
    let mut u = project_2d(|x, y| problem.initial(x, y), &grid, spec)?;
    apply_limiters(config, &mut u)?;
    let l1_mass = (0..grid.n_cells())
        .map(|f| u.cell_average(grid.cell_at(f)).abs() * grid.cell_area())
        .sum::<f64>();
    let mut mass = MassSeries::new(u.total_mass(), l1_mass);
    let mut steps = 0usize;
    let mut area_flagged = 0usize;
    take_snapshots(&mut snap_queue, &mut snapshots, &u);
    while u.time < t_final - 1e-12 * t_final.max(1.0) {
        let dt = dt0.min(t_final - u.time);
        let (next, stats) = step2d(&u, dt, &problem.field, config.mode, config.trace_substeps)?;
        u = next;
        apply_limiters(config, &mut u)?;
        steps += 1;
        area_flagged += stats.area_flagged;
        mass.record(u.time, u.total_mass());
        take_snapshots(&mut snap_queue, &mut snapshots, &u);
    }
    let norms = problem
        .has_exact_at(u.time)
        .then(|| u.error_norms(|x, y| problem.exact(x, y, u.time).unwrap()));
    Ok(RunResult {
        problem,
        field2d: Some(u),
        field1d: None,
        mass,
        norms,
        steps,
        area_flagged,
        wall_seconds: started.elapsed().as_secs_f64(),
        snapshots,
    })
}

fn apply_limiters(config: &RunConfig, u: &mut DGField2D) -> Result<()> {
    if matches!(config.limiter, LimiterChoice::Minmod | LimiterChoice::MinmodBp) {
        *u = minmod_limiter(u, config.tvb_m);
    }
    if matches!(config.limiter, LimiterChoice::Bp | LimiterChoice::MinmodBp) {
        let (v, _) = bp_filter(u)?;
        *u = v;
    }
    Ok(())
}

fn take_snapshots(queue: &mut Vec<f64>, out: &mut Vec<(f64, String)>, u: &DGField2D) {
    while let Some(&ts) = queue.first() {
        if ts <= u.time + 1e-9 * u.time.abs().max(1.0) {
            out.push((u.time, u.snapshot_csv()));
            queue.remove(0);
        } else {
            break;
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConvergenceRow {
    pub n: usize,
    pub norms: Norms,
    pub order_l1: Option<f64>,
    pub order_l2: Option<f64>,
    pub order_linf: Option<f64>,
}

/// Per-mesh errors with observed orders between consecutive doublings.
#[derive(Clone, Debug, Default)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("n,L1,orderL1,L2,orderL2,Linf,orderLinf\n");
        for r in &self.rows {
            let ord = |o: Option<f64>| o.map(|v| fmt_e17(v)).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.n,
                fmt_e17(r.norms.l1),
                ord(r.order_l1),
                fmt_e17(r.norms.l2),
                ord(r.order_l2),
                fmt_e17(r.norms.linf),
                ord(r.order_linf),
            ));
        }
        s
    }

    /// Observed order of the last doubling, in the given norm.
    pub fn final_order_l2(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.order_l2)
    }
}

/// Runs `levels` mesh-doubled configurations starting at `config.nx` and
/// tabulates errors and orders.
pub fn converge(config: &RunConfig, levels: usize) -> Result<ConvergenceReport> {
    let mut report = ConvergenceReport::default();
    let mut prev: Option<Norms> = None;
    for level in 0..levels {
        let mut cfg = config.clone();
        cfg.nx = config.nx << level;
        cfg.ny = if config.ny == 0 { 0 } else { config.ny << level };
        let result = run(&cfg)?;
        let norms = result.norms.ok_or_else(|| {
            SldgError::InvalidInput(format!(
                "problem '{}' has no exact solution at the final time",
                config.problem
            ))
        })?;
        let order = |e0: f64, e1: f64| (e0 / e1).log2();
        report.rows.push(ConvergenceRow {
            n: cfg.nx,
            norms,
            order_l1: prev.map(|p| order(p.l1, norms.l1)),
            order_l2: prev.map(|p| order(p.l2, norms.l2)),
            order_linf: prev.map(|p| order(p.linf, norms.linf)),
        });
        prev = Some(norms);
    }
    Ok(report)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| SldgError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `mass.csv`, `snapshot_<t>.csv`, `meta.txt`, and, when a
/// convergence report is given, `convergence.csv`.
pub fn emit_outputs(
    config: &RunConfig,
    result: &RunResult,
    convergence: Option<&ConvergenceReport>,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| SldgError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write_file(dir, "mass.csv", &result.mass.csv())?;
    if let Some(report) = convergence {
        write_file(dir, "convergence.csv", &report.csv())?;
    }
    for (t, csv) in &result.snapshots {
        write_file(dir, &format!("snapshot_{t}.csv"), csv)?;
    }
    if let Some(u) = &result.field2d {
        write_file(dir, "final.csv", &u.snapshot_csv())?;
    }

    let mut meta = String::new();
    use std::fmt::Write;
    writeln!(meta, "version = sldg {}", env!("CARGO_PKG_VERSION")).unwrap();
    meta.push_str(&config.kv_echo());
    writeln!(meta, "steps = {}", result.steps).unwrap();
    writeln!(meta, "wall_seconds = {}", result.wall_seconds).unwrap();
    writeln!(meta, "max_rel_mass_error = {}", fmt_e17(result.mass.max_abs_error())).unwrap();
    writeln!(meta, "area_flagged = {}", result.area_flagged).unwrap();
    if let Some(n) = &result.norms {
        writeln!(meta, "l1 = {}", fmt_e17(n.l1)).unwrap();
        writeln!(meta, "l2 = {}", fmt_e17(n.l2)).unwrap();
        writeln!(meta, "linf = {}", fmt_e17(n.linf)).unwrap();
    }
    write_file(dir, "meta.txt", &meta)
}

/// Total variation of the mass series, for diagnostics.
pub fn mass_drift(series: &MassSeries) -> f64 {
    neumaier_sum(series.samples.windows(2).map(|w| (w[1].1 - w[0].1).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_final_time_returns_projection() {
        let cfg = RunConfig {
            problem: "linear2d".into(),
            nx: 8,
            t_final: Some(0.0),
            ..Default::default()
        };
        let r = run(&cfg).unwrap();
        assert_eq!(r.steps, 0);
        let u = r.field2d.unwrap();
        assert_eq!(u.time, 0.0);
        // matches a direct projection
        let n = u.error_norms(|x, y| (x + y).sin());
        assert!(n.l2 < 1e-2);
    }

    #[test]
    fn config_roundtrip_through_kv_text() {
        let text = "\
# benchmark configuration
problem = swirl_cos
degree = 2
mode = qc
nx = 20
cfl = 2.5      # large time step
limiter = minmod+bp
tvb-m = 10
snapshot-times = 0.5, 1.0
";
        let cfg = RunConfig::from_kv_text(text).unwrap();
        assert_eq!(cfg.problem, "swirl_cos");
        assert_eq!(cfg.degree, 2);
        assert_eq!(cfg.mode, CellMode::Qc);
        assert_eq!(cfg.nx, 20);
        assert_eq!(cfg.cfl, 2.5);
        assert_eq!(cfg.limiter, LimiterChoice::MinmodBp);
        assert_eq!(cfg.tvb_m, 10.0);
        assert_eq!(cfg.snapshot_times, vec![0.5, 1.0]);
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        assert!(RunConfig::from_kv_text("bogus = 1").is_err());
    }

    #[test]
    fn kv_echo_reparses_to_the_same_config() {
        let mut cfg = RunConfig::default();
        cfg.problem = "rigid2d".into();
        cfg.cfl = 1.25;
        cfg.t_final = Some(3.0);
        let echoed = RunConfig::from_kv_text(&cfg.kv_echo()).unwrap();
        assert_eq!(echoed.problem, cfg.problem);
        assert_eq!(echoed.cfl, cfg.cfl);
        assert_eq!(echoed.t_final, cfg.t_final);
    }
}
