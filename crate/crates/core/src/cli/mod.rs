//! Command-line front end: Mathieu tables, spectra, convergence sweeps,
//! eigenfunction grids and the invariant suite.

pub mod output;
pub mod verify;

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::convergence::{eigenvalue_sweep, eigenvector_sweep, fit_rate, geometric_grid, uniform_grid, SweepConfig, SweepKind};
use crate::error::{Error, Result};
use crate::galerkin::{residual_norm, solve, GalerkinConfig};
use crate::geometry::{embed, StripParams};
use crate::mathieu::{char_values, MathieuKind};
use crate::models::{effective_spectrum, fake_spectrum, Spectrum};
use output::{emit, Cell, Format, RunManifest, Table};

#[derive(Debug, Parser)]
#[command(name = "moebius", version, about = "Spectra of quantum particles on the Möbius strip")]
pub struct Cli {
    /// Output encoding.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mathieu characteristic values a_m(q) and b_m(q).
    Mathieu(MathieuArgs),
    /// Eigenvalues of the flat, effective or curved model.
    Spectrum(SpectrumArgs),
    /// Thin-strip convergence sweep.
    Converge(ConvergeArgs),
    /// Probability density of a Galerkin eigenfunction on a grid.
    Eigenfunction(EigenfunctionArgs),
    /// Run the invariant suite.
    Verify,
}

#[derive(Debug, Args)]
pub struct MathieuArgs {
    #[arg(long, default_value_t = -0.25, allow_hyphen_values = true)]
    pub q: f64,
    #[arg(long, default_value_t = 10)]
    pub max_order: u32,
}

#[derive(Debug, Args)]
#[group(id = "radius", multiple = false)]
pub struct RadiusArgs {
    /// Radius of the centre circle.
    #[arg(long = "R", group = "radius", allow_hyphen_values = true)]
    pub r: Option<f64>,
    /// Length 2πR of the centre circle.
    #[arg(long, group = "radius", allow_hyphen_values = true)]
    pub circumference: Option<f64>,
}

impl RadiusArgs {
    fn resolve(&self, default: Option<f64>) -> Result<f64> {
        match (self.r, self.circumference, default) {
            (Some(r), _, _) => Ok(r),
            (None, Some(c), _) => Ok(c / (2.0 * PI)),
            (None, None, Some(r)) => Ok(r),
            (None, None, None) => Err(Error::input("one of --R or --circumference is required")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Fake,
    Effective,
    True,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Half-width of the strip.
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[command(flatten)]
    pub radius: RadiusArgs,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Galerkin basis size (curved model only).
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Longitudinal quadrature order override.
    #[arg(long)]
    pub ms: Option<usize>,
    /// Transverse quadrature order override.
    #[arg(long)]
    pub mu: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Eigenvalue,
    Eigenvector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridArg {
    Uniform,
    Geometric,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long, value_enum, default_value_t = KindArg::Eigenvalue)]
    pub kind: KindArg,
    #[command(flatten)]
    pub radius: RadiusArgs,
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    pub a_min: f64,
    #[arg(long, default_value_t = 1.5)]
    pub a_max: f64,
    #[arg(long, default_value_t = 30)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = GridArg::Uniform)]
    pub grid: GridArg,
    /// Eigenpairs compared per half-width; 20 for eigenvalues, 5 for eigenvectors.
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long = "N", default_value_t = 72)]
    pub n: usize,
    /// Half-width window for the fitted rates.
    #[arg(long, default_value_t = 0.05)]
    pub fit_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub fit_max: f64,
}

#[derive(Debug, Args)]
pub struct EigenfunctionArgs {
    /// One-based eigenpair index.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[command(flatten)]
    pub radius: RadiusArgs,
    #[arg(long = "N", default_value_t = 96)]
    pub n: usize,
    /// Export grid as `MsxMu`, endpoints included.
    #[arg(long, default_value = "129x33")]
    pub grid: String,
    /// Add the three-space point of each grid node.
    #[arg(long)]
    pub embed3d: bool,
    #[arg(long)]
    pub ms: Option<usize>,
    #[arg(long)]
    pub mu: Option<usize>,
}

fn parameters(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

pub fn cmd_mathieu(args: &MathieuArgs) -> Result<(Table, Map<String, Value>)> {
    let vals = char_values(args.q, args.max_order)?;
    let mut t = Table::new(vec!["m", "a_m", "b_m"]);
    for m in 0..=args.max_order {
        let find = |kind| vals.iter().find(|c| c.kind == kind && c.order == m).map(|c| c.value);
        t.push(vec![
            Cell::from(m as usize),
            find(MathieuKind::Ce).map_or(Cell::Empty, Cell::from),
            find(MathieuKind::Se).map_or(Cell::Empty, Cell::from),
        ]);
    }
    Ok((t, parameters(json!({"q": args.q, "max_order": args.max_order}))))
}

fn spectrum_table(s: &Spectrum) -> Table {
    let mut t = Table::new(vec!["index", "value", "multiplicity", "mode"]);
    let mut index = 0usize;
    for e in &s.entries {
        for md in &e.modes {
            if index == s.count {
                return t;
            }
            index += 1;
            t.push(vec![
                Cell::from(index),
                Cell::from(e.value),
                Cell::from(e.multiplicity()),
                Cell::from(md.to_string()),
            ]);
        }
    }
    t
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<(Table, Map<String, Value>)> {
    let p = StripParams::new(args.a, args.radius.resolve(None)?)?;
    let mut params = parameters(json!({
        "model": format!("{:?}", args.model).to_lowercase(),
        "a": p.a,
        "R": p.r,
        "count": args.count,
    }));
    let table = match args.model {
        ModelArg::Fake => spectrum_table(&fake_spectrum(&p, args.count)?),
        ModelArg::Effective => spectrum_table(&effective_spectrum(&p, args.count)?),
        ModelArg::True => {
            let n = args.n.ok_or_else(|| Error::input("--model true requires --N"))?;
            if args.count > n {
                return Err(Error::input(format!("count {} exceeds basis size {n}", args.count)));
            }
            let mut cfg = GalerkinConfig::new(p, n);
            cfg.ms = args.ms;
            cfg.mu = args.mu;
            let sol = solve(&cfg)?;
            params.insert("N".into(), json!(n));
            params.insert("ms".into(), json!(sol.discretisation.grid.ms()));
            params.insert("mu".into(), json!(sol.discretisation.grid.mu()));
            let mut t = Table::new(vec!["index", "value", "residual"]);
            for k in 0..args.count {
                t.push(vec![
                    Cell::from(k + 1),
                    Cell::from(sol.eigenvalues[k]),
                    Cell::from(residual_norm(&sol, k)?),
                ]);
            }
            t
        }
    };
    Ok((table, params))
}

pub fn cmd_converge(args: &ConvergeArgs) -> Result<(Table, Map<String, Value>)> {
    let r = args.radius.resolve(Some(18.0 / (2.0 * PI)))?;
    let grid = match args.grid {
        GridArg::Uniform => uniform_grid(args.a_min, args.a_max, args.steps)?,
        GridArg::Geometric => geometric_grid(args.a_min, args.a_max, args.steps)?,
    };
    let kind = match args.kind {
        KindArg::Eigenvalue => SweepKind::Eigenvalue,
        KindArg::Eigenvector => SweepKind::Eigenvector,
    };
    let k = args.k.unwrap_or(match kind {
        SweepKind::Eigenvalue => 20,
        SweepKind::Eigenvector => 5,
    });
    let cfg = SweepConfig::new(r, grid.clone(), k, args.n);
    let sweep = match kind {
        SweepKind::Eigenvalue => eigenvalue_sweep(&cfg)?,
        SweepKind::Eigenvector => eigenvector_sweep(&cfg)?,
    };
    let mut t = Table::new(vec![
        "row",
        "a",
        "n",
        "effective",
        "galerkin",
        "eigenvalue_ratio",
        "distance",
        "distance_ratio",
        "slope",
    ]);
    for p in &sweep.points {
        for n in 0..k {
            let (d, dr) = match &p.distances {
                Some(d) => (Cell::from(d[n]), Cell::from(p.ratio(SweepKind::Eigenvector, n))),
                None => (Cell::Empty, Cell::Empty),
            };
            t.push(vec![
                Cell::from("point"),
                Cell::from(p.a),
                Cell::from(n + 1),
                Cell::from(p.effective[n]),
                Cell::from(p.galerkin[n]),
                Cell::from(p.eigenvalue_ratios[n]),
                d,
                dr,
                Cell::Empty,
            ]);
        }
    }
    let window = (args.fit_min, args.fit_max);
    let in_window = grid.iter().filter(|&&a| a >= window.0 && a <= window.1).count();
    if in_window >= 4 {
        for n in 0..k {
            let slope = fit_rate(&sweep, n, window)?;
            let mut row = vec![Cell::from("slope"), Cell::Empty, Cell::from(n + 1)];
            row.extend(std::iter::repeat_n(Cell::Empty, 5));
            row.push(Cell::from(slope));
            t.push(row);
        }
    } else {
        eprintln!("note: only {in_window} half-widths in the fit window; slopes omitted");
    }
    let params = parameters(json!({
        "kind": format!("{:?}", args.kind).to_lowercase(),
        "R": r,
        "grid": format!("{:?}", args.grid).to_lowercase(),
        "a_grid": grid,
        "K": k,
        "N": args.n,
        "fit_window": [window.0, window.1],
    }));
    Ok((t, params))
}

fn parse_grid(spec: &str) -> Result<(usize, usize)> {
    let bad = || Error::input(format!("grid must look like 64x32 with both sizes >= 2, got {spec:?}"));
    let (a, b) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
    let ms: usize = a.trim().parse().map_err(|_| bad())?;
    let mu: usize = b.trim().parse().map_err(|_| bad())?;
    if ms < 2 || mu < 2 {
        return Err(bad());
    }
    Ok((ms, mu))
}

pub fn cmd_eigenfunction(args: &EigenfunctionArgs) -> Result<(Table, Map<String, Value>)> {
    let p = StripParams::new(args.a, args.radius.resolve(None)?)?;
    let (gs, gu) = parse_grid(&args.grid)?;
    if args.k == 0 || args.k > args.n {
        return Err(Error::input(format!("index k must satisfy 1 <= k <= N, got k={} N={}", args.k, args.n)));
    }
    let mut cfg = GalerkinConfig::new(p, args.n);
    cfg.ms = args.ms;
    cfg.mu = args.mu;
    let sol = solve(&cfg)?;
    let k = args.k - 1;
    let mut cols = vec!["s", "u", "value", "density"];
    if args.embed3d {
        cols.extend(["x", "y", "z"]);
    }
    let mut t = Table::new(cols);
    for i in 0..gs {
        let s = p.length() * i as f64 / (gs - 1) as f64;
        for j in 0..gu {
            let u = -1.0 + 2.0 * j as f64 / (gu - 1) as f64;
            let v = sol.eval(k, s, u);
            let mut row = vec![Cell::from(s), Cell::from(u), Cell::from(v), Cell::from(v * v)];
            if args.embed3d {
                row.extend(embed(&p, s, p.a * u).map(Cell::from));
            }
            t.push(row);
        }
    }
    let params = parameters(json!({
        "k": args.k,
        "a": p.a,
        "R": p.r,
        "N": args.n,
        "ms": sol.discretisation.grid.ms(),
        "mu": sol.discretisation.grid.mu(),
        "grid": [gs, gu],
        "embed3d": args.embed3d,
        "eigenvalue": sol.eigenvalues[k],
    }));
    Ok((t, params))
}

/// Invariant report; the flag is true when every check passed.
pub fn cmd_verify(fx: &verify::Fixtures) -> (Table, bool) {
    let checks = verify::run_checks(fx);
    let mut t = Table::new(vec!["module", "invariant", "status", "observed", "expected"]);
    for c in &checks {
        t.push(vec![
            Cell::from(c.module),
            Cell::from(c.invariant),
            Cell::from(if c.passed { "pass" } else { "FAIL" }),
            if c.observed.is_finite() { Cell::from(c.observed) } else { Cell::Empty },
            Cell::from(c.expected.clone()),
        ]);
    }
    (t, checks.iter().all(|c| c.passed))
}

fn check_seedless() -> Result<()> {
    match std::env::var("MOEBIUS_SEEDLESS") {
        Ok(v) if v != "1" => Err(Error::input(format!(
            "MOEBIUS_SEEDLESS may only be set to 1 (no randomness is used), got {v:?}"
        ))),
        _ => Ok(()),
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    check_seedless()?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::input("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::input(format!("cannot configure thread pool: {e}")))?;
    }
    let (name, table, params, ok) = match &cli.command {
        Command::Mathieu(a) => {
            let (t, p) = cmd_mathieu(a)?;
            ("mathieu", t, p, true)
        }
        Command::Spectrum(a) => {
            let (t, p) = cmd_spectrum(a)?;
            ("spectrum", t, p, true)
        }
        Command::Converge(a) => {
            let (t, p) = cmd_converge(a)?;
            ("converge", t, p, true)
        }
        Command::Eigenfunction(a) => {
            let (t, p) = cmd_eigenfunction(a)?;
            ("eigenfunction", t, p, true)
        }
        Command::Verify => {
            let (t, ok) = cmd_verify(&verify::Fixtures::default());
            ("verify", t, Map::new(), ok)
        }
    };
    let manifest = RunManifest::new(name, params)?;
    emit(&table, &manifest, cli.format, cli.output.as_deref())?;
    Ok(ok)
}

/// Parses the command line, runs it and returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("error: invariant checks failed");
            3
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("64x32").unwrap(), (64, 32));
        assert!(parse_grid("64").is_err());
        assert!(parse_grid("1x5").is_err());
    }

    #[test]
    fn radius_resolution() {
        let r = RadiusArgs {
            r: None,
            circumference: Some(13.2),
        };
        assert_eq!(r.resolve(None).unwrap(), 13.2 / (2.0 * PI));
        let none = RadiusArgs {
            r: None,
            circumference: None,
        };
        assert!(none.resolve(None).is_err());
        assert_eq!(none.resolve(Some(2.0)).unwrap(), 2.0);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
