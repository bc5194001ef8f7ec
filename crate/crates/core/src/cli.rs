//! Batch driver behind the `cdft` binary.
//!
//! Every run writes exactly one JSON report (atomically) and returns the
//! process exit status: 0 success, 1 a verdict came out false, 2 numerical
//! failure, 3 I/O or configuration error.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::convex::{self, PotentialFamily};
use crate::density::{self, DensityPair, Potentials, Tolerances};
use crate::det;
use crate::error::{Error, Result};
use crate::functionals::{self as fx, FunctionalName, FunctionalValue};
use crate::grid::{GridSpec, VectorField};
use crate::io::{self, Encoding, PairManifest};
use crate::plot::{self, Panel, Series};
use crate::solver::{self, Scenario};
use crate::value::{Extended, InequalityAudit};

pub const REPORT_FORMAT: &str = "CDFT-REPORT v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Check N-representability of density/current pairs.
    Validate,
    /// Vorticity curl(jp / rho) of 3D pairs.
    Vorticity,
    /// Build the determinantal orbitals and compare both kinetic evaluations.
    BuildDet,
    /// Functional values and every bound chain for a curl-free pair.
    Bounds,
    /// Solve a one-dimensional lattice scenario.
    Groundstate,
    /// Variational principle at the ground pair and at supplied pairs.
    Variational,
    /// Sampled Legendre transform of a one-particle pair.
    Legendre,
    /// Convex-envelope audit over several one-particle pairs.
    Envelope,
    /// Euler-Lagrange residuals against the scenario potentials.
    Euler,
    /// Midpoint-style convexity probe of a functional between two pairs.
    Probe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeFunctional {
    J0,
    J1,
    Jlambda,
    /// One-particle `Q = J1 + J0`.
    Q,
}

#[derive(Debug, Parser)]
#[command(name = "cdft", version, about = "Current-density functional audits on uniform grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Pair manifests or scenario files; repeat for several.
    #[arg(long, global = true)]
    pub input: Vec<PathBuf>,
    /// Report path.
    #[arg(long, global = true, default_value = "report.json")]
    pub output: PathBuf,
    /// Seed override for sampled searches.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Grid override for scenarios, `lo:hi:cells`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Particle number; defaults to the manifest value.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Potential family JSON for `legendre` and `envelope`.
    #[arg(long, global = true)]
    pub family: Option<PathBuf>,
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// SVG file for line plots of 1D fields and audit margins.
    #[arg(long, global = true)]
    pub plot: Option<PathBuf>,
    /// Directory to store the ground pair computed by `groundstate`.
    #[arg(long, global = true)]
    pub save_pair: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "q")]
    pub functional: ProbeFunctional,
    #[arg(long = "tol.mass_rel", global = true)]
    pub tol_mass_rel: Option<f64>,
    #[arg(long = "tol.neg_rel", global = true)]
    pub tol_neg_rel: Option<f64>,
    #[arg(long = "tol.rho_floor_rel", global = true)]
    pub tol_rho_floor_rel: Option<f64>,
    #[arg(long = "tol.j_floor_rel", global = true)]
    pub tol_j_floor_rel: Option<f64>,
    #[arg(long = "tol.boundary_mass_rel", global = true)]
    pub tol_boundary_mass_rel: Option<f64>,
    #[arg(long = "tol.curl_rel", global = true)]
    pub tol_curl_rel: Option<f64>,
    #[arg(long = "tol.path_rel", global = true)]
    pub tol_path_rel: Option<f64>,
}

impl Cli {
    fn tolerances(&self, base: Tolerances) -> Result<Tolerances> {
        let mut t = base;
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut t.mass_rel, self.tol_mass_rel);
        set(&mut t.neg_rel, self.tol_neg_rel);
        set(&mut t.rho_floor_rel, self.tol_rho_floor_rel);
        set(&mut t.j_floor_rel, self.tol_j_floor_rel);
        set(&mut t.boundary_mass_rel, self.tol_boundary_mass_rel);
        set(&mut t.curl_rel, self.tol_curl_rel);
        set(&mut t.path_rel, self.tol_path_rel);
        t.check()?;
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub exit_code: i32,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub version: String,
    pub command: Command,
    pub args: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub tolerances: Tolerances,
    pub verdict: bool,
    pub error: Option<ErrorInfo>,
    pub values: Vec<FunctionalValue>,
    pub audits: Vec<InequalityAudit>,
    pub result: Value,
    /// Seconds; the only field that differs between identical runs.
    pub wall_time_s: f64,
}

/// Everything a command produces before the report is assembled.
#[derive(Default)]
struct Outcome {
    inputs: Vec<InputDigest>,
    tolerances: Tolerances,
    verdict: bool,
    values: Vec<FunctionalValue>,
    audits: Vec<InequalityAudit>,
    result: Value,
    fields: Vec<(String, Vec<f64>, Vec<(String, Vec<f64>)>)>,
}

impl Outcome {
    fn new(tol: Tolerances) -> Self {
        Outcome {
            tolerances: tol,
            verdict: true,
            result: Value::Null,
            ..Default::default()
        }
    }

    fn audit(&mut self, a: InequalityAudit) {
        self.verdict &= a.pass;
        self.audits.push(a);
    }

    fn audits(&mut self, list: Vec<InequalityAudit>) {
        for a in list {
            self.audit(a);
        }
    }

    fn digest(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path)?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: format!("{:x}", Sha256::digest(&bytes)),
        });
        Ok(())
    }

    /// Records a 1D pair for plotting.
    fn plot_pair(&mut self, title: &str, p: &DensityPair) {
        if p.grid().dim() == 1 {
            let x = p.grid().coords(0);
            self.fields.push((
                title.to_string(),
                x,
                vec![
                    ("rho".into(), p.rho.values().to_vec()),
                    ("jp".into(), p.jp.values().to_vec()),
                ],
            ));
        }
    }
}

/// Parses `args` (without the program name) and runs the command.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(std::iter::once("cdft".to_string()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let start = Instant::now();
    let outcome = execute(&cli);
    let (outcome, error) = match outcome {
        Ok(o) => (o, None),
        Err(e) => {
            eprintln!("cdft: {e}");
            let mut o = Outcome::new(cli.tolerances(Tolerances::default()).unwrap_or_default());
            o.verdict = false;
            for p in &cli.input {
                if o.digest(p).is_err() {
                    break;
                }
            }
            let info = ErrorInfo {
                exit_code: e.exit_code(),
                message: e.to_string(),
            };
            (o, Some(info))
        }
    };
    let code = match &error {
        Some(e) => e.exit_code,
        None if !outcome.verdict => 1,
        None => 0,
    };
    let plot_result = match &cli.plot {
        Some(path) => write_plot(path, &outcome),
        None => Ok(()),
    };
    let report = Report {
        format: REPORT_FORMAT.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: cli.command,
        args,
        inputs: outcome.inputs,
        tolerances: outcome.tolerances,
        verdict: outcome.verdict,
        error,
        values: outcome.values,
        audits: outcome.audits,
        result: outcome.result,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    if let Err(e) = write_report(&cli.output, &report).and(plot_result) {
        eprintln!("cdft: {e}");
        return 3;
    }
    code
}

/// Caps the rayon pool at `CDFT_THREADS` when set.
fn configure_threads() {
    if let Some(n) = std::env::var("CDFT_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        if n > 0 {
            // A pool may already exist when the driver runs in-process twice.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

pub fn write_report(path: &Path, report: &Report) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(report)?;
    bytes.push(b'\n');
    io::write_atomic(path, &bytes)
}

fn write_plot(path: &Path, o: &Outcome) -> Result<()> {
    let mut panels = Vec::new();
    for (title, x, series) in &o.fields {
        panels.push(Panel::Lines {
            title: title.clone(),
            x,
            series: series
                .iter()
                .map(|(label, y)| Series { label, y })
                .collect(),
        });
    }
    if !o.audits.is_empty() {
        panels.push(Panel::Margins {
            title: "audit margins".into(),
            audits: &o.audits,
        });
    }
    io::write_atomic(path, plot::render(&panels).as_bytes())
}

fn execute(cli: &Cli) -> Result<Outcome> {
    match cli.command {
        Command::Validate => validate(cli),
        Command::Vorticity => vorticity(cli),
        Command::BuildDet => build_det(cli),
        Command::Bounds => bounds(cli),
        Command::Groundstate => groundstate(cli),
        Command::Variational => variational(cli),
        Command::Legendre => legendre(cli),
        Command::Envelope => envelope(cli),
        Command::Euler => euler(cli),
        Command::Probe => probe(cli),
    }
}

fn need_inputs(cli: &Cli, min: usize, what: &str) -> Result<()> {
    if cli.input.len() < min {
        return Err(Error::Config(format!("{what}: expected at least {min} --input file(s)")));
    }
    Ok(())
}

/// Loads every `--input` as a pair manifest and digests it with its fields.
fn load_pairs(cli: &Cli, o: &mut Outcome) -> Result<Vec<(DensityPair, PairManifest)>> {
    let mut out = Vec::new();
    for path in &cli.input {
        let (p, m) = io::load_pair(path)?;
        o.digest(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        o.digest(&base.join(&m.rho))?;
        o.digest(&base.join(&m.jp))?;
        out.push((p, m));
    }
    Ok(out)
}

fn base_tolerances(cli: &Cli) -> Tolerances {
    // A pair manifest may carry tolerances; the first one wins.
    cli.input
        .first()
        .and_then(|p| fs::read_to_string(p).ok())
        .and_then(|t| serde_json::from_str::<Value>(&t).ok())
        .and_then(|v| v.get("tolerances").cloned())
        .and_then(|v| serde_json::from_value(v).ok())
        .unwrap_or_default()
}

fn setup(cli: &Cli) -> Result<Outcome> {
    Ok(Outcome::new(cli.tolerances(base_tolerances(cli))?))
}

fn particle_number(cli: &Cli, m: &PairManifest) -> usize {
    cli.n.unwrap_or(m.n)
}

fn value(name: FunctionalName, v: Extended) -> FunctionalValue {
    FunctionalValue::new(name, v)
}

fn validate(cli: &Cli) -> Result<Outcome> {
    need_inputs(cli, 1, "validate")?;
    let mut o = setup(cli)?;
    let pairs = load_pairs(cli, &mut o)?;
    let mut reports = Vec::new();
    for (p, m) in &pairs {
        let r = density::validate_pair(p, particle_number(cli, m), &o.tolerances);
        o.verdict &= r.verdict;
        o.values.push(value(FunctionalName::J1, Extended::from_f64(r.j1_value)));
        o.values.push(value(FunctionalName::J0, r.j0_value));
        o.plot_pair("pair", p);
        reports.push(r);
    }
    o.result = json!({ "reports": reports });
    Ok(o)
}

fn vorticity(cli: &Cli) -> Result<Outcome> {
    need_inputs(cli, 1, "vorticity")?;
    let mut o = setup(cli)?;
    let pairs = load_pairs(cli, &mut o)?;
    let mut rows = Vec::new();
    for (p, _) in &pairs {
        let w = density::vorticity(p, &o.tolerances)?;
        let (u, mask) = density::velocity(p, &o.tolerances)?;
        let umax = (0..u.grid().len())
            .filter(|&i| mask[i])
            .fold(0.0f64, |m, i| m.max(u.norm_at(i)));
        let tolerance = o.tolerances.curl_rel * umax;
        let max_curl = w.max_interior();
        let a = InequalityAudit::new("max |curl(jp / rho)| <= curl_rel max |jp / rho|", max_curl, tolerance, 0.0);
        rows.push(json!({
            "max_interior": max_curl,
            "tolerance": tolerance,
            "flagged_cells": w.flagged.iter().filter(|f| **f).count(),
            "curl_free": a.pass,
        }));
        o.audit(a);
    }
    o.result = json!({ "pairs": rows });
    Ok(o)
}

fn build_det(cli: &Cli) -> Result<Outcome> {
    need_inputs(cli, 1, "build-det")?;
    let mut o = setup(cli)?;
    let pairs = load_pairs(cli, &mut o)?;
    let mut rows = Vec::new();
    for (p, m) in &pairs {
        let n = particle_number(cli, m);
        let r = det::det_report(p, n, &o.tolerances)?;
        o.audit(InequalityAudit::new(
            "|T direct - T formula| <= tol_kin",
            (r.t_direct - r.t_formula).abs(),
            r.tol_kin,
            0.0,
        ));
        o.audit(r.kinetic_bound_audit.clone());
        o.audit(r.g_bound_audit.clone());
        let mut t = value(FunctionalName::Texact, Extended::from_f64(r.t_direct));
        t.tolerance = r.tol_kin;
        o.values.push(t);
        o.values.push(value(FunctionalName::Exc, Extended::from_f64(r.exc)));
        o.audit(InequalityAudit::roundoff("E_xc <= 0", r.exc, 0.0));
        rows.push(r);
    }
    o.result = json!({ "reports": rows });
    Ok(o)
}

fn bounds(cli: &Cli) -> Result<Outcome> {
    need_inputs(cli, 1, "bounds")?;
    let mut o = setup(cli)?;
    let pairs = load_pairs(cli, &mut o)?;
    let lambda = cli.lambda.unwrap_or(0.5);
    let mut rows = Vec::new();
    for (p, m) in &pairs {
        let n = particle_number(cli, m);
        let tol = o.tolerances;
        let cor = fx::j_lambda_bound_audit_with(p, n, lambda, &tol)?;
        o.values.push(value(FunctionalName::J0, fx::j0_with(p, &tol)));
        o.values.push(value(FunctionalName::J1, Extended::from_f64(fx::j1(&p.rho))));
        o.values.push(fx::j_lambda_with(p, lambda, &tol)?);
        o.audits(cor);
        o.audit(det::kinetic_bound_audit_with(p, n, &tol)?);
        let mut q_upper = Value::Null;
        if p.grid().dim() == 3 {
            let eh = fx::hartree(&p.rho);
            o.values.push(value(FunctionalName::Hartree, Extended::from_f64(eh)));
            o.audits(fx::sobolev_chain_audit(&p.rho, n));
            q_upper = json!(fx::q_upper_bound_curlfree_with(p, n, &tol)?);
        }
        rows.push(json!({
            "n": n,
            "lambda": lambda,
            "q_upper_bound": q_upper,
            "j_lambda_bound_rhs": fx::j_lambda_bound_rhs(n, fx::j1(&p.rho), fx::j0_with(p, &tol).finite().unwrap_or(f64::INFINITY)),
        }));
    }
    o.result = json!({ "pairs": rows });
    Ok(o)
}

/// `lo:hi:cells` on a Dirichlet line.
fn parse_grid(s: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Config(format!("--grid expects lo:hi:cells, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let cells: usize = parts[2].trim().parse().map_err(|_| bad())?;
    GridSpec::dirichlet_line(cells, lo, hi)
}

fn load_scenario(cli: &Cli, o: &mut Outcome) -> Result<(Scenario, Potentials)> {
    need_inputs(cli, 1, "scenario commands")?;
    let path = &cli.input[0];
    let text = fs::read_to_string(path)?;
    o.digest(path)?;
    let mut sc: Scenario =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad scenario {}: {e}", path.display())))?;
    if let Some(g) = &cli.grid {
        sc.grid = solver::GridInput::Spec(parse_grid(g)?);
    }
    o.tolerances = cli.tolerances(sc.tolerances)?;
    let pot = sc.potentials()?;
    Ok((sc, pot))
}

struct Ground {
    spectrum: solver::SpectrumResult,
    pair: DensityPair,
    hermiticity: f64,
}

fn solve(sc: &Scenario, pot: &Potentials) -> Result<Ground> {
    let h = solver::discretize(&pot.v, &pot.a, sc.boundary)?;
    let spectrum = solver::ground_state(&h)?;
    let pair = solver::densities_from_state(&spectrum)?;
    Ok(Ground {
        spectrum,
        pair,
        hermiticity: h.hermiticity_residual(),
    })
}

fn spectrum_json(s: &solver::SpectrumResult, hermiticity: f64) -> Value {
    json!({
        "e0": s.e0,
        "e1": s.e1,
        "gap": s.gap,
        "degenerate": s.degenerate_flag,
        "residual": s.residual,
        "tol_eig": s.tol_eig,
        "gap_tol": s.gap_tol,
        "node_cells": s.node_cells,
        "boundary": s.boundary,
        "hermiticity_residual": hermiticity,
    })
}

fn ground_values(o: &mut Outcome, p: &DensityPair, pot: &Potentials) -> Result<f64> {
    let tol = o.tolerances;
    let q = det::q_exact_n1_with(p, &tol)?;
    let pairing = density::pairing_energy(p, pot)?;
    o.values.push(value(FunctionalName::J1, Extended::from_f64(fx::j1(&p.rho))));
    o.values.push(value(FunctionalName::J0, fx::j0_with(p, &tol)));
    o.values.push(value(FunctionalName::Qn1, Extended::from_f64(q)));
    o.values.push(value(FunctionalName::Pairing, Extended::from_f64(pairing)));
    Ok(q + pairing)
}

fn plot_potentials(o: &mut Outcome, pot: &Potentials) {
    let g = pot.grid();
    o.fields.push((
        "potentials".into(),
        g.coords(0),
        vec![
            ("v".into(), pot.v.values().to_vec()),
            ("A".into(), pot.a.values().to_vec()),
        ],
    ));
}

fn groundstate(cli: &Cli) -> Result<Outcome> {
    let mut o = Outcome::new(Tolerances::default());
    let (sc, pot) = load_scenario(cli, &mut o)?;
    let h = solver::discretize(&pot.v, &pot.a, sc.boundary)?;
    let spectrum = solver::ground_state(&h)?;
    let mut result = json!({ "spectrum": spectrum_json(&spectrum, h.hermiticity_residual()) });
    plot_potentials(&mut o, &pot);
    if spectrum.degenerate_flag {
        o.verdict = false;
    } else {
        let pair = solver::densities_from_state(&spectrum)?;
        let rhs = ground_values(&mut o, &pair, &pot)?;
        result["q_plus_pairing"] = json!(rhs);
        if let Some(dir) = &cli.save_pair {
            fs::create_dir_all(dir)?;
            let path = io::save_pair(dir, "ground", &pair, 1, &o.tolerances, Encoding::Csv)?;
            result["saved_pair"] = json!(path.display().to_string());
        }
        o.plot_pair("ground pair", &pair);
    }
    o.result = result;
    Ok(o)
}

/// Pairs after the scenario, checked against its grid.
fn extra_pairs(cli: &Cli, o: &mut Outcome, grid: &GridSpec) -> Result<Vec<DensityPair>> {
    let mut out = Vec::new();
    for path in &cli.input[1..] {
        let (p, m) = io::load_pair(path)?;
        o.digest(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        o.digest(&base.join(&m.rho))?;
        o.digest(&base.join(&m.jp))?;
        crate::grid::same_grid(grid, p.grid())?;
        out.push(p);
    }
    Ok(out)
}

fn variational(cli: &Cli) -> Result<Outcome> {
    let mut o = Outcome::new(Tolerances::default());
    let (sc, pot) = load_scenario(cli, &mut o)?;
    let g = solve(&sc, &pot)?;
    let rhs = ground_values(&mut o, &g.pair, &pot)?;
    let e0 = g.spectrum.e0;
    let t = solver::energy_tolerance(pot.grid().max_spacing(), e0);
    o.audit(InequalityAudit::new("ground pair: |e0 - (Q + pairing)| <= 5 h^2 scale", (e0 - rhs).abs(), t, 0.0));
    o.audit(InequalityAudit::new("ground pair: e0 <= Q + pairing", e0, rhs, t));
    for (i, p) in extra_pairs(cli, &mut o, pot.grid())?.iter().enumerate() {
        let mut a = solver::variational_audit_with(p, &pot, sc.boundary, &o.tolerances)?;
        a.name = format!("pair {}: {}", i + 1, a.name);
        o.audit(a);
    }
    o.plot_pair("ground pair", &g.pair);
    o.result = json!({ "spectrum": spectrum_json(&g.spectrum, g.hermiticity), "q_plus_pairing": rhs });
    Ok(o)
}

fn load_family(cli: &Cli, o: &mut Outcome) -> Result<PotentialFamily> {
    let path = cli
        .family
        .as_ref()
        .ok_or_else(|| Error::Config("--family is required".into()))?;
    let text = fs::read_to_string(path)?;
    o.digest(path)?;
    let mut fam: PotentialFamily =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad family {}: {e}", path.display())))?;
    if let Some(b) = cli.budget {
        fam.budget = b;
    }
    if let Some(s) = cli.seed {
        fam.seed = s;
    }
    fam.check()?;
    Ok(fam)
}

fn legendre(cli: &Cli) -> Result<Outcome> {
    need_inputs(cli, 1, "legendre")?;
    let mut o = setup(cli)?;
    let pairs = load_pairs(cli, &mut o)?;
    let fam = load_family(cli, &mut o)?;
    let mut rows = Vec::new();
    for (p, _) in &pairs {
        let r = convex::f_legendre_sampled(p, &fam)?;
        let q = det::q_exact_n1_with(p, &o.tolerances)?;
        o.values.push(value(FunctionalName::Qn1, Extended::from_f64(q)));
        o.audit(InequalityAudit::roundoff("sampled F <= Q", r.f_lower, q));
        rows.push(json!({
            "f_lower": r.f_lower,
            "q_oracle": q,
            "gap": q - r.f_lower,
            "search_tolerance": convex::search_tolerance(q),
            "argmax_v": r.argmax_v,
            "argmax_a": r.argmax_a,
            "evaluations": r.evaluations,
            "trace": r.trace,
        }));
        o.plot_pair("pair", p);
    }
    o.result = json!({ "family": fam, "pairs": rows });
    Ok(o)
}

fn envelope(cli: &Cli) -> Result<Outcome> {
    need_inputs(cli, 1, "envelope")?;
    let mut o = setup(cli)?;
    let pairs: Vec<DensityPair> = load_pairs(cli, &mut o)?.into_iter().map(|(p, _)| p).collect();
    let fam = load_family(cli, &mut o)?;
    let audits = convex::envelope_audit(&pairs, &fam)?;
    o.audits(audits);
    o.result = json!({ "family": fam, "pairs": pairs.len() });
    Ok(o)
}

fn euler(cli: &Cli) -> Result<Outcome> {
    let mut o = Outcome::new(Tolerances::default());
    let (sc, pot) = load_scenario(cli, &mut o)?;
    let extra = extra_pairs(cli, &mut o, pot.grid())?;
    let mut rows = Vec::new();
    let mut check = |o: &mut Outcome, label: &str, p: &DensityPair| -> Result<()> {
        let r = convex::euler_lagrange_residual_with(p, &pot, &o.tolerances)?;
        o.audit(InequalityAudit::new(format!("{label}: r_rho <= 10 h^2 scale"), r.r_rho, r.tolerance, 0.0));
        o.audit(InequalityAudit::new(format!("{label}: r_jp <= 10 h^2 scale"), r.r_jp, r.tolerance, 0.0));
        let minus_rho_a = VectorField::new(
            *p.grid(),
            p.rho
                .values()
                .iter()
                .zip(pot.a.values())
                .map(|(r, a)| -r * a)
                .collect(),
        )?;
        rows.push(json!({
            "label": label,
            "residual": r,
            "jp_plus_rho_a_l1": det::current_l1_error(&p.jp, &minus_rho_a),
        }));
        Ok(())
    };
    if extra.is_empty() {
        let g = solve(&sc, &pot)?;
        check(&mut o, "ground pair", &g.pair)?;
        o.plot_pair("ground pair", &g.pair);
    } else {
        for (i, p) in extra.iter().enumerate() {
            check(&mut o, &format!("pair {}", i + 1), p)?;
        }
    }
    o.result = json!({ "pairs": rows });
    Ok(o)
}

fn probe(cli: &Cli) -> Result<Outcome> {
    if cli.input.len() != 2 {
        return Err(Error::Config("probe: expected exactly two --input pairs".into()));
    }
    let mut o = setup(cli)?;
    let pairs = load_pairs(cli, &mut o)?;
    let tol = o.tolerances;
    let lambda = cli.lambda.unwrap_or(0.5);
    let kind = cli.functional;
    let q = move |p: &DensityPair| -> Result<f64> {
        let v = match kind {
            ProbeFunctional::J0 => fx::j0_with(p, &tol),
            ProbeFunctional::J1 => Extended::from_f64(fx::j1(&p.rho)),
            ProbeFunctional::Jlambda => fx::j_lambda_with(p, lambda, &tol)?.value,
            ProbeFunctional::Q => Extended::from_f64(det::q_exact_n1_with(p, &tol)?),
        };
        v.finite()
            .ok_or_else(|| Error::NotValidated("functional is infinite on a probe point".into()))
    };
    let lambdas: Vec<f64> = (1..10).map(|k| k as f64 / 10.0).collect();
    let r = convex::convexity_probe(&pairs[0].0, &pairs[1].0, &q, &lambdas)?;
    let scale = q(&pairs[0].0)?.abs().max(q(&pairs[1].0)?.abs()).max(1.0);
    o.audit(InequalityAudit::new(
        "min convexity margin >= -1e-10 scale",
        -r.min_margin,
        0.0,
        1e-10 * scale,
    ));
    o.result = json!({ "functional": kind, "lambda": lambda, "probe": r });
    Ok(o)
}
