//! Command-line driver: subcommands, reports, field dumps and exit codes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{self, Series};
use crate::config::{self, RunConfig};
use crate::error::{Error, Result};
use crate::flows::{self, Axis, Coefficient, GradedLagrangian, KernelField};
use crate::identities::{self, SweepConfig};
use crate::lattice::{self, GTodaSign, TauField};
use crate::mappings::{self, DsVariant, DtSign, MapKind, MappingState};
use crate::numerics::{Field, Grid2D, ResidualReport};
use crate::solitons::{self, ChainOrder, SolitonSetup, WronskianFrame};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "utoda", version, about = "Toda-type lattices, integrable maps and Wronskian solitons from A_n flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (or, for `map`, a .csv file).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides every suite tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chevalley and highest-weight relations of every fundamental module.
    VerifyAlgebra {
        #[arg(long, default_value = "A")]
        series: String,
        #[arg(long, default_value_t = 6)]
        max_rank: usize,
    },
    /// Jacobi identities and the Q recurrence on seeded random group elements.
    VerifyIdentities {
        #[arg(long)]
        max_rank: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
    Toda,
    Utoda,
    Gtoda,
    /// Apply an integrable map to CSV fields, or check it against chain data.
    Map {
        #[arg(long)]
        kind: Option<String>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<usize>,
        /// derived | flipped (Darboux–Toda only)
        #[arg(long)]
        sign: Option<String>,
        /// Lattice site used when the input holds τ or θ columns.
        #[arg(long)]
        site: Option<usize>,
    },
    Soliton,
    /// Aggregate JSON reports into one summary.
    Report {
        inputs: Vec<PathBuf>,
    },
}

/// One JSON report per command run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub pass: bool,
    pub suites: Vec<ResidualReport>,
}

/// A named field on a grid, optionally at a time t̄.
pub struct FieldDump<'a> {
    pub name: String,
    pub site: usize,
    pub field: &'a Field,
    pub t: Option<f64>,
}

struct Outcome {
    command: &'static str,
    hash: String,
    seed: u64,
    suites: Vec<ResidualReport>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Singular { .. } => EXIT_SINGULAR,
        Error::Internal(_) => EXIT_FAIL,
        _ => EXIT_CONFIG,
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(pass) => {
            if pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Singular { nodes, .. } = &e {
                if nodes.len() > 8 {
                    eprintln!("singular nodes: {nodes:?}");
                }
            }
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<bool> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::Argument("--jobs must be at least 1".into()));
        }
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    if let Command::Report { inputs } = &cli.command {
        return report(cli, inputs);
    }
    let cfg = match &cli.config {
        Some(p) => {
            let mut c = RunConfig::load(p)?;
            if let Some(s) = cli.seed {
                c.seed = s;
            }
            if let Some(t) = cli.tol {
                c.tol = Some(t);
            }
            Some(c)
        }
        None => None,
    };
    let out_dir = output_dir(cli, cfg.as_ref());
    let need = |name: &str| cfg.as_ref().ok_or_else(|| Error::config("/", format!("`{name}` needs --config")));
    let outcome = match &cli.command {
        Command::VerifyAlgebra { series, max_rank } => verify_algebra(cli, series, *max_rank)?,
        Command::VerifyIdentities { max_rank, samples } => verify_identities(cli, cfg.as_ref(), *max_rank, *samples)?,
        Command::Toda => toda(need("toda")?, &out_dir)?,
        Command::Utoda => utoda(need("utoda")?, &out_dir)?,
        Command::Gtoda => gtoda(need("gtoda")?, &out_dir)?,
        Command::Soliton => soliton(need("soliton")?, &out_dir)?,
        Command::Map { kind, input, iterations, sign, site } => {
            return map(cli, cfg.as_ref(), kind.as_deref(), input.as_deref(), *iterations, sign.as_deref(), *site);
        }
        Command::Report { .. } => unreachable!(),
    };
    let tol = cli.tol.or(cfg.as_ref().and_then(|c| c.tol));
    finish(outcome, tol, &out_dir.join(format!("{}.json", outcome_name(&cli.command))))
}

fn outcome_name(c: &Command) -> &'static str {
    match c {
        Command::VerifyAlgebra { .. } => "verify-algebra",
        Command::VerifyIdentities { .. } => "verify-identities",
        Command::Toda => "toda",
        Command::Utoda => "utoda",
        Command::Gtoda => "gtoda",
        Command::Map { .. } => "map",
        Command::Soliton => "soliton",
        Command::Report { .. } => "report",
    }
}

fn output_dir(cli: &Cli, cfg: Option<&RunConfig>) -> PathBuf {
    cli.out.clone().or_else(|| cfg.and_then(|c| c.output.clone()).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"))
}

fn finish(o: Outcome, tol: Option<f64>, path: &Path) -> Result<bool> {
    let suites: Vec<ResidualReport> = o.suites.into_iter().map(|r| if let Some(t) = tol { r.with_tol(t) } else { r }).collect();
    let pass = suites.iter().all(|r| r.pass);
    let rep = RunReport {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: o.command.into(),
        config_hash: o.hash,
        seed: o.seed,
        pass,
        suites,
    };
    for r in &rep.suites {
        println!("{r}");
    }
    write_atomic(path, &(serde_json::to_string_pretty(&rep).map_err(|e| Error::Internal(e.to_string()))? + "\n"))?;
    Ok(pass)
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// CSV with columns field, site, ix, iy, x, y, value and, when any dump
/// carries a time, t.
pub fn write_fields(path: &Path, grid: &Grid2D, dumps: &[FieldDump]) -> Result<()> {
    let timed = dumps.iter().any(|d| d.t.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header = vec!["field", "site", "ix", "iy", "x", "y", "value"];
    if timed {
        header.push("t");
    }
    w.write_record(&header).map_err(io)?;
    for d in dumps {
        for ((ix, iy), v) in d.field.indexed_iter() {
            let mut rec = vec![
                d.name.clone(),
                d.site.to_string(),
                ix.to_string(),
                iy.to_string(),
                grid.x(ix).to_string(),
                grid.y(iy).to_string(),
                v.to_string(),
            ];
            if timed {
                rec.push(d.t.map_or(String::new(), |t| t.to_string()));
            }
            w.write_record(&rec).map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    write_atomic(path, &String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))?)
}

/// Fields of a CSV written by [`write_fields`] (time column ignored).
pub fn read_fields(path: &Path) -> Result<(Grid2D, BTreeMap<String, Field>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::config("/", format!("cannot read {}: {e}", path.display())))?;
    let bad = |m: String| Error::config("/", format!("{}: {m}", path.display()));
    let mut rows = Vec::new();
    let (mut nx, mut ny) = (0usize, 0usize);
    let mut xs = BTreeMap::new();
    let mut ys = BTreeMap::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let get = |i: usize| rec.get(i).ok_or_else(|| bad(format!("short record {rec:?}")));
        let site: usize = get(1)?.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
        let name = if site == 0 { get(0)?.to_string() } else { format!("{}@{site}", get(0)?) };
        let num = |i: usize| -> Result<f64> { get(i)?.parse::<f64>().map_err(|e| bad(e.to_string())) };
        let ix: usize = get(2)?.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
        let iy: usize = get(3)?.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
        xs.insert(ix, num(4)?);
        ys.insert(iy, num(5)?);
        nx = nx.max(ix + 1);
        ny = ny.max(iy + 1);
        rows.push((name, ix, iy, num(6)?));
    }
    if nx < 2 || ny < 2 || xs.len() != nx || ys.len() != ny {
        return Err(bad("fields do not cover a full grid".into()));
    }
    let grid = Grid2D::new(xs[&0], ys[&0], xs[&1] - xs[&0], ys[&1] - ys[&0], nx, ny).map_err(|e| bad(e.to_string()))?;
    let mut fields: BTreeMap<String, Field> = BTreeMap::new();
    for (name, ix, iy, v) in rows {
        fields.entry(name).or_insert_with(|| Field::from_elem((nx, ny), f64::NAN))[[ix, iy]] = v;
    }
    Ok((grid, fields))
}

// ---------------------------------------------------------------------------

fn verify_algebra(cli: &Cli, series: &str, max_rank: usize) -> Result<Outcome> {
    let series: Series = series.parse()?;
    if max_rank == 0 {
        return Err(Error::Argument("--max-rank must be at least 1".into()));
    }
    let mut suites = Vec::new();
    for n in 1..=max_rank {
        let mut worst = 0.0f64;
        for j in 1..=n {
            let rep = algebra::fundamental_rep_for(series, n, j)?;
            if rep.dim != algebra::binomial(n + 1, j) {
                return Err(Error::Internal(format!("dimension of Λ^{j} for A{n} is {}", rep.dim)));
            }
            worst = worst.max(algebra::verify_chevalley(&rep));
        }
        suites.push(ResidualReport::scalar(format!("chevalley({series:?}{n})"), worst, 1e-13));
    }
    let hash = config::hash_json(&serde_json::json!({"series": format!("{series:?}"), "max_rank": max_rank}));
    Ok(Outcome { command: "verify-algebra", hash, seed: cli.seed.unwrap_or(0), suites })
}

fn verify_identities(cli: &Cli, cfg: Option<&RunConfig>, max_rank: Option<usize>, samples: Option<usize>) -> Result<Outcome> {
    let spec = cfg.and_then(|c| c.identities);
    let d = SweepConfig::default();
    let sc = SweepConfig {
        max_rank: max_rank.or(spec.map(|s| s.max_rank)).unwrap_or(d.max_rank),
        samples: samples.or(spec.map(|s| s.samples)).unwrap_or(d.samples),
        seed: cli.seed.or(cfg.map(|c| c.seed)).unwrap_or(d.seed),
        tol: d.tol,
    };
    let mut suites = identities::sweep(&sc)?;
    if let Some(c) = cfg {
        let known = ["jacobi1", "jacobi2", "recurrence"];
        let sel = c.selected(&known)?;
        suites.retain(|r| sel.iter().any(|s| r.name.starts_with(s.as_str())));
    }
    let hash = match cfg {
        Some(c) => c.hash(),
        None => config::hash_json(&serde_json::to_value(sc).map_err(|e| Error::Internal(e.to_string()))?),
    };
    Ok(Outcome { command: "verify-identities", hash, seed: sc.seed, suites })
}

fn build_kernel(cfg: &RunConfig, m: &GradedLagrangian, p: &GradedLagrangian) -> Result<KernelField> {
    let g = &cfg.grid;
    let xa = Axis::uniform(g.x0, g.hx, g.nx, 0.0);
    let ya = Axis::uniform(g.y0, g.hy, g.ny, 0.0);
    flows::kernel(m, p, &xa, &ya, Some(&cfg.k0), cfg.substeps)
}

fn regular_tau(k: &KernelField, depth: usize) -> Result<TauField> {
    let tau = lattice::compute_tau(k, depth)?;
    tau.check_regular()?;
    Ok(tau)
}

fn tau_dumps(tau: &TauField) -> Vec<FieldDump<'_>> {
    let mut d: Vec<FieldDump> = (1..=tau.n).map(|i| FieldDump { name: "tau".into(), site: i, field: tau.tau(i as isize), t: None }).collect();
    d.extend((1..=tau.n).map(|i| FieldDump { name: "theta".into(), site: i, field: tau.theta(i as isize), t: None }));
    d
}

fn toda(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    if (cfg.depths.m1, cfg.depths.m2) != (1, 1) {
        return Err(Error::config("/depths", "the Toda system uses depth-1 flows"));
    }
    let closed_form_applies = cfg.algebra.n == 1 && cfg.k0.is_empty() && cfg.coefficients.minus.is_empty() && cfg.coefficients.plus.is_empty();
    let known: &[&str] = if closed_form_applies { &["toda", "closed_form"] } else { &["toda"] };
    let sel = cfg.selected(known)?;
    let (m, p) = cfg.lagrangians()?;
    let tau = regular_tau(&build_kernel(cfg, &m, &p)?, 1)?;
    let mut suites = Vec::new();
    if sel.iter().any(|s| s == "toda") {
        suites.push(lattice::toda_residual(&tau, 1e-6)?);
    }
    if sel.iter().any(|s| s == "closed_form") {
        let g = &tau.grid;
        let worst = tau.tau(1).indexed_iter().fold(0.0f64, |w, ((ix, iy), v)| w.max((v - (1.0 + g.x(ix) * g.y(iy))).abs()));
        suites.push(ResidualReport::scalar("closed_form(1+xy)", worst, 1e-10));
    }
    write_fields(&out.join("toda_fields.csv"), &tau.grid, &tau_dumps(&tau))?;
    Ok(Outcome { command: "toda", hash: cfg.hash(), seed: cfg.seed, suites })
}

fn utoda(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (m1, m2) = (cfg.depths.m1, cfg.depths.m2);
    let known: &[&str] = if (m1, m2) == (1, 1) { &["utoda", "alpha", "reduction"] } else { &["utoda", "alpha"] };
    let sel = cfg.selected(known)?;
    let depth = m1.max(m2);
    let (m, p) = cfg.lagrangians()?;
    let tau = regular_tau(&build_kernel(cfg, &m, &p)?, depth)?;
    let pf = lattice::compute_p(&tau, m1, m2)?;
    let mut suites = Vec::new();
    if sel.iter().any(|s| s == "utoda") {
        let r = lattice::utoda_residual(&tau, &pf, 1e-6)?;
        suites.extend([r.x_eq, r.mixed, r.y_eq]);
    }
    if sel.iter().any(|s| s == "alpha") {
        suites.push(lattice::alpha_derivative_residual(&tau, &pf, depth, 1e-6)?);
    }
    if sel.iter().any(|s| s == "reduction") {
        let rhs = lattice::utoda_rhs(&tau, &pf);
        let theta: Vec<Field> = (1..=tau.n as isize).map(|i| tau.theta(i).clone()).collect();
        let d = lattice::max_field_difference(&rhs.mixed[1..], &theta);
        suites.push(ResidualReport::scalar("reduction(utoda11=toda)", d, 1e-12));
    }
    let mut dumps = tau_dumps(&tau);
    for i in 1..=tau.n as isize {
        for r in 1..=m1 {
            dumps.push(FieldDump { name: format!("p{r}"), site: i as usize, field: pf.p(r, i), t: None });
        }
        for r in 1..=m2 {
            dumps.push(FieldDump { name: format!("pbar{r}"), site: i as usize, field: pf.pbar(r, i), t: None });
        }
    }
    write_fields(&out.join("utoda_fields.csv"), &tau.grid, &dumps)?;
    Ok(Outcome { command: "utoda", hash: cfg.hash(), seed: cfg.seed, suites })
}

fn gtoda(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let pat = cfg.gtoda.as_ref().ok_or_else(|| Error::config("/gtoda", "missing pattern {s, sbar}"))?;
    if (cfg.depths.m1, cfg.depths.m2) != (2, 2) {
        return Err(Error::config("/depths", "GToda(2,2;s,sbar) uses depths m1 = m2 = 2"));
    }
    let n = cfg.algebra.n;
    if pat.s.len() + 1 != n || pat.sbar.len() + 1 != n {
        return Err(Error::config("/gtoda", format!("patterns need {} entries", n.saturating_sub(1))));
    }
    let all_ones = pat.s.iter().chain(&pat.sbar).all(|&v| v == 1.0);
    let known: &[&str] = if all_ones { &["gtoda", "agreement"] } else { &["gtoda"] };
    let sel = cfg.selected(known)?;
    let (mut m, mut p) = cfg.lagrangians()?;
    for i in 0..n - 1 {
        m = m.set(2, i + 1, Coefficient::Const(pat.s[i]))?;
        p = p.set(2, i + 1, Coefficient::Const(pat.sbar[i]))?;
    }
    let tau = regular_tau(&build_kernel(cfg, &m, &p)?, 2)?;
    let cm = algebra::cartan_matrix(Series::A, n)?;
    let mut suites = Vec::new();
    let f = lattice::gtoda_fields(&cm, &tau, &pat.s, &pat.sbar, GTodaSign::Derived)?;
    if sel.iter().any(|s| s == "gtoda") {
        let r = lattice::gtoda_residual(&cm, &tau, &pat.s, &pat.sbar, GTodaSign::Derived, 1e-5)?;
        suites.extend([r.x_eq, r.mixed, r.y_eq]);
    }
    if sel.iter().any(|s| s == "agreement") {
        let pf = lattice::compute_p(&tau, 2, 2)?;
        let u = lattice::utoda_rhs(&tau, &pf);
        let p1: Vec<Field> = (1..=n as isize).map(|i| pf.p(1, i).clone()).collect();
        let pb: Vec<Field> = (1..=n as isize).map(|i| pf.pbar(1, i).clone()).collect();
        let d = [
            lattice::max_field_difference(&f.p1[1..], &p1),
            lattice::max_field_difference(&f.pbar1[1..], &pb),
            lattice::max_field_difference(&f.rhs_y[1..], &u.y_eq[1][1..]),
            lattice::max_field_difference(&f.rhs_x[1..], &u.x_eq[1][1..]),
            lattice::max_field_difference(&f.rhs_mixed[1..], &u.mixed[1..]),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        suites.push(ResidualReport::scalar("agreement(gtoda=utoda22)", d, 1e-12));
    }
    let mut dumps = tau_dumps(&tau);
    for i in 1..=n {
        dumps.push(FieldDump { name: "p1".into(), site: i, field: &f.p1[i], t: None });
        dumps.push(FieldDump { name: "pbar1".into(), site: i, field: &f.pbar1[i], t: None });
    }
    write_fields(&out.join("gtoda_fields.csv"), &tau.grid, &dumps)?;
    Ok(Outcome { command: "gtoda", hash: cfg.hash(), seed: cfg.seed, suites })
}

/// Chain data for a map oracle: the kind's fields at `site`.
fn parse_sign(s: &str) -> Result<DtSign> {
    match s {
        "derived" => Ok(DtSign::Derived),
        "flipped" => Ok(DtSign::Flipped),
        other => Err(Error::Argument(format!("unknown sign {other:?} (derived | flipped)"))),
    }
}

/// Map inputs from a field dump: named map fields (site 0), else τ or θ columns at `site`.
fn input_state(grid: Grid2D, fields: &BTreeMap<String, Field>, kind: MapKind, site: usize) -> std::result::Result<MappingState, String> {
    let direct = kind.fields().iter().all(|n| fields.contains_key(*n));
    let at = |name: &str, i: usize| fields.get(&format!("{name}@{i}")).cloned().ok_or_else(|| format!("no field {name:?} at site {i}"));
    let s = MappingState::new(grid);
    let r = if direct {
        kind.fields().iter().try_fold(s, |s, n| s.with(n, fields[*n].clone()))
    } else {
        match kind {
            MapKind::Dt => {
                let lower = if site == 1 { Field::ones((grid.nx, grid.ny)) } else { at("tau", site - 1)? };
                let mid = at("tau", site)?;
                let upper = at("tau", site + 1)?;
                s.with("u", lower / &mid).and_then(|s| s.with("v", upper / &mid))
            }
            MapKind::Utoda11 => {
                if site < 2 {
                    return Err("utoda11 needs θ at sites ≥ 2 and its predecessor".into());
                }
                let (a, b) = (at("theta", site)?, at("theta", site - 1)?);
                s.with("phi1", a).and_then(|s| s.with("phi2", b))
            }
            MapKind::Utoda12 => return Err(format!("needs fields {:?}", kind.fields())),
        }
    };
    r.map_err(|e| e.to_string())
}

fn map(cli: &Cli, cfg: Option<&RunConfig>, kind: Option<&str>, input: Option<&Path>, iterations: Option<usize>, sign: Option<&str>, site: Option<usize>) -> Result<bool> {
    let spec = cfg.and_then(|c| c.map);
    let kind = match kind {
        Some(k) => k.parse()?,
        None => spec.map(|s| s.kind).ok_or_else(|| Error::Argument("map needs --kind or a config with /map".into()))?,
    };
    let iterations = iterations.or(spec.map(|s| s.iterations)).unwrap_or(1);
    let sign = match sign {
        Some(s) => parse_sign(s)?,
        None => spec.map_or(DtSign::Derived, |s| s.sign),
    };
    let out = output_dir(cli, cfg);
    let (fields_path, report_path) = if out.extension().is_some_and(|e| e == "csv") {
        (out.clone(), out.with_extension("json"))
    } else {
        (out.join("map_fields.csv"), out.join("map.json"))
    };
    let tol = cli.tol.or(cfg.and_then(|c| c.tol));
    let (state, oracle, hash, seed) = match input {
        Some(path) => {
            let (grid, fields) = read_fields(path)?;
            let site = site.or(spec.map(|s| s.site)).unwrap_or(1);
            let s = input_state(grid, &fields, kind, site).map_err(|m| Error::config("/", format!("{}: {m}", path.display())))?;
            let bytes = std::fs::read(path)?;
            let hash = config::hash_json(&serde_json::json!({
                "input": hex::encode(Sha256::digest(&bytes)),
                "kind": kind, "iterations": iterations, "sign": sign,
            }));
            (s, None, hash, cli.seed.unwrap_or(0))
        }
        None => {
            let cfg = cfg.ok_or_else(|| Error::config("/", "map needs --in or --config"))?;
            let site = site.or(spec.map(|s| s.site)).unwrap_or(1);
            let n = cfg.algebra.n;
            if site == 0 || site + iterations > n {
                return Err(Error::config("/map/site", format!("site {site} shifted {iterations} times leaves 1..={n}")));
            }
            let m1 = if kind == MapKind::Utoda12 { 2 } else { 1 };
            let mut c = cfg.clone();
            c.depths.m1 = m1;
            c.depths.m2 = 1;
            let (m, p) = c.lagrangians()?;
            let tau = regular_tau(&build_kernel(&c, &m, &p)?, m1)?;
            let pf = if m1 == 2 { Some(lattice::compute_p(&tau, 2, 1)?) } else { None };
            let start = mappings::lattice_state(&tau, pf.as_ref(), kind, site as isize)?;
            let target = mappings::lattice_state(&tau, pf.as_ref(), kind, (site + iterations) as isize)?;
            (start, Some(target), cfg.hash(), cfg.seed)
        }
    };
    let mapped = mappings::iterate(&state, kind, sign, iterations)?;
    let mut suites = Vec::new();
    if let Some(target) = oracle {
        let d = mapped.max_difference(&target, kind.fields())?;
        let t = if iterations == 1 { 1e-5 } else { 1e-4 };
        suites.push(ResidualReport::scalar(format!("map_oracle({kind:?},x{iterations})"), d, t));
    }
    let dumps: Vec<FieldDump> = kind.fields().iter().map(|n| FieldDump { name: n.to_string(), site: 0, field: &mapped.fields[*n], t: None }).collect();
    write_fields(&fields_path, &mapped.grid, &dumps)?;
    finish(Outcome { command: "map", hash, seed, suites }, tol, &report_path)
}

fn soliton(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let tf = cfg.time_flow.as_ref().ok_or_else(|| Error::config("/time_flow", "soliton needs a time flow {frame, ...}"))?;
    let frame = WronskianFrame::new(&tf.frame).map_err(|e| Error::config("/time_flow/frame", e.to_string()))?;
    let n = cfg.algebra.n;
    let k = frame.k;
    let lattice_ok = frame.len() == n + 1;
    let mut known = vec!["linear", "frobenius", "chain"];
    if lattice_ok && k <= n {
        known.push("utoda_k1");
    }
    if lattice_ok && k == 2 {
        known.extend(["ds", "invariance"]);
    }
    let sel = cfg.selected(&known)?;
    let on = |s: &str| sel.iter().any(|x| x == s);
    let dom = tf.chain_domain();
    let ys = dom.grid.xs();
    let ts = dom.grid.ys();
    let mut suites = Vec::new();
    if on("linear") {
        suites.push(solitons::linear_eq_residual(&frame, &ys, &ts, 1e-10));
    }
    if on("frobenius") {
        suites.push(solitons::frobenius_roundtrip(&frame, &ys, 0.0, dom.baseline, 1e-7)?);
    }
    if on("chain") {
        let tol = if k <= 2 { 1e-7 } else { 1e-6 };
        let r = solitons::nilpotent_chain_residual(&frame, ChainOrder::Derived, &dom, tol)?;
        suites.extend([r.pi, r.top, r.local, r.zero_curvature]);
    }
    if on("utoda_k1") {
        let g = &cfg.grid;
        let grid = Grid2D::new(g.x0, tf.xt.t0, g.hx, tf.xt.ht, g.nx, tf.xt.nt)?;
        let setup = SolitonSetup { n, grid, k0: cfg.k0.clone(), substeps: cfg.substeps };
        let tau = solitons::xt_tau(&frame, &setup, tf.xt_y)?;
        tau.check_regular()?;
        let pf = lattice::compute_p(&tau, 1, k)?;
        suites.push(lattice::utoda_k1_residual(&tau, &pf, k, 1e-5)?);
    }
    let mut ds = None;
    if on("ds") || on("invariance") {
        let setup = SolitonSetup { n, grid: cfg.grid, k0: cfg.k0.clone(), substeps: cfg.substeps };
        let d = solitons::ds_soliton(&frame, &setup, tf.site, &tf.ds.nodes())?;
        if on("ds") {
            let r = mappings::ds_residual(&d, DsVariant::Derived, 1e-4)?;
            suites.extend([r.u_eq, r.v_eq, r.local]);
        }
        if on("invariance") {
            let mut r = mappings::ds_invariance_check(&d, 1e-4, 1e-3)?.mapped.all;
            r.name = "ds_mapped".into();
            suites.push(r);
        }
        ds = Some(d);
    }
    if let Some(d) = &ds {
        let mut dumps = Vec::new();
        for (it, &t) in d.ts.iter().enumerate() {
            dumps.push(FieldDump { name: "u".into(), site: tf.site, field: &d.u[it], t: Some(t) });
            dumps.push(FieldDump { name: "v".into(), site: tf.site, field: &d.v[it], t: Some(t) });
        }
        write_fields(&out.join("soliton_fields.csv"), &d.grid, &dumps)?;
    }
    Ok(Outcome { command: "soliton", hash: cfg.hash(), seed: cfg.seed, suites })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub file: String,
    pub command: String,
    pub config_hash: String,
    pub pass: bool,
    pub failed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub pass: bool,
    pub reports: Vec<SummaryEntry>,
}

fn report(cli: &Cli, inputs: &[PathBuf]) -> Result<bool> {
    let out = output_dir(cli, None);
    let roots = if inputs.is_empty() { vec![out.clone()] } else { inputs.to_vec() };
    let mut files = Vec::new();
    for r in &roots {
        if r.is_dir() {
            for e in std::fs::read_dir(r)? {
                let p = e?.path();
                if p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|f| f != "summary.json") {
                    files.push(p);
                }
            }
        } else {
            files.push(r.clone());
        }
    }
    files.sort();
    let mut entries = Vec::new();
    for f in &files {
        let text = std::fs::read_to_string(f)?;
        let rep: RunReport = serde_json::from_str(&text).map_err(|e| Error::config("/", format!("{} is not a run report: {e}", f.display())))?;
        entries.push(SummaryEntry {
            file: f.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            command: rep.command,
            config_hash: rep.config_hash,
            pass: rep.pass,
            failed: rep.suites.iter().filter(|s| !s.pass).map(|s| s.name.clone()).collect(),
        });
    }
    let hash = config::hash_json(&serde_json::to_value(&entries).map_err(|e| Error::Internal(e.to_string()))?);
    let pass = entries.iter().all(|e| e.pass);
    for e in &entries {
        println!("{:<24} {:<18} {}", e.file, e.command, if e.pass { "pass" } else { "FAIL" });
    }
    let s = Summary { tool: env!("CARGO_PKG_NAME").into(), version: env!("CARGO_PKG_VERSION").into(), config_hash: hash, pass, reports: entries };
    write_atomic(&out.join("summary.json"), &(serde_json::to_string_pretty(&s).map_err(|e| Error::Internal(e.to_string()))? + "\n"))?;
    Ok(pass)
}
