use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use gvstar_core::acm::Verdict;
use gvstar_core::chart::ChartBox;
use gvstar_core::checks::{self, Expectation, Settings};
use gvstar_core::exprlang::Expr;
use gvstar_core::ode;
use gvstar_core::scenario::{bundled, twisted_scenario_text, Scenario, BUNDLED};
use gvstar_core::twisted::{explicit_spec, recover_profiles, verify_critical, TwistedReport};
use gvstar_core::variation::{Suite, VariationKind};
use gvstar_core::Error;

use crate::report::{to_json, write_atomic, Cell, Check, Report, ScenarioInfo, Table};
use crate::{Command, Common, Output, RegressArgs, TwistedArgs};

pub const DEFAULT_GRID: usize = 48;
/// Largest `|∇_T N + kT - τB|` accepted by `frenet`.
pub const CLOSURE_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(
                Error::Scenario { .. }
                | Error::Syntax { .. }
                | Error::UnknownIdentifier { .. }
                | Error::Arity { .. }
                | Error::NonUnitField { .. },
            ) => 2,
            CliError::Core(_) | CliError::Io { .. } => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Runs one command; `Ok(pass)` on completion.
pub fn run(command: Command) -> Result<bool> {
    match command {
        Command::Frenet(c) => frenet(&c),
        Command::Functional(c) => functional(&c),
        Command::ElCheck { common, suite } => el_check(&common, &suite),
        Command::Vary {
            common,
            kind,
            seed,
            count,
            fd_points,
        } => vary(&common, &kind, seed, count, fd_points),
        Command::Ode {
            k0,
            h0,
            smax,
            step,
            tol,
            out,
        } => ode_cmd(k0, h0, smax, step, tol, &out),
        Command::Twisted(a) => twisted(&a),
        Command::Classify(c) => classify(&c),
        Command::Regress(a) => regress(&a),
    }
}

pub fn load_scenario(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    if path.exists() {
        return Ok(Scenario::load(path)?);
    }
    bundled(arg).ok_or_else(|| {
        CliError::Core(Error::Scenario {
            line: 0,
            message: format!("no scenario file or bundled scenario named `{arg}`"),
        })
    })
}

fn settings(sc: &Scenario, c: &Common) -> Settings {
    Settings {
        n: c.grid.or(sc.grid_n).unwrap_or(DEFAULT_GRID),
        normalize_t: c.normalize_t,
        ..Settings::default()
    }
}

fn emit<R: Serialize>(out: &Output, report: &Report<R>, table: Option<&Table>) -> Result<bool> {
    let json = to_json(report);
    match &out.report {
        Some(p) => write_atomic(p, &json).map_err(|e| io_err(p, e))?,
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&json).map_err(|e| io_err(Path::new("<stdout>"), e))?;
        }
    }
    if let (Some(p), Some(t)) = (&out.csv, table) {
        let bytes = t.to_bytes().map_err(|e| io_err(p, e))?;
        write_atomic(p, &bytes).map_err(|e| io_err(p, e))?;
    }
    Ok(report.pass)
}

fn io_err(p: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: p.display().to_string(),
        source,
    }
}

fn report<R: Serialize>(
    command: &str,
    sc: Option<&Scenario>,
    s: Option<Settings>,
    result: R,
    verdicts: Vec<Check>,
) -> Report<R> {
    let pass = verdicts.iter().all(|v| v.pass);
    Report {
        command: command.into(),
        scenario: sc.map(ScenarioInfo::of),
        grid: s.map(|s| s.n),
        tolerances: s,
        result,
        verdicts,
        pass,
    }
}

#[derive(Debug, Serialize)]
struct FrenetSummary {
    nodes: usize,
    coverage: f64,
    max_k: f64,
    max_abs_tau: f64,
    max_closure: f64,
    closure_tol: f64,
}

fn frenet(c: &Common) -> Result<bool> {
    let sc = load_scenario(&c.scenario)?;
    let s = settings(&sc, c);
    let geom = sc.problem(s.n, s.normalize_t)?.geometry()?;
    let tol = c.tol.unwrap_or(CLOSURE_TOL);
    let mut table = Table::new(&[
        "x", "y", "z", "geodesic", "sqrt_det", "k", "tau", "H", "h_nn", "h_nb", "h_bn", "h_bb", "t0", "t1", "t2", "n0",
        "n1", "n2", "b0", "b1", "b2", "div_t", "closure",
    ]);
    let mut finite = true;
    for (i, f) in geom.nodes.iter().enumerate() {
        let p = geom.grid.point(i);
        let mut row: Vec<Cell> = p.iter().map(|&v| Cell::Num(v)).collect();
        row.push(Cell::from(f.geodesic));
        let nums = [
            f.sqrt_det,
            f.k,
            f.tau,
            f.mean_curvature,
            f.h_nn(),
            f.h_nb(),
            f.h_bn(),
            f.h_bb(),
        ];
        let frame = f.t.iter().chain(&f.n).chain(&f.b);
        let tail = [f.div_t, f.closure];
        for &v in nums.iter().chain(frame).chain(&tail) {
            finite &= v.is_finite();
            row.push(Cell::Num(v));
        }
        table.push(row);
    }
    let max = |g: &dyn Fn(&gvstar_core::geometry::FrenetData) -> f64| geom.nodes.iter().map(g).fold(0.0, f64::max);
    let summary = FrenetSummary {
        nodes: geom.nodes.len(),
        coverage: geom.coverage(),
        max_k: max(&|f| f.k),
        max_abs_tau: max(&|f| if f.geodesic { 0.0 } else { f.tau.abs() }),
        max_closure: max(&|f| if f.geodesic { 0.0 } else { f.closure }),
        closure_tol: tol,
    };
    let verdicts = vec![
        Check::new("finite", finite),
        Check::new("frame_closure", summary.max_closure <= tol),
    ];
    let r = report("frenet", Some(&sc), Some(s), summary, verdicts);
    emit(&c.out, &r, Some(&table))
}

fn functional(c: &Common) -> Result<bool> {
    let sc = load_scenario(&c.scenario)?;
    let mut s = settings(&sc, c);
    if let Some(t) = c.tol {
        s.functional_tol = t;
    }
    let f = checks::functional(&sc, &s)?;
    let field = &f.report.integrand_field;
    let mut table = Table::new(&["x", "y", "z", "integrand"]);
    for (i, v) in field.data.iter().enumerate() {
        let p = field.grid.point(i);
        table.push_nums(&[p[0], p[1], p[2], *v]);
    }
    let verdicts = vec![Check::new("functional", f.pass)];
    let r = report("functional", Some(&sc), Some(s), f, verdicts);
    emit(&c.out, &r, Some(&table))
}

fn el_check(c: &Common, suite: &str) -> Result<bool> {
    let sc = load_scenario(&c.scenario)?;
    let mut s = settings(&sc, c);
    if let Some(t) = c.tol {
        s.el_tol = t;
    }
    let suite = Suite::parse(suite).ok_or_else(|| CliError::Usage(format!("unknown suite `{suite}`")))?;
    let el = checks::el_check(&sc, suite, &s)?;
    let names = suite.names();
    let fields: Vec<_> = el.fields.iter().filter(|(n, _)| names.contains(&n.as_str())).collect();
    let mut header = vec!["x".to_string(), "y".into(), "z".into()];
    header.extend(fields.iter().map(|(n, _)| n.clone()));
    let mut table = Table::new(&header);
    if let Some((_, first)) = fields.first() {
        for i in 0..first.data.len() {
            let p = first.grid.point(i);
            let mut row = p.to_vec();
            row.extend(fields.iter().map(|(_, f)| f.data[i]));
            table.push_nums(&row);
        }
    }
    let verdicts = vec![Check::new(format!("el_{}", suite_name(suite)), el.report.critical)];
    #[derive(Serialize)]
    struct Out {
        verdict: &'static str,
        #[serde(flatten)]
        report: gvstar_core::variation::ElReport,
    }
    let out = Out {
        verdict: el.report.verdict(),
        report: el.report,
    };
    let r = report("el-check", Some(&sc), Some(s), out, verdicts);
    emit(&c.out, &r, Some(&table))
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Full => "full",
        Suite::Gtop => "gtop",
        Suite::Gpitchfork => "gpitchfork",
        Suite::Umbilic => "umbilic",
    }
}

fn vary(c: &Common, kind: &str, seed: u64, count: usize, fd_points: usize) -> Result<bool> {
    let sc = load_scenario(&c.scenario)?;
    let mut s = settings(&sc, c);
    s.seed = seed;
    s.count = count;
    s.fd_points = fd_points;
    if let Some(t) = c.tol {
        s.vary_tol = t;
    }
    let kind = VariationKind::parse(kind).ok_or_else(|| CliError::Usage(format!("unknown kind `{kind}`")))?;
    let v = checks::vary(&sc, kind, &s)?;
    let mut table = Table::new(&[
        "c0",
        "c1",
        "c2",
        "r0",
        "r1",
        "r2",
        "a0",
        "a1",
        "a2",
        "fd",
        "fd_sweep0",
        "fd_sweep1",
        "fd_sweep2",
        "sweep_consistent",
        "analytic",
        "analytic_uncorrected",
        "rel_err",
        "rel_err_uncorrected",
        "pass",
    ]);
    for row in &v.rows {
        let mut cells: Vec<Cell> = row
            .center
            .iter()
            .chain(&row.radius)
            .chain(&row.amplitudes)
            .chain(std::iter::once(&row.fd))
            .chain(&row.fd_sweep)
            .map(|&x| Cell::Num(x))
            .collect();
        cells.push(Cell::from(row.sweep_consistent));
        for x in [row.analytic, row.analytic_uncorrected, row.rel_err, row.rel_err_uncorrected] {
            cells.push(Cell::Num(x));
        }
        cells.push(Cell::from(row.pass));
        table.push(cells);
    }
    let verdicts = vec![Check::new("first_variation", v.verdict != "fail")];
    let r = report("vary", Some(&sc), Some(s), v, verdicts);
    emit(&c.out, &r, Some(&table))
}

#[derive(Debug, Serialize)]
struct OdeResult {
    k0: f64,
    h0: f64,
    s_max: f64,
    step: f64,
    c1: f64,
    ck: f64,
    samples: usize,
    blowup_s: Option<f64>,
    blowup_s_backward: Option<f64>,
    blowup_oracle: Option<f64>,
    blowup_oracle_backward: Option<f64>,
    c1_drift: f64,
    drift_tol: f64,
}

fn ode_cmd(k0: f64, h0: f64, s_max: f64, step: f64, tol: f64, out: &Output) -> Result<bool> {
    let p = ode::integrate_critical(k0, h0, s_max, step)?;
    let mut table = Table::new(&ode::CSV_HEADER);
    for row in p.rows() {
        table.push_nums(&row);
    }
    let result = OdeResult {
        k0,
        h0,
        s_max,
        step,
        c1: p.c1,
        ck: p.ck,
        samples: p.samples.len(),
        blowup_s: p.blowup_s,
        blowup_s_backward: p.blowup_s_backward,
        blowup_oracle: ode::blowup_oracle(k0, h0),
        // s → -s maps (k, H) to (k, -H)
        blowup_oracle_backward: ode::blowup_oracle(k0, -h0).map(|s| -s),
        c1_drift: p.c1_drift,
        drift_tol: tol,
    };
    let verdicts = vec![
        Check::new("no_blowup", p.blowup_s.is_none() && p.blowup_s_backward.is_none()),
        Check::new("c1_drift", p.c1_drift <= tol),
    ];
    let r = report("ode", None, None, result, verdicts);
    emit(out, &r, Some(&table))
}

#[derive(Debug, Serialize)]
struct TwistedResult {
    mode: &'static str,
    profiles: BTreeMap<&'static str, String>,
    origin: gvstar_core::twisted::Origin,
    check: TwistedReport,
}

/// `c/(1 - c·x)`, the curvature on `s = 0` for which `v` is linear in `x`.
pub fn critical_k0_field(c: f64) -> String {
    format!("({c:?})/(1 - ({c:?})*x)")
}

fn twisted(a: &TwistedArgs) -> Result<bool> {
    if !(a.x_half > 0.0 && a.s_half > 0.0) {
        return Err(CliError::Usage("--x-half and --s-half must be positive".into()));
    }
    let names = ["x", "y", "s"];
    let chart = ChartBox::new(names, [-a.x_half, -a.x_half, -a.s_half], [a.x_half, a.x_half, a.s_half], 1.0)?;
    let interior = ChartBox::new(
        names,
        [-0.6 * a.x_half, -0.6 * a.x_half, -0.75 * a.s_half],
        [0.6 * a.x_half, 0.6 * a.x_half, 0.75 * a.s_half],
        1.0,
    )?;
    let base_src: [String; 3] = a
        .base
        .clone()
        .try_into()
        .map_err(|_| CliError::Usage("--base takes three entries".into()))?;
    let parse = |s: &str| Expr::parse(s, &names);
    let base = [parse(&base_src[0])?, parse(&base_src[1])?, parse(&base_src[2])?];
    let mut profiles = BTreeMap::new();
    let (mode, spec) = match (a.build, a.recover) {
        (true, false) => {
            let (u, v) = (a.u.as_deref().unwrap_or(""), a.v.as_deref().unwrap_or(""));
            profiles.insert("u", u.to_string());
            profiles.insert("v", v.to_string());
            ("build", explicit_spec(&chart, base, u, v)?)
        }
        (false, true) => {
            let k0 = match (&a.k0, &a.k0_field) {
                (Some(k), None) => match k.trim().parse::<f64>() {
                    Ok(c) => critical_k0_field(c),
                    Err(_) => k.clone(),
                },
                (None, Some(f)) => f.clone(),
                _ => return Err(CliError::Usage("--recover needs --k0 or --k0-field".into())),
            };
            profiles.insert("k0", k0.clone());
            ("recover", recover_profiles(&chart, base, &k0, a.h0, a.step)?)
        }
        _ => return Err(CliError::Usage("give exactly one of --build or --recover".into())),
    };
    let check = verify_critical(&spec, a.grid, &interior, a.tol)?;
    let mut table = Table::new(&["s", "u", "du", "ddu"]);
    for i in 0..=a.grid {
        let s = chart.lo[2] + (chart.hi[2] - chart.lo[2]) * i as f64 / a.grid as f64;
        let u = spec.u.jet(&[0.0, 0.0, s])?;
        table.push_nums(&[s, u.value, u.grad[2], u.hess[5]]);
    }
    let verdict = if check.critical { "critical" } else { "not critical" };
    if let Some(path) = &a.emit {
        let mut expect = BTreeMap::new();
        expect.insert("twisted".to_string(), verdict.to_string());
        if check.class_verdict != Verdict::Unclassified {
            expect.insert("classify".to_string(), check.class_verdict.label().to_string());
        }
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("twisted");
        let text = twisted_scenario_text(name, &spec, &base_src, &interior, &expect);
        Scenario::parse(&text)?;
        write_atomic(path, text.as_bytes()).map_err(|e| io_err(path, e))?;
    }
    let s = Settings {
        n: a.grid,
        twisted_tol: a.tol,
        ..Settings::default()
    };
    let verdicts = vec![Check::new("twisted", check.critical)];
    let result = TwistedResult {
        mode,
        profiles,
        origin: spec.origin.clone(),
        check,
    };
    let r = report("twisted", None, Some(s), result, verdicts);
    emit(&a.out, &r, Some(&table))
}

fn classify(c: &Common) -> Result<bool> {
    let sc = load_scenario(&c.scenario)?;
    let mut s = settings(&sc, c);
    if let Some(t) = c.tol {
        s.class_tol = t;
    }
    let r = checks::classify_scenario(&sc, &s)?;
    let verdicts = vec![Check::new("classified", r.verdict != Verdict::Unclassified)];
    #[derive(Serialize)]
    struct Out {
        label: &'static str,
        #[serde(flatten)]
        report: gvstar_core::acm::ClassReport,
    }
    let out = Out {
        label: r.verdict.label(),
        report: r,
    };
    let r = report("classify", Some(&sc), Some(s), out, verdicts);
    emit(&c.out, &r, None)
}

#[derive(Debug, Serialize)]
struct RegressEntry {
    scenario: ScenarioInfo,
    grid: usize,
    expectations: Vec<Expectation>,
}

fn regress(a: &RegressArgs) -> Result<bool> {
    let names: Vec<String> = if a.scenarios.is_empty() {
        BUNDLED.iter().map(|(n, _)| n.to_string()).collect()
    } else {
        a.scenarios.clone()
    };
    // parse everything before computing anything
    let scenarios = names.iter().map(|n| load_scenario(n)).collect::<Result<Vec<_>>>()?;
    let base = Settings {
        seed: a.seed,
        count: a.count,
        fd_points: a.fd_points,
        ..Settings::default()
    };
    let mut entries = Vec::new();
    let mut verdicts = Vec::new();
    let mut table = Table::new(&["scenario", "key", "expected", "actual", "pass"]);
    for sc in &scenarios {
        let s = Settings {
            n: a.grid.or(sc.grid_n).unwrap_or(DEFAULT_GRID),
            ..base
        };
        let rows = checks::check_expectations(sc, &s)?;
        for e in &rows {
            eprintln!(
                "{:<22} {:<16} {:<4} expected `{}` got `{}`",
                sc.name,
                e.key,
                if e.pass { "ok" } else { "FAIL" },
                e.expected,
                e.actual
            );
            verdicts.push(Check::new(format!("{}/{}", sc.name, e.key), e.pass));
            table.push(vec![
                Cell::from(sc.name.as_str()),
                Cell::from(e.key.as_str()),
                Cell::from(e.expected.as_str()),
                Cell::from(e.actual.as_str()),
                Cell::from(e.pass),
            ]);
        }
        entries.push(RegressEntry {
            scenario: ScenarioInfo::of(sc),
            grid: s.n,
            expectations: rows,
        });
    }
    let r = report("regress", None, Some(base), entries, verdicts);
    emit(&a.out, &r, Some(&table))
}
