use crate::output::{emit, numeric_csv, Table};
use crate::{invalid, CliError, CliResult, Command, Options};
use hsr::control::{feedback_gain_bilayer, multilayer_controls, ControlLaw};
use hsr::equilibria::{equilibrium_map, lipschitz_constant};
use hsr::hierarchy::{epsilon_sweep, simulate_hierarchy, Hierarchy};
use hsr::io::{parse_json, to_rows, ControlDoc, ControlsDoc, HierarchyDoc, MapDoc, NetworkDoc, UbarMode};
use hsr::ltn::{simulate, LtNetwork};
use hsr::stability::{certify_hierarchy, empirical_decay_check, ges_certificate_single, GesCertificate, LayerOneCheck};
use hsr::sysid::{
    self, autocorr_timescale, objective, predict, r_squared, randomization_test, Bounds, FitConfig, ObjectiveValue,
    RateSeries, StartReport, Structure, SysIdProblem,
};
use hsr::trajectory::parse_numeric_csv;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub fn run(cmd: Command, opts: &Options) -> CliResult<()> {
    match cmd {
        Command::Simulate => simulate_cmd(opts),
        Command::Equilibrium => equilibrium_cmd(opts),
        Command::Certify => certify_cmd(opts),
        Command::Synthesize => synthesize_cmd(opts),
        Command::Recruit => recruit_cmd(opts),
        Command::Fit => fit_cmd(opts),
        Command::Timescale => timescale_cmd(opts),
        Command::Rtest => rtest_cmd(opts),
        Command::Predict => predict_cmd(opts),
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))
}

/// Prefixes parse errors with the file they came from.
fn in_file<T>(path: &Path, r: hsr::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let msg = format!("{}: {e}", path.display());
        if e.is_validation() {
            CliError::Validation(msg)
        } else {
            CliError::Numerical(msg)
        }
    })
}

fn load_net(path: &Path) -> CliResult<LtNetwork<f64>> {
    let doc: NetworkDoc = in_file(path, parse_json(&read(path)?, "network"))?;
    in_file(path, doc.to_network())
}

fn load_hierarchy(path: &Path) -> CliResult<Hierarchy<f64>> {
    let doc: HierarchyDoc = in_file(path, parse_json(&read(path)?, "hierarchy"))?;
    in_file(path, doc.to_hierarchy())
}

fn load_controls(path: &Path, h: &Hierarchy<f64>) -> CliResult<Vec<ControlLaw<f64>>> {
    let doc: ControlsDoc = in_file(path, parse_json(&read(path)?, "controls"))?;
    in_file(path, doc.to_laws(h))
}

enum Model {
    Net(LtNetwork<f64>),
    Hierarchy(Hierarchy<f64>),
}

fn load_model(opts: &Options) -> CliResult<Model> {
    match (&opts.net, &opts.hierarchy) {
        (Some(_), Some(_)) => Err(invalid("give either --net or --hierarchy, not both")),
        (Some(p), None) => Ok(Model::Net(load_net(p)?)),
        (None, Some(p)) => Ok(Model::Hierarchy(load_hierarchy(p)?)),
        (None, None) => Err(invalid("this command needs --net or --hierarchy")),
    }
}

fn interval(v: &[f64], what: &str) -> CliResult<Option<(f64, f64)>> {
    match v {
        [] => Ok(None),
        [a, b] if a.is_finite() && b.is_finite() && b > a => Ok(Some((*a, *b))),
        _ => Err(invalid(format!("--{what} needs two increasing finite values `start,end`"))),
    }
}

fn require_seed(opts: &Options, what: &str) -> CliResult<u64> {
    opts.seed.ok_or_else(|| invalid(format!("{what} is stochastic; pass --seed")))
}

/// `--x0` split per layer, or zeros.
fn initial_states(opts: &Options, sizes: &[usize]) -> CliResult<Vec<DVector<f64>>> {
    let total: usize = sizes.iter().sum();
    if opts.x0.is_empty() {
        return Ok(sizes.iter().map(|&n| DVector::zeros(n)).collect());
    }
    if opts.x0.len() != total {
        return Err(invalid(format!("--x0 has {} entries, expected {total}", opts.x0.len())));
    }
    let mut out = Vec::new();
    let mut at = 0;
    for &n in sizes {
        out.push(DVector::from_column_slice(&opts.x0[at..at + n]));
        at += n;
    }
    Ok(out)
}

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SimulateReport {
    layers: usize,
    t_span: (f64, f64),
    dt: f64,
    samples: usize,
    final_state: Vec<Vec<f64>>,
}

fn simulate_cmd(opts: &Options) -> CliResult<()> {
    let (sizes, taus) = match load_model(opts)? {
        Model::Net(net) => (vec![net.n()], vec![net.tau()]),
        Model::Hierarchy(h) => (h.layers().iter().map(LtNetwork::n).collect(), h.layers().iter().map(LtNetwork::tau).collect()),
    };
    let t_span = interval(&opts.tspan, "tspan")?.unwrap_or((0.0, 10.0 * taus[0]));
    let dt = opts.dt.unwrap_or(taus[taus.len() - 1] / 100.0);
    let x0 = initial_states(opts, &sizes)?;
    let states: Vec<Vec<DVector<f64>>> = match load_model(opts)? {
        Model::Net(net) => {
            let n = net.n();
            let traj = simulate(&net, &x0[0], |_| DVector::zeros(n), t_span, dt)?;
            vec![traj.samples().to_vec()]
        }
        Model::Hierarchy(h) => {
            let laws = match &opts.controls {
                Some(p) => load_controls(p, &h)?,
                None => Vec::new(),
            };
            let run = simulate_hierarchy(&h, &laws, &x0, t_span, dt)?;
            run.layers.iter().map(|t| t.samples().to_vec()).collect()
        }
    };
    let samples = states[0].len();
    let mut header = vec!["t".to_string()];
    if let [n] = sizes.as_slice() {
        header.extend((1..=*n).map(|j| format!("x{j}")));
    } else {
        for (i, &n) in sizes.iter().enumerate() {
            header.extend((1..=n).map(|j| format!("x{}_{j}", i + 1)));
        }
    }
    let rows = (0..samples).map(|k| {
        let mut row = vec![t_span.0 + k as f64 * dt];
        for layer in &states {
            row.extend(layer[k].iter().copied());
        }
        row
    });
    let table = Table { name: "trajectory.csv".into(), contents: numeric_csv(&header, rows) };
    let report = SimulateReport {
        layers: sizes.len(),
        t_span,
        dt,
        samples,
        final_state: states.iter().map(|s| vec_of(&s[samples - 1])).collect(),
    };
    emit(Command::Simulate, &report, vec![table], opts)
}

// ------------------------------------------------------------- equilibrium

#[derive(Serialize)]
struct FeasibleValue {
    piece: String,
    value: Vec<f64>,
}

#[derive(Serialize)]
struct EquilibriumReport {
    n: usize,
    pieces: usize,
    lipschitz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    feasible: Option<Vec<FeasibleValue>>,
    map: MapDoc,
}

fn equilibrium_cmd(opts: &Options) -> CliResult<()> {
    let path = opts.net.as_ref().ok_or_else(|| invalid("equilibrium needs --net"))?;
    let net = load_net(path)?;
    let map = equilibrium_map(net.w(), net.m())?;
    let (input, value, feasible) = if opts.input.is_empty() {
        (None, None, None)
    } else {
        if opts.input.len() != net.n() {
            return Err(invalid(format!("--input has {} entries, expected {}", opts.input.len(), net.n())));
        }
        let d = DVector::from_column_slice(&opts.input);
        let value = vec_of(&map.eval(&d)?);
        let feasible = map
            .feasible_values(&d)
            .into_iter()
            .map(|(l, v)| FeasibleValue { piece: l.to_string(), value: vec_of(&v) })
            .collect();
        (Some(opts.input.clone()), Some(value), Some(feasible))
    };
    let n = net.n();
    let mut csv = String::from("piece,row,f");
    for j in 1..=n {
        let _ = write!(csv, ",F{j}");
    }
    csv.push('\n');
    for p in map.pieces() {
        for i in 0..p.gain.nrows() {
            let _ = write!(csv, "{},{},{:.16e}", p.label, i + 1, p.offset[i]);
            for j in 0..p.gain.ncols() {
                let _ = write!(csv, ",{:.16e}", p.gain[(i, j)]);
            }
            csv.push('\n');
        }
    }
    let report = EquilibriumReport {
        n,
        pieces: map.pieces().len(),
        lipschitz: lipschitz_constant(&map),
        input,
        value,
        feasible,
        map: MapDoc::from_map(&map),
    };
    emit(Command::Equilibrium, &report, vec![Table { name: "pieces.csv".into(), contents: csv }], opts)
}

// ----------------------------------------------------------------- certify

#[derive(Serialize)]
struct CertificateDoc {
    /// 1-based layer number.
    layer: usize,
    pass: bool,
    rho: f64,
    rho_regularized: f64,
    mu: f64,
    rate: f64,
    alpha: Vec<f64>,
    test_matrix: Vec<Vec<f64>>,
}

impl CertificateDoc {
    fn new(layer: usize, c: &GesCertificate<f64>) -> Self {
        Self {
            layer,
            pass: c.pass,
            rho: c.rho,
            rho_regularized: c.rho_regularized,
            mu: c.mu,
            rate: c.rate,
            alpha: vec_of(&c.alpha),
            test_matrix: to_rows(&c.test_matrix),
        }
    }
}

#[derive(Serialize)]
struct LayerOneDoc {
    pass: bool,
    trivially_bounded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<CertificateDoc>,
}

#[derive(Serialize)]
struct DecayDoc {
    pass: bool,
    trials: usize,
    seed: u64,
    samples_checked: usize,
    worst_ratio: f64,
    violations: usize,
}

#[derive(Serialize)]
struct CertifyReport {
    pass: bool,
    /// Spectral radii of layers 2..N (or of the single layer); `null` where
    /// a faster layer failed first.
    rho: Vec<Option<f64>>,
    layers: Vec<Option<CertificateDoc>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    layer_one: Option<LayerOneDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decay: Option<DecayDoc>,
}

fn certify_cmd(opts: &Options) -> CliResult<()> {
    let report = match load_model(opts)? {
        Model::Net(net) => {
            let cert = ges_certificate_single(net.w(), net.tau())?;
            let decay = if opts.trials > 0 {
                let seed = require_seed(opts, "the decay check")?;
                if cert.pass {
                    let d = empirical_decay_check(&net, &cert, opts.trials, seed)?;
                    Some(DecayDoc {
                        pass: d.pass(),
                        trials: d.trials,
                        seed,
                        samples_checked: d.samples_checked,
                        worst_ratio: d.worst_ratio,
                        violations: d.violations,
                    })
                } else {
                    None
                }
            } else {
                None
            };
            CertifyReport {
                pass: cert.pass && decay.as_ref().is_none_or(|d| d.pass),
                rho: vec![Some(cert.rho)],
                layers: vec![Some(CertificateDoc::new(1, &cert))],
                layer_one: None,
                decay,
            }
        }
        Model::Hierarchy(h) => {
            if opts.trials > 0 {
                return Err(invalid("--trials applies to a single layer (--net)"));
            }
            let cert = certify_hierarchy(&h)?;
            let layers: Vec<Option<CertificateDoc>> = cert
                .layers
                .iter()
                .map(|l| l.certificate.as_ref().map(|c| CertificateDoc::new(l.layer + 1, c)))
                .collect();
            let layer_one = cert.layer_one.as_ref().map(|l| match l {
                LayerOneCheck::TriviallyBounded => LayerOneDoc { pass: true, trivially_bounded: true, certificate: None },
                LayerOneCheck::Certified(c) => {
                    LayerOneDoc { pass: c.pass, trivially_bounded: false, certificate: Some(CertificateDoc::new(1, c)) }
                }
            });
            CertifyReport {
                pass: cert.all_pass(),
                rho: layers.iter().map(|l| l.as_ref().map(|c| c.rho)).collect(),
                layers,
                layer_one,
                decay: None,
            }
        }
    };
    let header = ["layer", "rho", "rho_regularized", "mu", "rate", "pass"].map(String::from);
    let rows = report.layers.iter().flatten().map(|c| {
        vec![c.layer as f64, c.rho, c.rho_regularized, c.mu, c.rate, if c.pass { 1.0 } else { 0.0 }]
    });
    let table = Table { name: "certificates.csv".into(), contents: numeric_csv(&header, rows) };
    emit(Command::Certify, &report, vec![table], opts)
}

// -------------------------------------------------------------- synthesize

#[derive(Serialize)]
struct SynthesizeReport {
    pass: bool,
    controls: Vec<ControlDoc>,
}

fn synthesize_controls(h: &Hierarchy<f64>) -> CliResult<(bool, Vec<ControlLaw<f64>>)> {
    let cert = certify_hierarchy(h)?;
    if cert.maps.iter().skip(1).any(Option::is_none) {
        let rho = cert.layers.iter().filter_map(|l| l.certificate.as_ref()).map(|c| c.rho).fold(0.0, f64::max);
        return Err(CliError::Numerical(format!(
            "recruitment maps unavailable: a layer failed its certificate (largest rho {rho})"
        )));
    }
    Ok((cert.all_pass(), multilayer_controls(h, &cert.maps)?))
}

fn synthesize_cmd(opts: &Options) -> CliResult<()> {
    let (pass, docs) = match load_model(opts)? {
        Model::Net(net) => {
            let k = feedback_gain_bilayer(&net)?;
            let doc = ControlDoc { layer: 1, k: to_rows(&k), ubar_mode: UbarMode::None, mode: Some("feedback".into()), ubar: None, online: None };
            (true, vec![doc])
        }
        Model::Hierarchy(h) => {
            let (pass, laws) = synthesize_controls(&h)?;
            (pass, laws.iter().map(ControlDoc::from_law).collect())
        }
    };
    let header = ["layer", "row", "gain_norm"].map(String::from);
    let rows = docs.iter().flat_map(|d| {
        d.k.iter()
            .enumerate()
            .map(move |(i, r)| vec![d.layer as f64, (i + 1) as f64, r.iter().map(|v| v * v).sum::<f64>().sqrt()])
    });
    let table = Table { name: "gains.csv".into(), contents: numeric_csv(&header, rows) };
    emit(Command::Synthesize, &SynthesizeReport { pass, controls: docs }, vec![table], opts)
}

// ----------------------------------------------------------------- recruit

#[derive(Serialize)]
struct SweepDoc {
    eps: f64,
    dt: f64,
    /// Per layer 2..N.
    recruited_error: Vec<f64>,
    inhibited_residual: Vec<f64>,
    rom_error: f64,
    min_control: f64,
}

#[derive(Serialize)]
struct RecruitReport {
    pass: bool,
    controls: &'static str,
    window: (f64, f64),
    points: Vec<SweepDoc>,
    recruited_decreasing: Vec<bool>,
    inhibited_decreasing: Vec<bool>,
    rom_decreasing: bool,
}

pub const DEFAULT_EPS: [f64; 3] = [0.5, 0.1, 0.02];

fn recruit_cmd(opts: &Options) -> CliResult<()> {
    let path = opts.hierarchy.as_ref().ok_or_else(|| invalid("recruit needs --hierarchy"))?;
    let h = load_hierarchy(path)?;
    if h.len() < 2 {
        return Err(invalid("recruit needs at least two layers"));
    }
    let (laws, source) = match &opts.controls {
        Some(p) => (load_controls(p, &h)?, "file"),
        None => (synthesize_controls(&h)?.1, "synthesized"),
    };
    let eps = if opts.eps.is_empty() { DEFAULT_EPS.to_vec() } else { opts.eps.clone() };
    if eps.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(invalid("--eps values must lie in (0, 1]"));
    }
    let sizes: Vec<usize> = h.layers().iter().map(LtNetwork::n).collect();
    let x0 = initial_states(opts, &sizes)?;
    let window = interval(&opts.window, "window")?;
    let rep = epsilon_sweep(&h, &laws, &eps, window, &x0)?;
    let points: Vec<SweepDoc> = rep
        .points
        .iter()
        .map(|p| SweepDoc {
            eps: p.eps,
            dt: p.dt,
            recruited_error: p.recruited_error[1..].to_vec(),
            inhibited_residual: p.inhibited_residual[1..].to_vec(),
            rom_error: p.rom_error,
            min_control: p.min_control,
        })
        .collect();
    let header = ["eps", "dt", "layer", "recruited_error", "inhibited_residual", "rom_error", "min_control"].map(String::from);
    let rows = points.iter().flat_map(|p| {
        (0..p.recruited_error.len())
            .map(move |i| vec![p.eps, p.dt, (i + 2) as f64, p.recruited_error[i], p.inhibited_residual[i], p.rom_error, p.min_control])
    });
    let table = Table { name: "sweep.csv".into(), contents: numeric_csv(&header, rows) };
    let recruited_decreasing = rep.recruited_decreasing[1..].to_vec();
    let report = RecruitReport {
        pass: recruited_decreasing.iter().all(|b| *b),
        controls: source,
        window: rep.window,
        points,
        recruited_decreasing,
        inhibited_decreasing: rep.inhibited_decreasing[1..].to_vec(),
        rom_decreasing: rep.rom_decreasing,
    };
    emit(Command::Recruit, &report, vec![table], opts)
}

// ------------------------------------------------------------ fit, predict

fn load_rates(paths: &[PathBuf]) -> CliResult<Vec<RateSeries>> {
    if paths.is_empty() {
        return Err(invalid("--data needs one rate CSV per condition"));
    }
    paths
        .iter()
        .map(|p| {
            let label = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            in_file(p, RateSeries::from_csv(&read(p)?, label))
        })
        .collect()
}

fn load_problem(opts: &Options) -> CliResult<SysIdProblem> {
    let structure = match &opts.structure {
        Some(p) => in_file(p, parse_json::<Structure>(&read(p)?, "structure"))?,
        None => Structure::case_study(),
    };
    let problem = SysIdProblem::new(structure, load_rates(&opts.data)?, Bounds::default())?;
    match opts.gamma.as_slice() {
        [] => Ok(problem),
        [g1, g2] => Ok(problem.with_weights(*g1, *g2)?),
        _ => Err(invalid("--gamma needs two values `gamma1,gamma2`")),
    }
}

/// Long-format table `condition,t,node,observed,estimate` plus one
/// `prediction_<condition>.csv` per condition.
fn prediction_tables(data: &[RateSeries], est: &[RateSeries]) -> Vec<Table> {
    let mut long = String::from("condition,t,node,observed,estimate\n");
    for (d, e) in data.iter().zip(est) {
        for k in 0..d.len() {
            for (j, id) in d.node_ids.iter().enumerate() {
                let _ = writeln!(long, "{},{:.16e},{id},{:.16e},{:.16e}", d.condition, d.time(k), d.values[j][k], e.values[j][k]);
            }
        }
    }
    let mut tables = vec![Table { name: "estimates.csv".into(), contents: long }];
    tables.extend(est.iter().map(|e| Table { name: format!("prediction_{}.csv", e.condition), contents: e.to_csv() }));
    tables
}

#[derive(Serialize)]
struct Parameter {
    name: String,
    value: f64,
    lower: f64,
    upper: f64,
}

#[derive(Serialize)]
struct FitBody {
    seed: u64,
    config: FitConfig,
    conditions: Vec<String>,
    r_squared: f64,
    objective: ObjectiveValue,
    best_start: usize,
    parameters: Vec<Parameter>,
    z: Vec<f64>,
    starts: Vec<StartReport>,
}

fn fit_cmd(opts: &Options) -> CliResult<()> {
    let seed = require_seed(opts, "fit")?;
    let problem = load_problem(opts)?;
    let cfg = FitConfig { n_starts: opts.starts, max_iters: opts.iters, seed, stop_r2: opts.stop_r2, ..FitConfig::default() };
    let rep = sysid::fit(&problem, &cfg)?;
    let est = predict(&rep.z, &problem)?;
    let parameters = problem
        .parameter_names()
        .into_iter()
        .zip(&rep.z)
        .zip(problem.lower().iter().zip(problem.upper()))
        .map(|((name, &value), (&lower, &upper))| Parameter { name, value, lower, upper })
        .collect();
    let body = FitBody {
        seed,
        config: cfg,
        conditions: problem.data().iter().map(|d| d.condition.clone()).collect(),
        r_squared: rep.r_squared,
        objective: rep.objective,
        best_start: rep.best_start,
        parameters,
        z: rep.z,
        starts: rep.starts,
    };
    emit(Command::Fit, &body, prediction_tables(problem.data(), &est), opts)
}

#[derive(serde::Deserialize)]
struct ParamsDoc {
    z: Vec<f64>,
}

#[derive(Serialize)]
struct PredictBody {
    conditions: Vec<String>,
    r_squared: f64,
    objective: ObjectiveValue,
}

fn predict_cmd(opts: &Options) -> CliResult<()> {
    let path = opts.params.as_ref().ok_or_else(|| invalid("predict needs --params"))?;
    let params: ParamsDoc = in_file(path, parse_json(&read(path)?, "parameters"))?;
    let problem = load_problem(opts)?;
    let est = predict(&params.z, &problem)?;
    let body = PredictBody {
        conditions: problem.data().iter().map(|d| d.condition.clone()).collect(),
        r_squared: r_squared(problem.data(), &est)?,
        objective: objective(&params.z, &problem)?,
    };
    emit(Command::Predict, &body, prediction_tables(problem.data(), &est), opts)
}

// -------------------------------------------------------- timescale, rtest

fn timescale_cmd(opts: &Options) -> CliResult<()> {
    let [path] = opts.data.as_slice() else {
        return Err(invalid("timescale needs one --data file (rows = trials, columns = bins)"));
    };
    let table = in_file(path, parse_numeric_csv(&read(path)?))?;
    let bins = table.header.len();
    let trials = table.rows.len();
    let m = DMatrix::from_fn(trials, bins, |i, k| table.rows[i][k]);
    let lags = match opts.lags.as_slice() {
        [] => 1..=bins.saturating_sub(1).min(5),
        [a, b] if a <= b => *a..=*b,
        _ => return Err(invalid("--lags needs `first,last` with first <= last")),
    };
    let fit = autocorr_timescale(&m, opts.bin_width, lags)?;
    let mut csv = String::from("lag,rho_bar\n");
    for (k, r) in fit.rho_bar.iter().enumerate() {
        match r {
            Some(v) => {
                let _ = writeln!(csv, "{k},{v:.16e}");
            }
            None => {
                let _ = writeln!(csv, "{k},");
            }
        }
    }
    emit(Command::Timescale, &fit, vec![Table { name: "autocorrelation.csv".into(), contents: csv }], opts)
}

#[derive(Serialize)]
struct RtestReport {
    p_value: f64,
    significant: bool,
    n_perm: usize,
    seed: u64,
    n_a: usize,
    n_b: usize,
    mean_a: f64,
    mean_b: f64,
}

fn one_column(path: &Path) -> CliResult<Vec<f64>> {
    let table = in_file(path, parse_numeric_csv(&read(path)?))?;
    if table.header.len() != 1 {
        return Err(invalid(format!("{}: expected a single column", path.display())));
    }
    Ok(table.rows.into_iter().map(|r| r[0]).collect())
}

fn rtest_cmd(opts: &Options) -> CliResult<()> {
    let seed = require_seed(opts, "rtest")?;
    let [a, b] = opts.data.as_slice() else {
        return Err(invalid("rtest needs --data a.csv,b.csv"));
    };
    let (a, b) = (one_column(a)?, one_column(b)?);
    let p = randomization_test(&a, &b, opts.perms, seed)?;
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let report = RtestReport {
        p_value: p,
        significant: p < 0.05,
        n_perm: opts.perms,
        seed,
        n_a: a.len(),
        n_b: b.len(),
        mean_a: mean(&a),
        mean_b: mean(&b),
    };
    let header = ["p_value", "mean_a", "mean_b"].map(String::from);
    let table = Table { name: "rtest.csv".into(), contents: numeric_csv(&header, [vec![p, report.mean_a, report.mean_b]]) };
    emit(Command::Rtest, &report, vec![table], opts)
}
