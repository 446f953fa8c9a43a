use crate::{Command, CommonFit, FitArgs, SweepArgs};
use anyhow::{anyhow, Context};
use costwise::circuit::{filter_by_wait, validate, CircuitError, CostCircuit};
use costwise::data::{generate, make_training_set, read_csv, split, write_csv, Cohort, DataError};
use costwise::dnf::{reduce, ReductionError, ReductionOptions, ThreeLayerForm};
use costwise::evaluation::{
    deployment, evaluate_model, frontier_table, lambda_pairs, log_grid, sweep, sweep_table, Deployment, EvalError,
    EvalOptions, EvalReport, SweepConfig, Table,
};
use costwise::regularizer::{build_all_groups, RegularizerError};
use costwise::solver::{train, FitConfig, FittedModel, SolverError};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad input: flags, schema or graph structure.
    Validation,
    /// Input was fine but the work failed: I/O, blow-up, divergence.
    Runtime,
}

impl Kind {
    pub fn code(self) -> u8 {
        match self {
            Kind::Validation => 1,
            Kind::Runtime => 2,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl Failure {
    fn validation(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            kind: Kind::Validation,
            error: error.into(),
        }
    }

    fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            kind: Kind::Runtime,
            error: error.into(),
        }
    }

    fn context(mut self, msg: String) -> Self {
        self.error = self.error.context(msg);
        self
    }
}

fn circuit_kind(e: &CircuitError) -> Kind {
    match e {
        CircuitError::Io(_) => Kind::Runtime,
        _ => Kind::Validation,
    }
}

fn data_kind(e: &DataError) -> Kind {
    match e {
        DataError::Io(_) | DataError::QuotaUnmet { .. } => Kind::Runtime,
        DataError::Reduction(r) => reduction_kind(r),
        _ => Kind::Validation,
    }
}

fn reduction_kind(e: &ReductionError) -> Kind {
    match e {
        ReductionError::BlowUp { .. } => Kind::Runtime,
        _ => Kind::Validation,
    }
}

fn solver_kind(e: &SolverError) -> Kind {
    match e {
        SolverError::Diverged { .. } => Kind::Runtime,
        _ => Kind::Validation,
    }
}

fn eval_kind(e: &EvalError) -> Kind {
    match e {
        EvalError::Solver(s) => solver_kind(s),
        EvalError::Circuit(c) => circuit_kind(c),
        EvalError::Reduction(r) => reduction_kind(r),
        EvalError::Data(d) => data_kind(d),
        _ => Kind::Validation,
    }
}

macro_rules! classify {
    ($($ty:ty => $f:expr),* $(,)?) => {
        $(impl From<$ty> for Failure {
            fn from(e: $ty) -> Self {
                Failure { kind: $f(&e), error: e.into() }
            }
        })*
    };
}

classify! {
    CircuitError => circuit_kind,
    DataError => data_kind,
    ReductionError => reduction_kind,
    SolverError => solver_kind,
    EvalError => eval_kind,
    RegularizerError => |_: &RegularizerError| Kind::Validation,
    io::Error => |_: &io::Error| Kind::Runtime,
}

/// What `fit` writes and `cost-report` reads back.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub model: FittedModel,
    pub evaluation: EvalReport,
    pub deployment: Deployment,
}

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { graph } => cmd_validate(&graph),
        Command::Reduce {
            graph,
            output,
            wait_cap,
            max_minterms,
            groups,
        } => cmd_reduce(&graph, output.as_deref(), wait_cap, max_minterms, groups.as_deref()),
        Command::GenData {
            graph,
            pos,
            neg,
            horizon,
            seed,
            output,
        } => {
            let circuit = load_circuit(&graph)?;
            let cohort = generate(&circuit, pos, neg, horizon, seed)?;
            let mut buf = Vec::new();
            write_csv(&cohort.without_truth(), &mut buf)?;
            emit(output.as_deref(), &buf)
        }
        Command::Fit(args) => cmd_fit(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Frontier {
            sweep,
            output,
            objectives,
            group_by,
        } => {
            let objectives = parse_objectives(&objectives)?;
            let table = Table::read(open(&sweep)?)?;
            let front = frontier_table(&table, &objectives, &group_by)?;
            let mut buf = Vec::new();
            front.write(&mut buf)?;
            emit(output.as_deref(), &buf)
        }
        Command::CostReport { model, graph } => cmd_cost_report(&model, &graph),
    }
}

fn cmd_validate(graph: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(graph)
        .map_err(|e| Failure::runtime(e).context(format!("reading {}", graph.display())))?;
    let circuit =
        CostCircuit::from_json(&text).map_err(|e| Failure::from(e).context(format!("loading {}", graph.display())))?;
    let report = validate(&circuit);
    if report.is_ok() {
        println!("{}: OK", graph.display());
        Ok(())
    } else {
        Err(Failure::validation(anyhow!(
            "{}: invalid circuit\n{report}",
            graph.display()
        )))
    }
}

fn cmd_reduce(
    graph: &Path,
    output: Option<&Path>,
    wait_cap: Option<f64>,
    max_minterms: usize,
    groups: Option<&Path>,
) -> Result<(), Failure> {
    let circuit = load_circuit(graph)?;
    let (circuit, form) = reduced(&circuit, wait_cap, max_minterms)?;
    if let Some(path) = groups {
        let specs = build_all_groups(&form, &circuit, |_| 1.0)?;
        let json = serde_json::to_string_pretty(&specs).map_err(Failure::runtime)?;
        emit(Some(path), (json + "\n").as_bytes())?;
    }
    emit(output, (form.to_json() + "\n").as_bytes())
}

fn cmd_fit(args: FitArgs) -> Result<(), Failure> {
    let c = &args.common;
    let circuit = load_circuit(&c.graph)?;
    let cohort = load_cohort(&c.data)?;
    let (filtered, form) = reduced(&circuit, args.wait_cap, c.max_minterms)?;
    let (train_side, test_side) = split(&cohort, c.train_frac, c.seed)?;
    let data = make_training_set(&train_side, c.seed)?;
    let cfg = FitConfig {
        lambda_financial: args.lambda_fin,
        lambda_time: args.lambda_time,
        ..fit_config(c)
    };
    let model = train(args.method, &data, &form, &filtered, &cfg, args.wait_cap)?;
    let model_ref = match args.wait_cap {
        Some(w) => format!("{}/W={w}/lf={}/lt={}", args.method, args.lambda_fin, args.lambda_time),
        None => format!("{}/lf={}/lt={}", args.method, args.lambda_fin, args.lambda_time),
    };
    // costs are read off the unfiltered circuit, which carries every annotation
    let evaluation = evaluate_model(&model, &test_side, &form, &circuit, &eval_options(c), &model_ref)?;
    let deployment = deployment(&model, &form, &circuit);
    let file = ModelFile {
        model,
        evaluation,
        deployment,
    };
    let json = serde_json::to_string_pretty(&file).map_err(Failure::runtime)?;
    emit(args.output.as_deref(), (json + "\n").as_bytes())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let c = &args.common;
    let grid_ok =
        args.grid_points > 0 && args.grid_min > 0.0 && args.grid_max >= args.grid_min && args.grid_max.is_finite();
    if !grid_ok {
        return Err(Failure::validation(anyhow!(
            "grid needs 0 < --grid-min <= --grid-max and --grid-points >= 1"
        )));
    }
    let circuit = load_circuit(&c.graph)?;
    let cohort = load_cohort(&c.data)?;
    let cfg = SweepConfig {
        lambda_grid: lambda_pairs(
            &log_grid(args.grid_min, args.grid_max, args.grid_points),
            args.lambda_time,
        ),
        wait_caps: args.wait_caps.clone(),
        methods: args.methods.clone(),
        fit: fit_config(c),
        train_frac: c.train_frac,
        seed: c.seed,
        eval: eval_options(c),
        workers: args.workers,
        reduction: ReductionOptions {
            max_minterms: c.max_minterms,
        },
    };
    let points = sweep(&cohort, &circuit, &cfg)?;
    let failed = points.iter().filter(|p| p.result.is_err()).count();
    if failed > 0 {
        eprintln!(
            "warning: {failed} of {} sweep points failed; see the status column",
            points.len()
        );
    }
    let mut buf = Vec::new();
    sweep_table(&points, &circuit, c.specificity).write(&mut buf)?;
    emit(args.output.as_deref(), &buf)
}

fn cmd_cost_report(model: &Path, graph: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(model)
        .map_err(|e| Failure::runtime(e).context(format!("reading {}", model.display())))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Failure::validation(e).context(format!("parsing model file {}", model.display())))?;
    let circuit = load_circuit(graph)?;
    let (_, form) = reduced(&circuit, file.model.wait_cap, costwise::dnf::DEFAULT_MAX_MINTERMS)?;
    if form.extended_size() != file.model.model.index.len() && file.model.method == costwise::solver::Method::Group {
        return Err(Failure::validation(anyhow!(
            "model does not match graph {}: {} coordinates vs {}",
            graph.display(),
            file.model.model.index.len(),
            form.extended_size()
        )));
    }
    let report = deployment(&file.model, &form, &circuit);
    let json = serde_json::to_string_pretty(&report).map_err(Failure::runtime)?;
    emit(None, (json + "\n").as_bytes())
}

/// The circuit restricted to the wait cap, if any, and its reduction.
fn reduced(
    circuit: &CostCircuit,
    wait_cap: Option<f64>,
    max_minterms: usize,
) -> Result<(CostCircuit, ThreeLayerForm), Failure> {
    let filtered = match wait_cap {
        Some(w) => filter_by_wait(circuit, w)?,
        None => circuit.clone(),
    };
    let form = reduce(&filtered, ReductionOptions { max_minterms })?;
    Ok((filtered, form))
}

fn fit_config(c: &CommonFit) -> FitConfig {
    FitConfig {
        max_iters: c.max_iters,
        tol: c.tol,
        seed: c.seed,
        ..FitConfig::default()
    }
}

fn eval_options(c: &CommonFit) -> EvalOptions {
    EvalOptions {
        bootstrap: c.bootstrap,
        seed: c.seed,
        specificities: vec![c.specificity],
    }
}

fn parse_objectives(spec: &str) -> Result<Vec<(String, bool)>, Failure> {
    spec.split(',')
        .map(|item| match item.trim().rsplit_once(':') {
            Some((col, "max")) => Ok((col.to_string(), true)),
            Some((col, "min")) => Ok((col.to_string(), false)),
            _ => Err(Failure::validation(anyhow!(
                "objective '{item}' must be column:min or column:max"
            ))),
        })
        .collect()
}

fn load_circuit(path: &Path) -> Result<CostCircuit, Failure> {
    CostCircuit::load(path).map_err(|e| Failure::from(e).context(format!("loading {}", path.display())))
}

fn load_cohort(path: &Path) -> Result<Cohort, Failure> {
    read_csv(open(path)?).map_err(|e| Failure::from(e).context(format!("reading {}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(Failure::runtime)
}

/// Writes `bytes` to `path`, or to stdout without one.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    let result = match path {
        Some(p) => File::create(p).and_then(|f| {
            let mut w = BufWriter::new(f);
            w.write_all(bytes)?;
            w.flush()
        }),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush())
        }
    };
    result.map_err(|e| {
        let target = path.map_or_else(|| PathBuf::from("stdout"), Path::to_path_buf);
        Failure::runtime(e).context(format!("writing {}", target.display()))
    })
}
