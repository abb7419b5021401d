mod output;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use kmuc::capacity::{region_pareto, region_sample, RateTuple, RegionOptions};
use kmuc::channels::{read_channel, write_channel, ChannelDocument, ConnectionGraph};
use kmuc::fidelities::{
    average_fidelity_exact, average_fidelity_mc, group_channel_fidelity, min_subspace_fidelity, FidelityMode,
};
use kmuc::optim::SearchBudget;
use kmuc::protocols::{default_ensembles, teleport_channel, twirl_channel};
use kmuc::rng::Stream;
use kmuc::tensor::{max_entangled_ket, ComplexMatrix, DensityOperator, SubspaceBasis, SystemLayout, C64};

use output::{joined, Cell, Format, Table};

#[derive(Parser)]
#[command(
    name = "kmuc",
    version,
    about = "Fidelities and coherent-information rates of multiparty quantum channels"
)]
struct Cli {
    /// Output format for tables.
    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a channel file and report its completeness defect.
    Validate { file: PathBuf },
    /// Channel, group, average and minimum fidelities.
    Fidelity(FidelityArgs),
    /// Achievable coherent-information rates by weighted-sum search.
    Region(RegionArgs),
    /// Run the identity and inequality checks on a channel and/or the built-in fixtures.
    Verify(VerifyArgs),
    /// Twirl each connection by a unitary ensemble and write the resulting channel.
    Twirl(TwirlArgs),
    /// Channel induced by teleportation over a noisy resource state.
    Teleport(TeleportArgs),
}

#[derive(Args)]
struct FidelityArgs {
    file: PathBuf,
    /// Monte Carlo samples for the average fidelity.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restarts for the minimum-fidelity search.
    #[arg(long, default_value_t = 32)]
    restarts: usize,
}

#[derive(Args)]
struct RegionArgs {
    file: PathBuf,
    /// Blocklength.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// One weight per connection, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "grid")]
    weights: Option<Vec<f64>>,
    /// Scan a simplex grid with this many steps and keep the Pareto points.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
}

#[derive(Args)]
struct VerifyArgs {
    file: Option<PathBuf>,
    /// Also check the built-in fixture channels.
    #[arg(long)]
    fixtures: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo samples for the average-fidelity check.
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    /// Tolerance for deterministic identities and inequalities.
    #[arg(long, default_value_t = 1e-9)]
    tol_exact: f64,
    /// Tolerance for statistical checks, in standard errors.
    #[arg(long, default_value_t = 3.0)]
    tol_stat: f64,
    /// Haar ensemble size for connections without an exact design.
    #[arg(long, default_value_t = 64)]
    ensemble: usize,
    /// Random instances per inequality sweep.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
}

#[derive(Args)]
struct TwirlArgs {
    file: PathBuf,
    /// Haar ensemble size for connections without an exact design.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TeleportArgs {
    /// Resource state file: `{"dims": [d, d], "matrix": [[[re, im], ..], ..]}`.
    #[arg(long, conflicts_with_all = ["isotropic", "dim"])]
    state: Option<PathBuf>,
    /// Isotropic resource `(1 - eps) Phi + eps I / d^2`.
    #[arg(long, requires = "dim")]
    isotropic: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    dims: Vec<usize>,
    matrix: Vec<Vec<[f64; 2]>>,
}

enum Failure {
    Lib(kmuc::Error),
    Io(String),
    Usage(String),
    Checks,
}

type Outcome = std::result::Result<String, (Failure, Option<String>)>;

fn lib<T>(r: kmuc::Result<T>) -> std::result::Result<T, (Failure, Option<String>)> {
    r.map_err(|e| (Failure::Lib(e), None))
}

fn read_text(path: &Path) -> std::result::Result<String, (Failure, Option<String>)> {
    std::fs::read_to_string(path).map_err(|e| (Failure::Io(format!("{}: {e}", path.display())), None))
}

fn load(path: &Path) -> std::result::Result<ChannelDocument, (Failure, Option<String>)> {
    lib(read_channel(&read_text(path)?))
}

fn subset_label(s: &[usize]) -> String {
    format!(
        "group_fidelity[{}]",
        s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
    )
}

fn validate(file: &Path, format: Format) -> Outcome {
    let text = read_text(file)?;
    let mut t = Table::new(&["name", "value"]);
    match read_channel(&text) {
        Ok(doc) => {
            let r = doc.channel.validate();
            t.push(vec!["in_dims".into(), joined(doc.channel.in_layout().leg_dims())]);
            t.push(vec!["out_dims".into(), joined(doc.channel.out_layout().leg_dims())]);
            let conns: Vec<String> = doc
                .graph
                .connections()
                .iter()
                .map(|c| format!("{}->{}:{}", c.sender, c.receiver, c.ref_dim))
                .collect();
            t.push(vec!["connections".into(), joined(&conns)]);
            t.push(vec!["kraus_count".into(), r.kraus_count.into()]);
            t.push(vec!["completeness_defect".into(), r.completeness_defect.into()]);
            t.push(vec![
                "status".into(),
                (if r.passed { "valid" } else { "invalid" }).into(),
            ]);
            Ok(t.render(format))
        }
        Err(kmuc::Error::NotTracePreserving(defect)) => {
            t.push(vec!["completeness_defect".into(), defect.into()]);
            t.push(vec!["status".into(), "invalid".into()]);
            Err((
                Failure::Lib(kmuc::Error::NotTracePreserving(defect)),
                Some(t.render(format)),
            ))
        }
        Err(e) => Err((Failure::Lib(e), None)),
    }
}

fn fidelity(a: &FidelityArgs, format: Format) -> Outcome {
    let ChannelDocument { channel: ch, graph } = load(&a.file)?;
    let g = graph.len();
    let mut t = Table::new(&["name", "value", "method", "stderr"]);
    for mask in 1u32..(1 << g) {
        let subset: Vec<usize> = (0..g).filter(|&i| mask & (1 << i) != 0).collect();
        let name = if subset.len() == g {
            "channel_fidelity".to_string()
        } else {
            subset_label(&subset)
        };
        for (mode, label) in [
            (FidelityMode::Definition, "definition"),
            (FidelityMode::KrausTrace, "kraus_trace"),
        ] {
            let v = lib(group_channel_fidelity(&ch, &graph, &subset, mode))?;
            t.push(vec![name.clone().into(), v.into(), label.into(), Cell::Empty]);
        }
    }
    let exact = lib(average_fidelity_exact(&ch, &graph))?;
    t.push(vec![
        "average_fidelity".into(),
        exact.into(),
        "exact".into(),
        Cell::Empty,
    ]);
    let root = Stream::new(a.seed);
    let mc = lib(average_fidelity_mc(&ch, &graph, a.samples, &root.substream(0)))?;
    t.push(vec![
        "average_fidelity".into(),
        mc.mean.into(),
        "monte_carlo".into(),
        mc.stderr.into(),
    ]);
    let full: Vec<SubspaceBasis> = graph.ref_dims().iter().map(|&d| SubspaceBasis::full(d)).collect();
    let budget = SearchBudget::new(a.restarts, root.substream(1).next_u64());
    let min = lib(min_subspace_fidelity(&ch, &graph, &full, &budget))?;
    t.push(vec![
        "min_fidelity".into(),
        min.value.into(),
        "heuristic".into(),
        Cell::Empty,
    ]);
    Ok(t.render(format))
}

fn region(a: &RegionArgs, format: Format) -> Outcome {
    let ChannelDocument { channel: ch, graph } = load(&a.file)?;
    let opts = RegionOptions {
        restarts: a.restarts,
        seed: a.seed,
        ..RegionOptions::default()
    };
    let points: Vec<RateTuple> = match (&a.weights, a.grid) {
        (Some(w), _) => vec![lib(region_sample(&ch, &graph, a.n, w, &opts))?],
        (None, Some(steps)) => lib(region_pareto(&ch, &graph, a.n, steps, &opts))?,
        (None, None) => {
            let w = vec![1.0 / graph.len() as f64; graph.len()];
            vec![lib(region_sample(&ch, &graph, a.n, &w, &opts))?]
        }
    };
    let mut t = Table::new(&["weights", "rates", "objective", "blocklength", "restart"]);
    for p in points {
        t.push(vec![
            joined(&p.weights),
            joined(&p.rates),
            p.objective.into(),
            p.blocklength.into(),
            p.restart.into(),
        ]);
    }
    Ok(t.render(format))
}

fn run_verify(a: &VerifyArgs, format: Format) -> Outcome {
    let mut subjects: Vec<(String, kmuc::channels::KrausChannel, ConnectionGraph)> = Vec::new();
    if let Some(file) = &a.file {
        let doc = load(file)?;
        let name = file
            .file_stem()
            .map_or("input".into(), |s| s.to_string_lossy().into_owned());
        subjects.push((name, doc.channel, doc.graph));
    }
    if a.fixtures {
        for f in lib(kmuc::fixtures::builtin())? {
            subjects.push((f.name.to_string(), f.channel, f.graph));
        }
    }
    if subjects.is_empty() {
        return Err((Failure::Usage("give a channel file, --fixtures, or both".into()), None));
    }
    let settings = verify::Settings {
        samples: a.samples,
        tol_exact: a.tol_exact,
        tol_stat: a.tol_stat,
        ensemble_size: a.ensemble,
        trials: a.trials,
        restarts: a.restarts,
    };
    let root = Stream::new(a.seed);
    let mut t = Table::new(&verify::HEADER);
    let mut all_pass = true;
    for (i, (name, ch, graph)) in subjects.iter().enumerate() {
        let checks = lib(verify::run(name, ch, graph, &settings, &root.substream(i as u64)))?;
        all_pass &= checks.iter().all(|c| c.passed);
        verify::push_rows(&mut t, &checks);
    }
    let text = t.render(format);
    if all_pass {
        Ok(text)
    } else {
        Err((Failure::Checks, Some(text)))
    }
}

fn twirl(a: &TwirlArgs) -> Outcome {
    let ChannelDocument { channel: ch, graph } = load(&a.file)?;
    let ensembles = lib(default_ensembles(&graph, a.samples, &Stream::new(a.seed)))?;
    let tw = lib(twirl_channel(&ch, &graph, &ensembles))?;
    Ok(write_channel(&tw, &graph))
}

fn parse_state(text: &str) -> kmuc::Result<DensityOperator> {
    let raw: StateFile = serde_json::from_str(text).map_err(|e| kmuc::Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let layout = SystemLayout::new(raw.dims).map_err(|e| kmuc::Error::Field {
        field: "dims".into(),
        message: e.to_string(),
    })?;
    let d = layout.total_dim();
    if raw.matrix.len() != d || raw.matrix.iter().any(|r| r.len() != d) {
        return Err(kmuc::Error::Field {
            field: "matrix".into(),
            message: format!("expected a {d}x{d} matrix"),
        });
    }
    let data = raw.matrix.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
    DensityOperator::new(ComplexMatrix::from_vec(d, d, data)?, layout)
}

fn teleport(a: &TeleportArgs) -> Outcome {
    let resource = match (&a.state, a.isotropic, a.dim) {
        (Some(path), _, _) => lib(parse_state(&read_text(path)?))?,
        (None, Some(eps), Some(d)) => lib(isotropic(d, eps))?,
        _ => {
            return Err((
                Failure::Usage("give --state FILE or --isotropic EPS --dim D".into()),
                None,
            ))
        }
    };
    let ch = lib(teleport_channel(&resource))?;
    Ok(write_channel(&ch, &ConnectionGraph::single(ch.in_dim())))
}

fn isotropic(d: usize, eps: f64) -> kmuc::Result<DensityOperator> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(kmuc::Error::InvalidParameter(format!(
            "isotropic noise {eps} outside [0, 1]"
        )));
    }
    let layout = SystemLayout::new(vec![d, d])?;
    let phi = ComplexMatrix::projector(&max_entangled_ket(d));
    let mut m = ComplexMatrix::identity(d * d).scale(eps / (d * d) as f64);
    m.add_assign_scaled(&phi, C64::new(1.0 - eps, 0.0));
    DensityOperator::new(m, layout)
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Checks => 1,
        Failure::Usage(_) | Failure::Io(_) => 2,
        Failure::Lib(e) if e.is_resource_limit() => 3,
        Failure::Lib(kmuc::Error::Parse { .. } | kmuc::Error::Field { .. } | kmuc::Error::InvalidParameter(_)) => 2,
        Failure::Lib(_) => 1,
    }
}

fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { file } => validate(file, cli.format),
        Command::Fidelity(a) => fidelity(a, cli.format),
        Command::Region(a) => region(a, cli.format),
        Command::Verify(a) => run_verify(a, cli.format),
        Command::Twirl(a) => twirl(a),
        Command::Teleport(a) => teleport(a),
    };
    let (text, failure) = match result {
        Ok(text) => (Some(text), None),
        Err((f, text)) => (text, Some(f)),
    };
    if let Some(text) = text {
        if let Err(e) = emit(&text, cli.out.as_deref()) {
            eprintln!("error: cannot write output: {e}");
            return ExitCode::from(2);
        }
    }
    match failure {
        None => ExitCode::SUCCESS,
        Some(f) => {
            match &f {
                Failure::Lib(e) => eprintln!("error: {e}"),
                Failure::Io(m) | Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Checks => eprintln!("error: some checks failed"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}
