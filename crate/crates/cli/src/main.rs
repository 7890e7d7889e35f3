use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use debm::data::{load_dataset, significance_filter, TTestKind};
use debm::eval::{
    self, bootstrap_positional_variance, run_method, run_sweep, staging_auc_cv, BootstrapOptions,
    ExperimentResult, GridCell, Method, MethodOptions, SweepConfig,
};
use debm::models::{DebmDistance, DebmOptions, FittedModel};
use debm::ordering::WeightReading;
use debm::{seed, sim, svg, BiomarkerDataset};

#[derive(Parser, Debug)]
#[command(name = "debm", version, about = "Discriminative event-based modelling of biomarker cascades")]
struct Cli {
    /// Worker threads for parallel subcommands (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = seed::DEFAULT_SEED)]
    seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    DebmProb,
    DebmPlain,
    Ebm,
    EbmModified,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::DebmProb => Method::DebmProb,
            MethodArg::DebmPlain => Method::DebmPlain,
            MethodArg::Ebm => Method::EbmPlainGmm,
            MethodArg::EbmModified => Method::EbmRobust,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReadingArg {
    Literal,
    Displaced,
}

impl From<ReadingArg> for WeightReading {
    fn from(r: ReadingArg) -> Self {
        match r {
            ReadingArg::Literal => WeightReading::Literal,
            ReadingArg::Displaced => WeightReading::Displaced,
        }
    }
}

#[derive(clap::Args, Debug, Clone, Copy)]
struct SearchArgs {
    /// Weighting used by the probabilistic Kendall distance.
    #[arg(long, value_enum, default_value_t = ReadingArg::Displaced)]
    reading: ReadingArg,

    /// Extra random restarts of the consensus search.
    #[arg(long, default_value_t = 0)]
    consensus_restarts: usize,

    /// Random restarts of the EBM likelihood ascent.
    #[arg(long, default_value_t = 10)]
    ebm_restarts: usize,
}

impl SearchArgs {
    fn options(&self) -> Result<MethodOptions, Failure> {
        if self.ebm_restarts == 0 {
            return Err(Failure::Usage("--ebm-restarts must be at least 1".into()));
        }
        Ok(MethodOptions {
            ebm_restarts: self.ebm_restarts,
            consensus_restarts: self.consensus_restarts,
            reading: self.reading.into(),
        })
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a synthetic cohort and its ground-truth ordering.
    Simulate {
        #[arg(long, default_value_t = 7)]
        n: usize,
        /// Subjects per class as CN,MCI,AD.
        #[arg(long, default_value = "162,210,137")]
        counts: String,
        #[arg(long, default_value_t = 1.0)]
        sigma_beta: f64,
        #[arg(long, default_value_t = 0.0)]
        sigma_xi_mult: f64,
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth sidecar (JSON).
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Fit mixtures and an event ordering.
    Fit {
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::DebmProb)]
        method: MethodArg,
        /// Keep only biomarkers whose CN-vs-AD t-test p-value is below this.
        #[arg(long)]
        filter_p: Option<f64>,
        #[arg(long)]
        welch: bool,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stage subjects under a fitted model (JSON written by `fit`).
    Stage {
        #[arg(long)]
        model: PathBuf,
        dataset: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inaccuracy sweep over a simulation grid.
    Benchmark {
        /// Comma-separated methods (debm-prob, debm-plain, ebm, ebm-modified).
        #[arg(long, value_enum, value_delimiter = ',', default_value = "debm-prob,debm-plain,ebm,ebm-modified")]
        methods: Vec<MethodArg>,
        #[arg(long, default_value_t = 7)]
        n: usize,
        #[arg(long, default_value = "162,210,137")]
        counts: String,
        /// Comma-separated baseline noise levels.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        sigma_beta: Vec<f64>,
        /// Comma-separated onset-spread multipliers.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        sigma_xi_mult: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        /// Record zero seconds so that output is reproducible byte for byte.
        #[arg(long)]
        no_timing: bool,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for SVG line plots.
        #[arg(long)]
        svg_dir: Option<PathBuf>,
    },
    /// Positional variance of the central ordering under resampling.
    Bootstrap {
        dataset: PathBuf,
        #[arg(long, default_value_t = 100)]
        b: usize,
        /// Resample without regard to diagnosis.
        #[arg(long)]
        unstratified: bool,
        #[arg(long, value_enum, default_value_t = ReadingArg::Displaced)]
        reading: ReadingArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Cross-validated CN-vs-AD staging AUC.
    Cv {
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::DebmProb)]
        method: MethodArg,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarise a benchmark saved with `--format json`.
    Report {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg_dir: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    /// Bad flags, unreadable or unwritable files: exit 2.
    Usage(String),
    /// The analysis itself failed: exit 1.
    Domain(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Domain(_) => 1,
        }
    }
}

impl From<debm::Error> for Failure {
    fn from(e: debm::Error) -> Self {
        match e {
            debm::Error::Io(_) | debm::Error::Json(_) | debm::Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn io_context(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::Usage(format!("{}: {e}", path.display()))
}

fn read_dataset(path: &Path) -> Result<BiomarkerDataset, Failure> {
    let file = File::open(path).map_err(io_context(path))?;
    load_dataset(BufReader::new(file)).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

fn parse_counts(s: &str) -> Result<(usize, usize, usize), Failure> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("--counts expects CN,MCI,AD integers, got `{s}`")))?;
    match parts[..] {
        [cn, mci, ad] => Ok((cn, mci, ad)),
        _ => Err(Failure::Usage(format!("--counts expects three values, got `{s}`"))),
    }
}

/// Stage every output in a temporary file beside its target, then rename,
/// so nothing is written unless every output was produced.
struct Outputs {
    staged: Vec<(NamedTempFile, PathBuf)>,
    stdout: Vec<u8>,
}

impl Outputs {
    fn new() -> Self {
        Self {
            staged: Vec::new(),
            stdout: Vec::new(),
        }
    }

    fn add(&mut self, path: Option<&Path>, bytes: Vec<u8>) -> Result<(), Failure> {
        let Some(path) = path else {
            self.stdout.extend(bytes);
            return Ok(());
        };
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = NamedTempFile::new_in(dir).map_err(io_context(path))?;
        tmp.write_all(&bytes).map_err(io_context(path))?;
        self.staged.push((tmp, path.to_path_buf()));
        Ok(())
    }

    fn commit(self) -> Result<(), Failure> {
        for (tmp, path) in self.staged {
            tmp.persist(&path).map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e.error)))?;
        }
        io::stdout().write_all(&self.stdout)?;
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Failure::Domain(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

#[derive(Debug, Serialize, Deserialize)]
struct SubjectStage {
    subject_id: String,
    diagnosis: String,
    stage: usize,
}

fn subject_stages(dataset: &BiomarkerDataset, stages: &[usize]) -> Vec<SubjectStage> {
    dataset
        .subject_ids()
        .iter()
        .zip(dataset.labels())
        .zip(stages)
        .map(|((id, l), &s)| SubjectStage {
            subject_id: id.clone(),
            diagnosis: l.to_string(),
            stage: s,
        })
        .collect()
}

fn stages_csv(rows: &[SubjectStage]) -> Vec<u8> {
    let mut out = String::from("subject_id,diagnosis,stage\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.subject_id, r.diagnosis, r.stage));
    }
    out.into_bytes()
}

#[derive(Debug, Serialize)]
struct FitReport<'a> {
    #[serde(flatten)]
    model: &'a FittedModel,
    stages: Vec<SubjectStage>,
}

fn model_csv(model: &FittedModel) -> Vec<u8> {
    let mut out = String::from("position,biomarker,theta,mu_normal,sigma_normal,mu_abnormal,sigma_abnormal\n");
    for (p, name) in model.ordering.iter().enumerate() {
        let m = model
            .mixtures
            .iter()
            .find(|m| &m.name == name)
            .expect("ordering names come from the mixtures");
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p + 1,
            name,
            m.theta,
            m.normal.mu,
            m.normal.sigma,
            m.abnormal.mu,
            m.abnormal.sigma
        ));
    }
    out.into_bytes()
}

/// Line plots of mean inaccuracy with one-standard-error bars. One plot
/// per onset-spread multiplier when several noise levels were swept,
/// otherwise a single plot over the multiplier.
fn sweep_plots(result: &ExperimentResult) -> Vec<(String, String)> {
    let mut betas: Vec<f64> = result.cells.iter().map(|c| c.cell.sigma_beta).collect();
    let mut xis: Vec<f64> = result.cells.iter().map(|c| c.cell.sigma_xi_mult).collect();
    for v in [&mut betas, &mut xis] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let methods: Vec<Method> = result
        .cells
        .first()
        .map(|c| c.methods.iter().map(|m| m.method).collect())
        .unwrap_or_default();
    let series = |filter: &dyn Fn(&GridCell) -> bool, x_of: &dyn Fn(&GridCell) -> f64| -> Vec<svg::Series> {
        methods
            .iter()
            .map(|&m| svg::Series {
                label: m.name().to_string(),
                points: result
                    .cells
                    .iter()
                    .filter(|c| filter(&c.cell))
                    .filter_map(|c| c.method(m).map(|mc| (x_of(&c.cell), mc.mean, mc.std_error())))
                    .map(|(x, y, e)| (x, y, if e.is_finite() { e } else { 0.0 }))
                    .collect(),
            })
            .collect()
    };
    if betas.len() > 1 {
        xis.iter()
            .map(|&xi| {
                let s = series(&|c| c.sigma_xi_mult == xi, &|c| c.sigma_beta);
                (
                    format!("inaccuracy_sigma_xi_mult_{xi}.svg"),
                    svg::line_plot(&s, &format!("sigma_xi multiplier {xi}"), "sigma_beta", "mean inaccuracy"),
                )
            })
            .collect()
    } else {
        let s = series(&|_| true, &|c| c.sigma_xi_mult);
        vec![(
            "inaccuracy_by_sigma_xi_mult.svg".to_string(),
            svg::line_plot(
                &s,
                &format!("sigma_beta {}", betas.first().copied().unwrap_or(f64::NAN)),
                "sigma_xi multiplier",
                "mean inaccuracy",
            ),
        )]
    }
}

fn add_plots(outputs: &mut Outputs, dir: Option<&Path>, result: &ExperimentResult) -> Result<(), Failure> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir).map_err(io_context(dir))?;
        for (name, body) in sweep_plots(result) {
            outputs.add(Some(&dir.join(name)), body.into_bytes())?;
        }
    }
    Ok(())
}

fn summary_csv(result: &ExperimentResult) -> Vec<u8> {
    let mut out = String::from("method,sigma_beta,sigma_xi_mult,n,mean,sd,failures\n");
    for c in &result.cells {
        for m in &c.methods {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                m.method,
                c.cell.sigma_beta,
                c.cell.sigma_xi_mult,
                m.values().len(),
                m.mean,
                m.sd,
                m.failures.len()
            ));
        }
    }
    out.into_bytes()
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let mut outputs = Outputs::new();
    match cli.command {
        Command::Simulate {
            n,
            counts,
            sigma_beta,
            sigma_xi_mult,
            out,
            truth,
        } => {
            let counts = parse_counts(&counts)?;
            let config = sim::default_config(n, counts, sigma_beta, sigma_xi_mult, cli.seed)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let result = sim::simulate(&config).map_err(|e| Failure::Usage(e.to_string()))?;
            outputs.add(Some(&out), result.dataset.to_csv_string().into_bytes())?;
            if let Some(truth) = truth {
                outputs.add(Some(&truth), to_json(&result.sidecar(&config))?)?;
            }
        }
        Command::Fit {
            dataset,
            method,
            filter_p,
            welch,
            search,
            out,
        } => {
            let options = search.options()?;
            let mut ds = read_dataset(&dataset)?;
            if let Some(p) = filter_p {
                let kind = if welch { TTestKind::Welch } else { TTestKind::Pooled };
                let filtered = significance_filter(&ds, p, kind)?;
                for t in filtered.tests.iter().filter(|t| !t.kept) {
                    eprintln!("dropped {} (p = {:.3e})", t.name, t.p);
                }
                for name in &filtered.untestable {
                    eprintln!("dropped {name} (untestable)");
                }
                ds = filtered.dataset;
            }
            let fit = run_method(&ds, method.into(), cli.seed, &options)?;
            let model = fit.to_model(ds.biomarker_names());
            let stages = model.stage(&ds)?;
            let body = match cli.format {
                Format::Json => to_json(&FitReport {
                    model: &model,
                    stages: subject_stages(&ds, &stages),
                })?,
                Format::Csv => model_csv(&model),
            };
            outputs.add(out.as_deref(), body)?;
        }
        Command::Stage { model, dataset, out } => {
            let text = std::fs::read_to_string(&model).map_err(io_context(&model))?;
            let fitted: FittedModel = serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("{}: not a fitted model: {e}", model.display())))?;
            let ds = read_dataset(&dataset)?;
            let rows = subject_stages(&ds, &fitted.stage(&ds)?);
            let body = match cli.format {
                Format::Json => to_json(&rows)?,
                Format::Csv => stages_csv(&rows),
            };
            outputs.add(out.as_deref(), body)?;
        }
        Command::Benchmark {
            methods,
            n,
            counts,
            sigma_beta,
            sigma_xi_mult,
            reps,
            no_timing,
            search,
            out,
            svg_dir,
        } => {
            if methods.is_empty() {
                return Err(Failure::Usage("--methods is empty".into()));
            }
            let grid: Vec<GridCell> = sigma_xi_mult
                .iter()
                .flat_map(|&x| {
                    sigma_beta.iter().map(move |&b| GridCell {
                        sigma_beta: b,
                        sigma_xi_mult: x,
                    })
                })
                .collect();
            let mut config = SweepConfig::new(methods.into_iter().map(Method::from).collect(), grid, reps, n);
            config.counts = parse_counts(&counts)?;
            config.seed = cli.seed;
            config.method_options = search.options()?;
            config.record_timing = !no_timing;
            let result = run_sweep(&config)?;
            for c in &result.cells {
                for m in &c.methods {
                    for f in &m.failures {
                        eprintln!(
                            "{} failed at sigma_beta {} multiplier {} repetition {}: {}",
                            m.method, c.cell.sigma_beta, c.cell.sigma_xi_mult, f.repetition, f.error
                        );
                    }
                }
            }
            let body = match cli.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    result.write_tidy_csv(&mut buf)?;
                    buf
                }
                Format::Json => to_json(&result)?,
            };
            outputs.add(out.as_deref(), body)?;
            add_plots(&mut outputs, svg_dir.as_deref(), &result)?;
        }
        Command::Bootstrap {
            dataset,
            b,
            unstratified,
            reading,
            out,
            svg,
        } => {
            if b == 0 {
                return Err(Failure::Usage("--b must be at least 1".into()));
            }
            let ds = read_dataset(&dataset)?;
            let options = BootstrapOptions {
                resamples: b,
                seed: cli.seed,
                stratified: !unstratified,
                debm: DebmOptions {
                    distance: DebmDistance::Probabilistic,
                    reading: reading.into(),
                    restarts: 0,
                    seed: seed::derive(cli.seed, &[7]),
                },
            };
            let pv = bootstrap_positional_variance(&ds, &options)?;
            let body = match cli.format {
                Format::Json => to_json(&pv)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    pv.write_csv(&mut buf)?;
                    buf
                }
            };
            outputs.add(out.as_deref(), body)?;
            if let Some(svg_path) = svg {
                // rows sorted by mean position
                let mean_pos = |e: usize| -> f64 {
                    pv.counts[e].iter().enumerate().map(|(p, &c)| p as f64 * c as f64).sum::<f64>()
                };
                let mut order: Vec<usize> = (0..pv.biomarkers.len()).collect();
                order.sort_by(|&a, &b| mean_pos(a).total_cmp(&mean_pos(b)).then(a.cmp(&b)));
                let body = svg::positional_heatmap(
                    &pv.biomarkers,
                    &pv.counts,
                    &order,
                    &format!("positional variance, {b} resamples"),
                );
                outputs.add(Some(&svg_path), body.into_bytes())?;
            }
        }
        Command::Cv {
            dataset,
            method,
            folds,
            search,
            out,
        } => {
            if folds < 2 {
                return Err(Failure::Usage("--folds must be at least 2".into()));
            }
            let options = search.options()?;
            let ds = read_dataset(&dataset)?;
            let method: Method = method.into();
            let aucs = staging_auc_cv(&ds, method, folds, cli.seed, &options)?;
            let body = match cli.format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct CvReport<'a> {
                        method: Method,
                        folds: usize,
                        auc: &'a [f64],
                        mean_auc: f64,
                    }
                    to_json(&CvReport {
                        method,
                        folds,
                        auc: &aucs,
                        mean_auc: aucs.iter().sum::<f64>() / aucs.len() as f64,
                    })?
                }
                Format::Csv => {
                    let mut s = String::from("fold,auc\n");
                    for (f, a) in aucs.iter().enumerate() {
                        s.push_str(&format!("{f},{a}\n"));
                    }
                    s.into_bytes()
                }
            };
            outputs.add(out.as_deref(), body)?;
        }
        Command::Report { input, out, svg_dir } => {
            let text = std::fs::read_to_string(&input).map_err(io_context(&input))?;
            let result: ExperimentResult = serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("{}: not a benchmark result: {e}", input.display())))?;
            let body = match cli.format {
                Format::Json => to_json(&result.summary())?,
                Format::Csv => summary_csv(&result),
            };
            outputs.add(out.as_deref(), body)?;
            add_plots(&mut outputs, svg_dir.as_deref(), &result)?;
            let runtime = eval::runtime_report(&result);
            eprintln!("hardware: {}", runtime.hardware);
            for r in runtime.methods {
                eprintln!("{}: {:.4} s mean over {} runs", r.method, r.mean_seconds, r.runs);
            }
        }
    }
    outputs.commit()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) | Failure::Domain(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
