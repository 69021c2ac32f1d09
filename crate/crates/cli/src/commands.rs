//! Argument parsing and the four subcommands.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fdout_core::depths::{DepthMethod, ErldType};
use fdout_core::detect::{self, MsplotConfig, SeqConfig, Stage, TvdmssConfig};
use fdout_core::muod::{self, CutMethod};
use fdout_core::rng::RandomSource;
use fdout_core::sample::{CurveSample, SampleData};
use fdout_core::simmodels::{self, ModelParams, SimulationOutput};

use crate::error::{CliError, CliResult};
use crate::io::{self, HeaderMode};
use crate::plot::{self, PlotKind};
use crate::report::{DetectionReport, Diagnostic, JsonFloat, StageReport};

#[derive(Debug, Parser)]
#[command(name = "fdout", version, about = "Outlier detection for functional data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw curves from one of the contamination models.
    Simulate(SimulateArgs),
    /// Run a detector and write a JSON report.
    Detect(DetectArgs),
    /// Write per-curve depth or outlyingness scores.
    Depth(DepthArgs),
    /// Render a report as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model number, 1 to 9.
    #[arg(long)]
    pub model: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    /// Outlier rate in [0, 1].
    #[arg(long)]
    pub rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Contaminate exactly ⌈n·rate⌉ evenly spaced rows instead of Bernoulli draws.
    #[arg(long)]
    pub deterministic: bool,
    /// JSON file overriding model constants.
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
    /// Output directory; receives data.csv, truth.csv and params.json.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Msplot,
    Tvdmss,
    Seq,
    Muod,
    Fbplot,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Msplot => "msplot",
            Method::Tvdmss => "tvdmss",
            Method::Seq => "seq",
            Method::Muod => "muod",
            Method::Fbplot => "fbplot",
        }
    }

    fn accepts(&self, flag: &str) -> bool {
        let allowed: &[&str] = match self {
            Method::Msplot => &["level", "coverage", "directions"],
            Method::Tvdmss => &["emp-factor-mss", "emp-factor-tvd", "central-region-tvd"],
            Method::Seq => &[
                "sequence",
                "depth",
                "erld-type",
                "save-data",
                "central-region",
                "factor",
                "directions",
            ],
            Method::Muod => &["cut-method"],
            Method::Fbplot => &["depth", "erld-type", "central-region", "factor"],
        };
        allowed.contains(&flag)
    }
}

/// Method flags are optional here; unset flags take the library defaults.
#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// One wide CSV, or one CSV per dimension separated by commas.
    #[arg(long = "in", value_name = "FILE", value_delimiter = ',', required = true)]
    pub input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = HeaderMode::Auto)]
    pub header: HeaderMode,
    #[arg(long, value_name = "FILE")]
    pub report: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub plot: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PlotKind::Curves)]
    pub plot_kind: PlotKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// msplot: tail probability of the F cutoff.
    #[arg(long)]
    pub level: Option<f64>,
    /// msplot: MCD coverage fraction (default: maximal breakdown).
    #[arg(long)]
    pub coverage: Option<f64>,
    /// msplot, seq: projection directions for d ≥ 2.
    #[arg(long)]
    pub directions: Option<usize>,

    /// tvdmss: fence factor on MSS.
    #[arg(long)]
    pub emp_factor_mss: Option<f64>,
    /// tvdmss: fence factor of the TVD boxplot.
    #[arg(long)]
    pub emp_factor_tvd: Option<f64>,
    /// tvdmss: central region of the TVD boxplot.
    #[arg(long)]
    pub central_region_tvd: Option<f64>,

    /// seq: comma-separated stages, e.g. T0,T1,T2.
    #[arg(long)]
    pub sequence: Option<String>,
    /// seq, fbplot: bd, mbd, erld, dq, linf, ed, tvd or rmd.
    #[arg(long)]
    pub depth: Option<String>,
    /// seq, fbplot: two_sided, one_sided_right or one_sided_left (erld only).
    #[arg(long)]
    pub erld_type: Option<String>,
    /// seq: keep each stage's transformed curves in the report.
    #[arg(long)]
    pub save_data: bool,
    /// seq, fbplot: fraction of deepest curves in the central region.
    #[arg(long)]
    pub central_region: Option<f64>,
    /// seq, fbplot: fence inflation factor.
    #[arg(long)]
    pub factor: Option<f64>,

    /// muod: tangent or boxplot.
    #[arg(long)]
    pub cut_method: Option<String>,
}

#[derive(Debug, Args)]
pub struct DepthArgs {
    /// bd, mbd, erld, dq, linf, ed, tvd or rmd.
    #[arg(long)]
    pub method: String,
    #[arg(long)]
    pub erld_type: Option<String>,
    #[arg(long = "in", value_name = "FILE", value_delimiter = ',', required = true)]
    pub input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = HeaderMode::Auto)]
    pub header: HeaderMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, value_name = "FILE")]
    pub report: PathBuf,
    #[arg(long = "in", value_name = "FILE", value_delimiter = ',', required = true)]
    pub input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = HeaderMode::Auto)]
    pub header: HeaderMode,
    #[arg(long, value_enum, default_value_t = PlotKind::Curves)]
    pub kind: PlotKind,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

/// Fully resolved detector settings.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodConfig {
    Msplot(MsplotConfig),
    Tvdmss(TvdmssConfig),
    Seq { sequence: Vec<Stage>, config: SeqConfig },
    Muod(CutMethod),
    Fbplot { depth: DepthMethod, central_region: f64, factor: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectConfig {
    pub method: MethodConfig,
    pub seed: u64,
    pub warnings: Vec<String>,
}

fn parse_depth(depth: Option<&str>, erld_type: Option<&str>, warnings: &mut Vec<String>) -> CliResult<DepthMethod> {
    let method = match depth {
        Some(s) => s.parse::<DepthMethod>()?,
        None => SeqConfig::default().depth,
    };
    match (method, erld_type) {
        (DepthMethod::Erld(_), Some(t)) => Ok(DepthMethod::Erld(t.parse::<ErldType>()?)),
        (m, Some(t)) => {
            t.parse::<ErldType>()?;
            warnings.push(format!("erld_type {t} ignored for depth {m}"));
            Ok(m)
        }
        (m, None) => Ok(m),
    }
}

impl DetectArgs {
    fn set_flags(&self) -> Vec<&'static str> {
        let flags = [
            ("level", self.level.is_some()),
            ("coverage", self.coverage.is_some()),
            ("directions", self.directions.is_some()),
            ("emp-factor-mss", self.emp_factor_mss.is_some()),
            ("emp-factor-tvd", self.emp_factor_tvd.is_some()),
            ("central-region-tvd", self.central_region_tvd.is_some()),
            ("sequence", self.sequence.is_some()),
            ("depth", self.depth.is_some()),
            ("erld-type", self.erld_type.is_some()),
            ("save-data", self.save_data),
            ("central-region", self.central_region.is_some()),
            ("factor", self.factor.is_some()),
            ("cut-method", self.cut_method.is_some()),
        ];
        flags.iter().filter(|f| f.1).map(|f| f.0).collect()
    }

    /// Rejects flags that do not belong to the method and fills in defaults.
    pub fn resolve(&self) -> CliResult<DetectConfig> {
        let foreign: Vec<String> = self
            .set_flags()
            .into_iter()
            .filter(|f| !self.method.accepts(f))
            .map(|f| format!("--{f}"))
            .collect();
        if !foreign.is_empty() {
            return Err(CliError::Usage(format!(
                "{} not accepted by --method {}",
                foreign.join(", "),
                self.method.as_str()
            )));
        }
        let mut warnings = Vec::new();
        let method = match self.method {
            Method::Msplot => {
                let d = MsplotConfig::default();
                MethodConfig::Msplot(MsplotConfig {
                    level: self.level.unwrap_or(d.level),
                    coverage: self.coverage.or(d.coverage),
                    n_directions: self.directions.unwrap_or(d.n_directions),
                })
            }
            Method::Tvdmss => {
                let d = TvdmssConfig::default();
                MethodConfig::Tvdmss(TvdmssConfig {
                    emp_factor_mss: self.emp_factor_mss.unwrap_or(d.emp_factor_mss),
                    emp_factor_tvd: self.emp_factor_tvd.unwrap_or(d.emp_factor_tvd),
                    central_region_tvd: self.central_region_tvd.unwrap_or(d.central_region_tvd),
                })
            }
            Method::Seq => {
                let d = SeqConfig::default();
                let sequence = detect::parse_sequence(self.sequence.as_deref().unwrap_or(DEFAULT_SEQUENCE))?;
                MethodConfig::Seq {
                    sequence,
                    config: SeqConfig {
                        depth: parse_depth(self.depth.as_deref(), self.erld_type.as_deref(), &mut warnings)?,
                        central_region: self.central_region.unwrap_or(d.central_region),
                        factor: self.factor.unwrap_or(d.factor),
                        n_directions: self.directions.unwrap_or(d.n_directions),
                        save_data: self.save_data || d.save_data,
                    },
                }
            }
            Method::Muod => MethodConfig::Muod(match &self.cut_method {
                Some(s) => s.parse()?,
                None => CutMethod::default(),
            }),
            Method::Fbplot => MethodConfig::Fbplot {
                depth: parse_depth(self.depth.as_deref(), self.erld_type.as_deref(), &mut warnings)?,
                central_region: self.central_region.unwrap_or(detect::DEFAULT_CENTRAL_REGION),
                factor: self.factor.unwrap_or(detect::DEFAULT_FENCE_FACTOR),
            },
        };
        Ok(DetectConfig {
            method,
            seed: self.seed,
            warnings,
        })
    }
}

pub const DEFAULT_SEQUENCE: &str = "T0,T1,T2";

fn depth_value(m: DepthMethod) -> Value {
    match m {
        DepthMethod::Erld(t) => json!({"method": m.label(), "erld_type": t.as_str()}),
        other => json!({"method": other.label()}),
    }
}

fn univariate<'a>(data: &'a SampleData, method: &str) -> CliResult<&'a CurveSample> {
    match data {
        SampleData::Univariate(s) => Ok(s),
        SampleData::Multivariate(_) => Err(CliError::Usage(format!(
            "--method {method} needs a single input file"
        ))),
    }
}

/// Runs the configured detector; the random stream is `RandomSource::new(seed)`.
pub fn detect(data: &SampleData, config: &DetectConfig) -> CliResult<DetectionReport> {
    let mut rng = RandomSource::new(config.seed);
    let name = match &config.method {
        MethodConfig::Msplot(_) => "msplot",
        MethodConfig::Tvdmss(_) => "tvdmss",
        MethodConfig::Seq { .. } => "seq",
        MethodConfig::Muod(_) => "muod",
        MethodConfig::Fbplot { .. } => "fbplot",
    };
    let mut report = DetectionReport::new(name);
    report.n = data.n();
    report.p = data.p();
    report.d = data.dims();
    report.warnings = config.warnings.clone();
    let params = &mut report.parameters;
    params.insert("seed".into(), json!(config.seed));
    match &config.method {
        MethodConfig::Msplot(cfg) => {
            params.insert("level".into(), json!(cfg.level));
            params.insert("coverage".into(), json!(cfg.coverage));
            params.insert("directions".into(), json!(cfg.n_directions));
            let multi = match data {
                SampleData::Univariate(s) => s.to_multi(),
                SampleData::Multivariate(m) => m.clone(),
            };
            let res = detect::msplot(&multi, cfg, &mut rng)?;
            report.set_outliers("all", &res.outliers);
            let mo: Vec<Vec<f64>> = res.mo.rows().into_iter().map(|r| r.to_vec()).collect();
            let mo_norms: Vec<f64> = mo.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
            report.diagnostics.insert("mo".into(), Diagnostic::matrix(mo));
            report.diagnostics.insert("mo_norm".into(), Diagnostic::vector(&mo_norms));
            report.diagnostics.insert("vo".into(), Diagnostic::vector(&res.vo));
            report.diagnostics.insert("distance".into(), Diagnostic::vector(&res.distances));
            report.cutoff = Some(JsonFloat(res.cutoff.threshold));
        }
        MethodConfig::Tvdmss(cfg) => {
            params.insert("emp_factor_mss".into(), json!(cfg.emp_factor_mss));
            params.insert("emp_factor_tvd".into(), json!(cfg.emp_factor_tvd));
            params.insert("central_region_tvd".into(), json!(cfg.central_region_tvd));
            let res = detect::tvdmss(univariate(data, name)?, cfg)?;
            report.set_outliers("shape", &res.shape_outliers);
            report.set_outliers("magnitude", &res.magnitude_outliers);
            report.set_outliers("all", &res.outliers);
            report.diagnostics.insert("tvd".into(), Diagnostic::vector(&res.tvd));
            report.diagnostics.insert("mss".into(), Diagnostic::vector(&res.mss));
        }
        MethodConfig::Seq { sequence, config: cfg } => {
            let labels: Vec<&str> = sequence.iter().map(Stage::as_str).collect();
            params.insert("sequence".into(), json!(labels.join(",")));
            params.insert("depth".into(), depth_value(cfg.depth));
            params.insert("central_region".into(), json!(cfg.central_region));
            params.insert("factor".into(), json!(cfg.factor));
            params.insert("directions".into(), json!(cfg.n_directions));
            params.insert("save_data".into(), json!(cfg.save_data));
            let res = detect::seq_transform(data, sequence, cfg, &mut rng)?;
            let fresh = res.new_outliers();
            for (stage, (_, new)) in res.stages.iter().zip(&fresh) {
                report.set_outliers(&stage.label, &stage.outliers);
                let one_based = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
                report.stages.push(StageReport {
                    label: stage.label.clone(),
                    stage: stage.stage.as_str().to_string(),
                    outliers: one_based(&stage.outliers),
                    new_outliers: one_based(new),
                    data: stage.data.as_ref().map(|s| {
                        s.values()
                            .rows()
                            .into_iter()
                            .map(|r| r.iter().copied().map(JsonFloat).collect())
                            .collect()
                    }),
                });
            }
            report.set_outliers("all", &res.all_outliers());
            report.warnings.extend(res.warnings.iter().cloned());
        }
        MethodConfig::Muod(cut) => {
            params.insert("cut_method".into(), json!(cut.as_str()));
            let (out, ix) = muod::muod(univariate(data, name)?, *cut)?;
            report.set_outliers("shape", &out.shape);
            report.set_outliers("magnitude", &out.magnitude);
            report.set_outliers("amplitude", &out.amplitude);
            let all: Vec<usize> = out
                .shape
                .iter()
                .chain(&out.magnitude)
                .chain(&out.amplitude)
                .copied()
                .collect();
            report.set_outliers("all", &all);
            report.diagnostics.insert("shape_index".into(), Diagnostic::vector(&ix.shape));
            report.diagnostics.insert("magnitude_index".into(), Diagnostic::vector(&ix.magnitude));
            report.diagnostics.insert("amplitude_index".into(), Diagnostic::vector(&ix.amplitude));
        }
        MethodConfig::Fbplot {
            depth,
            central_region,
            factor,
        } => {
            params.insert("depth".into(), depth_value(*depth));
            params.insert("central_region".into(), json!(central_region));
            params.insert("factor".into(), json!(factor));
            let sample = univariate(data, name)?;
            let ordering = detect::compute_depth(sample, *depth, &mut rng)?;
            let res = detect::functional_boxplot(sample, &ordering, *central_region, *factor)?;
            report.set_outliers("all", &res.outliers);
            report.diagnostics.insert("depth".into(), Diagnostic::vector(&ordering.scores));
            report.diagnostics.insert("envelope_lower".into(), Diagnostic::vector(&res.envelope_lower));
            report.diagnostics.insert("envelope_upper".into(), Diagnostic::vector(&res.envelope_upper));
            report.diagnostics.insert("fence_lower".into(), Diagnostic::vector(&res.fence_lower));
            report.diagnostics.insert("fence_upper".into(), Diagnostic::vector(&res.fence_upper));
        }
    }
    Ok(report)
}

/// First component of the data, as drawn by the curves plot.
pub fn plotted_sample(data: &SampleData) -> CliResult<CurveSample> {
    match data {
        SampleData::Univariate(s) => Ok(s.clone()),
        SampleData::Multivariate(m) => Ok(m.component(0)?),
    }
}

fn write_report(path: &Path, report: &DetectionReport) -> CliResult<()> {
    io::write_atomic(path, report.to_json().as_bytes())
}

pub fn run_detect(args: &DetectArgs) -> CliResult<()> {
    let result = (|| {
        let config = args.resolve()?;
        let data = io::read_curves(&args.input, args.header)?;
        let mut report = detect(&data, &config)?;
        report
            .parameters
            .insert("header".into(), json!(format!("{:?}", args.header).to_lowercase()));
        Ok::<_, CliError>((report, data))
    })();
    match result {
        Ok((report, data)) => {
            let svg = match &args.plot {
                Some(_) => Some(plot::emit_plot(&report, &plotted_sample(&data)?, args.plot_kind)?),
                None => None,
            };
            write_report(&args.report, &report)?;
            if let (Some(path), Some(svg)) = (&args.plot, svg) {
                io::write_atomic(path, svg.as_bytes())?;
            }
            Ok(())
        }
        Err(e) => {
            // The failure is recorded in the report as well as the exit code.
            let _ = write_report(&args.report, &DetectionReport::failed(args.method.as_str(), &e));
            Err(e)
        }
    }
}

pub fn simulate(args: &SimulateArgs) -> CliResult<SimulationOutput> {
    let overrides = match &args.params {
        Some(path) => serde_json::from_str::<ModelParams>(&io::read_to_string(path)?).map_err(|e| CliError::Json {
            path: path.clone(),
            message: e.to_string(),
        })?,
        None => ModelParams::default(),
    };
    Ok(simmodels::simulation_model(
        args.model,
        args.n,
        args.p,
        args.rate,
        args.deterministic,
        args.seed,
        &overrides,
    )?)
}

pub fn run_simulate(args: &SimulateArgs) -> CliResult<()> {
    let out = simulate(args)?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    io::write_atomic(&args.out.join("data.csv"), io::curves_to_csv(&out.data).as_bytes())?;
    io::write_atomic(&args.out.join("truth.csv"), io::truth_to_csv(&out.true_outliers).as_bytes())?;
    let meta = json!({
        "model": out.model_id,
        "params": out.params,
        "rng": RandomSource::new(args.seed).algorithm(),
    });
    let mut text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Json {
        path: args.out.join("params.json"),
        message: e.to_string(),
    })?;
    text.push('\n');
    io::write_atomic(&args.out.join("params.json"), text.as_bytes())
}

pub fn run_depth(args: &DepthArgs) -> CliResult<()> {
    let mut warnings = Vec::new();
    let method = parse_depth(Some(&args.method), args.erld_type.as_deref(), &mut warnings)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let data = io::read_curves(&args.input, args.header)?;
    let mut rng = RandomSource::new(args.seed);
    let scores = match (&data, method) {
        (SampleData::Univariate(s), m) => detect::compute_depth(s, m, &mut rng)?,
        (SampleData::Multivariate(m), DepthMethod::Rmd) => {
            detect::robust_distance_ordering(m, &MsplotConfig::default(), &mut rng)?
        }
        (SampleData::Multivariate(_), m) => {
            return Err(CliError::Usage(format!("depth {m} needs a single input file")));
        }
    };
    let mut text = format!("curve,{}\n", scores.method);
    for (i, v) in scores.scores.iter().enumerate() {
        text.push_str(&format!("{},{}\n", i + 1, io::format_value(*v)));
    }
    io::write_atomic(&args.out, text.as_bytes())
}

pub fn run_plot(args: &PlotArgs) -> CliResult<()> {
    let report = DetectionReport::from_json(&io::read_to_string(&args.report)?, &args.report)?;
    let data = io::read_curves(&args.input, args.header)?;
    if report.d != data.dims() {
        return Err(CliError::InconsistentReport(format!(
            "report has d = {}, data has d = {}",
            report.d,
            data.dims()
        )));
    }
    let svg = plot::emit_plot(&report, &plotted_sample(&data)?, args.kind)?;
    io::write_atomic(&args.out, svg.as_bytes())
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Detect(a) => run_detect(a),
        Command::Depth(a) => run_depth(a),
        Command::Plot(a) => run_plot(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
