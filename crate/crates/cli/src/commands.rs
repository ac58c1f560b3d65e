use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use hbnum::dataset::{parse_cells, FilterStats, RegressionData};
use hbnum::diagnostics::{rhat_report, RhatReport};
use hbnum::inference::{
    builtin_density_estimators, savage_dickey_bf, summarize, BayesFactorResult, Hpdi, Kde,
    NullDensityEstimator, ParamSummary,
};
use hbnum::model::{snarc_spec_default, ModelSpec};
use hbnum::sampler::{
    read_samples_csv, run_chains, write_samples_csv, ParamId, Posterior, SamplerConfig,
};
use hbnum::simulate::{
    compare_on_posterior, generate_snarc_sim, replication_sweep, summarize_sweep, sweep_csv,
    ComparisonReport, SimConfig, SweepSummary,
};
use hbnum::variants::{builtin_models, ModelRegistry, ModelVariant};

use crate::args::*;
use crate::config::ConfigFile;
use crate::plot::{render_svg, DensityCurve};

/// Output directory that records every file written to it.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn create(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_samples(&mut self, posterior: &Posterior) -> Result<()> {
        let path = self.path("samples.csv");
        let file =
            fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        write_samples_csv(posterior, BufWriter::new(file))?;
        self.files.push("samples.csv".into());
        Ok(())
    }

    /// Writes `name` as pretty JSON, listing it in its own manifest.
    fn write_json<T: Serialize>(
        &mut self,
        name: &str,
        build: impl FnOnce(Vec<String>) -> T,
    ) -> Result<()> {
        let mut manifest = self.files.clone();
        manifest.push(name.to_string());
        let mut text = serde_json::to_string_pretty(&build(manifest))?;
        text.push('\n');
        self.write(name, text)
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

#[derive(Serialize)]
struct InputEcho {
    model: String,
    input: Option<String>,
    input_kind: Option<InputKind>,
    rt_cutoff_ms: Option<f64>,
}

struct LoadedInput<'a> {
    model: &'a dyn ModelVariant,
    data: RegressionData,
    filter: Option<FilterStats>,
    echo: InputEcho,
}

fn load_input<'a>(
    args: &InputArgs,
    cfg: &ConfigFile,
    models: &'a ModelRegistry,
) -> Result<LoadedInput<'a>> {
    let name: String = required(cfg.layer(args.model.clone(), "model")?, "model")?;
    let model = models.get(&name)?;
    let path: PathBuf = required(cfg.layer(args.input.clone(), "input")?, "input")?;
    let kind = cfg
        .layer(args.input_kind, "input-kind")?
        .unwrap_or(InputKind::Trials);
    let text = read_text(&path)?;
    let (data, filter, cutoff) = match kind {
        InputKind::Trials => {
            let cutoff = cfg
                .layer(args.rt_cutoff, "rt-cutoff")?
                .unwrap_or(model.default_rt_cutoff_ms());
            if !(cutoff > 0.0) {
                bail!("rt-cutoff must be positive, got {cutoff}");
            }
            let (data, stats) = model
                .ingest_trials(&text, cutoff)
                .with_context(|| format!("in trial file {}", path.display()))?;
            eprintln!(
                "{}: kept {} of {} trials ({} errors, {} slower than {cutoff} ms)",
                path.display(),
                stats.retained,
                stats.total,
                stats.removed_errors,
                stats.removed_slow
            );
            (data, Some(stats), Some(cutoff))
        }
        InputKind::Cells => {
            let data =
                parse_cells(&text).with_context(|| format!("in cell file {}", path.display()))?;
            (data, None, None)
        }
    };
    Ok(LoadedInput {
        model,
        data,
        filter,
        echo: InputEcho {
            model: model.name().to_string(),
            input: Some(path.display().to_string()),
            input_kind: Some(kind),
            rt_cutoff_ms: cutoff,
        },
    })
}

fn estimator(name: &str) -> Result<&'static dyn NullDensityEstimator> {
    // built once per process so the returned reference is static
    static REGISTRY: std::sync::OnceLock<hbnum::inference::DensityRegistry> =
        std::sync::OnceLock::new();
    Ok(REGISTRY.get_or_init(builtin_density_estimators).get(name)?)
}

fn run_sampler(
    spec: &ModelSpec,
    data: &RegressionData,
    sampler: &SamplerConfig,
) -> Result<Posterior> {
    eprintln!(
        "sampling {} chains x {} iterations ({} subjects, {} cells)",
        sampler.n_chains,
        sampler.n_iterations,
        data.n_subjects(),
        data.n_cells()
    );
    Ok(run_chains(spec, data, sampler)?)
}

#[derive(Serialize)]
struct ParamEntry {
    parameter: String,
    #[serde(flatten)]
    summary: ParamSummary,
}

#[derive(Serialize)]
struct BayesFactorEntry {
    null_value: f64,
    method: &'static str,
    /// `null` when the posterior density at the null underflowed.
    bf10: Option<f64>,
    prior_density_at_null: f64,
    posterior_density_at_null: f64,
    underflow: bool,
}

impl BayesFactorEntry {
    fn new(bf: &BayesFactorResult, method: &'static str) -> Self {
        Self {
            null_value: 0.0,
            method,
            bf10: bf.bf10.is_finite().then_some(bf.bf10),
            prior_density_at_null: bf.prior_density_at_null,
            posterior_density_at_null: bf.posterior_density_at_null,
            underflow: bf.underflow,
        }
    }
}

#[derive(Serialize)]
struct Convergence {
    threshold: f64,
    all_converged: bool,
    max_rhat: f64,
    not_converged: Vec<String>,
}

/// Diagnostics, per-parameter summaries, Bayes factor and plot shared by
/// `fit` and `summarize`.
struct PosteriorReport {
    parameters: Vec<ParamEntry>,
    bayes_factor: Option<BayesFactorEntry>,
    convergence: Convergence,
}

fn convergence(report: &RhatReport) -> Convergence {
    let not_converged: Vec<String> = report
        .entries
        .iter()
        .filter(|e| !e.converged)
        .map(|e| e.parameter.clone())
        .collect();
    if !not_converged.is_empty() {
        eprintln!(
            "warning: R-hat above {} for {}; consider more iterations",
            report.threshold,
            not_converged.join(", ")
        );
    }
    Convergence {
        threshold: report.threshold,
        all_converged: report.all_converged(),
        max_rhat: report
            .entries
            .iter()
            .map(|e| e.rhat)
            .fold(f64::NEG_INFINITY, f64::max),
        not_converged,
    }
}

fn group_slope_bf(
    b: &[f64],
    spec: &ModelSpec,
    est: &'static dyn NullDensityEstimator,
) -> Result<Option<BayesFactorEntry>> {
    if !spec.slope_mean_bounds.contains(0.0) {
        eprintln!("warning: 0 lies outside the group slope bounds; no Bayes factor reported");
        return Ok(None);
    }
    let bf = savage_dickey_bf(b, spec.slope_mean_bounds.uniform_density(), est)?;
    if bf.underflow {
        eprintln!("note: posterior density of b at 0 underflowed; bf10 reported as infinite");
    }
    Ok(Some(BayesFactorEntry::new(&bf, est.name())))
}

fn write_plot(out: &mut Outputs, b: &[f64], mass: f64, rug: &[f64]) -> Result<Hpdi> {
    let summary = summarize(b, mass)?;
    let kde = Kde::new(b)?;
    let curve = DensityCurve::from_kde(&kde);
    out.write("posterior_b_curve.csv", curve.to_csv(&summary.hpdi))?;
    out.write(
        "posterior_b.svg",
        render_svg(
            &curve,
            &summary.hpdi,
            summary.mode,
            rug,
            "Posterior of the group-level slope",
        ),
    )?;
    Ok(summary.hpdi)
}

fn report_posterior(
    out: &mut Outputs,
    post: &Posterior,
    settings: &ReportSettings,
) -> Result<PosteriorReport> {
    let est = estimator(&settings.bf_method)?;
    let rhats = rhat_report(post, settings.rhat_threshold)?;
    out.write("diagnostics.csv", rhats.to_csv())?;
    let parameters = post
        .params()
        .into_iter()
        .map(|p| {
            Ok(ParamEntry {
                parameter: p.to_string(),
                summary: summarize(&post.pooled(p), settings.hpdi_mass)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let b = post.pooled(ParamId::B);
    let bayes_factor = group_slope_bf(&b, &post.spec, est)?;
    write_plot(out, &b, settings.hpdi_mass, &[])?;
    Ok(PosteriorReport {
        parameters,
        bayes_factor,
        convergence: convergence(&rhats),
    })
}

#[derive(Serialize)]
struct ReportEcho<'a> {
    hpdi_mass: f64,
    bf_method: &'a str,
    rhat_threshold: f64,
}

#[derive(Serialize)]
struct FitConfigEcho<'a> {
    #[serde(flatten)]
    input: &'a InputEcho,
    sampler: SamplerConfig,
    spec: &'a ModelSpec,
    #[serde(flatten)]
    report: ReportEcho<'a>,
}

#[derive(Serialize)]
struct FitSummary<'a> {
    command: &'static str,
    model: &'a str,
    subjects: &'a [String],
    data_fingerprint: &'a str,
    filter: Option<FilterStats>,
    retained_draws_per_parameter: usize,
    parameters: &'a [ParamEntry],
    bayes_factor: &'a Option<BayesFactorEntry>,
    convergence: &'a Convergence,
    config: FitConfigEcho<'a>,
    outputs: Vec<String>,
}

pub fn fit(a: FitArgs) -> Result<()> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    check_keys(
        &cfg,
        &[SAMPLER_KEYS, PRIOR_KEYS, REPORT_KEYS, INPUT_KEYS, &["out"]],
    )?;
    let models = builtin_models();
    let input = load_input(&a.input, &cfg, &models)?;
    let sampler = a.sampler.resolve(&cfg)?;
    let spec = a.prior.resolve(&cfg, input.model.default_spec())?;
    let settings = a.report.resolve(&cfg)?;
    estimator(&settings.bf_method)?;
    let mut out = Outputs::create(required(cfg.layer(a.out, "out")?, "out")?)?;

    let post = run_sampler(&spec, &input.data, &sampler)?;
    out.write_samples(&post)?;
    let rep = report_posterior(&mut out, &post, &settings)?;
    out.write_json("summary.json", |outputs| FitSummary {
        command: "fit",
        model: input.model.name(),
        subjects: input.data.subjects(),
        data_fingerprint: &post.data_fingerprint,
        filter: input.filter,
        retained_draws_per_parameter: post.n_draws(),
        parameters: &rep.parameters,
        bayes_factor: &rep.bayes_factor,
        convergence: &rep.convergence,
        config: FitConfigEcho {
            input: &input.echo,
            sampler,
            spec: &spec,
            report: ReportEcho {
                hpdi_mass: settings.hpdi_mass,
                bf_method: &settings.bf_method,
                rhat_threshold: settings.rhat_threshold,
            },
        },
        outputs,
    })?;
    print_b(&rep, &out);
    Ok(())
}

fn print_b(rep: &PosteriorReport, out: &Outputs) {
    if let Some(b) = rep.parameters.iter().find(|p| p.parameter == "b") {
        let s = &b.summary;
        println!(
            "b: mode {:.3}, mean {:.3}, sd {:.3}, {:.0}% HPDI [{:.3}, {:.3}], P(b < 0) {:.4}",
            s.mode,
            s.mean,
            s.sd,
            s.hpdi.mass * 100.0,
            s.hpdi.lower,
            s.hpdi.upper,
            s.p_below_zero
        );
    }
    if let Some(bf) = &rep.bayes_factor {
        match bf.bf10 {
            Some(v) => println!("bf10 ({}): {v:.4e}", bf.method),
            None => println!(
                "bf10 ({}): infinite (posterior density at 0 underflowed)",
                bf.method
            ),
        }
    }
    println!("wrote {} files to {}", out.files.len(), out.dir.display());
}

#[derive(Serialize)]
struct SummarizeSummary<'a> {
    command: &'static str,
    model: &'a str,
    samples: String,
    n_chains: usize,
    retained_draws_per_parameter: usize,
    parameters: &'a [ParamEntry],
    bayes_factor: &'a Option<BayesFactorEntry>,
    convergence: &'a Convergence,
    spec: &'a ModelSpec,
    #[serde(flatten)]
    report: ReportEcho<'a>,
    outputs: Vec<String>,
}

pub fn summarize_samples(a: SummarizeArgs) -> Result<()> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    check_keys(
        &cfg,
        &[PRIOR_KEYS, REPORT_KEYS, &["model", "samples", "out"]],
    )?;
    let models = builtin_models();
    let model = models.get(&required(cfg.layer(a.model.clone(), "model")?, "model")?)?;
    let spec = a.prior.resolve(&cfg, model.default_spec())?;
    let settings = a.report.resolve(&cfg)?;
    estimator(&settings.bf_method)?;
    let path: PathBuf = required(cfg.layer(a.samples, "samples")?, "samples")?;
    let post = read_samples_csv(&read_text(&path)?, spec.clone())
        .with_context(|| format!("in samples file {}", path.display()))?;
    let mut out = Outputs::create(required(cfg.layer(a.out, "out")?, "out")?)?;
    let rep = report_posterior(&mut out, &post, &settings)?;
    out.write_json("summary.json", |outputs| SummarizeSummary {
        command: "summarize",
        model: model.name(),
        samples: path.display().to_string(),
        n_chains: post.chains.len(),
        retained_draws_per_parameter: post.n_draws(),
        parameters: &rep.parameters,
        bayes_factor: &rep.bayes_factor,
        convergence: &rep.convergence,
        spec: &spec,
        report: ReportEcho {
            hpdi_mass: settings.hpdi_mass,
            bf_method: &settings.bf_method,
            rhat_threshold: settings.rhat_threshold,
        },
        outputs,
    })?;
    print_b(&rep, &out);
    Ok(())
}

fn sim_config(args: &SimArgs, cfg: &ConfigFile, seed: u64) -> Result<SimConfig> {
    let d = SimConfig::default();
    let sim = SimConfig {
        n_subjects: cfg
            .layer(args.subjects, "subjects")?
            .unwrap_or(d.n_subjects),
        slope_mean: cfg
            .layer(args.slope_mean, "slope-mean")?
            .unwrap_or(d.slope_mean),
        slope_sd: cfg.layer(args.slope_sd, "slope-sd")?.unwrap_or(d.slope_sd),
        noise_sd: cfg.layer(args.noise_sd, "noise-sd")?.unwrap_or(d.noise_sd),
        seed,
        ..d
    };
    sim.validate()?;
    Ok(sim)
}

fn ci_level(flag: Option<f64>, cfg: &ConfigFile) -> Result<f64> {
    let level = cfg.layer(flag, "ci-level")?.unwrap_or(0.95);
    if !(level > 0.0 && level < 1.0) {
        bail!("ci-level must lie in (0, 1), got {level}");
    }
    Ok(level)
}

#[derive(Serialize)]
struct SweepConfigEcho<'a> {
    simulation: &'a SimConfig,
    replications: usize,
    ci_level: f64,
    sampler: SamplerConfig,
    spec: &'a ModelSpec,
    bf_method: &'a str,
}

#[derive(Serialize)]
struct SweepReport<'a> {
    command: &'static str,
    summary: SweepSummary,
    config: SweepConfigEcho<'a>,
    outputs: Vec<String>,
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    check_keys(
        &cfg,
        &[
            SAMPLER_KEYS,
            PRIOR_KEYS,
            SIM_KEYS,
            &["replications", "ci-level", "bf-method", "out"],
        ],
    )?;
    let sampler = a.sampler.resolve(&cfg)?;
    let sim = sim_config(&a.sim, &cfg, sampler.seed)?;
    let replications = cfg.layer(a.replications, "replications")?.unwrap_or(100);
    if replications == 0 {
        bail!("replications must be positive");
    }
    let level = ci_level(a.ci_level, &cfg)?;
    let spec = a.prior.resolve(
        &cfg,
        ModelSpec {
            predictor_values: sim.predictor_values.clone(),
            ..snarc_spec_default()
        },
    )?;
    let method: String = cfg
        .layer(a.bf_method, "bf-method")?
        .unwrap_or_else(|| "normal".into());
    let est = estimator(&method)?;
    let mut out = Outputs::create(required(cfg.layer(a.out, "out")?, "out")?)?;

    eprintln!(
        "{replications} replications of {} subjects, each {} chains x {} iterations",
        sim.n_subjects, sampler.n_chains, sampler.n_iterations
    );
    let rows = replication_sweep(&sim, replications, &spec, &sampler, level, est)?;
    out.write("sweep.csv", sweep_csv(&rows))?;
    let summary = summarize_sweep(&rows);
    out.write_json("sweep_summary.json", |outputs| SweepReport {
        command: "simulate",
        summary,
        config: SweepConfigEcho {
            simulation: &sim,
            replications,
            ci_level: level,
            sampler,
            spec: &spec,
            bf_method: &method,
        },
        outputs,
    })?;
    println!(
        "HPDI narrower than CI in {:.0}% of replications; coverage HPDI {:.0}%, CI {:.0}%; \
         {} replications with p > 0.05 and bf10 > 10",
        100.0 * summary.frac_hpdi_narrower,
        100.0 * summary.coverage_bayes,
        100.0 * summary.coverage_classical,
        summary.classical_miss_bayes_detects
    );
    println!("wrote {} files to {}", out.files.len(), out.dir.display());
    Ok(())
}

#[derive(Serialize)]
struct CompareEcho<'a> {
    input: Option<&'a InputEcho>,
    simulation: Option<&'a SimConfig>,
    ci_level: f64,
    sampler: SamplerConfig,
    spec: &'a ModelSpec,
    bf_method: &'a str,
}

#[derive(Serialize)]
struct CompareSummary<'a> {
    command: &'static str,
    subjects: &'a [String],
    filter: Option<FilterStats>,
    report: &'a ComparisonReport,
    config: CompareEcho<'a>,
    outputs: Vec<String>,
}

pub fn compare(a: CompareArgs) -> Result<()> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    check_keys(
        &cfg,
        &[
            SAMPLER_KEYS,
            PRIOR_KEYS,
            SIM_KEYS,
            INPUT_KEYS,
            &["ci-level", "bf-method", "out"],
        ],
    )?;
    let sampler = a.sampler.resolve(&cfg)?;
    let level = ci_level(a.ci_level, &cfg)?;
    let method: String = cfg
        .layer(a.bf_method, "bf-method")?
        .unwrap_or_else(|| "normal".into());
    let est = estimator(&method)?;
    let models = builtin_models();
    let has_input = cfg.layer(a.input.input.clone(), "input")?.is_some();

    let (data, base_spec, filter, input_echo, sim) = if has_input {
        let input = load_input(&a.input, &cfg, &models)?;
        let spec = input.model.default_spec();
        (input.data, spec, input.filter, Some(input.echo), None)
    } else {
        let sim = sim_config(&a.sim, &cfg, sampler.seed)?;
        let (dataset, _) = generate_snarc_sim(&sim)?;
        let spec = ModelSpec {
            predictor_values: sim.predictor_values.clone(),
            ..snarc_spec_default()
        };
        (dataset.to_regression_data()?, spec, None, None, Some(sim))
    };
    let spec = a.prior.resolve(&cfg, base_spec)?;
    let mut out = Outputs::create(required(cfg.layer(a.out, "out")?, "out")?)?;
    if sim.is_some() {
        out.write("cells.csv", data.to_csv())?;
    }

    let post = run_sampler(&spec, &data, &sampler)?;
    out.write_samples(&post)?;
    let mut report = compare_on_posterior(&data, &post, level, est)?;
    report.truth = sim.clone();

    let mut slopes = String::from("subject,classical_slope,posterior_mean_slope\n");
    for ((s, c), p) in data
        .subjects()
        .iter()
        .zip(&report.classical_slopes)
        .zip(&report.posterior_mean_slopes)
    {
        slopes.push_str(&format!("{s},{c},{p}\n"));
    }
    out.write("slopes.csv", slopes)?;
    let t = &report.t_result;
    let ci = &report.classical_ci;
    out.write(
        "ttest.csv",
        format!(
            "t,df,p,mean_slope_ci_lower,mean_slope_ci_upper,level\n{},{},{},{},{},{}\n",
            t.t, t.df, t.p, ci.lower, ci.upper, ci.level
        ),
    )?;
    write_plot(
        &mut out,
        &post.pooled(ParamId::B),
        level,
        &report.classical_slopes,
    )?;
    if report.rhat_b > hbnum::diagnostics::DEFAULT_RHAT_THRESHOLD {
        eprintln!(
            "warning: R-hat for b is {:.4}; consider more iterations",
            report.rhat_b
        );
    }
    out.write_json("comparison.json", |outputs| CompareSummary {
        command: "compare",
        subjects: data.subjects(),
        filter,
        report: &report,
        config: CompareEcho {
            input: input_echo.as_ref(),
            simulation: sim.as_ref(),
            ci_level: level,
            sampler,
            spec: &spec,
            bf_method: &method,
        },
        outputs,
    })?;
    println!(
        "Bayesian: mode {:.3}, {:.0}% HPDI [{:.3}, {:.3}], bf10 {:.4e}",
        report.bayes_mode,
        level * 100.0,
        report.bayes_hpdi.lower,
        report.bayes_hpdi.upper,
        report.bf10()
    );
    println!(
        "classical: t({}) = {:.3}, p = {:.4}, {:.0}% CI [{:.3}, {:.3}]",
        t.df,
        t.t,
        t.p,
        level * 100.0,
        ci.lower,
        ci.upper
    );
    println!("wrote {} files to {}", out.files.len(), out.dir.display());
    Ok(())
}

pub fn list() -> Result<()> {
    println!("models:");
    for m in builtin_models().iter() {
        println!(
            "  {:<6} predictor: {}; response: {}; default RT cutoff {} ms",
            m.name(),
            m.predictor_label(),
            m.response_label(),
            m.default_rt_cutoff_ms()
        );
    }
    println!("Bayes factor methods:");
    for e in builtin_density_estimators().iter() {
        println!("  {}", e.name());
    }
    Ok(())
}
