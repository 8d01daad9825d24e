use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rmls::config::{load_config, FileConfig};
use rmls::eval::MeanStd;
use rmls::lsdr::{LsdrMethod, DEFAULT_RIDGE};
use rmls::persist::{load_trained, save_trained};
use rmls::synthetic::{generate, SyntheticConfig};
use rmls::training::CsvProgress;
use rmls::{
    compute_stats, cross_validate, parse_multilabel, train, Dataset, Error, LossKind, MetricsReport, ParseError,
    ParseOptions, PredictionRule, Predictor, Theta, TrainedModel, TrainerSpec,
};

#[derive(Parser)]
#[command(name = "rmls", version, about = "Multi-label learning with label embeddings and negative sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Label statistics and imbalance ratios of a dataset.
    Profile {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Fit one model on a whole dataset and save it.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hp: HyperArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Model file name inside --out.
        #[arg(long, default_value = "model.bin")]
        model_name: String,
    },
    /// Predict label sets with a saved model.
    Predict {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "threshold:0.5")]
        rule: PredictionRule,
        /// Output file, one comma-separated label list per line.
        #[arg(long, default_value = "predictions.txt")]
        out: PathBuf,
    },
    /// k-fold cross-validation of one algorithm.
    Cv {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hp: HyperArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Cross-validate RMLS for each sampling ratio.
    SweepAlpha {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hp: HyperArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Comma-separated ratios, or a range such as 1..10.
        #[arg(long, default_value = "1..10")]
        alphas: String,
    },
    /// Cross-validate several algorithms on identical folds.
    Compare {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hp: HyperArgs,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, value_delimiter = ',', default_value = "rmls,plst,faie,cssml,wsabie,leml,baseline")]
        algos: Vec<String>,
        /// Embedding sizes to compare; defaults to --k.
        #[arg(long, value_delimiter = ',')]
        ks: Vec<usize>,
    },
    /// Write a seeded synthetic dataset.
    Synth {
        /// `enron` (Enron-shaped) or `imbalanced`.
        #[arg(long, default_value = "enron")]
        preset: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Indices in the file start at 1.
    #[arg(long)]
    one_based: bool,
    /// Directory searched when --dataset is not found as given.
    #[arg(long, env = "XMLC_DATA_DIR", hide_env_values = true)]
    data_dir: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct HyperArgs {
    #[arg(long, default_value = "rmls")]
    algo: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    loss: Option<LossKind>,
    #[arg(long)]
    theta: Option<Theta>,
    /// LEML alternating sweeps.
    #[arg(long)]
    sweeps: Option<usize>,
    /// Ridge penalty of the LSDR regressors.
    #[arg(long, default_value_t = DEFAULT_RIDGE)]
    ridge: f64,
    /// FaIE weight of the predictability term.
    #[arg(long, default_value_t = 1.0)]
    faie_alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value = "threshold:0.5")]
    rule: PredictionRule,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl DataArgs {
    fn resolve(&self) -> PathBuf {
        if self.dataset.exists() || self.dataset.is_absolute() {
            return self.dataset.clone();
        }
        match &self.data_dir {
            Some(root) => root.join(&self.dataset),
            None => self.dataset.clone(),
        }
    }

    fn load(&self) -> anyhow::Result<Dataset> {
        let path = self.resolve();
        let file = File::open(&path).map_err(Error::Io).with_context(|| format!("opening {}", path.display()))?;
        let opts = ParseOptions { one_based: self.one_based, ..Default::default() };
        let ds = parse_multilabel(BufReader::new(file), opts)
            .map_err(Error::from)
            .with_context(|| format!("parsing {}", path.display()))?;
        log::info!("loaded {}: n={} d={} m={}", path.display(), ds.n(), ds.d(), ds.m());
        Ok(ds)
    }
}

impl HyperArgs {
    fn file_config(&self) -> anyhow::Result<FileConfig> {
        match &self.config {
            Some(p) => Ok(load_config(p).with_context(|| format!("reading config {}", p.display()))?),
            None => Ok(FileConfig::default()),
        }
    }

    fn spec(&self, algo: &str, k_override: Option<usize>) -> anyhow::Result<TrainerSpec> {
        let mut fc = self.file_config()?;
        let k = k_override.or(self.k);
        let spec = match algo {
            "rmls" => {
                let c = &mut fc.train;
                macro_rules! set {
                    ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
                }
                set!(alpha, lambda, eta, epochs, batch_size, loss, theta);
                if let Some(k) = k {
                    c.k = k;
                }
                c.seed = self.seed;
                c.validate()?;
                TrainerSpec::Rmls(fc.train)
            }
            "plst" | "cplst" | "faie" | "cssml" => {
                let method = match algo {
                    "plst" => LsdrMethod::Plst,
                    "cplst" => LsdrMethod::Cplst,
                    "faie" => LsdrMethod::Faie,
                    _ => LsdrMethod::Cssml,
                };
                TrainerSpec::Lsdr { method, k: k.unwrap_or(fc.train.k), ridge: self.ridge, faie_alpha: self.faie_alpha }
            }
            "wsabie" => {
                let c = &mut fc.wsabie;
                if let Some(k) = k {
                    c.k = k;
                }
                if let Some(v) = self.eta {
                    c.eta = v;
                }
                if let Some(v) = self.epochs {
                    c.epochs = v;
                }
                c.seed = self.seed;
                c.validate()?;
                TrainerSpec::Wsabie(fc.wsabie)
            }
            "leml" => {
                let c = &mut fc.leml;
                if let Some(k) = k {
                    c.k = k;
                }
                if let Some(v) = self.lambda {
                    c.lambda = v;
                }
                if let Some(v) = self.sweeps {
                    c.sweeps = v;
                }
                c.seed = self.seed;
                TrainerSpec::Leml(fc.leml)
            }
            "baseline" => TrainerSpec::Baseline,
            other => return Err(Error::InvalidArgument(format!("unknown algorithm `{other}`")).into()),
        };
        Ok(spec)
    }
}

/// Writes through a temporary sibling file and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().context("output path has no file name")?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn imr_histogram(imrs: &[Option<f64>], bins: usize) -> String {
    let logs: Vec<f64> = imrs.iter().flatten().map(|v| v.max(f64::MIN_POSITIVE).log10()).collect();
    let mut out = String::from("log10_imr_lo,log10_imr_hi,labels\n");
    if logs.is_empty() {
        return out;
    }
    let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in &logs {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    for (b, c) in counts.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", lo + b as f64 * width, lo + (b + 1) as f64 * width, c));
    }
    out
}

fn cmd_profile(data: &DataArgs, out: &Path) -> anyhow::Result<()> {
    let ds = data.load()?;
    let stats = compute_stats(&ds)?;
    write_atomic(&out.join("stats.json"), serde_json::to_string_pretty(&stats)?.as_bytes())?;
    let mut per_label = String::from("label,positives,imr\n");
    for (j, (c, imr)) in stats.per_label_positive_count.iter().zip(&stats.imr_per_label).enumerate() {
        let imr = imr.map_or_else(String::new, |v| v.to_string());
        per_label.push_str(&format!("{j},{c},{imr}\n"));
    }
    write_atomic(&out.join("imr_per_label.csv"), per_label.as_bytes())?;
    write_atomic(&out.join("imr_histogram.csv"), imr_histogram(&stats.imr_per_label, 10).as_bytes())?;

    println!("instances          {}", stats.n);
    println!("features           {}", stats.d);
    println!("labels             {}", stats.m);
    println!("label cardinality  {:.3}", stats.label_cardinality);
    println!("label density      {:.4}", stats.label_density);
    match stats.imr_mean {
        Some(v) => println!("mean ImR           {v:.2}"),
        None => println!("mean ImR           undefined"),
    }
    if !stats.undefined_imr_labels.is_empty() {
        println!("labels without positives: {:?}", stats.undefined_imr_labels);
    }
    Ok(())
}

fn cmd_train(data: &DataArgs, hp: &HyperArgs, out: &Path, model_name: &str) -> anyhow::Result<()> {
    let ds = data.load()?;
    let spec = hp.spec(&hp.algo, None)?;
    let model = match &spec {
        TrainerSpec::Rmls(cfg) => {
            let mut progress = CsvProgress::new(Vec::new());
            let model = train(&ds, cfg, &mut progress)?;
            write_atomic(&out.join("progress.csv"), &progress.into_inner())?;
            TrainedModel::Embedding(model)
        }
        other => other.fit(&ds)?,
    };
    let mut buf = Vec::new();
    save_trained(&model, &mut buf)?;
    let path = out.join(model_name);
    write_atomic(&path, &buf)?;
    println!("saved {} model to {}", spec.name(), path.display());
    Ok(())
}

fn cmd_predict(data: &DataArgs, model_path: &Path, rule: &PredictionRule, out: &Path) -> anyhow::Result<()> {
    let file = File::open(model_path).map_err(Error::Io).with_context(|| format!("opening {}", model_path.display()))?;
    let model = load_trained(BufReader::new(file)).with_context(|| format!("loading {}", model_path.display()))?;
    let ds = data.load()?;
    if let Some(d) = model.d() {
        if d != ds.d() {
            return Err(Error::DimensionMismatch { expected: d, found: ds.d() }).context("feature count of dataset");
        }
    }
    if model.num_labels() != ds.m() {
        return Err(Error::DimensionMismatch { expected: model.num_labels(), found: ds.m() })
            .context("label count of dataset");
    }
    if let TrainedModel::Embedding(m) = &model {
        rule.validate(m.sigma, m.m())?;
    }
    let shift = usize::from(data.one_based);
    let mut text = String::new();
    for inst in ds.instances() {
        let pred = model.predict_labels(&inst.features, rule)?;
        let line: Vec<String> = pred.iter().map(|j| (j + shift).to_string()).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    write_atomic(out, text.as_bytes())?;
    println!("wrote {} predictions to {}", ds.n(), out.display());
    Ok(())
}

fn report_stem(report: &MetricsReport) -> String {
    match report.k {
        Some(k) => format!("{}_k{}", report.algorithm, k),
        None => report.algorithm.clone(),
    }
}

fn write_report(report: &MetricsReport, out: &Path) -> anyhow::Result<()> {
    let stem = report_stem(report);
    write_atomic(&out.join(format!("{stem}.json")), serde_json::to_string_pretty(report)?.as_bytes())?;
    let csv = format!("{}{}", MetricsReport::CSV_HEADER, report.csv_rows());
    write_atomic(&out.join(format!("{stem}.csv")), csv.as_bytes())?;
    let md = format!("{}\n{}\n", MetricsReport::MARKDOWN_HEADER, report.markdown_row());
    write_atomic(&out.join(format!("{stem}.md")), md.as_bytes())?;
    Ok(())
}

fn cmd_cv(data: &DataArgs, hp: &HyperArgs, eval: &EvalArgs) -> anyhow::Result<()> {
    let ds = data.load()?;
    let spec = hp.spec(&hp.algo, None)?;
    let report = cross_validate(&ds, &spec, eval.folds, hp.seed, &eval.rule, eval.jobs)?;
    write_report(&report, &eval.out)?;
    println!("{}\n{}", MetricsReport::MARKDOWN_HEADER, report.markdown_row());
    Ok(())
}

fn parse_alphas(text: &str) -> anyhow::Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("bad alpha list `{text}`"));
    let alphas: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        (a..=b).collect()
    } else {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if alphas.is_empty() || alphas.contains(&0) {
        return Err(bad().into());
    }
    Ok(alphas)
}

fn sweep_rows(alpha: usize, report: &MetricsReport) -> String {
    let row = |name: &str, v: &MeanStd| format!("{alpha},{name},{},{}\n", v.mean, v.std);
    row("hamming_loss", &report.hamming_loss) + &row("f_score", &report.f_score) + &row("accuracy", &report.accuracy)
}

fn cmd_sweep_alpha(data: &DataArgs, hp: &HyperArgs, eval: &EvalArgs, alphas: &str) -> anyhow::Result<()> {
    if hp.algo != "rmls" {
        bail!(Error::InvalidArgument("sweep-alpha only applies to --algo rmls".into()));
    }
    let alphas = parse_alphas(alphas)?;
    let ds = data.load()?;
    let mut csv = String::from("alpha,metric,mean,std\n");
    for &alpha in &alphas {
        let hp = HyperArgs { alpha: Some(alpha), ..hp.clone() };
        let spec = hp.spec("rmls", None)?;
        let report = cross_validate(&ds, &spec, eval.folds, hp.seed, &eval.rule, eval.jobs)?;
        println!("alpha={alpha:<3} hamming={} f={} acc={}", report.hamming_loss, report.f_score, report.accuracy);
        csv.push_str(&sweep_rows(alpha, &report));
    }
    write_atomic(&eval.out.join("sweep_alpha.csv"), csv.as_bytes())?;
    Ok(())
}

fn cmd_compare(data: &DataArgs, hp: &HyperArgs, eval: &EvalArgs, algos: &[String], ks: &[usize]) -> anyhow::Result<()> {
    let ds = data.load()?;
    let ks: Vec<Option<usize>> = if ks.is_empty() { vec![hp.k] } else { ks.iter().map(|k| Some(*k)).collect() };
    let mut reports: Vec<MetricsReport> = Vec::new();
    for algo in algos {
        let algo_ks: &[Option<usize>] = if algo == "baseline" { &[None] } else { &ks };
        for k in algo_ks {
            let spec = hp.spec(algo, *k)?;
            // the split seed is shared, so every algorithm sees the same folds
            let report = cross_validate(&ds, &spec, eval.folds, hp.seed, &eval.rule, eval.jobs)
                .with_context(|| format!("algorithm {algo}"))?;
            log::info!("{}", report.markdown_row());
            write_report(&report, &eval.out)?;
            reports.push(report);
        }
    }

    let mut csv = String::from(MetricsReport::CSV_HEADER);
    for r in &reports {
        csv.push_str(&r.csv_rows());
    }
    write_atomic(&eval.out.join("compare.csv"), csv.as_bytes())?;
    write_atomic(&eval.out.join("compare.json"), serde_json::to_string_pretty(&reports)?.as_bytes())?;

    let col_ks: Vec<usize> = {
        let mut v: Vec<usize> = reports.iter().filter_map(|r| r.k).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let metrics: [(&str, fn(&MetricsReport) -> MeanStd); 3] = [
        ("Hamming loss", |r| r.hamming_loss),
        ("F score", |r| r.f_score),
        ("Accuracy", |r| r.accuracy),
    ];
    let mut md = String::new();
    for (title, get) in metrics {
        md.push_str(&format!("### {title}\n\n| Algorithm |"));
        for k in &col_ks {
            md.push_str(&format!(" k={k} |"));
        }
        md.push_str(&format!("\n|---|{}\n", "---|".repeat(col_ks.len().max(1))));
        for algo in algos {
            md.push_str(&format!("| {algo} |"));
            let mine: Vec<&MetricsReport> = reports.iter().filter(|r| r.algorithm == *algo).collect();
            if mine.len() == 1 && mine[0].k.is_none() {
                // k-independent rows repeat across columns
                for _ in 0..col_ks.len().max(1) {
                    md.push_str(&format!(" {} |", get(mine[0])));
                }
            } else {
                for k in &col_ks {
                    match mine.iter().find(|r| r.k == Some(*k)) {
                        Some(r) => md.push_str(&format!(" {} |", get(r))),
                        None => md.push_str(" - |"),
                    }
                }
            }
            md.push('\n');
        }
        md.push('\n');
    }
    write_atomic(&eval.out.join("compare.md"), md.as_bytes())?;
    print!("{md}");
    Ok(())
}

fn cmd_synth(preset: &str, n: Option<usize>, seed: u64, out: &Path) -> anyhow::Result<()> {
    let mut cfg = match preset {
        "enron" => SyntheticConfig::enron_shaped(),
        "imbalanced" => SyntheticConfig::imbalanced(),
        other => bail!(Error::InvalidArgument(format!("unknown preset `{other}`"))),
    };
    if let Some(n) = n {
        cfg.n = n;
    }
    let ds = generate(&cfg, seed)?;
    let mut buf = Vec::new();
    ds.write_to(&mut buf)?;
    write_atomic(out, &buf)?;
    println!("wrote n={} d={} m={} to {}", ds.n(), ds.d(), ds.m(), out.display());
    Ok(())
}

fn classify(err: &Error) -> u8 {
    match err {
        Error::Numerical(_) => 4,
        Error::InvalidArgument(_) | Error::Config(_) => 2,
        Error::Fold { source, .. } => classify(source),
        _ => 3,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return classify(e);
        }
        if cause.downcast_ref::<ParseError>().is_some() || cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Profile { data, out } => cmd_profile(data, out),
        Command::Train { data, hp, out, model_name } => cmd_train(data, hp, out, model_name),
        Command::Predict { data, model, rule, out } => cmd_predict(data, model, rule, out),
        Command::Cv { data, hp, eval } => cmd_cv(data, hp, eval),
        Command::SweepAlpha { data, hp, eval, alphas } => cmd_sweep_alpha(data, hp, eval, alphas),
        Command::Compare { data, hp, eval, algos, ks } => cmd_compare(data, hp, eval, algos, ks),
        Command::Synth { preset, n, seed, out } => cmd_synth(preset, *n, *seed, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_lists() {
        assert_eq!(parse_alphas("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_alphas("2, 5,9").unwrap(), vec![2, 5, 9]);
        assert!(parse_alphas("0..3").is_err());
        assert!(parse_alphas("x").is_err());
    }

    #[test]
    fn histogram_counts_defined_labels() {
        let h = imr_histogram(&[Some(1.0), Some(10.0), None, Some(100.0)], 2);
        let counts: usize = h.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
        assert_eq!(counts, 3);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&anyhow::Error::from(Error::Numerical("x".into()))), 4);
        assert_eq!(exit_code(&anyhow::Error::from(Error::Config("x".into())).context("ctx")), 2);
        let fold = Error::Fold { fold: 1, source: Box::new(Error::Numerical("nan".into())) };
        assert_eq!(exit_code(&anyhow::Error::from(fold)), 4);
        assert_eq!(exit_code(&anyhow::Error::from(Error::DimensionMismatch { expected: 1, found: 2 })), 3);
    }
}
