use clap::{Args, Parser, Subcommand};
use defectlab::balance::{DbbConfig, SampleSize};
use defectlab::config::{ClassColumnSpec, DataFormat, DatasetSpec, ExperimentConfig, ReportFormat};
use defectlab::data::{decode, encode, impute_global, write_arff, write_csv, Dataset};
use defectlab::eval::{metrics, wdl, ConfusionMatrix, CvMode};
use defectlab::rbf::{RbfConfig, RbfNetwork, TrainMode, Width};
use defectlab::runner::{atomic_write, load_dataset};
use defectlab::stats::{
    kruskal_wallis_ranked, mann_whitney, posthoc, Adjustment, PosthocMatrix, PosthocMethod,
    RankData,
};
use defectlab::{Error, Result};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "defectlab", version, about = "Defect-prediction experiment toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DatasetArgs {
    /// Input dataset path.
    #[arg(long)]
    input: PathBuf,
    /// Input format.
    #[arg(long, value_enum, default_value = "arff")]
    format: FormatArg,
    /// Class column name or zero-based index (CSV only; ARFF uses the last
    /// attribute).
    #[arg(long)]
    class_column: Option<String>,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum FormatArg {
    Arff,
    Csv,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum ModeArg {
    Paper,
    Leakfree,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum ReportArg {
    Csv,
    Md,
}

#[derive(Args, Clone)]
struct ClassifierArgs {
    /// Number of centers (fixed-k training).
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Incremental training: grow neurons until the error target is met.
    #[arg(long)]
    incremental: bool,
    /// Kernel width: "auto" or a positive number.
    #[arg(long, default_value = "auto")]
    width: String,
    /// Ridge regularization for the output weights.
    #[arg(long, default_value_t = 1e-8)]
    ridge: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ClassifierArgs {
    fn to_config(&self) -> Result<RbfConfig> {
        let width = if self.width.eq_ignore_ascii_case("auto") {
            Width::Auto
        } else {
            let w: f64 = self
                .width
                .parse()
                .map_err(|_| Error::Config(format!("--width: invalid value '{}'", self.width)))?;
            Width::Fixed(w)
        };
        let cfg = RbfConfig {
            mode: if self.incremental { TrainMode::Incremental } else { TrainMode::FixedK },
            k: self.k,
            width,
            ridge: self.ridge,
            seed: self.seed,
            ..RbfConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a full experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the cross-validation mode.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Override the report formats.
        #[arg(long, value_enum)]
        format: Option<ReportArg>,
        /// Verify the manifest hashes of a previous run instead of running.
        #[arg(long)]
        check: bool,
    },
    /// Rebalance a dataset by distribution-based regeneration.
    Balance {
        #[command(flatten)]
        data: DatasetArgs,
        /// Rows per class: a count or "max".
        #[arg(long, default_value = "30")]
        b: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier and save the model as JSON.
    Train {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        classifier: ClassifierArgs,
        /// Rebalance the training data first: a count or "max".
        #[arg(long)]
        balance: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a dataset with a saved model.
    Predict {
        #[command(flatten)]
        data: DatasetArgs,
        #[arg(long)]
        model: PathBuf,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a saved model against a labeled dataset.
    Evaluate {
        #[command(flatten)]
        data: DatasetArgs,
        #[arg(long)]
        model: PathBuf,
        /// Class label treated as defective.
        #[arg(long)]
        positive: String,
    },
    /// Rank-based statistical comparison of methods from a results CSV
    /// with columns method,dataset,value.
    Compare {
        #[arg(long)]
        input: PathBuf,
        /// Directory for the post-hoc tables; stdout summary only when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "md")]
        format: ReportArg,
    },
    /// Win-Draw-Loss matrix for two or more methods from a results CSV.
    Wdl {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        epsilon: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn read_dataset(args: &DatasetArgs) -> Result<Dataset> {
    let class_column = match (args.format, &args.class_column) {
        (FormatArg::Arff, _) => None,
        (FormatArg::Csv, Some(c)) => Some(match c.parse::<usize>() {
            Ok(i) => ClassColumnSpec::Index(i),
            Err(_) => ClassColumnSpec::Name(c.clone()),
        }),
        (FormatArg::Csv, None) => {
            return Err(Error::Config("CSV input needs --class-column".into()))
        }
    };
    load_dataset(&DatasetSpec {
        path: args.input.clone(),
        format: match args.format {
            FormatArg::Arff => DataFormat::Arff,
            FormatArg::Csv => DataFormat::Csv,
        },
        class_column,
        positive_label: String::new(),
        name: None,
    })
}

fn parse_b(text: &str) -> Result<SampleSize> {
    if text.eq_ignore_ascii_case("max") {
        Ok(SampleSize::Max)
    } else {
        let n: usize = text
            .parse()
            .map_err(|_| Error::Config(format!("--b: invalid value '{text}'")))?;
        if n == 0 {
            return Err(Error::Config("--b: must be >= 1".into()));
        }
        Ok(SampleSize::Count(n))
    }
}

fn write_out(path: &Path, contents: &str) -> Result<()> {
    atomic_write(path, contents)
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, out, seed, mode, format, check } => {
            if check {
                let dir = out.unwrap_or_else(|| PathBuf::from("."));
                let verified = defectlab::runner::check(&dir)?;
                println!("verified {} artifacts", verified.len());
                return Ok(());
            }
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(m) = mode {
                cfg.cv.mode = match m {
                    ModeArg::Paper => CvMode::PaperFaithful,
                    ModeArg::Leakfree => CvMode::LeakFree,
                };
            }
            if let Some(f) = format {
                cfg.report_formats = vec![match f {
                    ReportArg::Csv => ReportFormat::Csv,
                    ReportArg::Md => ReportFormat::Markdown,
                }];
            }
            let outcome = defectlab::runner::run(&cfg)?;
            for (name, report) in &outcome.results {
                let m = &report.aggregate;
                println!(
                    "{name}: accuracy {:.4}, balance {:.4}, auc {}",
                    m.accuracy,
                    m.balance,
                    m.auc.map(|a| format!("{a:.4}")).unwrap_or_else(|| "NA".into()),
                );
            }
            println!("wrote {} artifacts to {}", outcome.manifest.artifacts.len(), cfg.output_dir.display());
            Ok(())
        }
        Command::Balance { data, b, seed, out } => {
            let d = read_dataset(&data)?;
            let encoded = encode(&impute_global(&d))?;
            let cfg = DbbConfig { b: parse_b(&b)?, seed, ..DbbConfig::default() };
            let balanced = defectlab::balance::balance(&encoded, &cfg)?;
            let decoded = decode(&balanced)?;
            let text = match data.format {
                FormatArg::Arff => write_arff(&decoded),
                FormatArg::Csv => write_csv(&decoded),
            };
            write_out(&out, &text)?;
            println!("wrote {} rows to {}", decoded.rows.len(), out.display());
            Ok(())
        }
        Command::Train { data, classifier, balance, out } => {
            let d = read_dataset(&data)?;
            let mut encoded = encode(&impute_global(&d))?;
            if let Some(b) = balance {
                let cfg = DbbConfig {
                    b: parse_b(&b)?,
                    seed: classifier.seed,
                    ..DbbConfig::default()
                };
                encoded = defectlab::balance::balance(&encoded, &cfg)?;
            }
            let net = defectlab::rbf::train(&encoded, &classifier.to_config()?)?;
            write_out(&out, &net.to_json())?;
            println!("trained {} centers, wrote {}", net.centers.len(), out.display());
            Ok(())
        }
        Command::Predict { data, model, out } => {
            let d = read_dataset(&data)?;
            let encoded = encode(&impute_global(&d))?;
            let net = load_model(&model)?;
            let mut text = String::from("row,predicted");
            for c in &net.classes {
                let _ = write!(text, ",score_{c}");
            }
            text.push('\n');
            for (i, x) in encoded.matrix.iter().enumerate() {
                let (scores, predicted) = net.predict(x)?;
                let _ = write!(text, "{i},{}", net.classes[predicted]);
                for s in scores {
                    let _ = write!(text, ",{s:.6}");
                }
                text.push('\n');
            }
            match out {
                Some(path) => {
                    write_out(&path, &text)?;
                    println!("wrote {} predictions to {}", encoded.n_rows(), path.display());
                }
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Evaluate { data, model, positive } => {
            let d = read_dataset(&data)?;
            let encoded = encode(&impute_global(&d))?;
            let net = load_model(&model)?;
            let pos = net
                .classes
                .iter()
                .position(|c| c == &positive)
                .ok_or_else(|| {
                    Error::Config(format!("positive label '{positive}' is not a model class"))
                })?;
            let mut cm = ConfusionMatrix::new(net.classes.clone(), pos);
            let mut pos_scores = Vec::new();
            let mut neg_scores = Vec::new();
            for (x, &actual) in encoded.matrix.iter().zip(&encoded.labels) {
                let (scores, predicted) = net.predict(x)?;
                cm.record(actual, predicted);
                if actual == pos {
                    pos_scores.push(scores[pos]);
                } else {
                    neg_scores.push(scores[pos]);
                }
            }
            let mut report = metrics(&cm)?;
            report.auc = defectlab::eval::auc(&pos_scores, &neg_scores);
            println!("accuracy  {:.6}", report.accuracy);
            println!("precision {:.6}", report.precision);
            println!("recall    {:.6}", report.recall);
            println!("f_score   {:.6}", report.f_score);
            println!("balance   {:.6}", report.balance);
            println!(
                "auc       {}",
                report.auc.map(|a| format!("{a:.6}")).unwrap_or_else(|| "NA".into())
            );
            Ok(())
        }
        Command::Compare { input, out, format } => compare(&input, out.as_deref(), format),
        Command::Wdl { input, epsilon } => wdl_matrix(&input, epsilon),
    }
}

fn load_model(path: &Path) -> Result<RbfNetwork> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read '{}': {e}", path.display())))?;
    RbfNetwork::from_json(&text)
}

/// Results CSV: method,dataset,value rows, optional header, methods kept
/// in first-appearance order.
fn read_results(path: &Path) -> Result<(Vec<String>, Vec<Vec<(String, f64)>>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read '{}': {e}", path.display())))?;
    let mut methods: Vec<String> = Vec::new();
    let mut values: Vec<Vec<(String, f64)>> = Vec::new();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(text.as_bytes());
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(i + 1, format!("results csv: {e}")))?;
        if record.len() != 3 {
            return Err(Error::parse(
                i + 1,
                format!("results csv: expected 3 fields, got {}", record.len()),
            ));
        }
        let value = match record[2].trim().parse::<f64>() {
            Ok(v) => v,
            // a non-numeric third field on the first line is the header
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Error::parse(
                    i + 1,
                    format!("results csv: invalid value '{}'", &record[2]),
                ))
            }
        };
        let method = record[0].trim().to_string();
        let dataset = record[1].trim().to_string();
        let g = match methods.iter().position(|m| m == &method) {
            Some(g) => g,
            None => {
                methods.push(method);
                values.push(Vec::new());
                values.len() - 1
            }
        };
        values[g].push((dataset, value));
    }
    if methods.len() < 2 {
        return Err(Error::Data("results csv: need at least 2 methods".into()));
    }
    Ok((methods, values))
}

fn posthoc_csv(methods: &[String], m: &PosthocMatrix) -> String {
    let mut out = String::from("method_a,method_b,p_value\n");
    for i in 1..methods.len() {
        for j in 0..i {
            let _ = writeln!(out, "{},{},{:.6}", methods[i], methods[j], m.get(i, j));
        }
    }
    out
}

fn posthoc_markdown(methods: &[String], m: &PosthocMatrix) -> String {
    let mut out = format!(
        "### {} ({})\n\n| |",
        m.method.name(),
        m.adjustment.name()
    );
    for name in &methods[..methods.len() - 1] {
        let _ = write!(out, " {name} |");
    }
    out.push('\n');
    out.push_str("|---|");
    out.push_str(&"---|".repeat(methods.len() - 1));
    out.push('\n');
    for i in 1..methods.len() {
        let _ = write!(out, "| {} |", methods[i]);
        for j in 0..methods.len() - 1 {
            if j < i {
                let _ = write!(out, " {:.6} |", m.get(i, j));
            } else {
                let _ = write!(out, " |");
            }
        }
        out.push('\n');
    }
    out.push('\n');
    out
}

fn compare(input: &Path, out: Option<&Path>, format: ReportArg) -> Result<()> {
    let (methods, values) = read_results(input)?;
    let groups: Vec<Vec<f64>> = values
        .iter()
        .map(|g| g.iter().map(|(_, v)| v).copied().collect())
        .collect();
    let rd = RankData::new(&groups)?;
    let omnibus = kruskal_wallis_ranked(&rd)?;
    println!(
        "kruskal-wallis H = {:.6}, df = {}, p = {:.6}",
        omnibus.statistic,
        omnibus.df.map(|d| d.to_string()).unwrap_or_else(|| "NA".into()),
        omnibus.p_value,
    );
    if methods.len() == 2 {
        let mw = mann_whitney(&groups[0], &groups[1], true, false)?;
        println!("mann-whitney U = {}, Z = {:.5}, p = {:.6}", mw.u, mw.z, mw.p_value);
    }
    let mut matrices = Vec::new();
    for method in PosthocMethod::ALL {
        for adjustment in Adjustment::ALL {
            matrices.push(posthoc(&rd, omnibus.statistic, method, adjustment)?);
        }
    }
    if let Some(dir) = out {
        let mut md = format!(
            "# Method comparison\n\nKruskal-Wallis H = {:.6}, df = {}, p = {:.6}\n\n",
            omnibus.statistic,
            omnibus.df.map(|d| d.to_string()).unwrap_or_else(|| "NA".into()),
            omnibus.p_value,
        );
        for m in &matrices {
            match format {
                ReportArg::Csv => {
                    let rel = format!("posthoc_{}_{}.csv", m.method.name(), m.adjustment.name());
                    write_out(&dir.join(rel), &posthoc_csv(&methods, m))?;
                }
                ReportArg::Md => md.push_str(&posthoc_markdown(&methods, m)),
            }
        }
        match format {
            ReportArg::Csv => {}
            ReportArg::Md => write_out(&dir.join("compare.md"), &md)?,
        }
        println!("wrote post-hoc tables to {}", dir.display());
    } else {
        for m in &matrices {
            print!("{}", posthoc_markdown(&methods, m));
        }
    }
    Ok(())
}

fn wdl_matrix(input: &Path, epsilon: f64) -> Result<()> {
    let (methods, values) = read_results(input)?;
    // align on dataset names present for every method
    let mut common: Vec<String> = values[0].iter().map(|(d, _)| d.clone()).collect();
    for group in &values[1..] {
        common.retain(|d| group.iter().any(|(name, _)| name == d));
    }
    if common.is_empty() {
        return Err(Error::Data("results csv: no datasets shared by all methods".into()));
    }
    let aligned: Vec<Vec<f64>> = values
        .iter()
        .map(|group| {
            common
                .iter()
                .map(|d| group.iter().find(|(name, _)| name == d).expect("common dataset").1)
                .collect()
        })
        .collect();
    println!("datasets: {}", common.len());
    for i in 0..methods.len() {
        for j in 0..methods.len() {
            if i == j {
                continue;
            }
            let r = wdl(&aligned[i], &aligned[j], epsilon)?;
            println!("{} vs {}: {r}", methods[i], methods[j]);
        }
    }
    Ok(())
}
