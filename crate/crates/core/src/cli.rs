//! Command-line front end.
//!
//! Every subcommand takes `--seed` (default from `SF_SEED`, else 0) and
//! `--out`. `--config FILE` splices `key = value` lines from FILE in as
//! `--key=value` flags ahead of the command line, so explicit flags win and
//! unknown keys are rejected like unknown flags. Exit codes: 0 success,
//! 1 runtime error, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::attribution::{
    completeness_report, compete, grad_input_stack, load_map, lrp_stack, save_map, save_stack, Method,
    DEFAULT_EPSILON,
};
use crate::data::{load_idx, load_idx_images, permute_labels, synthetic_digits, write_labels_csv, LabeledDataset};
use crate::error::{Error, Result};
use crate::nn::{load_network, save_network, train, Architecture, LayerSpec, Network, TrainConfig};
use crate::render::{render_heatmap, sweep_svg, write_heatmap, HeatmapStyle};
use crate::rng::derive_seed;
use crate::sanity::{
    run_data_randomization, run_parameter_randomization, DataRandomizationConfig, HarnessOptions,
    RandomizationMode, RandomizationPlan,
};
use crate::theory::{delta_sweep, sweep_csv, TheoryConfig, DEFAULT_DELTA_GRID};

#[derive(Debug, Parser)]
#[command(
    name = "saliency-lab",
    about = "Competitive saliency maps, sanity checks and the correlated-Gaussian model",
    arg_required_else_help = true,
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Base seed; defaults to $SF_SEED or 0.
    #[arg(long, env = "SF_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// IDX image file; synthetic digits are used when absent.
    #[arg(long, requires = "labels")]
    pub images: Option<PathBuf>,
    /// IDX label file.
    #[arg(long, requires = "images")]
    pub labels: Option<PathBuf>,
    /// Number of synthetic digits to generate when no IDX files are given.
    #[arg(long, default_value_t = 2000)]
    pub synthetic: usize,
    #[arg(long, default_value_t = 1)]
    pub data_seed: u64,
}

#[derive(Debug, Args)]
pub struct ArchArgs {
    /// Layer list, e.g. "flatten,dense:64,relu,dense:10" or "conv:4:3,relu,flatten,dense:10".
    #[arg(long, default_value = "flatten,dense:64,relu,dense:10")]
    pub arch: String,
    /// Whether dense/conv layers carry a trainable bias.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub bias: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
}

impl TrainArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch,
            learning_rate: self.lr,
            seed,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a network and write it as an SFN1 file.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        arch: ArchArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// Train on a label-permuted copy of the data.
        #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
        permute_labels: bool,
        /// Use only the first N samples.
        #[arg(long)]
        train_size: Option<usize>,
    },
    /// Compute a saliency map for one image.
    Attribute {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        net: PathBuf,
        /// IDX image file.
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, default_value = "cgi")]
        method: Method,
        /// Label to explain; defaults to the predicted one.
        #[arg(long)]
        label: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
    },
    /// Parameter-randomization sanity check on a trained network.
    SanityParams {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        net: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "layerwise")]
        mode: RandomizationMode,
        #[arg(long, value_delimiter = ',', default_value = "gradinput,cgi,lrp,clrp")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 64)]
        eval_images: usize,
        /// Number of images to render heatmaps for (0 = none).
        #[arg(long, default_value_t = 0)]
        heatmaps: usize,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
    },
    /// Data-randomization sanity check: true vs permuted labels.
    SanityData {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        arch: ArchArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// Training subset size; the next --eval-images samples are held out.
        #[arg(long, default_value_t = 1024)]
        train_size: usize,
        #[arg(long, value_delimiter = ',', default_value = "gradinput,cgi,lrp,clrp")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 64)]
        eval_images: usize,
        #[arg(long, default_value_t = 0)]
        heatmaps: usize,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
    },
    /// Monte-Carlo c1/c2 sweep over delta.
    Theory {
        #[command(flatten)]
        common: Common,
        /// Single delta; overrides --grid.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        overlap: f64,
    },
    /// Render an SFM1 map file as PPM (diverging) or PGM (absolute).
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value = "diverging")]
        style: HeatmapStyle,
    },
}

/// Splices `--config FILE` contents into argv. Returns a usage message on failure.
fn expand_config(args: Vec<OsString>) -> std::result::Result<Vec<OsString>, String> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            config = Some(PathBuf::from(iter.next().ok_or("--config needs a file path")?));
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config else { return Ok(rest) };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut spliced = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected `key = value`", path.display(), no + 1))?;
        spliced.push(OsString::from(format!("--{}={}", key.trim(), value.trim())));
    }
    if rest.len() < 2 {
        return Err("--config needs a subcommand".into());
    }
    let tail = rest.split_off(2);
    rest.extend(spliced);
    rest.extend(tail);
    Ok(rest)
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: PathBuf, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

fn load_data(args: &DataArgs) -> Result<LabeledDataset> {
    match (&args.images, &args.labels) {
        (Some(i), Some(l)) => load_idx(i, l),
        _ => {
            if args.synthetic == 0 {
                return Err(Error::InvalidArgument("--synthetic must be >= 1".into()));
            }
            Ok(synthetic_digits(args.synthetic, args.data_seed))
        }
    }
}

/// Conv-first architectures get a leading channel axis on 2-D images.
fn architecture(args: &ArchArgs, image_shape: &[usize]) -> Result<Architecture> {
    let mut arch = Architecture::parse(&args.arch, image_shape.to_vec(), args.bias)?;
    if matches!(arch.layers.first(), Some(LayerSpec::Conv2d { .. })) && image_shape.len() == 2 {
        arch.input_shape.insert(0, 1);
    }
    Ok(arch)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Train {
            common,
            data,
            arch,
            train: targs,
            permute_labels: permute,
            train_size,
        } => {
            let mut ds = load_data(&data)?;
            if let Some(n) = train_size {
                ds = ds.split_at(n).0;
            }
            let original = ds.labels().to_vec();
            if permute {
                ds = permute_labels(&ds, derive_seed(common.seed, 2));
            }
            let arch = architecture(&arch, ds.image_shape())?;
            let mut net = Network::init(&arch, common.seed)?;
            let report = train(&mut net, &ds, &targs.config(derive_seed(common.seed, 1)))?;
            prepare_out(&common.out)?;
            save_network(&net, common.out.join("net.sfn"))?;
            let mut csv = String::from("epoch,loss\n");
            for (i, l) in report.epoch_losses.iter().enumerate() {
                csv.push_str(&format!("{i},{l}\n"));
            }
            write(common.out.join("train_report.csv"), csv)?;
            let mut columns: Vec<(&str, &[u8])> = vec![("original", &original)];
            if permute {
                columns.push(("trained_on", ds.labels()));
            }
            write_labels_csv(common.out.join("labels.csv"), &columns)?;
            match report.train_accuracy {
                Some(a) => println!("train accuracy {a:.4} after {} epochs", report.epoch_losses.len()),
                None => println!("no epochs run"),
            }
            Ok(())
        }
        Command::Attribute {
            common,
            net,
            image,
            index,
            method,
            label,
            epsilon,
        } => {
            let net = load_network(&net)?;
            let (_, images) = load_idx_images(&image)?;
            let pixels = images.get(index).ok_or_else(|| {
                Error::InvalidArgument(format!("image index {index} out of range ({} images)", images.len()))
            })?;
            let x = net.input_tensor(pixels)?;
            let stack = match method.base() {
                Method::Lrp => lrp_stack(&net, &x, epsilon)?,
                _ => grad_input_stack(&net, &x)?,
            };
            let stack = match label {
                Some(l) => stack.with_chosen(l)?,
                None => stack,
            };
            let map = if method.is_competitive() {
                compete(&stack)
            } else {
                stack.chosen_map().clone()
            };
            prepare_out(&common.out)?;
            let stem = format!("{method}_img{index}_node{}", map.node);
            save_map(&map, common.out.join(format!("{stem}.sfm")))?;
            save_stack(&stack, common.out.join(format!("{}_img{index}_stack.sfs", stack.method())))?;
            render_heatmap(&map, HeatmapStyle::Diverging, common.out.join(format!("{stem}.ppm")))?;
            render_heatmap(&map, HeatmapStyle::AbsoluteValue, common.out.join(format!("{stem}.pgm")))?;
            let report = completeness_report(&net, &x, &stack)?;
            write(
                common.out.join(format!("{}_img{index}_completeness.csv", stack.method())),
                report.to_csv(),
            )?;
            println!(
                "{method} map for node {} : nonzero fraction {:.4}, score sum {:.6}",
                map.node,
                map.nonzero_fraction(),
                map.sum()
            );
            Ok(())
        }
        Command::SanityParams {
            common,
            net,
            data,
            mode,
            methods,
            eval_images,
            heatmaps,
            epsilon,
        } => {
            let net = load_network(&net)?;
            let ds = load_data(&data)?;
            let plan = RandomizationPlan::for_mode(mode, &net, common.seed);
            let opts = HarnessOptions {
                epsilon,
                eval_images,
                heatmap_dir: (heatmaps > 0).then(|| common.out.join("heatmaps")),
                heatmap_images: heatmaps,
            };
            let report = run_parameter_randomization(&net, &ds, &plan, &methods, &opts)?;
            prepare_out(&common.out)?;
            write(common.out.join("sanity_params.csv"), report.to_csv())?;
            write(common.out.join("sanity_params.txt"), report.to_string())?;
            print!("{report}");
            Ok(())
        }
        Command::SanityData {
            common,
            data,
            arch,
            train: targs,
            train_size,
            methods,
            eval_images,
            heatmaps,
            epsilon,
        } => {
            let ds = load_data(&data)?;
            if ds.len() <= train_size {
                return Err(Error::InvalidArgument(format!(
                    "need more than --train-size={train_size} samples to hold some out, have {}",
                    ds.len()
                )));
            }
            let (train_set, held_out) = ds.split_at(train_size);
            let arch = architecture(&arch, ds.image_shape())?;
            let cfg = DataRandomizationConfig {
                train: targs.config(derive_seed(common.seed, 1)),
                init_seed: common.seed,
                permutation_seed: derive_seed(common.seed, 2),
            };
            let opts = HarnessOptions {
                epsilon,
                eval_images,
                heatmap_dir: (heatmaps > 0).then(|| common.out.join("heatmaps")),
                heatmap_images: heatmaps,
            };
            let report = run_data_randomization(&arch, &train_set, &held_out, &cfg, &methods, &opts)?;
            prepare_out(&common.out)?;
            write(common.out.join("sanity_data.csv"), report.to_csv())?;
            write(common.out.join("sanity_data.txt"), report.to_string())?;
            print!("{report}");
            Ok(())
        }
        Command::Theory {
            common,
            delta,
            grid,
            trials,
            n,
            overlap,
        } => {
            let deltas = match (delta, grid) {
                (Some(d), _) => vec![d],
                (None, Some(g)) => g,
                (None, None) => DEFAULT_DELTA_GRID.to_vec(),
            };
            let base = TheoryConfig {
                n,
                delta: deltas.first().copied().unwrap_or(0.15),
                overlap,
                trials,
                seed: common.seed,
            };
            let results = delta_sweep(&base, &deltas)?;
            prepare_out(&common.out)?;
            let csv = sweep_csv(&results);
            write(common.out.join("theory.csv"), &csv)?;
            write(common.out.join("theory.svg"), sweep_svg(&results))?;
            let mut summary = String::from("delta,shared_dot_g1,shared_dot_g1_stderr,shared_dot_g2,shared_dot_g2_stderr,survival_shared,survival_private\n");
            for r in &results {
                summary.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.config.delta,
                    r.shared_dot_g1.mean,
                    r.shared_dot_g1.stderr,
                    r.shared_dot_g2.mean,
                    r.shared_dot_g2.stderr,
                    r.survival_shared.mean,
                    r.survival_private.mean
                ));
            }
            write(common.out.join("theory_concentration.csv"), summary)?;
            print!("{csv}");
            Ok(())
        }
        Command::Render { common, map, style } => {
            let m = load_map(&map)?;
            prepare_out(&common.out)?;
            let stem = map.file_stem().map_or("map".into(), |s| s.to_string_lossy().into_owned());
            let path = common.out.join(format!("{stem}.{}", style.extension()));
            write_heatmap(&m.scores, style, &path)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}
