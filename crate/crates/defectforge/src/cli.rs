//! The `defectforge` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use defectforge_core::annotations::{extract_patches, patch_from_window, validate_annotation};
use defectforge_core::imaging::{compute_channel_mean, normalize, to_grayscale, AugmentSpec};
use defectforge_core::metrics::{confusion, render_table, report, ZeroDivision};
use defectforge_core::nn::{argmax, desk_preset, paper_preset, parse_layer_specs, LayerSpec, OptimizerKind};
use defectforge_core::split::{balance_classes, stratified_split, SplitRatio};
use defectforge_core::synth::{generate, object_histogram, SynthSpec};
use defectforge_core::train::{train, Executor, Sample, TrainConfig};
use defectforge_core::{Annotation, BBox, ClassMap, LabeledPatch, Model, Tensor};

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, TrainingMeta};
use crate::dataset::{self, PatchSet};
use crate::error::{Error, Result};
use crate::parallel::Runner;

#[derive(Debug, Parser)]
#[command(name = "defectforge", version, about = "Defect patch classification toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic annotated defect dataset.
    Synth(SynthArgs),
    /// Check annotations against their images.
    Validate(ValidateArgs),
    /// Cut labelled patches out of annotated images.
    Extract(ExtractArgs),
    /// Train a classifier on a patch directory.
    Train(TrainArgs),
    /// Score a checkpoint on a patch directory.
    Eval(EvalArgs),
    /// Classify one image.
    Predict(PredictArgs),
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Objects per defect class.
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 192)]
    pub height: usize,
    /// Upper bound on defects drawn into one image (1 to 4).
    #[arg(long, default_value_t = 1)]
    pub max_defects: usize,
    /// Gaussian noise standard deviation in gray levels.
    #[arg(long, default_value_t = 4.0)]
    pub noise: f64,
    /// 1536x1103 images; overrides --width and --height.
    #[arg(long)]
    pub paper_scale: bool,
}

fn parse_classes(s: &str) -> std::result::Result<ClassMap, String> {
    ClassMap::new(s.split(',').map(str::trim)).map_err(|e| e.to_string())
}

#[derive(Debug, clap::Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    /// Comma-separated class labels accepted as object names.
    #[arg(long, value_parser = parse_classes, default_value = "Crack,Pinhole,Hole,Spatter")]
    pub classes: ClassMap,
}

#[derive(Debug, clap::Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 80)]
    pub height: usize,
    #[arg(long, default_value_t = 120)]
    pub width: usize,
    /// Grow each box by this fraction of its longer side before cropping.
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,
    /// Fail when an object has a label outside --classes.
    #[arg(long)]
    pub strict: bool,
    /// One patch per image from the whole frame, labelled by its first object.
    #[arg(long)]
    pub full_image: bool,
    #[arg(long, value_parser = parse_classes, default_value = "Crack,Pinhole,Hole,Spatter")]
    pub classes: ClassMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerChoice {
    Sgd,
    Adam,
}

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub patches: PathBuf,
    /// `desk`, `paper`, or a layer-spec text file.
    #[arg(long, default_value = "desk")]
    pub arch: String,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OptimizerChoice::Sgd)]
    pub optimizer: OptimizerChoice,
    /// SGD momentum.
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    /// Undersample every class to the smallest class count.
    #[arg(long)]
    pub balance: bool,
    /// Two classes: Crack against everything else.
    #[arg(long)]
    pub binary: bool,
    /// Random flips, rotation and translation on training batches.
    #[arg(long)]
    pub augment: bool,
    /// Run on the calling thread only.
    #[arg(long)]
    pub deterministic: bool,
    /// Final checkpoint; the best-validation checkpoint goes next to it as `<stem>.best.<ext>`.
    #[arg(long)]
    pub out: PathBuf,
    /// Epoch log path; defaults to `epochs.csv` beside --out.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub patches: PathBuf,
    /// Metrics CSV path; defaults to `metrics.csv` beside the checkpoint.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, clap::Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cmd: &Command) -> Result<u8> {
    match cmd {
        Command::Synth(a) => cmd_synth(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Predict(a) => cmd_predict(a),
    }
}

pub fn cmd_synth(a: &SynthArgs) -> Result<u8> {
    let mut spec = SynthSpec {
        width: a.width,
        height: a.height,
        counts: [a.per_class; 4],
        max_defects_per_image: a.max_defects,
        noise: a.noise,
        seed: a.seed,
    };
    if a.paper_scale {
        spec = spec.paper_scale();
    }
    let samples = generate(&spec).map_err(|e| Error::Usage(e.to_string()))?;
    let classes = ClassMap::default();
    dataset::write_synth_dataset(&a.out, &samples, &classes)?;
    let hist = object_histogram(&samples, &classes);
    let summary: Vec<String> = classes.labels().iter().zip(&hist).map(|(l, n)| format!("{l} {n}")).collect();
    println!("wrote {} images to {} ({})", samples.len(), a.out.display(), summary.join(", "));
    Ok(0)
}

pub fn cmd_validate(a: &ValidateArgs) -> Result<u8> {
    let files = dataset::list_files(&a.annotations, "xml")?;
    let mut findings = 0;
    for xml in &files {
        let name = xml.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let ann = match dataset::read_annotation(xml) {
            Ok(ann) => ann,
            Err(e) => {
                println!("{name}: {e}");
                findings += 1;
                continue;
            }
        };
        let Some(image_path) = dataset::find_image(&a.images, &ann, xml) else {
            println!("{name}: image {} not found", ann.filename);
            findings += 1;
            continue;
        };
        let img = match dataset::read_image(&image_path) {
            Ok(img) => img,
            Err(e) => {
                println!("{name}: {e}");
                findings += 1;
                continue;
            }
        };
        for f in validate_annotation(&ann, img.width(), img.height(), Some(&a.classes)).findings {
            println!("{name}: {f}");
            findings += 1;
        }
    }
    println!("{} files, {findings} findings", files.len());
    Ok(if findings == 0 { 0 } else { 1 })
}

fn full_image_patch(img: &defectforge_core::RasterImage, ann: &Annotation, class_index: usize, h: usize, w: usize) -> Result<LabeledPatch> {
    let gray = to_grayscale(img);
    let (iw, ih) = (gray.width(), gray.height());
    let bbox = BBox::new(1, 1, iw as i64, ih as i64).map_err(|e| Error::Data(format!("{}: {e}", ann.filename)))?;
    Ok(LabeledPatch { pixels: patch_from_window(&gray, (0, 0, iw, ih), h, w), class_index, source: ann.filename.clone(), bbox })
}

pub fn cmd_extract(a: &ExtractArgs) -> Result<u8> {
    if a.height == 0 || a.width == 0 {
        return Err(Error::Usage("--height and --width must be at least 1".into()));
    }
    if !a.margin.is_finite() || a.margin < 0.0 {
        return Err(Error::Usage(format!("--margin must be finite and non-negative, got {}", a.margin)));
    }
    let files = dataset::list_files(&a.annotations, "xml")?;
    let mut patches = Vec::new();
    let mut skipped = 0;
    for xml in &files {
        let mut ann = dataset::read_annotation(xml)?;
        let image_path = dataset::find_image(&a.images, &ann, xml)
            .ok_or_else(|| Error::Data(format!("{}: image {} not found", xml.display(), ann.filename)))?;
        let img = dataset::read_image(&image_path)?;
        let before = ann.objects.len();
        ann.objects.retain(|o| {
            let known = a.classes.index_of(&o.label).is_some();
            if !known {
                eprintln!("warning: {}: skipping object with unknown label {:?}", xml.display(), o.label);
            }
            known
        });
        skipped += before - ann.objects.len();
        if a.full_image {
            if let Some(first) = ann.objects.first() {
                let class_index = a.classes.index_of(&first.label).expect("filtered above");
                patches.push(full_image_patch(&img, &ann, class_index, a.height, a.width)?);
            }
        } else {
            let cut = extract_patches(&img, &ann, &a.classes, a.height, a.width, a.margin)
                .map_err(|e| Error::Data(format!("{}: {e}", xml.display())))?;
            patches.extend(cut);
        }
    }
    dataset::write_patch_set(&a.out, &patches, &a.classes)?;
    println!("wrote {} patches from {} annotation files to {}", patches.len(), files.len(), a.out.display());
    if skipped > 0 {
        eprintln!("warning: {skipped} objects skipped for unknown labels");
        if a.strict {
            return Ok(1);
        }
    }
    Ok(0)
}

pub fn resolve_arch(arch: &str, classes: usize) -> Result<Vec<LayerSpec>> {
    match arch {
        "desk" => Ok(desk_preset(classes)),
        "paper" => Ok(paper_preset(classes)),
        path => {
            let path = Path::new(path);
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_layer_specs(&text).map_err(|e| Error::decode(path, e))
        }
    }
}

/// Remaps 4-class labels onto Crack (0) versus NonCrack (1).
pub fn binary_labels(labels: &[usize], classes: &ClassMap) -> Result<Vec<usize>> {
    let crack = classes
        .index_of("Crack")
        .ok_or_else(|| Error::Data("--binary needs a \"Crack\" class in the patch set".into()))?;
    Ok(labels.iter().map(|&l| usize::from(l != crack)).collect())
}

/// `model.cnck` becomes `model.best.cnck`.
pub fn best_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.best.{}", ext.to_string_lossy()),
        None => format!("{stem}.best"),
    };
    out.with_file_name(name)
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().map(|p| p.join(name)).unwrap_or_else(|| PathBuf::from(name))
}

pub fn cmd_train(a: &TrainArgs) -> Result<u8> {
    if a.epochs == 0 {
        return Err(Error::Usage("--epochs must be at least 1".into()));
    }
    if a.batch == 0 {
        return Err(Error::Usage("--batch must be at least 1".into()));
    }
    if !a.lr.is_finite() || a.lr < 0.0 {
        return Err(Error::Usage(format!("--lr must be finite and non-negative, got {}", a.lr)));
    }
    if !(0.0..1.0).contains(&a.momentum) {
        return Err(Error::Usage(format!("--momentum must be in [0, 1), got {}", a.momentum)));
    }
    let runner = Runner::from_env(a.deterministic)?;
    let log = a.log.clone().unwrap_or_else(|| sibling(&a.out, "epochs.csv"));
    for p in [&a.out, &log] {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            dataset::create_dir(dir)?;
        }
    }

    let set = dataset::read_patch_set(&a.patches)?;
    if set.records.is_empty() {
        return Err(Error::Data(format!("{}: no patches", a.patches.display())));
    }
    let (classes, labels) = if a.binary {
        (ClassMap::binary(), binary_labels(&set.labels(), &set.classes)?)
    } else {
        (set.classes.clone(), set.labels())
    };
    let k = classes.len();
    let specs = resolve_arch(&a.arch, k)?;

    let chosen: Vec<usize> = if a.balance {
        balance_classes(&labels, k, a.seed).map_err(|e| Error::Data(e.to_string()))?
    } else {
        (0..labels.len()).collect()
    };
    let chosen_labels: Vec<usize> = chosen.iter().map(|&i| labels[i]).collect();
    let plan = stratified_split(&chosen_labels, k, SplitRatio::default(), a.seed).map_err(|e| Error::Data(e.to_string()))?;
    let pick = |idx: &[usize]| -> Vec<usize> { idx.iter().map(|&j| chosen[j]).collect() };
    let (train_idx, val_idx) = (pick(&plan.train), pick(&plan.val));

    let train_pixels: Vec<Tensor> = train_idx.iter().map(|&i| set.pixels[i].clone()).collect();
    let mean = compute_channel_mean(&train_pixels).map_err(|e| Error::Data(e.to_string()))?;
    let samples = |idx: &[usize]| -> Result<Vec<Sample>> {
        idx.iter()
            .map(|&i| {
                let input = normalize(&set.pixels[i], &mean).map_err(|e| Error::Data(e.to_string()))?;
                Ok(Sample { input, label: labels[i] })
            })
            .collect()
    };
    let (train_set, val_set) = (samples(&train_idx)?, samples(&val_idx)?);

    let input_shape = set.pixels[0].shape().to_vec();
    let model = Model::new(&specs, &input_shape, a.seed).map_err(|e| Error::Data(format!("--arch {}: {e}", a.arch)))?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch,
        optimizer: match a.optimizer {
            OptimizerChoice::Sgd => OptimizerKind::sgd(a.momentum),
            OptimizerChoice::Adam => OptimizerKind::adam(),
        },
        learning_rate: a.lr,
        seed: a.seed,
        augment: a.augment.then(|| AugmentSpec { seed: a.seed, ..AugmentSpec::default() }),
    };
    eprintln!(
        "training {} parameters on {} patches ({} train, {} val, {} classes, {} worker threads)",
        model.param_count(),
        set.records.len(),
        train_set.len(),
        val_set.len(),
        k,
        runner.threads()
    );
    let outcome = train(model, &train_set, &val_set, &cfg, &runner, |l| {
        eprintln!(
            "epoch {:>3}  train loss {:.6} acc {:.4}  val loss {:.6} acc {:.4}",
            l.epoch, l.train_loss, l.train_acc, l.val_loss, l.val_acc
        );
    })
    .map_err(|e| Error::Data(e.to_string()))?;

    let ckpt = |model: Model, epoch: usize| Checkpoint { model, classes: classes.clone(), mean: mean.clone(), meta: TrainingMeta { epoch, seed: a.seed } };
    save_checkpoint(&ckpt(outcome.model, a.epochs), &a.out)?;
    let best = best_path(&a.out);
    save_checkpoint(&ckpt(outcome.best, outcome.best_epoch), &best)?;
    dataset::write_file(&log, dataset::epochs_csv(&outcome.logs))?;
    let last = outcome.logs.last().expect("epochs >= 1");
    println!(
        "final train acc {:.4} val acc {:.4}; best val epoch {}; wrote {}, {}, {}",
        last.train_acc,
        last.val_acc,
        outcome.best_epoch,
        a.out.display(),
        best.display(),
        log.display()
    );
    Ok(0)
}

/// Class indices of `set` expressed in `target`'s label space. Labels
/// missing from a two-class Crack/NonCrack map fall into NonCrack.
pub fn map_labels(set: &PatchSet, target: &ClassMap) -> Result<Vec<usize>> {
    let binary = *target == ClassMap::binary();
    set.records
        .iter()
        .map(|r| {
            let label = set.classes.label(r.class_index).expect("checked on read");
            match target.index_of(label) {
                Some(i) => Ok(i),
                None if binary => Ok(1),
                None => Err(Error::Data(format!("{}: label {label:?} unknown to the checkpoint", r.file))),
            }
        })
        .collect()
}

pub fn cmd_eval(a: &EvalArgs) -> Result<u8> {
    let runner = Runner::from_env(a.deterministic)?;
    let ckpt = load_checkpoint(&a.ckpt)?;
    let set = dataset::read_patch_set(&a.patches)?;
    let truth = map_labels(&set, &ckpt.classes)?;
    let inputs: Vec<Tensor> = set
        .pixels
        .iter()
        .map(|p| normalize(p, &ckpt.mean).map_err(|e| Error::Data(e.to_string())))
        .collect::<Result<_>>()?;
    let preds = runner.map(inputs.len(), |i| ckpt.model.predict(&inputs[i]));
    let preds: Vec<usize> = preds.into_iter().collect::<std::result::Result<_, _>>().map_err(|e| Error::Data(format!("patch shape: {e}")))?;
    let cm = confusion(&truth, &preds, ckpt.classes.len()).map_err(|e| Error::Data(e.to_string()))?;
    let r = report(&cm).map_err(|e| Error::Data(e.to_string()))?;
    print!("{}", render_table(&r, &ckpt.classes));
    for w in &r.warnings {
        let (what, why, c) = match w {
            ZeroDivision::Precision { class } => ("precision", "never predicted", *class),
            ZeroDivision::Recall { class } => ("recall", "no true samples", *class),
        };
        eprintln!("warning: {what} of {} is undefined ({why}); reported as 0", ckpt.classes.label(c).unwrap_or("?"));
    }
    let csv = a.csv.clone().unwrap_or_else(|| sibling(&a.ckpt, "metrics.csv"));
    dataset::write_metrics_csv(&csv, &r, &ckpt.classes)?;
    eprintln!("wrote {}", csv.display());
    Ok(0)
}

pub fn cmd_predict(a: &PredictArgs) -> Result<u8> {
    let ckpt = load_checkpoint(&a.ckpt)?;
    let img = dataset::read_image(&a.image)?;
    let shape = ckpt.model.input_shape();
    if shape.len() != 3 || shape[2] != 1 {
        return Err(Error::Data(format!("checkpoint expects input {shape:?}; only single-channel models are supported")));
    }
    let gray = to_grayscale(&img);
    let pixels = patch_from_window(&gray, (0, 0, gray.width(), gray.height()), shape[0], shape[1]);
    let input = normalize(&pixels, &ckpt.mean).map_err(|e| Error::Data(e.to_string()))?;
    let probs = ckpt.model.forward(&input).map_err(|e| Error::Data(e.to_string()))?;
    let best = argmax(probs.data());
    println!("{} {:.6}", ckpt.classes.label(best).unwrap_or("?"), probs.data()[best]);
    for (label, p) in ckpt.classes.labels().iter().zip(probs.data()) {
        println!("  {label} {p:.6}");
    }
    Ok(0)
}
