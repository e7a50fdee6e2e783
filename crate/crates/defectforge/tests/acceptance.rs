//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use defectforge::dataset::{parse_epochs_csv, read_patch_set};
use defectforge::{load_checkpoint, parse_voc_xml, save_checkpoint, write_voc_xml, Checkpoint, TrainingMeta};
use defectforge_core::imaging::{decode_pnm, encode_pnm};
use defectforge_core::metrics::{render_table, report, ConfusionMatrix};
use defectforge_core::nn::{
    conv2d_backward, conv2d_forward, cross_entropy, dense_backward, dense_forward, desk_preset, maxpool_backward, maxpool_forward,
    relu_backward, relu_forward, softmax, softmax_xent_backward, LayerSpec, Padding,
};
use defectforge_core::rng::rng_from;
use defectforge_core::split::{balance_classes, stratified_split, SplitRatio};
use defectforge_core::synth::{generate, SynthSpec};
use defectforge_core::train::EpochLog;
use defectforge_core::{ClassMap, Model, RasterImage, Tensor};
use rand::seq::SliceRandom;
use rand::Rng;

const EPOCHS: usize = 20;
const EPS: f64 = 1e-6;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn random_tensor(shape: &[usize], rng: &mut impl Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// `||a - n|| / max(||a||, ||n||)`, 0 when both vanish.
fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut analytic.iter().zip(numeric).map(|(a, n)| a - n));
    let scale = norm(&mut analytic.iter().copied()).max(norm(&mut numeric.iter().copied()));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Central differences of `f` with respect to every element of `x`.
fn numeric_grad(x: &Tensor, f: impl Fn(&Tensor) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.clone();
            p[i] += EPS;
            let mut m = x.clone();
            m[i] -= EPS;
            (f(&p) - f(&m)) / (2.0 * EPS)
        })
        .collect()
}

struct GradStats {
    cases: usize,
    worst: f64,
}

impl GradStats {
    fn record(&mut self, analytic: &Tensor, numeric: &[f64]) {
        self.cases += 1;
        self.worst = self.worst.max(rel_err(analytic.data(), numeric));
    }
}

fn gradient_checks() -> Verdict {
    let mut per_layer = Vec::new();
    let seeds = 0..12u64;

    let mut s = GradStats { cases: 0, worst: 0.0 };
    for seed in seeds.clone() {
        let mut rng = rng_from(seed, &[1]);
        let (h, w, c, f) = (rng.random_range(3..8), rng.random_range(3..8), rng.random_range(1..4), rng.random_range(1..4));
        let (kh, kw, stride) = (rng.random_range(1..4), rng.random_range(1..4), rng.random_range(1..3));
        let padding = if rng.random_bool(0.5) { Padding::Same } else { Padding::Valid };
        let x = random_tensor(&[h, w, c], &mut rng);
        let k = random_tensor(&[kh, kw, c, f], &mut rng);
        let b = random_tensor(&[f], &mut rng);
        let y = conv2d_forward(&x, &k, &b, stride, padding).unwrap();
        let r = random_tensor(y.shape(), &mut rng);
        let g = conv2d_backward(&r, &x, &k, stride, padding).unwrap();
        s.record(&g.input, &numeric_grad(&x, |x| dot(&r, &conv2d_forward(x, &k, &b, stride, padding).unwrap())));
        s.record(&g.kernels, &numeric_grad(&k, |k| dot(&r, &conv2d_forward(&x, k, &b, stride, padding).unwrap())));
        s.record(&g.bias, &numeric_grad(&b, |b| dot(&r, &conv2d_forward(&x, &k, b, stride, padding).unwrap())));
    }
    per_layer.push(("conv", s));

    let mut s = GradStats { cases: 0, worst: 0.0 };
    for seed in seeds.clone() {
        let mut rng = rng_from(seed, &[2]);
        let n = rng.random_range(4..40);
        // Keep inputs away from the kink at 0.
        let x = Tensor::from_vec(&[n], (0..n).map(|_| rng.random_range(0.05..1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()).unwrap();
        let r = random_tensor(&[n], &mut rng);
        let g = relu_backward(&r, &x).unwrap();
        s.record(&g, &numeric_grad(&x, |x| dot(&r, &relu_forward(x))));
    }
    per_layer.push(("relu", s));

    let mut s = GradStats { cases: 0, worst: 0.0 };
    for seed in seeds.clone() {
        let mut rng = rng_from(seed, &[3]);
        let (h, w, c) = (rng.random_range(2..9), rng.random_range(2..9), rng.random_range(1..3));
        let (ph, pw, stride) = (rng.random_range(1..=h.min(3)), rng.random_range(1..=w.min(3)), rng.random_range(1..3));
        // Distinct values spaced far beyond EPS so no perturbation flips a max.
        let mut vals: Vec<f64> = (0..h * w * c).map(|i| i as f64 * 0.01).collect();
        vals.shuffle(&mut rng);
        let x = Tensor::from_vec(&[h, w, c], vals).unwrap();
        let (y, arg) = maxpool_forward(&x, ph, pw, stride).unwrap();
        let r = random_tensor(y.shape(), &mut rng);
        let g = maxpool_backward(&r, &arg, x.shape()).unwrap();
        s.record(&g, &numeric_grad(&x, |x| dot(&r, &maxpool_forward(x, ph, pw, stride).unwrap().0)));
    }
    per_layer.push(("maxpool", s));

    let mut s = GradStats { cases: 0, worst: 0.0 };
    for seed in seeds.clone() {
        let mut rng = rng_from(seed, &[4]);
        let (n, m) = (rng.random_range(1..20), rng.random_range(1..8));
        let x = random_tensor(&[n], &mut rng);
        let wts = random_tensor(&[n, m], &mut rng);
        let b = random_tensor(&[m], &mut rng);
        let r = random_tensor(&[m], &mut rng);
        let g = dense_backward(&r, &x, &wts).unwrap();
        s.record(&g.input, &numeric_grad(&x, |x| dot(&r, &dense_forward(x, &wts, &b).unwrap())));
        s.record(&g.weights, &numeric_grad(&wts, |w| dot(&r, &dense_forward(&x, w, &b).unwrap())));
        s.record(&g.bias, &numeric_grad(&b, |b| dot(&r, &dense_forward(&x, &wts, b).unwrap())));
    }
    per_layer.push(("dense", s));

    let mut s = GradStats { cases: 0, worst: 0.0 };
    for seed in seeds.clone() {
        let mut rng = rng_from(seed, &[5]);
        let k = rng.random_range(2..8);
        let z = random_tensor(&[k], &mut rng).map(|v| 3.0 * v);
        let mut y = Tensor::zeros(&[k]);
        y[rng.random_range(0..k)] = 1.0;
        let g = softmax_xent_backward(&y, &z).unwrap();
        s.record(&g, &numeric_grad(&z, |z| cross_entropy(&y, &softmax(z).unwrap()).unwrap()));
    }
    per_layer.push(("softmax+xent", s));

    // conv -> maxpool -> dense, with relu and softmax in between.
    let mut s = GradStats { cases: 0, worst: 0.0 };
    for seed in seeds {
        let mut rng = rng_from(seed, &[6]);
        let specs = vec![
            LayerSpec::Conv { filters: rng.random_range(2..4), kernel_h: 3, kernel_w: 3, stride: 1, padding: Padding::Same },
            LayerSpec::Relu,
            LayerSpec::MaxPool { pool_h: 2, pool_w: 2, stride: 2 },
            LayerSpec::Flatten,
            LayerSpec::Dense { units: 3 },
            LayerSpec::Softmax,
        ];
        let shape = [rng.random_range(4..8), rng.random_range(4..8), rng.random_range(1..3)];
        let model = Model::new(&specs, &shape, seed).unwrap();
        let x = random_tensor(&shape, &mut rng);
        let label = rng.random_range(0..3);
        let mut grads = model.zero_grads();
        model.accumulate_gradients(&x, label, &mut grads).unwrap();
        for (pi, g) in grads.iter().enumerate() {
            let numeric = numeric_grad(&model.params()[pi], |p| {
                let mut m = model.clone();
                m.params_mut()[pi] = p.clone();
                m.evaluate(&x, label).unwrap().loss
            });
            s.record(g, &numeric);
        }
    }
    per_layer.push(("composition", s));

    let pass = per_layer.iter().all(|(_, s)| s.worst < 1e-5 && s.cases >= 10);
    let detail = per_layer.iter().map(|(n, s)| format!("{n} {:.1e}/{}", s.worst, s.cases)).collect::<Vec<_>>().join(", ");
    verdict(pass, format!("worst rel err/cases: {detail}"))
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_defectforge"));
    cmd.env("DEFECTFORGE_THREADS", "0");
    cmd
}

fn run(args: &[&str]) -> Result<String, String> {
    let out = bin().args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!("`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct DeskRun {
    patches: PathBuf,
    logs: Vec<EpochLog>,
    elapsed: Duration,
    eval_accuracy: f64,
    predict_ok: bool,
}

fn desk_run(root: &Path) -> Result<DeskRun, String> {
    let t = Instant::now();
    let data = root.join("data");
    let patches = root.join("patches");
    run(&["synth", "--per-class", "100", "--seed", "42", "--out", s(&data)])?;
    run(&["extract", "--images", s(&data.join("images")), "--annotations", s(&data.join("annotations")), "--out", s(&patches)])?;
    let ckpt = root.join("run/model.cnck");
    let epochs = EPOCHS.to_string();
    run(&["train", "--patches", s(&patches), "--arch", "desk", "--epochs", &epochs, "--seed", "42", "--out", s(&ckpt)])?;
    let elapsed = t.elapsed();
    let logs = parse_epochs_csv(&std::fs::read_to_string(root.join("run/epochs.csv")).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;

    let metrics = root.join("run/metrics.csv");
    run(&["eval", "--ckpt", s(&ckpt), "--patches", s(&patches), "--csv", s(&metrics)])?;
    let csv = std::fs::read_to_string(&metrics).map_err(|e| e.to_string())?;
    let eval_accuracy = csv
        .lines()
        .find_map(|l| l.strip_prefix("accuracy,,,"))
        .and_then(|rest| rest.split(',').next())
        .and_then(|v| v.parse().ok())
        .ok_or("no accuracy row in metrics.csv")?;

    let set = read_patch_set(&patches).map_err(|e| e.to_string())?;
    let first = &set.records[0];
    let truth = set.classes.label(first.class_index).unwrap().to_string();
    let out = run(&["predict", "--ckpt", s(&ckpt), "--image", s(&patches.join(&first.file))])?;
    let mut head = out.lines().next().unwrap_or("").split_whitespace();
    let predict_ok = head.next() == Some(truth.as_str()) && head.next().and_then(|p| p.parse::<f64>().ok()).is_some_and(|p| p > 0.5);
    Ok(DeskRun { patches, logs, elapsed, eval_accuracy, predict_ok })
}

fn desk_run_accuracy(r: &Result<DeskRun, String>) -> Verdict {
    let r = match r {
        Ok(r) => r,
        Err(e) => return verdict(false, e.clone()),
    };
    let last = r.logs.last().unwrap();
    let pass = r.logs.len() <= 50
        && last.train_acc >= 0.99
        && last.val_acc >= 0.90
        && r.elapsed < Duration::from_secs(600)
        && r.eval_accuracy >= 0.99
        && r.predict_ok;
    verdict(
        pass,
        format!(
            "{} epochs: train acc {:.4}, val acc {:.4}, eval acc {:.4}, predict {}; synth+extract+train {:.0} s single-threaded",
            r.logs.len(),
            last.train_acc,
            last.val_acc,
            r.eval_accuracy,
            if r.predict_ok { "correct" } else { "wrong" },
            r.elapsed.as_secs_f64()
        ),
    )
}

fn loss_floor(r: &Result<DeskRun, String>) -> Verdict {
    let r = match r {
        Ok(r) => r,
        Err(e) => return verdict(false, e.clone()),
    };
    let loss: Vec<f64> = r.logs.iter().map(|l| l.train_loss).collect();
    let last = *loss.last().unwrap();
    let Some(floor) = loss.iter().position(|&l| l < 0.05) else {
        return verdict(false, format!("loss never fell below 0.05 (final {last:.6})"));
    };
    // Every step up to the first sub-0.05 epoch must go down, so any
    // 10-epoch window in that stretch is strictly decreasing.
    let monotone = loss[..=floor].windows(2).all(|w| w[1] < w[0]);
    let windows = (0..floor).all(|e| e + 10 >= loss.len() || loss[e + 10] < loss[e]);
    let pass = last < 0.05 && monotone && windows;
    let shown: Vec<String> = loss[..=floor].iter().map(|l| format!("{l:.4}")).collect();
    verdict(pass, format!("final loss {last:.6}; below 0.05 from epoch {}; losses until then {}", floor + 1, shown.join(" > ")))
}

/// Definition-level metrics from the list of (truth, prediction) pairs the
/// matrix stands for.
struct Oracle {
    precision: Vec<f64>,
    recall: Vec<f64>,
    f1: Vec<f64>,
    accuracy: f64,
    micro: [f64; 3],
    weighted: [f64; 3],
}

fn oracle(counts: &[u64], k: usize) -> Oracle {
    let mut pairs = Vec::new();
    for t in 0..k {
        for p in 0..k {
            for _ in 0..counts[t * k + p] {
                pairs.push((t, p));
            }
        }
    }
    let n = pairs.len() as f64;
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let f1 = |p: f64, r: f64| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    let (mut precision, mut recall, mut f1s, mut support) = (vec![], vec![], vec![], vec![]);
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    for c in 0..k {
        let tp = pairs.iter().filter(|&&(t, p)| t == c && p == c).count();
        let fp = pairs.iter().filter(|&&(t, p)| t != c && p == c).count();
        let fneg = pairs.iter().filter(|&&(t, p)| t == c && p != c).count();
        let (p, r) = (ratio(tp, tp + fp), ratio(tp, tp + fneg));
        precision.push(p);
        recall.push(r);
        f1s.push(f1(p, r));
        support.push((tp + fneg) as f64);
        tp_all += tp;
        fp_all += fp;
        fn_all += fneg;
    }
    let accuracy = pairs.iter().filter(|&&(t, p)| t == p).count() as f64 / n;
    let (mp, mr) = (ratio(tp_all, tp_all + fp_all), ratio(tp_all, tp_all + fn_all));
    let wavg = |v: &[f64]| v.iter().zip(&support).map(|(m, s)| m * s).sum::<f64>() / n;
    Oracle {
        accuracy,
        micro: [mp, mr, f1(mp, mr)],
        weighted: [wavg(&precision), wavg(&recall), wavg(&f1s)],
        precision,
        recall,
        f1: f1s,
    }
}

fn metrics_oracle() -> Verdict {
    let mut rng = rng_from(2024, &[]);
    let (mut worst, mut identity_failures, mut checked) = (0.0f64, 0, 0);
    while checked < 1000 {
        let k = rng.random_range(1..=6);
        let sparse = rng.random_bool(0.3);
        let counts: Vec<u64> = (0..k * k).map(|_| if sparse && rng.random_bool(0.5) { 0 } else { rng.random_range(0..25) }).collect();
        if counts.iter().sum::<u64>() == 0 {
            continue;
        }
        checked += 1;
        let r = report(&ConfusionMatrix::from_counts(k, counts.clone()).unwrap()).unwrap();
        let o = oracle(&counts, k);
        let mut diff = (r.accuracy - o.accuracy).abs();
        for c in 0..k {
            let m = &r.per_class[c];
            diff = diff.max((m.precision - o.precision[c]).abs()).max((m.recall - o.recall[c]).abs()).max((m.f1 - o.f1[c]).abs());
        }
        for (got, want) in [(r.micro, o.micro), (r.weighted, o.weighted)] {
            diff = diff.max((got.precision - want[0]).abs()).max((got.recall - want[1]).abs()).max((got.f1 - want[2]).abs());
        }
        worst = worst.max(diff);
        let exact = r.weighted.recall == r.accuracy && r.micro.precision == r.accuracy && r.micro.recall == r.accuracy && r.micro.f1 == r.accuracy;
        identity_failures += usize::from(!exact);
    }
    verdict(
        worst <= 1e-12 && identity_failures == 0,
        format!("{checked} matrices, max |report - oracle| {worst:.1e}, exact identity failures {identity_failures}"),
    )
}

fn crack_row() -> Verdict {
    // Crack is class 0: TP 49, one Crack predicted as Pinhole, two others predicted as Crack.
    #[rustfmt::skip]
    let counts = vec![
        49, 1, 0, 0,
        1, 120, 3, 0,
        1, 2, 250, 5,
        0, 0, 4, 314,
    ];
    let r = report(&ConfusionMatrix::from_counts(4, counts).unwrap()).unwrap();
    let table = render_table(&r, &ClassMap::default());
    let row = table.lines().find(|l| l.starts_with("Crack")).unwrap_or("").to_string();
    let fields: Vec<&str> = row.split_whitespace().collect();
    let pass = fields.ends_with(&["0.96", "0.98", "0.97", "50"]);
    verdict(pass, format!("rendered row: {}", fields.join(" ")))
}

fn unit_values() -> Verdict {
    let p = softmax(&Tensor::from_vec(&[3], vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
    let want = [0.09003057, 0.24472847, 0.66524096];
    let sm_err = p.data().iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let mut y = Tensor::zeros(&[4]);
    y[2] = 1.0;
    let ce = cross_entropy(&y, &Tensor::filled(&[4], 0.25)).unwrap();
    let ce_err = (ce - 4f64.ln()).abs();

    let mut rng = rng_from(6, &[]);
    let mut shift_err = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..12);
        let z = Tensor::from_vec(&[n], (0..n).map(|_| rng.random_range(-20.0..20.0)).collect()).unwrap();
        let c = rng.random_range(-200.0..200.0);
        let (a, b) = (softmax(&z).unwrap(), softmax(&z.map(|v| v + c)).unwrap());
        shift_err = shift_err.max(a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    }
    verdict(
        sm_err <= 1e-8 && ce_err <= 1e-12 && shift_err <= 1e-12,
        format!("softmax err {sm_err:.1e}, ln4 err {ce_err:.1e}, shift err {shift_err:.1e} over 100 vectors"),
    )
}

fn round_trips(root: &Path) -> Verdict {
    let t = Instant::now();
    let samples = generate(&SynthSpec { max_defects_per_image: 3, ..SynthSpec::per_class(100, 77) }).unwrap();
    let annotations: Vec<_> = samples.iter().map(|s| &s.annotation).take(100).collect();
    let voc_ok = annotations.len() == 100 && annotations.iter().all(|a| parse_voc_xml(&write_voc_xml(a)).as_ref() == Ok(*a));
    let voc_time = t.elapsed();

    let t = Instant::now();
    let mut rng = rng_from(7, &[]);
    let color = RasterImage::new(33, 17, 3, (0..33 * 17 * 3).map(|_| rng.random()).collect()).unwrap();
    let images = samples.iter().take(100).map(|s| &s.image).chain(std::iter::once(&color));
    let pnm_ok = images.into_iter().all(|img| {
        let bytes = encode_pnm(img);
        decode_pnm(&bytes).is_ok_and(|back| &back == img && encode_pnm(&back) == bytes)
    });
    let pnm_time = t.elapsed();

    let t = Instant::now();
    let model = Model::new(&desk_preset(4), &[80, 120, 1], 11).unwrap();
    let ckpt = Checkpoint { model, classes: ClassMap::default(), mean: vec![0.47], meta: TrainingMeta { epoch: 3, seed: 11 } };
    let path = root.join("roundtrip.cnck");
    save_checkpoint(&ckpt, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    let ckpt_ok = (0..10).all(|i| {
        let x = random_tensor(&[80, 120, 1], &mut rng_from(i, &[7]));
        let (a, b) = (ckpt.model.forward(&x).unwrap(), back.model.forward(&x).unwrap());
        a.data().iter().zip(b.data()).all(|(p, q)| p.to_bits() == q.to_bits())
    });
    let ckpt_time = t.elapsed();

    let limit = Duration::from_secs(10);
    verdict(
        voc_ok && pnm_ok && ckpt_ok && voc_time < limit && pnm_time < limit && ckpt_time < limit,
        format!(
            "VOC {} annotations {} ({:.2} s), PNM 101 images {} ({:.2} s), checkpoint forward {} ({:.2} s)",
            annotations.len(),
            if voc_ok { "identical" } else { "DIFFER" },
            voc_time.as_secs_f64(),
            if pnm_ok { "byte-exact" } else { "DIFFER" },
            pnm_time.as_secs_f64(),
            if ckpt_ok { "bit-identical" } else { "DIFFER" },
            ckpt_time.as_secs_f64()
        ),
    )
}

fn determinism(root: &Path, desk: &Result<DeskRun, String>) -> Verdict {
    let patches = match desk {
        Ok(r) => r.patches.clone(),
        Err(e) => return verdict(false, format!("no patches: {e}")),
    };
    let mut files = Vec::new();
    for tag in ["a", "b"] {
        let ckpt = root.join(format!("det-{tag}/model.cnck"));
        if let Err(e) = run(&["train", "--patches", s(&patches), "--epochs", "3", "--deterministic", "--seed", "7", "--out", s(&ckpt)]) {
            return verdict(false, e);
        }
        let read = |p: PathBuf| std::fs::read(p).unwrap_or_default();
        files.push((read(ckpt.with_file_name("epochs.csv")), read(ckpt.clone()), read(ckpt.with_file_name("model.best.cnck"))));
    }
    let (a, b) = (&files[0], &files[1]);
    verdict(
        a == b && !a.0.is_empty() && !a.1.is_empty(),
        format!(
            "epochs.csv {}, final checkpoint {} ({} bytes), best checkpoint {}",
            if a.0 == b.0 { "identical" } else { "DIFFER" },
            if a.1 == b.1 { "identical" } else { "DIFFER" },
            a.1.len(),
            if a.2 == b.2 { "identical" } else { "DIFFER" }
        ),
    )
}

fn split_and_balance() -> Verdict {
    let labels: Vec<usize> = (0..4).flat_map(|c| std::iter::repeat_n(c, 10)).collect();
    let plan = stratified_split(&labels, 4, SplitRatio::default(), 1).unwrap();
    let split: Vec<(usize, usize)> = (0..4)
        .map(|c| (plan.train.iter().filter(|&&i| labels[i] == c).count(), plan.val.iter().filter(|&&i| labels[i] == c).count()))
        .collect();
    let supports = [50, 124, 258, 318];
    let labels: Vec<usize> = supports.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
    let picked = balance_classes(&labels, 4, 1).unwrap();
    let hist: Vec<usize> = (0..4).map(|c| picked.iter().filter(|&&i| labels[i] == c).count()).collect();
    verdict(
        split.iter().all(|&s| s == (8, 2)) && hist == [50; 4] && picked.len() == 200,
        format!("split train/val per class {split:?}; balanced histogram {hist:?} ({} total)", picked.len()),
    )
}

fn main() {
    let root = tempfile::tempdir().expect("temp dir");
    let mut failures = 0;
    let mut report_line = |n: usize, name: &str, t: Instant, v: Verdict| {
        let status = if v.pass { "PASS" } else { "FAIL" };
        failures += usize::from(!v.pass);
        println!("criterion {n} ({name}): {status}: {} [{:.1} s]", v.detail, t.elapsed().as_secs_f64());
    };

    let t = Instant::now();
    report_line(1, "gradient correctness", t, gradient_checks());
    let t = Instant::now();
    let desk = desk_run(root.path());
    report_line(2, "end-to-end desk run", t, desk_run_accuracy(&desk));
    let t = Instant::now();
    report_line(3, "loss floor", t, loss_floor(&desk));
    let t = Instant::now();
    report_line(4, "metrics oracle", t, metrics_oracle());
    let t = Instant::now();
    report_line(5, "Crack row rendering", t, crack_row());
    let t = Instant::now();
    report_line(6, "unit values", t, unit_values());
    let t = Instant::now();
    report_line(7, "format round-trips", t, round_trips(root.path()));
    let t = Instant::now();
    report_line(8, "determinism", t, determinism(root.path(), &desk));
    let t = Instant::now();
    report_line(9, "split and balance arithmetic", t, split_and_balance());

    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
