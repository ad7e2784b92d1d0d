use std::fs;
use std::io::Write;
use std::path::Path;

use oglasses_core::classifiers::entropy::entropy_rate_of;
use oglasses_core::classifiers::report::format_envelopes;
use oglasses_core::classifiers::{
    evaluate, fit_entropy_range, format_curve, format_report, kfold_cv, train as train_net,
    Classifier, CvReport, FoldResult, LearningCurve,
};
use oglasses_core::dataset::{build_corpus, read_dataset, write_dataset, CorpusManifest, Dataset, DatasetKind};
use oglasses_core::nn::{load_model, save_model};
use oglasses_core::visualize::{
    render_bitimage, render_classification, render_grayscale, render_structural_entropy, scan as scan_file,
    write_image, ImageFormat,
};
use oglasses_core::{EntropyRange, Error, Label, Method, Result, TrainConfig};

use crate::{BuildArgs, EvalArgs, ScanArgs, TrainArgs, TrainOpts};

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(Error::at_path(path))
}

fn stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn config(opts: &TrainOpts) -> Result<TrainConfig> {
    let cfg = TrainConfig {
        learning_rate: opts.learning_rate,
        batch_size: opts.batch_size,
        epochs: opts.epochs,
        seed: opts.seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn expected_kind(method: Method) -> DatasetKind {
    match method {
        Method::Cnn => DatasetKind::Code,
        Method::Entropy | Method::Mlp => DatasetKind::Block,
    }
}

fn load_dataset(path: &Path, method: Method) -> Result<Dataset> {
    let ds = read_dataset(path)?;
    let want = expected_kind(method);
    if ds.kind != want {
        return Err(Error::Dataset(format!(
            "{} holds a {:?} dataset but {method} needs {:?} samples",
            path.display(),
            ds.kind,
            want
        )));
    }
    let (p, o) = ds.label_counts();
    log::info!("{}: {} samples ({p} Program, {o} Others)", path.display(), ds.samples.len());
    Ok(ds)
}

/// An OGNN model file, or a text file holding `low--high`.
fn load_classifier(path: &Path) -> Result<Classifier> {
    let bytes = fs::read(path).map_err(Error::at_path(path))?;
    if bytes.starts_with(b"OGNN") {
        return Classifier::from_network(load_model(path)?);
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::Model(format!("{} is neither a model nor a range file", path.display())))?;
    Ok(Classifier::Entropy(text.parse()?))
}

pub fn build_dataset(a: &BuildArgs, parallel: bool) -> Result<()> {
    let manifest = CorpusManifest::load(&a.manifest)?;
    let corpus = build_corpus(&manifest, a.seed, parallel);
    for (path, why) in &corpus.failures {
        eprintln!("oglasses: skipped {}: {why}", path.display());
    }
    write_dataset(&Dataset::new(DatasetKind::Block, a.seed, corpus.block_samples()), &a.block_out)?;
    write_dataset(&Dataset::new(DatasetKind::Code, a.seed, corpus.code_samples()), &a.code_out)?;
    stdout(&corpus.summary.to_string())
}

fn mean_curve(cv: &CvReport) -> LearningCurve {
    LearningCurve {
        train: cv.train_envelope().mean,
        test: cv.test_envelope().mean,
    }
}

fn run_cv(ds: &Dataset, k: usize, method: Method, cfg: &TrainConfig, parallel: bool) -> Result<CvReport> {
    let cv = kfold_cv(&ds.samples, k, method, cfg, parallel)?;
    for (i, f) in cv.folds.iter().enumerate() {
        match f.range {
            Some(r) => log::info!("fold{i}: range {r} F={:.4}", f.metrics.f_measure),
            None => log::info!("fold{i}: F={:.4}", f.metrics.f_measure),
        }
    }
    Ok(cv)
}

pub fn train(a: &TrainArgs, parallel: bool) -> Result<()> {
    let method: Method = a.method.into();
    let cfg = config(&a.opts)?;
    let ds = load_dataset(&a.dataset, method)?;
    if a.kfold.is_none() && a.output.is_none() {
        return Err(Error::Config("train needs --output, or --kfold for cross-validation".into()));
    }

    if let Some(k) = a.kfold {
        let cv = run_cv(&ds, k, method, &cfg, parallel)?;
        stdout(&format_report(&cv))?;
        if let Some(p) = &a.curve {
            write_text(p, &format_curve(&mean_curve(&cv)))?;
        }
        if let Some(p) = &a.envelope {
            write_text(p, &format_envelopes(&cv.train_envelope(), &cv.test_envelope()))?;
        }
    }

    let Some(out) = &a.output else {
        return Ok(());
    };
    match method.build(cfg.seed) {
        None => {
            let pairs: Vec<(f64, Label)> = ds
                .samples
                .iter()
                .map(|s| (entropy_rate_of(&s.bytes), s.label))
                .collect();
            let range = fit_entropy_range(&pairs)?;
            eprintln!("entropy range {range}");
            write_text(out, &format!("{range}\n"))?;
        }
        Some(mut net) => {
            let curve = train_net(&mut net, &ds.samples, None, &cfg)?;
            save_model(&net, out)?;
            if a.kfold.is_none() {
                if let Some(p) = &a.curve {
                    write_text(p, &format_curve(&curve))?;
                }
            }
            if let Some(last) = curve.train.last() {
                log::info!("final training error {last:.6}");
            }
        }
    }
    Ok(())
}

pub fn eval(a: &EvalArgs, parallel: bool) -> Result<()> {
    let fixed = match (&a.model, &a.range) {
        (Some(p), _) => Some(load_classifier(p)?),
        (None, Some(r)) => Some(Classifier::Entropy(r.parse::<EntropyRange>()?)),
        (None, None) => None,
    };
    let report = match fixed {
        Some(clf) => {
            let ds = load_dataset(&a.dataset, clf.method())?;
            let inputs: Vec<[u8; 256]> = ds.samples.iter().map(|s| s.bytes).collect();
            let truths: Vec<Label> = ds.samples.iter().map(|s| s.label).collect();
            let preds = clf.classify(&inputs, parallel)?;
            let range = match &clf {
                Classifier::Entropy(r) => Some(*r),
                _ => None,
            };
            CvReport {
                method: clf.method(),
                folds: vec![FoldResult {
                    metrics: evaluate(&preds, &truths)?,
                    curve: LearningCurve::default(),
                    range,
                }],
            }
        }
        None => {
            let method: Method = a.method.into();
            let ds = load_dataset(&a.dataset, method)?;
            run_cv(&ds, a.kfold, method, &config(&a.opts)?, parallel)?
        }
    };
    let text = format_report(&report);
    if let Some(p) = &a.report {
        write_text(p, &text)?;
    }
    stdout(&text)
}

pub fn scan(a: &ScanArgs, parallel: bool) -> Result<()> {
    let clf = match (&a.model, &a.range) {
        (Some(p), _) => load_classifier(p)?,
        (None, Some(r)) => Classifier::Entropy(r.parse()?),
        (None, None) => return Err(Error::Config("scan needs --model or --range".into())),
    };
    if let Some(m) = a.method {
        let m: Method = m.into();
        if m != clf.method() {
            return Err(Error::Config(format!("--method {m} but the model is {}", clf.method())));
        }
    }
    let file = fs::read(&a.input).map_err(Error::at_path(&a.input))?;
    let format: ImageFormat = a.format.into();
    let report = scan_file(&file, &clf, parallel)?;
    write_image(&render_classification(&report, a.width)?, &a.output, format)?;
    if let Some(p) = &a.report {
        write_text(p, &report.to_text())?;
    }
    if let Some(p) = &a.grayscale {
        write_image(&render_grayscale(&file, a.width)?, p, format)?;
    }
    if let Some(p) = &a.bitimage {
        write_image(&render_bitimage(&file, a.width)?, p, format)?;
    }
    if let Some(p) = &a.entropy_map {
        write_image(&render_structural_entropy(&file, 256, a.width)?, p, format)?;
    }
    let n = report.decisions.len();
    let program = report.count(oglasses_core::Decision::Program);
    stdout(&format!(
        "{}\t{}\toffsets={n}\tprogram={program}\tfraction={:.6}\n",
        a.input.display(),
        clf.method(),
        program as f64 / n as f64
    ))
}
