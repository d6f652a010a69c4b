use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tacgrasp::error::Error;
use tacgrasp::experiments::{
    evaluate_network, load_grasp_set, run_online_classification, run_sensitivity, run_torque_sweep,
    simulate_grasp_set, spearman, split_for, svg, sweep_csv, train_model, write_file, ExperimentReport, Task,
    ALL_SENSORS,
};
use tacgrasp::hand_sim::{GraspConfig, Manifest};
use tacgrasp::learn::{load_network, load_train_state, save_network, save_train_state, EpochLog};

use crate::config::RunConfig;
use crate::CliError;

pub fn grasp_config(cfg: &RunConfig, task: Task) -> GraspConfig {
    let base = match task {
        Task::Classification => GraspConfig::default(),
        Task::Success => GraspConfig::perturbed(),
    };
    GraspConfig { n_frames: cfg.frames, ..base }
}

/// New `reports/<experiment>/<timestamp>/` directory.
pub fn report_dir(cfg: &RunConfig, experiment: &str) -> Result<PathBuf, CliError> {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
    let base = cfg.reports_dir().join(experiment);
    let mut dir = base.join(&stamp);
    let mut n = 1;
    while dir.exists() {
        dir = base.join(format!("{stamp}-{n}"));
        n += 1;
    }
    fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
    Ok(dir)
}

fn json(v: &impl Serialize) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(v).map_err(Error::from)? + "\n")
}

pub fn epoch_csv(history: &[EpochLog]) -> String {
    let mut s = String::from("epoch,train_loss,val_loss,val_accuracy,lr\n");
    for e in history {
        s.push_str(&format!("{},{},{},{},{}\n", e.epoch, e.train_loss, e.val_loss, e.val_accuracy, e.lr));
    }
    s
}

pub fn epoch_log_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("epochs.csv")
}

fn plan(cfg: &RunConfig, lines: &[String]) {
    println!("plan:");
    for l in lines {
        println!("  {l}");
    }
    println!("config:");
    for l in cfg.display_text().lines() {
        println!("  {l}");
    }
}

pub fn simulate(cfg: &RunConfig, dry_run: bool) -> Result<(), CliError> {
    let dir = cfg.dataset_dir(cfg.task);
    let mode = match cfg.task {
        Task::Classification => "unperturbed",
        Task::Success => "perturbed",
    };
    if dry_run {
        plan(
            cfg,
            &[format!(
                "simulate {} objects x {} grasps ({mode}, {} frames) into {}",
                cfg.objects.len(),
                cfg.grasps,
                cfg.frames,
                dir.display()
            )],
        );
        return Ok(());
    }
    if dir.join(Manifest::FILE_NAME).is_file() {
        fs::remove_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
    }
    let set = simulate_grasp_set(&cfg.objects, cfg.grasps, &grasp_config(cfg, cfg.task), cfg.seed, Some(&dir))?;
    let successes = set.records.iter().filter(|r| r.success).count();
    println!(
        "simulated {} grasps over {} objects into {} ({successes} detected successes, rate {:.3})",
        set.len(),
        set.class_names.len(),
        dir.display(),
        set.success_rate()
    );
    Ok(())
}

pub fn train(cfg: &RunConfig, dry_run: bool) -> Result<(), CliError> {
    let task = cfg.task;
    let dir = cfg.dataset_dir(task);
    let ckpt = cfg.checkpoint_path(task);
    if dry_run {
        let mut lines = vec![
            format!("train {} network on {}", task.name(), dir.display()),
            format!("write checkpoint {}", ckpt.display()),
            format!("write epoch log {}", epoch_log_path(&ckpt).display()),
        ];
        if cfg.resume {
            lines.push(format!("resume from {}", ckpt.display()));
        }
        plan(cfg, &lines);
        return Ok(());
    }
    let set = load_grasp_set(&dir)?;
    let ec = cfg.experiment_config();
    let split = split_for(&set, task, cfg.seed)?;
    let resume = if cfg.resume {
        let (net, _) = load_network(&ckpt)?;
        Some((net, load_train_state(&ckpt)?))
    } else {
        None
    };
    let model = train_model(&set, &split, task, &ALL_SENSORS, &ec, resume, &mut |e| {
        println!(
            "epoch {:3}  loss {:.5}  val_loss {:.5}  val_acc {:.4}  lr {:e}",
            e.epoch, e.train_loss, e.val_loss, e.val_accuracy, e.lr
        );
    })?;
    save_network(&ckpt, &model.network, &model.train_config)?;
    save_train_state(&ckpt, &model.outcome.state)?;
    write_file(&epoch_log_path(&ckpt), &epoch_csv(&model.outcome.history))?;
    let best = model.outcome.history.iter().find(|h| h.epoch == model.outcome.best_epoch);
    println!(
        "trained {} network for {} epochs (best epoch {}, val accuracy {:.4}); checkpoint {}",
        task.name(),
        model.outcome.history.len(),
        model.outcome.best_epoch,
        best.map_or(f64::NAN, |b| b.val_accuracy),
        ckpt.display()
    );
    Ok(())
}

fn write_report(dir: &Path, report: &ExperimentReport) -> Result<(), CliError> {
    write_file(&dir.join("confusion.csv"), &report.confusion_csv())?;
    write_file(&dir.join("rates.csv"), &report.rates_csv())?;
    write_file(&dir.join("summary.json"), &report.to_json()?)?;
    Ok(())
}

pub fn eval(cfg: &RunConfig, dry_run: bool) -> Result<(), CliError> {
    let task = cfg.task;
    let dir = cfg.dataset_dir(task);
    let ckpt = cfg.checkpoint_path(task);
    if dry_run {
        let mut lines = vec![format!("evaluate {} on validation grasps of {}", ckpt.display(), dir.display())];
        if task == Task::Classification && cfg.online_grasps > 0 {
            lines.push(format!("online test: {} fresh grasps per class", cfg.online_grasps));
        }
        lines.push(format!("write report under {}", cfg.reports_dir().join(task.name()).display()));
        plan(cfg, &lines);
        return Ok(());
    }
    let set = load_grasp_set(&dir)?;
    let (net, _) = load_network(&ckpt)?;
    let ec = cfg.experiment_config();
    let split = split_for(&set, task, cfg.seed)?;
    let mut report = evaluate_network(&net, &set, &split, task, &ALL_SENSORS, &ec, task.name())?;
    if task == Task::Classification && cfg.online_grasps > 0 {
        let online = run_online_classification(&net, &set.class_names, cfg.online_grasps, &grasp_config(cfg, task), cfg.seed)?;
        report.metrics.insert("online_accuracy".into(), online.accuracy);
    }
    let out = report_dir(cfg, task.name())?;
    write_report(&out, &report)?;
    print!("{}", report.summary());
    println!("report written to {}", out.display());
    Ok(())
}

pub fn sensitivity(cfg: &RunConfig, dry_run: bool) -> Result<(), CliError> {
    let cd = cfg.dataset_dir(Task::Classification);
    let sd = cfg.dataset_dir(Task::Success);
    if dry_run {
        plan(
            cfg,
            &[
                format!("retrain classification on 7 sensor subsets of {}", cd.display()),
                format!("retrain success prediction on 7 sensor subsets of {}", sd.display()),
                "score the vote ensemble of the single-sensor networks".into(),
                format!("write report under {}", cfg.reports_dir().join("sensitivity").display()),
            ],
        );
        return Ok(());
    }
    let cs = load_grasp_set(&cd)?;
    let ss = load_grasp_set(&sd)?;
    let result = run_sensitivity(&cs, &ss, &cfg.experiment_config(), [None, None])?;
    let out = report_dir(cfg, "sensitivity")?;
    write_file(&out.join("sensitivity.csv"), &result.to_csv())?;
    write_file(&out.join("ensemble.csv"), &result.ensemble_csv())?;
    write_file(&out.join("summary.json"), &json(&result)?)?;
    print!("{}{}", result.to_csv(), result.ensemble_csv());
    println!("report written to {}", out.display());
    Ok(())
}

pub fn torque_sweep(cfg: &RunConfig, dry_run: bool) -> Result<(), CliError> {
    let ckpt = cfg.checkpoint_path(Task::Success);
    if dry_run {
        plan(
            cfg,
            &[
                format!("sweep 12 torques on {}", cfg.sweep_objects.join(", ")),
                format!("score with {}", ckpt.display()),
                format!("write report under {}", cfg.reports_dir().join("torque-sweep").display()),
            ],
        );
        return Ok(());
    }
    let (net, _) = load_network(&ckpt).map_err(|e| match e {
        Error::Io { path, .. } => Error::Dependency(format!("success network {} is missing", path.display())),
        e => e,
    })?;
    if net.classes != 2 {
        return Err(Error::InvalidInput(format!("{} is not a success network", ckpt.display())).into());
    }
    let objects: Vec<&str> = cfg.sweep_objects.iter().map(String::as_str).collect();
    let result = run_torque_sweep(&net, &objects, &grasp_config(cfg, Task::Classification), cfg.seed)?;
    let out = report_dir(cfg, "torque-sweep")?;
    write_file(&out.join("torque_sweep.csv"), &sweep_csv(&result.rows))?;
    write_file(&out.join("summary.json"), &json(&result)?)?;
    for (o, rho) in &result.spearman {
        match rho {
            Some(r) => println!("{o:<12} spearman {r:+.3}"),
            None => println!("{o:<12} spearman undefined (constant predictions)"),
        }
    }
    println!("report written to {}", out.display());
    Ok(())
}

/// Rows of a CSV file as string records, header first.
fn read_csv(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn num(s: &str, path: &Path) -> Result<f64, CliError> {
    s.parse().map_err(|_| Error::Format(format!("{}: {s:?} is not a number", path.display())).into())
}

/// Latest run directory per experiment.
pub fn latest_runs(reports: &Path) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(reports).map_err(|e| Error::Io { path: reports.to_path_buf(), source: e })?;
    for exp in entries.flatten().filter(|e| e.path().is_dir()) {
        let runs = fs::read_dir(exp.path()).map_err(|e| Error::Io { path: exp.path(), source: e })?;
        if let Some(latest) = runs.flatten().map(|r| r.path()).filter(|p| p.is_dir()).max() {
            out.insert(exp.file_name().to_string_lossy().into_owned(), latest);
        }
    }
    Ok(out)
}

fn render_confusion(dir: &Path, plots: bool, text: &mut String) -> Result<(), CliError> {
    let path = dir.join("confusion.csv");
    let rows = read_csv(&path)?;
    let names: Vec<String> = rows.first().map(|h| h[1..].to_vec()).unwrap_or_default();
    let mut counts = Vec::new();
    for r in &rows[1.min(rows.len())..] {
        counts.push(r[1..].iter().map(|c| num(c, &path).map(|v| v as usize)).collect::<Result<Vec<_>, _>>()?);
    }
    let total: usize = counts.iter().flatten().sum();
    let correct: usize = counts.iter().enumerate().map(|(i, r)| r.get(i).copied().unwrap_or(0)).sum();
    text.push_str(&format!("  accuracy {:.4} over {total}\n", correct as f64 / total.max(1) as f64));
    for (name, row) in names.iter().zip(&counts) {
        let n: usize = row.iter().sum();
        let i = names.iter().position(|x| x == name).unwrap_or(0);
        match n {
            0 => text.push_str(&format!("  {name:<16} absent\n")),
            _ => text.push_str(&format!("  {name:<16} {:.4} ({n})\n", row[i] as f64 / n as f64)),
        }
    }
    if plots {
        write_file(&dir.join("confusion.svg"), &svg::confusion_heatmap(&names, &counts))?;
    }
    Ok(())
}

fn render_sensitivity(dir: &Path, plots: bool, text: &mut String) -> Result<(), CliError> {
    let path = dir.join("sensitivity.csv");
    let rows = read_csv(&path)?;
    let mut labels = Vec::new();
    let (mut cls, mut suc) = (Vec::new(), Vec::new());
    text.push_str("  sensors   classification  success\n");
    for r in rows.iter().skip(1) {
        labels.push(r[0].clone());
        cls.push(num(&r[1], &path)?);
        suc.push(num(&r[2], &path)?);
        text.push_str(&format!("  {:<9} {:<15.4} {:.4}\n", r[0], cls[cls.len() - 1], suc[suc.len() - 1]));
    }
    let ens = dir.join("ensemble.csv");
    if ens.is_file() {
        for r in read_csv(&ens)?.iter().skip(1) {
            text.push_str(&format!("  vote ensemble ({}) {} vs single-sensor mean {}\n", r[0], r[1], r[2]));
        }
    }
    if plots {
        let groups = vec![("classification".to_string(), cls), ("success".to_string(), suc)];
        write_file(&dir.join("sensitivity.svg"), &svg::bar_chart("Accuracy by sensor subset", &labels, &groups))?;
    }
    Ok(())
}

fn render_sweep(dir: &Path, plots: bool, text: &mut String) -> Result<(), CliError> {
    let path = dir.join("torque_sweep.csv");
    let rows = read_csv(&path)?;
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in rows.iter().skip(1) {
        let pt = (num(&r[1], &path)? * 100.0, num(&r[2], &path)?);
        match series.iter_mut().find(|s| s.0 == r[0]) {
            Some(s) => s.1.push(pt),
            None => series.push((r[0].clone(), vec![pt])),
        }
    }
    for (name, pts) in &series {
        let (t, p): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        match spearman(&t, &p) {
            Some(r) => text.push_str(&format!("  {name:<12} spearman {r:+.3} over {} torques\n", pts.len())),
            None => text.push_str(&format!("  {name:<12} spearman undefined\n")),
        }
    }
    if plots {
        let svg = svg::line_plot("Predicted success against torque", "torque (% of max)", &series);
        write_file(&dir.join("torque_sweep.svg"), &svg)?;
    }
    Ok(())
}

pub fn report(cfg: &RunConfig, dry_run: bool) -> Result<(), CliError> {
    let reports = cfg.reports_dir();
    if dry_run {
        plan(cfg, &[format!("summarise the latest run of each experiment under {}", reports.display())]);
        return Ok(());
    }
    let runs = latest_runs(&reports)?;
    if runs.is_empty() {
        return Err(Error::Dependency(format!("no reports under {}", reports.display())).into());
    }
    let mut text = String::new();
    for (exp, dir) in &runs {
        text.push_str(&format!("{exp} ({})\n", dir.display()));
        if dir.join("confusion.csv").is_file() {
            render_confusion(dir, cfg.plots, &mut text)?;
        }
        if dir.join("sensitivity.csv").is_file() {
            render_sensitivity(dir, cfg.plots, &mut text)?;
        }
        if dir.join("torque_sweep.csv").is_file() {
            render_sweep(dir, cfg.plots, &mut text)?;
        }
    }
    write_file(&reports.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(())
}
