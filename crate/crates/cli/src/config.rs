//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use tacgrasp::experiments::{
    classification_train_config, success_train_config, ExperimentConfig, Task,
};
use tacgrasp::hand_sim::{desk_objects, find_object, object_registry, SWEEP_OBJECTS};
use tacgrasp::learn::{NetworkSpec, DESK_SPEC};

use crate::CliError;

pub const DATA_ENV: &str = "TACGRASP_DATA";
pub const DEFAULT_DATA_DIR: &str = "tacgrasp-data";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub objects: Vec<String>,
    pub grasps: usize,
    pub frames: usize,
    pub task: Task,
    pub spec: String,
    pub seed: u64,
    pub epochs: usize,
    pub samples_per_epoch: usize,
    pub batch_size: usize,
    pub learning_rate: Option<f64>,
    pub dropout: Option<f64>,
    pub init_std: f64,
    pub augment: bool,
    pub resume: bool,
    pub online_grasps: usize,
    pub sweep_objects: Vec<String>,
    pub class_dataset: Option<PathBuf>,
    pub success_dataset: Option<PathBuf>,
    pub plots: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let data = std::env::var_os(DATA_ENV).map_or_else(|| PathBuf::from(DEFAULT_DATA_DIR), PathBuf::from);
        let base = classification_train_config();
        Self {
            data,
            dataset: None,
            checkpoint: None,
            objects: desk_objects().into_iter().map(|o| o.name).collect(),
            grasps: 20,
            frames: 120,
            task: Task::Classification,
            spec: DESK_SPEC.into(),
            seed: 0,
            epochs: base.max_epochs,
            samples_per_epoch: base.samples_per_epoch,
            batch_size: base.batch_size,
            learning_rate: None,
            dropout: None,
            init_std: base.init_std,
            augment: true,
            resume: false,
            online_grasps: 4,
            sweep_objects: SWEEP_OBJECTS.iter().map(|s| s.to_string()).collect(),
            class_dataset: None,
            success_dataset: None,
            plots: true,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

fn parse_task(value: &str) -> Result<Task, CliError> {
    match value {
        "classification" => Ok(Task::Classification),
        "success" => Ok(Task::Success),
        _ => Err(CliError::Config(format!("task: expected classification or success, got {value:?}"))),
    }
}

/// `desk`, `all`, a count of registry objects, or a comma-separated list.
pub fn parse_objects(value: &str) -> Result<Vec<String>, CliError> {
    let registry = object_registry();
    let names: Vec<String> = match value.trim() {
        "desk" => desk_objects().into_iter().map(|o| o.name).collect(),
        "all" => registry.into_iter().map(|o| o.name).collect(),
        v => match v.parse::<usize>() {
            Ok(n) if (1..=registry.len()).contains(&n) => registry.into_iter().take(n).map(|o| o.name).collect(),
            Ok(n) => return Err(CliError::Config(format!("objects: {n} outside 1..={}", registry.len()))),
            Err(_) => v
                .split(',')
                .map(|s| find_object(s.trim()).map(|o| o.name).map_err(|e| CliError::Config(format!("objects: {e}"))))
                .collect::<Result<_, _>>()?,
        },
    };
    Ok(names)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        let opt_path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match key.trim() {
            "data" => self.data = PathBuf::from(v),
            "dataset" => self.dataset = opt_path(v),
            "checkpoint" => self.checkpoint = opt_path(v),
            "objects" => self.objects = parse_objects(v)?,
            "grasps" => self.grasps = parse(key, v)?,
            "frames" => self.frames = parse(key, v)?,
            "task" => self.task = parse_task(v)?,
            "spec" => self.spec = v.to_string(),
            "seed" => self.seed = parse(key, v)?,
            "epochs" => self.epochs = parse(key, v)?,
            "samples_per_epoch" => self.samples_per_epoch = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "learning_rate" => self.learning_rate = Some(parse(key, v)?),
            "dropout" => self.dropout = Some(parse(key, v)?),
            "init_std" => self.init_std = parse(key, v)?,
            "augment" => self.augment = parse_bool(key, v)?,
            "resume" => self.resume = parse_bool(key, v)?,
            "online_grasps" => self.online_grasps = parse(key, v)?,
            "sweep_objects" => {
                self.sweep_objects = v
                    .split(',')
                    .map(|s| find_object(s.trim()).map(|o| o.name).map_err(|e| CliError::Config(format!("sweep_objects: {e}"))))
                    .collect::<Result<_, _>>()?
            }
            "class_dataset" => self.class_dataset = opt_path(v),
            "success_dataset" => self.success_dataset = opt_path(v),
            "plots" => self.plots = parse_bool(key, v)?,
            other => return Err(CliError::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.objects.is_empty() {
            return bad("objects: empty list".into());
        }
        if self.grasps == 0 {
            return bad("grasps must be at least 1".into());
        }
        if self.frames < 100 {
            return bad(format!("frames = {} is too short to hold a sequence after contact", self.frames));
        }
        if self.spec.parse::<NetworkSpec>().is_err() {
            return bad(format!("spec: invalid network spec {:?}", self.spec));
        }
        self.experiment_config().classification.validate()?;
        self.experiment_config().success.validate()?;
        Ok(())
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        let apply = |mut t: tacgrasp::learn::TrainConfig| {
            t.max_epochs = self.epochs;
            t.samples_per_epoch = self.samples_per_epoch;
            t.batch_size = self.batch_size;
            t.init_std = self.init_std;
            t.augment = self.augment;
            t
        };
        let mut classification = apply(classification_train_config());
        let mut success = apply(success_train_config());
        let target = match self.task {
            Task::Classification => &mut classification,
            Task::Success => &mut success,
        };
        if let Some(lr) = self.learning_rate {
            target.learning_rate = lr;
        }
        if let Some(d) = self.dropout {
            target.dropout_rate = d;
        }
        ExperimentConfig { spec: self.spec.clone(), classification, success, seed: self.seed }
    }

    pub fn dataset_dir(&self, task: Task) -> PathBuf {
        let explicit = match task {
            Task::Classification => self.class_dataset.as_ref(),
            Task::Success => self.success_dataset.as_ref(),
        };
        if let Some(p) = explicit.or(if task == self.task { self.dataset.as_ref() } else { None }) {
            return p.clone();
        }
        self.data.join(match task {
            Task::Classification => "dataset",
            Task::Success => "dataset-success",
        })
    }

    pub fn checkpoint_path(&self, task: Task) -> PathBuf {
        match &self.checkpoint {
            Some(p) if task == self.task => p.clone(),
            _ => self.data.join("models").join(format!("{}.net", task.name())),
        }
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.data.join("reports")
    }

    /// Canonical rendering, sorted by key; paths are left out so the text
    /// (and its hash) does not depend on where data lives.
    pub fn canonical_text(&self) -> String {
        let mut m = BTreeMap::new();
        m.insert("objects", self.objects.join(","));
        m.insert("grasps", self.grasps.to_string());
        m.insert("frames", self.frames.to_string());
        m.insert("task", self.task.name().to_string());
        m.insert("spec", self.spec.clone());
        m.insert("seed", self.seed.to_string());
        m.insert("epochs", self.epochs.to_string());
        m.insert("samples_per_epoch", self.samples_per_epoch.to_string());
        m.insert("batch_size", self.batch_size.to_string());
        let ec = self.experiment_config();
        let tc = ec.train_config(self.task);
        m.insert("learning_rate", tc.learning_rate.to_string());
        m.insert("dropout", tc.dropout_rate.to_string());
        m.insert("init_std", self.init_std.to_string());
        m.insert("augment", self.augment.to_string());
        m.insert("online_grasps", self.online_grasps.to_string());
        m.insert("sweep_objects", self.sweep_objects.join(","));
        let mut s = String::new();
        for (k, v) in m {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Full rendering including paths, for `--dry-run`.
    pub fn display_text(&self) -> String {
        let mut s = self.canonical_text();
        let _ = writeln!(s, "data = {}", self.data.display());
        for task in [Task::Classification, Task::Success] {
            let _ = writeln!(s, "{}_dataset = {}", task.name(), self.dataset_dir(task).display());
            let _ = writeln!(s, "{}_checkpoint = {}", task.name(), self.checkpoint_path(task).display());
        }
        let _ = writeln!(s, "resume = {}", self.resume);
        let _ = writeln!(s, "plots = {}", self.plots);
        s
    }
}
