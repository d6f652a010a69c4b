use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::sequences::{extract_sequences, GraspId, GraspSequences, SEQUENCE_OFFSETS};
use crate::error::{invalid, Error, Result};
use crate::hand_sim::{collect_grasp_data, write_grasp, GraspCapture, GraspConfig, GraspRecord, Manifest};
use crate::pnm::read_pgm;

/// Grasps of several objects in compact form, with their records.
#[derive(Debug, Clone)]
pub struct GraspSet {
    /// Object names in label order.
    pub class_names: Vec<String>,
    pub records: Vec<GraspRecord>,
    pub sequences: Vec<GraspSequences>,
}

impl GraspSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Position of the record's object in `class_names`.
    pub fn class_label(&self, rec: &GraspRecord) -> Result<usize> {
        self.class_names
            .iter()
            .position(|n| *n == rec.object)
            .ok_or_else(|| invalid(format!("object {} not in class list", rec.object)))
    }

    pub fn index_of(&self, id: GraspId) -> Option<usize> {
        self.sequences.iter().position(|g| g.id == id)
    }

    /// Grasps that yielded fewer than ten sequences.
    pub fn truncated(&self) -> usize {
        self.sequences.iter().filter(|g| g.len() < SEQUENCE_OFFSETS).count()
    }

    pub fn success_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.success).count() as f64 / self.records.len() as f64
    }
}

pub fn grasp_id(rec: &GraspRecord) -> GraspId {
    GraspId { object_label: rec.object_label, grasp_idx: rec.grasp_idx }
}

pub fn compact(rec: &GraspRecord, cap: &GraspCapture) -> Result<GraspSequences> {
    extract_sequences(grasp_id(rec), &cap.videos, &cap.refs)
}

/// Simulates `grasps` grasps of each object. With `out`, frames and the
/// manifest are written there as well.
pub fn simulate_grasp_set(
    objects: &[String],
    grasps: usize,
    cfg: &GraspConfig,
    seed: u64,
    out: Option<&Path>,
) -> Result<GraspSet> {
    if objects.is_empty() {
        return Err(invalid("no objects to simulate"));
    }
    let per_object: Vec<(Vec<GraspRecord>, Vec<GraspSequences>)> = objects
        .par_iter()
        .map(|name| {
            let mut seqs = Vec::with_capacity(grasps);
            let records = collect_grasp_data(name, grasps, cfg, seed, &mut |rec, cap| {
                if let Some(root) = out {
                    write_grasp(root, rec, cap)?;
                }
                seqs.push(compact(rec, cap)?);
                Ok(())
            })?;
            Ok((records, seqs))
        })
        .collect::<Result<_>>()?;
    let mut set = GraspSet { class_names: Vec::new(), records: Vec::new(), sequences: Vec::new() };
    for (records, seqs) in per_object {
        if let Some(r) = records.first() {
            set.class_names.push(r.object.clone());
        }
        set.records.extend(records);
        set.sequences.extend(seqs);
    }
    if let Some(root) = out {
        Manifest { fps: cfg.fps, n_frames: cfg.n_frames, seed, records: set.records.clone() }.write(root)?;
    }
    Ok(set)
}

/// Paths a manifest promises, reporting a missing sensor directory once
/// rather than every frame in it.
pub fn missing_paths(root: &Path, manifest: &Manifest) -> Vec<PathBuf> {
    let mut missing = Vec::new();
    for rec in &manifest.records {
        for k in 0..3 {
            let dir = root.join(&rec.videos[k]);
            if !dir.is_dir() {
                missing.push(dir);
                continue;
            }
            let files = std::iter::once(rec.reference_path(k)).chain((0..rec.n_frames).map(|i| rec.frame_path(k, i)));
            missing.extend(files.map(|f| root.join(f)).filter(|p| !p.is_file()));
        }
    }
    missing
}

/// Reads a dataset written by [`simulate_grasp_set`].
pub fn load_grasp_set(root: &Path) -> Result<GraspSet> {
    let manifest = Manifest::read(root)?;
    if manifest.records.is_empty() {
        return Err(invalid(format!("dataset at {} has no grasps", root.display())));
    }
    let missing = missing_paths(root, &manifest);
    if !missing.is_empty() {
        return Err(Error::Integrity { missing });
    }
    let sequences = manifest
        .records
        .par_iter()
        .map(|rec| {
            let refs: Vec<_> = (0..3).map(|k| read_pgm(&root.join(rec.reference_path(k)))).collect::<Result<_>>()?;
            let videos: Vec<Vec<_>> = (0..3)
                .map(|k| (0..rec.n_frames).map(|i| read_pgm(&root.join(rec.frame_path(k, i)))).collect())
                .collect::<Result<_>>()?;
            extract_sequences(grasp_id(rec), &videos, &refs)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut class_names: Vec<String> = Vec::new();
    for r in &manifest.records {
        if !class_names.contains(&r.object) {
            class_names.push(r.object.clone());
        }
    }
    Ok(GraspSet { class_names, records: manifest.records, sequences })
}
