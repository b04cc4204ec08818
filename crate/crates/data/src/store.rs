//! On-disk dataset layout: one directory per sequence holding `.vtt1` frames
//! and PGM masks, described by a `manifest.txt` of `key=value` lines.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dataset::{Dataset, SequenceData};
use crate::error::{DataError, DataResult};
use crate::scene::SceneSpec;
use crate::split::SplitTag;
use vtu_core::io::{read_mask_pgm, read_vtt1, write_mask_pgm, write_vtt1};
use vtu_core::video::MaskPair;

pub const MANIFEST_NAME: &str = "manifest.txt";
const FORMAT_VERSION: &str = "1";

fn manifest_error(detail: impl Into<String>) -> DataError {
    DataError::Manifest { detail: detail.into() }
}

fn frame_path(root: &Path, id: &str, k: usize) -> PathBuf {
    root.join(id).join("frames").join(format!("{k}.vtt1"))
}

fn mask_path(root: &Path, id: &str, k: usize, head: &str) -> PathBuf {
    root.join(id).join("masks").join(format!("{k}_{head}.pgm"))
}

/// Serialize the dataset under `root`, overwriting any previous contents of
/// the referenced files. The manifest is written last so a complete manifest
/// implies complete data.
pub fn save_dataset(root: &Path, dataset: &Dataset) -> DataResult<()> {
    for seq in &dataset.sequences {
        let frames_dir = root.join(&seq.id).join("frames");
        let masks_dir = root.join(&seq.id).join("masks");
        fs::create_dir_all(&frames_dir)?;
        fs::create_dir_all(&masks_dir)?;
        for (k, frame) in seq.frames.iter().enumerate() {
            write_vtt1(&frame_path(root, &seq.id, k), frame)?;
        }
        for (k, pair) in seq.masks.iter().enumerate() {
            write_mask_pgm(&mask_path(root, &seq.id, k, "bolus"), &pair.bolus)?;
            write_mask_pgm(&mask_path(root, &seq.id, k, "pharynx"), &pair.pharynx)?;
        }
    }

    let mut text = String::new();
    let spec = &dataset.template;
    text.push_str(&format!("format={FORMAT_VERSION}\n"));
    text.push_str(&format!("base_seed={}\n", dataset.base_seed));
    text.push_str(&format!("sequences={}\n", dataset.sequences.len()));
    text.push_str(&format!("frame_size={}\n", spec.frame_size));
    text.push_str(&format!("sequence_length={}\n", spec.sequence_length));
    text.push_str(&format!("noise_sigma={}\n", spec.noise_sigma));
    text.push_str(&format!("occlusion_prob={}\n", spec.occlusion_prob));
    text.push_str(&format!("occlusion_frac={}\n", spec.occlusion_frac));
    for seq in &dataset.sequences {
        text.push_str(&format!("seq.{}.seed={}\n", seq.id, seq.seed));
        text.push_str(&format!("seq.{}.split={}\n", seq.id, seq.split.as_str()));
    }
    fs::write(root.join(MANIFEST_NAME), text)?;
    Ok(())
}

/// Strict `key=value` parse: blank lines allowed, anything else unrecognized
/// is an error so stale or hand-edited manifests fail loudly.
fn parse_manifest(text: &str) -> DataResult<BTreeMap<String, String>> {
    let mut entries = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| manifest_error(format!("line {}: missing '='", lineno + 1)))?;
        if entries.insert(key.trim().to_string(), value.trim().to_string()).is_some() {
            return Err(manifest_error(format!("duplicate key {key:?}")));
        }
    }
    Ok(entries)
}

fn take<T: std::str::FromStr>(
    entries: &mut BTreeMap<String, String>,
    key: &str,
) -> DataResult<T> {
    let raw = entries
        .remove(key)
        .ok_or_else(|| manifest_error(format!("missing key {key:?}")))?;
    raw.parse::<T>()
        .map_err(|_| manifest_error(format!("key {key:?} has unparsable value {raw:?}")))
}

/// Load a dataset saved by [`save_dataset`]; file contents round-trip
/// bit-exactly through the tensor and mask formats.
pub fn load_dataset(root: &Path) -> DataResult<Dataset> {
    let manifest_path = root.join(MANIFEST_NAME);
    let text = fs::read_to_string(&manifest_path)
        .map_err(|_| DataError::MissingFile { path: manifest_path })?;
    let mut entries = parse_manifest(&text)?;

    let format: String = take(&mut entries, "format")?;
    if format != FORMAT_VERSION {
        return Err(manifest_error(format!(
            "format {format:?} unsupported, expected {FORMAT_VERSION:?}"
        )));
    }
    let base_seed: u64 = take(&mut entries, "base_seed")?;
    let count: usize = take(&mut entries, "sequences")?;
    let template = SceneSpec {
        seed: base_seed,
        frame_size: take(&mut entries, "frame_size")?,
        sequence_length: take(&mut entries, "sequence_length")?,
        noise_sigma: take(&mut entries, "noise_sigma")?,
        occlusion_prob: take(&mut entries, "occlusion_prob")?,
        occlusion_frac: take(&mut entries, "occlusion_frac")?,
    };
    template.validate()?;

    let mut ids: Vec<String> = Vec::with_capacity(count);
    for key in entries.keys() {
        if let Some(rest) = key.strip_prefix("seq.") {
            if let Some(id) = rest.strip_suffix(".seed") {
                ids.push(id.to_string());
            }
        }
    }
    if ids.len() != count {
        return Err(manifest_error(format!(
            "{} sequence entries for declared count {}",
            ids.len(),
            count
        )));
    }

    let mut sequences = Vec::with_capacity(count);
    for id in &ids {
        let seed: u64 = take(&mut entries, &format!("seq.{id}.seed"))?;
        let split_raw: String = take(&mut entries, &format!("seq.{id}.split"))?;
        let split = SplitTag::parse(&split_raw)?;
        let (frames, masks) = load_sequence_files(root, id, &template)?;
        sequences.push(SequenceData { id: id.clone(), seed, split, frames, masks });
    }
    if let Some(key) = entries.keys().next() {
        return Err(manifest_error(format!("unknown key {key:?}")));
    }

    Ok(Dataset { base_seed, template, sequences })
}

fn load_sequence_files(
    root: &Path,
    id: &str,
    spec: &SceneSpec,
) -> DataResult<(Vec<vtu_core::Tensor<f32>>, Vec<MaskPair>)> {
    let size = spec.frame_size;
    let mut frames = Vec::with_capacity(spec.sequence_length);
    let mut masks = Vec::with_capacity(spec.sequence_length);
    for k in 0..spec.sequence_length {
        let fp = frame_path(root, id, k);
        let frame = read_vtt1(&fp).map_err(|_| DataError::MissingFile { path: fp })?;
        if frame.shape() != [size, size] {
            return Err(manifest_error(format!(
                "frame {k} of {id} has shape {:?}, expected [{size}, {size}]",
                frame.shape()
            )));
        }
        frames.push(frame);

        let mut heads = Vec::with_capacity(2);
        for head in ["bolus", "pharynx"] {
            let mp = mask_path(root, id, k, head);
            let mask = read_mask_pgm(&mp).map_err(|_| DataError::MissingFile { path: mp })?;
            if mask.width != size || mask.height != size {
                return Err(manifest_error(format!(
                    "mask {k} {head} of {id} is {}x{}, expected {size}x{size}",
                    mask.width, mask.height
                )));
            }
            heads.push(mask);
        }
        let pharynx = heads.pop().expect("two heads");
        let bolus = heads.pop().expect("two heads");
        masks.push(MaskPair { bolus, pharynx });
    }
    Ok((frames, masks))
}
