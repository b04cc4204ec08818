//! Cross-module properties of the synthetic data pipeline: the temporal
//! visibility guarantee that makes multi-frame input worthwhile, and an
//! end-to-end generate, store, reload, window, augment round trip.

use tempfile::TempDir;
use vtu_data::{
    augment, extract_snippets, generate_dataset, generate_sequence_full, load_dataset,
    save_dataset, SceneSpec, SplitTag,
};

/// Count center-frame blob pixels that survive occlusion in at least one
/// frame of the length-`t` window around each frame, next to the same count
/// for the center frame alone.
fn visibility_counts(spec: &SceneSpec, t: usize) -> (usize, usize, usize) {
    let seq = generate_sequence_full(spec).unwrap();
    let len = seq.frames.len() as isize;
    let half = (t / 2) as isize;
    let size = spec.frame_size;

    let mut total = 0usize;
    let mut union_visible = 0usize;
    let mut center_visible = 0usize;
    for k in 0..seq.frames.len() {
        let window: Vec<usize> = (-half..=half)
            .map(|o| (k as isize + o).clamp(0, len - 1) as usize)
            .collect();
        let bolus = &seq.masks[k].bolus;
        for y in 0..size {
            for x in 0..size {
                if !bolus.get(x, y) {
                    continue;
                }
                total += 1;
                let unoccluded = |idx: &usize| match seq.occlusions[*idx] {
                    Some(rect) => !rect.contains(x, y),
                    None => true,
                };
                if window.iter().any(|idx| unoccluded(idx)) {
                    union_visible += 1;
                }
                if unoccluded(&k) {
                    center_visible += 1;
                }
            }
        }
    }
    (total, union_visible, center_visible)
}

/// With default generation settings, nearly every blob pixel of a frame is
/// uncovered in at least one frame of its five-frame window, even though a
/// single frame loses a visible share of them. This is the property a
/// temporal model can exploit and a single-frame model cannot.
#[test]
fn window_recovers_blob_pixels_that_single_frames_lose() {
    let mut total = 0usize;
    let mut union_visible = 0usize;
    let mut center_visible = 0usize;
    for seed in 0..10u64 {
        let spec = SceneSpec { seed, ..SceneSpec::default() };
        let (t, u, c) = visibility_counts(&spec, 5);
        total += t;
        union_visible += u;
        center_visible += c;
    }
    assert!(total > 10_000, "expected a meaningful pixel population, got {total}");

    let union_frac = union_visible as f64 / total as f64;
    let center_frac = center_visible as f64 / total as f64;
    assert!(
        union_frac >= 0.95,
        "five-frame visibility {union_frac:.4} fell below 0.95"
    );
    assert!(
        center_frac < union_frac,
        "occlusion never hid a blob pixel recoverable from neighbors \
         (center {center_frac:.4}, union {union_frac:.4})"
    );
    assert!(
        center_frac < 0.995,
        "center-frame visibility {center_frac:.4} too high for occlusion to matter"
    );
}

/// Disabling occlusion makes every pixel trivially visible, so the guarantee
/// is about the occlusion geometry rather than an accident of the threshold.
#[test]
fn without_occlusion_everything_is_visible() {
    let spec = SceneSpec { seed: 9, occlusion_prob: 0.0, ..SceneSpec::default() };
    let (total, union_visible, center_visible) = visibility_counts(&spec, 5);
    assert_eq!(union_visible, total);
    assert_eq!(center_visible, total);
}

#[test]
fn dataset_survives_store_window_and_augment_round_trip() {
    let template = SceneSpec {
        seed: 0,
        frame_size: 32,
        sequence_length: 10,
        ..SceneSpec::default()
    };
    let dataset = generate_dataset(41, 8, &template).unwrap();
    assert_eq!(dataset.sequences.len(), 8);

    let parts = [
        dataset.split(SplitTag::Train).len(),
        dataset.split(SplitTag::Val).len(),
        dataset.split(SplitTag::Test).len(),
    ];
    assert_eq!(parts.iter().sum::<usize>(), 8);
    assert!(parts.iter().all(|n| *n >= 1), "every split should be populated: {parts:?}");

    let dir = TempDir::new().unwrap();
    save_dataset(dir.path(), &dataset).unwrap();
    let reloaded = load_dataset(dir.path()).unwrap();
    assert_eq!(reloaded.base_seed, dataset.base_seed);
    assert_eq!(reloaded.template, dataset.template);
    for (a, b) in dataset.sequences.iter().zip(&reloaded.sequences) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.split, b.split);
        assert_eq!(a.masks, b.masks);
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            let bits_a: Vec<u32> = fa.data().iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u32> = fb.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b, "reloaded frame differs in {}", a.id);
        }
    }

    let seq = &reloaded.sequences[0];
    let snippets = extract_snippets(&seq.frames, &seq.masks, 5, 1).unwrap();
    assert_eq!(snippets.len(), seq.frames.len());
    for (i, snip) in snippets.iter().enumerate() {
        assert_eq!(snip.center_index, i);
        assert_eq!(snip.stack.frames.len(), 5);
        assert_eq!(snip.stack.center, 2);
        let center = snip.stack.center_frame();
        assert_eq!(center.data(), seq.frames[i].data());
        assert_eq!(&snip.target, &seq.masks[i]);

        let out = augment(snip, 1000 + i as u64);
        assert_eq!(out.stack.frames.len(), 5);
        assert_eq!(out.center_index, snip.center_index);
        for frame in &out.stack.frames {
            assert_eq!(frame.shape(), &[32, 32]);
            assert!(frame.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert_eq!(out.target.bolus.width, 32);
        assert_eq!(out.target.pharynx.height, 32);
    }

    let again = generate_dataset(41, 8, &template).unwrap();
    for (a, b) in dataset.sequences.iter().zip(&again.sequences) {
        assert_eq!(a.split, b.split);
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            assert_eq!(fa.data(), fb.data());
        }
    }
}
