//! Exact Euclidean distance transform via the two-pass parabola-envelope
//! method: one 1d transform down the columns, one across the rows. Squared
//! distances are integers, so results are exact in f64.

const BIG: f64 = 1e20;

/// 1d squared distance transform of a sampled cost function.
fn dt1d(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n == 0 {
        return d;
    }
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let intersect = |q: usize, p: usize| -> f64 {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
    };
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s = intersect(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = intersect(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let dq = q as f64 - v[k] as f64;
        *out = dq * dq + f[v[k]];
    }
    d
}

/// Squared Euclidean distance from every pixel to the nearest `true` pixel.
///
/// An all-`false` mask has no nearest pixel; by convention the result is all
/// zeros then, which keeps downstream distance weighting inert.
pub fn squared_edt(mask: &[bool], h: usize, w: usize) -> Vec<f64> {
    assert_eq!(mask.len(), h * w, "mask length must be h*w");
    if !mask.iter().any(|&m| m) {
        return vec![0.0; h * w];
    }
    let mut grid: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { BIG }).collect();
    let mut scratch = vec![0.0f64; h.max(w)];
    for x in 0..w {
        for y in 0..h {
            scratch[y] = grid[y * w + x];
        }
        let d = dt1d(&scratch[..h]);
        for y in 0..h {
            grid[y * w + x] = d[y];
        }
    }
    for y in 0..h {
        scratch[..w].copy_from_slice(&grid[y * w..(y + 1) * w]);
        let d = dt1d(&scratch[..w]);
        grid[y * w..(y + 1) * w].copy_from_slice(&d);
    }
    grid
}

/// Euclidean distance to the nearest `true` pixel; zeros for an empty mask.
pub fn edt(mask: &[bool], h: usize, w: usize) -> Vec<f64> {
    let mut d = squared_edt(mask, h, w);
    for v in &mut d {
        *v = v.sqrt();
    }
    d
}

/// Quadratic-time reference transform, kept for oracle tests.
pub fn squared_edt_bruteforce(mask: &[bool], h: usize, w: usize) -> Vec<f64> {
    assert_eq!(mask.len(), h * w);
    if !mask.iter().any(|&m| m) {
        return vec![0.0; h * w];
    }
    let seeds: Vec<(isize, isize)> = (0..h as isize)
        .flat_map(|y| (0..w as isize).map(move |x| (y, x)))
        .filter(|&(y, x)| mask[y as usize * w + x as usize])
        .collect();
    (0..h as isize)
        .flat_map(|y| {
            let seeds = &seeds;
            (0..w as isize).map(move |x| {
                seeds
                    .iter()
                    .map(|&(sy, sx)| ((y - sy) * (y - sy) + (x - sx) * (x - sx)) as f64)
                    .fold(f64::INFINITY, f64::min)
            })
        })
        .collect()
}
