//! Brute-force reference implementations shared by the integration tests.
//!
//! Nothing here calls into the library's algorithms; the oracles only use the
//! public data types to read and build volumes.

#![allow(dead_code)]

use std::collections::BTreeMap;

use brats_toolkit::morphology::Connectivity;
use brats_toolkit::regions::{BinaryMask, Region};
use brats_toolkit::{Geometry, LabelVolume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PENALTY: f64 = 374.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn coords(dims: [usize; 3], i: usize) -> [usize; 3] {
    [i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1])]
}

pub fn region_bits(labels: &LabelVolume, region: Region) -> Vec<bool> {
    let want: &[u8] = match region {
        Region::Wt => &[1, 2, 3],
        Region::Tc => &[1, 3],
        Region::Et => &[3],
    };
    labels.voxels().iter().map(|v| want.contains(v)).collect()
}

pub fn random_mask(rng: &mut ChaCha8Rng, g: &Geometry, p: f64) -> BinaryMask {
    BinaryMask::new(g.clone(), (0..g.len()).map(|_| rng.random_bool(p)).collect()).unwrap()
}

/// A random label volume built from a few overlapping boxes, so regions
/// have some structure rather than salt-and-pepper noise.
pub fn random_labels(rng: &mut ChaCha8Rng, g: &Geometry, boxes: usize) -> LabelVolume {
    let d = g.dims();
    let mut v = LabelVolume::zeros(g.clone());
    for _ in 0..boxes {
        let lo = d.map(|n| rng.random_range(0..n));
        let hi = [0, 1, 2].map(|a| (lo[a] + rng.random_range(0..=d[a] / 3)).min(d[a] - 1));
        let label = rng.random_range(1..=3u8);
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    v.set(x, y, z, label);
                }
            }
        }
    }
    v
}

fn adjacent(a: [usize; 3], b: [usize; 3], conn: Connectivity) -> bool {
    let d: Vec<usize> = (0..3).map(|k| a[k].abs_diff(b[k])).collect();
    if d.iter().any(|&x| x > 1) || d.iter().all(|&x| x == 0) {
        return false;
    }
    match conn {
        Connectivity::Face6 => d.iter().sum::<usize>() == 1,
        Connectivity::Full26 => true,
    }
}

/// Component labels by union-find over all voxel pairs, relabelled in order
/// of first appearance.
pub fn components_oracle(bits: &[bool], dims: [usize; 3], conn: Connectivity) -> Vec<u32> {
    let on: Vec<usize> = (0..bits.len()).filter(|&i| bits[i]).collect();
    let mut parent: Vec<usize> = (0..on.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..on.len() {
        for j in i + 1..on.len() {
            if adjacent(coords(dims, on[i]), coords(dims, on[j]), conn) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut out = vec![0u32; bits.len()];
    let mut names: BTreeMap<usize, u32> = BTreeMap::new();
    for (k, &i) in on.iter().enumerate() {
        let root = find(&mut parent, k);
        let n = names.len() as u32 + 1;
        out[i] = *names.entry(root).or_insert(n);
    }
    out
}

/// Set voxels with a face neighbour that is unset or off the grid.
pub fn surface_oracle(bits: &[bool], dims: [usize; 3]) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..bits.len() {
        if !bits[i] {
            continue;
        }
        let c = coords(dims, i);
        let mut boundary = false;
        for a in 0..3 {
            for s in [-1isize, 1] {
                let n = c[a] as isize + s;
                if n < 0 || n >= dims[a] as isize {
                    boundary = true;
                } else {
                    let mut m = c;
                    m[a] = n as usize;
                    if !bits[m[0] + dims[0] * (m[1] + dims[1] * m[2])] {
                        boundary = true;
                    }
                }
            }
        }
        if boundary {
            out.push(i);
        }
    }
    out
}

pub fn dist(dims: [usize; 3], a: usize, b: usize, spacing: [f64; 3]) -> f64 {
    let (p, q) = (coords(dims, a), coords(dims, b));
    (0..3)
        .map(|k| {
            let d = (p[k] as f64 - q[k] as f64) * spacing[k];
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Distance from every voxel to the nearest set voxel, by exhaustive search.
pub fn edt_oracle(bits: &[bool], dims: [usize; 3], spacing: [f64; 3]) -> Vec<f64> {
    let on: Vec<usize> = (0..bits.len()).filter(|&i| bits[i]).collect();
    (0..bits.len())
        .map(|i| on.iter().map(|&j| dist(dims, i, j, spacing)).fold(f64::INFINITY, f64::min))
        .collect()
}

/// numpy-style linear interpolation percentile.
pub fn percentile_oracle(mut v: Vec<f64>, q: f64) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() - 1) as f64 * q / 100.0;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    v[lo] * (1.0 - (h - lo as f64)) + v[hi] * (h - lo as f64)
}

pub fn dice_oracle(a: &[bool], b: &[bool]) -> f64 {
    let na = a.iter().filter(|&&x| x).count();
    let nb = b.iter().filter(|&&x| x).count();
    let both = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    if na + nb == 0 {
        1.0
    } else {
        2.0 * both as f64 / (na + nb) as f64
    }
}

/// All-pairs surface distances, 95th percentile in each direction, max of
/// the two.
pub fn hd95_oracle(a: &[bool], b: &[bool], dims: [usize; 3], spacing: [f64; 3]) -> f64 {
    let (ea, eb) = (!a.contains(&true), !b.contains(&true));
    if ea && eb {
        return 0.0;
    }
    if ea || eb {
        return PENALTY;
    }
    let sa = surface_oracle(a, dims);
    let sb = surface_oracle(b, dims);
    let directed = |from: &[usize], to: &[usize]| {
        let d: Vec<f64> = from
            .iter()
            .map(|&i| to.iter().map(|&j| dist(dims, i, j, spacing)).fold(f64::INFINITY, f64::min))
            .collect();
        percentile_oracle(d, 95.0)
    };
    directed(&sa, &sb).max(directed(&sb, &sa))
}

/// Lesion-wise score for one region: dilation is replaced by a Chebyshev
/// (26-connected) or Manhattan (6-connected) ball test.
pub fn lesionwise_oracle(
    gt: &[bool],
    pred: &[bool],
    dims: [usize; 3],
    spacing: [f64; 3],
    iters: usize,
    conn: Connectivity,
) -> (f64, f64, [usize; 3]) {
    let gl = components_oracle(gt, dims, conn);
    let pl = components_oracle(pred, dims, conn);
    let ng = gl.iter().copied().max().unwrap_or(0) as usize;
    let np = pl.iter().copied().max().unwrap_or(0) as usize;
    let within = |a: usize, b: usize| {
        let (p, q) = (coords(dims, a), coords(dims, b));
        let d: Vec<usize> = (0..3).map(|k| p[k].abs_diff(q[k])).collect();
        match conn {
            Connectivity::Full26 => *d.iter().max().unwrap() <= iters,
            Connectivity::Face6 => d.iter().sum::<usize>() <= iters,
        }
    };
    let gt_vox: Vec<Vec<usize>> = (1..=ng).map(|g| (0..gt.len()).filter(|&i| gl[i] == g as u32).collect()).collect();
    let pred_vox: Vec<Vec<usize>> = (1..=np).map(|p| (0..pred.len()).filter(|&i| pl[i] == p as u32).collect()).collect();
    // owner[p] = gt lesion whose dilation covers most of p; ties to lower id
    let mut owner = vec![None; np];
    for p in 0..np {
        let mut best = 0usize;
        for g in 0..ng {
            let n = pred_vox[p].iter().filter(|&&i| gt_vox[g].iter().any(|&j| within(i, j))).count();
            if n > best {
                best = n;
                owner[p] = Some(g);
            }
        }
    }
    let mut terms: Vec<(f64, f64)> = Vec::new();
    let mut matched = 0;
    for g in 0..ng {
        let mut union = vec![false; pred.len()];
        let mut any = false;
        for p in 0..np {
            if owner[p] == Some(g) {
                any = true;
                for &i in &pred_vox[p] {
                    union[i] = true;
                }
            }
        }
        if any {
            matched += 1;
            let mut gmask = vec![false; gt.len()];
            for &i in &gt_vox[g] {
                gmask[i] = true;
            }
            terms.push((dice_oracle(&gmask, &union), hd95_oracle(&gmask, &union, dims, spacing)));
        } else {
            terms.push((0.0, PENALTY));
        }
    }
    let fp = owner.iter().filter(|o| o.is_none()).count();
    for _ in 0..fp {
        terms.push((0.0, PENALTY));
    }
    let fn_ = ng - matched;
    if terms.is_empty() {
        return (1.0, 0.0, [0, 0, 0]);
    }
    let n = terms.len() as f64;
    (
        terms.iter().map(|t| t.0).sum::<f64>() / n,
        terms.iter().map(|t| t.1).sum::<f64>() / n,
        [matched, fp, fn_],
    )
}

/// Voxel-by-voxel STAPLE in the linear domain.
pub struct StapleOracle {
    pub posterior: Vec<f64>,
    pub sens: Vec<f64>,
    pub spec: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn staple_oracle(raters: &[Vec<bool>], max_iters: usize, tol: f64, init: f64) -> StapleOracle {
    let r = raters.len();
    let n = raters[0].len();
    let prior: Vec<f64> = (0..n)
        .map(|i| raters.iter().filter(|m| m[i]).count() as f64 / r as f64)
        .collect();
    let mut sens = vec![init; r];
    let mut spec = vec![init; r];
    let e_step = |sens: &[f64], spec: &[f64]| -> Vec<f64> {
        let c = |v: f64| v.clamp(1e-12, 1.0 - 1e-12);
        (0..n)
            .map(|i| {
                let mut a = prior[i];
                let mut b = 1.0 - prior[i];
                for j in 0..r {
                    if raters[j][i] {
                        a *= c(sens[j]);
                        b *= 1.0 - c(spec[j]);
                    } else {
                        a *= 1.0 - c(sens[j]);
                        b *= c(spec[j]);
                    }
                }
                if a + b == 0.0 {
                    0.0
                } else {
                    a / (a + b)
                }
            })
            .collect()
    };
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let w = e_step(&sens, &spec);
        let fg: f64 = w.iter().sum();
        let bg: f64 = w.iter().map(|x| 1.0 - x).sum();
        let mut change: f64 = 0.0;
        for j in 0..r {
            let tp: f64 = (0..n).filter(|&i| raters[j][i]).map(|i| w[i]).sum();
            let tn: f64 = (0..n).filter(|&i| !raters[j][i]).map(|i| 1.0 - w[i]).sum();
            let s = if fg > 0.0 { tp / fg } else { sens[j] };
            let q = if bg > 0.0 { tn / bg } else { spec[j] };
            change = change.max((s - sens[j]).abs()).max((q - spec[j]).abs());
            sens[j] = s;
            spec[j] = q;
        }
        if change < tol {
            converged = true;
            break;
        }
    }
    StapleOracle { posterior: e_step(&sens, &spec), sens, spec, iterations, converged }
}

/// Rank of every solution for one key: 1 + strictly better + half the ties.
pub fn ranks_oracle(values: &[f64], higher_is_better: bool) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut better = 0.0;
            let mut tied = 0.0;
            for (j, &w) in values.iter().enumerate() {
                if i == j {
                    continue;
                }
                if w == v {
                    tied += 1.0;
                } else if (w > v) == higher_is_better {
                    better += 1.0;
                }
            }
            1.0 + better + tied / 2.0
        })
        .collect()
}
