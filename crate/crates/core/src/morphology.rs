//! Binary-mask primitives on 3D grids.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::regions::BinaryMask;
use crate::volume::{Geometry, ScalarVolume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Connectivity {
    /// Face neighbours only.
    Face6,
    /// Face, edge and corner neighbours.
    #[default]
    Full26,
}

impl Connectivity {
    pub fn offsets(self) -> Vec<[isize; 3]> {
        let mut out = Vec::with_capacity(26);
        for dz in -1isize..=1 {
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let l1 = dx.abs() + dy.abs() + dz.abs();
                    let keep = match self {
                        Connectivity::Face6 => l1 == 1,
                        Connectivity::Full26 => l1 >= 1,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

impl std::str::FromStr for Connectivity {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "6" | "face6" | "face" => Ok(Connectivity::Face6),
            "26" | "full26" | "full" => Ok(Connectivity::Full26),
            other => Err(crate::Error::Validation(format!("unknown connectivity '{other}'"))),
        }
    }
}

#[inline]
fn step(c: [usize; 3], o: [isize; 3], dims: [usize; 3]) -> Option<[usize; 3]> {
    let mut n = [0usize; 3];
    for a in 0..3 {
        let v = c[a] as isize + o[a];
        if v < 0 || v >= dims[a] as isize {
            return None;
        }
        n[a] = v as usize;
    }
    Some(n)
}

/// Connected-component labelling result. Ids start at 1 in first-encounter
/// scan order; 0 is background.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentMap {
    geometry: Geometry,
    ids: Vec<u32>,
    sizes: Vec<usize>,
}

impl ComponentMap {
    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Voxel count of component `id` (1-based).
    pub fn size(&self, id: u32) -> usize {
        self.sizes[id as usize - 1]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Ascending linear indices of every component, indexed by `id - 1`.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (i, &id) in self.ids.iter().enumerate() {
            if id != 0 {
                out[id as usize - 1].push(i);
            }
        }
        out
    }

    pub fn mask_of(&self, id: u32) -> BinaryMask {
        let bits = self.ids.iter().map(|&v| v == id).collect();
        BinaryMask::new(self.geometry.clone(), bits).expect("same geometry")
    }
}

pub fn connected_components(mask: &BinaryMask, conn: Connectivity) -> ComponentMap {
    let g = mask.geometry();
    let dims = g.dims();
    let bits = mask.bits();
    let offsets = conn.offsets();
    let mut ids = vec![0u32; bits.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..bits.len() {
        if !bits[start] || ids[start] != 0 {
            continue;
        }
        let id = sizes.len() as u32 + 1;
        ids[start] = id;
        queue.push_back(start);
        let mut size = 0usize;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let c = g.coords(i);
            for &o in &offsets {
                if let Some(n) = step(c, o, dims) {
                    let j = g.index(n[0], n[1], n[2]);
                    if bits[j] && ids[j] == 0 {
                        ids[j] = id;
                        queue.push_back(j);
                    }
                }
            }
        }
        sizes.push(size);
    }
    ComponentMap {
        geometry: g.clone(),
        ids,
        sizes,
    }
}

/// Mask voxels with at least one face neighbour that is false or outside the
/// grid.
pub fn surface_voxels(mask: &BinaryMask) -> BinaryMask {
    let g = mask.geometry();
    let dims = g.dims();
    let bits = mask.bits();
    let offsets = Connectivity::Face6.offsets();
    let out = (0..bits.len())
        .map(|i| {
            bits[i]
                && offsets.iter().any(|&o| match step(g.coords(i), o, dims) {
                    None => true,
                    Some(n) => !bits[g.index(n[0], n[1], n[2])],
                })
        })
        .collect();
    BinaryMask::new(g.clone(), out).expect("same geometry")
}

/// Exact Euclidean distance (mm) from every voxel centre to the nearest true
/// voxel centre. An all-false mask gives `f32::INFINITY` everywhere.
pub fn euclidean_dt(mask: &BinaryMask, spacing: [f64; 3]) -> ScalarVolume {
    let sq = squared_edt(mask.bits(), mask.geometry().dims(), spacing);
    let voxels = sq.into_iter().map(|d| d.sqrt() as f32).collect();
    ScalarVolume::new(mask.geometry().clone(), voxels).expect("same geometry")
}

/// Squared distances in f64, same layout as the input.
pub fn squared_edt(bits: &[bool], dims: [usize; 3], spacing: [f64; 3]) -> Vec<f64> {
    let [nx, ny, nz] = dims;
    assert_eq!(bits.len(), nx * ny * nz);
    let mut d: Vec<f64> = bits.iter().map(|&b| if b { 0.0 } else { f64::INFINITY }).collect();

    // X lines are contiguous.
    let w = spacing[0] * spacing[0];
    d.par_chunks_mut(nx).for_each_init(
        || Scratch::new(nx),
        |s, line| s.transform(line, w),
    );

    // Y lines: one z-slab per task.
    let w = spacing[1] * spacing[1];
    d.par_chunks_mut(nx * ny).for_each_init(
        || (Scratch::new(ny), vec![0.0; ny]),
        |(s, buf), slab| {
            for x in 0..nx {
                for y in 0..ny {
                    buf[y] = slab[x + nx * y];
                }
                s.transform(buf, w);
                for y in 0..ny {
                    slab[x + nx * y] = buf[y];
                }
            }
        },
    );

    // Z lines: gather per (x, y) column, then scatter.
    if nz > 1 {
        let w = spacing[2] * spacing[2];
        let plane = nx * ny;
        let columns: Vec<Vec<f64>> = (0..plane)
            .into_par_iter()
            .map_init(
                || Scratch::new(nz),
                |s, p| {
                    let mut col: Vec<f64> = (0..nz).map(|z| d[p + plane * z]).collect();
                    s.transform(&mut col, w);
                    col
                },
            )
            .collect();
        for (p, col) in columns.into_iter().enumerate() {
            for (z, v) in col.into_iter().enumerate() {
                d[p + plane * z] = v;
            }
        }
    }
    d
}

/// Lower envelope of parabolas for one scan line.
struct Scratch {
    v: Vec<usize>,
    z: Vec<f64>,
    out: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            v: vec![0; n],
            z: vec![0.0; n + 1],
            out: vec![0.0; n],
        }
    }

    /// In place: f[q] <- min_p f[p] + w * (q - p)^2.
    fn transform(&mut self, f: &mut [f64], w: f64) {
        let n = f.len();
        if n <= 1 {
            return;
        }
        let mut k: isize = -1;
        for q in 0..n {
            if !f[q].is_finite() {
                continue;
            }
            let fq = f[q] + w * (q * q) as f64;
            loop {
                if k < 0 {
                    break;
                }
                let p = self.v[k as usize];
                let fp = f[p] + w * (p * p) as f64;
                let s = (fq - fp) / (2.0 * w * (q - p) as f64);
                if s <= self.z[k as usize] {
                    k -= 1;
                } else {
                    break;
                }
            }
            k += 1;
            let ku = k as usize;
            self.v[ku] = q;
            self.z[ku] = if ku == 0 {
                f64::NEG_INFINITY
            } else {
                let p = self.v[ku - 1];
                let fp = f[p] + w * (p * p) as f64;
                (fq - fp) / (2.0 * w * (q - p) as f64)
            };
            self.z[ku + 1] = f64::INFINITY;
        }
        if k < 0 {
            return;
        }
        let mut j = 0usize;
        for q in 0..n {
            while self.z[j + 1] < q as f64 {
                j += 1;
            }
            let p = self.v[j];
            let dq = q as f64 - p as f64;
            self.out[q] = f[p] + w * dq * dq;
        }
        f.copy_from_slice(&self.out[..n]);
    }
}

/// Union of the mask with every voxel reachable in at most `iterations`
/// adjacency steps.
pub fn dilate(mask: &BinaryMask, iterations: usize, conn: Connectivity) -> BinaryMask {
    let g = mask.geometry();
    let mut bits = mask.bits().to_vec();
    dilate_bits(&mut bits, g.dims(), iterations, conn);
    BinaryMask::new(g.clone(), bits).expect("same geometry")
}

pub(crate) fn dilate_bits(bits: &mut [bool], dims: [usize; 3], iterations: usize, conn: Connectivity) {
    let offsets = conn.offsets();
    let [nx, ny, _] = dims;
    let mut frontier: Vec<usize> = bits
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect();
    for _ in 0..iterations {
        if frontier.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for &i in &frontier {
            let c = [i % nx, (i / nx) % ny, i / (nx * ny)];
            for &o in &offsets {
                if let Some(n) = step(c, o, dims) {
                    let j = n[0] + nx * (n[1] + ny * n[2]);
                    if !bits[j] {
                        bits[j] = true;
                        next.push(j);
                    }
                }
            }
        }
        frontier = next;
    }
}

/// Axis-aligned inclusive box of voxel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct BoundingBox {
    pub min: [usize; 3],
    pub max: [usize; 3],
}

impl BoundingBox {
    pub fn of_indices<'a>(g: &Geometry, indices: impl IntoIterator<Item = &'a usize>) -> Option<Self> {
        let mut it = indices.into_iter();
        let first = g.coords(*it.next()?);
        let mut b = BoundingBox { min: first, max: first };
        for &i in it {
            let c = g.coords(i);
            for a in 0..3 {
                b.min[a] = b.min[a].min(c[a]);
                b.max[a] = b.max[a].max(c[a]);
            }
        }
        Some(b)
    }

    pub fn union(self, other: Self) -> Self {
        let mut b = self;
        for a in 0..3 {
            b.min[a] = b.min[a].min(other.min[a]);
            b.max[a] = b.max[a].max(other.max[a]);
        }
        b
    }

    pub fn padded(self, pad: usize, dims: [usize; 3]) -> Self {
        let mut b = self;
        for a in 0..3 {
            b.min[a] = b.min[a].saturating_sub(pad);
            b.max[a] = (b.max[a] + pad).min(dims[a] - 1);
        }
        b
    }

    pub fn dims(&self) -> [usize; 3] {
        [0, 1, 2].map(|a| self.max[a] - self.min[a] + 1)
    }

    /// Maps a full-grid index into this box's local linear index.
    pub fn local(&self, g: &Geometry, idx: usize) -> usize {
        let c = g.coords(idx);
        let d = self.dims();
        (c[0] - self.min[0]) + d[0] * ((c[1] - self.min[1]) + d[1] * (c[2] - self.min[2]))
    }

    pub fn global(&self, g: &Geometry, local: usize) -> usize {
        let d = self.dims();
        let x = local % d[0] + self.min[0];
        let y = (local / d[0]) % d[1] + self.min[1];
        let z = local / (d[0] * d[1]) + self.min[2];
        g.index(x, y, z)
    }
}
