//! Synthetic ground-truth / prediction pairs built from nested ellipsoids.
//!
//! Each lesion is a stack of concentric ellipsoidal shells: by default an
//! edema rim, a necrotic ring and an enhancing core. The prediction is the
//! ground truth after one [`Perturbation`].

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::{dilate_bits, Connectivity};
use crate::regions::{ED, ET, NCR};
use crate::volume::{Geometry, LabelVolume};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub label: u8,
    /// Fraction of the lesion radii covered by this shell, in (0, 1].
    pub scale: f64,
}

pub fn default_shells() -> Vec<Shell> {
    vec![
        Shell { label: ED, scale: 1.0 },
        Shell { label: NCR, scale: 0.7 },
        Shell { label: ET, scale: 0.4 },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesionSpec {
    pub center: [usize; 3],
    pub radii: [f64; 3],
    /// Outermost first, scales strictly decreasing.
    #[serde(default = "default_shells")]
    pub shells: Vec<Shell>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    #[default]
    None,
    /// Translate every tumour voxel; voxels leaving the grid are dropped.
    Shift([isize; 3]),
    /// Face-connected erosion of the tumour mask.
    Erode(usize),
    /// Add a ball of `label` (overwriting whatever is there).
    AddFp { center: [usize; 3], radius: f64, label: u8 },
    /// Remove lesion `index` from the prediction.
    DropLesion(usize),
    /// Flip `voxels` random voxels on the tumour boundary, half removed from
    /// the tumour and half added just outside it. Uses `PhantomSpec::seed`.
    Jitter(usize),
}

fn default_spacing() -> [f32; 3] {
    [1.0; 3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    #[serde(default = "default_spacing")]
    pub spacing: [f32; 3],
    #[serde(default)]
    pub lesions: Vec<LesionSpec>,
    #[serde(default)]
    pub perturbation: Perturbation,
    #[serde(default)]
    pub seed: u64,
}

impl PhantomSpec {
    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::new(self.dims, self.spacing)
    }

    /// Random spec with 1-3 non-overlapping lesions and a random
    /// perturbation, for property tests and benchmark corpora.
    pub fn random(seed: u64, dims: [usize; 3]) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lesions: Vec<LesionSpec> = Vec::new();
        let want = rng.random_range(1..=3);
        let mut tries = 0;
        while lesions.len() < want && tries < 50 {
            tries += 1;
            let radii = [0; 3].map(|_| rng.random_range(1.0..=(dims.iter().min().unwrap() / 5) as f64 + 1.0));
            let center = [0, 1, 2].map(|a| {
                let r = radii[a].floor() as usize;
                rng.random_range(r..dims[a] - r)
            });
            let candidate = LesionSpec { center, radii, shells: default_shells() };
            // keep a one-voxel gap so lesions stay separate components
            let clear = lesions.iter().all(|l| {
                (0..3).any(|a| {
                    let gap = l.center[a].abs_diff(candidate.center[a]) as f64;
                    gap > l.radii[a] + candidate.radii[a] + 2.0
                })
            });
            if clear {
                lesions.push(candidate);
            }
        }
        let perturbation = match rng.random_range(0..6) {
            0 => Perturbation::None,
            1 => Perturbation::Shift([0; 3].map(|_| rng.random_range(-2i64..=2) as isize)),
            2 => Perturbation::Erode(1),
            3 => {
                let center = dims.map(|d| rng.random_range(1..d - 1));
                Perturbation::AddFp { center, radius: rng.random_range(0.5..2.5), label: rng.random_range(1..=3) }
            }
            4 => Perturbation::DropLesion(rng.random_range(0..lesions.len())),
            _ => Perturbation::Jitter(rng.random_range(1..20)),
        };
        Self {
            dims,
            spacing: [1.0; 3],
            lesions,
            perturbation,
            seed,
        }
    }
}

fn validate_lesion(l: &LesionSpec, dims: [usize; 3], k: usize) -> Result<()> {
    if l.shells.is_empty() {
        return Err(Error::Validation(format!("lesion {k} has no shells")));
    }
    for w in l.shells.windows(2) {
        if w[1].scale >= w[0].scale {
            return Err(Error::Validation(format!("lesion {k} shells are not nested")));
        }
    }
    for s in &l.shells {
        if !(s.scale > 0.0 && s.scale <= 1.0) || !(1..=3).contains(&s.label) {
            return Err(Error::Validation(format!("lesion {k} has an invalid shell {s:?}")));
        }
    }
    for a in 0..3 {
        if !(l.radii[a] > 0.0 && l.radii[a].is_finite()) {
            return Err(Error::Validation(format!("lesion {k} radius must be > 0")));
        }
        let reach = (l.radii[a] * l.shells[0].scale).floor() as usize;
        if l.center[a] < reach || l.center[a] + reach >= dims[a] {
            return Err(Error::Validation(format!("lesion {k} does not fit inside {dims:?}")));
        }
    }
    Ok(())
}

/// Label of the innermost shell containing `(x, y, z)`, if any.
fn shell_label(l: &LesionSpec, p: [usize; 3]) -> Option<u8> {
    let q: f64 = (0..3)
        .map(|a| {
            let d = (p[a] as f64 - l.center[a] as f64) / l.radii[a];
            d * d
        })
        .sum();
    l.shells.iter().rev().find(|s| q <= s.scale * s.scale).map(|s| s.label)
}

/// Ground truth plus a lesion-index map (`usize::MAX` for background).
fn render(spec: &PhantomSpec, g: &Geometry) -> Result<(Vec<u8>, Vec<usize>)> {
    let mut labels = vec![0u8; g.len()];
    let mut owner = vec![usize::MAX; g.len()];
    for (k, l) in spec.lesions.iter().enumerate() {
        validate_lesion(l, spec.dims, k)?;
        let reach = [0, 1, 2].map(|a| (l.radii[a] * l.shells[0].scale).floor() as usize);
        for z in l.center[2] - reach[2]..=l.center[2] + reach[2] {
            for y in l.center[1] - reach[1]..=l.center[1] + reach[1] {
                for x in l.center[0] - reach[0]..=l.center[0] + reach[0] {
                    if let Some(label) = shell_label(l, [x, y, z]) {
                        let i = g.index(x, y, z);
                        if owner[i] != usize::MAX {
                            return Err(Error::Validation(format!(
                                "lesions {} and {k} overlap at ({x}, {y}, {z})",
                                owner[i]
                            )));
                        }
                        owner[i] = k;
                        labels[i] = label;
                    }
                }
            }
        }
    }
    Ok((labels, owner))
}

pub fn generate_phantom(spec: &PhantomSpec) -> Result<(LabelVolume, LabelVolume)> {
    let g = spec.geometry()?;
    let (gt, owner) = render(spec, &g)?;
    let pred = perturb(&gt, &owner, spec, &g)?;
    Ok((LabelVolume::new(g.clone(), gt)?, LabelVolume::new(g, pred)?))
}

fn perturb(gt: &[u8], owner: &[usize], spec: &PhantomSpec, g: &Geometry) -> Result<Vec<u8>> {
    let dims = g.dims();
    Ok(match &spec.perturbation {
        Perturbation::None => gt.to_vec(),
        Perturbation::Shift(d) => {
            let mut out = vec![0u8; gt.len()];
            for (i, &v) in gt.iter().enumerate() {
                if v == 0 {
                    continue;
                }
                let c = g.coords(i);
                let n = [0, 1, 2].map(|a| c[a] as isize + d[a]);
                if (0..3).all(|a| n[a] >= 0 && n[a] < dims[a] as isize) {
                    out[g.index(n[0] as usize, n[1] as usize, n[2] as usize)] = v;
                }
            }
            out
        }
        Perturbation::Erode(n) => {
            let mut background: Vec<bool> = gt.iter().map(|&v| v == 0).collect();
            dilate_bits(&mut background, dims, *n, Connectivity::Face6);
            gt.iter()
                .zip(background)
                .map(|(&v, bg)| if bg { 0 } else { v })
                .collect()
        }
        Perturbation::AddFp { center, radius, label } => {
            if !(1..=3).contains(label) {
                return Err(Error::Validation(format!("false-positive label {label} must be 1-3")));
            }
            let mut out = gt.to_vec();
            for (i, v) in out.iter_mut().enumerate() {
                let c = g.coords(i);
                let d2: f64 = (0..3).map(|a| (c[a] as f64 - center[a] as f64).powi(2)).sum();
                if d2 <= radius * radius {
                    *v = *label;
                }
            }
            out
        }
        Perturbation::DropLesion(k) => {
            if *k >= spec.lesions.len() {
                return Err(Error::Validation(format!(
                    "cannot drop lesion {k}: spec has {}",
                    spec.lesions.len()
                )));
            }
            gt.iter()
                .zip(owner)
                .map(|(&v, &o)| if o == *k { 0 } else { v })
                .collect()
        }
        Perturbation::Jitter(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let offsets = Connectivity::Face6.offsets();
            let mut inner = Vec::new();
            let mut outer = Vec::new();
            for (i, &v) in gt.iter().enumerate() {
                let c = g.coords(i);
                let mut touches_other = None;
                for o in &offsets {
                    let n = [0, 1, 2].map(|a| c[a] as isize + o[a]);
                    if (0..3).all(|a| n[a] >= 0 && n[a] < dims[a] as isize) {
                        let w = gt[g.index(n[0] as usize, n[1] as usize, n[2] as usize)];
                        if (v == 0) != (w == 0) {
                            touches_other = Some(w);
                        }
                    }
                }
                match (v, touches_other) {
                    (0, Some(w)) => outer.push((i, w)),
                    (_, Some(_)) if v != 0 => inner.push(i),
                    _ => {}
                }
            }
            inner.shuffle(&mut rng);
            outer.shuffle(&mut rng);
            let mut out = gt.to_vec();
            let remove = n / 2;
            for &i in inner.iter().take(remove) {
                out[i] = 0;
            }
            for &(i, w) in outer.iter().take(n - remove) {
                out[i] = w;
            }
            out
        }
    })
}

/// A named phantom inside a [`PhantomDocument`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedPhantom {
    pub case_id: String,
    #[serde(flatten)]
    pub spec: PhantomSpec,
}

/// TOML document listing phantoms as `[[phantom]]` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomDocument {
    pub phantom: Vec<NamedPhantom>,
}

impl PhantomDocument {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Writes `<out>/gt/<case_id>.nii` and `<out>/pred/<case_id>.nii` for
    /// every phantom.
    pub fn write_corpus(&self, out: impl AsRef<Path>) -> Result<()> {
        let out = out.as_ref();
        std::fs::create_dir_all(out.join("gt"))?;
        std::fs::create_dir_all(out.join("pred"))?;
        for p in &self.phantom {
            let (gt, pred) = generate_phantom(&p.spec)?;
            let name = format!("{}.nii", p.case_id);
            crate::nifti::write_label(&gt, out.join("gt").join(&name))?;
            crate::nifti::write_label(&pred, out.join("pred").join(&name))?;
        }
        Ok(())
    }
}
