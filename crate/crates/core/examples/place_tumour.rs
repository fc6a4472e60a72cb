//! Drop a tumour label into healthy brain at a seeded random position.

use brats_toolkit::regions::BinaryMask;
use brats_toolkit::synthprep::{place_label, DEFAULT_MAX_ATTEMPTS};
use brats_toolkit::{Geometry, LabelVolume};

fn main() -> brats_toolkit::Result<()> {
    let g = Geometry::isotropic([64, 64, 48])?;
    let mut brain = BinaryMask::empty(g.clone());
    for z in 6..42 {
        for y in 8..56 {
            for x in 8..56 {
                brain.set(x, y, z, true);
            }
        }
    }
    let target = LabelVolume::zeros(g);
    let mut candidate = LabelVolume::zeros(Geometry::isotropic([10, 10, 10])?);
    for z in 2..8 {
        for y in 2..8 {
            for x in 2..8 {
                candidate.set(x, y, z, if (3..7).contains(&x) && (3..7).contains(&y) { 1 } else { 2 });
            }
        }
    }
    for seed in 0..3 {
        let p = place_label(&target, &brain, &candidate, seed, DEFAULT_MAX_ATTEMPTS)?;
        println!("seed {seed}: origin {:?} after {} attempt(s), {} tumour voxels", p.crop_origin, p.attempts, p.placed.count_nonzero());
    }
    Ok(())
}
