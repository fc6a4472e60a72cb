//! Remove small predicted components region by region, then apply the legacy
//! ET-to-NCR rule.

use brats_toolkit::morphology::Connectivity;
use brats_toolkit::postprocess::{apply_thresholds, legacy_et_to_ncr, ThresholdSpec, LEGACY_ET_THRESHOLD};
use brats_toolkit::regions::{extract_region, ED, ET};
use brats_toolkit::{Geometry, LabelVolume, Region};

fn block(v: &mut LabelVolume, lo: [usize; 3], size: [usize; 3], label: u8) {
    for z in lo[2]..lo[2] + size[2] {
        for y in lo[1]..lo[1] + size[1] {
            for x in lo[0]..lo[0] + size[0] {
                v.set(x, y, z, label);
            }
        }
    }
}

fn main() -> brats_toolkit::Result<()> {
    let mut pred = LabelVolume::zeros(Geometry::isotropic([48, 32, 32])?);
    block(&mut pred, [2, 2, 2], [12, 12, 12], ED); // 1728 voxels
    block(&mut pred, [5, 5, 5], [6, 6, 6], ET); // 216 voxels of ET inside
    block(&mut pred, [30, 2, 2], [4, 4, 4], ET); // 64-voxel stray blob

    let spec = ThresholdSpec::per_component(250, 150, 100);
    let cleaned = apply_thresholds(&pred, &spec, Connectivity::Full26);
    for region in Region::ALL {
        println!(
            "{region}: {} -> {} voxels",
            extract_region(&pred, region).count(),
            extract_region(&cleaned, region).count()
        );
    }
    let legacy = legacy_et_to_ncr(&cleaned, LEGACY_ET_THRESHOLD);
    println!("ET voxels after legacy rule (threshold {LEGACY_ET_THRESHOLD}): {}", extract_region(&legacy, Region::Et).count());
    Ok(())
}
