//! Write label, scalar and probability volumes, read them back, and show the
//! legacy label-4 remap.

use brats_toolkit::nifti::{decode_label, encode_label, read_label, read_region_prob, read_scalar, write_label,
    write_region_prob, write_scalar, VOX_OFFSET};
use brats_toolkit::{Geometry, LabelVolume, RegionProbVolume, ScalarVolume};

fn main() -> brats_toolkit::Result<()> {
    let dir = tempfile::tempdir()?;
    let g = Geometry::new([4, 3, 2], [1.0, 1.0, 2.5])?;

    let labels = LabelVolume::new(g.clone(), (0..24).map(|i| (i % 4) as u8).collect())?;
    write_label(&labels, dir.path().join("seg.nii"))?;
    let back = read_label(dir.path().join("seg.nii"))?;
    println!("labels equal after round trip: {}", back.volume == labels);

    let image = ScalarVolume::new(g.clone(), (0..24).map(|i| i as f32 * 0.5).collect())?;
    write_scalar(&image, dir.path().join("t1.nii"))?;
    println!("spacing read back: {:?}", read_scalar(dir.path().join("t1.nii"))?.geometry().spacing());

    let probs = RegionProbVolume::new(g.clone(), [vec![0.9; 24], vec![0.6; 24], vec![0.2; 24]])?;
    write_region_prob(&probs, dir.path().join("probs.nii"))?;
    println!("probabilities equal: {}", read_region_prob(dir.path().join("probs.nii"))? == probs);

    // older label maps mark enhancing tumour with 4
    let mut bytes = encode_label(&labels);
    bytes[VOX_OFFSET + 3] = 4;
    let read = decode_label(&bytes)?;
    println!("legacy voxels remapped to 3: {}", read.remapped);
    Ok(())
}
