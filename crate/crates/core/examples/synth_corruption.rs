//! Crop 96³ around a tumour, build the replacement-probability field and
//! corrupt the crop with seeded noise.

use brats_toolkit::phantom::{default_shells, generate_phantom, LesionSpec, PhantomSpec};
use brats_toolkit::synthprep::{build_corruption_field, corrupt_crop_detailed, crop_labels, crop_scalar,
    tumour_geometry, CROP_SIZE};
use brats_toolkit::ScalarVolume;

fn main() -> brats_toolkit::Result<()> {
    let spec = PhantomSpec {
        dims: [160, 160, 120],
        lesions: vec![LesionSpec { center: [70, 90, 60], radii: [14.0, 10.0, 8.0], shells: default_shells() }],
        ..PhantomSpec::random(0, [160, 160, 120])
    };
    let (labels, _) = generate_phantom(&spec)?;
    let g = labels.geometry().clone();
    let image = ScalarVolume::new(g.clone(), (0..g.len()).map(|i| ((i * 7919) % 1000) as f32).collect())?;

    let tumour = tumour_geometry(&labels)?;
    println!("tumour centre {:?}, largest extent {} voxels", tumour.center, tumour.max_size);
    let image_crop = crop_scalar(&image, tumour.center, CROP_SIZE)?;
    let label_crop = crop_labels(&labels, tumour.center, CROP_SIZE)?;
    let field = build_corruption_field(&tumour, image_crop.geometry())?;
    println!("decay exponent {:.4}", field.exponent);
    for r in [0, 10, 20, 30, 47] {
        println!("    p(replace) at distance {r:>2}: {:.4}", field.get(48 + r, 48, 48));
    }
    let out = corrupt_crop_detailed(&image_crop, &label_crop, &field, 42)?;
    println!("replaced {} of {} voxels", out.replaced.count(), out.replaced.bits().len());
    Ok(())
}
