//! Fuse model outputs by probability averaging and by per-region STAPLE.

use brats_toolkit::fusion::{average_fusion, staple_binary, staple_fusion, StapleParams};
use brats_toolkit::phantom::{default_shells, generate_phantom, LesionSpec, Perturbation, PhantomSpec};
use brats_toolkit::regions::extract_region;
use brats_toolkit::{Geometry, Region, RegionProbVolume};

fn main() -> brats_toolkit::Result<()> {
    let g = Geometry::isotropic([4, 1, 1])?;
    let a = RegionProbVolume::new(g.clone(), [vec![0.9, 0.7, 0.4, 0.1], vec![0.8, 0.2, 0.1, 0.0], vec![0.6, 0.1, 0.0, 0.0]])?;
    let b = RegionProbVolume::new(g, [vec![0.8, 0.5, 0.7, 0.0], vec![0.6, 0.4, 0.2, 0.0], vec![0.3, 0.3, 0.0, 0.0]])?;
    let (mean, labels) = average_fusion(&[a, b])?;
    println!("mean WT probabilities {:?} -> labels {:?}", mean.channel(Region::Wt), labels.voxels());

    // three "raters": one perturbed phantom per seed around the same truth
    let mut raters = Vec::new();
    for (seed, p) in [(1, Perturbation::Jitter(40)), (2, Perturbation::Erode(1)), (3, Perturbation::Shift([1, 0, 0]))] {
        let spec = PhantomSpec {
            dims: [32, 32, 32],
            spacing: [1.0; 3],
            lesions: vec![LesionSpec { center: [16, 16, 16], radii: [8.0; 3], shells: default_shells() }],
            perturbation: p,
            seed,
        };
        raters.push(generate_phantom(&spec)?.1);
    }
    let fused = staple_fusion(&raters, &StapleParams::default())?;
    let wt: Vec<_> = raters.iter().map(|r| extract_region(r, Region::Wt)).collect();
    let detail = staple_binary(&wt, &StapleParams::default())?;
    println!("STAPLE WT: {} iterations, converged {}", detail.iterations_run, detail.converged);
    for (k, p) in detail.rater_performance.iter().enumerate() {
        println!("    rater {k}: sensitivity {:.3} specificity {:.5}", p.sensitivity, p.specificity);
    }
    let counts: Vec<usize> = wt.iter().map(|m| m.count()).collect();
    println!("rater WT voxels {counts:?}, fused WT voxels {}", extract_region(&fused, Region::Wt).count());
    Ok(())
}
