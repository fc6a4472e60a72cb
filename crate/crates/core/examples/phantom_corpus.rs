//! Describe phantoms in TOML and write them out as gt/pred pairs.

use brats_toolkit::nifti::read_label;
use brats_toolkit::phantom::PhantomDocument;

const DOC: &str = r#"
[[phantom]]
case_id = "shifted"
dims = [32, 32, 24]
spacing = [1.0, 1.0, 2.0]
perturbation = { shift = [2, 0, 0] }

[[phantom.lesions]]
center = [16, 16, 12]
radii = [6.0, 6.0, 4.0]

[[phantom]]
case_id = "false-positive"
dims = [32, 32, 24]
perturbation = { add_fp = { center = [26, 26, 6], radius = 2.0, label = 3 } }

[[phantom.lesions]]
center = [10, 10, 12]
radii = [5.0, 5.0, 5.0]
"#;

fn main() -> brats_toolkit::Result<()> {
    let doc = PhantomDocument::parse(DOC)?;
    let dir = tempfile::tempdir()?;
    doc.write_corpus(dir.path())?;
    for p in &doc.phantom {
        let gt = read_label(dir.path().join("gt").join(format!("{}.nii", p.case_id)))?.volume;
        let pred = read_label(dir.path().join("pred").join(format!("{}.nii", p.case_id)))?.volume;
        println!("{}: gt {} tumour voxels, pred {}", p.case_id, gt.count_nonzero(), pred.count_nonzero());
    }
    Ok(())
}
