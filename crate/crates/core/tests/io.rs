mod common;

use brats_toolkit::nifti::{
    decode_label, decode_region_prob, decode_scalar, encode_label, encode_region_prob, encode_scalar, read_label,
    read_scalar, write_label, write_scalar, VOX_OFFSET,
};
use brats_toolkit::{Error, Geometry, LabelVolume, RegionProbVolume, ScalarVolume};
use common::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_geometry(r: &mut ChaCha8Rng) -> Geometry {
    let dims = [r.random_range(1..20), r.random_range(1..20), r.random_range(1..12)];
    let spacing = [r.random_range(0.3..4.0f32), r.random_range(0.3..4.0f32), r.random_range(0.3..6.0f32)];
    Geometry::new(dims, spacing).unwrap()
}

#[test]
fn random_labels_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(10);
    for k in 0..20 {
        let g = random_geometry(&mut r);
        let v = LabelVolume::new(g.clone(), (0..g.len()).map(|_| r.random_range(0..=3)).collect()).unwrap();
        let path = dir.path().join(format!("{k}.nii"));
        write_label(&v, &path).unwrap();
        let back = read_label(&path).unwrap();
        assert_eq!(back.remapped, 0);
        assert_eq!(back.volume, v);
        assert_eq!(std::fs::read(&path).unwrap(), encode_label(&back.volume));
    }
}

#[test]
fn random_scalars_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(11);
    for k in 0..20 {
        let g = random_geometry(&mut r);
        let voxels: Vec<f32> = (0..g.len()).map(|_| f32::from_bits(r.random::<u32>() & 0x7f7f_ffff)).collect();
        let v = ScalarVolume::new(g, voxels).unwrap();
        let path = dir.path().join(format!("{k}.nii"));
        write_scalar(&v, &path).unwrap();
        let back = read_scalar(&path).unwrap();
        let same = back.voxels().iter().zip(v.voxels()).all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same);
        assert_eq!(back.geometry(), v.geometry());
    }
}

#[test]
fn region_probabilities_keep_channel_order() {
    let g = Geometry::isotropic([3, 2, 2]).unwrap();
    let channels = [vec![0.9f32; 12], vec![0.5; 12], vec![0.1; 12]];
    let v = RegionProbVolume::new(g, channels).unwrap();
    let bytes = encode_region_prob(&v).unwrap();
    assert_eq!(bytes.len(), VOX_OFFSET + 36 * 4);
    // WT channel comes first in the payload
    assert_eq!(&bytes[VOX_OFFSET..VOX_OFFSET + 4], &0.9f32.to_le_bytes());
    assert_eq!(decode_region_prob(&bytes).unwrap(), v);
}

#[test]
fn legacy_four_is_counted_and_remapped() {
    let g = Geometry::isotropic([4, 1, 1]).unwrap();
    let mut bytes = encode_label(&LabelVolume::new(g, vec![0, 1, 2, 3]).unwrap());
    bytes[VOX_OFFSET + 3] = 4;
    bytes[VOX_OFFSET + 1] = 4;
    let read = decode_label(&bytes).unwrap();
    assert_eq!(read.remapped, 2);
    assert_eq!(read.volume.voxels(), &[0, 3, 2, 3]);
}

#[test]
fn wrong_datatype_is_reported() {
    let g = Geometry::isotropic([2, 2, 2]).unwrap();
    let label = encode_label(&LabelVolume::zeros(g.clone()));
    assert!(matches!(decode_scalar(&label), Err(Error::UnsupportedDatatype { .. })));
    let scalar = encode_scalar(&ScalarVolume::filled(g, 1.0)).unwrap();
    assert!(matches!(decode_label(&scalar), Err(Error::UnsupportedDatatype { .. })));
}

#[test]
fn truncated_payload_is_a_format_error() {
    let g = Geometry::isotropic([4, 4, 4]).unwrap();
    let bytes = encode_label(&LabelVolume::zeros(g));
    for cut in [0, 100, 347, VOX_OFFSET + 10] {
        assert!(matches!(decode_label(&bytes[..cut]), Err(Error::Format { .. })), "cut {cut}");
    }
}

#[test]
fn compressed_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.nii.gz");
    std::fs::write(&p, [0x1f, 0x8b, 8, 0, 0, 0]).unwrap();
    match read_label(&p) {
        Err(Error::CompressedInput(path)) => assert_eq!(path, p),
        other => panic!("unexpected {other:?}"),
    }
}
