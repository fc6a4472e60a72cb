mod common;

use brats_toolkit::fusion::{staple_binary, StapleParams};
use brats_toolkit::metrics::{case_metrics_lesionwise, dice, hd95, MatchParams};
use brats_toolkit::morphology::{connected_components, dilate, euclidean_dt, surface_voxels, Connectivity};
use brats_toolkit::phantom::{generate_phantom, PhantomSpec};
use brats_toolkit::ranking::{average_ranks, rank_solutions, Metric, MetricTable};
use brats_toolkit::regions::{extract_region, BinaryMask, Region};
use brats_toolkit::Geometry;
use common::*;
use rand::Rng;

#[test]
fn components_match_union_find() {
    let mut r = rng(1);
    for trial in 0..40 {
        let g = Geometry::isotropic([7, 6, 5]).unwrap();
        let m = random_mask(&mut r, &g, 0.1 + 0.01 * trial as f64);
        for conn in [Connectivity::Face6, Connectivity::Full26] {
            let got = connected_components(&m, conn);
            assert_eq!(got.ids(), components_oracle(m.bits(), g.dims(), conn).as_slice());
        }
    }
}

#[test]
fn surface_matches_neighbour_scan() {
    let mut r = rng(2);
    for _ in 0..40 {
        let g = Geometry::isotropic([6, 7, 8]).unwrap();
        let m = random_mask(&mut r, &g, 0.5);
        assert_eq!(surface_voxels(&m).indices(), surface_oracle(m.bits(), g.dims()));
    }
}

#[test]
fn edt_matches_exhaustive_search_with_anisotropic_spacing() {
    let mut r = rng(3);
    let spacing = [1.0, 2.0, 3.0];
    for _ in 0..20 {
        let g = Geometry::new([8, 8, 8], [1.0, 2.0, 3.0]).unwrap();
        let m = random_mask(&mut r, &g, 0.03);
        if m.is_empty() {
            continue;
        }
        let got = euclidean_dt(&m, spacing);
        let want = edt_oracle(m.bits(), g.dims(), spacing);
        for (a, b) in got.voxels().iter().zip(&want) {
            assert!((f64::from(*a) - b).abs() < 1e-5 * b.max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn dilation_is_a_chebyshev_or_manhattan_ball() {
    let g = Geometry::isotropic([11, 11, 11]).unwrap();
    let mut m = BinaryMask::empty(g.clone());
    m.set(5, 5, 5, true);
    for k in 0..4 {
        let full = dilate(&m, k, Connectivity::Full26);
        let face = dilate(&m, k, Connectivity::Face6);
        for i in 0..g.len() {
            let c = coords(g.dims(), i);
            let d: Vec<usize> = c.iter().map(|v| v.abs_diff(5)).collect();
            assert_eq!(full.bits()[i], *d.iter().max().unwrap() <= k);
            assert_eq!(face.bits()[i], d.iter().sum::<usize>() <= k);
        }
    }
}

#[test]
fn dice_and_hd95_match_oracles_on_random_masks() {
    let mut r = rng(4);
    for _ in 0..60 {
        let dims = [r.random_range(3..12), r.random_range(3..12), r.random_range(3..12)];
        let spacing = [r.random_range(0.5..2.0f32), r.random_range(0.5..2.0f32), r.random_range(0.5..3.0f32)];
        let g = Geometry::new(dims, spacing).unwrap();
        let a = random_mask(&mut r, &g, 0.2);
        let b = random_mask(&mut r, &g, 0.2);
        let sp = g.spacing_f64();
        assert!((dice(&a, &b).unwrap() - dice_oracle(a.bits(), b.bits())).abs() < 1e-12);
        let want = hd95_oracle(a.bits(), b.bits(), dims, sp);
        assert!((hd95(&a, &b, sp).unwrap() - want).abs() < 1e-6);
    }
}

#[test]
fn lesionwise_matches_oracle_on_phantoms() {
    for seed in 0..30 {
        let mut spec = PhantomSpec::random(seed, [20, 18, 16]);
        spec.spacing = [1.0, 1.0, 1.5];
        let (gt, pred) = generate_phantom(&spec).unwrap();
        let sp = gt.geometry().spacing_f64();
        for conn in [Connectivity::Full26, Connectivity::Face6] {
            let params = MatchParams { connectivity: conn, ..Default::default() };
            let (m, _) = case_metrics_lesionwise("c", &gt, &pred, &params).unwrap();
            for region in Region::ALL {
                let (d, h, counts) = lesionwise_oracle(
                    &region_bits(&gt, region),
                    &region_bits(&pred, region),
                    gt.geometry().dims(),
                    sp,
                    3,
                    conn,
                );
                let got = m.get(region);
                assert!((got.dsc - d).abs() < 1e-9, "seed {seed} {region}: dsc {} vs {d}", got.dsc);
                assert!((got.hd95 - h).abs() < 1e-6, "seed {seed} {region}: hd95 {} vs {h}", got.hd95);
                let c = m.lesion_counts.unwrap()[region.channel()];
                assert_eq!([c.matched, c.false_positives, c.false_negatives], counts);
            }
        }
    }
}

#[test]
fn staple_matches_linear_em_with_four_raters() {
    let mut r = rng(5);
    let g = Geometry::isotropic([6, 6, 6]).unwrap();
    for _ in 0..10 {
        let truth = random_mask(&mut r, &g, 0.4);
        let raters: Vec<BinaryMask> = (0..4)
            .map(|_| {
                let bits = truth.bits().iter().map(|&t| if r.random_bool(0.15) { !t } else { t }).collect();
                BinaryMask::new(g.clone(), bits).unwrap()
            })
            .collect();
        let got = staple_binary(&raters, &StapleParams::default()).unwrap();
        let bits: Vec<Vec<bool>> = raters.iter().map(|m| m.bits().to_vec()).collect();
        let want = staple_oracle(&bits, 100, 1e-6, 0.99);
        assert_eq!(got.iterations_run, want.iterations);
        for (a, b) in got.weights.iter().zip(&want.posterior) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn average_ranks_match_pairwise_counting() {
    let mut r = rng(6);
    for _ in 0..200 {
        let n = r.random_range(1..8);
        // small value alphabet forces ties
        let v: Vec<f64> = (0..n).map(|_| r.random_range(0..4) as f64).collect();
        for hib in [true, false] {
            assert_eq!(average_ranks(&v, hib), ranks_oracle(&v, hib));
        }
    }
}

#[test]
fn ranking_with_ties_matches_oracle() {
    let mut r = rng(7);
    let sols = ["a", "b", "c", "d"];
    let mut t = MetricTable::new();
    for case in ["c1", "c2", "c3"] {
        for region in Region::ALL {
            for s in sols {
                t.insert(s, case, region, Metric::Dsc, r.random_range(0..3) as f64 / 2.0);
                t.insert(s, case, region, Metric::Hd95, r.random_range(0..3) as f64);
            }
        }
    }
    let got = rank_solutions(&t).unwrap();
    let mut sum = [0.0; 4];
    let mut keys = 0.0;
    for case in ["c1", "c2", "c3"] {
        for region in Region::ALL {
            for (metric, hib) in [(Metric::Dsc, true), (Metric::Hd95, false)] {
                let v: Vec<f64> = sols.iter().map(|s| t.get(s, case, region, metric).unwrap()).collect();
                for (k, rank) in ranks_oracle(&v, hib).into_iter().enumerate() {
                    sum[k] += (rank - 1.0) / 3.0;
                }
                keys += 1.0;
            }
        }
    }
    for (k, s) in sols.iter().enumerate() {
        assert!((got.normalized_rank[*s] - sum[k] / keys).abs() < 1e-12);
    }
}

#[test]
fn region_extraction_matches_label_sets() {
    let mut r = rng(8);
    let g = Geometry::isotropic([9, 9, 9]).unwrap();
    for _ in 0..20 {
        let l = random_labels(&mut r, &g, 6);
        for region in Region::ALL {
            assert_eq!(extract_region(&l, region).bits(), region_bits(&l, region).as_slice());
        }
    }
}
