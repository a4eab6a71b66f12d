// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use chronosteer::disentangle::StylePairs;
use chronosteer::manifold::TrajectoryPoint;
use chronosteer::numerics::{isomap, pca_fit, procrustes, procrustes_objective, CubicSpline1D};
use chronosteer::*;

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn gaussian(rng: &mut Xoshiro256PlusPlus, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn gaussian_vec(rng: &mut Xoshiro256PlusPlus, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

fn orthogonal(rng: &mut Xoshiro256PlusPlus, d: usize) -> DMatrix<f64> {
    gaussian(rng, d, d).qr().q()
}

fn set_from(m: &DMatrix<f64>, era: EraLabel) -> ActivationSet {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    ActivationSet::from_rows(0, era, Language::En, &rows, "prop").unwrap()
}

fn sv(v: DVector<f64>, era: EraLabel, method: Method) -> SteerVector {
    SteerVector::new(0, era, Language::En, method, v)
}

fn anchors(rows: &DMatrix<f64>, method: Method) -> BTreeMap<EraLabel, SteerVector> {
    EraLabel::ALL
        .iter()
        .map(|&e| (e, sv(rows.row(e.index()).transpose(), e, method)))
        .collect()
}

fn close_up_to_sign(a: &DVector<f64>, b: &DVector<f64>, tol: f64) -> bool {
    (a - b).norm().min((a + b).norm()) <= tol * (1.0 + a.norm())
}

fn style(seed: u64, d: usize, m: usize) -> StyleSubspace {
    let mut r = rng(seed);
    let archaic = set_from(&gaussian(&mut r, m + 4, d), EraLabel::Old);
    let modern = set_from(&gaussian(&mut r, m + 4, d), EraLabel::Modern);
    fit_style_subspace(&StylePairs::from_sets(&archaic, &modern).unwrap(), m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    // acts ------------------------------------------------------------------

    #[test]
    fn bundle_round_trip(n in 1usize..=64, d in 1usize..=256, seed: u64) {
        let mut r = rng(seed);
        let data: Vec<f32> = (0..n * d).map(|_| r.random::<f32>() * 2e3 - 1e3).collect();
        let set = ActivationSet::new(3, EraLabel::EarlyModern, Language::Zh, d, data, "prop").unwrap();
        let bundle = ActivationBundle::new(vec![set]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&bundle, dir.path()).unwrap();
        prop_assert_eq!(load_bundle(dir.path()).unwrap(), bundle);
    }

    #[test]
    fn centroid_permutation_and_duplication(n in 1usize..40, d in 1usize..20, seed: u64) {
        let mut r = rng(seed);
        let m = gaussian(&mut r, n, d);
        let c = centroid(&set_from(&m, EraLabel::Old));
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, r.random_range(0..=i));
        }
        let permuted = DMatrix::from_fn(n, d, |i, j| m[(order[i], j)]);
        let doubled = DMatrix::from_fn(2 * n, d, |i, j| m[(i % n, j)]);
        let tol = 1e-12 * (1.0 + c.norm());
        prop_assert!((centroid(&set_from(&permuted, EraLabel::Old)) - &c).norm() <= tol);
        prop_assert!((centroid(&set_from(&doubled, EraLabel::Old)) - &c).norm() <= tol);
    }

    // numerics --------------------------------------------------------------

    #[test]
    fn pca_projector_and_monotone_error(n in 3usize..30, d in 2usize..20, seed: u64) {
        let x = gaussian(&mut rng(seed), n, d);
        let mut prev = f64::INFINITY;
        for k in 1..=n.min(d).min(6) {
            let b = pca_fit(&x, k).unwrap().basis;
            let p = &b.components * b.components.transpose();
            prop_assert!((&p * &p - &p).amax() <= 1e-8);
            let centred = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - b.mean[j]);
            let err = (&centred - &centred * &p).norm_squared();
            prop_assert!(err <= prev + 1e-9 * (1.0 + prev.min(1e300)));
            prev = err;
        }
    }

    #[test]
    fn procrustes_recovers_and_beats_identity(m in 1usize..30, d in 1usize..16, seed: u64) {
        let mut r = rng(seed);
        let x = gaussian(&mut r, m, d);
        let q = orthogonal(&mut r, d);
        let y = &x * q.transpose();
        let rot = procrustes(&x, &y).unwrap();
        prop_assert!((&x * rot.transpose() - &y).amax() <= 1e-6);

        let z = gaussian(&mut r, m, d);
        let rz = procrustes(&x, &z).unwrap();
        let eye = DMatrix::identity(d, d);
        prop_assert!(procrustes_objective(&x, &z, &rz) <= procrustes_objective(&x, &z, &eye) + 1e-9);
    }

    #[test]
    fn spline_interpolates_c2_and_linear(seed: u64, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let mut r = rng(seed);
        let mut knots = vec![0.0];
        for _ in 0..5 {
            knots.push(knots.last().unwrap() + r.random_range(0.2..2.0));
        }
        let v: Vec<f64> = (0..6).map(|_| r.random_range(-3.0..3.0)).collect();
        let w: Vec<f64> = (0..6).map(|_| r.random_range(-3.0..3.0)).collect();
        let sv_ = CubicSpline1D::fit(&knots, &v).unwrap();
        let sw = CubicSpline1D::fit(&knots, &w).unwrap();
        let mix: Vec<f64> = v.iter().zip(&w).map(|(p, q)| a * p + b * q).collect();
        let sm = CubicSpline1D::fit(&knots, &mix).unwrap();
        for (i, &t) in knots.iter().enumerate() {
            prop_assert!((sv_.eval(t) - v[i]).abs() <= 1e-10);
        }
        for seg in 1..knots.len() - 1 {
            let t = knots[seg];
            prop_assert!((sv_.second_derivative_on(seg - 1, t) - sv_.second_derivative_on(seg, t)).abs() <= 1e-8);
            // f' is continuous: the gap across the knot is at most 2h·max|f''|
            let h = 1e-7;
            let curv = sv_.second_derivative_on(seg - 1, t).abs().max(sv_.second_derivative_on(seg, t).abs());
            prop_assert!((sv_.derivative(t - h) - sv_.derivative(t + h)).abs() <= 2.0 * h * (curv + 1.0) + 1e-9);
        }
        for _ in 0..20 {
            let t = r.random_range(knots[0]..knots[5]);
            prop_assert!((sm.eval(t) - a * sv_.eval(t) - b * sw.eval(t)).abs() <= 1e-9);
        }
    }

    #[test]
    fn isomap_rigid_invariance(seed: u64, d in 3usize..10) {
        let mut r = rng(seed);
        // a curve with a clearly dominant first axis
        let n = 40;
        let x = DMatrix::from_fn(n, d, |i, j| {
            let t = i as f64 / n as f64 * 4.0;
            match j {
                0 => t,
                1 => 0.4 * (2.0 * t).sin(),
                _ => 0.0,
            }
        });
        let q = orthogonal(&mut r, d);
        let shift = gaussian_vec(&mut r, d) * 10.0;
        let moved = DMatrix::from_fn(n, d, |i, j| (x.row(i) * q.transpose())[j] + shift[j]);
        let a = isomap(&x, 6, 2).unwrap();
        let b = isomap(&moved, 6, 2).unwrap();
        for c in 0..2 {
            prop_assert!(close_up_to_sign(&a.column(c).into_owned(), &b.column(c).into_owned(), 1e-6));
        }
    }

    // steer -----------------------------------------------------------------

    #[test]
    fn intervention_scale_equivariant_and_parallel(d in 1usize..64, seed: u64, c in 1e-3f64..1e3, lambda in 0.0f64..1.0) {
        let mut r = rng(seed);
        let h = gaussian_vec(&mut r, d);
        let v = gaussian_vec(&mut r, d);
        let out = apply_intervention(&h, &sv(v.clone(), EraLabel::Old, Method::Caa), lambda).unwrap();
        let scaled = apply_intervention(&h, &sv(&v * c, EraLabel::Old, Method::Caa), lambda).unwrap();
        prop_assert!((&out - &scaled).amax() <= 1e-12 * (1.0 + h.norm()));
        let delta = &out - &h;
        if lambda > 0.0 {
            prop_assert!((delta.dot(&v) / (delta.norm() * v.norm()) - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn ensemble_affine(d in 1usize..32, seed: u64, alpha in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let a = sv(gaussian_vec(&mut r, d), EraLabel::Middle, Method::Caa);
        let b = sv(gaussian_vec(&mut r, d), EraLabel::Middle, Method::Real);
        let e = ensemble(&a, &b, alpha).unwrap();
        let line = &a.v * alpha + &b.v * (1.0 - alpha);
        prop_assert!((&e.v - line).amax() <= 1e-12);
    }

    #[test]
    fn caa_of_self_is_zero(n in 1usize..20, d in 1usize..32, seed: u64) {
        let m = gaussian(&mut rng(seed), n, d);
        let target = set_from(&m, EraLabel::Old);
        let anchor = set_from(&m, EraLabel::Modern);
        prop_assert!(extract_caa(&target, &anchor).unwrap().v.iter().all(|&x| x == 0.0));
    }

    // manifold --------------------------------------------------------------

    #[test]
    fn reconstruct_continuous(d in 2usize..32, k in 1usize..=3, seed: u64, t in 0.0f64..3.0) {
        let rows = gaussian(&mut rng(seed), 4, d);
        let m = fit_manifold(&anchors(&rows, Method::Caa), k).unwrap();
        let spacing = (0..3).map(|i| (rows.row(i + 1) - rows.row(i)).norm()).fold(0.0, f64::max);
        let eps = 1e-4;
        let jump = (m.reconstruct(t + eps).v - m.reconstruct(t).v).norm();
        prop_assert!(jump <= 10.0 * spacing * eps);
    }

    #[test]
    fn affine_anchors_reconstruct_exactly(d in 4usize..32, k in 1usize..=3, seed: u64) {
        let mut r = rng(seed);
        let offset = gaussian_vec(&mut r, d);
        let dirs = gaussian(&mut r, d, k);
        let rows = DMatrix::from_fn(4, d, |_, _| 0.0);
        let mut rows = rows;
        for e in 0..4 {
            let z = gaussian_vec(&mut r, k);
            rows.set_row(e, &(&offset + &dirs * z).transpose());
        }
        let a = anchors(&rows, Method::Caa);
        let m = fit_manifold(&a, k).unwrap();
        for e in EraLabel::ALL {
            let err = (m.reconstruct(m.era_coords.get(e)).v - &a[&e].v).amax();
            prop_assert!(err <= 1e-5, "era {} err {} k {}", e, err, m.basis.k());
        }
    }

    #[test]
    fn trajectory_orthogonal_invariance(seed: u64, d in 3usize..8) {
        let mut r = rng(seed);
        let q = orthogonal(&mut r, d);
        let mut points = Vec::new();
        for era in EraLabel::ALL {
            for i in 0..10 {
                let t = era.index() as f64 + i as f64 / 10.0;
                let mut row = DVector::zeros(d);
                row[0] = t;
                row[1] = 0.3 * (1.5 * t).sin();
                points.push(TrajectoryPoint { era, language: Language::En, row });
            }
        }
        let rotated: Vec<TrajectoryPoint> = points
            .iter()
            .map(|p| TrajectoryPoint { row: &q * &p.row, ..p.clone() })
            .collect();
        let a = trajectory_coords(&points, 6).unwrap();
        let b = trajectory_coords(&rotated, 6).unwrap();
        let col = |rows: &[manifold::TrajectoryRow], y: bool| {
            DVector::from_iterator(rows.len(), rows.iter().map(|r| if y { r.y } else { r.x }))
        };
        prop_assert!((col(&a, false) - col(&b, false)).amax() <= 1e-6 * (1.0 + col(&a, false).amax()));
        prop_assert!(close_up_to_sign(&col(&a, true), &col(&b, true), 1e-6));
    }

    // disentangle -----------------------------------------------------------

    #[test]
    fn rejection_properties(d in 3usize..40, seed: u64, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let m = 1 + (seed % 3) as usize;
        prop_assume!(m < d);
        let s = style(seed, d, m);
        let mut r = rng(seed ^ 0xABCD);
        let v = gaussian_vec(&mut r, d);
        let w = gaussian_vec(&mut r, d);
        let cog = cognitive_vector(&sv(v.clone(), EraLabel::Old, Method::EnsCmp), &s).unwrap();
        let twice = cognitive_vector(&cog, &s).unwrap();
        prop_assert!((&twice.v - &cog.v).amax() <= 1e-12 * (1.0 + v.norm()));
        for u in s.basis.column_iter() {
            prop_assert!(u.dot(&cog.v).abs() <= 1e-6 * cog.v.norm().max(1e-300));
        }
        prop_assert!(cog.v.norm() <= v.norm() * (1.0 + 1e-12));
        let lin = s.reject(&(&v * a + &w * b)) - (s.reject(&v) * a + s.reject(&w) * b);
        prop_assert!(lin.amax() <= 1e-10 * (1.0 + v.norm() + w.norm()));
    }

    // xfer ------------------------------------------------------------------

    #[test]
    fn alignment_properties(d in 2usize..24, seed: u64) {
        let mut r = rng(seed);
        let x = gaussian(&mut r, 4, d);
        let q = orthogonal(&mut r, d);
        let y = &x * q.transpose();
        let relabel = |rows: &DMatrix<f64>, lang| -> BTreeMap<EraLabel, SteerVector> {
            anchors(rows, Method::EnsCmp)
                .into_iter()
                .map(|(e, mut v)| { v.language = lang; (e, v) })
                .collect()
        };
        let (src, tgt) = (relabel(&x, Language::En), relabel(&y, Language::Zh));
        let fwd = fit_alignment(&src, &tgt).unwrap();
        let back = fit_alignment(&tgt, &src).unwrap();
        for e in EraLabel::ALL {
            prop_assert!((transfer_aligned(&src[&e], &fwd).unwrap().v - &tgt[&e].v).amax() <= 1e-5);
        }
        let vs: Vec<DVector<f64>> = (0..4).map(|_| gaussian_vec(&mut r, d)).collect();
        let out: Vec<DVector<f64>> = vs
            .iter()
            .map(|v| transfer_aligned(&SteerVector { language: Language::En, ..sv(v.clone(), EraLabel::Old, Method::EnsCmp) }, &fwd).unwrap().v)
            .collect();
        for i in 0..4 {
            prop_assert!((out[i].norm() - vs[i].norm()).abs() <= 1e-9 * vs[i].norm());
            for j in 0..4 {
                prop_assert!((out[i].dot(&out[j]) - vs[i].dot(&vs[j])).abs() <= 1e-9 * vs[i].norm() * vs[j].norm());
            }
        }
        let compose = &back.rotation * &fwd.rotation;
        for e in EraLabel::ALL {
            prop_assert!((&compose * &src[&e].v - &src[&e].v).amax() <= 1e-5);
        }
    }

    // evaluate --------------------------------------------------------------

    #[test]
    fn rates_sum_to_one(picks in proptest::collection::vec(0usize..400, 1..60), target in 0usize..4) {
        let kb = fixtures::knowledge_base();
        let keys: Vec<&String> = kb.entries().keys().collect();
        let ents: Vec<String> = picks
            .iter()
            .map(|&i| keys.get(i).map(|k| k.to_string()).unwrap_or_else(|| format!("nonentity{i}")))
            .collect();
        let s = score_epistemic(&ents, EraLabel::from_index(target).unwrap(), &kb).unwrap();
        let c = &s.counts;
        prop_assert_eq!(c.future + c.in_scope + c.unresolved, c.total);
        prop_assert!((s.flr + s.pr + s.unresolved_rate() - 1.0).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn ppl_monotone(seed: u64, bump in 0.0f64..2.0, micro: bool) {
        let mut r = rng(seed);
        let mut table = NllTable::new();
        for s in EraLabel::ALL {
            for c in EraLabel::ALL {
                let texts: Vec<Vec<f64>> = (0..r.random_range(1..4))
                    .map(|_| (0..r.random_range(1..10)).map(|_| r.random_range(0.0..5.0)).collect())
                    .collect();
                table.insert((s, c), texts);
            }
        }
        let avg = if micro { Averaging::Micro } else { Averaging::Macro };
        let before = ppl_matrix(&table, avg).unwrap();
        let key = (EraLabel::from_index(r.random_range(0..4)).unwrap(), EraLabel::from_index(r.random_range(0..4)).unwrap());
        let cell = table.get_mut(&key).unwrap();
        let i = r.random_range(0..cell.len());
        let j = r.random_range(0..cell[i].len());
        cell[i][j] += bump;
        let after = ppl_matrix(&table, avg).unwrap();
        prop_assert!(after.get(key.0, key.1).unwrap() >= before.get(key.0, key.1).unwrap());
    }
}
