// SPDX-License-Identifier: MIT OR Apache-2.0

//! End-to-end acceptance checks, one line per criterion.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use chronosteer::disentangle::StylePairs;
use chronosteer::manifold::TrajectoryPoint;
use chronosteer::toymodel::pipeline::{run_pipeline, PipelineOptions};
use chronosteer::xfer::CorrespondenceSet;
use chronosteer::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn gaussian(rng: &mut Xoshiro256PlusPlus, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn gaussian_vec(rng: &mut Xoshiro256PlusPlus, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

// 1 ------------------------------------------------------------------------

fn norm_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut zero_exact = true;
    for _ in 0..1000 {
        let d = rng.random_range(1..=128);
        let h = gaussian_vec(&mut rng, d) * rng.random_range(0.01..100.0);
        let v = SteerVector::new(
            0,
            EraLabel::Old,
            Language::En,
            Method::Caa,
            gaussian_vec(&mut rng, d),
        );
        let lambda: f64 = rng.random_range(0.0..1.0);
        let ht = apply_intervention(&h, &v, lambda).unwrap();
        let rel = ((&ht - &h).norm() - lambda * h.norm()).abs() / (lambda * h.norm());
        worst = worst.max(rel);
        zero_exact &= apply_intervention(&h, &v, 0.0).unwrap() == h;
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-6 && zero_exact && within(elapsed, Duration::from_secs(1)),
        format!("max rel err {worst:.2e}, lambda=0 bit-identical {zero_exact}, {elapsed:.2?}"),
    )
}

// 2 ------------------------------------------------------------------------

fn caa_recovery() -> Outcome {
    let start = Instant::now();
    let (d, n, sigma) = (64, 1000, 0.5);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
    let mu = gaussian_vec(&mut rng, d).normalize();
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut draw = |offset: &DVector<f64>, era| {
        let data: Vec<f32> = (0..n * d)
            .map(|i| (offset[i % d] + noise.sample(&mut rng)) as f32)
            .collect();
        ActivationSet::new(0, era, Language::En, d, data, "planted").unwrap()
    };
    let anchor = draw(&DVector::zeros(d), EraLabel::Modern);
    let target = draw(&mu, EraLabel::Old);
    let v = extract_caa(&target, &anchor).unwrap().v;
    let cos = v.dot(&mu) / v.norm();
    let expected = 1.0 / (1.0 + 2.0 * d as f64 * sigma * sigma / n as f64).sqrt();
    let elapsed = start.elapsed();
    outcome(
        cos >= 0.99 && within(elapsed, Duration::from_secs(1)),
        format!(
            "cosine {cos:.4} (need >= 0.99; sampling expectation ~{expected:.4}), {elapsed:.2?}"
        ),
    )
}

// 3 ------------------------------------------------------------------------

fn manifold_interpolation() -> Outcome {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
    let d = 24;
    let modern = ActivationSet::from_rows(
        2,
        EraLabel::Modern,
        Language::Zh,
        &(0..30)
            .map(|_| gaussian_vec(&mut rng, d).iter().copied().collect())
            .collect::<Vec<Vec<f64>>>(),
        "planted",
    )
    .unwrap();
    let mut anchors = BTreeMap::new();
    for era in EraLabel::ALL {
        let set = if era == EraLabel::Modern {
            modern.clone()
        } else {
            let shift = gaussian_vec(&mut rng, d) * 2.0;
            let rows: Vec<Vec<f64>> = (0..30)
                .map(|_| {
                    (gaussian_vec(&mut rng, d) + &shift)
                        .iter()
                        .copied()
                        .collect()
                })
                .collect();
            ActivationSet::from_rows(2, era, Language::Zh, &rows, "planted").unwrap()
        };
        anchors.insert(era, extract_caa(&set, &modern).unwrap());
    }
    let m = fit_manifold(&anchors, 3).unwrap();
    let coords = EraCoords::default();
    let knot_err = EraLabel::ALL
        .iter()
        .map(|&e| (m.reconstruct(coords.get(e)).v - &anchors[&e].v).amax())
        .fold(0.0, f64::max);
    let modern_norm = m.reconstruct(coords.get(EraLabel::Modern)).v.amax();

    let u = gaussian_vec(&mut rng, d);
    let line: BTreeMap<EraLabel, SteerVector> = EraLabel::ALL
        .iter()
        .map(|&e| {
            let t = e.index() as f64;
            (e, SteerVector::new(2, e, Language::Zh, Method::Caa, &u * t))
        })
        .collect();
    let mid_err = (fit_manifold(&line, 3).unwrap().reconstruct(1.5).v - &u * 1.5).amax();
    outcome(
        knot_err <= 1e-5 && modern_norm <= 1e-5 && mid_err <= 1e-5,
        format!("knot err {knot_err:.1e}, |modern| {modern_norm:.1e}, collinear midpoint err {mid_err:.1e}"),
    )
}

// 4 ------------------------------------------------------------------------

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn isomap_trajectory() -> Outcome {
    let start = Instant::now();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
    let d = 32;
    // Smooth curve: a few low-frequency sinusoids per coordinate.
    let amp = gaussian(&mut rng, d, 3);
    let phase = gaussian(&mut rng, d, 3);
    let curve = |t: f64| -> DVector<f64> {
        DVector::from_fn(d, |i, _| {
            (0..3)
                .map(|f| amp[(i, f)] * ((f + 1) as f64 * t + phase[(i, f)]).sin())
                .sum::<f64>()
        })
    };
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut points = Vec::new();
    let mut planted = Vec::new();
    for era in EraLabel::ALL {
        for i in 0..20 {
            let t =
                (era.index() as f64 + (i as f64 + rng.random_range(0.2..0.8)) / 20.0) / 4.0 * 3.0;
            let row = curve(t).map(|x: f64| x + noise.sample(&mut rng));
            points.push(TrajectoryPoint {
                era,
                language: Language::En,
                row,
            });
            planted.push(t);
        }
    }
    let rows = trajectory_coords(&points, 8).unwrap();
    let xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
    let means: Vec<f64> = EraLabel::ALL
        .iter()
        .map(|&e| {
            let v: Vec<f64> = rows.iter().filter(|r| r.era == e).map(|r| r.x).collect();
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect();
    let ordered = means.windows(2).all(|w| w[0] < w[1]);
    let rho = spearman(&xs, &planted);
    let elapsed = start.elapsed();
    outcome(
        ordered && rho >= 0.95 && within(elapsed, Duration::from_secs(5)),
        format!("cluster means {means:.3?}, spearman {rho:.4}, {elapsed:.2?}"),
    )
}

// 5 ------------------------------------------------------------------------

fn anchors_from_rows(rows: &DMatrix<f64>, language: Language) -> BTreeMap<EraLabel, SteerVector> {
    anchors_with(rows, language, Method::EnsCmp)
}

fn anchors_with(
    rows: &DMatrix<f64>,
    language: Language,
    method: Method,
) -> BTreeMap<EraLabel, SteerVector> {
    EraLabel::ALL
        .iter()
        .map(|&e| {
            (
                e,
                SteerVector::new(0, e, language, method, rows.row(e.index()).transpose()),
            )
        })
        .collect()
}

fn procrustes_transfer() -> Outcome {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
    let (d, m) = (64, 40);
    let x = gaussian(&mut rng, m, d);
    // Rotation on the span of the correspondences, identity on its complement:
    // the only part of Q that 40 points in 64 dimensions determine.
    let basis = x.transpose().qr().q();
    let q40 = gaussian(&mut rng, m, m).qr().q();
    let q =
        &basis * &q40 * basis.transpose() + (DMatrix::identity(d, d) - &basis * basis.transpose());
    let y = &x * q.transpose();

    let (src, tgt) = (
        anchors_from_rows(&x, Language::En),
        anchors_from_rows(&y, Language::Zh),
    );
    let extra = |mat: &DMatrix<f64>| mat.rows(4, m - 4).into_owned();
    let map = xfer::fit_alignment_augmented(&src, &tgt, &extra(&x), &extra(&y)).unwrap();
    let rec_err = (&map.rotation - &q).norm();

    let noise = Normal::new(0.0, 0.01).unwrap();
    let y_noisy = y.map(|v| v + noise.sample(&mut rng));
    let noisy = xfer::fit_alignment_augmented(
        &src,
        &anchors_from_rows(&y_noisy, Language::Zh),
        &extra(&x),
        &extra(&y_noisy),
    )
    .unwrap();
    let mut min_cos: f64 = 1.0;
    let mut norm_err: f64 = 0.0;
    for _ in 0..100 {
        // held-out vectors in the correspondence span
        let v = &basis * gaussian_vec(&mut rng, m);
        let sv = SteerVector::new(0, EraLabel::Middle, Language::En, Method::EnsCmp, v.clone());
        let out = transfer_aligned(&sv, &noisy).unwrap().v;
        let truth = &q * &v;
        min_cos = min_cos.min(out.dot(&truth) / (out.norm() * truth.norm()));
        let w = gaussian_vec(&mut rng, d);
        norm_err = norm_err.max(((&noisy.rotation * &w).norm() - w.norm()).abs() / w.norm());
    }

    // Informational: a Haar-random Q is only pinned down on the data span.
    let haar = gaussian(&mut rng, d, d).qr().q();
    let yh = &x * haar.transpose();
    let mh = xfer::fit_alignment_augmented(
        &src,
        &anchors_from_rows(&yh, Language::Zh),
        &extra(&x),
        &extra(&yh),
    )
    .unwrap();
    let span_err = ((&mh.rotation - &haar) * &basis).norm();

    outcome(
        rec_err <= 1e-6 && min_cos >= 0.999 && norm_err <= 1e-6 && map.correspondence_set == CorrespondenceSet::AnchorsAndSamples,
        format!(
            "||R-Q||_F {rec_err:.1e}, noisy min cos {min_cos:.5}, norm err {norm_err:.1e}; Haar Q: span err {span_err:.1e}, full ||R-Q||_F {:.2}",
            (&mh.rotation - &haar).norm()
        ),
    )
}

// 6 ------------------------------------------------------------------------

fn disentanglement() -> Outcome {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(6);
    let (mut overlap, mut idem, mut pyth): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for trial in 0..1000 {
        let d = rng.random_range(4..=48);
        let m_style = rng.random_range(1..=4.min(d - 1));
        let n_pairs = rng.random_range(m_style + 1..=m_style + 12);
        let rows = |rng: &mut Xoshiro256PlusPlus| -> Vec<Vec<f64>> {
            (0..n_pairs)
                .map(|_| gaussian_vec(rng, d).iter().copied().collect())
                .collect()
        };
        let archaic =
            ActivationSet::from_rows(1, EraLabel::Old, Language::En, &rows(&mut rng), "t").unwrap();
        let modern =
            ActivationSet::from_rows(1, EraLabel::Modern, Language::En, &rows(&mut rng), "t")
                .unwrap();
        let style = fit_style_subspace(&StylePairs::from_sets(&archaic, &modern).unwrap(), m_style)
            .unwrap();
        let v = SteerVector::new(
            1,
            EraLabel::Old,
            Language::En,
            Method::EnsCmp,
            gaussian_vec(&mut rng, d) * (1.0 + trial as f64 % 7.0),
        );
        let cog = cognitive_vector(&v, &style).unwrap();
        let again = cognitive_vector(&cog, &style).unwrap();
        overlap = overlap.max(style.basis.tr_mul(&cog.v).amax());
        idem = idem.max((&again.v - &cog.v).amax() / v.norm());
        let proj = style.project(&v.v);
        pyth = pyth.max(
            (v.v.norm_squared() - cog.v.norm_squared() - proj.norm_squared()).abs()
                / v.v.norm_squared(),
        );
    }
    outcome(
        overlap <= 1e-6 && idem <= 1e-12 && pyth <= 1e-10,
        format!("max |U^T v_cog| {overlap:.1e}, idempotence {idem:.1e}, pythagoras rel {pyth:.1e} over 1000 trials"),
    )
}

// 7 ------------------------------------------------------------------------

fn brute_force_entities(text: &str, keys: &[String]) -> Vec<String> {
    let chars: Vec<char> = text
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
        .chars()
        .collect();
    let word = |c: char| c.is_ascii_alphanumeric();
    let mut out = Vec::new();
    let mut i = 0;
    'scan: while i < chars.len() {
        for end in (i + 1..=chars.len()).rev() {
            let cand: String = chars[i..end].iter().collect();
            let left = !word(chars[i]) || i == 0 || !word(chars[i - 1]);
            let right = !word(chars[end - 1]) || end == chars.len() || !word(chars[end]);
            if left && right && keys.contains(&cand) {
                out.push(cand);
                i = end;
                continue 'scan;
            }
        }
        i += 1;
    }
    out
}

fn flr_pr() -> Outcome {
    let kb = fixtures::knowledge_base();
    // Hand labels against target Middle.
    let fixture: [(&str, &str); 10] = [
        ("iPhone", "future"),
        ("steam engine", "future"),
        ("telegraph", "future"),
        ("flashlight", "future"),
        ("sword", "in"),
        ("oil lamp", "in"),
        ("windmill", "in"),
        ("astrolabe", "in"),
        ("zorblax", "unresolved"),
        ("glimmerstone", "unresolved"),
    ];
    let hand = |label: &str| fixture.iter().filter(|(_, l)| *l == label).count() as f64 / 10.0;
    let ents: Vec<&str> = fixture.iter().map(|(e, _)| *e).collect();
    let s = score_epistemic(&ents, EraLabel::Middle, &kb).unwrap();
    let exact = s.flr == 0.4
        && s.pr == 0.4
        && s.flr == hand("future")
        && s.pr == hand("in")
        && s.counts.unresolved == 2;

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
    let mut metamorphic = true;
    for _ in 0..50 {
        let mut perm = ents.clone();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let k = rng.random_range(2..5);
        let dup: Vec<&str> = perm
            .iter()
            .flat_map(|e| std::iter::repeat_n(*e, k))
            .collect();
        let target = EraLabel::from_index(rng.random_range(0..4)).unwrap();
        let base = score_epistemic(&ents, target, &kb).unwrap();
        let p = score_epistemic(&perm, target, &kb).unwrap();
        let dp = score_epistemic(&dup, target, &kb).unwrap();
        metamorphic &= p == base
            && dp.flr == base.flr
            && dp.pr == base.pr
            && dp.counts.future == k * base.counts.future
            && dp.counts.total == k * base.counts.total;
    }

    let keys: Vec<String> = kb.entries().keys().cloned().collect();
    let filler = [
        "the",
        "a",
        "Lamp",
        "oil",
        "water",
        "  ",
        "watchtower",
        "swordsman",
        "and",
        "电",
        "的",
    ];
    let mut agree = 0;
    for _ in 0..100 {
        let n = rng.random_range(0..16);
        let mut text = String::new();
        for _ in 0..n {
            let piece = if rng.random_bool(0.5) {
                keys[rng.random_range(0..keys.len())].to_uppercase()
            } else {
                filler[rng.random_range(0..filler.len())].to_string()
            };
            text.push_str(&piece);
            text.push_str(if rng.random_bool(0.2) { "" } else { " " });
        }
        if extract_entities(&text, &kb) == brute_force_entities(&text, &keys) {
            agree += 1;
        }
    }
    outcome(
        exact && metamorphic && agree == 100,
        format!(
            "flr {} pr {} (hand count {} / {}), metamorphic {metamorphic}, extractor agrees with oracle {agree}/100",
            s.flr,
            s.pr,
            hand("future"),
            hand("in")
        ),
    )
}

// 8 ------------------------------------------------------------------------

fn ppl_matrix_check() -> Outcome {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(8);
    let noise = Normal::new(0.0, 0.2).unwrap();
    let mut table = NllTable::new();
    for s in EraLabel::ALL {
        for c in EraLabel::ALL {
            let base: f64 = if s == c { 2.0 } else { 2.5 };
            let texts = (0..5)
                .map(|_| {
                    (0..50)
                        .map(|_| (base + noise.sample(&mut rng)).max(0.0))
                        .collect()
                })
                .collect();
            table.insert((s, c), texts);
        }
    }
    let m = ppl_matrix(&table, Averaging::Micro).unwrap();
    let dom = diagonal_dominance(&m).unwrap();
    let all_diag = dom.iter().all(|r| r.is_min_on_diagonal);

    let mut small = NllTable::new();
    small.insert(
        (EraLabel::Old, EraLabel::Old),
        vec![vec![2f64.ln(), 8f64.ln()]],
    );
    let four = ppl_matrix(&small, Averaging::Micro).unwrap().cells[(0, 0)];
    outcome(
        all_diag && four == 4.0,
        format!(
            "diagonal dominant rows {}/4, {{ln 2, ln 8}} -> {four}",
            dom.iter().filter(|r| r.is_min_on_diagonal).count()
        ),
    )
}

// 9 ------------------------------------------------------------------------

fn toy_pipeline() -> Outcome {
    let start = Instant::now();
    let model = ToyModel::new(ToyModelConfig::with_seed(0)).unwrap();
    let opts = PipelineOptions::default();
    let report = run_pipeline(&model, &opts).unwrap();
    let (b, s) = (report.baseline_total(), report.steered_total());
    let elapsed = start.elapsed();
    let per_era: Vec<String> = report
        .effects
        .iter()
        .map(|e| format!("{} {}->{}", e.era, e.baseline, e.steered))
        .collect();
    outcome(
        s > b
            && opts.prompts >= 20
            && opts.lambda == 0.1
            && within(elapsed, Duration::from_secs(60)),
        format!(
            "planted n-grams baseline {b} -> steered {s} over {} prompts ({}), {elapsed:.2?}",
            opts.prompts,
            per_era.join(", ")
        ),
    )
}

// 10 -----------------------------------------------------------------------

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn era_strategy() -> impl Strategy<Value = EraLabel> {
    (0usize..4).prop_map(|i| EraLabel::from_index(i).unwrap())
}

fn lang_strategy() -> impl Strategy<Value = Language> {
    prop_oneof![Just(Language::Zh), Just(Language::En)]
}

fn finite_f32() -> impl Strategy<Value = f32> {
    prop_oneof![
        proptest::num::f32::NORMAL,
        proptest::num::f32::SUBNORMAL,
        proptest::num::f32::ZERO,
        -1e3f32..1e3
    ]
}

fn set_strategy() -> impl Strategy<Value = ActivationSet> {
    (
        0usize..40,
        era_strategy(),
        lang_strategy(),
        1usize..6,
        1usize..9,
    )
        .prop_flat_map(|(layer, era, lang, n, d)| {
            proptest::collection::vec(finite_f32(), n * d).prop_map(move |data| {
                ActivationSet::new(layer, era, lang, d, data, "proptest").unwrap()
            })
        })
}

fn config(cases: u32) -> Config {
    Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    }
}

fn round_trips() -> Outcome {
    const CASES: u32 = 256;
    let mut failures = Vec::new();
    let mut runner = TestRunner::new(config(CASES));
    let bundles = runner.run(&proptest::collection::vec(set_strategy(), 0..5), |sets| {
        let mut seen = std::collections::BTreeSet::new();
        let sets: Vec<ActivationSet> = sets.into_iter().filter(|s| seen.insert(s.key())).collect();
        let bundle = ActivationBundle::new(sets).unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        save_bundle(&bundle, a.path()).unwrap();
        let loaded = load_bundle(a.path()).unwrap();
        prop_assert_eq!(&loaded, &bundle);
        save_bundle(&loaded, b.path()).unwrap();
        prop_assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()));
        Ok(())
    });
    if let Err(e) = bundles {
        failures.push(format!("bundle: {e}"));
    }

    let mut runner = TestRunner::new(config(CASES));
    let manifolds = runner.run(
        &(any::<u64>(), 2usize..16, 1usize..=3, lang_strategy()),
        |(seed, d, k, lang)| {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            let rows = gaussian(&mut rng, 4, d) * rng.random_range(0.01..100.0);
            let m = fit_manifold(&anchors_with(&rows, lang, Method::Caa), k).unwrap();
            let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
            save_manifold(&m, a.path()).unwrap();
            let once = load_manifold(a.path()).unwrap();
            save_manifold(&once, b.path()).unwrap();
            prop_assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()));
            prop_assert_eq!(load_manifold(b.path()).unwrap(), once.clone());
            for (x, y) in once.basis.mean.iter().zip(m.basis.mean.iter()) {
                prop_assert_eq!(*x, f64::from(*y as f32));
            }
            Ok(())
        },
    );
    if let Err(e) = manifolds {
        failures.push(format!("manifold: {e}"));
    }

    let mut runner = TestRunner::new(config(CASES));
    let alignments = runner.run(&(any::<u64>(), 1usize..24), |(seed, d)| {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let x = gaussian(&mut rng, 4, d);
        let y = gaussian(&mut rng, 4, d);
        let map = fit_alignment(
            &anchors_from_rows(&x, Language::En),
            &anchors_from_rows(&y, Language::Zh),
        )
        .unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        save_alignment(&map, a.path()).unwrap();
        let once = load_alignment(a.path()).unwrap();
        save_alignment(&once, b.path()).unwrap();
        prop_assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()));
        prop_assert_eq!(load_alignment(b.path()).unwrap(), once.clone());
        prop_assert_eq!(once.rotation, map.rotation.map(|v| f64::from(v as f32)));
        Ok(())
    });
    if let Err(e) = alignments {
        failures.push(format!("alignment: {e}"));
    }

    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "bundles, manifolds, alignment maps: {CASES} cases each, load/save byte-identical"
            )
        } else {
            failures.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("intervention norm identity", norm_identity),
        ("CAA planted-mean recovery", caa_recovery),
        ("manifold interpolation", manifold_interpolation),
        ("Isomap era trajectory", isomap_trajectory),
        ("Procrustes transfer", procrustes_transfer),
        ("style/cognitive disentanglement", disentanglement),
        ("FLR/PR scoring", flr_pr),
        ("perplexity matrix", ppl_matrix_check),
        ("toy steering pipeline", toy_pipeline),
        ("format round trips", round_trips),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "acceptance {:>2} {:<34} {}  {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
