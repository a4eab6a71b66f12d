// SPDX-License-Identifier: MIT OR Apache-2.0

//! Continuous chronological manifold through the era anchors.
//!
//! The four anchor vectors are centred on their mean `μ`, projected onto a
//! `k`-dimensional principal basis `U`, and each latent coordinate gets a
//! natural cubic spline over the era knots. A steering vector for any real
//! time `t` is then `μ + U · z(t)`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::acts::{
    f32_rows_to_matrix, matrix_to_f32_rows, read_f32_blob, read_json, write_f32_blob, write_json,
    ActivationSet, EraLabel, Language,
};
use crate::error::{Error, Result};
use crate::numerics::{isomap, pca_fit, CubicSpline1D, PcaBasis};
use crate::steer::{Method, SteerVector};

/// Default latent rank: anchors − 1, lossless at the knots.
pub const DEFAULT_K: usize = 3;

/// Orthonormality tolerance for bases read back from `f32` storage.
const STORED_BASIS_TOL: f64 = 1e-5;

/// Numeric time coordinate of each era. Defaults to `Old → 0 … Modern → 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EraCoords(BTreeMap<EraLabel, f64>);

impl Default for EraCoords {
    fn default() -> Self {
        Self(
            EraLabel::ALL
                .iter()
                .map(|&e| (e, e.index() as f64))
                .collect(),
        )
    }
}

impl EraCoords {
    /// Custom coordinates (e.g. calendar-weighted). Must cover all four
    /// eras and increase strictly in era order.
    pub fn new(coords: BTreeMap<EraLabel, f64>) -> Result<Self> {
        for era in EraLabel::ALL {
            if !coords.contains_key(&era) {
                return Err(Error::MissingEra(era));
            }
        }
        let knots: Vec<f64> = coords.values().copied().collect();
        if knots.iter().any(|x| !x.is_finite()) || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneKnots);
        }
        Ok(Self(coords))
    }

    pub fn get(&self, era: EraLabel) -> f64 {
        self.0[&era]
    }

    pub fn knots(&self) -> Vec<f64> {
        self.0.values().copied().collect()
    }

    /// Era whose knot is nearest to `t`; ties go to the earlier era.
    pub fn nearest(&self, t: f64) -> EraLabel {
        let mut best = EraLabel::Old;
        let mut best_dist = f64::INFINITY;
        for (&era, &k) in &self.0 {
            let dist = (k - t).abs();
            if dist < best_dist {
                best = era;
                best_dist = dist;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChronoManifold {
    pub layer: usize,
    pub language: Language,
    pub method: Method,
    pub basis: PcaBasis,
    pub splines: Vec<CubicSpline1D>,
    pub era_coords: EraCoords,
    /// Rank asked for at fit time; larger than `basis.k()` if it was reduced.
    pub requested_k: usize,
}

pub fn fit_manifold(anchors: &BTreeMap<EraLabel, SteerVector>, k: usize) -> Result<ChronoManifold> {
    fit_manifold_with(anchors, k, EraCoords::default())
}

/// Fit the manifold through all four era anchors at `(layer, language)`.
/// CAA anchors yield a CMP manifold, EnsCAA anchors an EnsCMP manifold.
pub fn fit_manifold_with(
    anchors: &BTreeMap<EraLabel, SteerVector>,
    k: usize,
    era_coords: EraCoords,
) -> Result<ChronoManifold> {
    for era in EraLabel::ALL {
        if !anchors.contains_key(&era) {
            return Err(Error::MissingEra(era));
        }
    }
    if !(1..=EraLabel::ALL.len() - 1).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "manifold rank k={k} outside 1..=3"
        )));
    }
    let first = &anchors[&EraLabel::Old];
    for (era, sv) in anchors {
        if sv.era != *era {
            return Err(Error::KeyMismatch(format!(
                "anchor keyed {era} carries era {}",
                sv.era
            )));
        }
        if sv.layer != first.layer || sv.language != first.language || sv.dim() != first.dim() {
            return Err(Error::KeyMismatch(format!(
                "anchor {era} is (layer {}, {}, d={}), expected (layer {}, {}, d={})",
                sv.layer,
                sv.language,
                sv.dim(),
                first.layer,
                first.language,
                first.dim()
            )));
        }
    }
    let method = if anchors.values().all(|a| a.method == Method::Caa) {
        Method::Cmp
    } else if anchors.values().all(|a| a.method == Method::EnsCaa) {
        Method::EnsCmp
    } else {
        return Err(Error::KeyMismatch(
            "manifold anchors must be all CAA or all EnsCAA vectors".into(),
        ));
    };

    let d = first.dim();
    let rows = DMatrix::from_fn(EraLabel::ALL.len(), d, |i, j| {
        anchors[&EraLabel::ALL[i]].v[j]
    });
    let fit = match pca_fit(&rows, k.min(d)) {
        Ok(fit) => fit,
        // All anchors identical: the manifold is the constant μ.
        Err(Error::RankDeficient { rank: 0, .. }) => {
            log::warn!("manifold anchors are identical; latent rank is 0");
            crate::numerics::PcaFit {
                basis: PcaBasis {
                    mean: rows.row(0).transpose(),
                    components: DMatrix::zeros(d, 0),
                    explained_variance: DVector::zeros(0),
                },
                requested_k: k,
            }
        }
        Err(e) => return Err(e),
    };
    if fit.basis.k() < k {
        log::warn!(
            "manifold at layer {} ({}): rank reduced from {k} to {}",
            first.layer,
            first.language,
            fit.basis.k()
        );
    }

    let knots = era_coords.knots();
    let latents: Vec<DVector<f64>> = EraLabel::ALL
        .iter()
        .map(|e| fit.basis.project(&anchors[e].v))
        .collect();
    let splines = (0..fit.basis.k())
        .map(|i| {
            let values: Vec<f64> = latents.iter().map(|z| z[i]).collect();
            CubicSpline1D::fit(&knots, &values)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ChronoManifold {
        layer: first.layer,
        language: first.language,
        method,
        basis: fit.basis,
        splines,
        era_coords,
        requested_k: k,
    })
}

impl ChronoManifold {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn k(&self) -> usize {
        self.basis.k()
    }

    /// Time range covered by the knots; queries outside it are clamped.
    pub fn domain(&self) -> (f64, f64) {
        let knots = self.era_coords.knots();
        (knots[0], knots[knots.len() - 1])
    }

    /// Latent coordinates `z(t)`.
    pub fn latent(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.k(), self.splines.iter().map(|s| s.eval(t)))
    }

    /// `μ + U · z(t)` with `t` clamped to the knot range.
    pub fn reconstruct(&self, t: f64) -> SteerVector {
        let (lo, hi) = self.domain();
        let t = t.clamp(lo, hi);
        let v = self.basis.reconstruct(&self.latent(t));
        let mut sv = SteerVector::new(
            self.layer,
            self.era_coords.nearest(t),
            self.language,
            self.method,
            v,
        );
        sv.provenance.time = Some(t);
        sv
    }
}

// ---------------------------------------------------------------------------
// Trajectory coordinates
// ---------------------------------------------------------------------------

/// One labelled point fed to [`trajectory_coords`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub era: EraLabel,
    pub language: Language,
    pub row: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub era: EraLabel,
    pub language: Language,
    pub x: f64,
    pub y: f64,
}

/// Per-sample rows of the given sets as trajectory points.
pub fn trajectory_points(sets: &[&ActivationSet]) -> Vec<TrajectoryPoint> {
    sets.iter()
        .flat_map(|s| {
            s.rows().map(move |r| TrajectoryPoint {
                era: s.era,
                language: s.language,
                row: DVector::from_iterator(r.len(), r.iter().map(|&x| f64::from(x))),
            })
        })
        .collect()
}

/// 2-D Isomap embedding of the points, labelled for plotting.
pub fn trajectory_coords(
    points: &[TrajectoryPoint],
    n_neighbors: usize,
) -> Result<Vec<TrajectoryRow>> {
    if points.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: points.len(),
        });
    }
    let d = points[0].row.len();
    if points.iter().any(|p| p.row.len() != d) {
        return Err(Error::ShapeMismatch(
            "trajectory points have differing dims".into(),
        ));
    }
    let rows = DMatrix::from_fn(points.len(), d, |i, j| points[i].row[j]);
    let mut coords = isomap(&rows, n_neighbors, 2)?;
    orient_by_era(&mut coords, points);
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, p)| TrajectoryRow {
            era: p.era,
            language: p.language,
            x: coords[(i, 0)],
            y: coords[(i, 1)],
        })
        .collect())
}

/// Flip the first axis so the latest era present lies to the right of the
/// earliest one.
fn orient_by_era(coords: &mut DMatrix<f64>, points: &[TrajectoryPoint]) {
    let mean_x = |era: EraLabel| {
        let xs: Vec<f64> = (0..points.len())
            .filter(|&i| points[i].era == era)
            .map(|i| coords[(i, 0)])
            .collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    let first = points.iter().map(|p| p.era).min();
    let last = points.iter().map(|p| p.era).max();
    if let (Some(first), Some(last)) = (first, last) {
        if first != last && mean_x(last) < mean_x(first) {
            coords.column_mut(0).neg_mut();
        }
    }
}

/// CSV with header `era,language,x,y`.
pub fn write_trajectory_csv<W: Write>(out: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["era", "language", "x", "y"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.era.name(),
            r.language.tag(),
            &r.x.to_string(),
            &r.y.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::io("<csv>", std::io::Error::other(e.to_string()))
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

pub const MANIFOLD_FILE: &str = "manifold.json";
const MEAN_BLOB: &str = "mean.f32";
const BASIS_BLOB: &str = "basis.f32";

#[derive(Debug, Serialize, Deserialize)]
struct SplineDoc {
    knots: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifoldDoc {
    format: String,
    layer: usize,
    language: Language,
    method: Method,
    d: usize,
    k: usize,
    requested_k: usize,
    era_coords: EraCoords,
    explained_variance: Vec<f64>,
    splines: Vec<SplineDoc>,
    mean_blob: String,
    /// `d × k`, row-major.
    basis_blob: String,
}

/// Write `manifold.json` plus `mean.f32` and `basis.f32` into `dir`.
pub fn save_manifold(m: &ChronoManifold, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let doc = ManifoldDoc {
        format: "chronosteer.manifold".into(),
        layer: m.layer,
        language: m.language,
        method: m.method,
        d: m.dim(),
        k: m.k(),
        requested_k: m.requested_k,
        era_coords: m.era_coords.clone(),
        explained_variance: m.basis.explained_variance.iter().copied().collect(),
        splines: m
            .splines
            .iter()
            .map(|s| SplineDoc {
                knots: s.knots().to_vec(),
                values: s.values().to_vec(),
            })
            .collect(),
        mean_blob: MEAN_BLOB.into(),
        basis_blob: BASIS_BLOB.into(),
    };
    let mean: Vec<f32> = m.basis.mean.iter().map(|&x| x as f32).collect();
    write_f32_blob(&dir.join(MEAN_BLOB), &mean)?;
    write_f32_blob(
        &dir.join(BASIS_BLOB),
        &matrix_to_f32_rows(&m.basis.components),
    )?;
    write_json(&dir.join(MANIFOLD_FILE), &doc)
}

pub fn load_manifold(dir: &Path) -> Result<ChronoManifold> {
    let doc: ManifoldDoc = read_json(&dir.join(MANIFOLD_FILE))?;
    if doc.format != "chronosteer.manifold" {
        return Err(Error::MalformedManifest(format!(
            "unexpected format `{}`",
            doc.format
        )));
    }
    if doc.splines.len() != doc.k || doc.explained_variance.len() != doc.k {
        return Err(Error::MalformedManifest(
            "spline/variance count differs from k".into(),
        ));
    }
    let mean = read_f32_blob(&dir.join(&doc.mean_blob), &doc.mean_blob, 1, doc.d)?;
    let components = if doc.k == 0 {
        DMatrix::zeros(doc.d, 0)
    } else {
        let raw = read_f32_blob(&dir.join(&doc.basis_blob), &doc.basis_blob, doc.d, doc.k)?;
        f32_rows_to_matrix(&raw, doc.d, doc.k)
    };
    let gram_err = (components.tr_mul(&components) - DMatrix::identity(doc.k, doc.k)).norm();
    if gram_err > STORED_BASIS_TOL {
        return Err(Error::MalformedManifest(format!(
            "stored basis is not orthonormal (‖UᵀU − I‖ = {gram_err:e})"
        )));
    }
    let knots = doc.era_coords.knots();
    let splines = doc
        .splines
        .iter()
        .map(|s| {
            if s.knots != knots {
                return Err(Error::MalformedManifest(
                    "spline knots differ from era coordinates".into(),
                ));
            }
            CubicSpline1D::fit(&s.knots, &s.values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChronoManifold {
        layer: doc.layer,
        language: doc.language,
        method: doc.method,
        basis: PcaBasis {
            mean: DVector::from_iterator(doc.d, mean.iter().map(|&x| f64::from(x))),
            components,
            explained_variance: DVector::from_vec(doc.explained_variance),
        },
        splines,
        era_coords: doc.era_coords,
        requested_k: doc.requested_k,
    })
}
