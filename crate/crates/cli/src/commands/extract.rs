// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use chronosteer::steer::DEFAULT_ALPHA;
use chronosteer::{
    ensemble, extract_caa, extract_real, load_bundle, ActivationBundle, ActivationSet, Cell,
    EraLabel, Error, Method, SteerVector,
};

use super::{require, save_vectors, write_vector_csv};
use crate::error::{config_err, CliResult};
use crate::run::Run;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractArgs {
    /// Activation bundle with all four eras per (layer, language).
    #[arg(long)]
    pub acts: Option<PathBuf>,
    /// Bundle of authentic-corpus activations, needed for Real and EnsCAA.
    #[arg(long)]
    pub real: Option<PathBuf>,
    /// CAA, Real or EnsCAA [default: EnsCAA with --real, else CAA].
    #[arg(long)]
    pub method: Option<Method>,
    /// Ensemble weight on the CAA vector [default: 0.5].
    #[arg(long)]
    pub alpha: Option<f64>,
}

fn anchor<'a>(
    bundle: &'a ActivationBundle,
    set: &ActivationSet,
) -> Result<&'a ActivationSet, Error> {
    bundle
        .get(set.layer, EraLabel::ANCHOR, set.language)
        .ok_or(Error::MissingEra(EraLabel::ANCHOR))
}

fn extract_cell(
    target: &ActivationSet,
    acts: &ActivationBundle,
    real: Option<&ActivationBundle>,
    method: Method,
    alpha: f64,
) -> Result<SteerVector, Error> {
    let caa = || extract_caa(target, anchor(acts, target)?);
    let real_vec = || {
        let real = real.expect("checked before the loop");
        let corpus = real
            .get(target.layer, target.era, target.language)
            .ok_or(Error::MissingEra(target.era))?;
        extract_real(corpus, anchor(real, corpus)?)
    };
    match method {
        Method::Caa => caa(),
        Method::Real => real_vec(),
        Method::EnsCaa => ensemble(&caa()?, &real_vec()?, alpha),
        other => Err(Error::InvalidArgument(format!(
            "extract cannot produce {other} vectors"
        ))),
    }
}

pub fn run(args: ExtractArgs, out: PathBuf) -> CliResult<()> {
    let acts_path = require(args.acts.clone(), "extract", "acts")?;
    let method = args.method.unwrap_or(if args.real.is_some() {
        Method::EnsCaa
    } else {
        Method::Caa
    });
    let alpha = args.alpha.unwrap_or(DEFAULT_ALPHA);
    if matches!(method, Method::Real | Method::EnsCaa) && args.real.is_none() {
        return Err(config_err(format!("method {method} needs `real`")));
    }
    let args = ExtractArgs {
        method: Some(method),
        alpha: Some(alpha),
        ..args
    };

    let mut run = Run::start(out, "extract", &args)?;
    run.input("acts", &acts_path)?;
    let acts = load_bundle(&acts_path)?;
    let real = match &args.real {
        Some(p) => {
            run.input("real", p)?;
            Some(load_bundle(p)?)
        }
        None => None,
    };

    let mut seen = BTreeSet::new();
    let mut vectors = Vec::new();
    for set in acts.sets() {
        if !seen.insert((set.layer, set.era, set.language)) {
            continue;
        }
        let cell = Cell {
            layer: set.layer,
            era: Some(set.era),
            language: set.language,
        };
        let v =
            extract_cell(set, &acts, real.as_ref(), method, alpha).map_err(|e| e.in_cell(cell))?;
        vectors.push(v);
    }
    vectors.sort_by_key(|v| (v.layer, v.language, v.era));

    save_vectors(
        &mut run,
        "vectors",
        &vectors,
        &format!("chronosteer extract {method}"),
    )?;
    write_vector_csv(&mut run, "vectors.csv", &vectors)?;
    log::info!("extract: {} {method} vectors", vectors.len());
    run.finish()?;
    Ok(())
}
