//! Demo operations behind the static page. Each takes plain arguments and
//! returns a JSON string; the wasm bindings are thin wrappers.

use num_traits::ToPrimitive;
use serde_json::{json, Value};

use rank1_oe::classes::rotation::{rotation_params, CfSource};
use rank1_oe::engine::{plan::parse_primes, recurrence_tables, Construction, SEvaluator, StageOneRule};
use rank1_oe::io::{Format, ParamsFile};
use rank1_oe::phi::{phi_normalize, PhiFamily};
use rank1_oe::stats::{bounds_tables, cocycle_histogram, compare, BoundsInput};
use rank1_oe::towers::TowerModel;

#[cfg(target_arch = "wasm32")]
mod wasm;

/// Largest stage height the page will lay out level by level.
pub const MAX_DRAWN_LEVELS: u64 = 4096;

fn params(text: &str) -> Result<rank1_oe::params::ParamSeq, String> {
    ParamsFile::parse(text, Format::Json)
        .and_then(|f| f.param_seq())
        .map_err(|e| e.to_string())
}

fn f64_of(r: &num_rational::BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Level intervals of stage `stage` in `[0, 1)` (normalized by the stage
/// measure), marking the spacers added at that stage.
pub fn tower_diagram(params_json: &str, stage: usize) -> Result<String, String> {
    let seq = params(params_json)?;
    let model = TowerModel::new(seq.truncated(stage.min(seq.len()))).map_err(|e| e.to_string())?;
    let stage = stage.min(model.depth());
    let height = model.height(stage);
    if height > MAX_DRAWN_LEVELS {
        return Err(format!("stage {stage} has {height} levels; the diagram draws at most {MAX_DRAWN_LEVELS}"));
    }
    let layout = model.layout(stage).map_err(|e| e.to_string())?;
    let fresh: Vec<u64> = if stage == 0 {
        Vec::new()
    } else {
        model.refinement(stage - 1).map_err(|e| e.to_string())?.spacer_indices.clone()
    };
    let total = f64_of(&layout.iter().map(|i| &i.end - &i.start).sum());
    let levels: Vec<Value> = layout
        .iter()
        .enumerate()
        .map(|(j, i)| {
            json!({
                "start": f64_of(&i.start) / total,
                "end": f64_of(&i.end) / total,
                "spacer": fresh.binary_search(&(j as u64)).is_ok(),
            })
        })
        .collect();
    Ok(json!({
        "stage": stage,
        "heights": model.heights(),
        "levels": levels,
    })
    .to_string())
}

/// Build the construction, compare with the recurrences and report the
/// `c_S` histogram against the master bound.
pub fn construction(params_json: &str, primes: &str, n: usize, m: usize, phi: &str) -> Result<String, String> {
    let e = |e: rank1_oe::Error| e.to_string();
    let seq = params(params_json)?;
    let primes = parse_primes(primes).map_err(e)?;
    let phi = phi_normalize(PhiFamily::parse(phi).map_err(e)?).map_err(e)?;
    let c = Construction::build(&seq, &primes, n, m, StageOneRule::FullTower).map_err(e)?;
    let tables = recurrence_tables(&seq.truncated(m).summaries(), &primes, n, m, StageOneRule::FullTower).map_err(e)?;
    let matches = c.matches_tables(&tables);
    let input = BoundsInput::from_construction(&c).map_err(e)?;
    let ev = SEvaluator::new(c).map_err(e)?;
    let report = cocycle_histogram(&ev, &phi, 0).map_err(e)?;
    let verdict = compare(&report, &bounds_tables(&input, &phi).map_err(e)?).map_err(e)?;
    let cells: Vec<Value> = tables
        .pairs()
        .map(|(n, m)| json!({ "n": n, "m": m, "r": tables.r(n, m).to_string(), "t": tables.t(n, m).to_string() }))
        .collect();
    let histogram: Vec<Value> = report
        .histogram
        .iter()
        .map(|h| json!({ "value": h.value, "mass": f64_of(&h.mass), "exact": h.mass.to_string() }))
        .collect();
    Ok(json!({
        "qprime": tables.qprime.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
        "cells": cells,
        "tables_match": matches.is_ok(),
        "mismatch": matches.err(),
        "histogram": histogram,
        "unresolved": f64_of(&report.unresolved_mass),
        "entropy": report.entropy,
        "phi": report.phi,
        "phi_sum": verdict.empirical,
        "bound": verdict.bound_upper,
        "holds": verdict.holds,
    })
    .to_string())
}

/// Rotation parameters from a continued fraction `[a_0; a_1, a_2, ...]`;
/// `a_1..a_{n0+1}` collapse into the first step.
pub fn rotation(cf: &str, steps: usize, n0: usize) -> Result<String, String> {
    let e = |e: rank1_oe::Error| e.to_string();
    let coeffs = CfSource::parse(cf).map_err(e)?.coefficients(steps + n0 + 1);
    let (_, tail) = rank1_oe::classes::rotation::split_integer_part(&coeffs).map_err(e)?;
    let fam = rotation_params(&tail, n0).map_err(e)?;
    let steps: Vec<Value> = fam
        .seq
        .entries()
        .iter()
        .map(|p| json!({ "q": p.q, "spacers": p.spacers }))
        .collect();
    Ok(json!({
        "coefficients": tail,
        "steps": steps,
        "heights": fam.seq.heights().iter().map(|h| h.to_string()).collect::<Vec<_>>(),
        "c": fam.c.to_string(),
        "verdict": format!("{:?}", fam.diagnostic.verdict),
        "partial_sums": fam.diagnostic.partial_sums,
    })
    .to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHACON: &str = r#"{"params":[{"q":3,"spacers":[0,0,1,0]},{"q":3,"spacers":[0,0,1,0]},{"q":3,"spacers":[0,0,1,0]}]}"#;

    #[test]
    fn diagram_levels_tile_the_unit_interval() {
        let v: Value = serde_json::from_str(&tower_diagram(CHACON, 2).unwrap()).unwrap();
        let levels = v["levels"].as_array().unwrap();
        assert_eq!(levels.len(), 13);
        let mut spans: Vec<(f64, f64)> =
            levels.iter().map(|l| (l["start"].as_f64().unwrap(), l["end"].as_f64().unwrap())).collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(spans[0].0.abs() < 1e-12 && (spans[12].1 - 1.0).abs() < 1e-12);
        assert!(spans.windows(2).all(|w| (w[0].1 - w[1].0).abs() < 1e-12));
        assert_eq!(levels.iter().filter(|l| l["spacer"] == true).count(), 1);
    }

    #[test]
    fn construction_matches_and_holds() {
        let v: Value = serde_json::from_str(&construction(CHACON, "2,3,2", 3, 3, "t^1/4").unwrap()).unwrap();
        assert_eq!(v["tables_match"], true);
        assert_eq!(v["holds"], true);
        let total: f64 = v["histogram"].as_array().unwrap().iter().map(|h| h["mass"].as_f64().unwrap()).sum();
        assert!((total + v["unresolved"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_heights_and_rejection() {
        let v: Value = serde_json::from_str(&rotation("0,2,3,7,9,11", 3, 1).unwrap()).unwrap();
        assert_eq!(v["coefficients"], json!([2, 3, 7, 9]));
        let qs: Vec<u64> = v["steps"].as_array().unwrap().iter().map(|s| s["q"].as_u64().unwrap()).collect();
        assert_eq!(qs, [6, 7, 9]);
        assert!(rotation("1,(2)", 8, 1).unwrap_err().contains("diverges"));
    }

    #[test]
    fn errors_are_messages() {
        assert!(tower_diagram("{", 1).is_err());
        assert!(construction(CHACON, "4", 1, 1, "t^1/4").unwrap_err().contains("prime"));
    }
}
