//! Lower bounds for the Hausdorff dimension of an inhomogeneous gasket
//! obtained from the natural measure.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gasket::GasketSpec;
use crate::subdivision::cell_count;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LevelTerm {
    pub level: u32,
    pub cells: u128,
    pub log_cells_over_level: f64,
    pub log_cells_over_log_level: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct HausdorffBounds {
    pub dimension: usize,
    pub terms: Vec<LevelTerm>,
    /// `min_l ln(N(l) / l)`.
    pub log_ratio_bound: f64,
    /// `min_l ln N(l) / ln l`, the mass-distribution exponent of the natural measure.
    pub frostman_exponent: f64,
    /// `ln((d + 1) / 2)`.
    pub dimension_floor: f64,
}

pub fn hausdorff_bound(spec: &GasketSpec) -> Result<HausdorffBounds> {
    spec.validate()?;
    let d = spec.dimension;
    let terms: Vec<LevelTerm> = spec
        .levels
        .iter()
        .map(|&l| {
            let n = cell_count(d, l as usize)?;
            let (nf, lf) = (n as f64, l as f64);
            Ok(LevelTerm {
                level: l,
                cells: n,
                log_cells_over_level: (nf / lf).ln(),
                log_cells_over_log_level: nf.ln() / lf.ln(),
            })
        })
        .collect::<Result<_>>()?;
    if terms.is_empty() {
        return Err(Error::Semantic("spec has no levels".into()));
    }
    Ok(HausdorffBounds {
        dimension: d,
        log_ratio_bound: terms.iter().map(|t| t.log_cells_over_level).fold(f64::INFINITY, f64::min),
        frostman_exponent: terms.iter().map(|t| t.log_cells_over_log_level).fold(f64::INFINITY, f64::min),
        dimension_floor: ((d as f64 + 1.0) / 2.0).ln(),
        terms,
    })
}
