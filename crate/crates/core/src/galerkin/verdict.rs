use rayon::prelude::*;
use serde::Serialize;

use super::{FormMatrices, GalerkinError, GridSpec};
use crate::mellin::KernelSpec;

/// Relative shifts used by default, in units of `x_min^{2l}` of the widest window.
pub const DEFAULT_EPSILONS: [f64; 3] = [1e-6, 1e-8, 1e-10];

/// Grids up to this many cells are also checked by a full eigendecomposition.
pub const EIGEN_CHECK_CELLS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Finite(u64),
    LikelyInfinite,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementRow {
    pub cells: usize,
    pub ln_x_min: f64,
    pub ln_x_max: f64,
    pub epsilon: f64,
    pub negative_count: usize,
    /// Count from the full eigendecomposition, on small grids only.
    pub eigen_count: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GalerkinReport {
    pub l: f64,
    pub gamma: f64,
    pub ln_reference: f64,
    pub rows: Vec<RefinementRow>,
    pub verdict: Verdict,
    /// Counts nondecreasing along the refinements at every epsilon.
    pub monotone: bool,
    /// Counts nonincreasing in epsilon on every grid.
    pub epsilon_monotone: bool,
    /// Inertia and eigendecomposition agree wherever both ran.
    pub eigen_agrees: bool,
}

impl GalerkinReport {
    /// `counts[level][eps]` in sweep order.
    pub fn table(&self, levels: usize, eps: usize) -> Vec<Vec<usize>> {
        (0..levels).map(|a| (0..eps).map(|b| self.rows[a * eps + b].negative_count).collect()).collect()
    }
}

/// Finite if the last two levels agree at every epsilon, likely infinite if
/// counts at the smallest epsilon strictly increase across all levels.
pub fn classify(counts: &[Vec<usize>], epsilons: &[f64]) -> Verdict {
    let levels = counts.len();
    if levels >= 2 {
        let last = &counts[levels - 1];
        let prev = &counts[levels - 2];
        if last == prev && last.iter().all(|c| *c == last[0]) {
            return Verdict::Finite(last[0] as u64);
        }
    }
    let smallest = epsilons
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if levels >= 2 && counts.windows(2).all(|w| w[1][smallest] > w[0][smallest]) {
        return Verdict::LikelyInfinite;
    }
    Verdict::Inconclusive
}

fn check_inputs(specs: &[GridSpec], epsilons: &[f64]) -> Result<(), GalerkinError> {
    if specs.len() < 3 {
        return Err(GalerkinError::Spec(format!("need at least 3 nested grids, got {}", specs.len())));
    }
    for w in specs.windows(2) {
        if !w[0].nested_in(&w[1]) {
            return Err(GalerkinError::Spec(format!("grid with {} cells is not nested in the next", w[0].cells)));
        }
    }
    if epsilons.len() < 2 || epsilons.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(GalerkinError::Spec("need at least two positive epsilons".into()));
    }
    let lo = epsilons.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = epsilons.iter().cloned().fold(0.0, f64::max);
    if hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(GalerkinError::Spec("epsilons must span at least two decades".into()));
    }
    Ok(())
}

/// Negative counts over a nested sweep and every epsilon, with a verdict.
pub fn refinement_verdict(
    specs: &[GridSpec],
    kernel: &KernelSpec,
    l: f64,
    gamma: f64,
    epsilons: &[f64],
) -> Result<GalerkinReport, GalerkinError> {
    check_inputs(specs, epsilons)?;
    let ln_reference = specs.iter().map(|s| s.ln_x_min).fold(f64::INFINITY, f64::min);
    let forms: Vec<FormMatrices> = specs
        .par_iter()
        .map(|s| FormMatrices::assemble(s, kernel, l))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..specs.len()).flat_map(|a| (0..epsilons.len()).map(move |b| (a, b))).collect();
    let rows: Vec<RefinementRow> = jobs
        .par_iter()
        .map(|&(a, b)| {
            let f = &forms[a];
            let eps = epsilons[b];
            let negative_count = f.negative_count(gamma, eps, ln_reference)?;
            let eigen_count =
                (specs[a].cells <= EIGEN_CHECK_CELLS).then(|| f.negative_count_eigen(gamma, eps, ln_reference));
            Ok(RefinementRow {
                cells: specs[a].cells,
                ln_x_min: specs[a].ln_x_min,
                ln_x_max: specs[a].ln_x_max,
                epsilon: eps,
                negative_count,
                eigen_count,
            })
        })
        .collect::<Result<_, GalerkinError>>()?;

    let ne = epsilons.len();
    let counts: Vec<Vec<usize>> =
        (0..specs.len()).map(|a| (0..ne).map(|b| rows[a * ne + b].negative_count).collect()).collect();
    let monotone = counts.windows(2).all(|w| (0..ne).all(|b| w[1][b] >= w[0][b]));
    let mut order: Vec<usize> = (0..ne).collect();
    order.sort_by(|x, y| epsilons[*x].total_cmp(&epsilons[*y]));
    let epsilon_monotone = counts.iter().all(|row| order.windows(2).all(|w| row[w[1]] <= row[w[0]]));
    let eigen_agrees = rows.iter().all(|r| r.eigen_count.map_or(true, |e| e == r.negative_count));
    Ok(GalerkinReport {
        l,
        gamma,
        ln_reference,
        verdict: classify(&counts, epsilons),
        rows,
        monotone,
        epsilon_monotone,
        eigen_agrees,
    })
}
