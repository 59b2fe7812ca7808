use serde::{Deserialize, Serialize};

use super::GalerkinError;

/// Geometric grid `x_i = x_min rho^i`, `i = 0..=cells`, stored through its log bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub ln_x_min: f64,
    pub ln_x_max: f64,
    pub cells: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, cells: usize) -> Result<Self, GalerkinError> {
        if !(x_min > 0.0) || !x_max.is_finite() {
            return Err(GalerkinError::Spec(format!("need 0 < x_min < x_max < inf, got [{x_min}, {x_max}]")));
        }
        Self::from_log_bounds(x_min.ln(), x_max.ln(), cells)
    }

    pub fn from_log_bounds(ln_x_min: f64, ln_x_max: f64, cells: usize) -> Result<Self, GalerkinError> {
        if !ln_x_min.is_finite() || !ln_x_max.is_finite() || !(ln_x_min < ln_x_max) {
            return Err(GalerkinError::Spec(format!("need x_min < x_max, got ln bounds [{ln_x_min}, {ln_x_max}]")));
        }
        if !(ln_x_min < 0.0 && ln_x_max > 0.0) {
            return Err(GalerkinError::Spec(format!(
                "window must contain x = 1, got [{}, {}]",
                ln_x_min.exp(),
                ln_x_max.exp()
            )));
        }
        if cells < 8 {
            return Err(GalerkinError::Spec(format!("need at least 8 cells, got {cells}")));
        }
        Ok(GridSpec { ln_x_min, ln_x_max, cells })
    }

    /// Log step `ln rho`.
    pub fn log_step(&self) -> f64 {
        (self.ln_x_max - self.ln_x_min) / self.cells as f64
    }

    pub fn ratio(&self) -> f64 {
        self.log_step().exp()
    }

    pub fn x_min(&self) -> f64 {
        self.ln_x_min.exp()
    }

    pub fn x_max(&self) -> f64 {
        self.ln_x_max.exp()
    }

    /// `ln x_i` for all `cells + 1` nodes.
    pub fn log_nodes(&self) -> Vec<f64> {
        let h = self.log_step();
        (0..=self.cells)
            .map(|i| if i == self.cells { self.ln_x_max } else { self.ln_x_min + h * i as f64 })
            .collect()
    }

    /// `ln x_i` of the interior nodes carrying a hat function.
    pub fn interior_log_nodes(&self) -> Vec<f64> {
        let all = self.log_nodes();
        all[1..self.cells].to_vec()
    }

    /// Same window, twice the cells.
    pub fn bisect(&self) -> GridSpec {
        GridSpec { cells: 2 * self.cells, ..*self }
    }

    /// Twice the log window about its centre at the same ratio.
    pub fn extend(&self) -> Result<GridSpec, GalerkinError> {
        if self.cells % 2 != 0 {
            return Err(GalerkinError::Spec(format!("extension needs an even cell count, got {}", self.cells)));
        }
        let half = (self.ln_x_max - self.ln_x_min) / 2.0;
        GridSpec::from_log_bounds(self.ln_x_min - half, self.ln_x_max + half, 2 * self.cells)
    }

    /// Whether every node of `self` is a node of `finer`.
    pub fn nested_in(&self, finer: &GridSpec) -> bool {
        let h = finer.log_step();
        let tol = 1e-9 * h.max(1.0);
        self.log_nodes().iter().all(|t| {
            let k = ((t - finer.ln_x_min) / h).round();
            k >= 0.0 && k <= finer.cells as f64 && (finer.ln_x_min + k * h - t).abs() < tol
        })
    }
}

/// Nodes `x_min rho^i` of a grid.
pub fn build_grid(spec: &GridSpec) -> Vec<f64> {
    spec.log_nodes().into_iter().map(f64::exp).collect()
}

/// Base window `ln x in [-25, 25]` with 64 cells, extended five times to 2048 cells.
pub fn default_sweep() -> Vec<GridSpec> {
    let mut out = vec![GridSpec::from_log_bounds(-25.0, 25.0, 64).expect("valid base grid")];
    for _ in 0..5 {
        let next = out.last().unwrap().extend().expect("even cell count");
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_cells() {
        let g = GridSpec::new(1e-4, 1e2, 8).unwrap();
        let x = build_grid(&g);
        assert_eq!(x.len(), 9);
        let rho = 1e6f64.powf(1.0 / 8.0);
        for w in x.windows(2) {
            assert!((w[1] / w[0] - rho).abs() < 1e-12 * rho);
        }
        assert!((x[8] - 1e2).abs() < 1e-10);
    }

    #[test]
    fn refinements_are_nested() {
        let g = GridSpec::new(1e-4, 1e2, 8).unwrap();
        assert!(g.nested_in(&g.bisect()));
        assert!(g.nested_in(&g.extend().unwrap()));
        let sweep = default_sweep();
        assert_eq!(sweep.last().unwrap().cells, 2048);
        for w in sweep.windows(2) {
            assert!(w[0].nested_in(&w[1]));
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::new(2.0, 1.0, 8).is_err());
        assert!(GridSpec::new(1e-3, 1e3, 4).is_err());
        assert!(GridSpec::new(2.0, 3.0, 8).is_err());
    }
}
