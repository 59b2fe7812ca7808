use std::path::Path;

use nalgebra::{Cholesky, SymmetricEigen};
use serde::Serialize;

use super::{GalerkinError, GridSpec};
use crate::linalg::{inertia, write_sym_dump, SymMatrix};
use crate::mellin::{KernelSpec, RESONANCE_TOL};
use crate::quad::{gl16, gl8};

/// Hankel entries stop being integrated once they stay below this, or the rounding floor, for three consecutive `tau >= 100`.
const DECAY_TOL: f64 = 1e-15;
const TAU_LIMIT: f64 = 1e7;
/// Low-rank terms with `ln |a|^2` below this are dropped.
const LN_NORM_FLOOR: f64 = -300.0;

/// `mu_r = int s^r phihat(s) ds` for the reference hat on `[1/rho, 1, rho]`.
pub fn hat_moment(r: f64, rho: f64) -> f64 {
    let piece = |a: f64, b: f64, al: f64, be: f64| {
        al * (b.powf(r + 1.0) - a.powf(r + 1.0)) / (r + 1.0) + be * (b.powf(r + 2.0) - a.powf(r + 2.0)) / (r + 2.0)
    };
    let d = rho - 1.0;
    piece(1.0 / rho, 1.0, -1.0 / d, rho / d) + piece(1.0, rho, rho / d, -1.0 / d)
}

/// `K(w) = int phihat(s) phihat(w/s) ds/s`, supported on `[rho^-2, rho^2]`.
pub fn hat_convolution(w: f64, log_step: f64) -> f64 {
    let rho = log_step.exp();
    let d = rho - 1.0;
    let c = w.ln();
    let ec = w;
    // phihat(e^u) = alpha + beta e^u on each side of u = 0
    let pieces = [(-log_step, 0.0, -1.0 / d, rho / d), (0.0, log_step, rho / d, -1.0 / d)];
    let mut total = 0.0;
    for &(a1, b1, al1, be1) in &pieces {
        for &(a2, b2, al2, be2) in &pieces {
            let lo = a1.max(c - b2);
            let hi = b1.min(c - a2);
            if hi <= lo {
                continue;
            }
            total += al1 * al2 * (hi - lo)
                + al1 * be2 * ec * ((-lo).exp() - (-hi).exp())
                + be1 * al2 * (hi.exp() - lo.exp())
                + be1 * be2 * ec * (hi - lo);
        }
    }
    total
}

/// `W(tau) = int v(tau w) K(w) dw` and `int |v(tau w) K(w)| dw`.
fn hankel_integral(kernel: &KernelSpec, tau: f64, log_step: f64) -> Result<(f64, f64), GalerkinError> {
    if tau > TAU_LIMIT {
        return Err(GalerkinError::Oscillation { tau });
    }
    let rho = log_step.exp();
    let breaks = [rho.powi(-2), 1.0 / rho, 1.0, rho, rho * rho];
    let rule = gl16();
    let width = std::f64::consts::PI / tau;
    let (mut total, mut mass) = (0.0, 0.0);
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let panels = ((b - a) / width).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        for k in 0..panels {
            let lo = a + h * k as f64;
            for (x, wt) in rule.points(lo, lo + h) {
                let f = wt * kernel.value(tau * x) * hat_convolution(x, log_step);
                total += f;
                mass += f.abs();
            }
        }
    }
    Ok((total, mass))
}

/// A term `v_k (xy)^{r_k}` split off as `v_k a a^T` with `a_i = mu_{r_k} x_i^{r_k+1/2-l}` in scaled form.
#[derive(Debug, Clone, Serialize)]
pub struct LowRankTerm {
    pub exponent: f64,
    pub coefficient: f64,
    /// `ln |a|^2`.
    pub ln_norm_sq: f64,
    /// `a / |a|`.
    pub unit: Vec<f64>,
}

/// Congruence-scaled forms on the interior hats of a geometric grid.
///
/// With `D = diag(x_i^{l+1/2})`, `h0` holds `D^{-1} H_0 D^{-1}`, `v` the scaled
/// kernel form minus the split-off terms with `r_k < l - 1/2`, and `low_rank`
/// those terms.
#[derive(Debug, Clone)]
pub struct FormMatrices {
    pub grid: GridSpec,
    pub l: f64,
    pub h0: SymMatrix<f64>,
    pub v: SymMatrix<f64>,
    pub low_rank: Vec<LowRankTerm>,
    log_nodes: Vec<f64>,
    gram_diag: f64,
    gram_off: f64,
}

fn gl8_integral<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    gl8().integrate(a, b, f)
}

impl FormMatrices {
    pub fn assemble(grid: &GridSpec, kernel: &KernelSpec, l: f64) -> Result<Self, GalerkinError> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(GalerkinError::Spec(format!("l must be positive, got {l}")));
        }
        let h = grid.log_step();
        let rho = grid.ratio();
        let d = rho - 1.0;
        let t = grid.interior_log_nodes();
        let m = t.len();
        let two_l = 2.0 * l;

        let hd = gl8_integral(1.0 / rho, 1.0, |s| s.powf(two_l) * ((rho * s - 1.0) / d).powi(2))
            + gl8_integral(1.0, rho, |s| s.powf(two_l) * ((rho - s) / d).powi(2));
        let ho = gl8_integral(1.0, rho, |s| s.powf(two_l) * (rho - s) * (s - 1.0) / (d * d));
        let shift = rho.powf(-(l + 0.5));
        let mut h0 = SymMatrix::zeros(m);
        for i in 0..m {
            h0.set(i, i, hd);
            if i + 1 < m {
                h0.set(i, i + 1, ho * shift);
            }
        }

        let split = kernel.terms_below(l - 0.5 - RESONANCE_TOL);
        let mut low_rank = Vec::with_capacity(split.len());
        for &(r, c) in &split {
            let ln_mu = hat_moment(r, rho).ln();
            let ln_a: Vec<f64> = t.iter().map(|ti| ln_mu + (r + 0.5 - l) * ti).collect();
            let top = ln_a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let ln_norm_sq = 2.0 * top + ln_a.iter().map(|x| (2.0 * (x - top)).exp()).sum::<f64>().ln();
            let unit = ln_a.iter().map(|x| (x - 0.5 * ln_norm_sq).exp()).collect();
            low_rank.push(LowRankTerm { exponent: r, coefficient: c, ln_norm_sq, unit });
        }

        let values = hankel_values(kernel, l, h, t[0], m, &split)?;
        let v = SymMatrix::from_fn(m, |i, j| values[i + j]);

        Ok(FormMatrices {
            grid: *grid,
            l,
            h0,
            v,
            low_rank,
            log_nodes: t,
            gram_diag: (1.0 - 1.0 / rho) / 3.0 + d / 3.0,
            gram_off: d / 6.0 * shift,
        })
    }

    pub fn dim(&self) -> usize {
        self.log_nodes.len()
    }

    pub fn log_nodes(&self) -> &[f64] {
        &self.log_nodes
    }

    /// Scaled Gram matrix times `x_ref^{2l}`, `x_ref = e^{ln_ref}`.
    pub fn gram(&self, ln_ref: f64) -> SymMatrix<f64> {
        let m = self.dim();
        let mut g = SymMatrix::zeros(m);
        for i in 0..m {
            let w = (2.0 * self.l * (ln_ref - self.log_nodes[i])).exp();
            g.set(i, i, self.gram_diag * w);
            if i + 1 < m {
                g.set(i, i + 1, self.gram_off * w);
            }
        }
        g
    }

    /// `h0 + gamma v + epsilon gram(ln_ref)` with the split-off terms as a border.
    ///
    /// Returns the bordered matrix and the number of border entries whose
    /// coefficient `gamma v_k |a|^2` is positive.
    pub fn bordered(&self, gamma: f64, epsilon: f64, ln_ref: f64) -> (SymMatrix<f64>, usize) {
        let mut m = self.h0.axpy(gamma, &self.v);
        if epsilon != 0.0 {
            m = m.axpy(epsilon, &self.gram(ln_ref));
        }
        let mut border = Vec::new();
        let mut positive = 0;
        if gamma != 0.0 {
            for term in &self.low_rank {
                if term.ln_norm_sq < LN_NORM_FLOOR {
                    continue;
                }
                let c = gamma * term.coefficient;
                let ln_c = c.abs().ln() + term.ln_norm_sq;
                if c > 0.0 {
                    positive += 1;
                }
                border.push((term.unit.clone(), -c.signum() * (-ln_c).exp()));
            }
        }
        (m.bordered(&border), positive)
    }

    /// Number of eigenvalues below `-epsilon x_ref^{2l}` of the pencil `(H_0 + gamma V, Gram)`, by inertia.
    pub fn negative_count(&self, gamma: f64, epsilon: f64, ln_ref: f64) -> Result<usize, GalerkinError> {
        let (b, positive) = self.bordered(gamma, epsilon, ln_ref);
        let i = inertia(&b)?;
        Ok(i.negative - positive)
    }

    /// Same count from a full eigendecomposition of the bordered matrix.
    pub fn negative_count_eigen(&self, gamma: f64, epsilon: f64, ln_ref: f64) -> usize {
        let (b, positive) = self.bordered(gamma, epsilon, ln_ref);
        let e = SymmetricEigen::new(b.to_nalgebra());
        e.eigenvalues.iter().filter(|x| **x < 0.0).count() - positive
    }

    /// Unscaled `(H_0, V, Gram)`; only representable on modest windows.
    pub fn unscaled(&self) -> Result<(SymMatrix<f64>, SymMatrix<f64>, SymMatrix<f64>), GalerkinError> {
        let p = self.l + 0.5;
        let ln_d: Vec<f64> = self.log_nodes.iter().map(|t| p * t).collect();
        if ln_d.iter().any(|x| x.abs() > 300.0) {
            return Err(GalerkinError::Spec("window too wide for unscaled matrices".into()));
        }
        let dd: Vec<f64> = ln_d.iter().map(|x| x.exp()).collect();
        let m = self.dim();
        let gram = self.gram(0.0);
        let mut full_v = self.v.clone();
        for term in &self.low_rank {
            let s = term.coefficient * term.ln_norm_sq.exp();
            for i in 0..m {
                for j in 0..=i {
                    full_v.add(i, j, s * term.unit[i] * term.unit[j]);
                }
            }
        }
        let unscale = |a: &SymMatrix<f64>| SymMatrix::from_fn(m, |i, j| a.get(i, j) * dd[i] * dd[j]);
        Ok((unscale(&self.h0), unscale(&full_v), unscale(&gram)))
    }

    /// Eigenvalues below `-epsilon x_ref^{2l}` of the unscaled pencil after Cholesky reduction of the Gram matrix.
    pub fn negative_count_pencil(&self, gamma: f64, epsilon: f64, ln_ref: f64) -> Result<usize, GalerkinError> {
        let (h0, v, g) = self.unscaled()?;
        let a = h0.axpy(gamma, &v).to_nalgebra();
        let chol = Cholesky::new(g.to_nalgebra())
            .ok_or_else(|| GalerkinError::Spec("Gram matrix is not positive definite".into()))?;
        let l = chol.l();
        let y = l.solve_lower_triangular(&a).expect("triangular solve");
        let c = l.solve_lower_triangular(&y.transpose()).expect("triangular solve");
        let c = (&c + c.transpose()) * 0.5;
        let threshold = -epsilon * (2.0 * self.l * ln_ref).exp();
        let e = SymmetricEigen::new(c);
        Ok(e.eigenvalues.iter().filter(|x| **x < threshold).count())
    }

    /// Writes `h0.bin`, `v.bin`, `gram.bin` and `bordered.bin` (scaled) into `dir`.
    pub fn write_dumps(&self, dir: &Path, gamma: f64, epsilon: f64, ln_ref: f64) -> Result<(), GalerkinError> {
        std::fs::create_dir_all(dir).map_err(|e| GalerkinError::Io(e.to_string()))?;
        let (b, _) = self.bordered(gamma, epsilon, ln_ref);
        for (name, m) in [("h0", &self.h0), ("v", &self.v), ("gram", &self.gram(ln_ref)), ("bordered", &b)] {
            let f = std::fs::File::create(dir.join(format!("{name}.bin"))).map_err(|e| GalerkinError::Io(e.to_string()))?;
            write_sym_dump(std::io::BufWriter::new(f), m)?;
        }
        Ok(())
    }
}

/// Scaled Hankel sequence `V_s`, `s = i + j`, of the regular kernel part.
fn hankel_values(
    kernel: &KernelSpec,
    l: f64,
    h: f64,
    t0: f64,
    m: usize,
    split: &[(f64, f64)],
) -> Result<Vec<f64>, GalerkinError> {
    let rho = h.exp();
    let count = 2 * m - 1;
    let mut out = vec![0.0; count];
    if kernel.is_zero() {
        return Ok(out);
    }
    let mu_split: Vec<f64> = split.iter().map(|(r, _)| hat_moment(*r, rho)).collect();
    let series_limit = match kernel {
        KernelSpec::BesselPQ { .. } => 1.0,
        KernelSpec::Tabulated(t) => t.t_min(),
    };
    let support_end = match kernel {
        KernelSpec::BesselPQ { .. } => f64::INFINITY,
        KernelSpec::Tabulated(t) => t.t_max() * rho * rho,
    };
    let mut quiet = 0;
    let mut decayed = false;
    for (s, slot) in out.iter_mut().enumerate() {
        let ln_tau = 2.0 * t0 + h * s as f64;
        let split_part: f64 = split
            .iter()
            .zip(&mu_split)
            .map(|((r, c), mu)| c * mu * mu * ((r + 0.5 - l) * ln_tau).exp())
            .sum();
        let tau = ln_tau.exp();
        if decayed || tau > support_end {
            *slot = -split_part;
            continue;
        }
        if tau * rho * rho <= series_limit {
            *slot = series_part(kernel, l, ln_tau, rho, split.len());
            continue;
        }
        let (w, mass) = hankel_integral(kernel, tau, h)?;
        let scale = ((0.5 - l) * ln_tau).exp();
        let full = w * scale;
        *slot = full - split_part;
        // below the rounding floor of the sum the value carries no information
        let floor = DECAY_TOL.max(64.0 * f64::EPSILON * mass * scale);
        if tau >= 100.0 && full.abs() < floor {
            quiet += 1;
            decayed = quiet >= 3;
        } else {
            quiet = 0;
        }
    }
    Ok(out)
}

/// `sum_{k >= skip} v_k mu_{r_k}^2 tau^{r_k + 1/2 - l}` for `tau rho^2` inside the expansion range.
fn series_part(kernel: &KernelSpec, l: f64, ln_tau: f64, rho: f64, skip: usize) -> f64 {
    let mut sum = 0.0;
    let mut k = skip;
    while let Some((r, c)) = kernel.term(k) {
        let mu = hat_moment(r, rho);
        let term = c * mu * mu * ((r + 0.5 - l) * ln_tau).exp();
        sum += term;
        if k > skip + 1 && (term == 0.0 || term.abs() < 1e-17 * sum.abs()) {
            break;
        }
        k += 1;
        if k > skip + 200 {
            break;
        }
    }
    sum
}

/// Unscaled `int x^{2l} phi_i phi_j` on the interior hats.
pub fn assemble_h0(grid: &GridSpec, l: f64) -> Result<SymMatrix<f64>, GalerkinError> {
    let f = FormMatrices::assemble(grid, &KernelSpec::Tabulated(zero_kernel()), l)?;
    Ok(f.unscaled()?.0)
}

/// Unscaled `int phi_i phi_j`.
pub fn assemble_gram(grid: &GridSpec) -> Result<SymMatrix<f64>, GalerkinError> {
    let f = FormMatrices::assemble(grid, &KernelSpec::Tabulated(zero_kernel()), 0.5)?;
    Ok(f.unscaled()?.2)
}

/// Unscaled `int int v(xy) phi_i(x) phi_j(y)`.
pub fn assemble_v(grid: &GridSpec, kernel: &KernelSpec) -> Result<SymMatrix<f64>, GalerkinError> {
    let f = FormMatrices::assemble(grid, kernel, 0.5)?;
    Ok(f.unscaled()?.1)
}

fn zero_kernel() -> crate::mellin::TabulatedKernel {
    let e = crate::mellin::KernelExpansion::new(Vec::new(), 1.0).expect("empty expansion");
    crate::mellin::TabulatedKernel::new(vec![1.0, 2.0], vec![0.0, 0.0], e).expect("zero kernel")
}

/// Count by inertia with `epsilon` in units of `x_min^{2l}` of the form's own grid.
pub fn negative_inertia_count(forms: &FormMatrices, gamma: f64, epsilon: f64) -> Result<usize, GalerkinError> {
    forms.negative_count(gamma, epsilon, forms.grid.ln_x_min)
}
