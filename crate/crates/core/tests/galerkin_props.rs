use friedrichs::galerkin::{
    assemble_gram, assemble_h0, assemble_v, build_grid, negative_inertia_count, refinement_verdict, FormMatrices,
    GridSpec, Verdict,
};
use friedrichs::linalg::{cholesky, read_dump, SymMatrix};
use friedrichs::mellin::{KernelExpansion, KernelSpec, TabulatedKernel};
use friedrichs::quad::gl16;
use proptest::prelude::*;

fn hat(x: &[f64], i: usize, t: f64) -> f64 {
    if t <= x[i - 1] || t >= x[i + 1] {
        0.0
    } else if t <= x[i] {
        (t - x[i - 1]) / (x[i] - x[i - 1])
    } else {
        (x[i + 1] - t) / (x[i + 1] - x[i])
    }
}

/// Gauss points on the support of hat `i`, `sub` panels per cell.
fn support_points(x: &[f64], i: usize, sub: usize) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for c in [i - 1, i] {
        let h = (x[c + 1] - x[c]) / sub as f64;
        for k in 0..sub {
            let a = x[c] + h * k as f64;
            pts.extend(gl16().points(a, a + h));
        }
    }
    pts
}

fn max_abs(m: &SymMatrix<f64>) -> f64 {
    m.as_slice().iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

fn assert_close(a: &SymMatrix<f64>, b: &SymMatrix<f64>, rel: f64) {
    assert_eq!(a.dim(), b.dim());
    let scale = max_abs(b).max(1e-300);
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            let d = (a.get(i, j) - b.get(i, j)).abs();
            assert!(d <= rel * scale, "({i},{j}): {} vs {}", a.get(i, j), b.get(i, j));
        }
    }
}

/// `int x^{2l} phi_i phi_j` by direct quadrature in `x`.
fn monomial_oracle(grid: &GridSpec, l: f64) -> SymMatrix<f64> {
    let x = build_grid(grid);
    let m = grid.cells - 1;
    SymMatrix::from_fn(m, |a, b| {
        let (i, j) = (a + 1, b + 1);
        support_points(&x, i, 4).iter().map(|&(t, w)| w * t.powf(2.0 * l) * hat(&x, i, t) * hat(&x, j, t)).sum()
    })
}

fn kernel_oracle(grid: &GridSpec, v: impl Fn(f64) -> f64) -> SymMatrix<f64> {
    let x = build_grid(grid);
    let m = grid.cells - 1;
    let pts: Vec<Vec<(f64, f64)>> = (1..=m).map(|i| support_points(&x, i, 24)).collect();
    SymMatrix::from_fn(m, |a, b| {
        let mut s = 0.0;
        for &(s1, w1) in &pts[a] {
            let h1 = w1 * hat(&x, a + 1, s1);
            for &(s2, w2) in &pts[b] {
                s += h1 * w2 * hat(&x, b + 1, s2) * v(s1 * s2);
            }
        }
        s
    })
}

fn small_grid() -> GridSpec {
    GridSpec::new(0.2, 5.0, 12).unwrap()
}

#[test]
fn h0_and_gram_match_direct_quadrature() {
    let g = small_grid();
    for l in [0.3, 1.0, 2.7] {
        assert_close(&assemble_h0(&g, l).unwrap(), &monomial_oracle(&g, l), 1e-12);
    }
    assert_close(&assemble_gram(&g).unwrap(), &monomial_oracle(&g, 0.0), 1e-12);
}

#[test]
fn single_hat_diagonal() {
    // one interior hat on [1/rho, 1, rho]
    let g = GridSpec::from_log_bounds(-0.3, 0.3, 8).unwrap();
    let x = build_grid(&g);
    let l = 1.7;
    let h0 = assemble_h0(&g, l).unwrap();
    for i in 1..g.cells {
        let want: f64 =
            support_points(&x, i, 1).iter().map(|&(t, w)| w * t.powf(2.0 * l) * hat(&x, i, t).powi(2)).sum();
        assert!((h0.get(i - 1, i - 1) - want).abs() <= 1e-13 * want);
    }
}

#[test]
fn h0_is_positive_semidefinite_and_gram_definite() {
    let g = GridSpec::new(1e-3, 30.0, 40).unwrap();
    for l in [0.5, 1.0, 3.0] {
        let h0 = assemble_h0(&g, l).unwrap();
        let e = nalgebra::SymmetricEigen::new(h0.to_nalgebra());
        assert!(e.eigenvalues.iter().all(|v| *v > -1e-14 * max_abs(&h0)));
        let f = FormMatrices::assemble(&g, &KernelSpec::cosine(), l).unwrap();
        assert!(cholesky(&f.h0).is_ok());
        assert!(cholesky(&f.gram(0.0)).is_ok());
    }
    assert!(cholesky(&assemble_gram(&g).unwrap()).is_ok());
}

#[test]
fn h0_tends_to_gram_as_l_vanishes() {
    let g = small_grid();
    assert_close(&assemble_h0(&g, 1e-10).unwrap(), &assemble_gram(&g).unwrap(), 1e-8);
}

#[test]
fn kernel_form_matches_double_integral() {
    let g = small_grid();
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let cos_oracle = kernel_oracle(&g, |t| c * t.cos());
    assert_close(&assemble_v(&g, &KernelSpec::cosine()).unwrap(), &cos_oracle, 1e-9);
    let sin_oracle = kernel_oracle(&g, |t| c * t.sin());
    assert_close(&assemble_v(&g, &KernelSpec::sine()).unwrap(), &sin_oracle, 1e-9);
    // splitting off low-order terms and adding them back changes nothing
    for l in [1.3, 2.2, 4.9] {
        let f = FormMatrices::assemble(&g, &KernelSpec::cosine(), l).unwrap();
        assert!(!f.low_rank.is_empty());
        assert_close(&f.unscaled().unwrap().1, &cos_oracle, 1e-9);
    }
}

fn constant_kernel(value: f64) -> KernelSpec {
    let terms = if value == 0.0 { vec![] } else { vec![(0.0, value)] };
    let e = KernelExpansion::new(terms, 5.0).unwrap();
    KernelSpec::tabulated(TabulatedKernel::new(vec![1e-3, 1e6], vec![value, value], e).unwrap())
}

#[test]
fn zero_and_constant_kernels() {
    let g = small_grid();
    let z = assemble_v(&g, &constant_kernel(0.0)).unwrap();
    assert!(z.as_slice().iter().all(|v| *v == 0.0));
    let x = build_grid(&g);
    let ints: Vec<f64> = (1..g.cells).map(|i| (x[i + 1] - x[i - 1]) / 2.0).collect();
    let outer = SymMatrix::from_fn(ints.len(), |i, j| ints[i] * ints[j]);
    assert_close(&assemble_v(&g, &constant_kernel(1.0)).unwrap(), &outer, 1e-12);
}

#[test]
fn forms_are_symmetric() {
    let g = GridSpec::new(1e-4, 40.0, 64).unwrap();
    for k in [KernelSpec::cosine(), KernelSpec::sine(), KernelSpec::bessel(1.0, 0.5).unwrap()] {
        let f = FormMatrices::assemble(&g, &k, 1.2).unwrap();
        assert!(f.v.asymmetry() <= 1e-12 * f.v.max_abs());
        let (b, _) = f.bordered(-0.3, 1e-8, g.ln_x_min);
        assert!(b.asymmetry() <= 1e-12 * b.max_abs());
    }
}

#[test]
fn no_coupling_no_negative_spectrum() {
    let g = GridSpec::from_log_bounds(-12.0, 12.0, 96).unwrap();
    for l in [0.5, 1.0, 3.0] {
        let f = FormMatrices::assemble(&g, &KernelSpec::cosine(), l).unwrap();
        for eps in [0.0, 1e-6, 1e-10] {
            assert_eq!(negative_inertia_count(&f, 0.0, eps).unwrap(), 0);
        }
    }
}

#[test]
fn inertia_eigen_and_pencil_agree() {
    // the unscaled pencil spans x^{2l+1} over the window, so large l needs a narrower one
    for (k, l, gamma, x_min, x_max) in [
        (KernelSpec::cosine(), 1.0, -0.25, 1e-5, 50.0),
        (KernelSpec::cosine(), 1.0, 0.25, 1e-5, 50.0),
        (KernelSpec::cosine(), 1.0, -0.6, 1e-5, 50.0),
        (KernelSpec::cosine(), 0.5, 0.1, 1e-5, 50.0),
        (KernelSpec::cosine(), 3.0, -0.45, 1e-2, 20.0),
        (KernelSpec::sine(), 3.0, -0.3, 1e-2, 20.0),
    ] {
        let g = GridSpec::new(x_min, x_max, 96).unwrap();
        let f = FormMatrices::assemble(&g, &k, l).unwrap();
        for eps in [1e-6, 1e-8] {
            let a = f.negative_count(gamma, eps, 0.0).unwrap();
            assert_eq!(a, f.negative_count_eigen(gamma, eps, 0.0), "l={l} gamma={gamma} eps={eps}");
            assert_eq!(a, f.negative_count_pencil(gamma, eps, 0.0).unwrap(), "l={l} gamma={gamma} eps={eps}");
        }
    }
    // scaled routes on the wide window
    let g = GridSpec::new(1e-5, 50.0, 96).unwrap();
    let f = FormMatrices::assemble(&g, &KernelSpec::cosine(), 3.0).unwrap();
    for eps in [1e-6, 1e-8, 1e-10] {
        assert_eq!(f.negative_count(-0.45, eps, g.ln_x_min).unwrap(), f.negative_count_eigen(-0.45, eps, g.ln_x_min));
    }
}

fn tabulated_cosine() -> KernelSpec {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let t: Vec<f64> = (0..4000).map(|i| 0.05 * 1.003f64.powi(i)).collect();
    let v: Vec<f64> = t.iter().map(|t| c * t.cos() * (-t * t / 2000.0).exp()).collect();
    let e = KernelExpansion::new(vec![(0.0, c), (2.0, -c / 2.0), (4.0, c / 24.0)], 6.0).unwrap();
    KernelSpec::tabulated(TabulatedKernel::new(t, v, e).unwrap())
}

#[test]
fn flipping_kernel_and_coupling_together() {
    let k = tabulated_cosine();
    let KernelSpec::Tabulated(tab) = &k else { unreachable!() };
    let neg = KernelSpec::tabulated(tab.negated());
    let g = GridSpec::from_log_bounds(-8.0, 4.0, 64).unwrap();
    for l in [1.0, 2.0, 3.0] {
        let a = FormMatrices::assemble(&g, &k, l).unwrap();
        let b = FormMatrices::assemble(&g, &neg, l).unwrap();
        for gamma in [-0.45, -0.2, 0.3] {
            for eps in [1e-6, 1e-10] {
                assert_eq!(
                    a.negative_count(gamma, eps, g.ln_x_min).unwrap(),
                    b.negative_count(-gamma, eps, g.ln_x_min).unwrap(),
                    "l={l} gamma={gamma}"
                );
            }
        }
    }
}

fn sweep(window: f64, cells: usize, levels: usize) -> Vec<GridSpec> {
    let mut out = vec![GridSpec::from_log_bounds(-window, window, cells).unwrap()];
    for _ in 1..levels {
        let next = out.last().unwrap().extend().unwrap();
        out.push(next);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn refinement_is_monotone(l in 0.3f64..4.0, gamma in -0.8f64..0.8, cos in any::<bool>()) {
        let k = if cos { KernelSpec::cosine() } else { KernelSpec::sine() };
        prop_assume!(k.resonance(l).is_none());
        let specs = sweep(4.0, 16, 4);
        let r = refinement_verdict(&specs, &k, l, gamma, &[1e-6, 1e-8, 1e-10]).unwrap();
        prop_assert!(r.monotone, "{:?}", r.table(4, 3));
        prop_assert!(r.epsilon_monotone, "{:?}", r.table(4, 3));
        prop_assert!(r.eigen_agrees);
    }

    #[test]
    fn bisection_is_monotone(l in 0.3f64..3.0, gamma in -0.6f64..0.6) {
        prop_assume!(KernelSpec::cosine().resonance(l).is_none());
        let coarse = GridSpec::from_log_bounds(-10.0, 6.0, 32).unwrap();
        let fine = coarse.bisect();
        prop_assert!(coarse.nested_in(&fine));
        let ln_ref = coarse.ln_x_min;
        let a = FormMatrices::assemble(&coarse, &KernelSpec::cosine(), l).unwrap();
        let b = FormMatrices::assemble(&fine, &KernelSpec::cosine(), l).unwrap();
        for eps in [1e-6, 1e-8] {
            prop_assert!(a.negative_count(gamma, eps, ln_ref).unwrap() <= b.negative_count(gamma, eps, ln_ref).unwrap());
        }
    }
}

#[test]
fn short_sweep_verdicts() {
    let specs = sweep(6.0, 32, 4);
    let eps = [1e-6, 1e-8, 1e-10];
    let r = refinement_verdict(&specs, &KernelSpec::cosine(), 1.0, -0.25, &eps).unwrap();
    assert_eq!(r.verdict, Verdict::Finite(1));
    let r = refinement_verdict(&specs, &KernelSpec::cosine(), 1.0, 0.25, &eps).unwrap();
    assert_eq!(r.verdict, Verdict::Finite(0));
    let r = refinement_verdict(&specs, &KernelSpec::cosine(), 1.0, 0.0, &eps).unwrap();
    assert_eq!(r.verdict, Verdict::Finite(0));
    assert!(refinement_verdict(&specs[..2], &KernelSpec::cosine(), 1.0, -0.25, &eps).is_err());
    assert!(refinement_verdict(&specs, &KernelSpec::cosine(), 1.0, -0.25, &[1e-6, 1e-7]).is_err());
}

#[test]
fn dumps_round_trip() {
    let g = GridSpec::new(1e-3, 20.0, 24).unwrap();
    let f = FormMatrices::assemble(&g, &KernelSpec::cosine(), 1.4).unwrap();
    let dir = std::env::temp_dir().join(format!("friedrichs-dump-{}", std::process::id()));
    f.write_dumps(&dir, -0.2, 1e-8, g.ln_x_min).unwrap();
    for (name, m) in [("h0", &f.h0), ("v", &f.v)] {
        let (r, c, data) = read_dump(std::fs::File::open(dir.join(format!("{name}.bin"))).unwrap()).unwrap();
        assert_eq!((r, c), (m.dim(), m.dim()));
        assert_eq!(data, m.as_slice());
    }
    let (r, _, _) = read_dump(std::fs::File::open(dir.join("bordered.bin")).unwrap()).unwrap();
    assert_eq!(r, f.dim() + f.low_rank.len());
    std::fs::remove_dir_all(&dir).unwrap();
}
