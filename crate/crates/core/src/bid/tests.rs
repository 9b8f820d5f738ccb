use super::*;
use crate::rng::SeededRng;

fn small(seed: u64, kh: usize, mode: KernelMode) -> (BidInstance, BidProblem) {
    let truth = ImageGrid::from_fn(12, 10, |i, j| if (i + j) % 5 < 2 { 0.8 } else { 0.2 });
    let kernel = BlurKernel::gaussian(kh, 1.0).unwrap();
    let inst = BidInstance::synthetic(truth, kernel, 1e-2, seed).unwrap();
    let mut spec = inst.spec(mode);
    // moderate weights keep finite differences well conditioned
    spec.lambda = 50.0;
    spec.tau = 10.0;
    (inst, BidProblem::new(spec).unwrap())
}

fn random_image(rng: &mut SeededRng, h: usize, w: usize) -> ImageGrid {
    ImageGrid::new(h, w, rng.uniform_vec(h * w, 0.0, 1.0)).unwrap()
}

fn random_kernel(rng: &mut SeededRng, kh: usize, kw: usize) -> BlurKernel {
    let mut w: Vec<f64> = (0..kh * kw).map(|_| rng.uniform_in(0.1, 1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    BlurKernel::new(kh, kw, w).unwrap()
}

#[test]
fn robust_error_examples() {
    assert_eq!(phi_robust(&[0.0, 0.0], 3.0), 0.0);
    assert_eq!(phi_robust_grad(&[0.0], 3.0), vec![0.0]);
    assert!((phi_robust(&[1.0], 1.0) - 2f64.ln()).abs() < 1e-15);
    assert!((phi_robust_grad(&[1.0], 1.0)[0] - 1.0).abs() < 1e-15);

    let mut rng = SeededRng::new(1);
    let x = rng.gaussian_vec(30);
    let g = phi_robust_grad(&x, 4.0);
    let h = 1e-6;
    for i in 0..x.len() {
        let mut p = x.clone();
        let mut m = x.clone();
        p[i] += h;
        m[i] -= h;
        let fd = (phi_robust(&p, 4.0) - phi_robust(&m, 4.0)) / (2.0 * h);
        assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0), "{i}: {fd} vs {}", g[i]);
    }
}

#[test]
fn block_gradients_match_finite_differences() {
    let (_, p) = small(2, 3, KernelMode::Euclidean);
    let mut rng = SeededRng::new(3);
    for _ in 0..5 {
        let x = random_image(&mut rng, 12, 10);
        let y = random_kernel(&mut rng, 3, 3);
        let dx = random_image(&mut rng, 12, 10);
        let dy = random_kernel(&mut rng, 3, 3);
        let h = 1e-6;

        let mut xp = x.clone();
        xp.axpy(h, &dx);
        let mut xm = x.clone();
        xm.axpy(-h, &dx);
        let fd = (p.h_minus(&xp, &y) - p.h_minus(&xm, &y)) / (2.0 * h);
        let an = p.grad_x(&x, &y).dot(&dx);
        assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "x: {fd} vs {an}");

        let mut yp = y.clone();
        yp.axpy(h, &dy);
        let mut ym = y.clone();
        ym.axpy(-h, &dy);
        let fd = (p.h_minus(&x, &yp) - p.h_minus(&x, &ym)) / (2.0 * h);
        let an = p.grad_y(&x, &y).dot(&dy);
        assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "y: {fd} vs {an}");
    }
}

#[test]
fn sharp_constant_image_is_stationary() {
    let b = ImageGrid::filled(9, 9, 0.4);
    let p = BidProblem::new(BidSpec::with_defaults(b.clone(), (3, 3), KernelMode::Euclidean)).unwrap();
    let delta = BlurKernel::delta(3, 3).unwrap();
    assert!(p.data_term(&b, &delta) < 1e-20);
    // lambda = 5e5 amplifies FFT round-off
    assert!(p.grad_x(&b, &delta).norm() < 1e-8);
    assert!(p.grad_y(&b, &delta).norm() < 1e-8);
}

#[test]
fn x_update_cases_and_minimality() {
    let (inst, p) = small(4, 3, KernelMode::Euclidean);
    let y = inst.kernel.clone();
    let mut rng = SeededRng::new(5);
    let x_k = random_image(&mut rng, 12, 10);
    let g = p.grad_x(&x_k, &y);
    let c = 40.0;
    let x = bid_x_update(&p, &x_k, &y, c).unwrap();
    assert!(BidProblem::in_box(&x));

    let obj = |z: &ImageGrid| {
        let mut d = z.clone();
        d.axpy(-1.0, &x_k);
        -d.dot(&g) + 0.5 * c * d.norm().powi(2)
    };
    let best = obj(&x);
    for _ in 0..50 {
        let mut z = x.clone();
        for v in z.as_mut_slice() {
            *v = (*v + 0.01 * rng.gaussian()).clamp(0.0, 1.0);
        }
        assert!(obj(&z) >= best - 1e-12);
    }

    // clamping from above
    let sharp = ImageGrid::filled(12, 10, 1.0);
    let up = box_step(&sharp, &ImageGrid::filled(12, 10, 5.0), 1.0);
    assert!(up.as_slice().iter().all(|&v| v == 1.0));
    // zero gradient at an interior point
    let mid = ImageGrid::filled(12, 10, 0.5);
    assert_eq!(box_step(&mid, &mid.zeros_like(), 3.0), mid);
}

fn kl(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * (x / y).ln() + y - x).sum()
}

#[test]
fn y_updates_stay_on_simplex_and_fix_zero_gradients() {
    let mut rng = SeededRng::new(6);
    let y = random_kernel(&mut rng, 5, 5);
    let zero = y.zeros_like();
    let s = simplex_step(&y, &zero, 2.0).unwrap();
    let e = entropy_step(&y, &zero, 2.0).unwrap();
    for ((a, b), c) in e.weights().iter().zip(s.weights()).zip(y.weights()) {
        assert!((a - c).abs() < 1e-15);
        assert!((b - c).abs() < 1e-15);
    }
    // constant gradient cancels in the normalization / projection
    let constant = y.with_weights(vec![3.7; 25]);
    let e = entropy_step(&y, &constant, 0.5).unwrap();
    let s = simplex_step(&y, &constant, 0.5).unwrap();
    for ((a, b), c) in e.weights().iter().zip(s.weights()).zip(y.weights()) {
        assert!((a - c).abs() < 1e-12);
        assert!((b - c).abs() < 1e-12);
    }
    let uniform = BlurKernel::uniform(5, 5).unwrap();
    let u = simplex_step(&uniform, &constant, 0.5).unwrap();
    assert!(u.weights().iter().all(|v| (v - 0.04).abs() < 1e-14));

    for _ in 0..20 {
        let g = y.with_weights(rng.gaussian_vec(25).iter().map(|v| 50.0 * v).collect());
        let s = simplex_step(&y, &g, 1.0).unwrap();
        let e = entropy_step(&y, &g, 10.0).unwrap();
        assert!(BidProblem::on_simplex(&s));
        assert!(e.weights().iter().all(|&v| v > 0.0));
        assert!((e.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn entropy_update_minimizes_its_subproblem() {
    let mut rng = SeededRng::new(7);
    let y = random_kernel(&mut rng, 3, 3);
    let g = y.with_weights(rng.gaussian_vec(9));
    let d = 0.8;
    let e = entropy_step(&y, &g, d).unwrap();
    let obj = |w: &[f64]| {
        let lin: f64 = w.iter().zip(y.weights()).zip(g.weights()).map(|((a, b), s)| (a - b) * s).sum();
        -lin + d * kl(w, y.weights())
    };
    let best = obj(e.weights());
    for _ in 0..50 {
        let mut w: Vec<f64> = e
            .weights()
            .iter()
            .map(|v| v * (1.0 + 0.05 * rng.gaussian()).max(0.01))
            .collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        assert!(obj(&w) >= best - 1e-12);
    }
}

#[test]
fn entropy_rejects_boundary_and_large_d_freezes_both_modes() {
    let y = BlurKernel::delta(3, 3).unwrap();
    assert!(matches!(entropy_step(&y, &y, 1.0), Err(Error::Domain(_))));

    let mut rng = SeededRng::new(8);
    let y = random_kernel(&mut rng, 3, 3);
    let g = y.with_weights(rng.gaussian_vec(9));
    let e = entropy_step(&y, &g, 1e12).unwrap();
    let s = simplex_step(&y, &g, 1e12).unwrap();
    for ((a, b), c) in e.weights().iter().zip(s.weights()).zip(y.weights()) {
        assert!((a - c).abs() < 1e-8);
        assert!((b - c).abs() < 1e-8);
    }
}

#[test]
fn backtracking_on_quadratic_toy() {
    // Phi(x) = L/2 x^2, i.e. h-(x) = -L/2 x^2 with gradient -L x.
    let l = 37.0;
    let phi = |x: f64| 0.5 * l * x * x;
    let x0 = 1.3;
    let g = -l * x0;
    let bt = Backtracking::default();
    let acc = backtrack_step(
        1.0,
        &bt,
        1,
        |c| Ok(x0 + g / c),
        |c, x| {
            let step = x - x0;
            Ok(phi(*x) <= phi(x0) + NO_INCREASE_TOL
                && phi(*x) <= phi(x0) - g * step + 0.5 * c * step * step + 1e-12)
        },
    )
    .unwrap();
    assert!(acc.scalar >= l && acc.scalar <= 4.0 * l, "{}", acc.scalar);

    // stationary point: first candidate
    let acc = backtrack_step(5.0, &bt, 1, |_| Ok(0.0), |_, x| Ok(phi(*x) <= phi(0.0))).unwrap();
    assert_eq!((acc.doublings, acc.scalar), (0, 2.5));

    let err = backtrack_step(1.0, &bt, 17, |c| Ok(c), |_, _| Ok(false)).unwrap_err();
    assert!(matches!(err, Error::LineSearch { iteration: 17, doublings: 60 }));
}

#[test]
fn delta_blur_keeps_sharp_input() {
    let truth = ImageGrid::from_fn(16, 16, |i, j| if i < 8 && j > 4 { 0.9 } else { 0.1 });
    let p = BidProblem::new(BidSpec::with_defaults(truth.clone(), (1, 1), KernelMode::Euclidean)).unwrap();
    let run = bid_solve(&p, &BidOptions { eps: 0.0, maxit: 50, ..Default::default() }).unwrap();
    assert!(run.solve.audit.as_ref().unwrap().is_clean());
    assert!(run.solve.x.dist(&truth) / truth.norm() < 1e-3);
}

#[test]
fn short_runs_feasible_and_monotone() {
    for mode in [KernelMode::Euclidean, KernelMode::Entropy] {
        let (inst, _) = small(9, 3, mode);
        let p = BidProblem::new(inst.spec(mode)).unwrap();
        let seen = std::cell::Cell::new(0);
        let check = |k: usize, x: &ImageGrid, y: &BlurKernel| {
            assert!(BidProblem::in_box(x) && BidProblem::on_simplex(y), "iterate {k}");
            seen.set(k);
        };
        let opts = BidOptions {
            eps: 0.0,
            maxit: 40,
            truth: Some(&inst.truth),
            fixed_kernel: None,
            observer: Some(&check),
        };
        let run = bid_solve(&p, &opts).unwrap();
        assert_eq!(run.solve.iterations, 40);
        assert_eq!(seen.get(), 40);
        assert!(run.solve.audit.as_ref().unwrap().is_clean());
        let mut prev = run.solve.trace.initial_phi;
        for r in &run.solve.trace.records {
            assert!(r.phi <= prev + NO_INCREASE_TOL);
            prev = r.phi;
        }
        assert!(BidProblem::in_box(&run.solve.x));
        assert!(BidProblem::on_simplex(&run.solve.y));
    }
}

#[test]
fn rejects_bad_specs() {
    let b = ImageGrid::filled(8, 8, 0.5);
    let mut spec = BidSpec::with_defaults(b, (2, 3), KernelMode::Euclidean);
    assert!(BidProblem::new(spec.clone()).is_err());
    spec.kernel_shape = (3, 3);
    spec.lambda = 0.0;
    assert!(BidProblem::new(spec.clone()).is_err());
    spec.lambda = 1.0;
    spec.backtracking.grow = 1.0;
    assert!(BidProblem::new(spec).is_err());
}

