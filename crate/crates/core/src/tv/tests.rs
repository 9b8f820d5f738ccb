use super::*;
use crate::prox::shrink_scalar;
use crate::rng::SeededRng;
use crate::solver::{evaluate_phi, evaluate_psi, ubama_step, x_step_objective, y_step_objective, Selection};

fn random_spec(seed: u64, n: usize, kernel: BlurKernel, rate: f64) -> TvSpec {
    let mut rng = SeededRng::new(seed);
    let mask = if rate >= 1.0 {
        SamplingMask::full(n, n)
    } else {
        SamplingMask::bernoulli(n, n, rate, &mut rng).unwrap()
    };
    let mut b = ImageGrid::new(n, n, rng.uniform_vec(n * n, 0.0, 1.0)).unwrap();
    mask.apply_in_place(b.as_mut_slice());
    TvSpec::with_defaults(b, mask, kernel, 0.1).unwrap()
}

fn random_field(rng: &mut SeededRng, n: usize, scale: f64) -> GradField {
    GradField::from_vec(n, n, rng.gaussian_vec(2 * n * n).iter().map(|v| scale * v).collect()).unwrap()
}

#[test]
fn defaults_follow_the_rule() {
    let d = tv_defaults(0.1, false).unwrap();
    assert!((d.tau - 0.07).abs() < 1e-15 && (d.beta - 5.0).abs() < 1e-15 && d.alpha == 0.1);
    let d = tv_defaults(0.05, false).unwrap();
    assert!((d.tau - 0.035).abs() < 1e-15 && (d.beta - 2.5).abs() < 1e-15);
    let d = tv_defaults(0.0, true).unwrap();
    assert_eq!((d.tau, d.beta, d.alpha), (4e-4, 2e-2, 0.1));
    assert!(tv_defaults(0.0, false).is_err());
}

#[test]
fn x_step_fixed_point() {
    let n = 8;
    let mut rng = SeededRng::new(4);
    let x = ImageGrid::new(n, n, rng.uniform_vec(n * n, 0.0, 1.0)).unwrap();
    let spec = TvSpec::with_defaults(x.clone(), SamplingMask::full(n, n), BlurKernel::delta(1, 1).unwrap(), 0.1)
        .unwrap();
    let next = ubama_tv_x_step(&spec, &x, &diff_forward(&x)).unwrap();
    assert!(next.dist(&x) < 1e-12);
}

#[test]
fn x_step_minimizes_its_objective() {
    for (seed, kernel, rate) in [
        (1, BlurKernel::delta(1, 1).unwrap(), 0.5),
        (2, BlurKernel::disk(2).unwrap(), 1.0),
        (3, BlurKernel::gaussian(3, 0.8).unwrap(), 0.7),
    ] {
        let spec = random_spec(seed, 16, kernel, rate);
        let p = TvProblem::ubama(spec.clone()).unwrap();
        let (psi, _) = p.kernels().unwrap();
        let mut rng = SeededRng::new(seed + 100);
        let x_k = ImageGrid::new(16, 16, rng.uniform_vec(256, 0.0, 1.0)).unwrap();
        let y_k = random_field(&mut rng, 16, 0.3);
        let u = x_k.zeros_like();
        let next = p.x_step_fft(&x_k, &y_k, &u).unwrap();
        let f = |x: &ImageGrid| x_step_objective(&p, x, &x_k, &y_k, &u, &psi).unwrap();
        let best = f(&next);
        assert!(best <= f(&x_k) + 1e-12);
        for _ in 0..50 {
            let mut z = next.clone();
            let d: Vec<f64> = rng.gaussian_vec(256).iter().map(|v| 1e-2 * v).collect();
            z.axpy(1.0, &next.with_data(d));
            assert!(best <= f(&z) + 1e-12);
        }

        // residual of (beta D^T D + mu K^T K) x = rhs
        let beta = spec.weights.beta;
        let dtd = diff_adjoint(&diff_forward(&next));
        let gram = p.op.gram(&next);
        let lhs: Vec<f64> = (0..256).map(|i| beta * dtd.as_slice()[i] + spec.mu * gram.as_slice()[i]).collect();
        let dty = diff_adjoint(&y_k);
        let gk = p.op.gram(&x_k);
        let nk = p.op.normal(&x_k);
        let rhs: Vec<f64> = (0..256)
            .map(|i| p.data_rhs.as_slice()[i] + beta * dty.as_slice()[i] + spec.mu * gk.as_slice()[i] - nk.as_slice()[i])
            .collect();
        let res: f64 = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-10 * scale, "relative residual {}", res / scale);
    }
}

#[test]
fn y_step_without_threshold_averages() {
    let mut spec = random_spec(5, 8, BlurKernel::delta(1, 1).unwrap(), 1.0);
    spec.weights.tau = 0.0;
    let mut rng = SeededRng::new(6);
    let x = ImageGrid::new(8, 8, rng.uniform_vec(64, 0.0, 1.0)).unwrap();
    let y_k = random_field(&mut rng, 8, 1.0);
    let eta = subgrad_iso_tv(&y_k);
    let out = ubama_tv_y_step(&spec, &x, &y_k, &eta).unwrap();
    let dx = diff_forward(&x);
    let (beta, nu) = (spec.weights.beta, spec.nu);
    for i in 0..out.as_slice().len() {
        let want = (beta * dx.as_slice()[i] + nu * y_k.as_slice()[i]) / (beta + nu);
        assert!((out.as_slice()[i] - want).abs() < 1e-14);
    }
}

#[test]
fn y_step_anisotropic_only_is_shrink_of_gradient() {
    let mut spec = random_spec(7, 8, BlurKernel::delta(1, 1).unwrap(), 1.0);
    spec.weights.alpha = 0.0;
    let mut rng = SeededRng::new(8);
    let x = ImageGrid::new(8, 8, rng.uniform_vec(64, 0.0, 1.0)).unwrap();
    let y_k = diff_forward(&x);
    let out = ubama_tv_y_step(&spec, &x, &y_k, &subgrad_iso_tv(&y_k)).unwrap();
    let s = spec.weights.beta + spec.nu;
    for (o, a) in out.as_slice().iter().zip(y_k.as_slice()) {
        // grid oracle on the scalar prox
        let t = spec.weights.tau / s;
        let grid_min = (-20000..=20000)
            .map(|k| k as f64 * 1e-4)
            .min_by(|p, q| {
                let fp = t * p.abs() + 0.5 * (p - a).powi(2);
                let fq = t * q.abs() + 0.5 * (q - a).powi(2);
                fp.total_cmp(&fq)
            })
            .unwrap();
        assert!((o - grid_min).abs() <= 1e-4);
        assert!((o - shrink_scalar(*a, t)).abs() < 1e-14);
    }
}

#[test]
fn y_step_optimality_and_probe() {
    let spec = random_spec(9, 12, BlurKernel::delta(1, 1).unwrap(), 0.5);
    let p = TvProblem::ubama(spec.clone()).unwrap();
    let (_, phi) = p.kernels().unwrap();
    let mut rng = SeededRng::new(10);
    let x = ImageGrid::new(12, 12, rng.uniform_vec(144, 0.0, 1.0)).unwrap();
    let y_k = random_field(&mut rng, 12, 0.2);
    let v = p.select_subgrad_g2(&y_k).unwrap();
    let out = p.y_step(&x, &y_k, &v, spec.nu).unwrap();

    // 0 in tau d|y| + beta (y - Dx) + nu (y - y_k) - v, componentwise
    let dx = diff_forward(&x);
    let TvWeights { tau, beta, .. } = spec.weights;
    for i in 0..out.as_slice().len() {
        let y = out.as_slice()[i];
        let smooth = beta * (y - dx.as_slice()[i]) + spec.nu * (y - y_k.as_slice()[i]) - v.as_slice()[i];
        if y != 0.0 {
            assert!((smooth + tau * y.signum()).abs() <= 1e-8);
        } else {
            assert!(smooth.abs() <= tau + 1e-8);
        }
    }

    let f = |y: &GradField| y_step_objective(&p, y, &x, &y_k, &v, &phi).unwrap();
    let best = f(&out);
    for _ in 0..50 {
        let mut z = out.clone();
        let d = random_field(&mut rng, 12, 1e-2);
        z.axpy(1.0, &d);
        assert!(best <= f(&z) + 1e-12);
    }
}

#[test]
fn palm_step_matches_closed_form_without_blur() {
    let spec = random_spec(11, 16, BlurKernel::delta(1, 1).unwrap(), 1.0);
    let mut rng = SeededRng::new(12);
    let x_k = ImageGrid::new(16, 16, rng.uniform_vec(256, 0.0, 1.0)).unwrap();
    let y_k = random_field(&mut rng, 16, 0.3);
    let c = 3.0;
    let got = palm_tv_x_step(&spec, &x_k, &y_k, c, 1e-8).unwrap();
    let beta = spec.weights.beta;
    let g = diff_adjoint(&{
        let mut r = diff_forward(&x_k);
        r.axpy(-1.0, &y_k);
        r
    });
    for i in 0..256 {
        let want = (spec.b.as_slice()[i] + c * x_k.as_slice()[i] - beta * g.as_slice()[i]) / (1.0 + c);
        assert!((got.as_slice()[i] - want).abs() < 1e-6);
    }
}

#[test]
fn palm_step_zero_fixed_point() {
    let n = 8;
    let spec = TvSpec::with_defaults(
        ImageGrid::zeros(n, n),
        SamplingMask::full(n, n),
        BlurKernel::disk(1).unwrap(),
        0.1,
    )
    .unwrap();
    let out = palm_tv_x_step(&spec, &ImageGrid::zeros(n, n), &GradField::zeros(n, n), 2.0, 1e-8).unwrap();
    assert!(out.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn palm_kernel_reproduces_linearized_step() {
    // With kernel c I - beta D^T D the exact x-subproblem minimizer equals the
    // linearized step; probe minimality of the PCG answer.
    let spec = random_spec(13, 12, BlurKernel::gaussian(3, 1.0).unwrap(), 0.6);
    let p = TvProblem::palm(spec, 1e-10).unwrap();
    let (psi, _) = p.kernels().unwrap();
    let mut rng = SeededRng::new(14);
    let x_k = ImageGrid::new(12, 12, rng.uniform_vec(144, 0.0, 1.0)).unwrap();
    let y_k = random_field(&mut rng, 12, 0.3);
    let u = x_k.zeros_like();
    let next = p.x_step_pcg(&x_k, &y_k, &u).unwrap();
    let f = |x: &ImageGrid| x_step_objective(&p, x, &x_k, &y_k, &u, &psi).unwrap();
    let best = f(&next);
    for _ in 0..50 {
        let mut z = next.clone();
        z.axpy(1.0, &next.with_data(rng.gaussian_vec(144).iter().map(|v| 1e-2 * v).collect()));
        assert!(best <= f(&z) + 1e-10);
    }
}

#[test]
fn engine_step_reproduces_closed_forms() {
    let spec = random_spec(15, 16, BlurKernel::delta(1, 1).unwrap(), 0.5);
    let p = TvProblem::ubama(spec.clone()).unwrap();
    let (psi, phi) = p.kernels().unwrap();
    let (x0, y0) = tv_initial_point(&spec);
    let out = ubama_step(&p, &x0, &y0, &psi, &phi).unwrap();
    let x1 = ubama_tv_x_step(&spec, &x0, &y0).unwrap();
    let y1 = ubama_tv_y_step(&spec, &x1, &y0, &subgrad_iso_tv(&y0)).unwrap();
    assert_eq!(out.x, x1);
    assert_eq!(out.y, y1);
}

#[test]
fn surrogate_dominates_at_start() {
    let spec = random_spec(16, 16, BlurKernel::delta(1, 1).unwrap(), 0.5);
    let p = TvProblem::ubama(spec.clone()).unwrap();
    let (x0, y0) = tv_initial_point(&spec);
    let mut rng = SeededRng::new(17);
    let y = random_field(&mut rng, 16, 0.5);
    let sel = Selection::select(&p, &x0, &y0).unwrap();
    let phi = evaluate_phi(&p, &x0, &y).unwrap();
    let psi = evaluate_psi(&p, &x0, &y, &sel).unwrap();
    assert!(psi - phi >= -1e-12);
}

#[test]
fn noiseless_identity_keeps_observation() {
    let truth = phantom(16, 16);
    let mut spec = TvSpec::with_defaults(
        truth.clone(),
        SamplingMask::full(16, 16),
        BlurKernel::delta(1, 1).unwrap(),
        0.1,
    )
    .unwrap();
    spec.weights.tau = 1e-9;
    let res = tv_solve(&spec, TvMethod::Ubama, 1e-6, 200, Some(&truth)).unwrap();
    assert!(res.x.dist(&truth) / truth.norm() < 1e-3);
}

#[test]
fn short_runs_are_audited_clean() {
    let inst = TvInstance::synthetic(phantom(24, 24), BlurKernel::disk(2).unwrap(), 0.0, 1.0, 3);
    // delta = 0 with blur still has defaults
    let inst = inst.unwrap();
    let res = tv_solve(&inst.spec, TvMethod::Ubama, 1e-5, 40, Some(&inst.truth)).unwrap();
    assert!(res.audit.unwrap().is_clean());
    let inst = TvInstance::synthetic(phantom(24, 24), BlurKernel::delta(1, 1).unwrap(), 0.1, 0.5, 4).unwrap();
    let res = tv_solve(&inst.spec, TvMethod::Ubama, 1e-5, 40, None).unwrap();
    assert!(res.audit.unwrap().is_clean());
}
