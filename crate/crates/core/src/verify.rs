//! Seeded oracle suites for the proximal operators, the linear operators and
//! the smooth-part gradients.
//!
//! Every suite draws its cases from a [`SeededRng`] and compares the
//! production code against an independent oracle: a brute-force grid search,
//! an optimality (KKT) certificate, a definitional formula, the adjoint
//! identity, or central finite differences.

use nalgebra::DMatrix;

use crate::bid::{BidProblem, BidSpec, KernelMode};
use crate::error::Result;
use crate::linops::{
    diff_adjoint, diff_forward, directional_adjoint, directional_channel, BlurKernel,
    CircularConv, GradField, ImageGrid, SamplingMask,
};
use crate::prox::{
    capped_l1_excess, capped_trace_excess, group_l21_norm, nuclear_norm, proj_box, proj_simplex,
    shrink, subgrad_capped_l1, subgrad_capped_trace, subgrad_iso_tv, svt, BregmanKernel,
    LinearOperator,
};
use crate::rng::SeededRng;
use crate::solver::{Block, DcProblem};
use crate::tv::{TvProblem, TvSpec};

/// Cases per operator suite.
pub const ORACLE_CASES: usize = 200;
/// Seeded points per gradient suite.
pub const GRADIENT_POINTS: usize = 20;

pub const GRID_TOL: f64 = 1e-4;
pub const OPTIMALITY_TOL: f64 = 1e-8;
pub const KKT_TOL: f64 = 1e-10;
pub const ADJOINT_TOL: f64 = 1e-10;
pub const GRADIENT_TOL: f64 = 1e-5;

/// Outcome of one suite. `max_error` is in the suite's own units (see the
/// suite name); a case fails when its error exceeds `tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            max_error: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, err: f64) {
        self.cases += 1;
        // NaN counts as a failure
        if !(err <= self.tolerance) {
            self.failures += 1;
        }
        if err.is_nan() || err > self.max_error {
            self.max_error = if err.is_nan() { f64::INFINITY } else { err };
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:<28} {:>4} cases  {:>3} failures  max err {:.2e} (tol {:.0e})",
            self.name, self.cases, self.failures, self.max_error, self.tolerance
        )
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn random_image(rng: &mut SeededRng, h: usize, w: usize) -> ImageGrid {
    ImageGrid::new(h, w, rng.gaussian_vec(h * w)).expect("shape")
}

fn random_field(rng: &mut SeededRng, h: usize, w: usize) -> GradField {
    GradField::from_vec(h, w, rng.gaussian_vec(2 * h * w)).expect("shape")
}

fn random_matrix(rng: &mut SeededRng, m: usize, n: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_vec(m, n, rng.gaussian_vec(m * n)).scale(scale)
}

fn odd(rng: &mut SeededRng, max_half: usize) -> usize {
    2 * (rng.uniform() * (max_half + 1) as f64) as usize + 1
}

fn size(rng: &mut SeededRng, lo: usize, hi: usize) -> usize {
    lo + (rng.uniform() * (hi - lo + 1) as f64) as usize
}

/// Brute-force minimizer of a convex scalar function on `[lo, hi]`: a coarse
/// grid followed by successively finer grids around the best point.
fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut best = lo;
    for _ in 0..6 {
        let n = 400;
        let step = (b - a) / n as f64;
        let mut fbest = f64::INFINITY;
        for k in 0..=n {
            let x = a + step * k as f64;
            let fx = f(x);
            if fx < fbest {
                fbest = fx;
                best = x;
            }
        }
        a = (best - step).max(lo);
        b = (best + step).min(hi);
    }
    best
}

/// `shrink` against a grid search of `t|x| + (x - a)^2 / 2` and its
/// optimality condition `a - x in t d|x|`.
pub fn shrink_suites(seed: u64, cases: usize) -> Vec<SuiteReport> {
    let mut rng = SeededRng::new(seed);
    let mut grid = SuiteReport::new("shrink/grid", GRID_TOL);
    let mut opt = SuiteReport::new("shrink/optimality", OPTIMALITY_TOL);
    for _ in 0..cases {
        let n = size(&mut rng, 1, 6);
        let a: Vec<f64> = (0..n).map(|_| 5.0 * rng.gaussian()).collect();
        let t = rng.uniform_in(0.0, 3.0);
        let x = shrink(&a, t).expect("finite input");
        let mut g_err: f64 = 0.0;
        let mut o_err: f64 = 0.0;
        for (&ai, &xi) in a.iter().zip(&x) {
            let r = ai.abs() + t + 1.0;
            let xg = grid_argmin(|v| t * v.abs() + 0.5 * (v - ai) * (v - ai), -r, r);
            g_err = g_err.max((xg - xi).abs());
            let resid = if xi != 0.0 {
                (ai - xi - t * xi.signum()).abs()
            } else {
                (ai.abs() - t).max(0.0)
            };
            o_err = o_err.max(resid);
        }
        grid.record(g_err);
        opt.record(o_err);
    }
    vec![grid, opt]
}

/// SVT optimality: with `G = (A - X)/t`, `||G||_2 <= 1` and
/// `<G, X> = ||X||_*`. Errors are relative to `max(1, ||X||_*)`.
pub fn svt_suite(seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut rng = SeededRng::new(seed);
    let mut rep = SuiteReport::new("svt/kkt", KKT_TOL);
    for _ in 0..cases {
        let (m, n) = (size(&mut rng, 1, 8), size(&mut rng, 1, 8));
        let scale = rng.uniform_in(0.1, 4.0);
        let a = random_matrix(&mut rng, m, n, scale);
        let t = rng.uniform_in(0.05, 3.0);
        let x = svt(&a, t)?;
        let g = (&a - &x) / t;
        let spectral = g.clone().singular_values().max();
        let nuc = nuclear_norm(&x)?;
        let pairing = (g.dot(&x) - nuc).abs() / nuc.max(1.0);
        rep.record(pairing.max(spectral - 1.0));
    }
    Ok(rep)
}

/// Box projection KKT: feasibility and `x = p` off the active bounds,
/// `x <= lo` at `lo`, `x >= hi` at `hi`.
pub fn proj_box_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = SeededRng::new(seed);
    let mut rep = SuiteReport::new("proj_box/kkt", KKT_TOL);
    for _ in 0..cases {
        let n = size(&mut rng, 1, 20);
        let lo = rng.uniform_in(-2.0, 1.0);
        let hi = lo + rng.uniform_in(0.0, 2.0);
        let x: Vec<f64> = (0..n).map(|_| 2.0 * rng.gaussian()).collect();
        let p = proj_box(&x, lo, hi).expect("valid box");
        let mut err: f64 = 0.0;
        for (&xi, &pi) in x.iter().zip(&p) {
            err = err.max((lo - pi).max(0.0)).max((pi - hi).max(0.0));
            let e = if pi == lo && pi == hi {
                0.0
            } else if pi == lo {
                (xi - lo).max(0.0)
            } else if pi == hi {
                (hi - xi).max(0.0)
            } else {
                (xi - pi).abs()
            };
            err = err.max(e);
        }
        rep.record(err);
    }
    rep
}

/// Threshold `theta` with `sum max(v - theta, 0) = 1`, by bisection.
fn simplex_threshold_bisect(v: &[f64]) -> f64 {
    let mass = |th: f64| v.iter().map(|&x| (x - th).max(0.0)).sum::<f64>();
    let vmax = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (vmax - 1.0, vmax);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Simplex projection: KKT (feasibility, common threshold on the support,
/// entries below it zeroed) and agreement with a bisection threshold.
pub fn proj_simplex_suites(seed: u64, cases: usize) -> Vec<SuiteReport> {
    let mut rng = SeededRng::new(seed);
    let mut kkt = SuiteReport::new("proj_simplex/kkt", KKT_TOL);
    let mut bis = SuiteReport::new("proj_simplex/bisection", KKT_TOL);
    for _ in 0..cases {
        let n = size(&mut rng, 1, 30);
        let scale = rng.uniform_in(0.01, 5.0);
        let v: Vec<f64> = (0..n).map(|_| scale * rng.gaussian()).collect();
        let p = proj_simplex(&v).expect("finite input");

        let mut err = (p.iter().sum::<f64>() - 1.0).abs();
        err = err.max(p.iter().map(|&x| (-x).max(0.0)).fold(0.0, f64::max));
        let support: Vec<usize> = (0..n).filter(|&i| p[i] > 0.0).collect();
        let theta = support.iter().map(|&i| v[i] - p[i]).sum::<f64>() / support.len() as f64;
        for i in 0..n {
            let e = if p[i] > 0.0 {
                (v[i] - p[i] - theta).abs()
            } else {
                (v[i] - theta).max(0.0)
            };
            err = err.max(e);
        }
        kkt.record(err);

        let th = simplex_threshold_bisect(&v);
        let e = v
            .iter()
            .zip(&p)
            .map(|(&vi, &pi)| ((vi - th).max(0.0) - pi).abs())
            .fold(0.0, f64::max);
        bis.record(e);
    }
    vec![kkt, bis]
}

/// Random symmetric positive definite `M = A^T A + c I`.
fn random_spd(rng: &mut SeededRng, n: usize) -> (DMatrix<f64>, f64) {
    let a = random_matrix(rng, n, n, 1.0);
    let c = rng.uniform_in(0.1, 2.0);
    (a.transpose() * &a + DMatrix::identity(n, n) * c, c)
}

/// Closed-form Bregman distances against `psi(x) - psi(y) - <grad psi(y), x - y>`
/// evaluated literally, plus nonnegativity. Errors are relative to the
/// magnitude of the terms of the definitional form.
pub fn bregman_suite(seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut rng = SeededRng::new(seed);
    let mut rep = SuiteReport::new("bregman/definition", KKT_TOL);
    for case in 0..cases {
        let n = size(&mut rng, 1, 10);
        let w = rng.uniform_in(0.1, 10.0);
        let (kernel, psi, grad): (BregmanKernel, Box<dyn Fn(&[f64]) -> f64>, Box<dyn Fn(&[f64]) -> Vec<f64>>);
        let (x, y);
        match case % 3 {
            0 => {
                kernel = BregmanKernel::quadratic(w)?;
                psi = Box::new(move |v| 0.5 * w * dot(v, v));
                grad = Box::new(move |v| v.iter().map(|a| w * a).collect());
                x = rng.gaussian_vec(n);
                y = rng.gaussian_vec(n);
            }
            1 => {
                kernel = BregmanKernel::entropy(w)?;
                psi = Box::new(move |v| w * v.iter().map(|a| if *a > 0.0 { a * a.ln() } else { 0.0 }).sum::<f64>());
                grad = Box::new(move |v| v.iter().map(|a| w * (a.ln() + 1.0)).collect());
                // include exact zeros in x
                x = (0..n)
                    .map(|_| if rng.bernoulli(0.2) { 0.0 } else { rng.uniform_in(0.0, 3.0) })
                    .collect::<Vec<_>>();
                y = rng.uniform_vec(n, 0.01, 3.0);
            }
            _ => {
                let (m, c) = random_spd(&mut rng, n);
                let (m1, m2, m3) = (m.clone(), m.clone(), m);
                let op = LinearOperator::new(n, move |v| (&m1 * DMatrix::from_column_slice(v.len(), 1, v)).as_slice().to_vec());
                kernel = BregmanKernel::operator(op, c)?;
                psi = Box::new(move |v| {
                    let col = DMatrix::from_column_slice(v.len(), 1, v);
                    0.5 * (col.transpose() * &m2 * &col)[(0, 0)]
                });
                grad = Box::new(move |v| (&m3 * DMatrix::from_column_slice(v.len(), 1, v)).as_slice().to_vec());
                x = rng.gaussian_vec(n);
                y = rng.gaussian_vec(n);
            }
        }
        let d = kernel.distance(&x, &y)?;
        let gy = grad(&y);
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let lin = dot(&gy, &diff);
        let (px, py) = (psi(&x), psi(&y));
        let reference = px - py - lin;
        let scale = 1.0 + px.abs() + py.abs() + lin.abs();
        rep.record(((d - reference).abs() / scale).max((-d).max(0.0)));
    }
    Ok(rep)
}

/// Capped-norm subgradients: `g(Z) >= g(X) + <G, Z - X>` at random `Z`
/// (violation reported), for the capped trace and capped l1 excesses.
pub fn capped_suites(seed: u64, cases: usize) -> Result<Vec<SuiteReport>> {
    let mut rng = SeededRng::new(seed);
    let mut trace = SuiteReport::new("capped_trace/subgradient", OPTIMALITY_TOL);
    let mut l1 = SuiteReport::new("capped_l1/subgradient", OPTIMALITY_TOL);
    for _ in 0..cases {
        let (m, n) = (size(&mut rng, 1, 7), size(&mut rng, 1, 7));
        let scale = rng.uniform_in(0.2, 3.0);
        let x = random_matrix(&mut rng, m, n, scale);
        let kappa = rng.uniform_in(0.05, 4.0);
        let g = subgrad_capped_trace(&x, kappa)?;
        let gx = capped_trace_excess(&x, kappa)?;
        let gl = subgrad_capped_l1(x.as_slice(), kappa)?;
        let lx = capped_l1_excess(x.as_slice(), kappa);
        let (mut et, mut el): (f64, f64) = (0.0, 0.0);
        for _ in 0..5 {
            let step = rng.uniform_in(0.01, 3.0);
            let z = &x + random_matrix(&mut rng, m, n, step);
            let dz = &z - &x;
            et = et.max(gx + g.dot(&dz) - capped_trace_excess(&z, kappa)?);
            el = el.max(lx + dot(&gl, dz.as_slice()) - capped_l1_excess(z.as_slice(), kappa));
        }
        trace.record(et.max(0.0));
        l1.record(el.max(0.0));
    }
    Ok(vec![trace, l1])
}

/// Isotropic TV subgradient: unit-bounded pairs and `<xi, y> = ||y||_{2,1}`.
pub fn iso_tv_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = SeededRng::new(seed);
    let mut rep = SuiteReport::new("iso_tv/subgradient", KKT_TOL);
    for _ in 0..cases {
        let (h, w) = (size(&mut rng, 1, 8), size(&mut rng, 1, 8));
        let mut y = random_field(&mut rng, h, w);
        // zero some pixel pairs so the (0, 0) branch is exercised
        let hw = h * w;
        for p in 0..hw {
            if rng.bernoulli(0.2) {
                y.as_mut_slice()[p] = 0.0;
                y.as_mut_slice()[hw + p] = 0.0;
            }
        }
        let xi = subgrad_iso_tv(&y);
        let (a, b) = xi.channels();
        let mut err: f64 = 0.0;
        for p in 0..hw {
            err = err.max(a[p].hypot(b[p]) - 1.0);
        }
        let l21 = group_l21_norm(&y);
        err = err.max((dot(xi.as_slice(), y.as_slice()) - l21).abs() / l21.max(1.0));
        rep.record(err.max(0.0));
    }
    rep
}

/// Every prox-operator suite.
pub fn prox_suites(seed: u64, cases: usize) -> Result<Vec<SuiteReport>> {
    let mut out = shrink_suites(seed, cases);
    out.push(svt_suite(seed + 1, cases)?);
    out.push(proj_box_suite(seed + 2, cases));
    out.extend(proj_simplex_suites(seed + 3, cases));
    out.push(bregman_suite(seed + 4, cases)?);
    out.extend(capped_suites(seed + 5, cases)?);
    out.push(iso_tv_suite(seed + 6, cases));
    Ok(out)
}

/// `|<Ax, y> - <x, A*y>| / (|Ax||y| + |x||A*y|)`.
fn adjoint_gap(ax: &[f64], y: &[f64], x: &[f64], aty: &[f64]) -> f64 {
    let scale = norm(ax) * norm(y) + norm(x) * norm(aty);
    if scale == 0.0 {
        return 0.0;
    }
    (dot(ax, y) - dot(x, aty)).abs() / scale
}

/// Adjoint identities of the linear operators: forward differences, the
/// eight directional differences, convolution in the image and in the
/// kernel, and the sampling mask.
pub fn adjoint_suites(seed: u64, cases: usize) -> Result<Vec<SuiteReport>> {
    let mut rng = SeededRng::new(seed);
    let mut diff = SuiteReport::new("adjoint/diff", ADJOINT_TOL);
    let mut dir = SuiteReport::new("adjoint/directional", ADJOINT_TOL);
    let mut conv_x = SuiteReport::new("adjoint/conv_image", ADJOINT_TOL);
    let mut conv_k = SuiteReport::new("adjoint/conv_kernel", ADJOINT_TOL);
    let mut mask = SuiteReport::new("adjoint/mask", ADJOINT_TOL);
    for _ in 0..cases {
        let (h, w) = (size(&mut rng, 1, 12), size(&mut rng, 1, 12));
        let x = random_image(&mut rng, h, w);

        let f = random_field(&mut rng, h, w);
        diff.record(adjoint_gap(
            diff_forward(&x).as_slice(),
            f.as_slice(),
            x.as_slice(),
            diff_adjoint(&f).as_slice(),
        ));

        let p = (rng.uniform() * 8.0) as usize;
        let g = random_image(&mut rng, h, w);
        dir.record(adjoint_gap(
            directional_channel(&x, p).as_slice(),
            g.as_slice(),
            x.as_slice(),
            directional_adjoint(&g, p).as_slice(),
        ));

        let conv = CircularConv::new(h, w);
        let (kh, kw) = (odd(&mut rng, (h - 1) / 2), odd(&mut rng, (w - 1) / 2));
        let k = BlurKernel::new(kh, kw, rng.gaussian_vec(kh * kw))?;
        let r = random_image(&mut rng, h, w);
        let kx = conv.apply(&x, &k)?;
        conv_x.record(adjoint_gap(
            kx.as_slice(),
            r.as_slice(),
            x.as_slice(),
            conv.adjoint_image(&r, &k)?.as_slice(),
        ));
        // K(x) y is linear in the kernel y
        conv_k.record(adjoint_gap(
            kx.as_slice(),
            r.as_slice(),
            k.weights(),
            conv.adjoint_kernel(&r, &x, kh, kw)?.weights(),
        ));

        let s = SamplingMask::bernoulli(h, w, rng.uniform(), &mut rng)?;
        mask.record(adjoint_gap(
            &s.apply(x.as_slice())?,
            r.as_slice(),
            x.as_slice(),
            &s.apply(r.as_slice())?,
        ));
    }
    Ok(vec![diff, dir, conv_x, conv_k, mask])
}

const FD_STEP: f64 = 1e-6;

/// `max_i |g_i - fd_i| / max(1, max_i |fd_i|)` with central differences of
/// `f` along every coordinate of `v`.
fn fd_error<B: Block>(v: &B, g: &B, f: impl Fn(&B) -> f64) -> f64 {
    let n = v.as_slice().len();
    let mut fd = vec![0.0; n];
    let mut probe = v.clone();
    for (i, slot) in fd.iter_mut().enumerate() {
        let x0 = v.as_slice()[i];
        probe.as_mut_slice()[i] = x0 + FD_STEP;
        let fp = f(&probe);
        probe.as_mut_slice()[i] = x0 - FD_STEP;
        let fm = f(&probe);
        probe.as_mut_slice()[i] = x0;
        *slot = (fp - fm) / (2.0 * FD_STEP);
    }
    let scale = fd.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    g.as_slice()
        .iter()
        .zip(&fd)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Smooth-part gradients against central differences: the TV coupling
/// `h+ = beta/2 |Dx - y|^2` and the BID `h-` (robust prior plus data fit) in
/// both blocks.
pub fn gradient_suites(seed: u64, points: usize) -> Result<Vec<SuiteReport>> {
    let mut rng = SeededRng::new(seed);
    let mut tv = SuiteReport::new("gradient/tv_coupling", GRADIENT_TOL);
    let mut bid_x = SuiteReport::new("gradient/bid_x", GRADIENT_TOL);
    let mut bid_y = SuiteReport::new("gradient/bid_y", GRADIENT_TOL);
    let (h, w) = (10, 9);
    for _ in 0..points {
        let b = ImageGrid::new(h, w, rng.uniform_vec(h * w, 0.0, 1.0))?;
        let mask = SamplingMask::bernoulli(h, w, 0.5, &mut rng)?;
        let spec = TvSpec::with_defaults(b.clone(), mask, BlurKernel::gaussian(3, 1.0)?, 0.05)?;
        let tvp = TvProblem::ubama(spec)?;
        let x = ImageGrid::new(h, w, rng.uniform_vec(h * w, 0.0, 1.0))?;
        let y = random_field(&mut rng, h, w);
        let ex = fd_error(&x, &tvp.coupling_grad_x(&x, &y), |v| tvp.h_plus(v, &y));
        let ey = fd_error(&y, &tvp.coupling_grad_y(&x, &y), |v| tvp.h_plus(&x, v));
        tv.record(ex.max(ey));

        // default model weights
        let bp = BidProblem::new(BidSpec::with_defaults(b, (3, 3), KernelMode::Euclidean))?;
        let k = BlurKernel::new(3, 3, proj_simplex(&rng.uniform_vec(9, 0.0, 1.0))?)?;
        bid_x.record(fd_error(&x, &bp.grad_x_h_minus(&x, &k), |v| bp.h_minus(v, &k)));
        bid_y.record(fd_error(&k, &bp.grad_y_h_minus(&x, &k), |v| bp.h_minus(&x, v)));
    }
    Ok(vec![tv, bid_x, bid_y])
}

/// The whole battery run by `prox-check`.
pub fn all_suites(seed: u64) -> Result<Vec<SuiteReport>> {
    let mut out = prox_suites(seed, ORACLE_CASES)?;
    out.extend(adjoint_suites(seed + 100, ORACLE_CASES)?);
    out.extend(gradient_suites(seed + 200, GRADIENT_POINTS)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes() {
        let reports = all_suites(11).unwrap();
        for r in &reports {
            assert!(r.passed(), "{r}");
            assert!(r.cases >= if r.name.starts_with("gradient") { GRADIENT_POINTS } else { ORACLE_CASES });
        }
        assert_eq!(reports.len(), 18);
    }

    #[test]
    fn grid_oracle_finds_known_minimizer() {
        let x = grid_argmin(|v| (v - 0.3) * (v - 0.3), -5.0, 5.0);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((simplex_threshold_bisect(&[0.5, 0.5]) - 0.0).abs() < 1e-12);
        assert!((simplex_threshold_bisect(&[2.0, 0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn suites_catch_broken_operators() {
        // a wrong adjoint and a wrong gradient must register as failures
        let mut rep = SuiteReport::new("probe", ADJOINT_TOL);
        let x = [1.0, 2.0];
        rep.record(adjoint_gap(&x, &x, &x, &[1.0, 2.1]));
        assert_eq!(rep.failures, 1);
        let v = ImageGrid::new(1, 2, vec![0.5, -1.0]).unwrap();
        let wrong = ImageGrid::new(1, 2, vec![1.0, -2.5]).unwrap();
        let right = ImageGrid::new(1, 2, vec![1.0, -2.0]).unwrap();
        let sq = |g: &ImageGrid| g.as_slice().iter().map(|a| a * a).sum::<f64>();
        assert!(fd_error(&v, &wrong, sq) > 0.1);
        assert!(fd_error(&v, &right, sq) < 1e-9);
        rep.record(f64::NAN);
        assert_eq!(rep.failures, 2);
        assert!(!rep.passed());
    }
}
