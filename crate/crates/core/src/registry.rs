//! Catalog of closed-form extremal and reference configurations.
//!
//! Each entry builds its scenario from exact constants; parameters that are
//! roots of polynomial conditions or maxima of one- or two-parameter
//! families are solved for at build time.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::optimizer::{refine, RefineOptions};
use crate::scenario::{build_probability_matrix, Scenario};
use crate::state::{Effect, Field, Preparation, StateVector};
use crate::witness::{witness, BlochScenario};

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Unit vector from unnormalized complex amplitudes.
fn cv(amps: &[C]) -> StateVector {
    StateVector::from_complex(amps.to_vec()).expect("registry vectors are nonzero")
}

/// Unit vector from unnormalized real amplitudes.
fn rv(amps: &[f64]) -> StateVector {
    StateVector::from_real(amps).expect("registry vectors are nonzero")
}

/// Basis vector `|idx>` with 1-based `idx`.
fn ket(d: usize, idx: usize) -> StateVector {
    StateVector::basis(d, idx - 1)
}

fn sparse(d: usize, pairs: &[(usize, f64)]) -> StateVector {
    let mut v = vec![0.0; d];
    for &(i, a) in pairs {
        v[i - 1] += a;
    }
    rv(&v)
}

fn assemble(d: usize, preps: Vec<StateVector>, effects: Vec<Vec<StateVector>>) -> Result<Scenario> {
    let real = preps.iter().all(|v| v.is_real()) && effects.iter().flatten().all(|v| v.is_real());
    let field = if real { Field::Real } else { Field::Complex };
    let preps = preps.into_iter().map(Preparation::from_pure).collect();
    let effs = effects.into_iter().map(|cols| Effect::from_columns(d, cols)).collect::<Result<Vec<_>>>()?;
    Scenario::new(d, field, preps, effs)
}

fn value_of(s: &Scenario) -> f64 {
    build_probability_matrix(s).map(|pm| witness(&pm).abs()).unwrap_or(0.0)
}

/// Bisection on a bracketing interval down to `tol`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All sign-change roots of `f` on `(lo, hi)`, scanning `n` cells.
fn roots(f: impl Fn(f64) -> f64 + Copy, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    (0..n)
        .filter_map(|i| {
            let (a, b) = (lo + i as f64 * h, lo + (i + 1) as f64 * h);
            ((f(a) < 0.0) != (f(b) < 0.0)).then(|| bisect(f, a, b, 1e-15))
        })
        .collect()
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Golden-section maximum of a unimodal function on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Compass-search maximum of a function of two variables.
fn compass_max2(f: impl Fn(f64, f64) -> f64, mut x: (f64, f64), mut h: f64, tol: f64) -> (f64, f64) {
    let mut best = f(x.0, x.1);
    while h > tol {
        let mut moved = false;
        for (dx, dy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let v = f(x.0 + dx, x.1 + dy);
            if v > best {
                best = v;
                x = (x.0 + dx, x.1 + dy);
                moved = true;
                break;
            }
        }
        if !moved {
            h /= 2.0;
        }
    }
    x
}

fn tri(j: usize, n: usize) -> (f64, f64) {
    let t = 2.0 * PI * j as f64 / n as f64;
    (t.cos(), t.sin())
}

fn omega(j: usize) -> C {
    let (co, si) = tri(j, 3);
    c(co, si)
}

fn qubit_triangle_k2() -> Result<Scenario> {
    let h = 3f64.sqrt() / 2.0;
    BlochScenario::new(
        vec![[0.0, 0.0, 1.0], [h, 0.0, -0.5], [-h, 0.0, -0.5]],
        vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
    )
    .to_scenario()
}

fn qubit_tetrahedron_k3() -> Result<Scenario> {
    let t = 1.0 / 3f64.sqrt();
    BlochScenario::new(
        vec![[t, t, t], [t, -t, -t], [-t, t, -t], [-t, -t, t]],
        vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    )
    .to_scenario()
}

fn qutrit_k3() -> Result<Scenario> {
    let (a, q) = (0.993819f64, 0.996329f64);
    let (b, r) = ((1.0 - a * a).sqrt(), (1.0 - q * q).sqrt());
    let mut xs: Vec<_> = (1..=3)
        .map(|j| {
            let (co, si) = tri(j, 3);
            rv(&[a * co, a * si, b])
        })
        .collect();
    xs.push(ket(3, 3));
    let ys = (1..=3)
        .map(|j| {
            let (co, si) = tri(j, 3);
            vec![rv(&[q * co, q * si, r])]
        })
        .collect();
    assemble(3, xs, ys)
}

fn real_qutrit_k4() -> Result<Scenario> {
    let s17 = 17f64.sqrt();
    let (a, q) = (((9.0 + s17) / 16.0).sqrt(), ((9.0 - s17) / 16.0).sqrt());
    let (b, r) = ((1.0 - a * a).sqrt(), (1.0 - q * q).sqrt());
    let h = 3f64.sqrt() / 2.0;
    let xs = vec![
        ket(3, 1),
        sparse(3, &[(1, -0.5), (2, h)]),
        sparse(3, &[(1, -0.5), (2, -h)]),
        sparse(3, &[(1, -0.5), (3, h)]),
        sparse(3, &[(1, -0.5), (3, -h)]),
    ];
    let ys = vec![
        vec![sparse(3, &[(1, a), (2, b)])],
        vec![sparse(3, &[(1, a), (2, -b)])],
        vec![sparse(3, &[(1, q), (3, r)])],
        vec![sparse(3, &[(1, q), (3, -r)])],
    ];
    assemble(3, xs, ys)
}

/// Maximizer of the two-sphere family, found numerically and renormalized.
const COMPLEX_QUTRIT_K4: [f64; 6] = [
    0.5109577899132272,
    0.3178565664976543,
    0.7986797481226833,
    -0.5109577945869288,
    -0.2554814426305155,
    -0.8207626725322569,
];

fn complex_qutrit_k4() -> Result<Scenario> {
    let [a, b, cc, q, r, s] = COMPLEX_QUTRIT_K4;
    let mut xs: Vec<_> = (1..=3).map(|j| cv(&[c(a, 0.0), omega(j) * b, omega(2 * j) * cc])).collect();
    xs.push(ket(3, 1));
    xs.push(ket(3, 2));
    let mut ys: Vec<_> = (1..=3).map(|j| vec![cv(&[c(q, 0.0), omega(j) * r, omega(2 * j) * s])]).collect();
    ys.push(vec![ket(3, 1)]);
    assemble(3, xs, ys)
}

fn ququart_tetrahedron() -> Vec<StateVector> {
    let mut xs: Vec<_> = [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)]
        .iter()
        .map(|&(p, q, r)| rv(&[p, q, r, 0.0]))
        .collect();
    xs.push(ket(4, 4));
    xs
}

fn ququart_k4_rank1() -> Result<Scenario> {
    let xs = ququart_tetrahedron();
    let ys = xs[..4].iter().map(|x| vec![x.clone()]).collect();
    assemble(4, xs, ys)
}

fn ququart_k4_rank2() -> Result<Scenario> {
    let xs = ququart_tetrahedron();
    let ys = xs[..4].iter().map(|x| vec![x.clone(), ket(4, 4)]).collect();
    assemble(4, xs, ys)
}

fn real_qutrit_icosahedron_k5() -> Result<Scenario> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut xs = Vec::new();
    for a in 0..3 {
        let i1 = if a == 0 { 3 } else { a };
        for b in 1..=2 {
            let sgn = if b % 2 == 0 { 1.0 } else { -1.0 };
            xs.push(sparse(3, &[(i1, 1.0), (a + 1, sgn * phi)]));
        }
    }
    let t = (10.0 + 10f64.sqrt()) / 15.0;
    let alpha = t.sqrt();
    let ys = (1..=5)
        .map(|j| {
            let (co, si) = tri(j, 5);
            vec![rv(&[alpha * co, alpha * si, (1.0 - t).sqrt()])]
        })
        .collect();
    assemble(3, xs, ys)
}

/// Maximizer of the ten-parameter family (two circles, four spheres).
const COMPLEX_QUTRIT_K5: [f64; 16] = [
    -0.6463881413975913,
    0.7630087618504571,
    -0.372901574593802,
    -0.9278709046335396,
    -0.2954872862824629,
    0.40979068054554396,
    0.8629941261581366,
    0.8574657499027691,
    0.0975261063957824,
    -0.5052139609264181,
    0.591744459153562,
    -0.6334970092498233,
    0.49851783752699136,
    -0.5008346593182744,
    0.006689934780193554,
    0.8655171221866064,
];

fn complex_qutrit_k5() -> Result<Scenario> {
    let [a1, b1, a2, b2, f, g, h, f2, g2, h2, q, r, s, q2, r2, s2] = COMPLEX_QUTRIT_K5;
    let re = |x: f64| c(x, 0.0);
    let xs = vec![
        cv(&[re(a1), re(b1), re(0.0)]),
        cv(&[re(a2), re(b2), re(0.0)]),
        cv(&[re(f), re(g), re(h)]),
        cv(&[re(f), re(g), re(-h)]),
        cv(&[re(f2), re(g2), c(0.0, h2)]),
        cv(&[re(f2), re(g2), c(0.0, -h2)]),
    ];
    let ys = vec![
        vec![ket(3, 1)],
        vec![cv(&[re(q), re(r), re(s)])],
        vec![cv(&[re(q), re(r), re(-s)])],
        vec![cv(&[re(q2), re(r2), c(0.0, s2)])],
        vec![cv(&[re(q2), re(r2), c(0.0, -s2)])],
    ];
    assemble(3, xs, ys)
}

fn ququart_k5_rank2() -> Result<Scenario> {
    let s5 = 5f64.sqrt();
    let (a, b) = (((5.0 + s5) / 10.0).sqrt(), ((5.0 - s5) / 10.0).sqrt());
    let (cc, s) = ((1.0 + s5) / 4.0, ((5.0 - s5) / 8.0).sqrt());
    let xs = vec![
        sparse(4, &[(1, a), (2, b)]),
        sparse(4, &[(1, a), (2, -b)]),
        sparse(4, &[(3, a), (4, b)]),
        sparse(4, &[(3, a), (4, -b)]),
        sparse(4, &[(2, 1.0), (4, 1.0)]),
        sparse(4, &[(2, 1.0), (4, -1.0)]),
    ];
    let ys = vec![
        vec![sparse(4, &[(1, 1.0), (2, 1.0)]), sparse(4, &[(3, 1.0), (4, 1.0)])],
        vec![sparse(4, &[(1, 1.0), (2, 1.0)]), sparse(4, &[(3, 1.0), (4, -1.0)])],
        vec![ket(4, 1), ket(4, 3)],
        vec![sparse(4, &[(2, s), (4, cc)]), ket(4, 3)],
        vec![sparse(4, &[(2, s), (4, -cc)]), ket(4, 3)],
    ];
    assemble(4, xs, ys)
}

fn ququint_k5_5cell_rank1() -> Result<Scenario> {
    let w = 5f64.sqrt() / 4.0;
    let mut xs = vec![ket(5, 4)];
    for (p, q, r) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
        xs.push(rv(&[w * p, w * q, w * r, -0.25, 0.0]));
    }
    xs.push(ket(5, 5));
    let ys = xs[..5].iter().map(|x| vec![x.clone()]).collect();
    assemble(5, xs, ys)
}

/// Largest root in (0, 1) of `2048 - 12032 u + 26409 u^2 - 25668 u^3 + 9315 u^4`, `u = b^2`.
fn ququint_k5_b2() -> f64 {
    let p = |u: f64| horner(&[2048.0, -12032.0, 26409.0, -25668.0, 9315.0], u);
    roots(p, 0.0, 1.0, 4000).into_iter().fold(f64::NAN, f64::max)
}

fn ququint_k5_rank2() -> Result<Scenario> {
    let u = ququint_k5_b2();
    let (a, b) = ((1.0 - u).sqrt(), u.sqrt());
    let e = 8.0 - 12.0 * u;
    let q2 = e * e / (e * e + 9.0 * u * (1.0 - u));
    let (q, r) = (q2.sqrt(), (1.0 - q2).sqrt());
    let mut xs: Vec<_> = (1..=3)
        .map(|j| {
            let (co, si) = tri(j, 3);
            rv(&[a, b * co, b * si, 0.0, 0.0])
        })
        .collect();
    xs.extend([ket(5, 4), ket(5, 5), ket(5, 1)]);
    let mut ys: Vec<_> = (1..=3)
        .map(|j| {
            let (co, si) = tri(j, 3);
            vec![rv(&[q, -r * co, -r * si, 0.0, 0.0]), rv(&[0.0, si, -co, 0.0, 0.0])]
        })
        .collect();
    ys.push(vec![ket(5, 4), ket(5, 1)]);
    ys.push(vec![ket(5, 5), ket(5, 1)]);
    assemble(5, xs, ys)
}

fn d5_k6_scenario(a2: f64, cc: f64) -> Result<Scenario> {
    let (a, b) = (a2.sqrt(), (1.0 - a2).sqrt());
    let d = (1.0 - cc * cc).sqrt();
    let mut xs = Vec::new();
    for m in 2..=4 {
        xs.push(sparse(5, &[(1, a), (m, b)]));
        xs.push(sparse(5, &[(1, a), (m, -b)]));
    }
    xs.push(ket(5, 5));
    let mut ys = Vec::new();
    for (m, extra) in [(2, 3), (3, 4), (4, 2)] {
        ys.push(vec![sparse(5, &[(1, cc), (m, d)]), ket(5, extra)]);
        ys.push(vec![sparse(5, &[(1, cc), (m, -d)]), ket(5, extra)]);
    }
    assemble(5, xs, ys)
}

/// `a^2` solves the degree-8 condition in `u = a^2`; of its roots in (0, 1)
/// the one giving the largest witness is kept, with `c` maximized for each.
fn d5_k6_params() -> (f64, f64) {
    let p = |u: f64| {
        horner(&[-1.0, 5.0, 24.0, -296.0, 1480.0, -5088.0, 11392.0, -14336.0, 8192.0], u)
    };
    roots(p, 0.0, 1.0, 4000)
        .into_iter()
        .map(|a2| {
            let cc = golden_max(|cc| d5_k6_scenario(a2, cc).map(|s| value_of(&s)).unwrap_or(0.0), 0.0, 1.0, 1e-12);
            (a2, cc)
        })
        .max_by(|x, y| {
            let vx = d5_k6_scenario(x.0, x.1).map(|s| value_of(&s)).unwrap_or(0.0);
            let vy = d5_k6_scenario(y.0, y.1).map(|s| value_of(&s)).unwrap_or(0.0);
            vx.total_cmp(&vy)
        })
        .expect("the condition has a root in (0, 1)")
}

fn d5_k6_rank2() -> Result<Scenario> {
    let (a2, cc) = d5_k6_params();
    d5_k6_scenario(a2, cc)
}

/// Shared pattern of `x` and `y'`: a common `|1>` weight plus two
/// equilateral triangles in `span{|2>,|3>}` and `span{|4>,|5>}`.
fn d6_fan(a: f64) -> Vec<StateVector> {
    let b = (1.0 - a * a).sqrt();
    let h = 3f64.sqrt() / 2.0;
    let mut out = Vec::new();
    for (p, q) in [(2, 3), (4, 5)] {
        out.push(sparse(6, &[(1, a), (p, b)]));
        out.push(sparse(6, &[(1, a), (p, -b / 2.0), (q, h * b)]));
        out.push(sparse(6, &[(1, a), (p, -b / 2.0), (q, -h * b)]));
    }
    out
}

fn d6_k6_scenario(a: f64, cc: f64) -> Result<Scenario> {
    let h = 3f64.sqrt() / 2.0;
    let mut xs = d6_fan(a);
    xs.push(ket(6, 6));
    let mut ys = Vec::new();
    for (p, q) in [(2, 3), (4, 5)] {
        ys.push(ket(6, q));
        ys.push(sparse(6, &[(q, 0.5), (p, h)]));
        ys.push(sparse(6, &[(q, 0.5), (p, -h)]));
    }
    let yp = d6_fan(cc);
    let effs = ys.into_iter().zip(yp).map(|(y, z)| vec![y, z, ket(6, 6)]).collect();
    assemble(6, xs, effs)
}

/// Maximum of the two-parameter family, polished from a coarse start.
fn d6_k6_params() -> (f64, f64) {
    let f = |a: f64, cc: f64| {
        if a.abs() >= 1.0 || cc.abs() >= 1.0 {
            return 0.0;
        }
        d6_k6_scenario(a, cc).map(|s| value_of(&s)).unwrap_or(0.0)
    };
    compass_max2(f, (-0.478, 0.8035), 1e-3, 1e-13)
}

fn d6_k6() -> Result<Scenario> {
    let (a, cc) = d6_k6_params();
    d6_k6_scenario(a, cc)
}

fn zeta(m: usize) -> C {
    let (co, si) = tri(m % 7, 7);
    c(co, si)
}

/// Phases of `U = diag(1, z, z^2, z^4)` with `z = exp(2 pi i / 7)`.
const HEPT_POWERS: [usize; 4] = [0, 1, 2, 4];

fn heptagonal_effect_matrix(j: usize) -> DMatrix<C> {
    let xi = c(0.0, 1.0 / (2.0 * 3f64.sqrt()));
    let h = c(0.5, 0.0);
    let m = [[h, xi, xi, xi], [-xi, h, xi, -xi], [-xi, -xi, h, xi], [-xi, xi, -xi, h]];
    let mut out = DMatrix::zeros(5, 5);
    for r in 0..4 {
        for col in 0..4 {
            let ph = zeta(j * HEPT_POWERS[r]) * zeta(j * HEPT_POWERS[col]).conj();
            out[(r, col)] = m[r][col] * ph;
        }
    }
    out
}

fn heptagonal_preparation(j: usize) -> StateVector {
    let mut amps: Vec<C> = HEPT_POWERS.iter().map(|&p| zeta(j * p) * 0.5).collect();
    amps.push(c(0.0, 0.0));
    cv(&amps)
}

fn d5_k7_heptagonal() -> Result<Scenario> {
    let mut preps: Vec<_> = (1..=7).map(|j| Preparation::from_pure(heptagonal_preparation(j))).collect();
    preps.push(Preparation::from_pure(ket(5, 5)));
    let effs = (1..=7)
        .map(|j| Effect::from_projector_matrix(heptagonal_effect_matrix(j)))
        .collect::<Result<Vec<_>>>()?;
    Scenario::new(5, Field::Complex, preps, effs)
}

fn complex_qutrit_k8() -> Result<Scenario> {
    let mut xs = Vec::new();
    for a in 0..3usize {
        let lo = if a == 0 { 3 } else { a };
        for b in 1..=3 {
            let mut amps = vec![c(0.0, 0.0); 3];
            amps[lo - 1] += c(1.0, 0.0);
            amps[a] += omega(b);
            xs.push(cv(&amps));
        }
    }
    let (s13, s23) = ((1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt());
    let mut yp: Vec<[C; 2]> = (1..=3).map(|j| [c(0.0, s13), omega(j) * s23]).collect();
    yp.push([c(1.0, 0.0), c(0.0, 0.0)]);
    let neg: Vec<[C; 2]> = yp.iter().map(|v| [-v[0], -v[1]]).collect();
    yp.extend(neg);
    let (w1, w3) = ((5.0f64 / 6.0).sqrt(), (1.0f64 / 6.0).sqrt());
    let ys = yp.iter().map(|v| vec![cv(&[v[0] * w1, v[1] * w1, c(w3, 0.0)])]).collect();
    assemble(3, xs, ys)
}

fn ququart_k9_example() -> Result<Scenario> {
    let (o, i) = (c(1.0, 0.0), c(0.0, 1.0));
    let mut xs: Vec<_> = (1..=4).map(|m| ket(4, m)).collect();
    for v in [
        [o, o, i, -i],
        [o, o, -i, i],
        [o, i, o, -i],
        [o, -i, o, i],
        [o, o, -o, -o],
        [o, -o, -o, o],
    ] {
        xs.push(cv(&v));
    }
    let ys = xs[1..].iter().map(|x| vec![x.clone()]).collect();
    assemble(4, xs, ys)
}

fn variance_saturating_k4() -> Result<Scenario> {
    let (r2, r23, h) = (2f64.sqrt(), (2.0f64 / 3.0).sqrt(), 3f64.sqrt() / 2.0);
    BlochScenario::new(
        vec![
            [0.0, 0.0, -1.0],
            [0.0, 0.0, -1.0],
            [2.0 * r2 / 3.0, 0.0, 1.0 / 3.0],
            [-r2 / 3.0, r23, 1.0 / 3.0],
            [-r2 / 3.0, -r23, 1.0 / 3.0],
        ],
        vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [-0.5, h, 0.0], [-0.5, -h, 0.0]],
    )
    .to_scenario()
}

fn qubit_axes_test_k4() -> Result<Scenario> {
    let xs = vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
    let ys = xs[..4].to_vec();
    BlochScenario::new(xs, ys).to_scenario()
}

/// A cell of the table of quantum maxima: largest |W_k| for `d` levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub k: usize,
    pub d: usize,
    pub field: Field,
}

/// Catalog entry.
#[derive(Debug, Clone, Copy)]
pub struct Entry {
    pub name: &'static str,
    pub dim: usize,
    pub k: usize,
    pub expected: fn() -> f64,
    pub expected_expr: &'static str,
    pub description: &'static str,
    /// Where the construction departs from the naive closed form.
    pub repair: Option<&'static str>,
    pub tolerance: f64,
    /// Believed to be the maximum for its cell and rank profile.
    pub maximum: bool,
    /// Expected value known only numerically.
    pub numeric_only: bool,
    /// Table cell this entry realizes, if any.
    pub cell: Option<Cell>,
    builder: fn() -> Result<Scenario>,
}

impl Entry {
    pub fn build(&self) -> Result<Scenario> {
        (self.builder)()
    }

    pub fn expected(&self) -> f64 {
        (self.expected)()
    }
}

const fn cell(k: usize, d: usize, field: Field) -> Option<Cell> {
    Some(Cell { k, d, field })
}

static ENTRIES: &[Entry] = &[
    Entry {
        name: "qubit_triangle_k2",
        dim: 2,
        k: 2,
        expected: || 0.75f64.powf(1.5),
        expected_expr: "(3/4)^(3/2)",
        description: "preparations on an equilateral triangle of a Bloch great circle, measurements along two orthogonal axes in its plane",
        repair: Some("the second measurement axis is y2 = (1,0,0)"),
        tolerance: 1e-9,
        maximum: true,
        numeric_only: false,
        cell: cell(2, 2, Field::Real),
        builder: qubit_triangle_k2,
    },
    Entry {
        name: "qubit_tetrahedron_k3",
        dim: 2,
        k: 3,
        expected: || 2.0 * 3f64.sqrt() / 9.0,
        expected_expr: "2 sqrt(3) / 9",
        description: "preparations on the vertices of a regular tetrahedron, measurements along the three axes",
        repair: None,
        tolerance: 1e-9,
        maximum: true,
        numeric_only: false,
        cell: cell(3, 2, Field::Complex),
        builder: qubit_tetrahedron_k3,
    },
    Entry {
        name: "qutrit_k3",
        dim: 3,
        k: 3,
        expected: || 0.8447648009582842,
        expected_expr: "0.8447648009582842 (a = 0.993819, q = 0.996329)",
        description: "triangle-symmetric real qutrit states tilted towards |3>, with |x4> = |3>",
        repair: None,
        tolerance: 1e-6,
        maximum: true,
        numeric_only: true,
        cell: cell(3, 3, Field::Real),
        builder: qutrit_k3,
    },
    Entry {
        name: "real_qutrit_k4",
        dim: 3,
        k: 4,
        expected: || 27.0 * 2f64.sqrt() / 64.0,
        expected_expr: "27 sqrt(2) / 64",
        description: "two real equilateral fans around |1>, measurements with a q = 1/2, a^2 + q^2 = 9/8",
        repair: None,
        tolerance: 1e-9,
        maximum: true,
        numeric_only: false,
        cell: cell(4, 3, Field::Real),
        builder: real_qutrit_k4,
    },
    Entry {
        name: "complex_qutrit_k4",
        dim: 3,
        k: 4,
        expected: || 0.6319201017558774,
        expected_expr: "0.6319201017558774 (numeric maximum over two spheres)",
        description: "Fourier-phased qutrit states (a, b w^j, c w^2j) with |x4> = |1>, |x5> = |2>; sphere parameters embedded numerically",
        repair: None,
        tolerance: 1e-6,
        maximum: true,
        numeric_only: true,
        cell: cell(4, 3, Field::Complex),
        builder: complex_qutrit_k4,
    },
    Entry {
        name: "ququart_k4_rank1",
        dim: 4,
        k: 4,
        expected: || 2f64.powi(11) / 3f64.powi(7),
        expected_expr: "2^11 / 3^7",
        description: "tetrahedron states in span{|1>,|2>,|3>} plus |4>, rank-one effects on the same states",
        repair: None,
        tolerance: 1e-9,
        maximum: true,
        numeric_only: false,
        cell: None,
        builder: ququart_k4_rank1,
    },
    Entry {
        name: "ququart_k4_rank2",
        dim: 4,
        k: 4,
        expected: || 2f64.powi(12) / 3f64.powi(7),
        expected_expr: "2^12 / 3^7",
        description: "tetrahedron states plus |4>, effects |y_j><y_j| + |4><4|",
        repair: None,
        tolerance: 1e-9,
        maximum: true,
        numeric_only: false,
        cell: cell(4, 4, Field::Real),
        builder: ququart_k4_rank2,
    },
    Entry {
        name: "real_qutrit_icosahedron_k5",
        dim: 3,
        k: 5,
        expected: || (25.0 + 34.0 * 10f64.sqrt()) * 32.0 / (125.0 * 81.0),
        expected_expr: "(25 + 34 sqrt(10)) 2^5 / (5^3 3^4)",
        description: "icosahedron vertex pairs (|a> -+ phi|a+1>)/sqrt(phi+2), measurements on a pentagonal cone with alpha^2 = (10 + sqrt(10))/15",
        repair: Some("alpha = t^2 read as alpha^2 = t"),
        tolerance: 1e-9,
        maximum: true,
        numeric_only: false,
        cell: cell(5, 3, Field::Real),
        builder: real_qutrit_icosahedron_k5,
    },
    Entry {
        name: "complex_qutrit_k5",
        dim: 3,
        k: 5,
        expected: || 0.457413503,
        expected_expr: "0.457413503 (numeric maximum of a ten-parameter family)",
        description: "real circles and spheres with +-h and +-ih |3> components; parameters embedded numerically",
        repair: None,
        tolerance: 1e-6,
        maximum: true,
        numeric_only: true,
        cell: cell(5, 3, Field::Complex),
        builder: complex_qutrit_k5,
    },
    Entry {
        name: "ququart_k5_rank2",
        dim: 4,
        k: 5,
        expected: || (1.0 + 1.0 / 5f64.sqrt()).powf(2.5) / 2f64.sqrt(),
        expected_expr: "(1 + 1/sqrt(5))^(5/2) / sqrt(2)",
        description: "pairs a|1> +- b|2>, a|3> +- b|4>, (|2> +- |4>)/sqrt(2) with a^2 = (5 + sqrt(5))/10, rank-two effects",
        repair: Some("first preparation pair uses |2> (a|1> +- b|3> makes two columns equal)"),
        tolerance: 1e-9,
        maximum: true,
        numeric_only: false,
        cell: cell(5, 4, Field::Real),
        builder: ququart_k5_rank2,
    },
    Entry {
        name: "ququint_k5_5cell_rank1",
        dim: 5,
        k: 5,
        expected: || 5f64.powi(5) * 3f64.powi(4) / 2f64.powi(18),
        expected_expr: "5^5 3^4 / 2^18",
        description: "vertices of the 5-cell in span{|1>..|4>} plus |5>, rank-one effects on the first five",
        repair: None,
        tolerance: 1e-9,
        maximum: false,
        numeric_only: false,
        cell: None,
        builder: ququint_k5_5cell_rank1,
    },
    Entry {
        name: "ququint_k5_rank2",
        dim: 5,
        k: 5,
        expected: || 3.144615108566082,
        expected_expr: "3.144615108566082, b^2 the largest root of 2048 - 12032 u + 26409 u^2 - 25668 u^3 + 9315 u^4",
        description: "triangle fan a|1> + b(cos, sin) in span{|2>,|3>} plus |4>, |5>, |1>; rank-two effects",
        repair: Some("the cos(2 pi/3) factor of |y_j> read as cos(2 pi j/3); q^2 = c^2 fixed by the stated condition"),
        tolerance: 1e-9,
        maximum: true,
        numeric_only: false,
        cell: cell(5, 5, Field::Complex),
        builder: ququint_k5_rank2,
    },
    Entry {
        name: "d5_k6_rank2",
        dim: 5,
        k: 6,
        expected: || 3.3984718576415207,
        expected_expr: "3.3984718576415207, a^2 = 0.3016492773799042 a root of the degree-16 condition",
        description: "pairs a|1> +- b|m> for m = 2, 3, 4 plus |5>; effects {c|1> +- d|m>, |m'>}, c maximized",
        repair: Some("|y12> = c|1> +- d|1> read as c|1> +- d|2>"),
        tolerance: 1e-9,
        maximum: true,
        numeric_only: false,
        cell: cell(6, 5, Field::Real),
        builder: d5_k6_rank2,
    },
    Entry {
        name: "d6_k6",
        dim: 6,
        k: 6,
        expected: || 5.0467662420644475,
        expected_expr: "5.0467662420644475 (numeric maximum over a and c)",
        description: "two equilateral fans around |1> plus |6>; rank-three effects {y, y', |6>}",
        repair: Some("second fan uses +-sqrt(3)|3> and +-sqrt(3)|5>; y56 pattern uses |5>, |4>; y and y' signs paired for orthogonality"),
        tolerance: 1e-9,
        maximum: true,
        numeric_only: false,
        cell: cell(6, 6, Field::Real),
        builder: d6_k6,
    },
    Entry {
        name: "d5_k7_heptagonal",
        dim: 5,
        k: 7,
        expected: || 7f64.powi(7) / (2f64.powi(13) * 27.0),
        expected_expr: "7^7 / (2^13 3^3)",
        description: "orbit of (1,1,1,1)/2 under diag(1, z, z^2, z^4), z = exp(2 pi i/7), plus |5>; rank-two effects U^j M U^-j",
        repair: None,
        tolerance: 1e-9,
        maximum: true,
        numeric_only: false,
        cell: cell(7, 5, Field::Complex),
        builder: d5_k7_heptagonal,
    },
    Entry {
        name: "complex_qutrit_k8",
        dim: 3,
        k: 8,
        expected: || 5f64.powi(5) / (81.0 * 256.0),
        expected_expr: "5^5 / (3^4 2^8)",
        description: "states (|a> + w^b|a+1>)/sqrt(2), effects sqrt(5/6) y' + sqrt(1/6)|3>",
        repair: None,
        tolerance: 1e-9,
        maximum: true,
        numeric_only: false,
        cell: cell(8, 3, Field::Complex),
        builder: complex_qutrit_k8,
    },
    Entry {
        name: "ququart_k9_example",
        dim: 4,
        k: 9,
        expected: || 0.125,
        expected_expr: "1/8 (an example, not the maximum)",
        description: "computational basis plus six vectors with entries in {1, +-i, -1}/2; effects project on preparations 2..10",
        repair: Some("the plain computational and Fourier set is degenerate (W = 0); the phase vectors are chosen so |W| = 1/8"),
        tolerance: 1e-9,
        maximum: false,
        numeric_only: false,
        cell: None,
        builder: ququart_k9_example,
    },
    Entry {
        name: "variance_saturating_k4",
        dim: 2,
        k: 4,
        expected: || 0.0,
        expected_expr: "0 (clean qubit at the critical k; null variance 1/(6N))",
        description: "qubit configuration saturating the null-variance bound",
        repair: None,
        tolerance: 1e-9,
        maximum: false,
        numeric_only: false,
        cell: None,
        builder: variance_saturating_k4,
    },
    Entry {
        name: "qubit_axes_test_k4",
        dim: 2,
        k: 4,
        expected: || 0.0,
        expected_expr: "0 (clean qubit; null variance 1/(16N))",
        description: "x1 = -x2 = (1,0,0), x3 = (0,1,0), x4 = -x5 = (0,0,1), effects Y_i = X_i",
        repair: None,
        tolerance: 1e-9,
        maximum: false,
        numeric_only: false,
        cell: None,
        builder: qubit_axes_test_k4,
    },
];

pub fn entries() -> &'static [Entry] {
    ENTRIES
}

pub fn list_entries() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.name).collect()
}

pub fn entry(name: &str) -> Result<&'static Entry> {
    ENTRIES.iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownEntry(name.to_string()))
}

pub fn build(name: &str) -> Result<Scenario> {
    entry(name)?.build()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub name: String,
    pub computed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Extra structural checks for entries that have them.
    pub checks: Vec<Check>,
}

/// Builds the entry and compares |W_k| with the expected value.
pub fn verify(name: &str) -> Result<Verification> {
    let e = entry(name)?;
    let s = e.build()?;
    let computed = value_of(&s);
    let expected = e.expected();
    let mut checks = Vec::new();
    if e.name == "d5_k7_heptagonal" {
        checks = heptagonal_checks(&s)?;
    }
    let pass = (computed - expected).abs() < e.tolerance && checks.iter().all(|c| c.pass);
    Ok(Verification { name: e.name.to_string(), computed, expected, tolerance: e.tolerance, pass, checks })
}

pub fn verify_all() -> Result<Vec<Verification>> {
    ENTRIES.iter().map(|e| verify(e.name)).collect()
}

/// The high and low probability of the heptagonal configuration.
pub fn heptagonal_levels() -> (f64, f64) {
    let off = 7f64.sqrt() / (4.0 * 3f64.sqrt());
    (0.5 + off, 0.5 - off)
}

/// Overlaps and probability table of the heptagonal configuration.
///
/// Preparations 1..7 have pairwise `|<x_i|x_j>|^2 = 1/8`, the extra level
/// is orthogonal to all of them, and effect `j` fires on preparation `i`
/// with probability `1/2 + sqrt(7)/(4 sqrt(3))` when `j - i` is a nonzero
/// square mod 7 and `1/2 - sqrt(7)/(4 sqrt(3))` otherwise.
pub fn heptagonal_checks(s: &Scenario) -> Result<Vec<Check>> {
    const TOL: f64 = 1e-12;
    let xs: Vec<&StateVector> = s.preparations().iter().filter_map(|p| p.pure_state()).collect();
    if xs.len() != 8 {
        return Err(Error::Structural("heptagonal checks need eight pure preparations".into()));
    }
    let mut worst_overlap: f64 = 0.0;
    for (i, xi) in xs.iter().enumerate() {
        for (j, xj) in xs.iter().enumerate() {
            let ov = xi.inner(xj).norm_sqr();
            let want = if i == j {
                1.0
            } else if i == 7 || j == 7 {
                0.0
            } else {
                0.125
            };
            worst_overlap = worst_overlap.max((ov - want).abs());
        }
    }
    let pm = build_probability_matrix(s)?;
    let (hi, lo) = heptagonal_levels();
    let mut worst_p: f64 = 0.0;
    for j in 0..7 {
        for i in 0..7 {
            let diff = (j + 7 - i) % 7;
            let want = if [1, 2, 4].contains(&diff) {
                hi
            } else if diff == 0 {
                continue;
            } else {
                lo
            };
            worst_p = worst_p.max((pm.get(j, i) - want).abs());
        }
        worst_p = worst_p.max(pm.get(j, 7).abs());
    }
    Ok(vec![
        Check {
            name: "overlaps".into(),
            pass: worst_overlap < TOL,
            detail: format!("max deviation from {{1, 1/8, 0}}: {worst_overlap:e}"),
        },
        Check {
            name: "probability_table".into(),
            pass: worst_p < TOL,
            detail: format!("max deviation from 1/2 +- sqrt(7)/(4 sqrt(3)): {worst_p:e}"),
        },
    ])
}

/// |W_k| before and after a compass-search refinement of the entry.
pub fn stationarity(name: &str, opts: &RefineOptions) -> Result<(f64, f64)> {
    let s = build(name)?;
    let before = value_of(&s);
    let (_, after) = refine(&s, opts)?;
    Ok((before, after))
}

const TABLE_FIELDS: [(usize, Field); 10] = [
    (2, Field::Real),
    (2, Field::Complex),
    (3, Field::Real),
    (3, Field::Complex),
    (4, Field::Real),
    (4, Field::Complex),
    (5, Field::Real),
    (5, Field::Complex),
    (6, Field::Real),
    (6, Field::Complex),
];

/// Two-digit maxima of |W_k|, rows k = 1..9, columns as in `TABLE_FIELDS`.
#[allow(clippy::approx_constant)]
const TABLE: [[f64; 10]; 9] = [
    [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
    [0.65, 0.65, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
    [0.0, 0.38, 0.84, 0.84, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0],
    [0.0, 0.0, 0.60, 0.63, 1.87, 1.87, 3.0, 3.0, 3.0, 3.0],
    [0.0, 0.0, 0.42, 0.46, 1.78, 1.78, 3.14, 3.14, 6.0, 6.0],
    [0.0, 0.0, 0.0, 0.33, 1.61, 1.68, 3.40, 3.40, 5.04, 5.04],
    [0.0, 0.0, 0.0, 0.23, 1.41, 1.64, 3.51, 3.72, 6.05, 6.18],
    [0.0, 0.0, 0.0, 0.15, 1.30, 1.47, 3.65, 3.79, 7.49, 7.50],
    [0.0, 0.0, 0.0, 0.0, 1.29, 1.39, 3.77, 3.84, 10.14, 10.34],
];

/// More digits for cells that only have a numerical value.
const PRECISE: &[(usize, usize, Field, f64)] = &[
    (6, 3, Field::Complex, 0.330364646),
    (6, 4, Field::Real, 1.61439616),
    (6, 4, Field::Complex, 1.68093981),
    (7, 3, Field::Complex, 0.225213334),
    (7, 4, Field::Real, 1.41149223),
    (7, 4, Field::Complex, 1.63898287),
    (7, 5, Field::Real, 3.50557203),
    (7, 6, Field::Real, 6.05145518),
    (7, 6, Field::Complex, 6.17876168),
    (8, 4, Field::Real, 1.2962761),
    (8, 4, Field::Complex, 1.47025989),
    (8, 5, Field::Real, 3.64938453),
    (8, 5, Field::Complex, 3.79495481),
    (8, 6, Field::Real, 7.48985655),
    (8, 6, Field::Complex, 7.49786979),
    (9, 4, Field::Real, 1.28868526),
    (9, 4, Field::Complex, 1.39037781),
    (9, 5, Field::Real, 3.76568067),
    (9, 5, Field::Complex, 3.83579182),
    (9, 6, Field::Real, 10.1361814),
    (9, 6, Field::Complex, 10.3359304),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableValue {
    pub cell: Cell,
    /// Reference value to two decimals.
    pub rounded: f64,
    /// More digits when known.
    pub precise: Option<f64>,
    /// Registry entry realizing the cell, if any.
    pub entry: Option<&'static str>,
}

/// Reference maximum for `k = 1..9`, `d = 2..6`.
pub fn table_value(k: usize, d: usize, field: Field) -> Option<TableValue> {
    if !(1..=9).contains(&k) {
        return None;
    }
    let col = TABLE_FIELDS.iter().position(|&(dd, f)| dd == d && f == field)?;
    let cell = Cell { k, d, field };
    let precise = PRECISE.iter().find(|p| p.0 == k && p.1 == d && p.2 == field).map(|p| p.3);
    let entry = ENTRIES.iter().find(|e| e.cell == Some(cell)).map(|e| e.name);
    Some(TableValue { cell, rounded: TABLE[k - 1][col], precise, entry })
}

pub fn table() -> Vec<TableValue> {
    (1..=9)
        .flat_map(|k| TABLE_FIELDS.iter().filter_map(move |&(d, f)| table_value(k, d, f)))
        .collect()
}

/// Cells with a numerical value but no closed-form construction.
pub fn targets() -> Vec<TableValue> {
    table().into_iter().filter(|t| t.precise.is_some() && t.entry.is_none()).collect()
}

/// Whether `value` shows as the two-decimal reference figure, rounded or truncated.
pub fn matches_table(value: f64, reference: f64) -> bool {
    let rounded = (value * 100.0).round() / 100.0;
    let truncated = (value * 100.0 + 1e-9).floor() / 100.0;
    (rounded - reference).abs() < 1e-9 || (truncated - reference).abs() < 1e-9
}

/// The catalog as JSON, one object per entry with its scenario.
pub fn export_json() -> Result<Value> {
    let entries = ENTRIES
        .iter()
        .map(|e| {
            let s = e.build()?;
            Ok(json!({
                "name": e.name,
                "dim": e.dim,
                "k": e.k,
                "field": s.field().to_string(),
                "expected": e.expected(),
                "expected_expr": e.expected_expr,
                "description": e.description,
                "repair": e.repair,
                "tolerance": e.tolerance,
                "maximum": e.maximum,
                "numeric_only": e.numeric_only,
                "cell": e.cell,
                "scenario": crate::io::scenario_to_value(&s),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "format": "dimwit-registry",
        "version": 1,
        "library_version": crate::VERSION,
        "entries": entries,
        "targets": targets(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_roots() {
        assert!((ququint_k5_b2() - 0.8458958093737345).abs() < 1e-12);
        let (a2, _) = d5_k6_params();
        assert!((a2 - 0.3016492773799042).abs() < 1e-12);
    }

    #[test]
    fn entries_have_declared_shapes() {
        for e in entries() {
            let s = e.build().unwrap();
            assert_eq!((s.dim(), s.k()), (e.dim, e.k), "{}", e.name);
        }
    }

    #[test]
    fn unknown_entry() {
        assert!(matches!(build("nope"), Err(Error::UnknownEntry(_))));
    }

    #[test]
    fn table_lookup() {
        let t = table_value(4, 4, Field::Real).unwrap();
        assert_eq!(t.rounded, 1.87);
        assert_eq!(t.entry, Some("ququart_k4_rank2"));
        assert_eq!(table_value(9, 6, Field::Complex).unwrap().precise, Some(10.3359304));
        assert!(table_value(10, 2, Field::Real).is_none());
        assert!(matches_table(5.0467, 5.04));
        assert!(matches_table(0.6495, 0.65));
        assert!(!matches_table(0.6395, 0.65));
    }
}
