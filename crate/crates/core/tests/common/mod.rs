//! Independent reference computations for the integration tests.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Array2<C64> {
    Array2::from_shape_fn((n, n), |_| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Array2<C64> {
    let a = random_complex(rng, n);
    let ad = a.t().mapv(|z| z.conj());
    (&a + &ad).mapv(|z| z * 0.5)
}

/// `A A^† / Tr(A A^†)` for a random `A`.
pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> Array2<C64> {
    let a = random_complex(rng, n);
    let rho = a.dot(&a.t().mapv(|z| z.conj()));
    let tr: C64 = (0..n).map(|i| rho[[i, i]]).sum();
    rho.mapv(|z| z / tr)
}

pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Dense Lindblad generator evaluated entrywise.
pub fn lindblad_rhs(
    h: &Array2<C64>,
    collapses: &[(f64, Array2<C64>)],
    rho: &Array2<C64>,
) -> Array2<C64> {
    let i = C64::new(0.0, 1.0);
    let mut out = (h.dot(rho) - rho.dot(h)).mapv(|z| -i * z);
    for (rate, c) in collapses {
        let cd = dagger(c);
        let cdc = cd.dot(c);
        let term = c.dot(rho).dot(&cd) - (cdc.dot(rho) + rho.dot(&cdc)).mapv(|z| z * 0.5);
        out = out + term.mapv(|z| z * *rate);
    }
    out
}

/// Steady-state excited population of a driven two-level emitter from the
/// optical Bloch equations, solved by Gaussian elimination in `(x, y, P)`
/// with `ρ_eg = x + iy`.
pub fn bloch_excited_population(rabi: f64, detuning: f64) -> f64 {
    let mut a = [
        [-0.5, detuning, 0.0, 0.0],
        [-detuning, -0.5, rabi, rabi / 2.0],
        [0.0, -rabi, -1.0, 0.0],
    ];
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = a[row][col] / a[col][col];
                let pivot_row = a[col];
                for (x, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                    *x -= f * p;
                }
            }
        }
    }
    a[2][3] / a[2][2]
}

/// Classical fourth-order Runge-Kutta for `dv/dt = M v`, sampled at `taus`.
pub fn rk4_propagate(m: &Array2<C64>, v0: &Array1<C64>, taus: &[f64], dt: f64) -> Vec<Array1<C64>> {
    let mut v = v0.clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(taus.len());
    for &target in taus {
        while t < target - 1e-12 {
            let h = dt.min(target - t);
            let k1 = m.dot(&v);
            let k2 = m.dot(&(&v + &k1.mapv(|z| z * (h / 2.0))));
            let k3 = m.dot(&(&v + &k2.mapv(|z| z * (h / 2.0))));
            let k4 = m.dot(&(&v + &k3.mapv(|z| z * h)));
            v = &v
                + &(&k1 + &k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4)
                    .mapv(|z| z * (h / 6.0));
            t += h;
        }
        out.push(v.clone());
    }
    out
}

/// Factorial moments `<n>`, `<n(n-1)>`, `<n(n-1)(n-2)>` of a geometric
/// photon distribution `p_n ∝ (pump/decay)^n` truncated to `dim` levels.
/// This is the exact steady state of a pumped, damped mode: detailed balance
/// holds level by level.
pub fn thermal_moments(dim: usize, pump: f64, decay: f64) -> [f64; 3] {
    let r = pump / decay;
    let weights: Vec<f64> = (0..dim).map(|n| r.powi(n as i32)).collect();
    let z: f64 = weights.iter().sum();
    let moment = |f: &dyn Fn(f64) -> f64| {
        weights
            .iter()
            .enumerate()
            .map(|(n, w)| f(n as f64) * w / z)
            .sum::<f64>()
    };
    [
        moment(&|n| n),
        moment(&|n| n * (n - 1.0)),
        moment(&|n| n * (n - 1.0) * (n - 2.0)),
    ]
}

/// Columns `l_k` with `ρ = Σ_k l_k l_k^†` (pivot-skipping Cholesky).
pub fn cholesky_columns(rho: &Array2<C64>) -> Vec<Array1<C64>> {
    let n = rho.nrows();
    let tr: f64 = (0..n).map(|i| rho[[i, i]].re).sum();
    let mut l = Array2::<C64>::zeros((n, n));
    for j in 0..n {
        let d = rho[[j, j]].re - (0..j).map(|k| l[[j, k]].norm_sqr()).sum::<f64>();
        if d <= 1e-14 * tr {
            continue;
        }
        let ljj = d.sqrt();
        l[[j, j]] = C64::new(ljj, 0.0);
        for i in j + 1..n {
            let s: C64 = (0..j).map(|k| l[[i, k]] * l[[j, k]].conj()).sum();
            l[[i, j]] = (rho[[i, j]] - s) / ljj;
        }
    }
    (0..n)
        .map(|j| l.column(j).to_owned())
        .filter(|c| c.iter().any(|z| z.norm() > 0.0))
        .collect()
}

/// Quantum-jump unraveling of a Lindblad model.
pub struct Trajectories {
    h_eff: Array2<C64>,
    jumps: Vec<Array2<C64>>,
}

impl Trajectories {
    pub fn new(h: &Array2<C64>, collapses: &[(f64, Array2<C64>)]) -> Self {
        let mut h_eff = h.clone();
        let mut jumps = Vec::new();
        for (rate, c) in collapses {
            let cdc = dagger(c).dot(c);
            h_eff = h_eff - cdc.mapv(|z| z * C64::new(0.0, 0.5 * rate));
            jumps.push(c.mapv(|z| z * rate.sqrt()));
        }
        Self { h_eff, jumps }
    }

    fn step(&self, psi: &Array1<C64>, dt: f64) -> Array1<C64> {
        let mi = C64::new(0.0, -1.0);
        let f = |v: &Array1<C64>| self.h_eff.dot(v).mapv(|z| z * mi);
        let k1 = f(psi);
        let k2 = f(&(psi + &k1.mapv(|z| z * (dt / 2.0))));
        let k3 = f(&(psi + &k2.mapv(|z| z * (dt / 2.0))));
        let k4 = f(&(psi + &k3.mapv(|z| z * dt)));
        psi + &(&k1 + &k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4).mapv(|z| z * (dt / 6.0))
    }

    /// Mean and standard error of `<observe>` at `taus` (multiples of `dt`)
    /// over `count` trajectories started from states drawn by `initial`.
    pub fn expectation(
        &self,
        initial: &dyn Fn(&mut ChaCha8Rng) -> Array1<C64>,
        observe: &Array2<C64>,
        taus: &[f64],
        count: usize,
        dt: f64,
        seed: u64,
    ) -> Vec<(f64, f64)> {
        let mut rng = rng(seed);
        let marks: Vec<usize> = taus.iter().map(|t| (t / dt).round() as usize).collect();
        let last = *marks.iter().max().unwrap();
        let mut sum = vec![0.0; taus.len()];
        let mut sum_sq = vec![0.0; taus.len()];
        let norm_sq = |v: &Array1<C64>| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        for _ in 0..count {
            let mut psi = initial(&mut rng);
            let mut threshold: f64 = rng.random();
            for step in 0..=last {
                if step > 0 {
                    psi = self.step(&psi, dt);
                    if norm_sq(&psi) < threshold {
                        let candidates: Vec<Array1<C64>> =
                            self.jumps.iter().map(|j| j.dot(&psi)).collect();
                        let weights: Vec<f64> = candidates.iter().map(norm_sq).collect();
                        let total: f64 = weights.iter().sum();
                        let mut pick = rng.random::<f64>() * total;
                        let mut chosen = candidates.len() - 1;
                        for (k, w) in weights.iter().enumerate() {
                            if pick < *w {
                                chosen = k;
                                break;
                            }
                            pick -= w;
                        }
                        let next = &candidates[chosen];
                        let n = norm_sq(next).sqrt();
                        psi = next.mapv(|z| z / n);
                        threshold = rng.random();
                    }
                }
                for (k, &m) in marks.iter().enumerate() {
                    if m == step {
                        let value = psi
                            .iter()
                            .zip(observe.dot(&psi).iter())
                            .map(|(a, b)| (a.conj() * b).re)
                            .sum::<f64>()
                            / norm_sq(&psi);
                        sum[k] += value;
                        sum_sq[k] += value * value;
                    }
                }
            }
        }
        let n = count as f64;
        sum.iter()
            .zip(&sum_sq)
            .map(|(s, q)| {
                let mean = s / n;
                let var = (q / n - mean * mean).max(0.0) * n / (n - 1.0);
                (mean, (var / n).sqrt())
            })
            .collect()
    }
}

impl Trajectories {
    /// `Tr[observe e^{Lτ} ρ]` for a mixed `ρ = Σ_k l_k l_k^†`, stratified over
    /// the Cholesky columns: `count` trajectories start from each normalized
    /// column and the column means are weighted by `|l_k|^2`. Drawing columns
    /// at random instead would almost never visit low-weight columns that can
    /// still dominate a small observable.
    pub fn mixed_expectation(
        &self,
        rho: &Array2<C64>,
        observe: &Array2<C64>,
        taus: &[f64],
        count: usize,
        dt: f64,
        seed: u64,
    ) -> Vec<(f64, f64)> {
        let mut total = vec![(0.0, 0.0); taus.len()];
        for (k, column) in cholesky_columns(rho).into_iter().enumerate() {
            let weight: f64 = column.iter().map(|z| z.norm_sqr()).sum();
            let start = column.mapv(|z| z / weight.sqrt());
            let stats = self.expectation(
                &|_| start.clone(),
                observe,
                taus,
                count,
                dt,
                seed + k as u64,
            );
            for (acc, (mean, se)) in total.iter_mut().zip(stats) {
                acc.0 += weight * mean;
                acc.1 += (weight * se).powi(2);
            }
        }
        total.into_iter().map(|(m, v)| (m, v.sqrt())).collect()
    }
}

/// `∫ f(ν) L(ω - ν) dν` with `L` a unit-area Lorentzian of half-width
/// `half_width`, by the trapezoid rule on `[lo, hi]` with step `dnu`.
pub fn lorentzian_convolution(
    f: &dyn Fn(f64) -> f64,
    half_width: f64,
    omega: f64,
    lo: f64,
    hi: f64,
    dnu: f64,
) -> f64 {
    let n = ((hi - lo) / dnu).round() as usize;
    let mut acc = 0.0;
    for k in 0..=n {
        let nu = lo + k as f64 * dnu;
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        acc += w * f(nu) * lorentzian(omega - nu, half_width);
    }
    acc * dnu
}

pub fn lorentzian(x: f64, half_width: f64) -> f64 {
    half_width / std::f64::consts::PI / (x * x + half_width * half_width)
}
