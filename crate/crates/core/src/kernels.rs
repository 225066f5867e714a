//! Kernel positivity checks: Gram matrices of two-point functions,
//! conditionally negative definite kernels, Schoenberg transforms and the
//! cluster decomposition of `1 − τ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::clusters::UnionFind;
use crate::error::{Error, Result};
use crate::estimators::{fold_samples, PairwiseTable, TwoPointTable, SE_SLACK};
use crate::groups::CayleyWindow;
use crate::percolation::BondSampler;

/// Tolerance for kernels computed in closed form.
pub const DETERMINISTIC_TOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub labels: Vec<String>,
    pub values: DMatrix<f64>,
}

impl KernelMatrix {
    pub fn new(labels: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if !values.is_square() || values.nrows() != labels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} labels for a {}x{} matrix",
                labels.len(),
                values.nrows(),
                values.ncols()
            )));
        }
        let asym = asymmetry(&values);
        if asym > SYMMETRY_TOL {
            return Err(Error::Asymmetric(asym));
        }
        Ok(Self { labels, values })
    }

    pub fn from_fn(labels: Vec<String>, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let n = labels.len();
        Self::new(labels, DMatrix::from_fn(n, n, f))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn is_symmetric(&self) -> bool {
        asymmetry(&self.values) <= SYMMETRY_TOL
    }

    /// Elementwise map, keeping labels.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> KernelMatrix {
        KernelMatrix {
            labels: self.labels.clone(),
            values: self.values.map(f),
        }
    }
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `K[g,h] = τ̂(g,h)` from direct pairwise estimates.
pub fn gram_from_pairwise(t: &PairwiseTable) -> KernelMatrix {
    KernelMatrix {
        labels: t.labels.clone(),
        values: DMatrix::from_fn(t.len(), t.len(), |i, j| t.tau(i, j)),
    }
}

/// `K[g,h] = τ(o, g⁻¹h)` read off a two-point table via invariance.
pub fn gram_from_table(window: &CayleyWindow, t: &TwoPointTable, f: &[usize]) -> Result<KernelMatrix> {
    let family = window.family();
    let n = f.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let gi = family.inverse(window.vertex(f[i]))?;
        for j in 0..n {
            let d = family.mul(&gi, window.vertex(f[j]))?;
            let row = window
                .index_of(&d)
                .and_then(|v| t.row_for_vertex(v))
                .ok_or(Error::MissingPair(f[i], f[j]))?;
            m[(i, j)] = row.tau_hat;
        }
    }
    KernelMatrix::new(f.iter().map(|&v| window.vertex(v).to_string()).collect(), m)
}

/// Gram matrix of an exact two-point law given as a function of the pair.
pub fn gram_from_fn(window: &CayleyWindow, f: &[usize], tau: impl Fn(usize, usize) -> f64) -> Result<KernelMatrix> {
    KernelMatrix::from_fn(f.iter().map(|&v| window.vertex(v).to_string()).collect(), |i, j| tau(f[i], f[j]))
}

fn eigenvalues(k: &KernelMatrix) -> Result<DVector<f64>> {
    if !k.is_symmetric() {
        return Err(Error::Asymmetric(asymmetry(&k.values)));
    }
    Ok(SymmetricEigen::new(k.values.clone()).eigenvalues)
}

pub fn min_eigenvalue(k: &KernelMatrix) -> Result<f64> {
    Ok(eigenvalues(k)?.iter().copied().fold(f64::INFINITY, f64::min))
}

pub fn psd_check(k: &KernelMatrix, tol: f64) -> Result<bool> {
    Ok(k.is_empty() || min_eigenvalue(k)? >= -tol)
}

/// PSD tolerance for a Gram matrix of MC estimates: `5 · max SE · |F|`.
pub fn mc_psd_tolerance(t: &PairwiseTable) -> f64 {
    5.0 * t.max_stderr() * t.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CndReport {
    pub nonnegative: bool,
    pub zero_diagonal: bool,
    /// Largest `aᵀψa` over unit mean-zero probes.
    pub max_probe: f64,
    /// Largest eigenvalue of `PψP`, `P` the centring projection.
    pub max_centered_eigenvalue: f64,
    pub pass: bool,
}

/// Conditional negative definiteness: both random mean-zero probes and the
/// eigenvalues of the doubly centred matrix must stay below `tol`.
pub fn cnd_check(psi: &KernelMatrix, trials: usize, tol: f64, seed: u64) -> Result<CndReport> {
    if !psi.is_symmetric() {
        return Err(Error::Asymmetric(asymmetry(&psi.values)));
    }
    let n = psi.len();
    let nonnegative = psi.values.iter().all(|&v| v >= -tol);
    let zero_diagonal = (0..n).all(|i| psi.get(i, i).abs() <= tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_probe = f64::NEG_INFINITY;
    if n >= 2 {
        for _ in 0..trials {
            let mut a: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let mean = a.mean();
            a.add_scalar_mut(-mean);
            let norm = a.norm();
            if norm == 0.0 {
                continue;
            }
            a /= norm;
            max_probe = max_probe.max(a.dot(&(&psi.values * &a)));
        }
    }
    let max_centered_eigenvalue = if n >= 2 {
        let p = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
        let c = &p * &psi.values * &p;
        let c = (&c + c.transpose()) * 0.5;
        SymmetricEigen::new(c).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        0.0
    };
    let max_probe = if max_probe.is_finite() { max_probe } else { 0.0 };
    Ok(CndReport {
        nonnegative,
        zero_diagonal,
        max_probe,
        max_centered_eigenvalue,
        pass: nonnegative && zero_diagonal && max_probe <= tol && max_centered_eigenvalue <= tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchoenbergReport {
    /// `(t, min eigenvalue of exp(−tψ))`.
    pub levels: Vec<(f64, f64)>,
    pub pass: bool,
}

/// `exp(−tψ)` is PSD for every `t` in the grid.
pub fn schoenberg_check(psi: &KernelMatrix, ts: &[f64], tol: f64) -> Result<SchoenbergReport> {
    let mut levels = Vec::with_capacity(ts.len());
    for &t in ts {
        levels.push((t, min_eigenvalue(&psi.map(|v| (-t * v).exp()))?));
    }
    let pass = levels.iter().all(|&(_, m)| m >= -tol);
    Ok(SchoenbergReport { levels, pass })
}

/// `ψ_n = (1 − τ_n)/γ_n`, elementwise.
pub fn psi_n_transform(tau: &[f64], gamma_n: f64) -> Result<Vec<f64>> {
    if gamma_n <= 0.0 {
        return Err(Error::InvalidParameter(format!("γ_n = {gamma_n} must be positive")));
    }
    Ok(tau.iter().map(|t| (1.0 - t) / gamma_n).collect())
}

/// Matrix form of [`psi_n_transform`].
pub fn psi_n_kernel(tau: &KernelMatrix, gamma_n: f64) -> Result<KernelMatrix> {
    if gamma_n <= 0.0 {
        return Err(Error::InvalidParameter(format!("γ_n = {gamma_n} must be positive")));
    }
    Ok(tau.map(|t| (1.0 - t) / gamma_n))
}

/// Accumulates the cluster decomposition `k(g,h) = ½ Σ_i μ_i(S_g Δ S_h)`
/// over configurations, where `C_i` is the cluster of `g_i` within `F` if
/// `g_i` is not covered by an earlier `C_j`, and empty otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct MdAccumulator {
    n: usize,
    samples: u64,
    /// `[g ↮ h]` counts, row-major over pairs.
    disconnected: Vec<u64>,
    /// Counts of `C_i` containing exactly one of `g, h`, indexed
    /// `(i·n + g)·n + h`.
    sym_diff: Vec<u64>,
    /// Samples in which the indicator identity failed for some pair.
    violations: u64,
}

impl MdAccumulator {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            samples: 0,
            disconnected: vec![0; n * n],
            sym_diff: vec![0; n * n * n],
            violations: 0,
        }
    }

    /// Adds one configuration, given cluster labels of the points of `F`.
    pub fn add(&mut self, labels: &[u32]) {
        let n = self.n;
        assert_eq!(labels.len(), n, "one label per point of F");
        // owner[j] = index i of the C_i that contains g_j
        let mut owner = vec![usize::MAX; n];
        for i in 0..n {
            if owner[i] == usize::MAX {
                for j in i..n {
                    if labels[j] == labels[i] {
                        owner[j] = i;
                    }
                }
            }
        }
        let mut ok = true;
        for g in 0..n {
            for h in 0..n {
                let apart = labels[g] != labels[h];
                self.disconnected[g * n + h] += apart as u64;
                let mut sum = 0u32;
                if owner[g] != owner[h] {
                    self.sym_diff[(owner[g] * n + g) * n + h] += 1;
                    self.sym_diff[(owner[h] * n + g) * n + h] += 1;
                    sum = 2;
                }
                ok &= sum == 2 * apart as u32;
            }
        }
        self.violations += (!ok) as u64;
        self.samples += 1;
    }

    pub fn merge(mut self, other: MdAccumulator) -> Self {
        assert_eq!(self.n, other.n);
        self.samples += other.samples;
        self.violations += other.violations;
        self.disconnected.iter_mut().zip(&other.disconnected).for_each(|(a, b)| *a += b);
        self.sym_diff.iter_mut().zip(&other.sym_diff).for_each(|(a, b)| *a += b);
        self
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// `k̂(g,h) = 1 − τ̂(g,h)`.
    pub fn k_hat(&self, g: usize, h: usize) -> f64 {
        self.disconnected[g * self.n + h] as f64 / self.samples as f64
    }

    pub fn k_stderr(&self, g: usize, h: usize) -> f64 {
        let k = self.k_hat(g, h);
        (k * (1.0 - k) / self.samples as f64).sqrt()
    }

    /// `μ̂_i(S_g Δ S_h)`.
    pub fn mu_hat(&self, i: usize, g: usize, h: usize) -> f64 {
        self.sym_diff[(i * self.n + g) * self.n + h] as f64 / self.samples as f64
    }

    pub fn report(&self) -> Result<MdReport> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidParameter("empty vertex set".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("zero samples".into()));
        }
        let mut max_identity_gap = 0.0f64;
        for g in 0..n {
            for h in 0..n {
                let half: f64 = 0.5 * (0..n).map(|i| self.mu_hat(i, g, h)).sum::<f64>();
                max_identity_gap = max_identity_gap.max((self.k_hat(g, h) - half).abs());
            }
        }
        let k = DMatrix::from_fn(n, n, |g, h| self.k_hat(g, h));
        let se = DMatrix::from_fn(n, n, |g, h| self.k_stderr(g, h));
        Ok(MdReport {
            samples: self.samples,
            per_sample_violations: self.violations,
            max_identity_gap,
            triangle: triangle_audit(&k, &se),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleAudit {
    pub triples: usize,
    /// Triples with `k(g,h) > k(g,x) + k(x,h) + 3·combined SE`.
    pub violations: usize,
    /// Largest `k(g,h) − k(g,x) − k(x,h)` over all triples.
    pub max_excess: f64,
}

/// Triangle inequality audit of `k` with `3·sqrt(se_gh² + se_gx² + se_xh²)`
/// slack.
pub fn triangle_audit(k: &DMatrix<f64>, se: &DMatrix<f64>) -> TriangleAudit {
    let n = k.nrows();
    let mut violations = 0;
    let mut max_excess = f64::NEG_INFINITY;
    for g in 0..n {
        for h in 0..n {
            for x in 0..n {
                let excess = k[(g, h)] - k[(g, x)] - k[(x, h)];
                max_excess = max_excess.max(excess);
                let slack = SE_SLACK * (se[(g, h)].powi(2) + se[(g, x)].powi(2) + se[(x, h)].powi(2)).sqrt();
                if excess > slack + 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    TriangleAudit {
        triples: n * n * n,
        violations,
        max_excess: if max_excess.is_finite() { max_excess } else { 0.0 },
    }
}

/// Triangle audit of `1 − τ̂` from a pairwise table.
pub fn triangle_audit_pairwise(t: &PairwiseTable) -> TriangleAudit {
    let n = t.len();
    let k = DMatrix::from_fn(n, n, |i, j| 1.0 - t.tau(i, j));
    let se = DMatrix::from_fn(n, n, |i, j| t.stderr(i, j));
    triangle_audit(&k, &se)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdReport {
    pub samples: u64,
    pub per_sample_violations: u64,
    pub max_identity_gap: f64,
    pub triangle: TriangleAudit,
}

/// Runs the decomposition over `n` sampled configurations on `f`.
pub fn measure_definite_decomposition(
    window: &CayleyWindow,
    sampler: &dyn BondSampler,
    f: &[usize],
    n: u64,
    seed: u64,
) -> Result<MdReport> {
    if f.is_empty() {
        return Err(Error::InvalidParameter("empty vertex set".into()));
    }
    if let Some(&v) = f.iter().find(|&&v| v >= window.vertex_count()) {
        return Err(Error::OutOfWindow(format!("vertex {v}")));
    }
    let k = f.len();
    let acc = fold_samples(
        sampler,
        n,
        seed,
        || (MdAccumulator::new(k), UnionFind::new(window.vertex_count()), vec![0u32; k]),
        |(acc, uf, labels), open, _| {
            uf.reset();
            uf.absorb(window, open);
            for (l, &v) in labels.iter_mut().zip(f) {
                *l = uf.find(v as u32);
            }
            acc.add(labels);
        },
        |(a, uf, l), (b, _, _)| (a.merge(b), uf, l),
    )
    .0;
    acc.report()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{ball, Family, DEFAULT_BUDGET};

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn eigen_fixtures() {
        let id = KernelMatrix::new(labels(4), DMatrix::identity(4, 4)).unwrap();
        assert!((min_eigenvalue(&id).unwrap() - 1.0).abs() < 1e-14);
        let ones = KernelMatrix::new(labels(5), DMatrix::from_element(5, 5, 1.0)).unwrap();
        assert!(min_eigenvalue(&ones).unwrap().abs() < 1e-12);
        assert!(psd_check(&ones, DETERMINISTIC_TOL).unwrap());
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(KernelMatrix::new(labels(2), m), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn cnd_fixtures() {
        let w = ball(Family::Free { rank: 2 }, 2, DEFAULT_BUDGET).unwrap();
        let f = w.ball_indices(2);
        let fam = w.family();
        let psi = gram_from_fn(&w, &f, |a, b| fam.distance(w.vertex(a), w.vertex(b)).unwrap() as f64).unwrap();
        assert!(cnd_check(&psi, 200, DETERMINISTIC_TOL, 1).unwrap().pass);
        let zero = psi.map(|_| 0.0);
        assert!(cnd_check(&zero, 50, DETERMINISTIC_TOL, 1).unwrap().pass);
        let neg = KernelMatrix::from_fn(labels(4), |i, j| if i == j { 0.0 } else { -1.0 }).unwrap();
        let rep = cnd_check(&neg, 50, DETERMINISTIC_TOL, 1).unwrap();
        assert!(!rep.pass && !rep.nonnegative);
    }

    #[test]
    fn squared_euclidean_is_cnd() {
        let w = ball(Family::Lattice { dim: 2 }, 2, DEFAULT_BUDGET).unwrap();
        let f: Vec<usize> = (0..w.vertex_count()).collect();
        let coords = |v: usize| match w.vertex(v) {
            crate::groups::GroupElement::Lattice(c) => (c[0] as f64, c[1] as f64),
            _ => unreachable!(),
        };
        let psi = gram_from_fn(&w, &f, |a, b| {
            let (p, q) = (coords(a), coords(b));
            0.1 * ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2))
        })
        .unwrap();
        assert!(cnd_check(&psi, 100, DETERMINISTIC_TOL, 2).unwrap().pass);
        assert!(schoenberg_check(&psi, &[0.1, 1.0, 5.0], DETERMINISTIC_TOL).unwrap().pass);
    }

    #[test]
    fn psi_n() {
        assert_eq!(psi_n_transform(&[1.0, 1.0], 0.3).unwrap(), vec![0.0, 0.0]);
        assert!(psi_n_transform(&[1.0], 0.0).is_err());
        let p: f64 = 0.5;
        for l in 0..10 {
            let tau = (-(1.0 - p) * l as f64).exp();
            let v = psi_n_transform(&[tau], 1.0 - p).unwrap()[0];
            assert!(v <= l as f64 + 1e-15);
        }
    }

    #[test]
    fn md_full_and_empty() {
        let mut full = MdAccumulator::new(3);
        full.add(&[0, 0, 0]);
        let r = full.report().unwrap();
        assert_eq!(r.per_sample_violations, 0);
        assert_eq!(full.k_hat(0, 2), 0.0);
        assert!((0..3).all(|i| full.mu_hat(i, 0, 2) == 0.0));

        let mut empty = MdAccumulator::new(2);
        empty.add(&[0, 1]);
        assert_eq!(empty.k_hat(0, 1), 1.0);
        assert_eq!(empty.mu_hat(0, 0, 1), 1.0);
        assert_eq!(empty.mu_hat(1, 0, 1), 1.0);
        assert_eq!(empty.report().unwrap().max_identity_gap, 0.0);
        assert!(MdAccumulator::new(0).report().is_err());
    }
}
