//! RIS phase-shift design.
//!
//! The phases minimize the squared Frobenius norm of the imaginary part of
//! the effective channel,
//!
//! ```text
//! J(θ) = Σ_{m,k} Q_{m,k}²,
//! Q_{m,k} = Im[H^UV]_{m,k} + Σ_n ( cos θ_n Im[V_n]_{m,k} + sin θ_n Re[V_n]_{m,k} ),
//! ```
//!
//! where `V_n = H^RV(:, n) H^UR(n, :)` is the rank-one contribution of
//! element `n`. The derivative is
//!
//! ```text
//! ∂J/∂θ_n = 2 Σ_{m,k} Q_{m,k} ( cos θ_n Re[V_n]_{m,k} - sin θ_n Im[V_n]_{m,k} ).
//! ```
//!
//! Both are evaluated in one `O(N M K)` pass over the cached `V_n`.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{effective_channel, ChannelSet, ComplexMatrix};
use crate::{Error, Result};

/// RIS phase vector `θ`, one entry per element.
#[derive(Debug, Clone, PartialEq)]
pub struct RisPhases(Vec<f64>);

impl RisPhases {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some(i) = theta.iter().position(|t| !t.is_finite()) {
            return Err(Error::Validation(format!("phase {i} is not finite")));
        }
        Ok(RisPhases(theta))
    }

    pub fn zeros(n: usize) -> Self {
        RisPhases(vec![0.0; n])
    }

    /// Uniform on `[0, 2π)^n`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        RisPhases((0..n).map(|_| rng.random_range(0.0..TAU)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Wraps every phase into `[0, 2π)`.
    pub fn canonical(&self) -> Self {
        RisPhases(
            self.0
                .iter()
                .map(|t| {
                    let w = t.rem_euclid(TAU);
                    // rem_euclid can round up to exactly 2π for tiny negatives.
                    if w >= TAU { 0.0 } else { w }
                })
                .collect(),
        )
    }

    /// Diagonal of `Φ`.
    pub fn phasors(&self) -> Vec<Complex64> {
        self.0.iter().map(|&t| Complex64::from_polar(1.0, t)).collect()
    }
}

/// Rank-one terms `V_n` stored as separate real and imaginary planes, each
/// `M K` entries in row-major `(m, k)` order.
#[derive(Debug, Clone)]
pub struct RankOneCache {
    cells: usize,
    users: usize,
    elements: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

pub fn build_rank_one_cache(ch: &ChannelSet) -> Result<RankOneCache> {
    ch.validate()?;
    let (m_cells, k_users, n_elems) = (ch.cells(), ch.users(), ch.ris_elements());
    let block = m_cells * k_users;
    let mut re = Vec::with_capacity(n_elems * block);
    let mut im = Vec::with_capacity(n_elems * block);
    for n in 0..n_elems {
        for m in 0..m_cells {
            let a = ch.h_rv[(m, n)];
            for k in 0..k_users {
                let v = a * ch.h_ur[(n, k)];
                re.push(v.re);
                im.push(v.im);
            }
        }
    }
    Ok(RankOneCache {
        cells: m_cells,
        users: k_users,
        elements: n_elems,
        re,
        im,
    })
}

impl RankOneCache {
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    /// `V_n` as a matrix.
    pub fn term(&self, n: usize) -> ComplexMatrix {
        let block = self.cells * self.users;
        let off = n * block;
        ComplexMatrix::from_fn(self.cells, self.users, |m, k| {
            let i = off + m * self.users + k;
            Complex64::new(self.re[i], self.im[i])
        })
    }
}

/// Work done by objective/gradient evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounter {
    pub objective_evals: u64,
    pub gradient_evals: u64,
    /// Real multiply-accumulate steps executed in the inner loops.
    pub mac_ops: u64,
}

/// `J(θ)` bound to a cache and the direct link.
#[derive(Debug, Clone)]
pub struct PhaseObjective<'a> {
    cache: &'a RankOneCache,
    uv_im: Vec<f64>,
}

impl<'a> PhaseObjective<'a> {
    pub fn new(cache: &'a RankOneCache, h_uv: &ComplexMatrix) -> Result<Self> {
        if h_uv.nrows() != cache.cells || h_uv.ncols() != cache.users {
            return Err(Error::Dimension(format!(
                "h_uv is {}x{}, cache expects {}x{}",
                h_uv.nrows(),
                h_uv.ncols(),
                cache.cells,
                cache.users
            )));
        }
        let mut uv_im = Vec::with_capacity(cache.cells * cache.users);
        for m in 0..cache.cells {
            for k in 0..cache.users {
                uv_im.push(h_uv[(m, k)].im);
            }
        }
        Ok(PhaseObjective { cache, uv_im })
    }

    pub fn elements(&self) -> usize {
        self.cache.elements
    }

    fn check_len(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.cache.elements {
            return Err(Error::Dimension(format!(
                "{} phases for {} RIS elements",
                theta.len(),
                self.cache.elements
            )));
        }
        Ok(())
    }

    fn residual(&self, theta: &[f64], counter: &mut EvalCounter) -> Vec<f64> {
        let block = self.uv_im.len();
        let mut q = self.uv_im.clone();
        for (n, &t) in theta.iter().enumerate() {
            let (s, c) = t.sin_cos();
            let re = &self.cache.re[n * block..(n + 1) * block];
            let im = &self.cache.im[n * block..(n + 1) * block];
            for ((qi, r), i) in q.iter_mut().zip(re).zip(im) {
                *qi += c * i + s * r;
            }
        }
        counter.mac_ops += (theta.len() * block) as u64;
        q
    }

    pub fn value(&self, theta: &[f64], counter: &mut EvalCounter) -> Result<f64> {
        self.check_len(theta)?;
        counter.objective_evals += 1;
        let q = self.residual(theta, counter);
        Ok(q.iter().map(|x| x * x).sum())
    }

    /// Returns `J(θ)` and writes `∇J(θ)` into `grad`.
    pub fn value_and_gradient(
        &self,
        theta: &[f64],
        grad: &mut [f64],
        counter: &mut EvalCounter,
    ) -> Result<f64> {
        self.check_len(theta)?;
        if grad.len() != theta.len() {
            return Err(Error::Dimension("gradient buffer length differs from θ".into()));
        }
        counter.gradient_evals += 1;
        let block = self.uv_im.len();
        let q = self.residual(theta, counter);
        for (n, (&t, g)) in theta.iter().zip(grad.iter_mut()).enumerate() {
            let (s, c) = t.sin_cos();
            let re = &self.cache.re[n * block..(n + 1) * block];
            let im = &self.cache.im[n * block..(n + 1) * block];
            let mut acc = 0.0;
            for ((qi, r), i) in q.iter().zip(re).zip(im) {
                acc += qi * (c * r - s * i);
            }
            *g = 2.0 * acc;
        }
        counter.mac_ops += (theta.len() * block) as u64;
        Ok(q.iter().map(|x| x * x).sum())
    }
}

pub fn objective(theta: &RisPhases, cache: &RankOneCache, h_uv: &ComplexMatrix) -> Result<f64> {
    PhaseObjective::new(cache, h_uv)?.value(theta.as_slice(), &mut EvalCounter::default())
}

pub fn gradient(theta: &RisPhases, cache: &RankOneCache, h_uv: &ComplexMatrix) -> Result<Vec<f64>> {
    let obj = PhaseObjective::new(cache, h_uv)?;
    let mut grad = vec![0.0; theta.len()];
    obj.value_and_gradient(theta.as_slice(), &mut grad, &mut EvalCounter::default())?;
    Ok(grad)
}

/// `‖Im(X)‖²_F`.
pub fn frobenius_imag_sq(x: &ComplexMatrix) -> f64 {
    x.iter().map(|z| z.im * z.im).sum()
}

/// Hyperparameters of the Adam loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub max_iters: usize,
    pub step: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Stop once `‖∇J‖∞` drops below this value. Off by default.
    pub early_stop_grad_inf: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            max_iters: 100,
            step: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-5,
            early_stop_grad_inf: None,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if self.max_iters == 0 {
            return Err(Error::config("adam.max_iters", "must be at least 1"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config("adam.step", "must be positive"));
        }
        if !open_unit(self.beta1) {
            return Err(Error::config("adam.beta1", "must lie in (0, 1)"));
        }
        if !open_unit(self.beta2) {
            return Err(Error::config("adam.beta2", "must lie in (0, 1)"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config("adam.epsilon", "must be positive"));
        }
        if let Some(tol) = self.early_stop_grad_inf {
            if !(tol > 0.0) {
                return Err(Error::config("adam.early_stop_grad_inf", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Per-iteration record of an Adam run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    /// `J(θ_n)` at the start of iteration `n`.
    pub objective: Vec<f64>,
    /// `‖∇J(θ_n)‖₂`.
    pub grad_norm: Vec<f64>,
    /// `J` at the returned phases.
    pub final_objective: f64,
    pub evals: EvalCounter,
}

impl ConvergenceTrace {
    pub fn initial_objective(&self) -> Option<f64> {
        self.objective.first().copied()
    }

    pub fn running_min(&self) -> Vec<f64> {
        self.objective
            .iter()
            .scan(f64::INFINITY, |best, &j| {
                *best = best.min(j);
                Some(*best)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iter,objective,grad_norm")?;
        for (i, (j, g)) in self.objective.iter().zip(&self.grad_norm).enumerate() {
            writeln!(w, "{},{},{}", i + 1, j, g)?;
        }
        Ok(())
    }
}

/// Adam from a uniformly random start.
pub fn adam_optimize<R: Rng + ?Sized>(
    cache: &RankOneCache,
    h_uv: &ComplexMatrix,
    cfg: &AdamConfig,
    rng: &mut R,
) -> Result<(RisPhases, ConvergenceTrace)> {
    cfg.validate()?;
    let obj = PhaseObjective::new(cache, h_uv)?;
    let init = RisPhases::random(cache.elements, rng);
    adam_from(&obj, init, cfg)
}

/// Adam from a given start. Runs exactly `max_iters` gradient evaluations
/// unless the optional early stop fires.
pub fn adam_from(
    obj: &PhaseObjective<'_>,
    init: RisPhases,
    cfg: &AdamConfig,
) -> Result<(RisPhases, ConvergenceTrace)> {
    cfg.validate()?;
    let mut theta = init.into_vec();
    obj.check_len(&theta)?;
    let n = theta.len();
    let mut first = vec![0.0; n];
    let mut second = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut trace = ConvergenceTrace {
        objective: Vec::with_capacity(cfg.max_iters),
        grad_norm: Vec::with_capacity(cfg.max_iters),
        ..Default::default()
    };
    let mut beta1_pow = 1.0;
    let mut beta2_pow = 1.0;

    for _ in 0..cfg.max_iters {
        let j = obj.value_and_gradient(&theta, &mut grad, &mut trace.evals)?;
        trace.objective.push(j);
        trace.grad_norm.push(grad.iter().map(|g| g * g).sum::<f64>().sqrt());
        if let Some(tol) = cfg.early_stop_grad_inf {
            if grad.iter().all(|g| g.abs() < tol) {
                break;
            }
        }
        beta1_pow *= cfg.beta1;
        beta2_pow *= cfg.beta2;
        for i in 0..n {
            let g = grad[i];
            first[i] = cfg.beta1 * first[i] + (1.0 - cfg.beta1) * g;
            second[i] = cfg.beta2 * second[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = first[i] / (1.0 - beta1_pow);
            let v_hat = second[i] / (1.0 - beta2_pow);
            theta[i] -= cfg.step * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }

    let theta = RisPhases(theta).canonical();
    trace.final_objective = obj.value(theta.as_slice(), &mut trace.evals)?;
    Ok((theta, trace))
}

/// Maximum number of RIS elements the grid search accepts.
pub const BRUTE_FORCE_MAX_ELEMENTS: usize = 3;

/// Exhaustive search over `grid_points_per_dim^N` phases `2πi/G`.
pub fn brute_force_phases(
    cache: &RankOneCache,
    h_uv: &ComplexMatrix,
    grid_points_per_dim: usize,
) -> Result<RisPhases> {
    let n = cache.elements;
    if n > BRUTE_FORCE_MAX_ELEMENTS {
        return Err(Error::Budget {
            what: "phase grid search",
            cost: (grid_points_per_dim as f64).powi(n as i32),
            budget: (grid_points_per_dim as f64).powi(BRUTE_FORCE_MAX_ELEMENTS as i32),
        });
    }
    if grid_points_per_dim == 0 {
        return Err(Error::Parameter("grid needs at least one point".into()));
    }
    let obj = PhaseObjective::new(cache, h_uv)?;
    let grid: Vec<f64> = (0..grid_points_per_dim)
        .map(|i| TAU * i as f64 / grid_points_per_dim as f64)
        .collect();
    let total = grid_points_per_dim.pow(n as u32);
    let mut counter = EvalCounter::default();
    let mut theta = vec![0.0; n];
    let mut best = (f64::INFINITY, theta.clone());
    for flat in 0..total {
        let mut rest = flat;
        for t in theta.iter_mut() {
            *t = grid[rest % grid_points_per_dim];
            rest /= grid_points_per_dim;
        }
        let j = obj.value(&theta, &mut counter)?;
        if j < best.0 {
            best = (j, theta.clone());
        }
    }
    Ok(RisPhases(best.1))
}

/// `‖Im{(H^RV Φ H^UR + H^UV) s ∘ e^{-j∠b}}‖²₂`.
pub fn signal_domain_objective(
    theta: &RisPhases,
    ch: &ChannelSet,
    s: &[f64],
    b: &[Complex64],
) -> Result<f64> {
    if s.len() != ch.users() || b.len() != ch.cells() {
        return Err(Error::Dimension(format!(
            "s has {} entries for {} users, b has {} entries for {} cells",
            s.len(),
            ch.users(),
            b.len(),
            ch.cells()
        )));
    }
    let h_eq = effective_channel(ch, theta)?;
    Ok((0..ch.cells())
        .map(|m| {
            let y: Complex64 = (0..ch.users()).map(|k| h_eq[(m, k)] * s[k]).sum();
            let v = y * Complex64::from_polar(1.0, -b[m].arg());
            v.im * v.im
        })
        .sum())
}

/// `χ`: row `m` of the real channel `h_re` rotated by `e^{j∠b_m}`.
pub fn build_chi(h_re: &DMatrix<f64>, b: &[Complex64]) -> Result<ComplexMatrix> {
    if h_re.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "{} rows for an LO of length {}",
            h_re.nrows(),
            b.len()
        )));
    }
    Ok(ComplexMatrix::from_fn(h_re.nrows(), h_re.ncols(), |m, k| {
        Complex64::from_polar(h_re[(m, k)], b[m].arg())
    }))
}

/// Condition number above which a Gram factor is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

pub(crate) fn condition_number(x: &ComplexMatrix) -> f64 {
    if x.is_empty() {
        return 1.0;
    }
    let sv = x.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 { max / min } else { f64::INFINITY }
}

/// Closed-form `Φ = (AᴴA)⁻¹ Aᴴ (χ - C) Bᴴ (BBᴴ)⁻¹`.
///
/// Needs `M >= N` and `K >= N`; the result is neither forced to be diagonal
/// nor unit-modulus.
pub fn recover_phi_from_chi(
    a: &ComplexMatrix,
    b_mat: &ComplexMatrix,
    c: &ComplexMatrix,
    chi: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let (m, n, k) = (a.nrows(), a.ncols(), b_mat.ncols());
    if b_mat.nrows() != n || c.shape() != (m, k) || chi.shape() != (m, k) {
        return Err(Error::Dimension(format!(
            "A {}x{}, B {}x{}, C {}x{}, chi {}x{}",
            m,
            n,
            b_mat.nrows(),
            k,
            c.nrows(),
            c.ncols(),
            chi.nrows(),
            chi.ncols()
        )));
    }
    let gram_a = a.adjoint() * a;
    let gram_b = b_mat * b_mat.adjoint();
    for (factor, gram) in [("AᴴA", &gram_a), ("BBᴴ", &gram_b)] {
        let cond = condition_number(gram);
        if !(cond <= CONDITION_LIMIT) {
            return Err(Error::Singular { factor, condition: cond });
        }
    }
    let inv_a = gram_a
        .try_inverse()
        .ok_or(Error::Singular { factor: "AᴴA", condition: f64::INFINITY })?;
    let inv_b = gram_b
        .try_inverse()
        .ok_or(Error::Singular { factor: "BBᴴ", condition: f64::INFINITY })?;
    Ok(inv_a * a.adjoint() * (chi - c) * b_mat.adjoint() * inv_b)
}
