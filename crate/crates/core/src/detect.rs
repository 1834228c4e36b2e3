//! Magnitude-only front end and detectors.
//!
//! The photodetectors return `z = |H^eq s + b + n|`. With the RIS aligning the
//! effective channel to the LO phase and `|b| ≫ |n|`, `z ≈ |b| + H s + n̂` and
//! the proposed detector solves
//!
//! ```text
//! ŝ = ((H^eq)ᴴ H^eq)⁻¹ (H^eq)ᴴ (z ∘ e^{j∠b} - b)
//! ```
//!
//! then slices the real part. The exhaustive detector searches all `Q^K`
//! candidates against the noiseless magnitudes; the zero-forcing genie sees
//! the complex field `y = H^eq s + b + n` directly.

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{complex_gaussian, ComplexMatrix};
use crate::modem::{Constellation, NoiseSpec};
use crate::ris_opt::{condition_number, CONDITION_LIMIT};
use crate::{Error, Result};

/// Photodetector outputs, one per vapor cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeObservation(Vec<f64>);

impl MagnitudeObservation {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if let Some(i) = z.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Validation(format!(
                "magnitude {i} must be finite and non-negative, got {}",
                z[i]
            )));
        }
        Ok(MagnitudeObservation(z))
    }

    pub fn from_field(y: &[Complex64]) -> Self {
        MagnitudeObservation(y.iter().map(|v| v.norm()).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutput {
    /// Constellation index per user.
    pub indices: Vec<usize>,
    pub symbols: Vec<f64>,
    pub bits: Vec<bool>,
}

impl DetectorOutput {
    fn from_indices(indices: Vec<usize>, c: &Constellation) -> Self {
        DetectorOutput {
            symbols: indices.iter().map(|&i| c.point(i)).collect(),
            bits: c.indices_to_bits(&indices),
            indices,
        }
    }
}

fn check_dims(h_eq: &ComplexMatrix, users: usize, b: &[Complex64]) -> Result<()> {
    if h_eq.ncols() != users || h_eq.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "H^eq is {}x{}, got {} symbols and an LO of length {}",
            h_eq.nrows(),
            h_eq.ncols(),
            users,
            b.len()
        )));
    }
    Ok(())
}

/// Noisy complex field at the vapor cells, `H^eq s + b + n`.
pub fn received_field<R: Rng + ?Sized>(
    h_eq: &ComplexMatrix,
    s: &[f64],
    b: &[Complex64],
    noise: NoiseSpec,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    check_dims(h_eq, s.len(), b)?;
    let mut y = noiseless_field(h_eq, s, b);
    if noise.sigma2 > 0.0 {
        for v in y.iter_mut() {
            *v += complex_gaussian(rng, noise.sigma2);
        }
    }
    Ok(y)
}

fn noiseless_field(h_eq: &ComplexMatrix, s: &[f64], b: &[Complex64]) -> Vec<Complex64> {
    (0..h_eq.nrows())
        .map(|m| {
            let mut acc = b[m];
            for (k, &sk) in s.iter().enumerate() {
                acc += h_eq[(m, k)] * sk;
            }
            acc
        })
        .collect()
}

/// `z = |H^eq s + b + n|`.
pub fn front_end<R: Rng + ?Sized>(
    h_eq: &ComplexMatrix,
    s: &[f64],
    b: &[Complex64],
    noise: NoiseSpec,
    rng: &mut R,
) -> Result<MagnitudeObservation> {
    Ok(MagnitudeObservation::from_field(&received_field(h_eq, s, b, noise, rng)?))
}

/// Left pseudo-inverse `(HᴴH)⁻¹Hᴴ` of a tall, full-column-rank channel.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pinv: ComplexMatrix,
}

impl LeastSquares {
    pub fn new(h_eq: &ComplexMatrix) -> Result<Self> {
        let (m, k) = h_eq.shape();
        if k > m {
            return Err(Error::Dimension(format!(
                "{k} users exceed {m} vapor cells; least squares is underdetermined"
            )));
        }
        let gram = h_eq.adjoint() * h_eq;
        let cond = condition_number(&gram);
        if !(cond <= CONDITION_LIMIT) {
            return Err(Error::Singular { factor: "(H^eq)ᴴH^eq", condition: cond });
        }
        let chol = Cholesky::new(gram).ok_or(Error::Singular {
            factor: "(H^eq)ᴴH^eq",
            condition: cond,
        })?;
        Ok(LeastSquares { pinv: chol.solve(&h_eq.adjoint()) })
    }

    pub fn pinv(&self) -> &ComplexMatrix {
        &self.pinv
    }

    pub fn apply(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let (k, m) = self.pinv.shape();
        (0..k)
            .map(|i| (0..m).map(|j| self.pinv[(i, j)] * rhs[j]).sum())
            .collect()
    }
}

fn slice_real(estimate: &[Complex64], c: &Constellation) -> DetectorOutput {
    DetectorOutput::from_indices(estimate.iter().map(|v| c.slice(v.re)).collect(), c)
}

/// Least-squares detector on LO-phase-restored magnitudes.
#[derive(Debug, Clone)]
pub struct ProposedDetector {
    ls: LeastSquares,
    lo: Vec<Complex64>,
    lo_phase: Vec<Complex64>,
    constellation: Constellation,
}

impl ProposedDetector {
    pub fn new(h_eq: &ComplexMatrix, b: &[Complex64], c: &Constellation) -> Result<Self> {
        check_dims(h_eq, h_eq.ncols(), b)?;
        Ok(ProposedDetector {
            ls: LeastSquares::new(h_eq)?,
            lo: b.to_vec(),
            lo_phase: b.iter().map(|v| Complex64::from_polar(1.0, v.arg())).collect(),
            constellation: c.clone(),
        })
    }

    /// LS estimate before slicing.
    pub fn estimate(&self, z: &MagnitudeObservation) -> Result<Vec<Complex64>> {
        if z.len() != self.lo.len() {
            return Err(Error::Dimension(format!(
                "{} magnitudes for {} cells",
                z.len(),
                self.lo.len()
            )));
        }
        let rhs: Vec<Complex64> = z
            .as_slice()
            .iter()
            .zip(&self.lo_phase)
            .zip(&self.lo)
            .map(|((&zm, &ph), &bm)| ph * zm - bm)
            .collect();
        Ok(self.ls.apply(&rhs))
    }

    pub fn detect(&self, z: &MagnitudeObservation) -> Result<DetectorOutput> {
        Ok(slice_real(&self.estimate(z)?, &self.constellation))
    }
}

pub fn detect_proposed(
    z: &MagnitudeObservation,
    h_eq: &ComplexMatrix,
    b: &[Complex64],
    c: &Constellation,
) -> Result<DetectorOutput> {
    ProposedDetector::new(h_eq, b, c)?.detect(z)
}

/// Zero forcing on the complex field, i.e. with the phase of `z` known.
#[derive(Debug, Clone)]
pub struct ZfGenieDetector {
    ls: LeastSquares,
    lo: Vec<Complex64>,
    constellation: Constellation,
}

impl ZfGenieDetector {
    pub fn new(h_eq: &ComplexMatrix, b: &[Complex64], c: &Constellation) -> Result<Self> {
        check_dims(h_eq, h_eq.ncols(), b)?;
        Ok(ZfGenieDetector {
            ls: LeastSquares::new(h_eq)?,
            lo: b.to_vec(),
            constellation: c.clone(),
        })
    }

    pub fn estimate(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.lo.len() {
            return Err(Error::Dimension(format!(
                "{} field samples for {} cells",
                y.len(),
                self.lo.len()
            )));
        }
        let rhs: Vec<Complex64> = y.iter().zip(&self.lo).map(|(a, b)| a - b).collect();
        Ok(self.ls.apply(&rhs))
    }

    pub fn detect(&self, y: &[Complex64]) -> Result<DetectorOutput> {
        Ok(slice_real(&self.estimate(y)?, &self.constellation))
    }
}

pub fn detect_zf_known_phase(
    y: &[Complex64],
    h_eq: &ComplexMatrix,
    b: &[Complex64],
    c: &Constellation,
) -> Result<DetectorOutput> {
    ZfGenieDetector::new(h_eq, b, c)?.detect(y)
}

/// Default cap on `Q^K` for the exhaustive search.
pub const DEFAULT_EXHAUSTIVE_BUDGET: u64 = 1 << 20;

// Candidate tables up to this many reals are precomputed.
const TABLE_LIMIT: usize = 1 << 24;

/// `Q^K` as a float, for budget checks and diagnostics.
pub fn exhaustive_cost(order: usize, users: usize) -> f64 {
    (order as f64).powi(users as i32)
}

/// Joint search minimizing `‖z - |H^eq s + b|‖²` over `constellation^K`.
///
/// Candidates are enumerated lexicographically by level index with user 0
/// most significant; the first minimum wins.
#[derive(Debug, Clone)]
pub struct ExhaustiveDetector {
    h_eq: ComplexMatrix,
    lo: Vec<Complex64>,
    constellation: Constellation,
    candidates: usize,
    // Row-major (candidate, cell) noiseless magnitudes, when small enough.
    table: Option<Vec<f64>>,
}

impl ExhaustiveDetector {
    pub fn new(
        h_eq: &ComplexMatrix,
        b: &[Complex64],
        c: &Constellation,
        budget: u64,
    ) -> Result<Self> {
        check_dims(h_eq, h_eq.ncols(), b)?;
        let cost = exhaustive_cost(c.order(), h_eq.ncols());
        if cost > budget as f64 {
            return Err(Error::Budget {
                what: "exhaustive detection",
                cost,
                budget: budget as f64,
            });
        }
        let candidates = cost as usize;
        let mut det = ExhaustiveDetector {
            h_eq: h_eq.clone(),
            lo: b.to_vec(),
            constellation: c.clone(),
            candidates,
            table: None,
        };
        if candidates * b.len() <= TABLE_LIMIT {
            let mut table = Vec::with_capacity(candidates * b.len());
            let mut s = vec![0.0; h_eq.ncols()];
            for cand in 0..candidates {
                det.fill_candidate(cand, &mut s);
                table.extend(noiseless_field(h_eq, &s, b).iter().map(|v| v.norm()));
            }
            det.table = Some(table);
        }
        Ok(det)
    }

    fn fill_candidate(&self, mut cand: usize, s: &mut [f64]) {
        let q = self.constellation.order();
        for v in s.iter_mut().rev() {
            *v = self.constellation.point(cand % q);
            cand /= q;
        }
    }

    fn candidate_indices(&self, mut cand: usize) -> Vec<usize> {
        let q = self.constellation.order();
        let mut idx = vec![0; self.h_eq.ncols()];
        for v in idx.iter_mut().rev() {
            *v = cand % q;
            cand /= q;
        }
        idx
    }

    pub fn detect(&self, z: &MagnitudeObservation) -> Result<DetectorOutput> {
        let cells = self.lo.len();
        if z.len() != cells {
            return Err(Error::Dimension(format!("{} magnitudes for {cells} cells", z.len())));
        }
        let z = z.as_slice();
        let mut best = (f64::INFINITY, 0usize);
        match &self.table {
            Some(table) => {
                for (cand, row) in table.chunks_exact(cells).enumerate() {
                    let d: f64 = row.iter().zip(z).map(|(a, b)| (b - a) * (b - a)).sum();
                    if d < best.0 {
                        best = (d, cand);
                    }
                }
            }
            None => {
                let mut s = vec![0.0; self.h_eq.ncols()];
                for cand in 0..self.candidates {
                    self.fill_candidate(cand, &mut s);
                    let d: f64 = noiseless_field(&self.h_eq, &s, &self.lo)
                        .iter()
                        .zip(z)
                        .map(|(a, b)| (b - a.norm()).powi(2))
                        .sum();
                    if d < best.0 {
                        best = (d, cand);
                    }
                }
            }
        }
        Ok(DetectorOutput::from_indices(self.candidate_indices(best.1), &self.constellation))
    }
}

pub fn detect_exhaustive(
    z: &MagnitudeObservation,
    h_eq: &ComplexMatrix,
    b: &[Complex64],
    c: &Constellation,
    budget: u64,
) -> Result<DetectorOutput> {
    ExhaustiveDetector::new(h_eq, b, c, budget)?.detect(z)
}

/// Real channel as a complex matrix.
pub fn real_to_complex(h: &DMatrix<f64>) -> ComplexMatrix {
    h.map(|x| Complex64::new(x, 0.0))
}
