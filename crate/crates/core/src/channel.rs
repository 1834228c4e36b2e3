//! Channel matrices, the local-oscillator vector and the effective channel.
//!
//! The user-RIS link is i.i.d. Rayleigh. The RIS-cell and user-cell links
//! follow the multipath dipole-coupling model: entry `(m, k)` is a sum over
//! `L` paths of `(1/ħ) μᵀε ρ e^{jφ}`, with the polarization `ε` drawn
//! uniformly on the unit circle orthogonal to an incidence axis.
//!
//! With the default [`PathModel`] (`hbar = None`) the `|μ|/ħ` magnitude is
//! replaced by a gain that normalizes the per-entry variance to one.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ris_opt::RisPhases;
use crate::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// The three links of the RIS-assisted receiver.
///
/// * `h_ur`: users to RIS, `N × K`
/// * `h_rv`: RIS to vapor cells, `M × N`
/// * `h_uv`: users to vapor cells, `M × K`
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_ur: ComplexMatrix,
    pub h_rv: ComplexMatrix,
    pub h_uv: ComplexMatrix,
}

impl ChannelSet {
    pub fn new(h_ur: ComplexMatrix, h_rv: ComplexMatrix, h_uv: ComplexMatrix) -> Result<Self> {
        let set = ChannelSet { h_ur, h_rv, h_uv };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n, k) = (self.h_uv.nrows(), self.h_ur.nrows(), self.h_uv.ncols());
        if self.h_rv.nrows() != m || self.h_rv.ncols() != n || self.h_ur.ncols() != k {
            return Err(Error::Dimension(format!(
                "inconsistent channel set: h_ur {}x{}, h_rv {}x{}, h_uv {}x{}",
                self.h_ur.nrows(),
                self.h_ur.ncols(),
                self.h_rv.nrows(),
                self.h_rv.ncols(),
                m,
                k
            )));
        }
        for (name, mat) in [("h_ur", &self.h_ur), ("h_rv", &self.h_rv), ("h_uv", &self.h_uv)] {
            if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Validation(format!("{name} has non-finite entries")));
            }
        }
        Ok(())
    }

    /// Number of vapor cells `M`.
    pub fn cells(&self) -> usize {
        self.h_uv.nrows()
    }

    /// Number of RIS elements `N`.
    pub fn ris_elements(&self) -> usize {
        self.h_ur.nrows()
    }

    /// Number of users `K`.
    pub fn users(&self) -> usize {
        self.h_uv.ncols()
    }

    /// Multiplies row `m` of the cell-side links (`h_rv`, `h_uv`) by
    /// `e^{j phases[m]}`. The effective channel rows rotate the same way for
    /// every RIS configuration.
    pub fn rotate_rows(&self, phases: &[f64]) -> Result<Self> {
        if phases.len() != self.cells() {
            return Err(Error::Dimension(format!(
                "{} row phases for {} cells",
                phases.len(),
                self.cells()
            )));
        }
        let mut out = self.clone();
        for (m, &phase) in phases.iter().enumerate() {
            let rot = Complex64::from_polar(1.0, phase);
            out.h_rv.row_mut(m).iter_mut().for_each(|z| *z *= rot);
            out.h_uv.row_mut(m).iter_mut().for_each(|z| *z *= rot);
        }
        Ok(out)
    }

    /// The channel set seen in the LO reference frame: every cell row is
    /// de-rotated by the phase of its LO entry. A real effective channel in
    /// this frame is exactly a channel whose rows are phase-aligned with `b`.
    pub fn lo_referenced(&self, lo: &[Complex64]) -> Result<Self> {
        let phases: Vec<f64> = lo.iter().map(|b| -b.arg()).collect();
        self.rotate_rows(&phases)
    }
}

/// `H^RV diag(e^{jθ}) H^UR + H^UV`.
pub fn effective_channel(ch: &ChannelSet, theta: &RisPhases) -> Result<ComplexMatrix> {
    if theta.len() != ch.ris_elements() {
        return Err(Error::Dimension(format!(
            "{} phases for {} RIS elements",
            theta.len(),
            ch.ris_elements()
        )));
    }
    let mut scaled = ch.h_rv.clone();
    for (n, phasor) in theta.phasors().into_iter().enumerate() {
        scaled.column_mut(n).iter_mut().for_each(|z| *z *= phasor);
    }
    Ok(scaled * &ch.h_ur + &ch.h_uv)
}

/// `N × K` matrix with i.i.d. `CN(0, 1)` entries.
pub fn gen_user_ris_channel<R: Rng + ?Sized>(
    users: usize,
    ris_elements: usize,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    if users == 0 || ris_elements == 0 {
        return Err(Error::Dimension(format!(
            "user-RIS channel needs K >= 1 and N >= 1, got K={users}, N={ris_elements}"
        )));
    }
    // Column-major fill: user k's channel vector is drawn contiguously.
    Ok(ComplexMatrix::from_fn(ris_elements, users, |_, _| {
        complex_gaussian(rng, 1.0)
    }))
}

/// One draw of `CN(0, variance)`.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(scale * re, scale * im)
}

/// Generative parameters of the multipath dipole-coupling channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathModel {
    /// Number of propagation paths `L`.
    pub paths: usize,
    /// Dipole moment of the RF transition.
    pub dipole: [f64; 3],
    /// Polarizations are drawn on the unit circle orthogonal to this axis.
    pub incidence_axis: [f64; 3],
    /// Path loss is log-uniform on `[path_loss_min, path_loss_max]`.
    pub path_loss_min: f64,
    pub path_loss_max: f64,
    /// Reduced Planck constant for the explicit coupling `(1/ħ) μᵀε`. When
    /// absent, the coupling is normalized to unit per-entry variance.
    pub hbar: Option<f64>,
}

impl Default for PathModel {
    fn default() -> Self {
        PathModel {
            paths: 4,
            dipole: [0.0, 0.0, 1.0],
            incidence_axis: [1.0, 0.0, 0.0],
            path_loss_min: 0.1,
            path_loss_max: 1.0,
            hbar: None,
        }
    }
}

/// Realized per-path quantities for a `rows × cols` channel.
///
/// Path `l` of entry `(r, c)` lives at index `(r * cols + c) * num_paths + l`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalPathParams {
    pub num_paths: usize,
    pub dipole: [f64; 3],
    /// `1/ħ` in the explicit form, the normalizing gain otherwise.
    pub scale: f64,
    pub polarization: Vec<[f64; 3]>,
    pub path_loss: Vec<f64>,
    pub phase: Vec<f64>,
}

impl PathModel {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::Parameter("number of paths L must be at least 1".into()));
        }
        validate_loss_span(self.path_loss_min, self.path_loss_max)?;
        let (_, scale) = coupling(self.dipole, self.incidence_axis, self.hbar, self.paths, self.mean_sq_loss())?;
        if !scale.is_finite() {
            return Err(Error::Parameter("coupling gain is not finite".into()));
        }
        Ok(())
    }

    fn mean_sq_loss(&self) -> f64 {
        mean_sq_log_uniform(self.path_loss_min, self.path_loss_max)
    }

    pub fn draw<R: Rng + ?Sized>(
        &self,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> Result<PhysicalPathParams> {
        self.validate()?;
        let (dipole, scale) =
            coupling(self.dipole, self.incidence_axis, self.hbar, self.paths, self.mean_sq_loss())?;
        let basis = orthonormal_pair(self.incidence_axis)?;
        let count = rows * cols * self.paths;
        let mut polarization = Vec::with_capacity(count);
        let mut path_loss = Vec::with_capacity(count);
        let mut phase = Vec::with_capacity(count);
        for _ in 0..count {
            polarization.push(circle_point(&basis, rng));
            path_loss.push(log_uniform(self.path_loss_min, self.path_loss_max, rng));
            phase.push(rng.random_range(0.0..std::f64::consts::TAU));
        }
        Ok(PhysicalPathParams {
            num_paths: self.paths,
            dipole,
            scale,
            polarization,
            path_loss,
            phase,
        })
    }
}

impl PhysicalPathParams {
    /// Sums the paths of every entry.
    pub fn channel_matrix(&self, rows: usize, cols: usize) -> Result<ComplexMatrix> {
        let l = self.num_paths;
        if l == 0 {
            return Err(Error::Parameter("number of paths L must be at least 1".into()));
        }
        let count = rows * cols * l;
        if self.polarization.len() != count
            || self.path_loss.len() != count
            || self.phase.len() != count
        {
            return Err(Error::Dimension(format!(
                "path arrays must hold {rows}x{cols}x{l} = {count} entries"
            )));
        }
        for (i, eps) in self.polarization.iter().enumerate() {
            check_unit(eps, || format!("path {i}"))?;
        }
        if let Some(i) = self.path_loss.iter().position(|&p| !(p >= 0.0)) {
            return Err(Error::Validation(format!("path {i} has negative path loss")));
        }
        Ok(ComplexMatrix::from_fn(rows, cols, |r, c| {
            let base = (r * cols + c) * l;
            (base..base + l)
                .map(|i| {
                    let amp = self.scale * dot(&self.dipole, &self.polarization[i]) * self.path_loss[i];
                    Complex64::from_polar(amp, self.phase[i])
                })
                .sum()
        }))
    }
}

/// Draws a `rows × cols` channel from the multipath model.
pub fn gen_physical_channel<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    model: &PathModel,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!(
            "physical channel needs positive dimensions, got {rows}x{cols}"
        )));
    }
    model.draw(rows, cols, rng)?.channel_matrix(rows, cols)
}

/// Generative parameters of the local oscillator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoModel {
    /// LO power `P_b`.
    pub power: f64,
    /// Known reference symbol `s_b`.
    pub reference_symbol: f64,
    /// Transition dipole moment `μ_eg`.
    pub dipole: [f64; 3],
    pub incidence_axis: [f64; 3],
    pub path_loss_min: f64,
    pub path_loss_max: f64,
    /// Explicit `1/ħ` coupling when set; otherwise `E|b_m|² = P_b s_b²`.
    pub hbar: Option<f64>,
}

impl Default for LoModel {
    fn default() -> Self {
        LoModel {
            power: 1e12,
            reference_symbol: 1.0,
            dipole: [0.0, 0.0, 1.0],
            incidence_axis: [1.0, 0.0, 0.0],
            path_loss_min: 0.5,
            path_loss_max: 1.0,
            hbar: None,
        }
    }
}

/// Realized LO parameters, one polarization/loss/phase per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LoParams {
    pub power: f64,
    pub reference_symbol: f64,
    pub dipole: [f64; 3],
    pub scale: f64,
    pub polarization: Vec<[f64; 3]>,
    pub path_loss: Vec<f64>,
    pub phase: Vec<f64>,
}

impl LoModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.power >= 0.0) || !self.power.is_finite() {
            return Err(Error::Parameter(format!("LO power must be >= 0, got {}", self.power)));
        }
        validate_loss_span(self.path_loss_min, self.path_loss_max)?;
        self.coupling()?;
        Ok(())
    }

    fn coupling(&self) -> Result<([f64; 3], f64)> {
        let mean_sq_loss = mean_sq_log_uniform(self.path_loss_min, self.path_loss_max);
        coupling(self.dipole, self.incidence_axis, self.hbar, 1, mean_sq_loss)
    }

    pub fn draw<R: Rng + ?Sized>(&self, cells: usize, rng: &mut R) -> Result<LoParams> {
        self.validate()?;
        let (dipole, scale) = self.coupling()?;
        let basis = orthonormal_pair(self.incidence_axis)?;
        let mut polarization = Vec::with_capacity(cells);
        let mut path_loss = Vec::with_capacity(cells);
        let mut phase = Vec::with_capacity(cells);
        for _ in 0..cells {
            polarization.push(circle_point(&basis, rng));
            path_loss.push(log_uniform(self.path_loss_min, self.path_loss_max, rng));
            phase.push(rng.random_range(0.0..std::f64::consts::TAU));
        }
        Ok(LoParams {
            power: self.power,
            reference_symbol: self.reference_symbol,
            dipole,
            scale,
            polarization,
            path_loss,
            phase,
        })
    }
}

impl LoParams {
    /// `b_m = scale · s_b · μᵀε_{b,m} · √P_b · ρ_{b,m} · e^{jφ_{b,m}}`.
    pub fn lo_vector(&self) -> Result<Vec<Complex64>> {
        if !(self.power >= 0.0) {
            return Err(Error::Parameter(format!("LO power must be >= 0, got {}", self.power)));
        }
        let cells = self.polarization.len();
        if self.path_loss.len() != cells || self.phase.len() != cells {
            return Err(Error::Dimension("LO arrays must have one entry per cell".into()));
        }
        let amplitude = self.scale * self.reference_symbol * self.power.sqrt();
        self.polarization
            .iter()
            .zip(&self.path_loss)
            .zip(&self.phase)
            .enumerate()
            .map(|(m, ((eps, &rho), &phi))| {
                check_unit(eps, || format!("LO cell {m}"))?;
                Ok(Complex64::from_polar(amplitude * dot(&self.dipole, eps) * rho, phi))
            })
            .collect()
    }
}

pub fn gen_lo_vector<R: Rng + ?Sized>(
    cells: usize,
    model: &LoModel,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if cells == 0 {
        return Err(Error::Dimension("LO vector needs M >= 1".into()));
    }
    model.draw(cells, rng)?.lo_vector()
}

fn validate_loss_span(min: f64, max: f64) -> Result<()> {
    if !(min > 0.0 && max >= min && max.is_finite()) {
        return Err(Error::Parameter(format!(
            "path loss span must satisfy 0 < min <= max, got [{min}, {max}]"
        )));
    }
    Ok(())
}

/// Returns the dipole actually used and the scalar prefactor.
fn coupling(
    dipole: [f64; 3],
    axis: [f64; 3],
    hbar: Option<f64>,
    paths: usize,
    mean_sq_loss: f64,
) -> Result<([f64; 3], f64)> {
    match hbar {
        Some(h) if h > 0.0 && h.is_finite() => Ok((dipole, 1.0 / h)),
        Some(h) => Err(Error::Parameter(format!("hbar must be positive, got {h}"))),
        None => {
            let norm = dot(&dipole, &dipole).sqrt();
            if !(norm > 0.0) {
                return Err(Error::Parameter("dipole moment must be nonzero".into()));
            }
            let unit = dipole.map(|x| x / norm);
            let axis = normalize(axis)?;
            let along = dot(&unit, &axis);
            // E[(μ̂·ε)²] for ε uniform on the circle orthogonal to the axis.
            let mean_sq_proj = (1.0 - along * along) / 2.0;
            if mean_sq_proj < 1e-12 {
                return Err(Error::Parameter(
                    "dipole is parallel to the incidence axis; coupling vanishes".into(),
                ));
            }
            let variance = paths as f64 * mean_sq_proj * mean_sq_loss;
            Ok((unit, 1.0 / variance.sqrt()))
        }
    }
}

fn mean_sq_log_uniform(min: f64, max: f64) -> f64 {
    if max - min <= 1e-12 * max {
        min * min
    } else {
        (max * max - min * min) / (2.0 * (max / min).ln())
    }
}

fn log_uniform<R: Rng + ?Sized>(min: f64, max: f64, rng: &mut R) -> f64 {
    if max <= min {
        return min;
    }
    rng.random_range(min.ln()..max.ln()).exp()
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: [f64; 3]) -> Result<[f64; 3]> {
    let norm = dot(&v, &v).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Parameter("incidence axis must be a nonzero vector".into()));
    }
    Ok(v.map(|x| x / norm))
}

fn orthonormal_pair(axis: [f64; 3]) -> Result<([f64; 3], [f64; 3])> {
    let a = normalize(axis)?;
    let helper = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let u = normalize(cross(&a, &helper))?;
    let w = cross(&a, &u);
    Ok((u, w))
}

fn circle_point<R: Rng + ?Sized>(basis: &([f64; 3], [f64; 3]), rng: &mut R) -> [f64; 3] {
    let psi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (s, c) = psi.sin_cos();
    let (u, w) = basis;
    [c * u[0] + s * w[0], c * u[1] + s * w[1], c * u[2] + s * w[2]]
}

fn check_unit(eps: &[f64; 3], what: impl FnOnce() -> String) -> Result<()> {
    let norm = dot(eps, eps).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "{}: polarization has norm {norm}, expected 1",
            what()
        )));
    }
    Ok(())
}

/// Contents of a channel file.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFile {
    pub channels: ChannelSet,
    pub lo: Option<Vec<Complex64>>,
}

const FILE_MAGIC: &str = "ris-channel-set 1";

/// Writes a self-describing text file: a magic line, then for each matrix a
/// `matrix <name> <rows> <cols>` header followed by one `re im` line per
/// entry in row-major order, and optionally `vector lo <len>`.
///
/// Values use the shortest representation that parses back to the same
/// `f64`, so a write/read cycle is lossless.
pub fn write_channel_file<W: Write>(
    mut w: W,
    channels: &ChannelSet,
    lo: Option<&[Complex64]>,
) -> std::io::Result<()> {
    writeln!(w, "{FILE_MAGIC}")?;
    for (name, mat) in [("h_ur", &channels.h_ur), ("h_rv", &channels.h_rv), ("h_uv", &channels.h_uv)] {
        writeln!(w, "matrix {name} {} {}", mat.nrows(), mat.ncols())?;
        for r in 0..mat.nrows() {
            for c in 0..mat.ncols() {
                let z = mat[(r, c)];
                writeln!(w, "{} {}", z.re, z.im)?;
            }
        }
    }
    if let Some(lo) = lo {
        writeln!(w, "vector lo {}", lo.len())?;
        for z in lo {
            writeln!(w, "{} {}", z.re, z.im)?;
        }
    }
    Ok(())
}

pub fn read_channel_file<R: BufRead>(r: R) -> Result<ChannelFile> {
    let mut lines = r.lines().enumerate().map(|(i, l)| {
        l.map(|text| (i + 1, text)).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })
    });
    let mut next_line = |expect: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some(res) => res,
            None => Err(Error::Parse {
                line: 0,
                message: format!("unexpected end of file, expected {expect}"),
            }),
        }
    };

    let (line, magic) = next_line("header")?;
    if magic.trim() != FILE_MAGIC {
        return Err(Error::Parse {
            line,
            message: format!("expected `{FILE_MAGIC}`"),
        });
    }

    let read_entries = |count: usize, next_line: &mut dyn FnMut(&str) -> Result<(usize, String)>| {
        (0..count)
            .map(|_| {
                let (line, text) = next_line("an entry")?;
                parse_pair(line, &text)
            })
            .collect::<Result<Vec<Complex64>>>()
    };

    let mut mats = Vec::with_capacity(3);
    for expected in ["h_ur", "h_rv", "h_uv"] {
        let (line, header) = next_line(expected)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let dims = match fields.as_slice() {
            ["matrix", name, rows, cols] if *name == expected => {
                rows.parse::<usize>().ok().zip(cols.parse::<usize>().ok())
            }
            _ => None,
        };
        let (rows, cols) = dims.ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `matrix {expected} <rows> <cols>`"),
        })?;
        let entries = read_entries(rows * cols, &mut next_line)?;
        mats.push(ComplexMatrix::from_row_slice(rows, cols, &entries));
    }

    let lo = match next_line("") {
        Err(_) => None,
        Ok((line, header)) => {
            let fields: Vec<&str> = header.split_whitespace().collect();
            let len = match fields.as_slice() {
                ["vector", "lo", len] => len.parse::<usize>().ok(),
                _ => None,
            }
            .ok_or_else(|| Error::Parse {
                line,
                message: "expected `vector lo <len>`".into(),
            })?;
            Some(read_entries(len, &mut next_line)?)
        }
    };

    let h_uv = mats.pop().unwrap();
    let h_rv = mats.pop().unwrap();
    let h_ur = mats.pop().unwrap();
    let channels = ChannelSet::new(h_ur, h_rv, h_uv)?;
    if let Some(lo) = &lo {
        if lo.len() != channels.cells() {
            return Err(Error::Dimension(format!(
                "LO has {} entries for {} cells",
                lo.len(),
                channels.cells()
            )));
        }
    }
    Ok(ChannelFile { channels, lo })
}

fn parse_pair(line: usize, text: &str) -> Result<Complex64> {
    let mut it = text.split_whitespace().map(str::parse::<f64>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(re)), Some(Ok(im)), None) => Ok(Complex64::new(re, im)),
        _ => Err(Error::Parse {
            line,
            message: format!("expected `<re> <im>`, got `{text}`"),
        }),
    }
}
