//! Frequency-domain farm response and the power pipeline: transfer matrix,
//! motions, regular-wave power, sea-state power, climate-averaged power, and
//! power per unit device volume.

use crate::error::{Error, Result};
use crate::hydro::WecGeometry;
use crate::waves::{jonswap_spectrum, FrequencyGrid, WaveClimate};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Per-device power take-off parameters; diagonal matrices are formed on
/// demand. Damping must be non-negative elementwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtoParams {
    /// Spring stiffness per WEC (N/m); reactive control allows negatives.
    pub stiffness: Vec<f64>,
    /// Damping per WEC (N s/m), >= 0.
    pub damping: Vec<f64>,
}

impl PtoParams {
    pub fn new(stiffness: Vec<f64>, damping: Vec<f64>) -> Result<Self> {
        if stiffness.len() != damping.len() {
            return Err(Error::Domain("PTO stiffness/damping length mismatch".into()));
        }
        if damping.iter().any(|&b| b < 0.0) {
            return Err(Error::Domain("PTO damping must be non-negative".into()));
        }
        Ok(Self { stiffness, damping })
    }

    pub fn len(&self) -> usize {
        self.stiffness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stiffness.is_empty()
    }
}

/// A complete farm design: uniform plant geometry, per-device control, and
/// device center coordinates with body 1 pinned at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmDesign {
    pub geom: WecGeometry,
    pub pto: PtoParams,
    /// (x, y) per device, meters; positions[0] must be the origin.
    pub positions: Vec<[f64; 2]>,
}

impl FarmDesign {
    pub fn new(geom: WecGeometry, pto: PtoParams, positions: Vec<[f64; 2]>) -> Result<Self> {
        if positions.is_empty() || pto.len() != positions.len() {
            return Err(Error::Domain(format!(
                "farm needs matching device counts: {} PTO entries, {} positions",
                pto.len(),
                positions.len()
            )));
        }
        if positions[0] != [0.0, 0.0] {
            return Err(Error::Domain("body 1 must sit at the origin".into()));
        }
        Ok(Self {
            geom,
            pto,
            positions,
        })
    }

    pub fn n_wec(&self) -> usize {
        self.positions.len()
    }
}

/// Hydrostatic restoring coefficient G = rho g pi R^2 (N/m).
pub fn hydrostatic_stiffness(r: f64, rho: f64, g: f64) -> f64 {
    rho * g * std::f64::consts::PI * r * r
}

/// Displaced mass at floating equilibrium, rho pi R^2 D (kg).
pub fn displaced_mass(r: f64, d: f64, rho: f64) -> f64 {
    rho * std::f64::consts::PI * r * r * d
}

/// Mass and hydrostatic stiffness for a geometry.
pub fn hydrostatics(geom: &WecGeometry, rho: f64, g: f64) -> (f64, f64) {
    (
        displaced_mass(geom.r, geom.d, rho),
        hydrostatic_stiffness(geom.r, rho, g),
    )
}

/// Per-frequency farm-level coefficient matrices and excitation vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FarmMatrices {
    pub grid: FrequencyGrid,
    /// A(omega), one N x N matrix per frequency.
    pub added_mass: Vec<DMatrix<f64>>,
    /// B(omega), one N x N matrix per frequency.
    pub damping: Vec<DMatrix<f64>>,
    /// F_e(omega), one complex N-vector per frequency.
    pub excitation: Vec<DVector<Complex64>>,
}

impl FarmMatrices {
    pub fn n_wec(&self) -> usize {
        self.added_mass.first().map_or(0, |m| m.nrows())
    }
}

/// Condition-number cutoff beyond which the system counts as singular.
pub const SINGULARITY_COND_LIMIT: f64 = 1e12;

fn norm1_complex(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Transfer matrix H(omega) = [(-omega^2 (M + A) + G I + K_pto)
/// + i omega (B + B_pto)]^(-1), mapping excitation to displacement.
pub fn transfer_matrix(
    omega: f64,
    mass: f64,
    added_mass: &DMatrix<f64>,
    damping: &DMatrix<f64>,
    g_stiffness: f64,
    pto: &PtoParams,
) -> Result<DMatrix<Complex64>> {
    let n = added_mass.nrows();
    if damping.nrows() != n || pto.len() != n {
        return Err(Error::Domain("transfer_matrix dimension mismatch".into()));
    }
    let mut denom = DMatrix::<Complex64>::zeros(n, n);
    // unsigned-part magnitudes, so exact cancellations still register as
    // ill-conditioned (a resonant row with zero damping must not pass)
    let mut magnitude = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut re = -omega * omega * added_mass[(i, j)];
            let mut im = omega * damping[(i, j)];
            let mut mag = re.abs() + im.abs();
            if i == j {
                let inertial = -omega * omega * mass;
                re += inertial + g_stiffness + pto.stiffness[i];
                im += omega * pto.damping[i];
                mag += inertial.abs() + g_stiffness.abs() + pto.stiffness[i].abs()
                    + omega * pto.damping[i];
            }
            denom[(i, j)] = Complex64::new(re, im);
            magnitude[(i, j)] = mag;
        }
    }
    let inv = denom.clone().lu().try_inverse().ok_or(Error::Singular {
        omega,
        cond: f64::INFINITY,
    })?;
    let scale = (0..n)
        .map(|j| magnitude.column(j).sum())
        .fold(0.0, f64::max);
    let cond = scale * norm1_complex(&inv);
    if !cond.is_finite() || cond > SINGULARITY_COND_LIMIT {
        return Err(Error::Singular { omega, cond });
    }
    Ok(inv)
}

/// Displacement, velocity, and acceleration complex amplitudes.
pub fn response(
    h: &DMatrix<Complex64>,
    fe: &DVector<Complex64>,
    omega: f64,
) -> (DVector<Complex64>, DVector<Complex64>, DVector<Complex64>) {
    let xi = h * fe;
    let vel = &xi * Complex64::new(0.0, omega);
    let acc = &xi * Complex64::new(-omega * omega, 0.0);
    (xi, vel, acc)
}

/// Time-averaged absorbed mechanical power at one regular frequency:
/// (1/2) omega^2 xi^H B_pto xi, real and non-negative for B_pto >= 0.
pub fn power_regular(omega: f64, xi: &DVector<Complex64>, pto_damping: &[f64]) -> f64 {
    0.5 * omega
        * omega
        * xi.iter()
            .zip(pto_damping)
            .map(|(x, b)| b * x.norm_sqr())
            .sum::<f64>()
}

/// Discrete spectral sum p_i = sum_k 2 d_omega S(omega_k) p_m(omega_k).
pub fn spectral_power_sum(spectrum: &[f64], p_m: &[f64], d_omega: f64) -> f64 {
    spectrum
        .iter()
        .zip(p_m)
        .map(|(s, p)| 2.0 * d_omega * s * p)
        .sum()
}

/// Sea-state power from per-frequency regular-wave powers on an even grid.
pub fn power_sea_state(hs: f64, tp: f64, grid: &FrequencyGrid, p_m: &[f64]) -> Result<f64> {
    if p_m.len() != grid.len() {
        return Err(Error::Domain("p_m length does not match grid".into()));
    }
    let spectrum: Vec<f64> = grid
        .omegas()
        .iter()
        .map(|&w| jonswap_spectrum(hs, tp, w))
        .collect::<Result<_>>()?;
    Ok(spectral_power_sum(&spectrum, p_m, grid.spacing()))
}

/// Power conversion chain, operational availability, and transmission
/// efficiencies applied to the climate average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Efficiencies {
    pub pcc: f64,
    pub oa: f64,
    pub transmission: f64,
}

impl Default for Efficiencies {
    fn default() -> Self {
        Self {
            pcc: 0.8,
            oa: 0.95,
            transmission: 0.98,
        }
    }
}

impl Efficiencies {
    pub fn product(&self) -> f64 {
        self.pcc * self.oa * self.transmission
    }
}

/// How per-year expectations combine into the climate average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YearAggregation {
    /// Divide by the number of years: a per-year expectation.
    Mean,
    /// Bare sum over years; scales with the farm lifetime.
    Sum,
}

impl Default for YearAggregation {
    fn default() -> Self {
        YearAggregation::Mean
    }
}

/// Climate-weighted average power from per-node sea-state powers.
///
/// p_a = eta_pcc eta_oa eta_t x (aggregate over years of the
/// quadrature-weighted sum of p_i * p_r).
pub fn average_power(
    climate: &WaveClimate,
    p_i: &[Vec<f64>],
    eff: &Efficiencies,
    agg: YearAggregation,
) -> Result<f64> {
    let n = climate.n_gq();
    if p_i.len() != n || p_i.iter().any(|row| row.len() != n) {
        return Err(Error::Domain(format!(
            "p_i node matrix is not {n} x {n} as the climate requires"
        )));
    }
    let mut total = 0.0;
    for y in 0..climate.n_yr {
        let mut year_acc = 0.0;
        for (i, wi) in climate.hs_weights.iter().enumerate() {
            for (j, wj) in climate.tp_weights.iter().enumerate() {
                year_acc += wi * wj * climate.prob[y][i][j] * p_i[i][j];
            }
        }
        total += year_acc;
    }
    if matches!(agg, YearAggregation::Mean) {
        total /= climate.n_yr as f64;
    }
    Ok(eff.product() * total)
}

/// Average power per unit submerged device volume (W/m^3).
pub fn power_per_volume(p_a: f64, geom: &WecGeometry) -> f64 {
    p_a / (std::f64::consts::PI * geom.r * geom.r * geom.d)
}

/// Full power pipeline result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    /// Regular-wave farm power per grid frequency (W per unit amplitude^2).
    pub p_m: Vec<f64>,
    /// Sea-state power at each (Hs, Tp) quadrature node (W).
    pub p_i: Vec<Vec<f64>>,
    /// Climate-averaged power (W).
    pub p_a: f64,
    /// Average power per unit device volume (W/m^3).
    pub p_v: f64,
}

/// Evaluate the complete pipeline for assembled farm matrices.
pub fn farm_power(
    matrices: &FarmMatrices,
    design: &FarmDesign,
    climate: &WaveClimate,
    rho: f64,
    g: f64,
    eff: &Efficiencies,
    agg: YearAggregation,
) -> Result<PowerResult> {
    let (mass, g_stiff) = hydrostatics(&design.geom, rho, g);
    let n_w = matrices.grid.len();
    let mut p_m = Vec::with_capacity(n_w);
    for (idx, &omega) in matrices.grid.omegas().iter().enumerate() {
        let h = transfer_matrix(
            omega,
            mass,
            &matrices.added_mass[idx],
            &matrices.damping[idx],
            g_stiff,
            &design.pto,
        )?;
        let (xi, _, _) = response(&h, &matrices.excitation[idx], omega);
        p_m.push(power_regular(omega, &xi, &design.pto.damping));
    }
    let n = climate.n_gq();
    let mut p_i = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            p_i[i][j] = power_sea_state(
                climate.hs_nodes[i],
                climate.tp_nodes[j],
                &matrices.grid,
                &p_m,
            )?;
        }
    }
    let p_a = average_power(climate, &p_i, eff, agg)?;
    Ok(PowerResult {
        p_m,
        p_i,
        p_a,
        p_v: power_per_volume(p_a, &design.geom),
    })
}
