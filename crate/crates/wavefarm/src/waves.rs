//! Spectral wave modeling: JONSWAP spectrum, dispersion relation, irregular
//! wave synthesis, Gauss-Legendre quadrature, and the probabilistic wave
//! climate built from (Hs, Tp) scatter samples via kernel density estimation.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// A stationary sea state. The wave heading is fixed to zero: the bodies are
/// axisymmetric, so the coordinate system can always be rotated onto the
/// propagation direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeaState {
    /// Significant wave height (m).
    pub hs: f64,
    /// Peak period (s).
    pub tp: f64,
}

impl SeaState {
    pub fn new(hs: f64, tp: f64) -> Result<Self> {
        if !(hs > 0.0) || !(tp > 0.0) {
            return Err(Error::Domain(format!(
                "sea state requires Hs > 0 and Tp > 0, got Hs={hs}, Tp={tp}"
            )));
        }
        Ok(Self { hs, tp })
    }

    /// Peak angular frequency, 2*pi / Tp.
    pub fn omega_p(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.tp
    }
}

/// Strictly increasing grid of radial frequencies (rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
}

impl FrequencyGrid {
    /// `n` evenly spaced frequencies spanning `[lo, hi]`.
    pub fn even(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(lo > 0.0) || !(hi > lo) {
            return Err(Error::Domain(format!(
                "frequency grid requires n >= 2 and 0 < lo < hi, got n={n}, lo={lo}, hi={hi}"
            )));
        }
        let step = (hi - lo) / (n - 1) as f64;
        Ok(Self {
            omegas: (0..n).map(|i| lo + step * i as f64).collect(),
        })
    }

    pub fn from_values(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() || omegas[0] <= 0.0 {
            return Err(Error::Domain("frequency grid must be nonempty and positive".into()));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("frequency grid must be strictly increasing".into()));
        }
        Ok(Self { omegas })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Spacing of the first interval. Grids built by `even` are uniform.
    pub fn spacing(&self) -> f64 {
        self.omegas[1] - self.omegas[0]
    }
}

/// Peak-enhancement factor of the JONSWAP spectrum.
pub fn jonswap_gamma(hs: f64, tp: f64) -> f64 {
    let ratio = tp / hs.sqrt();
    if ratio <= 3.6 {
        5.0
    } else if ratio <= 5.0 {
        (5.75 - 1.15 * ratio).exp()
    } else {
        1.0
    }
}

/// JONSWAP spectral density (m^2 s) at radial frequency `omega`.
pub fn jonswap_spectrum(hs: f64, tp: f64, omega: f64) -> Result<f64> {
    if !(hs > 0.0) || !(tp > 0.0) || !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "jonswap_spectrum requires positive Hs, Tp, omega (got {hs}, {tp}, {omega})"
        )));
    }
    let omega_p = 2.0 * std::f64::consts::PI / tp;
    let gamma = jonswap_gamma(hs, tp);
    let sigma = if omega <= omega_p { 0.07 } else { 0.09 };
    let r = (-(omega / omega_p - 1.0).powi(2) / (2.0 * sigma * sigma)).exp();
    let c = 1.0 - 0.287 * gamma.ln();
    let beta_s = 1.25 * omega_p.powi(4);
    let alpha_s = 0.25 * beta_s * hs * hs * c * gamma.powf(r);
    Ok(alpha_s * omega.powi(-5) * (-beta_s * omega.powi(-4)).exp())
}

/// Wavenumber k solving omega^2 = g k tanh(k h).
///
/// The residual is monotone in k, so a doubling bracket plus bisection is
/// unconditionally convergent; the root always exceeds both the deep-water
/// (omega^2/g) and shallow-water (omega/sqrt(g h)) approximations.
pub fn solve_dispersion(omega: f64, h: f64, g: f64) -> Result<f64> {
    if !(omega > 0.0) || !(h > 0.0) || !(g > 0.0) {
        return Err(Error::Domain(format!(
            "solve_dispersion requires positive omega, h, g (got {omega}, {h}, {g})"
        )));
    }
    let target = omega * omega;
    let resid = |k: f64| g * k * (k * h).tanh() - target;
    let mut lo = (target / g).max(omega / (g * h).sqrt());
    if resid(lo) > 0.0 {
        // floating-point slop right at the asymptote; nudge down
        lo *= 1.0 - 1e-12;
    }
    let mut hi = lo * 2.0;
    let mut guard = 0;
    while resid(hi) < 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::Domain("dispersion bracket failed to close".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if resid(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-16 * hi {
            break;
        }
    }
    let mut k = 0.5 * (lo + hi);
    // Newton polish to push the residual to the tolerance floor
    for _ in 0..4 {
        let th = (k * h).tanh();
        let f = g * k * th - target;
        let df = g * th + g * k * h * (1.0 - th * th);
        k -= f / df;
    }
    debug_assert!((g * k * (k * h).tanh() - target).abs() <= 1e-10 * target);
    Ok(k)
}

/// Gauss-Legendre nodes and weights on `[a, b]`.
///
/// Newton iteration on the Legendre recurrence; exact for polynomials of
/// degree <= 2n - 1.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Domain("gauss_legendre requires n >= 1".into()));
    }
    if !(a < b) {
        return Err(Error::Domain(format!("gauss_legendre requires a < b, got [{a}, {b}]")));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th root of P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) via the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n == 1 {
        // midpoint rule; the recurrence above already lands here, pin it exactly
        nodes[0] = 0.0;
        weights[0] = 2.0;
    }
    // affine map [-1, 1] -> [a, b]
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    for i in 0..n {
        nodes[i] = mid + half * nodes[i];
        weights[i] *= half;
    }
    Ok((nodes, weights))
}

/// An irregular wave realization: superposition of `n_r` harmonics with
/// spectrum-derived amplitudes and seeded uniform phases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveSignal {
    /// Component amplitudes H_i / 2 (m).
    pub half_heights: Vec<f64>,
    /// Wavenumbers k_i (1/m).
    pub wavenumbers: Vec<f64>,
    /// Frequencies omega_i (rad/s).
    pub omegas: Vec<f64>,
    /// Phases in [0, 2*pi).
    pub phases: Vec<f64>,
}

impl WaveSignal {
    /// Discretize the JONSWAP spectrum of `sea` into `n_r` equal-width bins
    /// on `[lo, hi]` and draw one phase per component. Component heights use
    /// the equal-energy rule H_i = 2 sqrt(2 S(omega_i) d_omega).
    pub fn synthesize(
        sea: &SeaState,
        lo: f64,
        hi: f64,
        n_r: usize,
        h: f64,
        g: f64,
        seed: u64,
    ) -> Result<Self> {
        if n_r == 0 {
            return Err(Error::Domain("wave synthesis requires n_r >= 1".into()));
        }
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Domain(format!("invalid synthesis band [{lo}, {hi}]")));
        }
        let d_omega = (hi - lo) / n_r as f64;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut half_heights = Vec::with_capacity(n_r);
        let mut wavenumbers = Vec::with_capacity(n_r);
        let mut omegas = Vec::with_capacity(n_r);
        let mut phases = Vec::with_capacity(n_r);
        for i in 0..n_r {
            let omega = lo + (i as f64 + 0.5) * d_omega;
            let s = jonswap_spectrum(sea.hs, sea.tp, omega)?;
            half_heights.push((2.0 * s * d_omega).sqrt());
            wavenumbers.push(solve_dispersion(omega, h, g)?);
            omegas.push(omega);
            phases.push(rng.gen_range(0.0..std::f64::consts::TAU));
        }
        Ok(Self {
            half_heights,
            wavenumbers,
            omegas,
            phases,
        })
    }

    /// Surface elevation (m) at position `x` and time `t`.
    pub fn elevation(&self, x: f64, t: f64) -> f64 {
        self.half_heights
            .iter()
            .zip(&self.wavenumbers)
            .zip(&self.omegas)
            .zip(&self.phases)
            .map(|(((a, k), w), p)| a * (k * x - w * t + p).cos())
            .sum()
    }
}

/// One (year, Hs, Tp) scatter record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveSample {
    pub year: u32,
    pub hs: f64,
    pub tp: f64,
}

/// Kernel bandwidth selection for the climate density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BandwidthPolicy {
    /// Silverman's rule per dimension: sigma_j * n^(-1/6) for two dimensions.
    Silverman,
    /// Fixed bandwidths (Hs, Tp), both > 0.
    Fixed(f64, f64),
}

/// Rectangular integration box for the (Hs, Tp) quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimateBox {
    pub hs_lo: f64,
    pub hs_hi: f64,
    pub tp_lo: f64,
    pub tp_hi: f64,
}

impl Default for ClimateBox {
    fn default() -> Self {
        Self {
            hs_lo: 0.25,
            hs_hi: 8.0,
            tp_lo: 2.0,
            tp_hi: 20.0,
        }
    }
}

/// Probabilistic wave climate on Gauss-Legendre nodes: one density matrix per
/// year, renormalized so the quadrature-weighted mass is exactly one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveClimate {
    pub format_version: u32,
    pub hs_nodes: Vec<f64>,
    pub tp_nodes: Vec<f64>,
    pub hs_weights: Vec<f64>,
    pub tp_weights: Vec<f64>,
    /// prob[year][i][j]: density at (hs_nodes[i], tp_nodes[j]).
    pub prob: Vec<Vec<Vec<f64>>>,
    pub n_yr: usize,
}

pub const CLIMATE_FORMAT_VERSION: u32 = 1;

impl WaveClimate {
    pub fn n_gq(&self) -> usize {
        self.hs_nodes.len()
    }

    /// Quadrature-weighted probability mass of year `y`.
    pub fn mass(&self, y: usize) -> f64 {
        let mut acc = 0.0;
        for (i, wi) in self.hs_weights.iter().enumerate() {
            for (j, wj) in self.tp_weights.iter().enumerate() {
                acc += wi * wj * self.prob[y][i][j];
            }
        }
        acc
    }
}

/// Gaussian-kernel density of per-year (Hs, Tp) samples evaluated at
/// Gauss-Legendre nodes over `bbox`, renormalized per year.
///
/// Years are numbered 1..=n_yr in the sample set; every year needs at least
/// two samples and nonzero spread in both coordinates.
pub fn estimate_climate(
    samples: &[WaveSample],
    n_gq: usize,
    n_yr: usize,
    bbox: ClimateBox,
    bandwidth: BandwidthPolicy,
) -> Result<WaveClimate> {
    if n_gq == 0 || n_yr == 0 {
        return Err(Error::Domain("estimate_climate requires n_gq >= 1 and n_yr >= 1".into()));
    }
    let (hs_nodes, hs_weights) = gauss_legendre(n_gq, bbox.hs_lo, bbox.hs_hi)?;
    let (tp_nodes, tp_weights) = gauss_legendre(n_gq, bbox.tp_lo, bbox.tp_hi)?;
    let mut prob = Vec::with_capacity(n_yr);
    for year in 1..=n_yr {
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .filter(|s| s.year as usize == year)
            .map(|s| (s.hs, s.tp))
            .collect();
        if pts.len() < 2 {
            return Err(Error::Domain(format!(
                "year {year} has {} samples; at least 2 are required",
                pts.len()
            )));
        }
        let n = pts.len() as f64;
        let (bh, bt) = match bandwidth {
            BandwidthPolicy::Fixed(bh, bt) => {
                if !(bh > 0.0 && bt > 0.0) {
                    return Err(Error::Domain("fixed bandwidths must be positive".into()));
                }
                (bh, bt)
            }
            BandwidthPolicy::Silverman => {
                let mean_h: f64 = pts.iter().map(|p| p.0).sum::<f64>() / n;
                let mean_t: f64 = pts.iter().map(|p| p.1).sum::<f64>() / n;
                let var_h: f64 = pts.iter().map(|p| (p.0 - mean_h).powi(2)).sum::<f64>() / (n - 1.0);
                let var_t: f64 = pts.iter().map(|p| (p.1 - mean_t).powi(2)).sum::<f64>() / (n - 1.0);
                if var_h <= 0.0 || var_t <= 0.0 {
                    return Err(Error::Domain(format!(
                        "year {year} samples are degenerate (zero spread); provide spread in both \
                         Hs and Tp or a fixed bandwidth"
                    )));
                }
                let factor = n.powf(-1.0 / 6.0);
                (var_h.sqrt() * factor, var_t.sqrt() * factor)
            }
        };
        let norm = 1.0 / (n * std::f64::consts::TAU * bh * bt);
        let mut mat = vec![vec![0.0; n_gq]; n_gq];
        for (i, &x) in hs_nodes.iter().enumerate() {
            for (j, &y) in tp_nodes.iter().enumerate() {
                let mut acc = 0.0;
                for &(sh, st) in &pts {
                    let dh = (x - sh) / bh;
                    let dt = (y - st) / bt;
                    acc += (-0.5 * (dh * dh + dt * dt)).exp();
                }
                mat[i][j] = norm * acc;
            }
        }
        // renormalize on the truncated box
        let mut mass = 0.0;
        for (i, wi) in hs_weights.iter().enumerate() {
            for (j, wj) in tp_weights.iter().enumerate() {
                mass += wi * wj * mat[i][j];
            }
        }
        if mass <= 1e-300 {
            return Err(Error::Domain(format!(
                "year {year}: probability mass inside the quadrature box is zero; samples lie \
                 outside [{}, {}] x [{}, {}]",
                bbox.hs_lo, bbox.hs_hi, bbox.tp_lo, bbox.tp_hi
            )));
        }
        for row in &mut mat {
            for v in row.iter_mut() {
                *v /= mass;
            }
        }
        prob.push(mat);
    }
    Ok(WaveClimate {
        format_version: CLIMATE_FORMAT_VERSION,
        hs_nodes,
        tp_nodes,
        hs_weights,
        tp_weights,
        prob,
        n_yr,
    })
}

/// Parse (year, Hs, Tp) scatter records from delimited text. Fields may be
/// separated by commas and/or whitespace; the first line must be a header.
pub fn read_wave_samples(path: &std::path::Path) -> Result<Vec<WaveSample>> {
    let text = std::fs::read_to_string(path)?;
    parse_wave_samples(&text, &path.display().to_string())
}

pub fn parse_wave_samples(text: &str, path: &str) -> Result<Vec<WaveSample>> {
    let mut out = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        if !saw_header {
            if fields.first().map_or(false, |f| f.parse::<f64>().is_ok()) {
                return Err(Error::Parse {
                    path: path.into(),
                    line: idx + 1,
                    msg: "expected header line before data (year, Hs, Tp)".into(),
                });
            }
            saw_header = true;
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: path.into(),
                line: idx + 1,
                msg: format!("expected 3 fields (year, Hs, Tp), got {}", fields.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                path: path.into(),
                line: idx + 1,
                msg: format!("cannot parse {what} from {s:?}"),
            })
        };
        let year = parse(fields[0], "year")? as u32;
        let hs = parse(fields[1], "Hs")?;
        let tp = parse(fields[2], "Tp")?;
        if !(hs > 0.0 && tp > 0.0) {
            return Err(Error::Parse {
                path: path.into(),
                line: idx + 1,
                msg: format!("Hs and Tp must be positive, got {hs}, {tp}"),
            });
        }
        out.push(WaveSample { year, hs, tp });
    }
    if !saw_header {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            msg: "empty file: header line required".into(),
        });
    }
    Ok(out)
}

/// Deterministic synthetic scatter data standing in for a measured wave
/// record: mild year-to-year drift around a peaked (Hs, Tp) cluster.
pub fn synthetic_wave_samples(n_yr: usize, per_year: usize, seed: u64) -> Vec<WaveSample> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_yr * per_year);
    for year in 1..=n_yr {
        let drift = 0.15 * ((year as f64) * 0.7).sin();
        for _ in 0..per_year {
            let u1: f64 = rng.gen();
            let u2: f64 = rng.gen();
            // Box-Muller pair
            let r = (-2.0 * u1.max(1e-12).ln()).sqrt();
            let (z1, z2) = (
                r * (std::f64::consts::TAU * u2).cos(),
                r * (std::f64::consts::TAU * u2).sin(),
            );
            let hs = (1.8 + drift + 0.55 * z1).clamp(0.35, 7.5);
            let tp = (8.5 + 1.2 * z2 + 0.8 * (hs - 1.8)).clamp(2.5, 19.0);
            out.push(WaveSample {
                year: year as u32,
                hs,
                tp,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: f64 = 9.81;

    #[test]
    fn gamma_branches() {
        // Tp/sqrt(Hs) = 10/sqrt(2) ~ 7.07 > 5
        assert_eq!(jonswap_gamma(2.0, 10.0), 1.0);
        // boundary: ratio exactly 3.6
        assert_eq!(jonswap_gamma(1.0, 3.6), 5.0);
        // middle branch
        let want = (5.75 - 1.15 * 4.5f64).exp();
        assert_eq!(jonswap_gamma(1.0, 4.5), want);
    }

    #[test]
    fn spectrum_rejects_nonpositive() {
        assert!(jonswap_spectrum(0.0, 10.0, 1.0).is_err());
        assert!(jonswap_spectrum(2.0, -1.0, 1.0).is_err());
        assert!(jonswap_spectrum(2.0, 10.0, 0.0).is_err());
    }

    /// Adaptive Simpson integration, used as the independent moment oracle.
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let x = a + h * i as f64;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        acc * h / 3.0
    }

    #[test]
    fn zeroth_moment_matches_hs() {
        for &(hs, tp) in &[(2.0, 10.0), (1.0, 4.5), (4.0, 6.0), (3.0, 12.0)] {
            let f = |w: f64| jonswap_spectrum(hs, tp, w).unwrap();
            let m0 = simpson(&f, 0.1, 7.0, 4000);
            let ratio = 16.0 * m0 / (hs * hs);
            assert!(
                (ratio - 1.0).abs() < 0.1,
                "Hs={hs} Tp={tp}: 16 m0/Hs^2 = {ratio}"
            );
        }
    }

    #[test]
    fn spectrum_nonnegative_and_vanishes_at_ends() {
        let s_lo = jonswap_spectrum(2.0, 8.0, 1e-3).unwrap();
        let s_hi = jonswap_spectrum(2.0, 8.0, 1e3).unwrap();
        assert!(s_lo >= 0.0 && s_lo < 1e-12);
        assert!(s_hi >= 0.0 && s_hi < 1e-12);
        for i in 1..200 {
            let w = 0.05 * i as f64;
            assert!(jonswap_spectrum(2.0, 8.0, w).unwrap() >= 0.0);
        }
    }

    #[test]
    fn spectrum_peaks_at_omega_p() {
        for &(hs, tp) in &[(2.0, 10.0), (1.5, 4.0), (1.0, 4.5)] {
            let sea = SeaState::new(hs, tp).unwrap();
            let wp = sea.omega_p();
            let n = 5000;
            let (mut best_w, mut best_s) = (0.0, -1.0);
            let step = 6.9 / n as f64;
            for i in 0..=n {
                let w = 0.1 + step * i as f64;
                let s = jonswap_spectrum(hs, tp, w).unwrap();
                if s > best_s {
                    best_s = s;
                    best_w = w;
                }
            }
            assert!(
                (best_w - wp).abs() <= step + 1e-12,
                "peak at {best_w}, omega_p {wp}"
            );
        }
    }

    #[test]
    fn dispersion_deep_water_limit() {
        let k = solve_dispersion(1.0, 1e6, G).unwrap();
        let k_deep = 1.0 / G;
        assert!((k - k_deep).abs() / k_deep < 1e-6, "k={k}, deep={k_deep}");
    }

    #[test]
    fn dispersion_shallow_water_limit() {
        let k = solve_dispersion(0.05, 1.0, G).unwrap();
        let k_shallow = 0.05 / (G * 1.0f64).sqrt();
        assert!((k - k_shallow).abs() / k_shallow < 1e-3);
    }

    #[test]
    fn dispersion_intermediate_depth() {
        // independent bisection oracle pins the root to 0.0285852586589...
        let k = solve_dispersion(0.5, 50.0, G).unwrap();
        assert!(k > 0.025484 && k < 0.0316);
        assert!((k - 0.0285852586589492523).abs() < 1e-12);
        let resid = (0.25 - G * k * (k * 50.0).tanh()).abs();
        assert!(resid < 1e-10 * 0.25);
    }

    #[test]
    fn dispersion_monotone_in_omega() {
        let mut last = 0.0;
        for i in 1..=50 {
            let w = 0.14 * i as f64;
            let k = solve_dispersion(w, 50.0, G).unwrap();
            assert!(k > last);
            last = k;
        }
    }

    #[test]
    fn gauss_legendre_midpoint() {
        let (n, w) = gauss_legendre(1, -1.0, 1.0).unwrap();
        assert_eq!(n, vec![0.0]);
        assert_eq!(w, vec![2.0]);
    }

    #[test]
    fn gauss_legendre_degree_exactness() {
        // analytic oracle: integral of x^19 over [0, 1] is 1/20
        let (nodes, weights) = gauss_legendre(20, 0.0, 1.0).unwrap();
        let got: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * x.powi(19))
            .sum();
        assert!((got - 0.05).abs() < 1e-13, "got {got}");
    }

    #[test]
    fn gauss_legendre_weight_sum() {
        let (_, weights) = gauss_legendre(7, 2.0, 14.0).unwrap();
        let sum: f64 = weights.iter().sum();
        assert!((sum - 12.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_rejects_zero_points() {
        assert!(gauss_legendre(0, 0.0, 1.0).is_err());
    }

    #[test]
    fn gauss_legendre_matches_reference_five_point() {
        let (nodes, weights) = gauss_legendre(5, -1.0, 1.0).unwrap();
        let ref_nodes = [
            -0.9061798459386640,
            -0.5384693101056831,
            0.0,
            0.5384693101056831,
            0.9061798459386640,
        ];
        let ref_weights = [
            0.2369268850561894,
            0.4786286704993662,
            0.5688888888888890,
            0.4786286704993662,
            0.2369268850561894,
        ];
        for i in 0..5 {
            assert!((nodes[i] - ref_nodes[i]).abs() < 1e-14);
            assert!((weights[i] - ref_weights[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn synthesis_single_harmonic() {
        let sea = SeaState::new(2.0, 8.0).unwrap();
        let sig = WaveSignal::synthesize(&sea, 0.7, 0.9, 1, 50.0, G, 7).unwrap();
        assert_eq!(sig.omegas.len(), 1);
        let (a, k, w, p) = (
            sig.half_heights[0],
            sig.wavenumbers[0],
            sig.omegas[0],
            sig.phases[0],
        );
        for &(x, t) in &[(0.0, 0.0), (3.0, 1.5), (-2.0, 10.0)] {
            let want = a * (k * x - w * t + p).cos();
            assert_eq!(sig.elevation(x, t), want);
        }
    }

    #[test]
    fn synthesis_deterministic_per_seed() {
        let sea = SeaState::new(2.5, 9.0).unwrap();
        let a = WaveSignal::synthesize(&sea, 0.1, 7.0, 200, 50.0, G, 42).unwrap();
        let b = WaveSignal::synthesize(&sea, 0.1, 7.0, 200, 50.0, G, 42).unwrap();
        assert_eq!(a.phases, b.phases);
        assert_eq!(a.elevation(1.0, 2.0), b.elevation(1.0, 2.0));
        let c = WaveSignal::synthesize(&sea, 0.1, 7.0, 200, 50.0, G, 43).unwrap();
        assert_ne!(a.phases, c.phases);
    }

    #[test]
    fn synthesis_variance_matches_moment() {
        let sea = SeaState::new(2.0, 8.0).unwrap();
        let sig = WaveSignal::synthesize(&sea, 0.1, 7.0, 400, 50.0, G, 11).unwrap();
        // time-average of eta^2 equals sum a_i^2/2 for incommensurate omegas;
        // sample a long window
        let n = 200_000;
        let dt = 0.37;
        let mut acc = 0.0;
        for i in 0..n {
            let e = sig.elevation(0.0, dt * i as f64);
            acc += e * e;
        }
        let var = acc / n as f64;
        let f = |w: f64| jonswap_spectrum(2.0, 8.0, w).unwrap();
        let m0 = simpson(&f, 0.1, 7.0, 4000);
        assert!(
            (var - m0).abs() / m0 < 0.05,
            "variance {var} vs m0 {m0}"
        );
    }

    #[test]
    fn climate_concentrates_at_nearest_node() {
        let mut samples = Vec::new();
        for _ in 0..8 {
            samples.push(WaveSample { year: 1, hs: 3.0, tp: 10.0 });
        }
        // tiny fixed bandwidth concentrates all mass near (3, 10)
        let c = estimate_climate(
            &samples,
            8,
            1,
            ClimateBox::default(),
            BandwidthPolicy::Fixed(0.05, 0.05),
        )
        .unwrap();
        assert!((c.mass(0) - 1.0).abs() < 1e-9);
        let (mut bi, mut bj, mut bv) = (0, 0, -1.0);
        for i in 0..8 {
            for j in 0..8 {
                if c.prob[0][i][j] > bv {
                    bv = c.prob[0][i][j];
                    bi = i;
                    bj = j;
                }
            }
        }
        let nearest_hs = (0..8)
            .min_by(|&a, &b| {
                (c.hs_nodes[a] - 3.0)
                    .abs()
                    .partial_cmp(&(c.hs_nodes[b] - 3.0).abs())
                    .unwrap()
            })
            .unwrap();
        let nearest_tp = (0..8)
            .min_by(|&a, &b| {
                (c.tp_nodes[a] - 10.0)
                    .abs()
                    .partial_cmp(&(c.tp_nodes[b] - 10.0).abs())
                    .unwrap()
            })
            .unwrap();
        assert_eq!((bi, bj), (nearest_hs, nearest_tp));
    }

    #[test]
    fn climate_uniform_samples_normalize() {
        // quasi-uniform lattice of samples inside the box
        let mut samples = Vec::new();
        for i in 0..12 {
            for j in 0..12 {
                samples.push(WaveSample {
                    year: 1,
                    hs: 0.5 + 7.0 * (i as f64 + 0.5) / 12.0,
                    tp: 2.5 + 17.0 * (j as f64 + 0.5) / 12.0,
                });
            }
        }
        let c = estimate_climate(&samples, 10, 1, ClimateBox::default(), BandwidthPolicy::Silverman)
            .unwrap();
        assert!((c.mass(0) - 1.0).abs() < 1e-6);
        for i in 0..10 {
            for j in 0..10 {
                assert!(c.prob[0][i][j] >= 0.0);
            }
        }
        // direct KDE evaluation oracle at one node
        let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.hs, s.tp)).collect();
        let n = pts.len() as f64;
        let mean_h: f64 = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_t: f64 = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sd_h =
            (pts.iter().map(|p| (p.0 - mean_h).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let sd_t =
            (pts.iter().map(|p| (p.1 - mean_t).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let bh = sd_h * n.powf(-1.0 / 6.0);
        let bt = sd_t * n.powf(-1.0 / 6.0);
        let (x, y) = (c.hs_nodes[4], c.tp_nodes[4]);
        let mut raw = 0.0;
        for &(sh, st) in &pts {
            raw += (-0.5 * (((x - sh) / bh).powi(2) + ((y - st) / bt).powi(2))).exp();
        }
        raw /= n * std::f64::consts::TAU * bh * bt;
        // same value up to the box renormalization constant
        let scale = c.prob[0][4][4] / raw;
        let (x2, y2) = (c.hs_nodes[7], c.tp_nodes[2]);
        let mut raw2 = 0.0;
        for &(sh, st) in &pts {
            raw2 += (-0.5 * (((x2 - sh) / bh).powi(2) + ((y2 - st) / bt).powi(2))).exp();
        }
        raw2 /= n * std::f64::consts::TAU * bh * bt;
        assert!((c.prob[0][7][2] - scale * raw2).abs() < 1e-9 * scale.max(1.0));
    }

    #[test]
    fn climate_thirty_synthetic_years() {
        let samples = synthetic_wave_samples(30, 24, 5);
        let c = estimate_climate(&samples, 6, 30, ClimateBox::default(), BandwidthPolicy::Silverman)
            .unwrap();
        assert_eq!(c.prob.len(), 30);
        for y in 0..30 {
            assert!((c.mass(y) - 1.0).abs() < 1e-6, "year {y} mass {}", c.mass(y));
        }
    }

    #[test]
    fn climate_errors() {
        // missing year
        let samples = vec![
            WaveSample { year: 1, hs: 2.0, tp: 8.0 },
            WaveSample { year: 1, hs: 2.5, tp: 9.0 },
        ];
        assert!(estimate_climate(&samples, 4, 2, ClimateBox::default(), BandwidthPolicy::Silverman).is_err());
        // degenerate spread
        let samples = vec![
            WaveSample { year: 1, hs: 2.0, tp: 8.0 },
            WaveSample { year: 1, hs: 2.0, tp: 8.0 },
            WaveSample { year: 1, hs: 2.0, tp: 8.0 },
        ];
        let err = estimate_climate(&samples, 4, 1, ClimateBox::default(), BandwidthPolicy::Silverman)
            .unwrap_err();
        assert!(err.to_string().contains("spread"), "{err}");
    }

    #[test]
    fn wave_sample_parsing() {
        let good = "year,hs,tp\n1, 2.0, 8.0\n1 2.5 9.0\n";
        let v = parse_wave_samples(good, "mem").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[1].tp, 9.0);

        let no_header = "1, 2.0, 8.0\n";
        let err = parse_wave_samples(no_header, "mem").unwrap_err();
        assert!(err.to_string().contains("header"));

        let bad_field = "year,hs,tp\n1, x, 8.0\n";
        let err = parse_wave_samples(bad_field, "mem").unwrap_err();
        assert!(err.to_string().contains("mem:2"));
    }
}
