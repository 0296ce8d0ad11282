//! Seismic hazard: earthquake recurrence, ground-motion prediction, and
//! spatially correlated PGA field sampling.
//!
//! Ground motion follows the BSSA14 prediction equation at the PGA period,
//! with the magnitude-scaling, distance-attenuation, site, and
//! aleatory-uncertainty functions evaluated from an embedded coefficient
//! table. Residuals at nearby sites are correlated through an exponential
//! decay in separation distance with a magnitude-dependent correlation
//! length capped at a configurable ceiling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{cholesky_with_jitter, CholeskyFactor};
use crate::model::ComponentId;

#[derive(Debug, Error, PartialEq)]
pub enum HazardError {
    #[error("magnitude grid produced no bins")]
    EmptyGrid,
    #[error("fault endpoints coincide at ({0}, {1})")]
    DegenerateFault(f64, f64),
    #[error("residual covariance is not factorizable even after jitter (n = {n})")]
    CovarianceNotFactorizable { n: usize },
    #[error("no hazard sites supplied")]
    NoSites,
}

/// Style-of-faulting flags for the GMPE magnitude scaling term. Exactly one
/// is active per scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultMechanism {
    #[serde(rename = "U")]
    Unspecified,
    #[serde(rename = "SS")]
    StrikeSlip,
    #[serde(rename = "NS")]
    NormalSlip,
    #[serde(rename = "RS")]
    ReverseSlip,
}

/// BSSA14 coefficients at the PGA period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmpeCoefficients {
    // magnitude scaling
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub e5: f64,
    pub e6: f64,
    pub mh: f64,
    // distance scaling
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub mref: f64,
    pub rref: f64,
    pub h: f64,
    // site term
    pub dc3: f64,
    pub c_site: f64,
    pub vc: f64,
    pub vref: f64,
    pub f1: f64,
    pub f3: f64,
    pub f4: f64,
    pub f5: f64,
    // aleatory uncertainty
    pub r1: f64,
    pub r2: f64,
    pub dphi_r: f64,
    pub dphi_v: f64,
    pub v1: f64,
    pub v2: f64,
    pub phi: f64,
    pub tau: f64,
}

impl Default for GmpeCoefficients {
    fn default() -> Self {
        GmpeCoefficients {
            e0: 0.4473,
            e1: 0.4856,
            e2: 0.2459,
            e3: 0.4539,
            e4: 1.431,
            e5: 0.05053,
            e6: -0.1662,
            mh: 5.5,
            c1: -1.134,
            c2: 0.1917,
            c3: -0.00809,
            mref: 4.5,
            rref: 1.0,
            h: 4.5,
            dc3: 0.00286,
            c_site: -0.5150,
            vc: 925.0,
            vref: 760.0,
            f1: 0.0,
            f3: 0.1,
            f4: -0.1500,
            f5: -0.00701,
            r1: 110.0,
            r2: 270.0,
            dphi_r: 0.100,
            dphi_v: 0.084,
            v1: 225.0,
            v2: 300.0,
            phi: 0.495,
            tau: 0.348,
        }
    }
}

impl GmpeCoefficients {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.h > 0.0) {
            return Err(format!("gmpe h must be positive (got {})", self.h));
        }
        if !(self.rref > 0.0) {
            return Err(format!("gmpe rref must be positive (got {})", self.rref));
        }
        if !(self.vref > 0.0) {
            return Err(format!("gmpe vref must be positive (got {})", self.vref));
        }
        if !(self.r1 < self.r2) {
            return Err(format!("gmpe requires r1 < r2 (got {}..{})", self.r1, self.r2));
        }
        if !(self.v1 < self.v2) {
            return Err(format!("gmpe requires v1 < v2 (got {}..{})", self.v1, self.v2));
        }
        if !(self.phi > 0.0) {
            return Err(format!("gmpe phi must be positive (got {})", self.phi));
        }
        if !(self.tau >= 0.0) {
            return Err(format!("gmpe tau must be non-negative (got {})", self.tau));
        }
        Ok(())
    }
}

/// Regional hazard description: fault trace, seismicity, site condition, and
/// the GMPE coefficient set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardConfig {
    pub fault_p1: (f64, f64),
    pub fault_p2: (f64, f64),
    pub gr_a: f64,
    pub gr_b: f64,
    pub magnitudes: MagnitudeGrid,
    pub vs30_mps: f64,
    pub mechanism: FaultMechanism,
    pub correlation_cap_km: f64,
    #[serde(default)]
    pub gmpe: GmpeCoefficients,
}

impl HazardConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.magnitudes.m_min < self.magnitudes.m_max) {
            return Err(format!(
                "magnitude grid requires m_min < m_max (got {}..{})",
                self.magnitudes.m_min, self.magnitudes.m_max
            ));
        }
        if !(self.magnitudes.step > 0.0) {
            return Err(format!("magnitude step must be positive (got {})", self.magnitudes.step));
        }
        if !(self.gr_b > 0.0) {
            return Err(format!("gutenberg-richter b must be positive (got {})", self.gr_b));
        }
        if !(self.vs30_mps > 0.0) {
            return Err(format!("vs30 must be positive (got {})", self.vs30_mps));
        }
        if !(self.correlation_cap_km > 0.0) {
            return Err(format!(
                "correlation cap must be positive (got {})",
                self.correlation_cap_km
            ));
        }
        if self.fault_p1 == self.fault_p2 {
            return Err("fault endpoints must be distinct".to_string());
        }
        self.gmpe.validate()
    }

    pub fn bin_rates(&self) -> Result<Vec<f64>, HazardError> {
        magnitude_bin_rates(&self.magnitudes, self.gr_a, self.gr_b)
    }
}

/// Uniformly spaced magnitude grid, inclusive of both ends when they align.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeGrid {
    pub m_min: f64,
    pub m_max: f64,
    pub step: f64,
}

impl MagnitudeGrid {
    pub fn magnitudes(&self) -> Vec<f64> {
        if !(self.step > 0.0) || self.m_max < self.m_min {
            return Vec::new();
        }
        let count = ((self.m_max - self.m_min) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.m_min + self.step * i as f64).collect()
    }

    /// Same span at half the step, for discretization-stability checks.
    pub fn refined(&self) -> MagnitudeGrid {
        MagnitudeGrid { m_min: self.m_min, m_max: self.m_max, step: self.step / 2.0 }
    }
}

/// One earthquake source realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeismicScenario {
    pub magnitude: f64,
    pub fault_p1: (f64, f64),
    pub fault_p2: (f64, f64),
    pub seed: u64,
}

/// Realized ground motion at every component site for one scenario sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundMotionField {
    pub site_ids: Vec<ComponentId>,
    /// Mean ln PGA (ln g) per site.
    pub ln_mean: Vec<f64>,
    /// Aleatory standard deviation of ln PGA per site.
    pub sigma: Vec<f64>,
    /// Correlated residual draw per site.
    pub residuals: Vec<f64>,
    /// Realized PGA in g: exp(ln_mean + residual).
    pub pga_g: Vec<f64>,
}

/// Mean annual rate of events with magnitude >= m under the Gutenberg-Richter
/// law: 10^(a - b m).
pub fn gr_annual_rate(m: f64, a: f64, b: f64) -> f64 {
    10f64.powf(a - b * m)
}

/// Annual probability of at least one event with magnitude >= m, assuming
/// Poisson arrivals: 1 - exp(-rate).
pub fn gr_exceedance_prob(m: f64, a: f64, b: f64) -> f64 {
    1.0 - (-gr_annual_rate(m, a, b)).exp()
}

/// Annual occurrence rate per magnitude bin: differences of the annual
/// exceedance probability between consecutive grid points, with an open upper
/// tail on the last bin. The rates telescope to `gr_exceedance_prob(m_min)`.
pub fn magnitude_bin_rates(grid: &MagnitudeGrid, a: f64, b: f64) -> Result<Vec<f64>, HazardError> {
    let ms = grid.magnitudes();
    if ms.is_empty() {
        return Err(HazardError::EmptyGrid);
    }
    let mut rates = Vec::with_capacity(ms.len());
    for (i, &m) in ms.iter().enumerate() {
        let upper = if i + 1 < ms.len() { gr_exceedance_prob(ms[i + 1], a, b) } else { 0.0 };
        rates.push(gr_exceedance_prob(m, a, b) - upper);
    }
    Ok(rates)
}

/// Closest distance (km) from a site to the surface fault trace segment.
pub fn joyner_boore_distance(
    site: (f64, f64),
    fault_p1: (f64, f64),
    fault_p2: (f64, f64),
) -> Result<f64, HazardError> {
    let (dx, dy) = (fault_p2.0 - fault_p1.0, fault_p2.1 - fault_p1.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return Err(HazardError::DegenerateFault(fault_p1.0, fault_p1.1));
    }
    let t = ((site.0 - fault_p1.0) * dx + (site.1 - fault_p1.1) * dy) / len2;
    let t = t.clamp(0.0, 1.0);
    let (cx, cy) = (fault_p1.0 + t * dx, fault_p1.1 + t * dy);
    Ok(((site.0 - cx).powi(2) + (site.1 - cy).powi(2)).sqrt())
}

fn magnitude_scaling(m: f64, mechanism: FaultMechanism, c: &GmpeCoefficients) -> f64 {
    let e_mech = match mechanism {
        FaultMechanism::Unspecified => c.e0,
        FaultMechanism::StrikeSlip => c.e1,
        FaultMechanism::NormalSlip => c.e2,
        FaultMechanism::ReverseSlip => c.e3,
    };
    let dm = m - c.mh;
    if m <= c.mh {
        e_mech + c.e4 * dm + c.e5 * dm * dm
    } else {
        e_mech + c.e6 * dm
    }
}

fn distance_scaling(m: f64, r_jb: f64, c: &GmpeCoefficients) -> f64 {
    let r = (r_jb * r_jb + c.h * c.h).sqrt();
    (c.c1 + c.c2 * (m - c.mref)) * (r / c.rref).ln() + (c.c3 + c.dc3) * (r - c.rref)
}

fn site_term(vs30: f64, pga_rock: f64, c: &GmpeCoefficients) -> f64 {
    // Linear amplification saturates above vc; zero at the reference velocity.
    let ln_f_lin = c.c_site * (vs30.min(c.vc) / c.vref).ln();
    let f2 = c.f4
        * ((c.f5 * (vs30.min(760.0) - 360.0)).exp() - (c.f5 * (760.0 - 360.0)).exp());
    let ln_f_nl = c.f1 + f2 * ((pga_rock + c.f3) / c.f3).ln();
    ln_f_lin + ln_f_nl
}

/// Mean ln PGA (ln g): magnitude scaling + distance attenuation + site term.
/// The nonlinear site term uses the rock-site prediction (vs30 = vref, no
/// residual) as its reference PGA; it vanishes at vs30 = 760 m/s.
pub fn gmpe_ln_mean(
    m: f64,
    r_jb: f64,
    vs30: f64,
    mechanism: FaultMechanism,
    c: &GmpeCoefficients,
) -> f64 {
    let fm = magnitude_scaling(m, mechanism, c);
    let fd = distance_scaling(m, r_jb, c);
    let pga_rock = (fm + fd).exp();
    fm + fd + site_term(vs30, pga_rock, c)
}

/// Total aleatory standard deviation of ln PGA, with the within-event part
/// reduced at long distances and soft sites.
pub fn gmpe_sigma(m: f64, r_jb: f64, vs30: f64, c: &GmpeCoefficients) -> f64 {
    let _ = m; // phi and tau are constant over the modeled magnitude range
    let mut phi = c.phi;
    if r_jb > c.r2 {
        phi -= c.dphi_r;
    } else if r_jb > c.r1 {
        phi -= c.dphi_r * (r_jb / c.r1).ln() / (c.r2 / c.r1).ln();
    }
    if vs30 <= c.v1 {
        phi -= c.dphi_v;
    } else if vs30 <= c.v2 {
        phi -= c.dphi_v * (c.v2 / vs30).ln() / (c.v2 / c.v1).ln();
    }
    (phi * phi + c.tau * c.tau).sqrt()
}

/// Magnitude-dependent correlation length b(M) in km: 5.4 + 4.7 M, capped.
pub fn correlation_length(m: f64, cap_km: f64) -> f64 {
    (5.4 + 4.7 * m).min(cap_km)
}

/// Correlation between ground-motion residuals at separation d_km.
pub fn correlation_coeff(d_km: f64, m: f64, cap_km: f64) -> f64 {
    (-3.0 * d_km / correlation_length(m, cap_km)).exp()
}

/// Per-scenario sampler holding the mean field and the factored residual
/// covariance, so repeated draws cost one matrix-vector product each.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    site_ids: Vec<ComponentId>,
    ln_mean: Vec<f64>,
    sigma: Vec<f64>,
    factor: CholeskyFactor,
}

impl FieldSampler {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        magnitude: f64,
        fault_p1: (f64, f64),
        fault_p2: (f64, f64),
        site_ids: &[ComponentId],
        sites: &[(f64, f64)],
        vs30: f64,
        mechanism: FaultMechanism,
        coeffs: &GmpeCoefficients,
        correlation_cap_km: f64,
    ) -> Result<Self, HazardError> {
        let n = sites.len();
        if n == 0 {
            return Err(HazardError::NoSites);
        }
        assert_eq!(site_ids.len(), n);
        let mut ln_mean = Vec::with_capacity(n);
        let mut sigma = Vec::with_capacity(n);
        for &site in sites {
            let r_jb = joyner_boore_distance(site, fault_p1, fault_p2)?;
            ln_mean.push(gmpe_ln_mean(magnitude, r_jb, vs30, mechanism, coeffs));
            sigma.push(gmpe_sigma(magnitude, r_jb, vs30, coeffs));
        }
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let d = dist(sites[i], sites[j]);
                let rho = correlation_coeff(d, magnitude, correlation_cap_km);
                let v = rho * sigma[i] * sigma[j];
                cov[i * n + j] = v;
                cov[j * n + i] = v;
            }
        }
        let factor = cholesky_with_jitter(&cov, n, 1e-10, 1e-6)
            .map_err(|_| HazardError::CovarianceNotFactorizable { n })?;
        Ok(FieldSampler { site_ids: site_ids.to_vec(), ln_mean, sigma, factor })
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> GroundMotionField {
        let n = self.ln_mean.len();
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let residuals = self.factor.lower_times(&z);
        let pga_g: Vec<f64> =
            self.ln_mean.iter().zip(&residuals).map(|(m, e)| (m + e).exp()).collect();
        GroundMotionField {
            site_ids: self.site_ids.clone(),
            ln_mean: self.ln_mean.clone(),
            sigma: self.sigma.clone(),
            residuals,
            pga_g,
        }
    }
}

/// One-shot correlated PGA field sample for a scenario. Deterministic given
/// the rng state and site ordering.
#[allow(clippy::too_many_arguments)]
pub fn sample_pga_field(
    scenario: &SeismicScenario,
    site_ids: &[ComponentId],
    sites: &[(f64, f64)],
    vs30: f64,
    mechanism: FaultMechanism,
    coeffs: &GmpeCoefficients,
    correlation_cap_km: f64,
    rng: &mut ChaCha8Rng,
) -> Result<GroundMotionField, HazardError> {
    let sampler = FieldSampler::new(
        scenario.magnitude,
        scenario.fault_p1,
        scenario.fault_p2,
        site_ids,
        sites,
        vs30,
        mechanism,
        coeffs,
        correlation_cap_km,
    )?;
    Ok(sampler.draw(rng))
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}
