//! Detector parameters and the sensitivity formula chain.
//!
//! The chain runs: field-to-power ratio `alpha` (T/W^0.5) and protocol factor
//! `beta` (1/T) give the contrast, the collected PL rate and noise model give
//! the SNR, and inverting SNR = 1 gives the power sensitivity `eta`, in W/Hz
//! for slope detection and W/Hz^0.5 for variance detection.

use serde::{Deserialize, Serialize};

use crate::error::positive;
use crate::{NvError, Result, GAMMA_E};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    /// Contrast linear in the RF field.
    Slope,
    /// Contrast quadratic in the RF field.
    Variance,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 2] = [ProtocolKind::Slope, ProtocolKind::Variance];

    pub fn kappa(self) -> i32 {
        match self {
            ProtocolKind::Slope => 1,
            ProtocolKind::Variance => 2,
        }
    }

    pub fn kappa_f64(self) -> f64 {
        f64::from(self.kappa())
    }

    pub fn eta_unit(self) -> EtaUnit {
        match self {
            ProtocolKind::Slope => EtaUnit::WattPerHz,
            ProtocolKind::Variance => EtaUnit::WattPerRootHz,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Slope => "slope",
            ProtocolKind::Variance => "variance",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub kind: ProtocolKind,
    /// Field-to-contrast ratio, 1/T.
    pub beta: f64,
}

impl Protocol {
    pub fn new(kind: ProtocolKind, beta: f64) -> Result<Self> {
        positive("beta_prot", beta)?;
        Ok(Self { kind, beta })
    }

    pub fn kappa_prot(&self) -> i32 {
        self.kind.kappa()
    }
}

/// Noise exponent. Only PL-dependent (0.5) and PL-independent (0) noise are
/// modelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    PlIndependent,
    PlDependent,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 2] = [NoiseKind::PlDependent, NoiseKind::PlIndependent];

    pub fn kappa(self) -> f64 {
        match self {
            NoiseKind::PlIndependent => 0.0,
            NoiseKind::PlDependent => 0.5,
        }
    }

    pub fn from_kappa(kappa: f64) -> Result<Self> {
        if kappa == 0.0 {
            Ok(NoiseKind::PlIndependent)
        } else if kappa == 0.5 {
            Ok(NoiseKind::PlDependent)
        } else {
            Err(NvError::domain("kappa_noise", kappa, "must be 0 or 0.5"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Noise prefactor; 1 at the photon shot-noise limit.
    pub xi: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, xi: f64) -> Result<Self> {
        if !(xi.is_finite() && xi >= 1.0) {
            return Err(NvError::domain("xi_noise", xi, "must be >= 1"));
        }
        Ok(Self { kind, xi })
    }

    pub fn shot_noise() -> Self {
        Self {
            kind: NoiseKind::PlDependent,
            xi: 1.0,
        }
    }

    pub fn kappa_noise(&self) -> f64 {
        self.kind.kappa()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamGeometry {
    /// Beam along the waveguide; cross-section c1 w x c2 w.
    ParallelCpw,
    /// Beam from the top of the waveguide; footprint c1 w x L with L = w.
    PerpendicularCpw,
    /// Beam along the loop axis; footprint pi r^2.
    LoopAxial,
}

impl BeamGeometry {
    pub fn name(self) -> &'static str {
        match self {
            BeamGeometry::ParallelCpw => "parallel",
            BeamGeometry::PerpendicularCpw => "perpendicular",
            BeamGeometry::LoopAxial => "loop",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optics {
    /// Laser power, W.
    pub p_laser: f64,
    /// NV saturation intensity, W/m^2.
    pub i_sat: f64,
    pub beam: BeamGeometry,
}

impl Optics {
    pub fn new(p_laser: f64, i_sat: f64, beam: BeamGeometry) -> Result<Self> {
        positive("p_laser", p_laser)?;
        positive("i_sat", i_sat)?;
        Ok(Self {
            p_laser,
            i_sat,
            beam,
        })
    }

    /// A I_sat / P_laser. Small values mean the probe volume is saturated.
    pub fn saturation_ratio(&self, beam_area: f64) -> f64 {
        beam_area * self.i_sat / self.p_laser
    }
}

/// Beam cross-section and the path it traverses through the probe volume.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamFootprint {
    /// m^2
    pub area: f64,
    /// m
    pub path_length: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NvEnsemble {
    /// NV density, 1/m^3.
    pub rho_nv: f64,
    /// Collected PL rate per NV at saturation, 1/s. Includes the protocol duty
    /// cycle and collection efficiency.
    pub sigma_nv: f64,
}

impl NvEnsemble {
    pub fn new(rho_nv: f64, sigma_nv: f64) -> Result<Self> {
        positive("rho_nv", rho_nv)?;
        positive("sigma_nv", sigma_nv)?;
        Ok(Self { rho_nv, sigma_nv })
    }

    /// Collected rate per NV from its parts: emission rate at saturation,
    /// laser duty cycle and collection efficiency. Only the product is used
    /// downstream.
    pub fn collected_rate(emission_rate: f64, duty_cycle: f64, collection: f64) -> f64 {
        emission_rate * duty_cycle * collection
    }

    /// Saturated PL density sigma_nv rho_nv, 1/(s m^3).
    pub fn saturated_density(&self) -> f64 {
        self.sigma_nv * self.rho_nv
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Saturated,
    Intermediate,
    Linear,
}

impl Regime {
    /// Saturated below A I_sat / P = 0.1, linear above 10.
    pub fn classify(saturation_ratio: f64) -> Regime {
        if saturation_ratio < 0.1 {
            Regime::Saturated
        } else if saturation_ratio > 10.0 {
            Regime::Linear
        } else {
            Regime::Intermediate
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Saturated => "saturated",
            Regime::Intermediate => "intermediate",
            Regime::Linear => "linear",
        }
    }
}

/// How the PL density responds to the laser.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlLaw {
    /// Full saturation law.
    #[default]
    Saturation,
    /// P_laser -> infinity: rho_PL = sigma rho.
    SaturatedLimit,
    /// Far below saturation: rho_PL = sigma rho P / (A I_sat).
    LinearLimit,
}

/// PL rate per unit volume from the saturation law, 1/(s m^3).
pub fn pl_density(ensemble: &NvEnsemble, optics: &Optics, beam_area: f64) -> Result<f64> {
    pl_density_with(ensemble, optics, beam_area, PlLaw::Saturation)
}

pub fn pl_density_with(
    ensemble: &NvEnsemble,
    optics: &Optics,
    beam_area: f64,
    law: PlLaw,
) -> Result<f64> {
    positive("beam_area", beam_area)?;
    positive("p_laser", optics.p_laser)?;
    positive("i_sat", optics.i_sat)?;
    positive("rho_nv", ensemble.rho_nv)?;
    positive("sigma_nv", ensemble.sigma_nv)?;
    let s = optics.saturation_ratio(beam_area);
    let rho_sat = ensemble.saturated_density();
    Ok(match law {
        PlLaw::Saturation => rho_sat / (1.0 + s),
        PlLaw::SaturatedLimit => rho_sat,
        PlLaw::LinearLimit => rho_sat / s,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EtaUnit {
    #[serde(rename = "W/Hz")]
    WattPerHz,
    #[serde(rename = "W/Hz^0.5")]
    WattPerRootHz,
}

impl EtaUnit {
    pub fn label(self) -> &'static str {
        match self {
            EtaUnit::WattPerHz => "W/Hz",
            EtaUnit::WattPerRootHz => "W/Hz^0.5",
        }
    }
}

/// A power sensitivity together with the quantities that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub eta: f64,
    pub unit: EtaUnit,
    pub kappa_prot: i32,
    pub regime: Option<Regime>,
    /// <alpha^kappa_prot>, (T/W^0.5)^kappa_prot.
    pub avg_alpha_pow: f64,
    /// Probe volume, m^3 (ensemble results only).
    pub volume: Option<f64>,
    /// PL density, 1/(s m^3) (ensemble results only).
    pub rho_pl: Option<f64>,
    /// Total collected PL rate, 1/s.
    pub i_pl: f64,
}

impl SensitivityResult {
    pub fn with_regime(mut self, regime: Regime) -> Self {
        self.regime = Some(regime);
        self
    }
}

/// Single-NV signal-to-noise ratio. A zero RF power gives zero SNR.
pub fn snr_single(
    alpha: f64,
    protocol: &Protocol,
    noise: &NoiseModel,
    i_pl: f64,
    time: f64,
    p_rf: f64,
) -> Result<f64> {
    positive("alpha", alpha)?;
    positive("beta_prot", protocol.beta)?;
    positive("i_pl", i_pl)?;
    positive("time", time)?;
    if !(p_rf.is_finite() && p_rf >= 0.0) {
        return Err(NvError::domain("p_rf", p_rf, "must be finite and non-negative"));
    }
    let kp = protocol.kind.kappa_f64();
    Ok((alpha * protocol.beta).powf(kp) / noise.xi
        * i_pl.powf(1.0 - noise.kappa_noise())
        * time.sqrt()
        * p_rf.powf(kp / 2.0))
}

fn eta_from_parts(xi: f64, alpha_beta_pow: f64, rate_term: f64, kind: ProtocolKind) -> f64 {
    let inner = xi / (alpha_beta_pow * rate_term);
    match kind {
        ProtocolKind::Slope => inner * inner,
        ProtocolKind::Variance => inner,
    }
}

/// Power sensitivity of a single NV with field-to-power ratio `alpha` and
/// collected rate `i_pl`.
pub fn eta_single(
    alpha: f64,
    protocol: &Protocol,
    noise: &NoiseModel,
    i_pl: f64,
) -> Result<SensitivityResult> {
    positive("alpha", alpha)?;
    positive("beta_prot", protocol.beta)?;
    positive("i_pl", i_pl)?;
    let kind = protocol.kind;
    let avg_alpha_pow = alpha.powi(kind.kappa());
    let eta = eta_from_parts(
        noise.xi,
        avg_alpha_pow * protocol.beta.powi(kind.kappa()),
        i_pl.powf(1.0 - noise.kappa_noise()),
        kind,
    );
    Ok(SensitivityResult {
        eta,
        unit: kind.eta_unit(),
        kappa_prot: kind.kappa(),
        regime: None,
        avg_alpha_pow,
        volume: None,
        rho_pl: None,
        i_pl,
    })
}

/// Ensemble power sensitivity for a probe volume with average
/// `<alpha^kappa_prot>` and uniform PL density `rho_pl`.
pub fn eta_ensemble(
    avg_alpha_pow: f64,
    protocol: &Protocol,
    noise: &NoiseModel,
    rho_pl: f64,
    volume: f64,
) -> Result<SensitivityResult> {
    positive("avg_alpha_pow", avg_alpha_pow)?;
    positive("beta_prot", protocol.beta)?;
    positive("rho_pl", rho_pl)?;
    positive("volume", volume)?;
    let kind = protocol.kind;
    let i_pl = rho_pl * volume;
    let eta = eta_from_parts(
        noise.xi,
        avg_alpha_pow * protocol.beta.powi(kind.kappa()),
        i_pl.powf(1.0 - noise.kappa_noise()),
        kind,
    );
    Ok(SensitivityResult {
        eta,
        unit: kind.eta_unit(),
        kappa_prot: kind.kappa(),
        regime: None,
        avg_alpha_pow,
        volume: Some(volume),
        rho_pl: Some(rho_pl),
        i_pl,
    })
}

/// Saturated-regime figure of merit `<alpha^k> V^(1 - kappa_noise)`.
pub fn fom_sat(avg_alpha_pow: f64, volume: f64, kappa_noise: f64) -> f64 {
    avg_alpha_pow * volume.powf(1.0 - kappa_noise)
}

/// Linear-regime figure of merit `<alpha^k> (V/A)^(1 - kappa_noise)`.
pub fn fom_lin(avg_alpha_pow: f64, volume: f64, beam_area: f64, kappa_noise: f64) -> f64 {
    avg_alpha_pow * (volume / beam_area).powf(1.0 - kappa_noise)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FomPoint {
    pub eta: f64,
    pub fom: f64,
    pub regime: Regime,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FomSpread {
    /// max/min of eta * FoM^(2/kappa_prot); 1 when eta is proportional to
    /// FoM^(-2/kappa_prot).
    pub spread: f64,
    pub mixed_regime: bool,
}

/// Checks that eta * FoM^(2/kappa_prot) is constant over a set of points.
pub fn fom_spread(points: &[FomPoint], kappa_prot: i32) -> Result<FomSpread> {
    let first = points.first().ok_or(NvError::EmptySearch)?;
    let exponent = 2.0 / f64::from(kappa_prot);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for p in points {
        positive("eta", p.eta)?;
        positive("fom", p.fom)?;
        let v = p.eta * p.fom.powf(exponent);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(FomSpread {
        spread: if points.len() == 1 { 1.0 } else { hi / lo },
        mixed_regime: points.iter().any(|p| p.regime != first.regime),
    })
}

/// Slope-detection field-to-contrast ratio C_max gamma_e tau, 1/T.
pub fn beta_from_protocol(c_max: f64, tau: f64) -> Result<f64> {
    if !(c_max.is_finite() && (0.0..=1.0).contains(&c_max)) {
        return Err(NvError::domain("c_max", c_max, "must lie in [0, 1]"));
    }
    positive("tau", tau)?;
    Ok(c_max * GAMMA_E * tau)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MagneticUnit {
    #[serde(rename = "T/Hz^0.5")]
    TeslaPerRootHz,
    #[serde(rename = "T^2/Hz^0.5")]
    TeslaSquaredPerRootHz,
}

impl MagneticUnit {
    pub fn label(self) -> &'static str {
        match self {
            MagneticUnit::TeslaPerRootHz => "T/Hz^0.5",
            MagneticUnit::TeslaSquaredPerRootHz => "T^2/Hz^0.5",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagneticSensitivity {
    pub value: f64,
    pub unit: MagneticUnit,
}

/// Converts a power sensitivity into the equivalent field sensitivity at a
/// point with field-to-power ratio `alpha_ref`.
pub fn magnetic_from_power(eta: &SensitivityResult, alpha_ref: f64) -> Result<MagneticSensitivity> {
    positive("eta", eta.eta)?;
    positive("alpha_ref", alpha_ref)?;
    Ok(match eta.kappa_prot {
        1 => MagneticSensitivity {
            value: alpha_ref * eta.eta.sqrt(),
            unit: MagneticUnit::TeslaPerRootHz,
        },
        _ => MagneticSensitivity {
            value: alpha_ref * alpha_ref * eta.eta,
            unit: MagneticUnit::TeslaSquaredPerRootHz,
        },
    })
}

/// Protocol, noise and NV parameters shared by every geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub protocol: Protocol,
    pub noise: NoiseModel,
    pub ensemble: NvEnsemble,
    pub optics: Optics,
}

impl DetectorModel {
    /// Full chain for a probe volume: PL density from the footprint, then the
    /// ensemble sensitivity, tagged with the PL regime.
    pub fn evaluate(
        &self,
        avg_alpha_pow: f64,
        volume: f64,
        footprint: &BeamFootprint,
        law: PlLaw,
    ) -> Result<SensitivityResult> {
        let rho_pl = pl_density_with(&self.ensemble, &self.optics, footprint.area, law)?;
        let regime = Regime::classify(self.optics.saturation_ratio(footprint.area));
        Ok(eta_ensemble(avg_alpha_pow, &self.protocol, &self.noise, rho_pl, volume)?.with_regime(regime))
    }

    pub fn with_protocol(mut self, kind: ProtocolKind) -> Self {
        self.protocol.kind = kind;
        self
    }

    pub fn with_noise(mut self, kind: NoiseKind) -> Self {
        self.noise.kind = kind;
        self
    }

    pub fn with_laser(mut self, p_laser: f64) -> Self {
        self.optics.p_laser = p_laser;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const ALPHA: f64 = 8.886e-3;

    fn slope() -> Protocol {
        Protocol::new(ProtocolKind::Slope, 1e4).unwrap()
    }

    fn variance() -> Protocol {
        Protocol::new(ProtocolKind::Variance, 1e4).unwrap()
    }

    fn ensemble() -> NvEnsemble {
        NvEnsemble::new(8e23, 1e5).unwrap()
    }

    #[test]
    fn kappas() {
        assert_eq!(ProtocolKind::Slope.kappa(), 1);
        assert_eq!(ProtocolKind::Variance.kappa(), 2);
        assert_eq!(NoiseKind::from_kappa(0.5).unwrap(), NoiseKind::PlDependent);
        assert_eq!(NoiseKind::from_kappa(0.0).unwrap(), NoiseKind::PlIndependent);
        assert!(NoiseKind::from_kappa(0.3).is_err());
        assert!(NoiseModel::new(NoiseKind::PlDependent, 0.9).is_err());
        assert!(Protocol::new(ProtocolKind::Slope, 0.0).is_err());
    }

    #[test]
    fn pl_density_limits() {
        let e = ensemble();
        let huge = Optics::new(1e30, 1e9, BeamGeometry::ParallelCpw).unwrap();
        assert_relative_eq!(pl_density(&e, &huge, 1e-10).unwrap(), 8e28, max_relative = 1e-12);

        let half = Optics::new(0.1, 1e9, BeamGeometry::ParallelCpw).unwrap();
        assert_relative_eq!(pl_density(&e, &half, 1e-10).unwrap(), 4e28, max_relative = 1e-12);

        let one_watt = Optics::new(1.0, 1e9, BeamGeometry::ParallelCpw).unwrap();
        assert_relative_eq!(
            pl_density(&e, &one_watt, 1e-10).unwrap(),
            7.2727272727e28,
            max_relative = 1e-9
        );
        assert!(pl_density(&e, &one_watt, 0.0).is_err());
        assert!(pl_density(&e, &one_watt, -1.0).is_err());
    }

    #[test]
    fn snr_examples() {
        let unit = Protocol::new(ProtocolKind::Slope, 1.0).unwrap();
        let noise = NoiseModel::shot_noise();
        assert_eq!(snr_single(1.0, &unit, &noise, 1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(snr_single(1.0, &unit, &noise, 1.0, 1.0, 0.0).unwrap(), 0.0);
        assert!(snr_single(1.0, &unit, &noise, 1.0, 1.0, -1.0).is_err());

        let s1 = snr_single(ALPHA, &slope(), &noise, 1e5, 1.0, 1e-9).unwrap();
        let s2 = snr_single(ALPHA, &slope(), &noise, 1e5, 1.0, 2e-9).unwrap();
        assert_relative_eq!(s2 / s1, 2f64.sqrt(), max_relative = 1e-12);
        let v1 = snr_single(ALPHA, &variance(), &noise, 1e5, 1.0, 1e-9).unwrap();
        let v2 = snr_single(ALPHA, &variance(), &noise, 1e5, 1.0, 2e-9).unwrap();
        assert_relative_eq!(v2 / v1, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn eta_single_examples() {
        let noise = NoiseModel::shot_noise();
        let s = eta_single(ALPHA, &slope(), &noise, 1e5).unwrap();
        // [1 / (8.886e-3 * 1e4 * 1e5^0.5)]^2
        assert_relative_eq!(s.eta, 1.2664e-9, max_relative = 1e-3);
        assert_eq!(s.unit, EtaUnit::WattPerHz);
        let v = eta_single(ALPHA, &variance(), &noise, 1e5).unwrap();
        assert_relative_eq!(v.eta, 4.0047e-7, max_relative = 1e-3);
        assert_eq!(v.unit, EtaUnit::WattPerRootHz);
        assert_relative_eq!(v.eta, s.eta * 1e5f64.sqrt(), max_relative = 1e-12);

        let snr = snr_single(ALPHA, &slope(), &noise, 1e5, 1.0, s.eta).unwrap();
        assert_relative_eq!(snr, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn eta_ensemble_reduces_to_single() {
        let noise = NoiseModel::new(NoiseKind::PlIndependent, 2.0).unwrap();
        for p in [slope(), variance()] {
            let single = eta_single(ALPHA, &p, &noise, 3e5).unwrap();
            let ens = eta_ensemble(ALPHA.powi(p.kappa_prot()), &p, &noise, 3e5 / 2e-15, 2e-15).unwrap();
            assert_relative_eq!(single.eta, ens.eta, max_relative = 1e-12);
        }
        assert!(eta_ensemble(1.0, &slope(), &noise, 1.0, 0.0).is_err());
    }

    #[test]
    fn fom_examples() {
        assert_relative_eq!(fom_sat(2.0, 8.0, 0.5), 5.656854249, max_relative = 1e-9);
        assert_eq!(fom_sat(2.0, 8.0, 0.0), 16.0);
        assert_eq!(fom_sat(2.0, 8.0, 1.0), 2.0);
        assert_relative_eq!(fom_lin(1.0, 1e-13, 1e-10, 0.5), 3.16227766e-2, max_relative = 1e-9);
        assert_relative_eq!(fom_lin(1.0, 1e-13, 1e-10, 0.5), fom_lin(1.0, 7e-13, 7e-10, 0.5), max_relative = 1e-14);
        assert_relative_eq!(fom_lin(3.0, 1e-13, 1e-10, 0.0), 3e-3, max_relative = 1e-12);
    }

    #[test]
    fn fom_spread_degenerate_and_mixed() {
        let one = [FomPoint {
            eta: 2.0,
            fom: 3.0,
            regime: Regime::Saturated,
        }];
        assert_eq!(fom_spread(&one, 1).unwrap().spread, 1.0);
        assert!(fom_spread(&[], 1).is_err());
        let mixed = [
            one[0],
            FomPoint {
                eta: 1.0,
                fom: 1.0,
                regime: Regime::Linear,
            },
        ];
        let r = fom_spread(&mixed, 1).unwrap();
        assert!(r.mixed_regime);
        assert!(r.spread > 1.0);
    }

    #[test]
    fn beta_examples() {
        assert_relative_eq!(beta_from_protocol(0.03, 1e-5).unwrap(), 8.4e3, max_relative = 1e-12);
        assert_eq!(beta_from_protocol(0.0, 1e-5).unwrap(), 0.0);
        assert!(beta_from_protocol(1.2, 1e-5).is_err());
        assert!(beta_from_protocol(0.5, 0.0).is_err());
    }

    #[test]
    fn magnetic_examples() {
        let noise = NoiseModel::shot_noise();
        let s = eta_ensemble(1.0, &slope(), &noise, 1.0, 1.0).unwrap();
        let s = SensitivityResult { eta: 1.75e-20, ..s };
        let b = magnetic_from_power(&s, ALPHA).unwrap();
        assert_relative_eq!(b.value, 1.1755e-12, max_relative = 1e-3);
        assert_eq!(b.unit, MagneticUnit::TeslaPerRootHz);

        let v = eta_ensemble(1.0, &variance(), &noise, 1.0, 1.0).unwrap();
        let v = SensitivityResult { eta: 1.5e-12, ..v };
        let b = magnetic_from_power(&v, ALPHA).unwrap();
        assert_relative_eq!(b.value, 1.1844e-16, max_relative = 1e-3);
        assert_eq!(b.unit, MagneticUnit::TeslaSquaredPerRootHz);
        assert_eq!(magnetic_from_power(&v, 1.0).unwrap().value, 1.5e-12);
    }

    #[test]
    fn regime_thresholds() {
        assert_eq!(Regime::classify(0.099), Regime::Saturated);
        assert_eq!(Regime::classify(0.1), Regime::Intermediate);
        assert_eq!(Regime::classify(10.0), Regime::Intermediate);
        assert_eq!(Regime::classify(10.01), Regime::Linear);
    }

    #[test]
    fn sigma_decomposition() {
        assert_relative_eq!(NvEnsemble::collected_rate(1e7, 0.1, 0.1), 1e5, max_relative = 1e-12);
    }
}
