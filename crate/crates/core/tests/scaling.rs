use approx::assert_relative_eq;
use nvrf_core::concentrators::GridSpec;
use nvrf_core::config::Config;
use nvrf_core::model::{fom_sat, fom_spread, FomPoint, PlLaw, ProtocolKind, Regime};
use nvrf_core::scaling::{
    evaluate_at, exponent_csv, sweep_sensitivity, verify_scaling, ScalingGeometry, SweepSpec, SweepTable,
    VerifySettings, ZetaMode, PUBLISHED_EXPONENTS,
};

fn sweep(geometry: ScalingGeometry, protocol: ProtocolKind, lasers: &[f64]) -> SweepTable {
    let cfg = Config::paper_defaults();
    sweep_sensitivity(&SweepSpec {
        geometry,
        min: 1e-7,
        max: 1e-3,
        points: 81,
        model: cfg.model().unwrap().with_protocol(protocol),
        p_lasers: lasers.to_vec(),
        constants: cfg.constants(geometry),
        zeta_mode: ZetaMode::default(),
        pl_law: PlLaw::Saturation,
    })
    .unwrap()
}

fn etas(t: &SweepTable, p: f64) -> Vec<(f64, f64)> {
    t.curve(p).map(|r| (r.param_m, r.eta.unwrap())).collect()
}

#[test]
fn parallel_slope_has_small_width_plateau() {
    let t = sweep(ScalingGeometry::CpwParallel, ProtocolKind::Slope, &[1.0]);
    let e = etas(&t, 1.0);
    // flat over the first decade, rising as w^2 in the last
    assert_relative_eq!(e[0].1, e[20].1, max_relative = 1e-3);
    let late = (e[80].1 / e[70].1).log10() / (e[80].0 / e[70].0).log10();
    assert_relative_eq!(late, 2.0, epsilon = 0.05);
    assert!(e[80].1 > 100.0 * e[40].1);
}

#[test]
fn perpendicular_slope_optimum_moves_with_laser_power() {
    let lasers = [0.01, 0.1, 1.0];
    let t = sweep(ScalingGeometry::CpwPerpendicular, ProtocolKind::Slope, &lasers);
    let argmin = |p: f64| {
        etas(&t, p)
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0
    };
    let w: Vec<f64> = lasers.iter().map(|&p| argmin(p)).collect();
    assert!(w[0] > 1e-7 && w[2] < 1e-3, "interior minimum");
    assert!(w[0] < w[1] && w[1] < w[2], "{w:?}");
    // the optimum tracks sqrt(P)
    assert_relative_eq!(w[2] / w[0], 10.0, max_relative = 0.25);
}

#[test]
fn loop_variance_keeps_improving_toward_small_radius() {
    let t = sweep(ScalingGeometry::Loop, ProtocolKind::Variance, &[1.0]);
    let e = etas(&t, 1.0);
    assert!(e.windows(2).all(|w| w[0].1 < w[1].1));
    let early = (e[10].1 / e[0].1).log10() / (e[10].0 / e[0].0).log10();
    let late = (e[80].1 / e[70].1).log10() / (e[80].0 / e[70].0).log10();
    assert_relative_eq!(early, 0.5, epsilon = 0.05);
    assert_relative_eq!(late, 1.5, epsilon = 0.05);
}

#[test]
fn sweep_csv_schema() {
    let t = sweep(ScalingGeometry::Loop, ProtocolKind::Slope, &[0.01, 1.0]);
    let csv = t.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("param_m,eta,unit,regime,p_laser_w"));
    assert_eq!(csv.lines().count(), 1 + 2 * 81);
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1.00000000e-7");
    assert_eq!(first[2], "W/Hz");
    assert_eq!(first[3], "saturated");
}

#[test]
fn exponent_table_matches_published_cells() {
    let cfg = Config::paper_defaults();
    let model = cfg.model().unwrap();
    let mut records = verify_scaling(
        &model,
        &cfg.constants(ScalingGeometry::CpwParallel),
        &[ScalingGeometry::CpwParallel, ScalingGeometry::CpwPerpendicular],
        &VerifySettings::default(),
    )
    .unwrap();
    records.extend(
        verify_scaling(&model, &cfg.constants(ScalingGeometry::Loop), &[ScalingGeometry::Loop], &VerifySettings::default()).unwrap(),
    );
    assert_eq!(records.len(), PUBLISHED_EXPONENTS.len());
    assert!(records.iter().all(|r| r.pass));
    let csv = exponent_csv(&records);
    assert!(csv.starts_with("geometry,beam,regime,protocol,kappa_noise,predicted,fitted,residual,pass\n"));
    assert_eq!(csv.lines().count(), 25);
}

#[test]
fn field_map_mode_reproduces_loop_exponents() {
    let cfg = Config::paper_defaults();
    let mut k = cfg.constants(ScalingGeometry::Loop);
    k.c1 = 0.85;
    k.c2 = 0.9;
    let settings = VerifySettings {
        span: 1e3,
        points: 25,
        tolerance: 0.05,
        zeta_mode: ZetaMode::FieldMap {
            grid: GridSpec::new(60, 60, 3.0).unwrap(),
            include_returns: false,
        },
    };
    let records = verify_scaling(&cfg.model().unwrap(), &k, &[ScalingGeometry::Loop], &settings).unwrap();
    assert_eq!(records.len(), 8);
    assert!(records.iter().all(|r| r.pass), "{records:?}");
}

#[test]
fn saturated_window_keeps_eta_times_fom_constant() {
    let cfg = Config::paper_defaults();
    let geometry = ScalingGeometry::CpwParallel;
    let k = cfg.constants(geometry);
    for protocol in ProtocolKind::ALL {
        let model = cfg.model().unwrap().with_protocol(protocol);
        let points: Vec<FomPoint> = [1e-7, 3e-7, 1e-6, 3e-6]
            .iter()
            .map(|&w| {
                let r = evaluate_at(&model, geometry, &k, &ZetaMode::default(), PlLaw::SaturatedLimit, w, 1.0).unwrap();
                FomPoint {
                    eta: r.eta,
                    fom: fom_sat(r.avg_alpha_pow, r.volume.unwrap(), 0.5),
                    regime: r.regime.unwrap(),
                }
            })
            .collect();
        assert!(points.iter().all(|p| p.regime == Regime::Saturated));
        let s = fom_spread(&points, protocol.kappa()).unwrap();
        assert!((s.spread - 1.0).abs() < 1e-10);
    }
}
