use approx::assert_relative_eq;
use nvrf_core::concentrators::{cpw_field_map, CpwGeometry, GridSpec};
use nvrf_core::config::{parse_config, Config};
use nvrf_core::model::{
    eta_ensemble, eta_single, fom_sat, fom_spread, pl_density, snr_single, BeamFootprint, BeamGeometry,
    DetectorModel, FomPoint, NoiseKind, NoiseModel, NvEnsemble, Optics, PlLaw, Protocol, ProtocolKind, Regime,
};
use nvrf_core::probe::{evaluate_region, optimize_probe, ProbeRegion, SearchGrid};
use nvrf_core::scaling::{fit_exponent, log_space, regimes_monotone, sweep_sensitivity, FitPoint, ScalingGeometry, SweepSpec, ZetaMode};
use proptest::prelude::*;

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.log10()..hi.log10()).prop_map(|e| 10f64.powf(e))
}

fn protocol_kind() -> impl Strategy<Value = ProtocolKind> {
    prop_oneof![Just(ProtocolKind::Slope), Just(ProtocolKind::Variance)]
}

fn noise_kind() -> impl Strategy<Value = NoiseKind> {
    prop_oneof![Just(NoiseKind::PlDependent), Just(NoiseKind::PlIndependent)]
}

proptest! {
    #[test]
    fn snr_round_trip(
        alpha in log_uniform(1e-5, 1.0),
        beta in log_uniform(1e2, 1e6),
        i_pl in log_uniform(1e2, 1e9),
        xi in 1.0..20.0f64,
        kind in protocol_kind(),
        nk in noise_kind(),
    ) {
        let p = Protocol::new(kind, beta).unwrap();
        let n = NoiseModel::new(nk, xi).unwrap();
        let eta = eta_single(alpha, &p, &n, i_pl).unwrap().eta;
        let snr = snr_single(alpha, &p, &n, i_pl, 1.0, eta).unwrap();
        prop_assert!((snr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slope_variance_identity(
        alpha in log_uniform(1e-5, 1.0),
        beta in log_uniform(1e2, 1e6),
        i_pl in log_uniform(1e2, 1e9),
        xi in 1.0..20.0f64,
        nk in noise_kind(),
    ) {
        let n = NoiseModel::new(nk, xi).unwrap();
        let s = eta_single(alpha, &Protocol::new(ProtocolKind::Slope, beta).unwrap(), &n, i_pl).unwrap().eta;
        let v = eta_single(alpha, &Protocol::new(ProtocolKind::Variance, beta).unwrap(), &n, i_pl).unwrap().eta;
        let lhs = v * xi;
        let rhs = s * i_pl.powf(1.0 - nk.kappa());
        prop_assert!((lhs - rhs).abs() <= 1e-13 * rhs);
    }

    #[test]
    fn pl_density_monotone(
        p in log_uniform(1e-3, 10.0),
        area in log_uniform(1e-14, 1e-8),
        k in 1.01..10.0f64,
    ) {
        let e = NvEnsemble::new(8e23, 1e5).unwrap();
        let o = |p| Optics::new(p, 1e9, BeamGeometry::ParallelCpw).unwrap();
        let base = pl_density(&e, &o(p), area).unwrap();
        prop_assert!(pl_density(&e, &o(p * k), area).unwrap() > base);
        prop_assert!(pl_density(&e, &o(p), area * k).unwrap() < base);
        prop_assert!(base < e.saturated_density());
    }

    #[test]
    fn ensemble_improves_with_volume_and_field(
        avg in log_uniform(1e-8, 1e-2),
        volume in log_uniform(1e-18, 1e-10),
        k in 1.01..10.0f64,
        kind in protocol_kind(),
        nk in noise_kind(),
    ) {
        prop_assume!(nk == NoiseKind::PlDependent || k > 1.0);
        let p = Protocol::new(kind, 1e4).unwrap();
        let n = NoiseModel::new(nk, 1.0).unwrap();
        let base = eta_ensemble(avg, &p, &n, 1e28, volume).unwrap();
        prop_assert_eq!(base.i_pl, 1e28 * volume);
        prop_assert!(eta_ensemble(avg, &p, &n, 1e28, volume * k).unwrap().eta < base.eta);
        prop_assert!(eta_ensemble(avg * k, &p, &n, 1e28, volume).unwrap().eta < base.eta);
    }

    #[test]
    fn saturated_limit_follows_figure_of_merit(
        draws in prop::collection::vec((log_uniform(1e-8, 1e-2), log_uniform(1e-12, 1e-8), log_uniform(1e-6, 1e-3)), 2..8),
        kind in protocol_kind(),
        nk in noise_kind(),
    ) {
        let model = DetectorModel {
            protocol: Protocol::new(kind, 1e4).unwrap(),
            noise: NoiseModel::new(nk, 1.0).unwrap(),
            ensemble: NvEnsemble::new(8e23, 1e5).unwrap(),
            optics: Optics::new(1.0, 1e9, BeamGeometry::ParallelCpw).unwrap(),
        };
        let points: Vec<FomPoint> = draws
            .iter()
            .map(|&(avg, area, depth)| {
                let fp = BeamFootprint { area, path_length: depth };
                let eta = model.evaluate(avg, area * depth, &fp, PlLaw::SaturatedLimit).unwrap().eta;
                FomPoint { eta, fom: fom_sat(avg, area * depth, nk.kappa()), regime: Regime::Saturated }
            })
            .collect();
        let s = fom_spread(&points, kind.kappa()).unwrap();
        prop_assert!((s.spread - 1.0).abs() < 1e-10);
        prop_assert!(!s.mixed_regime);
    }

    #[test]
    fn power_law_fit_recovers_exponent(exponent in -6.0..6.0f64, scale in log_uniform(1e-30, 1e10)) {
        let pts: Vec<FitPoint> = log_space(1e-7, 1e-3, 30)
            .into_iter()
            .map(|x| FitPoint { param: x, eta: scale * x.powf(exponent), regime: Regime::Linear })
            .collect();
        let fit = fit_exponent(&pts, (1e-7, 1e-3)).unwrap();
        prop_assert!((fit.exponent - exponent).abs() < 1e-9);
        prop_assert!(fit.max_residual < 1e-8);
    }

    #[test]
    fn sweep_rows_ascend_and_regimes_never_interleave(
        p in log_uniform(1e-3, 10.0),
        geometry in prop_oneof![
            Just(ScalingGeometry::CpwParallel),
            Just(ScalingGeometry::CpwPerpendicular),
            Just(ScalingGeometry::Loop)
        ],
        kind in protocol_kind(),
    ) {
        let cfg = Config::paper_defaults();
        let spec = SweepSpec {
            geometry,
            min: 1e-7,
            max: 1e-3,
            points: 41,
            model: cfg.model().unwrap().with_protocol(kind),
            p_lasers: vec![p],
            constants: cfg.constants(geometry),
            zeta_mode: ZetaMode::default(),
            pl_law: PlLaw::Saturation,
        };
        let table = sweep_sensitivity(&spec).unwrap();
        prop_assert_eq!(table.rows.len(), 41);
        prop_assert!(table.rows.windows(2).all(|w| w[0].param_m < w[1].param_m));
        prop_assert!(regimes_monotone(&table.rows));
    }

    #[test]
    fn config_round_trip(
        w in log_uniform(1e-7, 1e-3),
        p in log_uniform(1e-3, 10.0),
        kind in protocol_kind(),
        nk in noise_kind(),
        beta in prop::option::of(log_uniform(1e2, 1e6)),
        t_fixed in prop::option::of(log_uniform(1e-7, 1e-4)),
        c1 in 0.05..3.0f64,
        nx in 16usize..500,
    ) {
        let mut cfg = Config::paper_defaults();
        cfg.cpw_w = w;
        cfg.p_laser = p;
        cfg.protocol = kind;
        cfg.noise = nk;
        cfg.beta = beta;
        cfg.t_fixed = t_fixed;
        cfg.c1 = c1;
        cfg.grid.nx = nx;
        prop_assert_eq!(parse_config(&cfg.serialize()).unwrap(), cfg);
    }
}

#[test]
fn optimiser_agrees_with_brute_force_and_ignores_candidate_order() {
    let g = CpwGeometry::new(10e-6, 50.0, 1e-3).unwrap();
    let map = cpw_field_map(&g, &GridSpec::new(120, 120, 3.0).unwrap(), true).unwrap();
    let grid = SearchGrid::default_for(&map);
    for kind in ProtocolKind::ALL {
        let r = optimize_probe(&map, kind, 0.5, &grid).unwrap();
        // brute force over every candidate
        let mut best: Option<(f64, f64, f64)> = None;
        for &c1 in &grid.c1 {
            for &c2 in &grid.c2 {
                let region = ProbeRegion::for_map(&map, c1, c2).unwrap();
                if let Ok(f) = evaluate_region(&map, &region, kind.kappa(), 0.5) {
                    if best.is_none_or(|(b, _, _)| f.fom_sat > b) {
                        best = Some((f.fom_sat, c1, c2));
                    }
                }
            }
        }
        let (fom, c1, c2) = best.unwrap();
        assert_eq!((r.c1_opt, r.c2_opt), (c1, c2));
        assert_relative_eq!(r.fom, fom, max_relative = 1e-15);

        let mut shuffled = grid.clone();
        shuffled.c1.reverse();
        shuffled.c2.rotate_left(7);
        let s = optimize_probe(&map, kind, 0.5, &shuffled).unwrap();
        assert_eq!(s, r);
    }
}

#[test]
fn conditional_searches_bracket_the_joint_optimum() {
    let g = CpwGeometry::new(10e-6, 50.0, 1e-3).unwrap();
    let map = cpw_field_map(&g, &GridSpec::new(120, 120, 3.0).unwrap(), true).unwrap();
    let full = SearchGrid::default_for(&map);
    let joint = optimize_probe(&map, ProtocolKind::Slope, 0.5, &full).unwrap();
    let c2_only = optimize_probe(&map, ProtocolKind::Slope, 0.5, &SearchGrid::fixed_c1(joint.c1_opt, full.c2.clone())).unwrap();
    let c1_only = optimize_probe(&map, ProtocolKind::Slope, 0.5, &SearchGrid::fixed_c2(full.c1.clone(), joint.c2_opt)).unwrap();
    assert_eq!(c2_only.c2_opt, joint.c2_opt);
    assert_eq!(c1_only.c1_opt, joint.c1_opt);
    assert!(joint.plateau.c1.0 <= joint.c1_opt && joint.c1_opt <= joint.plateau.c1.1);
    assert!(joint.plateau.c2.0 <= joint.c2_opt && joint.c2_opt <= joint.plateau.c2.1);
}
