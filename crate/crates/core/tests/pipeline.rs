use anomscale_core::estimators::{analyze_exponents, ReportFlag};
use anomscale_core::io::{read_binary, read_csv, write_binary, write_csv};
use anomscale_core::market::{analyze_market, write_minute_bars, IntervalSpec, SessionSpec, SyntheticDays};
use anomscale_core::{estimate_exponents, generate, make_time_grid, FitOptions, ProcessSpec};

fn quick() -> FitOptions {
    FitOptions {
        bootstrap: 30,
        seed: 2,
        ..FitOptions::default()
    }
}

#[test]
fn binary_round_trip_preserves_the_estimate() {
    let e = generate(&ProcessSpec::Sbm { moses: 0.6 }, 300, 1000, 4).unwrap();
    let mut buf = Vec::new();
    write_binary(&e, &mut buf).unwrap();
    let back = read_binary(buf.as_slice()).unwrap();
    assert_eq!(back, e);

    let grid = make_time_grid(20, 1000, 80).unwrap();
    let a = estimate_exponents(&e, &grid, &quick()).unwrap();
    let b = estimate_exponents(&back, &grid, &quick()).unwrap();
    assert_eq!(a, b);
    assert!((a.moses.value - 0.6).abs() < 0.02, "{a:?}");
}

#[test]
fn csv_round_trip_is_exact() {
    let e = generate(&ProcessSpec::Lm { latent: 0.7 }, 5, 64, 9).unwrap();
    let mut buf = Vec::new();
    write_csv(&e, &mut buf).unwrap();
    let back = read_csv(buf.as_slice(), e.descriptor(), e.master_seed()).unwrap();
    assert_eq!(back.increments(), e.increments());
}

#[test]
fn analysis_does_not_depend_on_the_pool_size() {
    let e = generate(&ProcessSpec::Fbm { joseph: 0.7 }, 400, 512, 3).unwrap();
    let grid = make_time_grid(16, 512, 40).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| analyze_exponents(&e, &grid, &quick()).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(7));
}

#[test]
fn low_joseph_flm_is_flagged() {
    let e = generate(&ProcessSpec::flm(0.4, 0.6, 256), 200, 256, 1).unwrap();
    let grid = make_time_grid(10, 256, 30).unwrap();
    let r = estimate_exponents(&e, &grid, &quick()).unwrap();
    assert!(r.has_flag(ReportFlag::RsUnreliable));
}

#[test]
fn market_pipeline_from_bars() {
    let sessions = SyntheticDays::vdp(0.5, 200, 6).sessions().unwrap();
    let spec = SessionSpec::default();
    let mut bars = Vec::new();
    write_minute_bars(&sessions, spec.open_minute, &mut bars).unwrap();
    let intervals = [IntervalSpec::new(30, 190), IntervalSpec::new(260, 380)];
    let r = analyze_market(bars.as_slice(), &spec, "SYN", &intervals, &quick()).unwrap();
    assert_eq!(r.n_days, 200);
    assert_eq!(r.profile.len(), 389);
    assert_eq!(r.intervals.len(), 2);
    for iv in &r.intervals {
        let m = iv.analysis.report.moses.value;
        assert!((m - 0.5).abs() < 0.1, "{:?}: M = {m}", iv.interval);
    }
}
