use proptest::prelude::*;

use pulsecorr::envelope::{intensity_ratio, window_weights, EnvelopeError, PulseShape, PulseTrain, WindowGrid};

const TAU: f64 = 1000.0;

/// Composite Simpson rule with `steps` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    let mut sum = f(a) + f(b);
    for i in 1..steps {
        let x = a + i as f64 * h;
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    sum * h / 3.0
}

/// Unit-area intensity profiles written from their FWHM definitions.
fn gaussian_density(fwhm: f64) -> impl Fn(f64) -> f64 {
    let sigma = fwhm / (2.0 * (2.0 * 2f64.ln()).sqrt());
    move |t| (-(t * t) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

fn sech2_density(fwhm: f64) -> impl Fn(f64) -> f64 {
    // sech^2(t/T) falls to 1/2 at t = T acosh(sqrt 2).
    let t0 = fwhm / (2.0 * 2f64.sqrt().acosh());
    move |t| {
        let s = 1.0 / (t / t0).cosh();
        s * s / (2.0 * t0)
    }
}

fn centered(shape: PulseShape, width: f64, period_windows: u64, windows: u64) -> (PulseTrain, WindowGrid) {
    let grid = WindowGrid::new(TAU, windows).unwrap();
    let train = PulseTrain::new(shape, width, period_windows as f64 * TAU, 1.0, TAU * (period_windows / 2) as f64 + TAU / 2.0)
        .unwrap();
    (train, grid)
}

#[test]
fn gaussian_center_weight_matches_quadrature() {
    let (train, grid) = centered(PulseShape::Gaussian, TAU, 20, 20);
    let w = window_weights(&train, &grid).unwrap().weights();
    let center = 10;
    let kept = simpson(gaussian_density(TAU), -5.0 * TAU, 5.0 * TAU, 20_000);
    let reference = simpson(gaussian_density(TAU), -TAU / 2.0, TAU / 2.0, 2_000) / kept;
    assert!((w[center] - reference).abs() <= 1e-9 * reference, "{} vs {reference}", w[center]);
    assert!((w[center] - 0.761).abs() < 5e-4);
    for k in 1..4 {
        let side = simpson(
            gaussian_density(TAU),
            (k as f64 - 0.5) * TAU,
            (k as f64 + 0.5) * TAU,
            2_000,
        ) / kept;
        assert!((w[center + k] - side).abs() <= 1e-9 * side.max(1e-12));
        assert!((w[center - k] - side).abs() <= 1e-9 * side.max(1e-12));
    }
}

#[test]
fn sech2_weights_match_quadrature() {
    let fwhm = 2.5 * TAU;
    let (train, grid) = centered(PulseShape::Sech2, fwhm, 40, 40);
    let w = window_weights(&train, &grid).unwrap().weights();
    let density = sech2_density(fwhm);
    let kept = simpson(&density, -5.0 * fwhm, 5.0 * fwhm, 40_000);
    for k in 0..6 {
        let lo = (k as f64 - 0.5) * TAU;
        let expected = simpson(&density, lo, lo + TAU, 4_000) / kept;
        assert!((w[20 + k] - expected).abs() <= 1e-9 * expected, "window +{k}");
    }
}

#[test]
fn rect_examples() {
    let grid = WindowGrid::new(TAU, 1000).unwrap();
    let single = PulseTrain::aligned(PulseShape::Rect, TAU, 10.0 * TAU, 1.0, &grid).unwrap();
    let ww = window_weights(&single, &grid).unwrap();
    let w = ww.weights();
    assert_eq!(w[0], 1.0);
    assert!(w[1..10].iter().all(|&x| x == 0.0));
    assert_eq!(intensity_ratio(&ww), 0.1);

    let double = PulseTrain::aligned(PulseShape::Rect, 2.0 * TAU, 10.0 * TAU, 1.0, &grid).unwrap();
    let w = window_weights(&double, &grid).unwrap().weights();
    assert_eq!(&w[..3], &[0.5, 0.5, 0.0]);

    let full = PulseTrain::aligned(PulseShape::Rect, TAU, TAU, 1.0, &grid).unwrap();
    assert_eq!(window_weights(&full, &grid).unwrap().intensity_ratio(), 1.0);
}

#[test]
fn short_grid_is_rejected() {
    let grid = WindowGrid::new(TAU, 5).unwrap();
    let train = PulseTrain::aligned(PulseShape::Rect, TAU, 10.0 * TAU, 1.0, &grid).unwrap();
    assert!(matches!(window_weights(&train, &grid), Err(EnvelopeError::GridTooShort { .. })));
    assert!(WindowGrid::new(0.0, 5).is_err());
    assert!(WindowGrid::new(TAU, 0).is_err());
    assert!(PulseTrain::new(PulseShape::Rect, TAU, TAU, -1.0, 0.0).is_err());
    assert!(PulseTrain::new(PulseShape::Rect, TAU, TAU, 1.0, TAU).is_err());
}

fn shape() -> impl Strategy<Value = PulseShape> {
    prop_oneof![Just(PulseShape::Rect), Just(PulseShape::Gaussian), Just(PulseShape::Sech2)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rect_intensity_ratio_is_w_over_k(w in 1u64..12, extra in 0u64..40, periods in 1u64..30) {
        let k = w + extra;
        let grid = WindowGrid::new(TAU, k * periods).unwrap();
        let train = PulseTrain::aligned(PulseShape::Rect, w as f64 * TAU, k as f64 * TAU, 1.0, &grid).unwrap();
        let ww = window_weights(&train, &grid).unwrap();
        prop_assert_eq!(ww.on_count(), w * periods);
        prop_assert_eq!(ww.intensity_ratio(), (w * periods) as f64 / (k * periods) as f64);
    }

    #[test]
    fn each_period_carries_photons_per_pulse(
        shape in shape(),
        width in 0.2f64..6.0,
        period_windows in 8u64..60,
        offset_frac in 0.0f64..1.0,
        photons in 0.01f64..50.0,
    ) {
        let period = period_windows as f64 * TAU;
        let grid = WindowGrid::new(TAU, period_windows * 4).unwrap();
        let train = PulseTrain::new(shape, width * TAU, period, photons, offset_frac * period * 0.999).unwrap();
        let ww = window_weights(&train, &grid).unwrap();
        prop_assert_eq!(ww.pulse_count(), 4);
        let total: f64 = ww.weights().iter().sum();
        prop_assert!((total - 4.0 * photons).abs() <= 1e-6 * 4.0 * photons);
        for p in 0..ww.pulse_count() {
            let s: f64 = ww.footprint(p).windows.iter().map(|&(_, f)| f).sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
        let w = ww.weights();
        for (i, &x) in w.iter().enumerate() {
            prop_assert_eq!(ww.mask()[i], x > 1e-12 * photons);
        }
    }

    #[test]
    fn doubling_photons_doubles_weights(
        shape in shape(),
        width in 0.2f64..6.0,
        period_windows in 8u64..40,
        photons in 0.01f64..20.0,
    ) {
        let grid = WindowGrid::new(TAU, period_windows * 3).unwrap();
        let train = PulseTrain::aligned(shape, width * TAU, period_windows as f64 * TAU, photons, &grid).unwrap();
        let doubled = train.with_photons_per_pulse(2.0 * photons).unwrap();
        let a = window_weights(&train, &grid).unwrap();
        let b = window_weights(&doubled, &grid).unwrap();
        prop_assert_eq!(a.mask(), b.mask());
        prop_assert_eq!(a.on_count(), b.on_count());
        prop_assert_eq!(a.intensity_ratio(), b.intensity_ratio());
        for (x, y) in a.weights().iter().zip(b.weights()) {
            prop_assert!((2.0 * x - y).abs() <= 1e-12 * y.abs().max(1e-300));
        }
    }
}
