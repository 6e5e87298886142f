use convpred::scene::{gen_rir, render_scene, simulate, white_noise, RirSpec, SceneConfig};
use convpred::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_cfg() -> StftConfig {
    StftConfig {
        sample_rate: 8000,
        window_len: 8,
        hop: 4,
        fft_size: 8,
    }
}

fn random_spec(frames: usize, seed: u64) -> ComplexSpectrogram {
    let cfg = tiny_cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..frames * cfg.bins())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    ComplexSpectrogram::from_data(frames, cfg, data).unwrap()
}

fn random_weights(frames: usize, bins: usize, seed: u64) -> WeightMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let power: Vec<f64> = (0..frames * bins)
        .map(|_| 10f64.powf(rng.random_range(-2.0..2.0)))
        .collect();
    WeightMap::floored(frames, bins, &power, 1e-6).unwrap()
}

fn shifted(x: &[f64], shift: i64) -> Vec<f64> {
    (0..x.len() as i64)
        .map(|n| {
            let i = n - shift;
            if (0..x.len() as i64).contains(&i) {
                x[i as usize]
            } else {
                0.0
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solver_is_a_minimum(
        frames in 12usize..60,
        taps in 1usize..6,
        delay in 0usize..3,
        seed in any::<u64>(),
        coord in any::<prop::sample::Index>(),
        sign in prop::bool::ANY,
        imag in prop::bool::ANY,
    ) {
        let src = random_spec(frames, seed);
        let target = random_spec(frames, seed ^ 1);
        let w = random_weights(frames, src.bins(), seed ^ 2);
        let load = 1e-6;
        let g = solve_wls(&src, &target, taps, delay, &w, load).unwrap();
        let j0 = weighted_objective(&src, &target, &g, &w).unwrap();

        let mut filters = g.filters().to_vec();
        let f = coord.index(filters.len());
        let k = coord.index(taps);
        let step = if sign { 1e-4 } else { -1e-4 };
        filters[f][k] += if imag { Complex64::new(0.0, step) } else { Complex64::new(step, 0.0) };
        let moved = FilterBank::new(delay, g.source(), filters.clone()).unwrap();
        let j1 = weighted_objective(&src, &target, &moved, &w).unwrap();

        // The loaded problem is minimised exactly; the unloaded objective can
        // only improve by the loading term's change.
        let norm = |fs: &[Vec<Complex64>]| fs[f].iter().map(|c| c.norm_sqr()).sum::<f64>();
        let zs: f64 = src.bin(f).iter().enumerate().map(|(t, c)| c.norm_sqr() / w.get(t, f)).sum();
        let slack = load * zs * (norm(&filters) - norm(g.filters())).abs() + 1e-9 * j0.max(1.0);
        prop_assert!(j1 >= j0 - slack, "j0 {j0} j1 {j1} slack {slack}");
    }

    #[test]
    fn fcp_scale_equivariance(
        seed in any::<u64>(),
        re in -3.0f64..3.0,
        im in -3.0f64..3.0,
    ) {
        prop_assume!(re.hypot(im) > 0.05);
        let alpha = Complex64::new(re, im);
        let y = random_spec(80, seed);
        let est = random_spec(80, seed ^ 7);
        let cfg = PredConfig { taps: 4, ..PredConfig::fcp() };
        let a = fcp(&y, &est, &cfg).unwrap();
        let b = fcp(&y.scaled(alpha), &est.scaled(alpha), &cfg).unwrap();
        prop_assert!(b.estimate.relative_distance(&a.estimate.scaled(alpha)).unwrap() < 1e-8);
        prop_assert!(b.filters.relative_distance(&a.filters).unwrap() < 1e-8);
    }

    #[test]
    fn fcp_forms_agree(seed in any::<u64>(), taps in 1usize..8) {
        let y = random_spec(50, seed);
        let est = random_spec(50, seed ^ 3);
        let out = fcp(&y, &est, &PredConfig { taps, ..PredConfig::fcp() }).unwrap();
        prop_assert!(out.estimate.relative_distance(&out.residual_form).unwrap() < 1e-12);
    }

    #[test]
    fn stft_round_trip(len in 1usize..3000, seed in any::<u64>()) {
        let x = white_noise(len, seed);
        for cfg in [StftConfig::narrowband(), StftConfig::wideband()] {
            let back = synthesize(&analyze(&x, &cfg).unwrap(), len).unwrap();
            let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(err < 1e-10, "{err}");
        }
    }

    #[test]
    fn si_sdr_ignores_scale(seed in any::<u64>(), gain in 1e-3f64..1e3, neg in prop::bool::ANY) {
        let r = white_noise(800, seed);
        let n = white_noise(800, seed ^ 5);
        let est: Vec<f64> = r.iter().zip(&n).map(|(a, b)| a + 0.5 * b).collect();
        let g = if neg { -gain } else { gain };
        let scaled: Vec<f64> = est.iter().map(|v| g * v).collect();
        let a = si_sdr(&est, &r).unwrap();
        let b = si_sdr(&scaled, &r).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn sdr_dominates_si_sdr(seed in any::<u64>(), mix in 0.01f64..10.0) {
        let r = white_noise(1200, seed);
        let n = white_noise(1200, seed ^ 9);
        let est: Vec<f64> = r.iter().zip(&n).map(|(a, b)| a + mix * b).collect();
        prop_assert!(sdr_512(&est, &r).unwrap() >= si_sdr(&est, &r).unwrap() - 1e-9);
    }

    #[test]
    fn gcc_recovers_shift(seed in any::<u64>(), shift in -64i64..=64) {
        let r = white_noise(3000, seed);
        prop_assert_eq!(gcc_phat_delay(&shifted(&r, shift), &r, 64).unwrap(), shift);
    }

    #[test]
    fn rir_parts_sum_to_rir(seed in any::<u64>(), t60 in 0.05f64..1.2, wideband in prop::bool::ANY) {
        let sr = if wideband { 16_000 } else { 8_000 };
        let rir = gen_rir(&RirSpec::new(sr, t60, seed)).unwrap();
        let parts = rir.split();
        for (i, tap) in rir.taps.iter().enumerate() {
            prop_assert_eq!(parts.direct[i] + parts.early[i] + parts.late[i], *tap);
            let nonzero = [parts.direct[i], parts.early[i], parts.late[i]].iter().filter(|v| **v != 0.0).count();
            prop_assert!(nonzero <= 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn scene_components_add_up(
        seed in any::<u64>(),
        t60 in 0.0f64..0.8,
        interferers in 0usize..3,
        snr in prop::option::of(-5.0f64..30.0),
        normalize in prop::bool::ANY,
    ) {
        let sc = simulate(&SceneConfig {
            sample_rate: 8000,
            duration: 0.5,
            t60,
            interferers,
            snr_db: snr,
            normalize,
            seed,
            ..SceneConfig::default()
        }).unwrap();
        sc.check_identities().unwrap();
        for n in 0..sc.len() {
            prop_assert_eq!(sc.y[n], sc.s[n] + sc.h[n] + sc.v[n]);
        }
    }
}

#[test]
fn render_rejects_mismatched_inputs() {
    let dry = vec![white_noise(400, 1)];
    let rir = gen_rir(&RirSpec::new(8000, 0.3, 2)).unwrap();
    assert!(render_scene(&dry, &[], None, 10.0, false).is_err());
    let short = white_noise(10, 3);
    assert!(render_scene(&dry, &[rir], Some(&short), 10.0, false).is_err());
}
