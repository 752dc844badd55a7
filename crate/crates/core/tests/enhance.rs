mod common;

use angioseg::config::PipelineConfig;
use angioseg::enhance::{
    homomorphic, multiscale_tophat, smooth_for_ridges, GuidedParams, HomomorphicParams,
};
use angioseg::phantom::metrics::within;
use angioseg::phantom::{Illumination, PhantomFrame};
use angioseg::vesselness::directional_vesselness;
use angioseg::GrayImage;
use common::{straight, tubes, FLAT};

const N: usize = 256;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Valley depth (ring around the vessels minus their axis) and the
/// variance of the background well away from them.
fn depth_and_background_variance(t: &PhantomFrame, img: &GrayImage) -> (f64, f64) {
    let vessels = &t.truth.vessel_mask;
    let ring = within(vessels, 6.0).and_not(&within(vessels, 3.0)).unwrap();
    let near = within(vessels, 8.0);
    let axis: Vec<f64> = t
        .truth
        .centerline_mask
        .iter_set()
        .map(|(x, y)| img.get(x, y))
        .collect();
    let ring: Vec<f64> = ring.iter_set().map(|(x, y)| img.get(x, y)).collect();
    let bg: Vec<f64> = (0..N * N)
        .filter(|&i| !near.bits()[i])
        .map(|i| img.data()[i])
        .collect();
    let m = mean(&bg);
    let var = bg.iter().map(|v| (v - m).powi(2)).sum::<f64>() / bg.len() as f64;
    (mean(&ring) - mean(&axis), var)
}

fn smoothing_case() -> (PhantomFrame, GrayImage, GrayImage) {
    let cfg = PipelineConfig::default();
    let t = tubes(
        N,
        vec![
            straight(N, 20.0, 120.0, 3.0),
            straight(N, 110.0, 100.0, 2.5),
        ],
        0.02,
        FLAT,
    );
    let ce = multiscale_tophat(&t.image, &cfg.tophat().unwrap());
    let iv = directional_vesselness(
        &t.image,
        &cfg.bank().unwrap(),
        &cfg.frangi().unwrap(),
        cfg.homomorphic(),
    )
    .unwrap();
    (t, ce, iv)
}

#[test]
fn guided_smoothing_flattens_background() {
    let (t, ce, iv) = smoothing_case();
    let out = smooth_for_ridges(&ce, &iv, PipelineConfig::default().guided().unwrap()).unwrap();
    let (d0, v0) = depth_and_background_variance(&t, &ce);
    let (d1, v1) = depth_and_background_variance(&t, &out);
    assert!(v1 <= 0.5 * v0, "{v1} vs {v0}");
    assert!(d1 > 0.0 && d0 > 0.0);
}

#[test]
fn guided_smoothing_keeps_valleys_under_light_regularization() {
    let (t, ce, iv) = smoothing_case();
    let out = smooth_for_ridges(&ce, &iv, GuidedParams::new(8, 0.01).unwrap()).unwrap();
    let (d0, v0) = depth_and_background_variance(&t, &ce);
    let (d1, v1) = depth_and_background_variance(&t, &out);
    assert!(d1 >= 0.6 * d0, "{d1} vs {d0}");
    assert!(v1 <= 0.5 * v0, "{v1} vs {v0}");
}

#[test]
fn tophat_deepens_phantom_tube() {
    let t = tubes(N, vec![straight(N, 35.0, 120.0, 2.0)], 0.0, FLAT);
    let ce = multiscale_tophat(&t.image, &PipelineConfig::default().tophat().unwrap());
    let (before, _) = depth_and_background_variance(&t, &t.image);
    let (after, _) = depth_and_background_variance(&t, &ce);
    assert!(after > before, "{after} vs {before}");
}

#[test]
fn homomorphic_removes_illumination_gradient() {
    for light in [
        Illumination {
            gx: 0.0,
            gy: 0.4,
            quad: 0.0,
        },
        Illumination {
            gx: 0.3,
            gy: 0.3,
            quad: 0.0,
        },
    ] {
        let t = tubes(N, vec![straight(N, 80.0, 120.0, 3.0)], 0.0, light);
        let out = homomorphic(&t.image, HomomorphicParams::default());
        let far = within(&t.truth.vessel_mask, 10.0);
        let spread = |img: &GrayImage| {
            let rows: Vec<f64> = (0..N)
                .map(|y| {
                    let v: Vec<f64> = (0..N)
                        .filter(|&x| !far.get(x, y))
                        .map(|x| img.get(x, y))
                        .collect();
                    mean(&v)
                })
                .collect();
            let lo = rows.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = rows.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        };
        let (before, after) = (spread(&t.image), spread(&out));
        assert!(after <= 0.2 * before, "{light:?}: {after} vs {before}");
    }
}
