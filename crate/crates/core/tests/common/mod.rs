#![allow(dead_code)]

use angioseg::phantom::{render_frame, Illumination, PhantomFrame, PhantomSpec, VesselSegment};

pub const FLAT: Illumination = Illumination {
    gx: 0.0,
    gy: 0.0,
    quad: 0.0,
};

/// Fully opacified frame of the given vessels on a 0.7 background.
pub fn tubes(
    size: usize,
    vessels: Vec<VesselSegment>,
    noise: f64,
    light: Illumination,
) -> PhantomFrame {
    let spec = PhantomSpec {
        width: size,
        height: size,
        background: 0.7,
        depth: 0.35,
        vessels,
        catheter: None,
        illumination: light,
        noise_sigma: noise,
        seed: 11,
        injection_start: 0,
        injection_ramp: 1,
    };
    render_frame(&spec, 1).expect("valid phantom")
}

/// Straight vessel through the image center at `deg` from the x axis,
/// spanning `half` pixels either side.
pub fn straight(size: usize, deg: f64, half: f64, radius: f64) -> VesselSegment {
    let c = size as f64 / 2.0;
    let (s, co) = deg.to_radians().sin_cos();
    VesselSegment::line(
        (c - half * co, c - half * s),
        (c + half * co, c + half * s),
        radius,
    )
}
