//! Renders ground truth and a fitted light field from a new pose and writes both as PPM.

use nalgebra::Vector3;
use slf_codec::basis::BasisSpec;
use slf_codec::evaluation::{fit_views, image_psnr, synth_scene, RigLayout, SyntheticScene};
use slf_codec::fitting::FitConfig;
use slf_codec::io;
use slf_codec::mapping::CameraModel;
use slf_codec::renderer::{render, RenderConfig};

fn main() -> slf_codec::error::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "render_out".into());
    let scene = SyntheticScene {
        points: 20_000,
        rig: RigLayout {
            circles: 7,
            per_circle: 24,
            width: 160,
            height: 160,
            ..RigLayout::default()
        },
        ..SyntheticScene::default()
    };
    let data = synth_scene(&scene)?;
    let spec = BasisSpec::new(2, 3, 2)?;
    let coeffs = fit_views(&data.cloud, &data.cameras, &data.images, spec, FitConfig::default(), 10.0)?;

    let cam = CameraModel::look_at(Vector3::new(2.6, -2.2, 1.1), Vector3::zeros(), Vector3::z(), 200.0, 256, 256)?;
    let cfg = RenderConfig::new(256, 256);
    let fitted = render(&data.cloud.positions, &coeffs, &spec.compile(), &cam, &cfg)?;
    let truth = data.ground_truth(&cam, &cfg)?;
    let mask: Vec<bool> = fitted.winners.iter().map(Option::is_some).collect();
    println!("covered {} pixels, PSNR {:.2} dB", fitted.covered(), image_psnr(&fitted.image, &truth.image, Some(&mask))?);

    let dir = std::path::Path::new(&out);
    std::fs::create_dir_all(dir)?;
    io::write_atomic(&dir.join("fitted.ppm"), &io::ppm_bytes(&fitted.image)?)?;
    io::write_atomic(&dir.join("truth.ppm"), &io::ppm_bytes(&truth.image)?)?;
    println!("wrote {}", dir.display());
    Ok(())
}
