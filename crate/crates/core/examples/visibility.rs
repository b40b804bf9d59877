//! Projects a sphere into a ring of cameras and reports what each camera sees.

use nalgebra::Vector3;
use slf_codec::evaluation::fibonacci_sphere;
use slf_codec::mapping::{build_observations, visibility_mask, CameraModel, Image, RigCamera};

fn main() -> slf_codec::error::Result<()> {
    let cloud = fibonacci_sphere(5000);
    let eps = cloud.default_depth_eps();
    let cameras: Vec<RigCamera> = (0..8)
        .map(|k| {
            let a = k as f64 * std::f64::consts::PI / 4.0;
            let eye = Vector3::new(4.0 * a.cos(), 4.0 * a.sin(), 1.0);
            let model = CameraModel::look_at(eye, Vector3::zeros(), Vector3::z(), 120.0, 128, 128)?;
            Ok(RigCamera { id: k, model })
        })
        .collect::<slf_codec::error::Result<_>>()?;
    for cam in &cameras {
        let visible = visibility_mask(&cloud, &cam.model, eps).iter().filter(|v| **v).count();
        println!("camera {}: {visible} of {} points visible", cam.id, cloud.len());
    }
    let images = vec![Image::new(128, 128, [200.0, 120.0, 40.0]); cameras.len()];
    for delta in [0.0, 10.0, 30.0, 60.0] {
        let obs = build_observations(&cloud, &cameras, &images, delta, eps)?;
        println!("cone {delta:>4} deg: {} observations", obs.total());
    }
    Ok(())
}
