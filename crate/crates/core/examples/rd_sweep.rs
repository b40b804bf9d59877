//! Sweeps the quantization step on a small sphere and prints the rate-distortion table.

use slf_codec::evaluation::{
    rd_sweep, rows_to_csv, select_views, split_cameras, synth_scene, PipelineConfig, RigLayout, Split, Sweep,
    SweepInputs, SyntheticScene,
};

fn main() -> slf_codec::error::Result<()> {
    let scene = SyntheticScene {
        points: 1500,
        rig: RigLayout {
            width: 128,
            height: 128,
            ..RigLayout::default()
        },
        ..SyntheticScene::default()
    };
    let data = synth_scene(&scene)?;
    let (input, eval) = split_cameras(scene.rig.circles, scene.rig.per_circle, Split::Dense)?;
    let (ic, ii) = select_views(&data.cameras, &data.images, &input);
    let (ec, ei) = select_views(&data.cameras, &data.images, &eval);
    let inputs = SweepInputs {
        cloud: &data.cloud,
        input_cameras: &ic,
        input_images: &ii,
        eval_cameras: &ec,
        eval_images: &ei,
    };
    let cfg = PipelineConfig {
        scale_theta: 3,
        scale_gamma: 2,
        ..PipelineConfig::default()
    };
    let rows = rd_sweep(&inputs, &cfg, &Sweep::Q(vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0]))?;
    print!("{}", rows_to_csv(&rows));
    Ok(())
}
