use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;

use slf_codec::basis::BasisSpec;
use slf_codec::codec::{encode_stream, SlfBitstream, VoxelFrame};
use slf_codec::error::{Result, SlfError};
use slf_codec::evaluation::scene::synth_scene;
use slf_codec::evaluation::split::{split_cameras, split_proportional, Split};
use slf_codec::evaluation::{fit_views, rd_sweep, rows_to_csv, select_views, slf_psnr, PipelineConfig, SweepInputs};
use slf_codec::io::{self, PlyEncoding};
use slf_codec::mapping::{estimate_normals, CameraModel, Image, PointCloud, RigCamera};
use slf_codec::renderer::{render, RenderConfig};

#[derive(Parser)]
#[command(name = "slf", version, about = "Surface light field fitting, coding and rendering")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every stochastic choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

/// Pipeline overrides; unset flags keep the defaults (or the config file values).
#[derive(Args, Debug, Default)]
struct PipelineArgs {
    #[arg(long)]
    order: Option<u32>,
    #[arg(long)]
    scale_theta: Option<u32>,
    #[arg(long)]
    scale_gamma: Option<u32>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Smoothing iterations; 0 gives the plain ridge fit.
    #[arg(long)]
    iters: Option<usize>,
    /// Neighbors used for smoothing.
    #[arg(long)]
    neighbors: Option<usize>,
    /// Validity cone half-angle for fitting, degrees.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    depth: Option<u32>,
}

impl PipelineArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        set!(order, scale_theta, scale_gamma, lambda, beta, iters, neighbors, delta, q, depth);
    }

    fn config(&self) -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        self.apply(&mut cfg);
        cfg
    }
}

/// Which cameras of a rig are used.
#[derive(Args, Debug)]
struct SplitArgs {
    #[arg(long, value_parser = parse_split)]
    split: Option<Split>,
    /// Number of camera rings, for ring-structured rigs (camera ids ring after ring).
    #[arg(long)]
    rings: Option<usize>,
}

#[derive(Args, Debug)]
struct Views {
    #[arg(long)]
    cloud: PathBuf,
    #[arg(long)]
    rig: PathBuf,
    /// Directory holding one `cam_<id>.ppm` per camera.
    #[arg(long)]
    images: PathBuf,
    /// Estimate missing normals from this many nearest neighbors.
    #[arg(long, value_name = "K")]
    estimate_normals: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene: cloud, rig and ground-truth images.
    Synth {
        /// Scene description (TOML); defaults describe the specular sphere.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write this many seeded novel poses (`novel_rig.txt`, `novel/`).
        #[arg(long, default_value_t = 0)]
        novel: usize,
        #[arg(long)]
        ascii: bool,
    },
    /// Fit view-map coefficients from the input views.
    Fit {
        #[command(flatten)]
        views: Views,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        params: PipelineArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Code fitted coefficients into a `.slf` stream.
    Encode {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        coeffs: PathBuf,
        #[command(flatten)]
        params: PipelineArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a `.slf` stream into per-voxel coefficients.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write voxel centers as PLY.
        #[arg(long)]
        points: Option<PathBuf>,
        /// Original cloud; places voxel centers in its world frame.
        #[arg(long)]
        cloud: Option<PathBuf>,
    },
    /// Render a view from coefficients or a decoded stream.
    Render {
        #[arg(long)]
        cloud: PathBuf,
        /// Coefficient dump with one record per cloud point.
        #[arg(long, conflicts_with = "slf", required_unless_present = "slf")]
        coeffs: Option<PathBuf>,
        /// Coded stream; the cloud restores its world frame.
        #[arg(long)]
        slf: Option<PathBuf>,
        #[command(flatten)]
        pose: Pose,
        #[arg(long, default_value_t = 1)]
        splat_radius: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score coefficients against the evaluation views.
    Eval {
        #[command(flatten)]
        views: Views,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        coeffs: PathBuf,
        /// Evaluation cones, degrees.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 10.0, 20.0, 30.0])]
        delta_prime: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rate-distortion sweep on a synthetic scene.
    RdSweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_split)]
        split: Option<Split>,
        #[command(flatten)]
        params: PipelineArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Pose {
    /// Rig file and camera id to render from.
    #[arg(long, requires = "camera", conflicts_with = "eye")]
    rig: Option<PathBuf>,
    #[arg(long)]
    camera: Option<u32>,
    /// Camera center `x,y,z`, looking at `--target`.
    #[arg(long, value_parser = parse_vec3, required_unless_present = "rig")]
    eye: Option<Vector3<f64>>,
    #[arg(long, value_parser = parse_vec3, default_value = "0,0,0")]
    target: Vector3<f64>,
    #[arg(long, value_parser = parse_vec3, default_value = "0,0,1")]
    up: Vector3<f64>,
    /// Focal length in pixels (default: the image width).
    #[arg(long)]
    focal: Option<f64>,
    #[arg(long, default_value_t = 256)]
    width: u32,
    #[arg(long, default_value_t = 256)]
    height: u32,
}

fn parse_split(s: &str) -> std::result::Result<Split, String> {
    s.parse().map_err(|e: SlfError| e.to_string())
}

fn parse_vec3(s: &str) -> std::result::Result<Vector3<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number `{t}`")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Vector3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got `{s}`")),
    }
}

fn image_name(id: u32) -> String {
    format!("cam_{id:04}.ppm")
}

fn check_exists(paths: &[&Path]) -> Result<()> {
    for p in paths {
        if !p.exists() {
            return Err(SlfError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{}: not found", p.display()),
            )));
        }
    }
    Ok(())
}

fn load_cloud(path: &Path, estimate: Option<usize>) -> Result<PointCloud> {
    let mut cloud = io::load_ply(path)?;
    if cloud.normals.is_none() {
        match estimate {
            Some(k) => cloud.normals = Some(estimate_normals(&cloud.positions, k)?),
            None => {
                return Err(SlfError::InvalidArgument(format!(
                    "{}: point cloud has no normals (pass --estimate-normals K)",
                    path.display()
                )))
            }
        }
    }
    Ok(cloud)
}

fn load_views(v: &Views) -> Result<(PointCloud, Vec<RigCamera>, Vec<Image>)> {
    check_exists(&[&v.cloud, &v.rig, &v.images])?;
    let cloud = load_cloud(&v.cloud, v.estimate_normals)?;
    let cameras = io::load_rig(&v.rig)?;
    let images = cameras
        .iter()
        .map(|c| {
            let img = io::load_ppm(&v.images.join(image_name(c.id)))?;
            if img.width != c.model.width as usize || img.height != c.model.height as usize {
                return Err(SlfError::InvalidArgument(format!("image of camera {} does not match its size", c.id)));
            }
            Ok(img)
        })
        .collect::<Result<_>>()?;
    Ok((cloud, cameras, images))
}

/// `(input, evaluation)` camera indices; without a split every camera is both.
fn camera_split(total: usize, args: &SplitArgs) -> Result<(Vec<usize>, Vec<usize>)> {
    let Some(split) = args.split else {
        return Ok(((0..total).collect(), (0..total).collect()));
    };
    match args.rings {
        Some(rings) => {
            if rings == 0 || total % rings != 0 {
                return Err(SlfError::InvalidArgument(format!("{total} cameras do not form {rings} equal rings")));
            }
            split_cameras(rings, total / rings, split)
        }
        None => split_proportional(total, split),
    }
}

fn write_coeffs(path: &Path, coeffs: &slf_codec::fitting::SlfCoefficients, spec: &BasisSpec) -> Result<()> {
    io::write_atomic(path, io::coefficients_to_string(coeffs, spec)?.as_bytes())
}

fn synth(spec: Option<&Path>, out: &Path, novel: usize, ascii: bool, seed: u64) -> Result<()> {
    let scene_spec = match spec {
        Some(p) => {
            check_exists(&[p])?;
            let text = std::fs::read_to_string(p).map_err(|e| SlfError::from(e).context(p.display()))?;
            io::parse_scene(&text)?
        }
        None => Default::default(),
    };
    let scene = synth_scene(&scene_spec)?;
    let encoding = if ascii { PlyEncoding::Ascii } else { PlyEncoding::BinaryLittleEndian };
    let image_dir = out.join("images");
    std::fs::create_dir_all(&image_dir).map_err(|e| SlfError::from(e).context(image_dir.display()))?;
    let mut files = vec![
        (out.join("cloud.ply"), io::ply_bytes(&scene.cloud, encoding)?),
        (out.join("rig.txt"), io::rig_to_string(&scene.cameras).into_bytes()),
    ];
    for (cam, img) in scene.cameras.iter().zip(&scene.images) {
        files.push((image_dir.join(image_name(cam.id)), io::ppm_bytes(img)?));
    }
    if novel > 0 {
        let novel_dir = out.join("novel");
        std::fs::create_dir_all(&novel_dir).map_err(|e| SlfError::from(e).context(novel_dir.display()))?;
        let cams = scene_spec.rig.novel_cameras(scene_spec.bounding_radius(), novel, seed)?;
        files.push((out.join("novel_rig.txt"), io::rig_to_string(&cams).into_bytes()));
        for cam in &cams {
            let img = scene.ground_truth(&cam.model, &scene.render)?.image;
            files.push((novel_dir.join(image_name(cam.id)), io::ppm_bytes(&img)?));
        }
    }
    io::write_all_atomic(&files)?;
    eprintln!(
        "wrote {} points, {} cameras{} to {}",
        scene.cloud.len(),
        scene.cameras.len(),
        if novel > 0 { format!(" (+{novel} novel)") } else { String::new() },
        out.display()
    );
    Ok(())
}

fn fit(views: &Views, split: &SplitArgs, params: &PipelineArgs, out: &Path) -> Result<()> {
    let cfg = params.config();
    let spec = cfg.spec()?;
    cfg.fit().validate()?;
    let (cloud, cameras, images) = load_views(views)?;
    let (input, _) = camera_split(cameras.len(), split)?;
    let (cams, imgs) = select_views(&cameras, &images, &input);
    let coeffs = fit_views(&cloud, &cams, &imgs, spec, cfg.fit(), cfg.delta)?;
    write_coeffs(out, &coeffs, &spec)?;
    eprintln!("fit {} points from {} views, N = {}", cloud.len(), cams.len(), spec.count());
    Ok(())
}

fn encode(cloud: &Path, coeffs: &Path, params: &PipelineArgs, out: &Path) -> Result<()> {
    check_exists(&[cloud, coeffs])?;
    let cfg = params.config();
    let cloud = io::load_ply(cloud)?;
    let (spec, coeffs) = io::load_coefficients(coeffs)?;
    let enc = encode_stream(&cloud, &coeffs, spec, cfg.q, cfg.depth)?;
    io::write_atomic(out, &enc.stream.to_bytes())?;
    println!(
        "voxels={} total_bits={} geometry_bits={} coefficient_bits={}",
        enc.voxels.len(),
        enc.stream.total_bits(),
        enc.stream.geometry_bits(),
        enc.stream.coefficient_bits()
    );
    Ok(())
}

/// Decoded voxel centers and coefficients; world placement comes from `cloud` when given.
fn decode_file(
    path: &Path,
    cloud: Option<&PointCloud>,
) -> Result<(Vec<Vector3<f64>>, slf_codec::fitting::SlfCoefficients, BasisSpec)> {
    let bytes = std::fs::read(path).map_err(|e| SlfError::from(e).context(path.display()))?;
    let stream = SlfBitstream::from_bytes(&bytes).map_err(|e| e.context(path.display()))?;
    let (mut voxels, coeffs) = slf_codec::codec::decode_stream(&stream)?;
    voxels.frame = Some(match cloud {
        Some(c) => VoxelFrame::of_cloud(c, voxels.depth)?,
        None => VoxelFrame {
            origin: Vector3::zeros(),
            cell: 1.0,
        },
    });
    let centers = voxels.centers().expect("frame set");
    Ok((centers, coeffs, stream.header.spec))
}

fn decode(input: &Path, out: &Path, points: Option<&Path>, cloud: Option<&Path>) -> Result<()> {
    check_exists(&[input])?;
    let cloud = cloud.map(io::load_ply).transpose()?;
    let (centers, coeffs, spec) = decode_file(input, cloud.as_ref())?;
    let mut files = vec![(out.to_path_buf(), io::coefficients_to_string(&coeffs, &spec)?.into_bytes())];
    if let Some(p) = points {
        let pc = PointCloud::new(centers, None)?;
        files.push((p.to_path_buf(), io::ply_bytes(&pc, PlyEncoding::BinaryLittleEndian)?));
    }
    io::write_all_atomic(&files)?;
    eprintln!("decoded {} voxels, N = {}", coeffs.points(), spec.count());
    Ok(())
}

fn render_cmd(
    cloud: &Path,
    coeffs: Option<&Path>,
    slf: Option<&Path>,
    pose: &Pose,
    splat_radius: u32,
    out: &Path,
) -> Result<()> {
    check_exists(&[cloud])?;
    let cloud = io::load_ply(cloud)?;
    let camera = match (&pose.rig, pose.camera, pose.eye) {
        (Some(rig), Some(id), _) => io::load_rig(rig)?
            .into_iter()
            .find(|c| c.id == id)
            .ok_or_else(|| SlfError::InvalidArgument(format!("camera {id} is not in {}", rig.display())))?
            .model,
        (None, _, Some(eye)) => {
            let focal = pose.focal.unwrap_or(pose.width as f64);
            CameraModel::look_at(eye, pose.target, pose.up, focal, pose.width, pose.height)?
        }
        _ => return Err(SlfError::InvalidArgument("give --rig with --camera, or --eye".into())),
    };
    let (positions, coeffs, spec) = match (coeffs, slf) {
        (Some(c), _) => {
            let (spec, coeffs) = io::load_coefficients(c)?;
            (cloud.positions.clone(), coeffs, spec)
        }
        (None, Some(s)) => decode_file(s, Some(&cloud))?,
        (None, None) => return Err(SlfError::InvalidArgument("give --coeffs or --slf".into())),
    };
    let cfg = RenderConfig {
        splat_radius,
        ..RenderConfig::new(camera.width, camera.height)
    };
    let frame = render(&positions, &coeffs, &spec.compile(), &camera, &cfg)?;
    io::write_atomic(out, &io::ppm_bytes(&frame.image)?)
}

fn eval(views: &Views, split: &SplitArgs, coeffs: &Path, deltas: &[f64], out: Option<&Path>) -> Result<()> {
    check_exists(&[coeffs])?;
    let (cloud, cameras, images) = load_views(views)?;
    let (spec, coeffs) = io::load_coefficients(coeffs)?;
    let (_, eval_idx) = camera_split(cameras.len(), split)?;
    let (cams, imgs) = select_views(&cameras, &images, &eval_idx);
    let basis = spec.compile();
    let mut table = String::from("delta_prime,psnr,mse,samples\n");
    for &d in deltas {
        let r = slf_psnr(&coeffs, &basis, &cloud, &cams, &imgs, d).map_err(|e| e.context(format!("delta'={d}")))?;
        writeln!(table, "{d},{:.4},{:.6},{}", r.psnr, r.mse, r.samples).unwrap();
    }
    print!("{table}");
    if let Some(p) = out {
        io::write_atomic(p, table.as_bytes())?;
    }
    Ok(())
}

fn rd(config: &Path, split: Option<Split>, params: &PipelineArgs, out: Option<&Path>) -> Result<()> {
    check_exists(&[config])?;
    let text = std::fs::read_to_string(config).map_err(|e| SlfError::from(e).context(config.display()))?;
    let mut spec = io::parse_sweep(&text)?;
    params.apply(&mut spec.pipeline);
    let split = split.unwrap_or(spec.split);
    let scene = synth_scene(&spec.scene)?;
    let (input, eval_idx) = split_cameras(spec.scene.rig.circles, spec.scene.rig.per_circle, split)?;
    let (in_cams, in_imgs) = select_views(&scene.cameras, &scene.images, &input);
    let (ev_cams, ev_imgs) = select_views(&scene.cameras, &scene.images, &eval_idx);
    let inputs = SweepInputs {
        cloud: &scene.cloud,
        input_cameras: &in_cams,
        input_images: &in_imgs,
        eval_cameras: &ev_cams,
        eval_images: &ev_imgs,
    };
    let rows = rd_sweep(&inputs, &spec.pipeline, &spec.sweep.to_sweep()?)?;
    let csv = rows_to_csv(&rows);
    print!("{csv}");
    if let Some(p) = out {
        io::write_atomic(p, csv.as_bytes())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(SlfError::InvalidArgument("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| SlfError::InvalidArgument(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Synth { spec, out, novel, ascii } => synth(spec.as_deref(), out, *novel, *ascii, cli.seed),
        Command::Fit {
            views,
            split,
            params,
            out,
        } => fit(views, split, params, out),
        Command::Encode {
            cloud,
            coeffs,
            params,
            out,
        } => encode(cloud, coeffs, params, out),
        Command::Decode {
            input,
            out,
            points,
            cloud,
        } => decode(input, out, points.as_deref(), cloud.as_deref()),
        Command::Render {
            cloud,
            coeffs,
            slf,
            pose,
            splat_radius,
            out,
        } => render_cmd(cloud, coeffs.as_deref(), slf.as_deref(), pose, *splat_radius, out),
        Command::Eval {
            views,
            split,
            coeffs,
            delta_prime,
            out,
        } => eval(views, split, coeffs, delta_prime, out.as_deref()),
        Command::RdSweep {
            config,
            split,
            params,
            out,
        } => rd(config, *split, params, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: invalid-argument: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.category());
            ExitCode::FAILURE
        }
    }
}
