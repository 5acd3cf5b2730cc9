use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use kppca::dual::{
    dual_latent_map, dual_reconstruct, dual_sample, explained_variance, sample_from_normal,
};
use kppca::io::{
    load_dual, save_csv, save_model, Dataset, DatasetHandle, PreimageMetadata, RunMetadata,
    IMAGE_MAGIC,
};
use kppca::preimage::preimage;
use kppca::{
    DualModel, ErrorClass, KernelSample, KernelSpec, KppcaError, LatentChoice, PreimageConfig,
    SampleOrigin, SeedSource, TrainingSet, WeightMode,
};
use nalgebra::{DMatrix, DVector};

use crate::args::{
    DataArgs, FitArgs, GenerateArgs, KernelArg, PreimageArgs, ProjectArgs, ReconstructArgs,
    ReportArgs, ToyArgs,
};
use crate::plot::{image_grid_pgm, scatter_svg, square_side, Series};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(KppcaError),
}

impl From<KppcaError> for CliError {
    fn from(e: KppcaError) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(e) => match e.class() {
                ErrorClass::Io | ErrorClass::Data => 3,
                ErrorClass::Numeric => 4,
            },
        }
    }

    pub fn describe(&self) -> String {
        match self {
            CliError::Usage(m) => format!("usage error: {m}"),
            CliError::Lib(e) => match e.class() {
                ErrorClass::Io => format!("io error: {e}"),
                ErrorClass::Data => format!("data error: {e}"),
                ErrorClass::Numeric => format!("numeric error: {e}"),
            },
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Lib(KppcaError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn is_idx_images(path: &Path) -> CliResult<bool> {
    let mut head = [0u8; 4];
    let mut f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut read = 0;
    while read < 4 {
        match f.read(&mut head[read..]).map_err(|e| io_err(path, e))? {
            0 => return Ok(false),
            n => read += n,
        }
    }
    Ok(u32::from_be_bytes(head) == IMAGE_MAGIC)
}

fn load_data(args: &DataArgs) -> CliResult<Dataset> {
    let mut handle = if is_idx_images(&args.data)? {
        let labels = args.labels.as_ref().ok_or_else(|| {
            CliError::Usage(format!(
                "{} is an IDX image file; pass --labels",
                args.data.display()
            ))
        })?;
        let mut h = DatasetHandle::idx(&args.data, labels);
        h.filter = args.digits.clone();
        h
    } else {
        if args.digits.is_some() || args.labels.is_some() {
            return Err(CliError::Usage(
                "--labels and --digits apply to IDX input only".into(),
            ));
        }
        DatasetHandle::csv(&args.data)
    };
    handle.limit = args.limit.map(|l| l as usize);
    Ok(handle.load()?)
}

fn create_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn header(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn check_input_dim(m: &DualModel, points: &DMatrix<f64>) -> CliResult<()> {
    if points.nrows() != m.ts.input_dim() {
        return Err(KppcaError::DimensionMismatch {
            expected: m.ts.input_dim(),
            found: points.nrows(),
        }
        .into());
    }
    Ok(())
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn metadata(command: &str, seed: u64, m: &DualModel) -> CliResult<RunMetadata> {
    Ok(RunMetadata::new(
        command,
        seed,
        m.spec,
        m.q,
        m.sigma2,
        explained_variance(m)?,
    ))
}

pub fn fit(args: FitArgs) -> CliResult<()> {
    let ds = load_data(&args.data)?;
    let spec = match args.kernel {
        KernelArg::Linear => KernelSpec::linear(),
        KernelArg::Rbf => KernelSpec::rbf(args.gamma)?,
    };
    let latent = match (args.latent.q, args.latent.sigma2) {
        (Some(q), _) => LatentChoice::Q(q),
        (None, Some(s2)) => LatentChoice::Sigma2(s2),
        (None, None) => unreachable!("clap requires one of --q / --sigma2"),
    };
    let model = DualModel::fit(spec, TrainingSet::new(ds.points)?, latent)?;

    create_out(&args.out)?;
    save_model(args.out.join("model.kppca"), &model.clone().into())?;
    let mut meta = metadata("fit", args.seed, &model)?;
    meta.inputs.push(path_string(&args.data.data));
    meta.outputs.push("model.kppca".into());
    meta.save(args.out.join("fit_metadata.json"))?;
    println!(
        "fitted {} points: q = {}, sigma2 = {}, explained variance = {}",
        model.n_samples(),
        model.q,
        model.sigma2,
        meta.explained_variance
    );
    Ok(())
}

pub fn project(args: ProjectArgs) -> CliResult<()> {
    let m = load_dual(&args.model)?;
    let ds = load_data(&args.data)?;
    check_input_dim(&m, &ds.points)?;
    let mut codes = DMatrix::zeros(m.q, ds.points.ncols());
    for (j, x) in ds.points.column_iter().enumerate() {
        let h = dual_latent_map(&m, &m.observe(x.as_slice())?)?;
        codes.set_column(j, &h);
    }
    create_out(&args.out)?;
    save_csv(args.out.join("latent.csv"), &header("h", m.q), &codes)?;
    let mut meta = metadata("project", 0, &m)?;
    meta.inputs = vec![path_string(&args.model), path_string(&args.data.data)];
    meta.outputs.push("latent.csv".into());
    meta.save(args.out.join("project_metadata.json"))?;
    Ok(())
}

fn preimage_config(args: &PreimageArgs, n: usize) -> CliResult<PreimageConfig> {
    let epsilon = args.epsilon.unwrap_or(1e-3 * n as f64);
    Ok(PreimageConfig::new(
        epsilon,
        args.clip_negative.unwrap_or(true),
    )?)
}

fn preimage_metadata(cfg: &PreimageConfig, mode: WeightMode) -> PreimageMetadata {
    PreimageMetadata {
        weights: mode,
        epsilon: cfg.epsilon,
        clip_negative: cfg.clip_negative,
    }
}

/// Projects every column of `points` and maps the reconstruction back to
/// input space. Uncentered weights use each input's own kernel mean.
fn reconstruct_points(
    m: &DualModel,
    points: &DMatrix<f64>,
    mode: WeightMode,
    cfg: &PreimageConfig,
) -> CliResult<DMatrix<f64>> {
    let mut out = DMatrix::zeros(points.nrows(), points.ncols());
    for (j, x) in points.column_iter().enumerate() {
        let x = x.as_slice();
        let h = dual_latent_map(m, &m.observe(x)?)?;
        let rec = dual_reconstruct(m, &h)?;
        let own_mean = m.kernel_mean(x)?;
        out.set_column(j, &preimage(m, &rec, mode, Some(own_mean), cfg)?);
    }
    Ok(out)
}

pub fn reconstruct(args: ReconstructArgs) -> CliResult<()> {
    let m = load_dual(&args.model)?;
    let ds = load_data(&args.data)?;
    check_input_dim(&m, &ds.points)?;
    let cfg = preimage_config(&args.preimage, m.n_samples())?;
    let mode = args.preimage.weights.into();
    let out = reconstruct_points(&m, &ds.points, mode, &cfg)?;

    create_out(&args.out)?;
    save_csv(
        args.out.join("reconstructed.csv"),
        &header("x", out.nrows()),
        &out,
    )?;
    let mut meta = metadata("reconstruct", 0, &m)?;
    meta.preimage = Some(preimage_metadata(&cfg, mode));
    meta.inputs = vec![path_string(&args.model), path_string(&args.data.data)];
    meta.outputs.push("reconstructed.csv".into());
    meta.save(args.out.join("reconstruct_metadata.json"))?;
    Ok(())
}

fn linspace(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if n == 1 {
        0.5 * (lo + hi)
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

/// Kernel-space samples `B ũ` with `ũ` zero except for its first two
/// entries, which sweep `range` on an `a×b` grid (row-major, `a` across).
fn grid_samples(
    m: &DualModel,
    (a, b): (usize, usize),
    (lo, hi): (f64, f64),
    seed: u64,
) -> CliResult<Vec<KernelSample>> {
    let n = m.n_samples();
    let mut out = Vec::with_capacity(a * b);
    for r in 0..b {
        for c in 0..a {
            let mut u = DVector::zeros(n);
            u[0] = linspace(lo, hi, c, a);
            if n > 1 {
                // Top row of the image grid is the high end of the sweep.
                u[1] = linspace(hi, lo, r, b);
            }
            let index = out.len() as u64;
            out.push(KernelSample::new(
                sample_from_normal(m, &u)?,
                SampleOrigin::Generated { seed, index },
            ));
        }
    }
    Ok(out)
}

pub fn generate(args: GenerateArgs) -> CliResult<()> {
    let m = load_dual(&args.model)?;
    let n = m.n_samples();
    let d = m.ts.input_dim();
    let cfg = preimage_config(&args.preimage, n)?;
    let mode: WeightMode = args.preimage.weights.into();
    let image_side = square_side(d);
    if image_side.is_none() && d >= 2 && (args.plot_dims.0 >= d || args.plot_dims.1 >= d) {
        return Err(CliError::Usage(format!(
            "--plot-dims {},{} out of range for {d}-dimensional inputs",
            args.plot_dims.0, args.plot_dims.1
        )));
    }

    let samples = match args.grid {
        Some(grid) => grid_samples(&m, grid, args.latent_range, args.seed)?,
        None => dual_sample(&m, &SeedSource::new(args.seed), args.count),
    };
    let mut kc = DMatrix::zeros(n, samples.len());
    let mut points = DMatrix::zeros(d, samples.len());
    for (j, s) in samples.iter().enumerate() {
        kc.set_column(j, &s.kc_vec);
        points.set_column(j, &preimage(&m, s, mode, None, &cfg)?);
    }

    create_out(&args.out)?;
    let mut outputs = vec!["generated_kc.csv".to_string(), "generated.csv".to_string()];
    save_csv(args.out.join("generated_kc.csv"), &header("k", n), &kc)?;
    save_csv(args.out.join("generated.csv"), &header("x", d), &points)?;

    if let Some(side) = image_side {
        let cols = match args.grid {
            Some((a, _)) => a,
            None => (samples.len() as f64).sqrt().ceil() as usize,
        };
        let path = args.out.join("generated.pgm");
        fs::write(&path, image_grid_pgm(&points, side, cols)).map_err(|e| io_err(&path, e))?;
        outputs.push("generated.pgm".into());
    } else if d >= 2 {
        let recon = reconstruct_points(&m, m.ts.points(), mode, &cfg)?;
        let limit = m.kpca_limit();
        let kpca = reconstruct_points(&limit, m.ts.points(), mode, &cfg)?;
        let svg = scatter_svg(
            &[
                Series {
                    label: "generated",
                    color: "grey",
                    points: &points,
                },
                Series {
                    label: "originals",
                    color: "black",
                    points: m.ts.points(),
                },
                Series {
                    label: "reconstructions",
                    color: "blue",
                    points: &recon,
                },
                Series {
                    label: "KPCA reconstructions",
                    color: "red",
                    points: &kpca,
                },
            ],
            args.plot_dims,
        );
        let path = args.out.join("generated.svg");
        fs::write(&path, svg).map_err(|e| io_err(&path, e))?;
        outputs.push("generated.svg".into());
    }

    let mut meta = metadata("generate", args.seed, &m)?;
    meta.preimage = Some(preimage_metadata(&cfg, mode));
    meta.inputs.push(path_string(&args.model));
    meta.outputs = outputs;
    meta.save(args.out.join("generate_metadata.json"))?;
    Ok(())
}

pub fn report(args: ReportArgs) -> CliResult<()> {
    let m = load_dual(&args.model)?;
    let ev = explained_variance(&m)?;
    let eigs = m.eigenvalues();
    let n = m.n_samples();
    let total: f64 = eigs.iter().sum();

    println!("kernel: {}", m.spec);
    println!("N: {n}");
    println!("q: {}", m.q);
    println!("sigma2: {}", m.sigma2);
    println!("explained_variance: {ev}");
    println!("spectrum (component, eigenvalue, eigenvalue/N, cumulative share):");
    let mut table = DMatrix::zeros(4, n);
    let mut cumulative = 0.0;
    for (p, &l) in eigs.iter().enumerate() {
        cumulative += l;
        let share = if total > 0.0 { cumulative / total } else { 0.0 };
        table.set_column(
            p,
            &DVector::from_vec(vec![(p + 1) as f64, l, l / n as f64, share]),
        );
        println!("{:>5} {l:>24e} {:>24e} {share:>10.6}", p + 1, l / n as f64);
    }
    if let Some(dir) = args.out {
        create_out(&dir)?;
        let cols = [
            "component",
            "eigenvalue",
            "eigenvalue_over_n",
            "cumulative_share",
        ];
        let cols: Vec<String> = cols.iter().map(|s| s.to_string()).collect();
        save_csv(dir.join("spectrum.csv"), &cols, &table)?;
        let mut meta = metadata("report", 0, &m)?;
        meta.inputs.push(path_string(&args.model));
        meta.outputs.push("spectrum.csv".into());
        meta.save(dir.join("report_metadata.json"))?;
    }
    Ok(())
}

pub fn toy(args: ToyArgs) -> CliResult<()> {
    if args.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    if !(args.radius.is_finite() && args.noise.is_finite() && args.noise >= 0.0) {
        return Err(CliError::Usage(
            "--radius and --noise must be finite, noise >= 0".into(),
        ));
    }
    let x = kppca::toy::two_arcs(
        args.count,
        args.radius,
        args.noise,
        &SeedSource::new(args.seed),
    );
    create_out(&args.out)?;
    let path: PathBuf = args.out.join("toy.csv");
    save_csv(&path, &["x".to_string(), "y".to_string()], &x)?;
    println!("wrote {}", path.display());
    Ok(())
}
