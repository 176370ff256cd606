pub mod args;
pub mod config;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use stitchseg::ensemble::Aggregator;
use stitchseg::eval::{
    evaluate_manifest, run_pipeline, BackendSource, HttpSource, IoUReport, Manifest, MockSource,
    PipelineConfig, SceneInputs,
};
use stitchseg::overlay::render_overlay;
use stitchseg::raster::{load_image, load_mask, save_image, save_mask, BinaryMask};
use stitchseg::segmenter::{MockSegmenter, Segmenter};
use stitchseg::stitch::stitch_masks;
use stitchseg::{morphology, with_jobs};

use args::{Command, EvaluateArgs, SegmentArgs};
use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config values. Exit code 2.
    Usage(String),
    /// Anything that went wrong while running. Exit code 1.
    Runtime(stitchseg::Error),
}

impl CliError {
    pub fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Runtime(e) => write!(f, "{e}"),
        }
    }
}

impl From<stitchseg::Error> for CliError {
    fn from(e: stitchseg::Error) -> Self {
        CliError::Runtime(e)
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Segment(a) => segment(a),
        Command::Evaluate(a) => evaluate(a, false),
        Command::Compare(a) => evaluate(a, true),
    }
}

/// Mock truth may be given for the query only (stitched with the key mask)
/// or for the whole stitched canvas.
fn mock_truth(path: &Path, key_mask: &BinaryMask, stitched_dims: (u32, u32)) -> Result<BinaryMask, CliError> {
    let truth = load_mask(path)?;
    if truth.dims() == stitched_dims {
        return Ok(truth);
    }
    if truth.height() == key_mask.height() {
        if let Ok(s) = stitch_masks(key_mask, &truth) {
            if s.dims() == stitched_dims {
                return Ok(s);
            }
        }
    }
    Err(CliError::Runtime(stitchseg::Error::Dimensions(format!(
        "mock truth {} is {}x{}; expected the query size or the stitched size {}x{}",
        path.display(),
        truth.width(),
        truth.height(),
        stitched_dims.0,
        stitched_dims.1
    ))))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| {
            CliError::Runtime(stitchseg::Error::Io {
                path: dir.to_path_buf(),
                source: e,
            })
        }),
        _ => Ok(()),
    }
}

fn segment(args: SegmentArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve(&args.common)?;
    cfg.outputs.out = Some(args.out.clone());
    cfg.outputs.overlay = args.overlay.clone();
    if cfg.is_mock() && args.mock_truth.is_none() {
        return Err(CliError::Usage("the mock backend needs --mock-truth".into()));
    }
    eprintln!("config: {}", cfg.echo());

    let inputs = SceneInputs {
        key_image: load_image(&args.key)?,
        key_mask: load_mask(&args.key_mask)?,
        query_image: load_image(&args.query)?,
    };
    let pipeline = cfg.pipeline()?;
    let backend: Box<dyn Segmenter> = match &args.mock_truth {
        Some(path) if cfg.is_mock() => {
            let kw = inputs.key_image.width();
            let dims = (kw + inputs.query_image.width(), inputs.key_image.height());
            Box::new(MockSegmenter::new(mock_truth(path, &inputs.key_mask, dims)?))
        }
        _ => Box::new(cfg.backend.http_client()?),
    };
    let output = with_jobs(cfg.jobs, || run_pipeline(backend.as_ref(), &inputs, &pipeline, cfg.master_seed))??;
    let cell = &output.cells[0];
    let ensemble = output.ensemble(cell.strategy).expect("ensemble for configured strategy");

    ensure_parent(&args.out)?;
    save_mask(if args.raw { &cell.raw } else { &cell.processed }, &args.out)?;
    if let Some(path) = &args.overlay {
        let shown = if args.raw {
            cell.stitched_raw.clone()
        } else {
            morphology::close(&cell.stitched_raw, &pipeline.structuring_element)
        };
        let prompts: Vec<_> = match cell.aggregator {
            Aggregator::Best => vec![&ensemble.prompts()[ensemble.best_index()]],
            Aggregator::Cwmv => ensemble.prompts().iter().collect(),
        };
        ensure_parent(path)?;
        save_image(&render_overlay(&output.stitched, &shown, &prompts)?, path)?;
    }
    let best = &ensemble.runs()[ensemble.best_index()];
    println!(
        "wrote {} ({} foreground px); best run {} confidence {:.4}",
        args.out.display(),
        if args.raw { cell.raw.count_foreground() } else { cell.processed.count_foreground() },
        ensemble.best_index(),
        best.confidence
    );
    Ok(())
}

fn write_report(report: &IoUReport, dir: &Path) -> Result<(), CliError> {
    ensure_parent(&dir.join("report.csv"))?;
    let create = |name: &str| {
        let path = dir.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| stitchseg::Error::Io { path, source: e })
    };
    report.write_report_csv(create("report.csv")?)?;
    report.write_summary_csv(create("summary.csv")?)?;
    Ok(())
}

fn evaluate(args: EvaluateArgs, full_matrix: bool) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve(&args.common)?;
    cfg.outputs.out_dir = Some(args.out_dir.clone());
    eprintln!("config: {}", cfg.echo());

    let mut manifest = Manifest::load(&args.manifest)?;
    if let (Some(image), Some(mask)) = (&args.shared_key, &args.shared_key_mask) {
        manifest = manifest.with_shared_key(image.clone(), mask.clone())?;
    }
    let mut pipeline: PipelineConfig = cfg.pipeline()?;
    if full_matrix {
        pipeline = pipeline.full_matrix();
    }
    let source: Box<dyn BackendSource> = if cfg.is_mock() {
        Box::new(MockSource)
    } else {
        Box::new(HttpSource(cfg.backend.http_client()?))
    };
    let mut report = with_jobs(cfg.jobs, || {
        evaluate_manifest(source.as_ref(), &manifest, &pipeline, cfg.averaging)
    })??;
    if !full_matrix {
        if let Some(variant) = args.variant {
            report.cells.retain(|c| c.key.variant == variant);
        }
    }
    for f in &report.failures {
        eprintln!("scene {} failed: {}", f.scene_id, f.message);
    }
    write_report(&report, &args.out_dir)?;
    print!("{}", report.matrix_table());
    println!(
        "{} scenes, {} failed; reports in {}",
        manifest.len(),
        report.failures.len(),
        args.out_dir.display()
    );
    Ok(())
}
