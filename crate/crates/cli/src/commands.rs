//! Subcommand bodies. Each returns the text printed on stdout; files go to
//! the paths it is given.

use std::fmt::Write as _;
use std::path::Path;

use latop::modelsel::render_node;
use latop::{
    basis_of_param, effective_window, error_counts, hierarchical_slda, iou, property_report, random_init,
    slda, Boundary, Caps, ParamPoint,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{read_text, write_text, CliError, CliResult};
use crate::manifest::Manifest;

/// Stream of the seed reserved for the starting point, so that it does not
/// replay the draws descent makes from the same seed.
const INIT_STREAM: u64 = 1;

fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let d = Sha256::digest(&bytes);
    Ok(d.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

pub fn read_theta(path: &Path, caps: Caps) -> CliResult<ParamPoint> {
    ParamPoint::parse(&read_text(path)?, caps).map_err(|e| CliError::in_file(path, e))
}

/// Starting point for a class, drawn from the run seed.
pub fn initial_point(spec: &latop::ClassSpec, seed: u64) -> ParamPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INIT_STREAM);
    random_init(spec, &mut rng)
}

/// Trains per `cfg` on the manifest's pairs and writes `theta.txt`,
/// `trace.csv`, `summary.txt` and `provenance.txt` (plus `selection.txt`
/// under window selection) into the configured output directory.
pub fn train(cfg: &RunConfig, manifest_path: &Path) -> CliResult<String> {
    let manifest = Manifest::read(manifest_path)?;
    let data = manifest.load(cfg.boundary)?;
    let out = &cfg.output;

    let (theta, trace, summary, selection) = match &cfg.class {
        Some(class) => {
            let scfg = cfg.slda_config(data.len())?;
            let theta0 = initial_point(class, cfg.seed);
            let r = slda(&theta0, &data, &scfg)?;
            let summary = format!("mode: slda\ntrain_pairs: {}\n{}", data.len(), r.to_text(&scfg));
            (r.best_param.clone(), r.trace.to_csv(), summary, None)
        }
        None => {
            let lattice = cfg
                .lattice
                .as_ref()
                .expect("config without class selects windows");
            let ocfg = cfg.outer_config(data.len())?.expect("lattice settings present");
            let sel = hierarchical_slda(&lattice.spec, &data, &ocfg)?;
            let inner_cfg = match &ocfg.inner {
                latop::InnerFit::Slda(c) => latop::SldaConfig {
                    seed: latop::modelsel::node_seed(cfg.seed, &sel.best.windows),
                    ..c.clone()
                },
                latop::InnerFit::Lda { epochs } => latop::SldaConfig {
                    batch_size: sel.train_indices.len(),
                    neighbors: latop::NeighborCount::Exhaustive,
                    epochs: *epochs,
                    seed: 0,
                    require_improvement: false,
                },
            };
            let summary = format!(
                "mode: window-selection\ntrain_pairs: {}\nvalidation_pairs: {}\nwindows: {}\nvalidation_error: {}\n\
                 nodes_visited: {}\n{}",
                sel.train_indices.len(),
                sel.validation_indices.len(),
                render_node(&sel.best.windows),
                sel.best.validation_error(),
                sel.visited.len(),
                sel.best.fit.to_text(&inner_cfg)
            );
            (
                sel.best.fit.best_param.clone(),
                sel.best.fit.trace.to_csv(),
                summary,
                Some(sel.report()),
            )
        }
    };

    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_text(&out.join("theta.txt"), &theta.to_text())?;
    write_text(&out.join("trace.csv"), &trace)?;
    write_text(&out.join("summary.txt"), &summary)?;
    if let Some(report) = &selection {
        write_text(&out.join("selection.txt"), report)?;
    }

    let mut prov = String::new();
    let _ = writeln!(prov, "command: train");
    let _ = writeln!(prov, "tool: latop {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(prov, "manifest: {}", manifest_path.display());
    let _ = writeln!(prov, "manifest_sha256: {}", file_digest(manifest_path)?);
    for (a, b) in &manifest.pairs {
        let _ = writeln!(
            prov,
            "pair: {}\t{}\t{}",
            a.display(),
            file_digest(a)?,
            file_digest(b)?
        );
    }
    let _ = writeln!(prov, "config:");
    prov.push_str(&cfg.to_text());
    write_text(&out.join("provenance.txt"), &prov)?;
    Ok(summary)
}

/// Pooled pixel error and IoU of `theta` over the manifest.
pub fn eval(theta_path: &Path, manifest_path: &Path, boundary: Boundary, caps: Caps) -> CliResult<String> {
    let theta = read_theta(theta_path, caps)?;
    let data = Manifest::read(manifest_path)?.load(boundary)?;
    let counts = error_counts(&theta, data.pairs());
    Ok(format!(
        "pairs: {}\npixels: {}\nmismatched: {}\nerror: {}\niou: {}\n",
        data.len(),
        counts.total,
        counts.mismatched,
        counts.rate(),
        iou(&theta, data.pairs())
    ))
}

/// Effective window, basis intervals in canonical order, then the structural
/// flags.
pub fn basis(theta_path: &Path, caps: Caps) -> CliResult<String> {
    let theta = read_theta(theta_path, caps)?;
    let w = effective_window(&theta, caps.table)?;
    let b = basis_of_param(&theta, caps)?;
    Ok(format!(
        "effective_window: {w}\nintervals: {}\n{}{}",
        b.len(),
        b.to_text(),
        property_report(&b)
    ))
}

struct TraceRow {
    epoch: usize,
    batch_error: f64,
    full_error: Option<f64>,
    digest: String,
}

fn parse_trace(text: &str) -> latop::Result<Vec<TraceRow>> {
    let bad = |line: usize, msg: &str| latop::Error::Parse {
        line,
        msg: msg.into(),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "epoch,batch,step,batch_error,full_error_if_epoch_end,theta_digest")) => {}
        _ => return Err(bad(1, "unexpected header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(i + 1, "expected 6 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
        rows.push(TraceRow {
            epoch: f[0].parse().map_err(|_| bad(i + 1, "bad epoch"))?,
            batch_error: num(f[3])?,
            full_error: if f[4].is_empty() { None } else { Some(num(f[4])?) },
            digest: f[5].to_string(),
        });
    }
    Ok(rows)
}

/// Per-epoch digest of a trace CSV.
pub fn inspect_trace(path: &Path) -> CliResult<String> {
    let rows = parse_trace(&read_text(path)?).map_err(|e| CliError::in_file(path, e))?;
    let mut out = String::new();
    let epochs = rows.last().map_or(0, |r| r.epoch);
    let _ = writeln!(out, "steps: {}", rows.len());
    let _ = writeln!(out, "epochs: {epochs}");
    let mut best: Option<(f64, usize)> = None;
    for r in &rows {
        if let Some(e) = r.full_error {
            let mean_batch = {
                let b: Vec<f64> = rows
                    .iter()
                    .filter(|s| s.epoch == r.epoch)
                    .map(|s| s.batch_error)
                    .collect();
                b.iter().sum::<f64>() / b.len() as f64
            };
            let _ = writeln!(
                out,
                "epoch {}: full_error {e} mean_batch_error {mean_batch} theta {}",
                r.epoch, r.digest
            );
            if best.is_none_or(|(b, _)| e < b) {
                best = Some((e, r.epoch));
            }
        }
    }
    let mut digests: Vec<&str> = rows.iter().map(|r| r.digest.as_str()).collect();
    digests.sort_unstable();
    digests.dedup();
    let _ = writeln!(out, "distinct_points: {}", digests.len());
    if let Some((e, epoch)) = best {
        let _ = writeln!(out, "lowest_full_error: {e} (epoch {epoch})");
    }
    Ok(out)
}
