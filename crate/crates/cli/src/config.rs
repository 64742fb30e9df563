//! Run configuration: a flat `key = value` document.
//!
//! One assignment per line, `#` starts a comment, keys may appear once.
//! Unknown keys are rejected. Command-line flags named after the keys
//! (`batch_size` is `--batch-size`) override the file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use latop::{
    Boundary, Caps, ClassSpec, InnerFit, NeighborCount, OuterConfig, SldaConfig, Validation, Window,
    WindowLatticeSpec,
};

use crate::error::{CliError, CliResult};

/// Every accepted key with its help text.
pub const KEYS: &[(&str, &str)] = &[
    ("class", "erosion-sup, interval-sup or seq-tables"),
    ("window", "class window: RxC (centered rectangle) or {(r,c),...}"),
    ("k", "number of erosions or intervals in the supremum"),
    ("layers", "seq-tables layer windows separated by ' | '"),
    ("batch_size", "pairs per batch, or 'all' [default: all]"),
    (
        "neighbors",
        "neighbors per step, or 'exhaustive' [default: exhaustive]",
    ),
    ("epochs", "descent epochs [default: 50]"),
    ("seed", "seed for every random choice [default: 0]"),
    (
        "require_improvement",
        "stay put unless a neighbor improves the batch error [default: false]",
    ),
    ("boundary", "zero-pad or toroidal [default: zero-pad]"),
    ("table_cap", "largest window tabulated [default: 20]"),
    (
        "basis_cap",
        "largest window whose basis is extracted [default: 16]",
    ),
    ("output", "output directory [default: run]"),
    ("max_window", "enables window selection: the largest layer window"),
    ("depth", "number of layers under window selection [default: 1]"),
    (
        "outer_neighbors",
        "window-lattice neighbors sampled per outer step [default: 4]",
    ),
    ("outer_epochs", "outer steps [default: 10]"),
    (
        "validation_fraction",
        "share of pairs held out for validation [default: 0.25]",
    ),
    ("inner", "fit at each node: slda or lda [default: slda]"),
];

const LATTICE_ONLY: &[&str] = &[
    "depth",
    "outer_neighbors",
    "outer_epochs",
    "validation_fraction",
    "inner",
];

/// Key assignments with where each came from, for error messages.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> CliResult<RawConfig> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let data = line.split('#').next().unwrap_or("").trim();
            if data.is_empty() {
                continue;
            }
            let (k, v) = data
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected key = value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let origin = format!("line {}", i + 1);
            if raw.entries.contains_key(k) {
                return Err(CliError::config(format!("{origin}: duplicate key {k:?}")));
            }
            raw.insert(k, v, origin)?;
        }
        Ok(raw)
    }

    fn insert(&mut self, key: &str, value: &str, origin: String) -> CliResult<()> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(CliError::config(format!("{origin}: unknown key {key:?}")));
        }
        if value.is_empty() {
            return Err(CliError::config(format!("{origin}: empty value for {key:?}")));
        }
        self.entries.insert(key.to_string(), (value.to_string(), origin));
        Ok(())
    }

    /// Flag values replace file values.
    pub fn set_flag(&mut self, key: &str, value: &str) -> CliResult<()> {
        self.insert(key, value, format!("flag --{}", key.replace('_', "-")))
    }

    fn get(&self, key: &str) -> Option<&(String, String)> {
        self.entries.get(key)
    }

    fn value<T>(&self, key: &str, default: T, parse: impl Fn(&str) -> Option<T>) -> CliResult<T> {
        match self.get(key) {
            None => Ok(default),
            Some((v, origin)) => {
                parse(v).ok_or_else(|| CliError::config(format!("{origin}: bad value {v:?} for {key}")))
            }
        }
    }

    fn required<T>(&self, key: &str, parse: impl Fn(&str) -> Option<T>) -> CliResult<T> {
        if self.get(key).is_none() {
            return Err(CliError::config(format!("missing key {key:?}")));
        }
        self.value(key, None, |v| parse(v).map(Some))
            .map(|v| v.expect("present"))
    }

    fn reject(&self, keys: &[&str], why: &str) -> CliResult<()> {
        for k in keys {
            if let Some((_, origin)) = self.get(k) {
                return Err(CliError::config(format!("{origin}: {k} {why}")));
            }
        }
        Ok(())
    }
}

pub fn parse_window(s: &str) -> Option<Window> {
    if let Some((r, c)) = s.split_once(['x', 'X']) {
        if let (Ok(r), Ok(c)) = (r.trim().parse(), c.trim().parse()) {
            return Window::centered_rect(r, c).ok();
        }
    }
    Window::parse(s).ok()
}

fn parse_layers(s: &str) -> Option<Vec<Window>> {
    s.split('|').map(|w| parse_window(w.trim())).collect()
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSize {
    All,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerKind {
    Slda,
    Lda,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSettings {
    pub spec: WindowLatticeSpec,
    pub initial: Option<Vec<Window>>,
    pub neighbors: usize,
    pub epochs: usize,
    pub validation_fraction: f64,
    pub inner: InnerKind,
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// `None` only under window selection, where nodes define the class.
    pub class: Option<ClassSpec>,
    pub batch_size: BatchSize,
    pub neighbors: NeighborCount,
    pub epochs: usize,
    pub seed: u64,
    pub require_improvement: bool,
    pub boundary: Boundary,
    pub caps: Caps,
    pub output: PathBuf,
    pub lattice: Option<LatticeSettings>,
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> CliResult<RunConfig> {
        let caps = Caps {
            table: raw.value("table_cap", Caps::default().table, |v| v.parse().ok())?,
            basis: raw.value("basis_cap", Caps::default().basis, |v| v.parse().ok())?,
        };
        if caps.table > latop::lattice::MAX_WINDOW_BITS || caps.basis > caps.table {
            return Err(CliError::config(format!(
                "caps must satisfy basis_cap <= table_cap <= {}",
                latop::lattice::MAX_WINDOW_BITS
            )));
        }
        let class_name = raw.value("class", None, |v| {
            ["erosion-sup", "interval-sup", "seq-tables"]
                .contains(&v)
                .then(|| Some(v.to_string()))
        })?;
        let layers = raw.value("layers", None, |v| parse_layers(v).map(Some))?;

        let (class, lattice) = if raw.get("max_window").is_some() {
            if class_name.as_deref().is_some_and(|c| c != "seq-tables") {
                return Err(CliError::config("window selection requires class = seq-tables"));
            }
            raw.reject(&["window", "k"], "does not apply under window selection")?;
            let max_window = raw.required("max_window", parse_window)?;
            let depth = raw.value("depth", layers.as_ref().map_or(1, Vec::len), |v| v.parse().ok())?;
            let spec = WindowLatticeSpec::new(max_window, depth);
            spec.validate(caps.table)?;
            let settings = LatticeSettings {
                spec,
                initial: layers,
                neighbors: raw.value("outer_neighbors", 4, |v| v.parse().ok().filter(|&n| n > 0))?,
                epochs: raw.value("outer_epochs", 10, |v| v.parse().ok().filter(|&n| n > 0))?,
                validation_fraction: raw.value("validation_fraction", 0.25, |v| {
                    v.parse().ok().filter(|f: &f64| *f > 0.0 && *f < 1.0)
                })?,
                inner: raw.value("inner", InnerKind::Slda, |v| match v {
                    "slda" => Some(InnerKind::Slda),
                    "lda" => Some(InnerKind::Lda),
                    _ => None,
                })?,
            };
            (None, Some(settings))
        } else {
            raw.reject(LATTICE_ONLY, "requires max_window")?;
            let spec = match class_name.as_deref() {
                None => return Err(CliError::config("missing key \"class\"")),
                Some("seq-tables") => {
                    raw.reject(&["window", "k"], "does not apply to seq-tables")?;
                    let layers = layers.ok_or_else(|| CliError::config("seq-tables needs layers"))?;
                    ClassSpec::seq_tables(layers)?
                }
                Some(kind) => {
                    raw.reject(&["layers"], "applies only to seq-tables")?;
                    let window = raw.required("window", parse_window)?;
                    let k = raw.required("k", |v| v.parse().ok())?;
                    if kind == "erosion-sup" {
                        ClassSpec::erosion_sup(window, k)?
                    } else {
                        ClassSpec::interval_sup(window, k)?
                    }
                }
            };
            spec.validate(caps)?;
            (Some(spec), None)
        };

        Ok(RunConfig {
            class,
            batch_size: raw.value("batch_size", BatchSize::All, |v| match v {
                "all" => Some(BatchSize::All),
                _ => v.parse().ok().filter(|&b| b > 0).map(BatchSize::Fixed),
            })?,
            neighbors: raw.value("neighbors", NeighborCount::Exhaustive, |v| match v {
                "exhaustive" => Some(NeighborCount::Exhaustive),
                _ => v.parse().ok().filter(|&n| n > 0).map(NeighborCount::Sampled),
            })?,
            epochs: raw.value("epochs", 50, |v| v.parse().ok().filter(|&e| e > 0))?,
            seed: raw.value("seed", 0, |v| v.parse().ok())?,
            require_improvement: raw.value("require_improvement", false, parse_bool)?,
            boundary: raw.value("boundary", Boundary::ZeroPad, |v| Boundary::parse(v).ok())?,
            caps,
            output: raw.value("output", PathBuf::from("run"), |v| Some(PathBuf::from(v)))?,
            lattice,
        })
    }

    /// Descent settings for `n` training pairs.
    pub fn slda_config(&self, n: usize) -> CliResult<SldaConfig> {
        let cfg = SldaConfig {
            batch_size: match self.batch_size {
                BatchSize::All => n,
                BatchSize::Fixed(b) => b,
            },
            neighbors: self.neighbors,
            epochs: self.epochs,
            seed: self.seed,
            require_improvement: self.require_improvement,
        };
        cfg.validate(n).map_err(|e| CliError::config(e.to_string()))?;
        Ok(cfg)
    }

    /// Outer settings; `n_train` is the number of pairs the inner fit sees.
    pub fn outer_config(&self, n_total: usize) -> CliResult<Option<OuterConfig>> {
        let Some(l) = &self.lattice else { return Ok(None) };
        let held_out = (n_total as f64 * l.validation_fraction).round() as usize;
        let n_train = n_total.saturating_sub(held_out);
        if held_out == 0 || n_train == 0 {
            return Err(CliError::config(format!(
                "validation_fraction {} of {n_total} pairs leaves an empty split",
                l.validation_fraction
            )));
        }
        let inner = match l.inner {
            InnerKind::Slda => InnerFit::Slda(self.slda_config(n_train)?),
            InnerKind::Lda => InnerFit::Lda { epochs: self.epochs },
        };
        Ok(Some(OuterConfig {
            neighbors: l.neighbors,
            epochs: l.epochs,
            inner,
            seed: self.seed,
            validation: Validation::Fraction(l.validation_fraction),
            initial: l.initial.clone(),
        }))
    }

    /// Resolved settings, one `key = value` per line, defaults included.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        match &self.class {
            Some(ClassSpec::ErosionSup { window, k }) | Some(ClassSpec::IntervalSup { window, k }) => {
                kv("class", self.class.as_ref().expect("some").kind().into());
                kv("window", window.to_string());
                kv("k", k.to_string());
            }
            Some(ClassSpec::SeqTables { windows }) => {
                kv("class", "seq-tables".into());
                kv("layers", latop::modelsel::render_node(windows));
            }
            None => kv("class", "seq-tables".into()),
        }
        kv(
            "batch_size",
            match self.batch_size {
                BatchSize::All => "all".into(),
                BatchSize::Fixed(b) => b.to_string(),
            },
        );
        kv(
            "neighbors",
            match self.neighbors {
                NeighborCount::Exhaustive => "exhaustive".into(),
                NeighborCount::Sampled(n) => n.to_string(),
            },
        );
        kv("epochs", self.epochs.to_string());
        kv("seed", self.seed.to_string());
        kv("require_improvement", self.require_improvement.to_string());
        kv("boundary", self.boundary.name().into());
        kv("table_cap", self.caps.table.to_string());
        kv("basis_cap", self.caps.basis.to_string());
        kv("output", self.output.display().to_string());
        if let Some(l) = &self.lattice {
            kv("max_window", l.spec.max_window.to_string());
            if let Some(init) = &l.initial {
                kv("layers", latop::modelsel::render_node(init));
            }
            kv("depth", l.spec.depth.to_string());
            kv("outer_neighbors", l.neighbors.to_string());
            kv("outer_epochs", l.epochs.to_string());
            kv("validation_fraction", l.validation_fraction.to_string());
            kv(
                "inner",
                match l.inner {
                    InnerKind::Slda => "slda".into(),
                    InnerKind::Lda => "lda".into(),
                },
            );
        }
        out
    }
}
