//! Configuration-driven experiment runner over the shiftlab core.
//!
//! Every run is reproducible from its flags plus the seed; outputs embed the
//! generating configuration and are written atomically. Exit codes: 0 on
//! success, 1 on operation errors, 2 on configuration/validation errors.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use shiftlab_core::aperiodicity::{
    check_maltese, check_mho, estimate_h, SampleOpts,
};
use shiftlab_core::enumerate::{enumerate_patterns, EnumOptions};
use shiftlab_core::geometry::{Coord, SiteSet};
use shiftlab_core::glauber::{build_collar, glauber_run, CollarRule, GlauberOptions};
use shiftlab_core::irreducible::{
    check_irreducibility, IrreducibilityBudget, IrreducibilityMode,
};
use shiftlab_core::models::{self, ModelSpec};
use shiftlab_core::onedim::{
    conformality_check_1d, entropy_pressure, gibbs_markov, parry_measure,
    periodic_decomposition, uniform_specification_check, TransitionMatrix,
};
use shiftlab_core::potential::LocalPotential;
use shiftlab_core::relations::SiteFunction;
use shiftlab_core::spectral::{
    classify_empirical, correlation_series, free_product, periodogram_peaks,
    ClassifyOptions, CorrelationOptions, DriverMeasure, ProductField, Sign,
};
use shiftlab_core::thermo::{
    box_entropy_scan, phase_probe, thermo_limit_scan, ProbeModel, ScanOptions,
};
use shiftlab_core::{Pattern, ShiftSpace};

#[derive(Parser)]
#[command(name = "shiftlab", version, about = "Lattice shift-space laboratory")]
struct Cli {
    /// Worker threads for parallel sections (outputs do not depend on this).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file (atomic write); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize, Clone)]
struct ModelArgs {
    /// Built-in model name (see `list-models`) or a model JSON file path.
    #[arg(long)]
    model: String,
    /// Dimension for the parameterized models.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Alphabet size for the full shift.
    #[arg(long, default_value_t = 2)]
    symbols: usize,
    /// Spin bound M for the iceberg model.
    #[arg(long = "m-max", default_value_t = 1, alias = "M")]
    m_max: i64,
    /// Beach parameters a0,a1,b.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    beach: Option<Vec<usize>>,
}

#[derive(Args, Serialize, Clone)]
struct WindowArgs {
    /// Box window per axis, e.g. "-2:2,-2:2".
    #[arg(long = "box", allow_hyphen_values = true)]
    box_spec: Option<String>,
    /// Sup-norm ball radius around the origin.
    #[arg(long = "sup-ball")]
    sup_ball: Option<Coord>,
    /// L1-norm ball radius around the origin.
    #[arg(long = "l1-ball")]
    l1_ball: Option<Coord>,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate admissible patterns on a window.
    Enumerate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, default_value_t = 0)]
        margin: Coord,
        #[arg(long, default_value_t = 10_000_000)]
        cap: u64,
        /// Include the patterns themselves (up to 1000) in the output.
        #[arg(long)]
        list: bool,
    },
    /// Interior/boundary split of a site set.
    Frontier {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Falsifier check for (strong) irreducibility.
    CheckIrreducible {
        #[command(flatten)]
        model: ModelArgs,
        /// "transitive" or "strong".
        #[arg(long, default_value = "strong")]
        mode: String,
        /// Minimum separation for the strong check.
        #[arg(long, default_value_t = 1)]
        r: Coord,
        #[arg(long, default_value_t = 3)]
        max_window: Coord,
        #[arg(long, default_value_t = 200_000)]
        max_pairs: u64,
        #[arg(long, default_value_t = 2)]
        margin: Coord,
    },
    /// Per-configuration cocycle-span condition on a window.
    CheckMho {
        #[command(flatten)]
        model: ModelArgs,
        /// Sup-ball window radius.
        #[arg(long, default_value_t = 2)]
        window: Coord,
        /// Use an L1-ball window of this radius instead.
        #[arg(long = "l1-window")]
        l1_window: Option<Coord>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        margin: Coord,
        /// Window radii for the reference-subgroup estimate.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2])]
        h_radii: Vec<Coord>,
    },
    /// Search for a safe symbol set.
    CheckMaltese {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Maximal-entropy Markov measure of a 1D model.
    Parry {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Site-potential-twisted Markov measure of a 1D model.
    GibbsMarkov {
        #[command(flatten)]
        model: ModelArgs,
        /// Per-symbol potential values, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        phi: Vec<f64>,
    },
    /// Cylinder-ratio conformality check for a twisted 1D measure.
    #[command(name = "conformal-check-1d")]
    ConformalCheck1d {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        phi: Vec<f64>,
        #[arg(long, default_value_t = 8)]
        maxlen: usize,
    },
    /// Periodic decomposition of a 1D transition matrix.
    Decomposition {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Per-site log-counts over growing balls.
    EntropyScan {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 8)]
        n_max: Coord,
        #[arg(long, default_value_t = 0)]
        margin: Coord,
        #[arg(long, default_value_t = 10_000_000)]
        cap: u64,
    },
    /// Heat-bath sampling of a finite-volume Gibbs measure.
    Gibbs {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        /// Box side length.
        #[arg(long, default_value_t = 8)]
        size: Coord,
        /// Collar rule: plus | minus | free | a symbol name.
        #[arg(long, default_value = "free")]
        collar: String,
        #[arg(long, default_value_t = 100_000)]
        sweeps: u64,
        #[arg(long, default_value_t = 1)]
        thin: u64,
        #[arg(long)]
        seed: u64,
        /// Run even without a safe symbol set.
        #[arg(long)]
        force: bool,
    },
    /// Target-cylinder probabilities across nested volumes and collars.
    ThermoScan {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        /// Volume radii, comma separated (strictly increasing).
        #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 4, 5])]
        radii: Vec<Coord>,
        /// Collar rules, comma separated (plus|minus|free|symbol names).
        #[arg(long, value_delimiter = ',', default_value = "free")]
        collars: Vec<String>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        sweeps: u64,
        #[arg(long)]
        force: bool,
    },
    /// Origin-observable gap under opposite extremal collars.
    PhaseProbe {
        /// three_spin_ising | iceberg | beach
        #[arg(long)]
        model: String,
        #[arg(long = "m-max", default_value_t = 1)]
        m_max: i64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.4, 0.8, 1.2])]
        betas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![12])]
        sizes: Vec<Coord>,
        #[arg(long, default_value_t = 100_000)]
        sweeps: u64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2])]
        seeds: Vec<u64>,
        #[arg(long)]
        seed: u64,
    },
    /// Correlation series of a layered product field along an axis.
    Spectrum {
        /// 1D base model for the layers.
        #[arg(long, default_value = "golden_mean")]
        base: String,
        /// Driver: point:+ | point:- | periodic:+- | sturmian:ALPHA | chacon | bernoulli:Q
        #[arg(long)]
        driver: String,
        /// Axis in the stacked space, e.g. "0,1" (stacking axis last).
        #[arg(long, value_delimiter = ',', default_values_t = vec![0, 1])]
        axis: Vec<Coord>,
        #[arg(long, default_value_t = 256)]
        lags: usize,
        #[arg(long, default_value_t = 20_000)]
        replicas: u64,
        #[arg(long)]
        seed: u64,
        /// Layer potential for the plus sign (per-symbol values).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = vec![0.0, 3.0])]
        phi_plus: Vec<f64>,
        /// Layer potential for the minus sign.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = vec![0.0, -3.0])]
        phi_minus: Vec<f64>,
        /// Observed symbol at the window origin.
        #[arg(long, default_value = "1")]
        observable: String,
        /// Append the periodogram frequency table.
        #[arg(long)]
        periodogram: bool,
        /// Output format: csv | json.
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Stacked product of a base model along a new axis.
    FreeProduct {
        /// Base model name or JSON file.
        #[arg(long)]
        base: String,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        symbols: usize,
    },
    /// List the built-in models.
    ListModels,
}

#[derive(Args, Serialize, Clone)]
struct PotentialArgs {
    /// site | three_spin | ising_pair
    #[arg(long, default_value = "site")]
    potential: String,
    /// Per-symbol values for the site potential.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    /// Coupling for the spin interactions.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

/// Distinguishes configuration errors (exit 2) from operation errors (exit 1).
enum CliError {
    Config(anyhow::Error),
    Op(anyhow::Error),
}

type CliResult<T> = Result<T, CliError>;

fn config_err<T>(e: impl Into<anyhow::Error>) -> CliResult<T> {
    Err(CliError::Config(e.into()))
}

trait OpContext<T> {
    fn op(self) -> CliResult<T>;
    fn config(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> OpContext<T> for Result<T, E> {
    fn op(self) -> CliResult<T> {
        self.map_err(|e| CliError::Op(e.into()))
    }
    fn config(self) -> CliResult<T> {
        self.map_err(|e| CliError::Config(e.into()))
    }
}

impl ModelArgs {
    fn resolve(&self) -> CliResult<ShiftSpace> {
        resolve_model(
            &self.model,
            self.dim,
            self.symbols,
            self.m_max,
            self.beach.as_deref(),
        )
    }
}

fn resolve_model(
    name: &str,
    dim: usize,
    symbols: usize,
    m_max: i64,
    beach: Option<&[usize]>,
) -> CliResult<ShiftSpace> {
    match name {
        "full" => Ok(models::full_shift(dim, symbols)),
        "golden_mean" => Ok(models::golden_mean()),
        "checkerboard" => Ok(models::checkerboard(dim)),
        "iceberg" => Ok(models::iceberg(dim, m_max)),
        "beach" => {
            let p = beach.unwrap_or(&[1, 1, 2]);
            Ok(models::beach(dim, p[0], p[1], p[2]))
        }
        "three_spin_ising" => Ok(models::three_spin_ising()),
        other => {
            let path = Path::new(other);
            if !path.exists() {
                return config_err(anyhow!(
                    "unknown model `{other}` (not a built-in and not a file)"
                ));
            }
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .config()?;
            let spec: ModelSpec = serde_json::from_str(&text)
                .map_err(|e| anyhow!("model file {}: {e}", path.display()))
                .config()?;
            spec.to_space().config()
        }
    }
}

impl WindowArgs {
    fn resolve(&self, dim: usize) -> CliResult<SiteSet> {
        match (&self.box_spec, self.sup_ball, self.l1_ball) {
            (Some(spec), None, None) => parse_box(spec, dim),
            (None, Some(r), None) => Ok(SiteSet::sup_ball(&vec![0; dim], r)),
            (None, None, Some(r)) => Ok(SiteSet::l1_ball(&vec![0; dim], r)),
            _ => config_err(anyhow!(
                "specify exactly one of --box, --sup-ball, --l1-ball"
            )),
        }
    }
}

fn parse_box(spec: &str, dim: usize) -> CliResult<SiteSet> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != dim {
        return config_err(anyhow!(
            "--box has {} axis ranges but the model dimension is {dim}",
            parts.len()
        ));
    }
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for p in parts {
        let (a, b) = p
            .split_once(':')
            .ok_or_else(|| anyhow!("box range `{p}` is not lo:hi"))
            .config()?;
        lo.push(a.parse::<Coord>().map_err(|e| anyhow!("{e}")).config()?);
        hi.push(b.parse::<Coord>().map_err(|e| anyhow!("{e}")).config()?);
    }
    SiteSet::box_range(&lo, &hi).config()
}

fn parse_collar(space: &ShiftSpace, name: &str) -> CliResult<CollarRule> {
    match name {
        "free" => Ok(CollarRule::Free),
        "plus" => space
            .symbol_index("+1")
            .map(CollarRule::Symbol)
            .config(),
        "minus" => space
            .symbol_index("-1")
            .map(CollarRule::Symbol)
            .config(),
        other => space.symbol_index(other).map(CollarRule::Symbol).config(),
    }
}

fn parse_driver(spec: &str) -> CliResult<DriverMeasure> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "point" | "point_mass" => match arg {
            "+" => Ok(DriverMeasure::PointMass(Sign::Plus)),
            "-" => Ok(DriverMeasure::PointMass(Sign::Minus)),
            _ => config_err(anyhow!("point driver needs + or -")),
        },
        "periodic" => {
            let word: Vec<Sign> = arg
                .chars()
                .map(|c| match c {
                    '+' => Ok(Sign::Plus),
                    '-' => Ok(Sign::Minus),
                    other => Err(anyhow!("periodic word has `{other}`")),
                })
                .collect::<Result<_, _>>()
                .config()?;
            if word.is_empty() {
                return config_err(anyhow!("periodic driver needs a word"));
            }
            Ok(DriverMeasure::Periodic(word))
        }
        "sturmian" => {
            let alpha: f64 = arg.parse().map_err(|e| anyhow!("{e}")).config()?;
            if !(0.0..1.0).contains(&alpha) {
                return config_err(anyhow!("sturmian alpha must be in (0,1)"));
            }
            Ok(DriverMeasure::Sturmian { alpha })
        }
        "chacon" => Ok(DriverMeasure::Chacon),
        "bernoulli" => {
            let q: f64 = arg.parse().map_err(|e| anyhow!("{e}")).config()?;
            Ok(DriverMeasure::Bernoulli { q })
        }
        other => config_err(anyhow!("unknown driver `{other}`")),
    }
}

impl PotentialArgs {
    fn resolve(&self, space: &ShiftSpace) -> CliResult<LocalPotential> {
        let pot = match self.potential.as_str() {
            "site" => LocalPotential::Site {
                values: self
                    .values
                    .clone()
                    .unwrap_or_else(|| vec![0.0; space.symbol_count()]),
            },
            "three_spin" => LocalPotential::ThreeSpin { beta: self.beta },
            "ising_pair" => LocalPotential::IsingPair { beta: self.beta },
            other => return config_err(anyhow!("unknown potential `{other}`")),
        };
        pot.validate(space).config()?;
        Ok(pot)
    }
}

fn transition_matrix(space: &ShiftSpace) -> CliResult<TransitionMatrix> {
    TransitionMatrix::from_space(space).config()
}

fn run(cli: &Cli) -> CliResult<()> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Enumerate {
            model,
            window,
            margin,
            cap,
            list,
        } => {
            let space = model.resolve()?;
            let w = window.resolve(space.dim())?;
            let opts = EnumOptions {
                margin: *margin,
                cap: *cap,
            };
            let pats = enumerate_patterns(&space, &w, None, opts).op()?;
            let words: Vec<Vec<&str>> = if *list && pats.len() <= 1000 {
                pats.iter()
                    .map(|p| {
                        p.values()
                            .iter()
                            .map(|&v| space.symbol_name(v))
                            .collect()
                    })
                    .collect()
            } else {
                Vec::new()
            };
            let value = output::envelope(
                "enumerate",
                &json!({"model": model, "window": window, "margin": margin, "cap": cap}),
                &json!({"count": pats.len(), "patterns": words, "sites": w.sites()}),
            )
            .op()?;
            output::emit_json(out, &value).op()
        }
        Command::Frontier { dim, window } => {
            let w = window.resolve(*dim)?;
            let (interior, boundary) = w.frontier().op()?;
            let value = output::envelope(
                "frontier",
                &json!({"dim": dim, "window": window}),
                &json!({
                    "sites": w.len(),
                    "interior": interior.len(),
                    "boundary": boundary.len(),
                    "interior_sites": interior.sites(),
                    "boundary_sites": boundary.sites(),
                }),
            )
            .op()?;
            output::emit_json(out, &value).op()
        }
        Command::CheckIrreducible {
            model,
            mode,
            r,
            max_window,
            max_pairs,
            margin,
        } => {
            let space = model.resolve()?;
            let m = match mode.as_str() {
                "transitive" => IrreducibilityMode::Transitive,
                "strong" => IrreducibilityMode::StronglyIrreducible { r: *r },
                other => return config_err(anyhow!("unknown mode `{other}`")),
            };
            let verdict = check_irreducibility(
                &space,
                m,
                IrreducibilityBudget {
                    max_window: *max_window,
                    max_extra_separation: 2,
                    max_pairs: *max_pairs,
                    margin: *margin,
                },
            )
            .op()?;
            let value = output::envelope(
                "check-irreducible",
                &json!({"model": model, "mode": mode, "r": r, "max_window": max_window,
                        "max_pairs": max_pairs, "margin": margin}),
                &verdict,
            )
            .op()?;
            output::emit_json(out, &value).op()
        }
        Command::CheckMho {
            model,
            window,
            l1_window,
            samples,
            seed,
            margin,
            h_radii,
        } => {
            let space = model.resolve()?;
            let w = match l1_window {
                Some(r) => SiteSet::l1_ball(&vec![0; space.dim()], *r),
                None => SiteSet::sup_ball(&vec![0; space.dim()], *window),
            };
            let sharp = SiteFunction::counting(space.symbol_count());
            let opts = SampleOpts {
                samples: *samples,
                margin: *margin,
                ..Default::default()
            };
            let est = estimate_h(&space, &sharp, h_radii, &opts, *seed).op()?;
            let report = check_mho(&space, &w, &est.lattice, &opts, *seed).op()?;
            let value = output::envelope(
                "check-mho",
                &json!({"model": model, "window": window, "l1_window": l1_window,
                        "samples": samples, "seed": seed, "margin": margin, "h_radii": h_radii}),
                &json!({
                    "reference_rank": est.lattice.rank(),
                    "reference_stabilized": est.stabilized,
                    "report": report,
                }),
            )
            .op()?;
            output::emit_json(out, &value).op()?;
            if !report.holds() {
                return Err(CliError::Op(anyhow!("span condition failed")));
            }
            Ok(())
        }
        Command::CheckMaltese { model } => {
            let space = model.resolve()?;
            let verdict = check_maltese(&space);
            let named = match &verdict {
                shiftlab_core::aperiodicity::MalteseVerdict::Satisfied { safe } => json!({
                    "satisfied": true,
                    "safe_symbols": safe
                        .iter()
                        .map(|&s| space.symbol_name(s))
                        .collect::<Vec<_>>(),
                }),
                shiftlab_core::aperiodicity::MalteseVerdict::NotFound => {
                    json!({"satisfied": false})
                }
            };
            let value =
                output::envelope("check-maltese", &json!({ "model": model }), &named).op()?;
            output::emit_json(out, &value).op()
        }
        Command::Parry { model } => {
            let space = model.resolve()?;
            let a = transition_matrix(&space)?;
            let mu = parry_measure(&a).op()?;
            let (h, pressure) = entropy_pressure(&mu, &vec![0.0; a.n]);
            let value = output::envelope(
                "parry",
                &json!({ "model": model }),
                &json!({
                    "lambda": mu.lambda,
                    "entropy": h,
                    "pressure": pressure,
                    "stationary": mu.stationary,
                    "kernel": mu.kernel,
                }),
            )
            .op()?;
            output::emit_json(out, &value).op()
        }
        Command::GibbsMarkov { model, phi } => {
            let space = model.resolve()?;
            let a = transition_matrix(&space)?;
            let mu = gibbs_markov(&a, phi).op()?;
            let (h, pressure) = entropy_pressure(&mu, phi);
            let value = output::envelope(
                "gibbs-markov",
                &json!({"model": model, "phi": phi}),
                &json!({
                    "lambda": mu.lambda,
                    "entropy": h,
                    "pressure": pressure,
                    "log_lambda": mu.lambda.ln(),
                    "stationary": mu.stationary,
                    "kernel": mu.kernel,
                }),
            )
            .op()?;
            output::emit_json(out, &value).op()
        }
        Command::ConformalCheck1d { model, phi, maxlen } => {
            let space = model.resolve()?;
            let a = transition_matrix(&space)?;
            let mu = gibbs_markov(&a, phi).op()?;
            let max_deviation = conformality_check_1d(&mu, *maxlen);
            let uniform_dev = uniform_specification_check(&mu, *maxlen);
            let value = output::envelope(
                "conformal-check-1d",
                &json!({"model": model, "phi": phi, "maxlen": maxlen}),
                &json!({
                    "lambda": mu.lambda,
                    "entropy": mu.entropy(),
                    "max_deviation": max_deviation,
                    "uniform_specification_deviation": uniform_dev,
                }),
            )
            .op()?;
            output::emit_json(out, &value).op()
        }
        Command::Decomposition { model } => {
            let space = model.resolve()?;
            let a = transition_matrix(&space)?;
            let d = periodic_decomposition(&a).op()?;
            let classes: Vec<Vec<&str>> = d
                .classes
                .iter()
                .map(|c| c.iter().map(|&s| space.symbol_name(s)).collect())
                .collect();
            let value = output::envelope(
                "decomposition",
                &json!({ "model": model }),
                &json!({"period": d.period, "classes": classes}),
            )
            .op()?;
            output::emit_json(out, &value).op()
        }
        Command::EntropyScan {
            model,
            n_max,
            margin,
            cap,
        } => {
            let space = model.resolve()?;
            let scan = box_entropy_scan(&space, *n_max, *margin, *cap).op()?;
            let value = output::envelope(
                "entropy-scan",
                &json!({"model": model, "n_max": n_max, "margin": margin, "cap": cap}),
                &scan,
            )
            .op()?;
            output::emit_json(out, &value).op()
        }
        Command::Gibbs {
            model,
            potential,
            size,
            collar,
            sweeps,
            thin,
            seed,
            force,
        } => {
            let space = model.resolve()?;
            let pot = potential.resolve(&space)?;
            let lo = -(size / 2);
            let volume = SiteSet::box_range(
                &vec![lo; space.dim()],
                &vec![lo + size - 1; space.dim()],
            )
            .config()?;
            let rule = parse_collar(&space, collar)?;
            let collar_pat = build_collar(&volume, rule, pot.radius().max(1));
            // empirical marginal over the central 2x..x2 block
            let block = SiteSet::box_range(&vec![0; space.dim()], &vec![1; space.dim()])
                .config()?;
            let idx: Vec<usize> = block
                .iter()
                .map(|s| volume.index_of(s).expect("block inside volume"))
                .collect();
            let mut counts: std::collections::HashMap<Vec<u8>, u64> =
                std::collections::HashMap::new();
            let mut kept = 0u64;
            let diag = glauber_run(
                &space,
                &pot,
                &volume,
                &collar_pat,
                *seed,
                GlauberOptions {
                    sweeps: *sweeps,
                    burn_in: sweeps / 10,
                    thin: *thin,
                    override_safety: *force,
                },
                |chain| {
                    kept += 1;
                    let st = chain.state();
                    let key: Vec<u8> = idx.iter().map(|&i| st.values()[i]).collect();
                    *counts.entry(key).or_insert(0) += 1;
                },
            )
            .op()?;
            let mut marginal: Vec<(String, f64)> = counts
                .into_iter()
                .map(|(k, c)| {
                    let name = k
                        .iter()
                        .map(|&v| space.symbol_name(v).to_string())
                        .collect::<Vec<_>>()
                        .join(",");
                    (name, c as f64 / kept as f64)
                })
                .collect();
            marginal.sort_by(|a, b| a.0.cmp(&b.0));
            let value = output::envelope(
                "gibbs",
                &json!({"model": model, "potential": potential, "size": size,
                        "collar": collar, "sweeps": sweeps, "thin": thin, "seed": seed,
                        "force": force}),
                &json!({
                    "diagnostics": diag,
                    "central_block_marginal": marginal,
                }),
            )
            .op()?;
            output::emit_json(out, &value).op()
        }
        Command::ThermoScan {
            model,
            potential,
            radii,
            collars,
            seed,
            sweeps,
            force,
        } => {
            let space = model.resolve()?;
            let pot = potential.resolve(&space)?;
            let rules: Vec<CollarRule> = collars
                .iter()
                .map(|c| parse_collar(&space, c))
                .collect::<CliResult<_>>()?;
            // default targets: one single-site cylinder per symbol at the origin
            let targets: Vec<Pattern> = (0..space.symbol_count() as u16)
                .map(|s| {
                    Pattern::from_pairs(space.dim(), &[(vec![0; space.dim()], s as u8)])
                        .unwrap()
                })
                .collect();
            let scan = thermo_limit_scan(
                &space,
                &pot,
                radii,
                &rules,
                &targets,
                &ScanOptions {
                    seed: *seed,
                    sweeps: *sweeps,
                    override_safety: *force,
                    ..Default::default()
                },
            )
            .op()?;
            let value = output::envelope(
                "thermo-scan",
                &json!({"model": model, "potential": potential, "radii": radii,
                        "collars": collars, "seed": seed, "sweeps": sweeps}),
                &scan,
            )
            .op()?;
            output::emit_json(out, &value).op()
        }
        Command::PhaseProbe {
            model,
            m_max,
            betas,
            sizes,
            sweeps,
            seeds,
            seed,
        } => {
            let probe = match model.as_str() {
                "three_spin_ising" => ProbeModel::ThreeSpin,
                "iceberg" => ProbeModel::Iceberg { m: *m_max },
                "beach" => ProbeModel::Beach,
                other => return config_err(anyhow!("unknown probe model `{other}`")),
            };
            let chain_seeds: Vec<u64> =
                seeds.iter().map(|s| s.wrapping_add(*seed << 8)).collect();
            let curve = phase_probe(probe, betas, sizes, *sweeps, &chain_seeds).op()?;
            let rows: Vec<_> = curve
                .points
                .iter()
                .map(|p| {
                    json!({
                        "beta": p.beta, "size": p.size,
                        "mean_plus": p.mean_plus, "se_plus": p.se_plus,
                        "mean_minus": p.mean_minus, "se_minus": p.se_minus,
                        "gap": p.gap(), "gap_stderr": p.gap_stderr(),
                        "sigmas": p.sigmas(),
                    })
                })
                .collect();
            let value = output::envelope(
                "phase-probe",
                &json!({"model": model, "m_max": m_max, "betas": betas, "sizes": sizes,
                        "sweeps": sweeps, "seeds": seeds, "seed": seed}),
                &json!({"points": rows, "monotone_in_beta": curve.monotone_in_beta}),
            )
            .op()?;
            output::emit_json(out, &value).op()
        }
        Command::Spectrum {
            base,
            driver,
            axis,
            lags,
            replicas,
            seed,
            phi_plus,
            phi_minus,
            observable,
            periodogram,
            format,
        } => {
            let space = resolve_model(base, 1, 2, 1, None)?;
            if space.dim() != 1 {
                return config_err(anyhow!("spectrum layers need a 1D base model"));
            }
            let a = transition_matrix(&space)?;
            let plus = gibbs_markov(&a, phi_plus).op()?;
            let minus = gibbs_markov(&a, phi_minus).op()?;
            let field = ProductField {
                plus: &plus,
                minus: &minus,
            };
            let drv = parse_driver(driver)?;
            let sym = space.symbol_index(observable).config()?;
            let obs = Pattern::from_pairs(2, &[(vec![0, 0], sym)]).config()?;
            let series = correlation_series(
                &field,
                &drv,
                &obs,
                axis,
                &CorrelationOptions {
                    max_lag: *lags,
                    replicas: *replicas,
                    batches: 32,
                },
                *seed,
            )
            .op()?;
            let report = classify_empirical(&series, &ClassifyOptions::default());
            let config = json!({
                "base": base, "driver": driver, "axis": axis, "lags": lags,
                "replicas": replicas, "seed": seed, "phi_plus": phi_plus,
                "phi_minus": phi_minus, "observable": observable,
                "periodogram": periodogram, "format": format,
            });
            match format.as_str() {
                "json" => {
                    let mut result = json!({
                        "series": series,
                        "classification": report,
                    });
                    if *periodogram {
                        result["periodogram"] =
                            serde_json::to_value(periodogram_peaks(&series, 16).op()?)
                                .op()?;
                    }
                    let value = output::envelope("spectrum", &config, &result).op()?;
                    output::emit_json(out, &value).op()
                }
                "csv" => {
                    let mut text = format!(
                        "# config: {}\n# classification: {:?}; driver label: {}\nlag,C,stderr\n",
                        serde_json::to_string(&config).op()?,
                        report.verdict,
                        series
                            .driver_label
                            .map(|l| l.to_string())
                            .unwrap_or_default(),
                    );
                    for k in 0..series.lags.len() {
                        text.push_str(&format!(
                            "{},{:.10},{:.10}\n",
                            series.lags[k], series.estimates[k], series.stderrs[k]
                        ));
                    }
                    if *periodogram {
                        text.push_str("\nfrequency,power_fraction\n");
                        for (f, p) in shiftlab_core::spectral::periodogram(&series) {
                            text.push_str(&format!("{:.8},{:.10}\n", f, p));
                        }
                    }
                    output::emit_text(out, &text).op()
                }
                other => config_err(anyhow!("unknown format `{other}`")),
            }
        }
        Command::FreeProduct { base, dim, symbols } => {
            let space = resolve_model(base, *dim, *symbols, 1, None)?;
            let fp = free_product(&space).op()?;
            let derived_spec = ModelSpec::from_space(&fp.derived);
            let value = output::envelope(
                "free-product",
                &json!({"base": base, "dim": dim, "symbols": symbols}),
                &json!({
                    "derived_dimension": fp.derived.dim(),
                    "derived_model": derived_spec,
                }),
            )
            .op()?;
            output::emit_json(out, &value).op()
        }
        Command::ListModels => {
            let mut text = String::from("built-in models:\n");
            for m in models::catalog() {
                text.push_str(&format!(
                    "  {:<18} {:<28} {}\n",
                    m.name, m.parameters, m.summary
                ));
            }
            output::emit_text(out, &text).op()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Op(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(CliError::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
    }
}
