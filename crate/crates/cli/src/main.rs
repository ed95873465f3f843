//! Command-line front end: JSON in, JSON/CSV out, plus a run manifest.
//!
//! Exit codes: 0 on success, 2 when certification fails (the input is not an
//! automorphism or violates its group tag), 1 on usage or input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use shearflow_core::aut::{certify_value, AutValue};
use shearflow_core::decompose::{decompose_field, FieldTag};
use shearflow_core::engine::{
    approximate, approximate_interpolating, polydisc_grid, ParamTarget, PipelineConfig,
};
use shearflow_core::error::Error;
use shearflow_core::interpolate::interpolate_full;
use shearflow_core::json::{self, JVal};
use shearflow_core::planar::{degree_of, interp_planar_bounded, invert_planar, jvdk_factor};
use shearflow_core::polymap::PolyMap;
use shearflow_core::scalar::{Backend, Scalar};

/// Fixed default seed echoed into the manifest; every pipeline is
/// deterministic, so it only documents the configuration.
const DEFAULT_SEED: u64 = 0;

#[derive(Parser)]
#[command(
    name = "shearflow",
    version,
    about = "Shear calculus pipelines on complex affine space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct IoArgs {
    /// Input JSON file.
    #[arg(long)]
    input: PathBuf,
    /// Output file (JSON or CSV depending on the subcommand).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Companion report file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Manifest path; defaults to "<output>.manifest.json".
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Factor a planar polynomial automorphism into affine and elementary maps.
    Factor {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Exit 0 iff the input map is certified as a planar automorphism.
    Certify {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Decompose a polynomial vector field into complete shear fields.
    DecomposeField {
        #[command(flatten)]
        io: IoArgs,
        /// general | volume | symplectic
        #[arg(long, default_value = "general")]
        tag: String,
    },
    /// Approximate an automorphism by a word of shear flows.
    Approximate {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, default_value_t = 16)]
        steps: usize,
        #[arg(long, default_value_t = 8)]
        order: i64,
        #[arg(long, default_value = "general")]
        tag: String,
        /// Comma-separated polydisc radii, one per coordinate.
        #[arg(long)]
        radii: Option<String>,
        /// Semicolon-separated parameter nodes ("re" or "re,im" or "p/q")
        /// where the output must interpolate the identity.
        #[arg(long)]
        nodes: Option<String>,
        /// Radius of the closed parameter disc.
        #[arg(long, default_value_t = 1.0)]
        param_radius: f64,
    },
    /// Tabulate approximation errors over several step counts (CSV).
    Convergence {
        #[command(flatten)]
        io: IoArgs,
        /// Comma-separated step counts, e.g. 8,16,32.
        #[arg(long, default_value = "8,16,32")]
        steps: String,
        #[arg(long, default_value_t = 8)]
        order: i64,
        #[arg(long, default_value = "general")]
        tag: String,
        #[arg(long)]
        radii: Option<String>,
    },
    /// Interpolate automorphism targets at parameter nodes.
    Interpolate {
        #[command(flatten)]
        io: IoArgs,
        /// Group tag override; defaults to the tag in the input data.
        #[arg(long)]
        tag: Option<String>,
    },
    /// Interpolate planar polynomial automorphisms through their strata.
    InterpolatePlanar {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Evaluate a word, map, parameterized word, or curve at points.
    Eval {
        #[command(flatten)]
        io: IoArgs,
        /// Parameter value for curves and parameterized words.
        #[arg(long)]
        at: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = match &cli.command {
        Command::Factor { io } => run_factor(io, start),
        Command::Certify { io } => run_certify(io, start),
        Command::DecomposeField { io, tag } => run_decompose(io, tag, start),
        Command::Approximate {
            io,
            steps,
            order,
            tag,
            radii,
            nodes,
            param_radius,
        } => run_approximate(io, *steps, *order, tag, radii, nodes, *param_radius, start),
        Command::Convergence {
            io,
            steps,
            order,
            tag,
            radii,
        } => run_convergence(io, steps, *order, tag, radii, start),
        Command::Interpolate { io, tag } => run_interpolate(io, tag, start),
        Command::InterpolatePlanar { io } => run_interpolate_planar(io, start),
        Command::Eval { io, at } => run_eval(io, at, start),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = error_kind(&e);
            let obj = JVal::Obj(vec![(
                "error",
                JVal::Obj(vec![
                    ("kind", JVal::Str(kind.into())),
                    ("message", JVal::Str(e.to_string())),
                ]),
            )]);
            println!("{}", obj.to_string_canonical().trim_end());
            if is_certification_failure(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::BackendMismatch => "backend_mismatch",
        Error::VarMismatch { .. } => "var_mismatch",
        Error::SingularLinearPart => "singular_linear_part",
        Error::NotSchwarz(_) => "not_schwarz",
        Error::NonConstantJacobian(_) => "non_constant_jacobian",
        Error::NotAnAutomorphism(_) => "not_an_automorphism",
        Error::NonzeroDivergence(_) => "nonzero_divergence",
        Error::NotHamiltonian(_) => "not_hamiltonian",
        Error::ExactTranscendental(_) => "exact_transcendental",
        Error::TagViolation(_) => "tag_violation",
        Error::RepeatedNode => "repeated_node",
        Error::ZeroValue => "zero_value",
        Error::NodeNotIdentity(_) => "node_not_identity",
        Error::Unsupported(_) => "unsupported",
        Error::RankFailure(_) => "rank_failure",
        Error::Invalid(_) => "invalid_input",
    }
}

fn is_certification_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::NonConstantJacobian(_)
            | Error::NotAnAutomorphism(_)
            | Error::TagViolation(_)
            | Error::NonzeroDivergence(_)
            | Error::NotHamiltonian(_)
            | Error::NodeNotIdentity(_)
    )
}

fn read_json(path: &Path) -> Result<serde_json::Value, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::Invalid(format!(
            "malformed JSON in {} at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text)
        .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))
}

fn manifest_path(io: &IoArgs) -> PathBuf {
    if let Some(m) = &io.manifest {
        return m.clone();
    }
    match &io.output {
        Some(o) => {
            let mut p = o.clone();
            let name = p
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_else(|| "out".into());
            p.set_file_name(format!("{name}.manifest.json"));
            p
        }
        None => PathBuf::from("run.manifest.json"),
    }
}

fn write_manifest(
    io: &IoArgs,
    subcommand: &str,
    config: Vec<(&'static str, JVal)>,
    start: Instant,
) -> Result<(), Error> {
    let outputs: Vec<JVal> = io
        .output
        .iter()
        .chain(io.report.iter())
        .map(|p| JVal::Str(p.display().to_string()))
        .collect();
    let manifest = JVal::Obj(vec![
        ("subcommand", JVal::Str(subcommand.into())),
        (
            "inputs",
            JVal::Arr(vec![JVal::Str(io.input.display().to_string())]),
        ),
        ("outputs", JVal::Arr(outputs)),
        ("config", JVal::Obj(config)),
        (
            "versions",
            JVal::Obj(vec![
                ("shearflow-cli", JVal::Str(env!("CARGO_PKG_VERSION").into())),
                (
                    "shearflow-core",
                    JVal::Str(env!("CARGO_PKG_VERSION").into()),
                ),
            ]),
        ),
        ("seed", JVal::Int(DEFAULT_SEED as i64)),
        (
            "duration_seconds",
            JVal::Float(start.elapsed().as_secs_f64()),
        ),
    ]);
    write_text(&manifest_path(io), &manifest.to_string_canonical())
}

fn emit(io: &IoArgs, value: &JVal) -> Result<(), Error> {
    let text = value.to_string_canonical();
    match &io.output {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_report(io: &IoArgs, value: &JVal) -> Result<(), Error> {
    if let Some(path) = &io.report {
        write_text(path, &value.to_string_canonical())?;
    }
    Ok(())
}

fn error_report_jval(r: &shearflow_core::engine::ErrorReport) -> JVal {
    JVal::Obj(vec![
        ("sup_error", JVal::Float(r.sup_error)),
        (
            "step_truncation_residuals",
            JVal::Arr(
                r.step_truncation_residuals
                    .iter()
                    .map(|&x| JVal::Float(x))
                    .collect(),
            ),
        ),
        (
            "decomposition_residuals",
            JVal::Arr(
                r.decomposition_residuals
                    .iter()
                    .map(|&x| JVal::Float(x))
                    .collect(),
            ),
        ),
        ("seconds", JVal::Float(r.seconds)),
    ])
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

fn run_factor(io: &IoArgs, start: Instant) -> Result<(), Error> {
    let v = read_json(&io.input)?;
    let map = json::parse_polymap(&v)?;
    let fac = jvdk_factor(&map)?;
    let pd = fac.polydegree();
    let out = json::factorization_to_jval(&fac);
    emit(io, &out)?;
    let report = JVal::Obj(vec![
        (
            "polydegree",
            JVal::Arr(pd.0.iter().map(|&d| JVal::Int(d as i64)).collect()),
        ),
        ("degree", JVal::Int(degree_of(&map))),
        ("stratum_dim", JVal::Int(pd.stratum_dim() as i64)),
        ("certified", JVal::Bool(fac.certified)),
        (
            "inverse_factors",
            JVal::Int(invert_planar(&fac)?.factors.len() as i64),
        ),
    ]);
    emit_report(io, &report)?;
    write_manifest(io, "factor", vec![], start)
}

fn run_certify(io: &IoArgs, start: Instant) -> Result<(), Error> {
    let v = read_json(&io.input)?;
    let map = json::parse_polymap(&v)?;
    let fac = jvdk_factor(&map)?;
    let pd = fac.polydegree();
    let report = JVal::Obj(vec![
        ("certified", JVal::Bool(fac.certified)),
        (
            "polydegree",
            JVal::Arr(pd.0.iter().map(|&d| JVal::Int(d as i64)).collect()),
        ),
        ("degree", JVal::Int(degree_of(&map))),
    ]);
    emit(io, &report)?;
    write_manifest(io, "certify", vec![], start)
}

fn run_decompose(io: &IoArgs, tag: &str, start: Instant) -> Result<(), Error> {
    let tag = FieldTag::parse(tag)?;
    let v = read_json(&io.input)?;
    let field = json::parse_vectorfield(&v)?;
    let dec = decompose_field(&field, tag)?;
    emit(io, &json::decomposition_to_jval(&dec))?;
    let report = JVal::Obj(vec![
        ("summand_count", JVal::Int(dec.summands.len() as i64)),
        (
            "recomposition_residual_norm",
            JVal::Float(dec.residual.coeff_norm()),
        ),
    ]);
    emit_report(io, &report)?;
    write_manifest(
        io,
        "decompose-field",
        vec![("tag", JVal::Str(tag.as_str().into()))],
        start,
    )
}

fn parse_radii(radii: &Option<String>, n: usize) -> Result<Vec<f64>, Error> {
    match radii {
        None => Ok(vec![1.0; n]),
        Some(s) => {
            let parts: Vec<f64> = s
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Invalid(format!("bad radius {p:?}")))
                })
                .collect::<Result<_, _>>()?;
            if parts.len() == 1 {
                Ok(vec![parts[0]; n])
            } else if parts.len() == n {
                Ok(parts)
            } else {
                Err(Error::Invalid(format!(
                    "expected {n} radii, got {}",
                    parts.len()
                )))
            }
        }
    }
}

fn parse_node(text: &str, backend: Backend) -> Result<Scalar, Error> {
    let parts: Vec<&str> = text.split(',').map(|p| p.trim()).collect();
    let parse_part = |p: &str| -> Result<Scalar, Error> {
        match backend {
            Backend::Exact => {
                let (num, den) = match p.split_once('/') {
                    Some((a, b)) => (a, b),
                    None => (p, "1"),
                };
                let n: i64 = num
                    .parse()
                    .map_err(|_| Error::Invalid(format!("bad node component {p:?}")))?;
                let d: i64 = den
                    .parse()
                    .map_err(|_| Error::Invalid(format!("bad node component {p:?}")))?;
                Ok(Scalar::from_ratio(n, d, Backend::Exact))
            }
            Backend::Approx => {
                let x: f64 = p
                    .parse()
                    .map_err(|_| Error::Invalid(format!("bad node component {p:?}")))?;
                Ok(Scalar::from_f64(x, 0.0))
            }
        }
    };
    match parts.as_slice() {
        [re] => parse_part(re),
        [re, im] => {
            let re = parse_part(re)?;
            let im = parse_part(im)?;
            let i = Scalar::imaginary_unit(backend);
            Ok(re.add(&i.mul(&im)))
        }
        _ => Err(Error::Invalid(format!("bad node {text:?}"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_approximate(
    io: &IoArgs,
    steps: usize,
    order: i64,
    tag: &str,
    radii: &Option<String>,
    nodes: &Option<String>,
    param_radius: f64,
    start: Instant,
) -> Result<(), Error> {
    let tag = FieldTag::parse(tag)?;
    let v = read_json(&io.input)?;
    let config = vec![
        ("steps", JVal::Int(steps as i64)),
        ("order", JVal::Int(order)),
        ("tag", JVal::Str(tag.as_str().into())),
        (
            "radii",
            JVal::Str(radii.clone().unwrap_or_else(|| "1".into())),
        ),
        ("nodes", JVal::Str(nodes.clone().unwrap_or_default())),
        ("param_radius", JVal::Float(param_radius)),
    ];
    match nodes {
        None => {
            let target = json::parse_aut(&v)?;
            let mut cfg = PipelineConfig::new(steps, order, target.n())?;
            cfg.radii = parse_radii(radii, target.n())?;
            let (word, report) = approximate(&target, tag, &cfg)?;
            emit(io, &json::word_to_jval(&word))?;
            emit_report(io, &error_report_jval(&report))?;
        }
        Some(node_text) => {
            // Parameterized target: a map with one parameter variable or a
            // parameterized word.
            let target = if v.get("generators").is_some() {
                ParamTarget::Word(json::parse_param_word(&v)?)
            } else {
                ParamTarget::Map(json::parse_polymap(&v)?)
            };
            let map = target.to_polymap()?;
            let backend = map.backend();
            let node_list: Vec<Scalar> = if node_text.trim().is_empty() {
                Vec::new()
            } else {
                node_text
                    .split(';')
                    .map(|t| parse_node(t, backend))
                    .collect::<Result<_, _>>()?
            };
            let mut cfg = PipelineConfig::new(steps, order, map.n())?;
            cfg.radii = parse_radii(radii, map.n())?;
            cfg.param_radius = param_radius;
            let (word, report) = approximate_interpolating(&target, &node_list, tag, &cfg)?;
            emit(io, &json::param_word_to_jval(&word))?;
            emit_report(io, &error_report_jval(&report))?;
        }
    }
    write_manifest(io, "approximate", config, start)
}

fn run_convergence(
    io: &IoArgs,
    steps: &str,
    order: i64,
    tag: &str,
    radii: &Option<String>,
    start: Instant,
) -> Result<(), Error> {
    let tag = FieldTag::parse(tag)?;
    let counts: Vec<usize> = steps
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Invalid(format!("bad step count {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    let v = read_json(&io.input)?;
    let target = json::parse_aut(&v)?;
    let radii_vec = parse_radii(radii, target.n())?;
    let mut rows = Vec::new();
    for &n_steps in &counts {
        let mut cfg = PipelineConfig::new(n_steps, order, target.n())?;
        cfg.radii = radii_vec.clone();
        let t0 = Instant::now();
        let (_, report) = approximate(&target, tag, &cfg)?;
        rows.push((
            n_steps,
            report.sup_error,
            report
                .step_truncation_residuals
                .iter()
                .cloned()
                .fold(0.0, f64::max),
            t0.elapsed().as_secs_f64(),
        ));
    }
    let mut csv = String::from("N,sup_error,truncation_residual,seconds\n");
    for (n_steps, sup, trunc, secs) in &rows {
        csv.push_str(&format!("{n_steps},{sup:.16e},{trunc:.16e},{secs:.16e}\n"));
    }
    match &io.output {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    write_manifest(
        io,
        "convergence",
        vec![
            ("steps", JVal::Str(steps.into())),
            ("order", JVal::Int(order)),
            ("tag", JVal::Str(tag.as_str().into())),
        ],
        start,
    )
}

/// Nodewise verification: distance between curve values and targets on a
/// polydisc sample, plus a group certificate at off-node parameters.
fn verify_curve(
    curve: &shearflow_core::interpolate::ParamAutCurve,
    nodes: &[Scalar],
    targets: &[AutValue],
) -> Result<JVal, Error> {
    let grid = polydisc_grid(&vec![1.0; curve.n], 5, &[0.5, 1.0]);
    let sample: Vec<Vec<Scalar>> = grid.into_iter().take(20).collect();
    let mut per_node = Vec::new();
    let mut max_err: f64 = 0.0;
    for (x, t) in nodes.iter().zip(targets) {
        let v = curve.eval_at(&x.to_approx())?;
        let ta = shearflow_core::engine::to_approx_value(t);
        let mut err: f64 = 0.0;
        for z in &sample {
            let a = v.eval(z)?;
            let b = ta.eval(z)?;
            let d2: f64 = a.iter().zip(&b).map(|(p, q)| p.sub(q).norm().powi(2)).sum();
            err = err.max(d2.sqrt());
        }
        max_err = max_err.max(err);
        per_node.push(JVal::Float(err));
    }
    let mut certified = true;
    for k in 0..10 {
        let x = Scalar::from_f64(0.37 * k as f64 - 1.2, 0.21 * k as f64 - 0.8);
        let v = curve.eval_at(&x)?;
        if certify_value(&v, curve.tag, &sample[..5.min(sample.len())], 1e-6).is_err() {
            certified = false;
        }
    }
    Ok(JVal::Obj(vec![
        ("max_node_error", JVal::Float(max_err)),
        ("per_node_errors", JVal::Arr(per_node)),
        ("offnode_group_certified", JVal::Bool(certified)),
    ]))
}

fn run_interpolate(io: &IoArgs, tag: &Option<String>, start: Instant) -> Result<(), Error> {
    let v = read_json(&io.input)?;
    let mut data = json::parse_node_data(&v)?;
    if let Some(t) = tag {
        data.tag = shearflow_core::shear::GroupTag::parse(t)?;
    }
    let curve = interpolate_full(&data)?;
    emit(io, &json::curve_to_jval(&curve))?;
    let report = verify_curve(&curve, &data.nodes, &data.targets)?;
    emit_report(io, &report)?;
    write_manifest(
        io,
        "interpolate",
        vec![("tag", JVal::Str(data.tag.as_str().into()))],
        start,
    )
}

fn run_interpolate_planar(io: &IoArgs, start: Instant) -> Result<(), Error> {
    let v = read_json(&io.input)?;
    let data = json::parse_node_data(&v)?;
    // Planar targets must be polynomial maps.
    let mut maps: Vec<PolyMap> = Vec::with_capacity(data.targets.len());
    for t in &data.targets {
        maps.push(t.to_polymap()?);
    }
    let curve = interp_planar_bounded(&data.nodes, &maps)?;
    emit(io, &json::curve_to_jval(&curve))?;
    let report = verify_curve(&curve, &data.nodes, &data.targets)?;
    emit_report(io, &report)?;
    write_manifest(io, "interpolate-planar", vec![], start)
}

fn run_eval(io: &IoArgs, at: &Option<String>, start: Instant) -> Result<(), Error> {
    let v = read_json(&io.input)?;
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Invalid("eval input must be an object".into()))?;
    let target = obj
        .get("target")
        .ok_or_else(|| Error::Invalid("eval input needs a \"target\"".into()))?;
    let points: Vec<Vec<Scalar>> = obj
        .get("points")
        .ok_or_else(|| Error::Invalid("eval input needs \"points\"".into()))?
        .as_array()
        .ok_or_else(|| Error::Invalid("points must be an array".into()))?
        .iter()
        .map(|p| {
            p.as_array()
                .ok_or_else(|| Error::Invalid("each point is an array of scalars".into()))?
                .iter()
                .map(json::parse_scalar)
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;

    let is_param_word = target
        .get("generators")
        .and_then(|g| g.as_array())
        .map(|a| {
            a.iter().any(|g| {
                g.get("t_poly").is_some()
                    || g.get("kind").and_then(|k| k.as_str()) == Some("affine_param")
            })
        })
        .unwrap_or(false);
    let value: AutValue = if target.get("factors").is_some() {
        let curve = json::parse_curve(target)?;
        let x = at
            .as_ref()
            .ok_or_else(|| Error::Invalid("curves need --at <parameter>".into()))?;
        let x = parse_node(x, curve.backend)?;
        curve.eval_at(&x)?
    } else if is_param_word {
        let word = json::parse_param_word(target)?;
        let x = at
            .as_ref()
            .ok_or_else(|| Error::Invalid("parameterized words need --at <parameter>".into()))?;
        let x = parse_node(x, word.backend)?;
        AutValue::from_word(word.eval_at(&x)?)
    } else if target.get("generators").is_some() {
        AutValue::from_word(json::parse_word(target)?)
    } else {
        json::parse_aut(target)?
    };

    let mut rows = Vec::with_capacity(points.len());
    for p in &points {
        let out = value.eval(p)?;
        rows.push(JVal::Arr(out.iter().map(json::scalar_to_jval).collect()));
    }
    emit(io, &JVal::Obj(vec![("values", JVal::Arr(rows))]))?;
    write_manifest(
        io,
        "eval",
        vec![("at", JVal::Str(at.clone().unwrap_or_default()))],
        start,
    )
}
