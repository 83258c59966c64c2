//! Scene files, command dispatch, reports and SVG output for `hn`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::class_partition::{limit_hull, partition, OrbitProxy, Separation};
use crate::exact::{format_rational, parse_rational, to_f64, RatVector, Rational};
use crate::horseshoe_graph::{graph_t, order_check, Edge, GeodesicOracle, Horseshoe, HorseshoeGraph, SeparationOracle, TableOracle};
use crate::hyperbolic::FuchsianRep;
use crate::leaf_space::{f_transverse_intersection, parse_chord_file, self_transverse_with_deck, TransversePath};
use crate::markov_rect::{build_map, chain_point, is_markovian, is_pre_markovian, normalize, perturbation_margin, RectangleSpec, TriangleSpec};
use crate::orbit_realization::{realize_finite, realize_set, RealizationStream};
use crate::rotation_polytopes::{class_polytope, maximal_chains, rot_graph, shape_diagnostics, RatPolytope};
use crate::surface_group::GroupWord;

pub const DEFAULT_DEPTH: usize = 6;
pub const DEFAULT_GEOM_TOL: f64 = 1e-9;

/// One problem found while loading a scene.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneIssue {
    pub location: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", render_issues(.0))]
    Scene(Vec<SceneIssue>),
    #[error("{0}")]
    Input(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn render_issues(issues: &[SceneIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("{}: {}", i.location, i.message))
        .collect::<Vec<_>>()
        .join("\n")
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHorseshoe {
    id: String,
    period: u64,
    decks: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    from: String,
    to: String,
    n: u64,
    word: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOrbit {
    word: String,
    period: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneOptions {
    pub depth: Option<usize>,
    pub geom_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeparation {
    from: String,
    separator: String,
    to: String,
    value: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    genus: usize,
    horseshoes: Vec<RawHorseshoe>,
    #[serde(default)]
    edges: Vec<RawEdge>,
    #[serde(default)]
    orbits: Vec<RawOrbit>,
    #[serde(default)]
    options: SceneOptions,
    #[serde(default)]
    separations: Option<Vec<RawSeparation>>,
}

/// A validated scene.
#[derive(Debug, Clone)]
pub struct Scene {
    pub genus: usize,
    pub graph: HorseshoeGraph,
    pub orbits: Vec<(GroupWord, u64)>,
    pub options: SceneOptions,
    /// Separation table keyed by horseshoe ids `(from, separator, to)`.
    pub separations: Option<BTreeMap<(String, String, String), Separation>>,
}

pub fn load_scene(path: &Path) -> Result<Scene, CliError> {
    let text = std::fs::read_to_string(path)?;
    parse_scene(&text)
}

pub fn parse_scene(text: &str) -> Result<Scene, CliError> {
    let raw: RawScene = serde_json::from_str(text).map_err(|e| {
        CliError::Scene(vec![SceneIssue {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        }])
    })?;
    let mut issues = Vec::new();
    let mut issue = |location: String, message: String| issues.push(SceneIssue { location, message });
    if raw.genus < 2 {
        issue("genus".into(), format!("genus must be at least 2, found {}", raw.genus));
        return Err(CliError::Scene(issues));
    }
    let g = raw.genus;
    let mut horseshoes = Vec::new();
    for (i, h) in raw.horseshoes.iter().enumerate() {
        let mut decks = Vec::new();
        for (k, d) in h.decks.iter().enumerate() {
            match GroupWord::parse(g, d) {
                Ok(w) => decks.push(w),
                Err(e) => issue(format!("horseshoes[{i}].decks[{k}]"), e.to_string()),
            }
        }
        if h.period == 0 {
            issue(format!("horseshoes[{i}].period"), "period must be positive".into());
        }
        if h.decks.is_empty() {
            issue(format!("horseshoes[{i}].decks"), "at least one deck word is required".into());
        }
        horseshoes.push(Horseshoe {
            id: h.id.clone(),
            period: h.period,
            decks,
        });
    }
    let ids: Vec<&str> = raw.horseshoes.iter().map(|h| h.id.as_str()).collect();
    let mut edges = Vec::new();
    for (i, e) in raw.edges.iter().enumerate() {
        for (field, id) in [("from", &e.from), ("to", &e.to)] {
            if !ids.contains(&id.as_str()) {
                issue(format!("edges[{i}].{field}"), format!("unknown horseshoe id `{id}`"));
            }
        }
        if e.n == 0 {
            issue(format!("edges[{i}].n"), "label n must be positive".into());
        }
        match GroupWord::parse(g, &e.word) {
            Ok(w) => edges.push(Edge {
                from: e.from.clone(),
                to: e.to.clone(),
                n: e.n,
                word: w,
            }),
            Err(err) => issue(format!("edges[{i}].word"), err.to_string()),
        }
    }
    let mut orbits = Vec::new();
    for (i, o) in raw.orbits.iter().enumerate() {
        match GroupWord::parse(g, &o.word) {
            Ok(w) => orbits.push((w, o.period)),
            Err(err) => issue(format!("orbits[{i}].word"), err.to_string()),
        }
        if o.period == 0 {
            issue(format!("orbits[{i}].period"), "period must be positive".into());
        }
    }
    let separations = raw.separations.as_ref().map(|seps| {
        let mut table = BTreeMap::new();
        for (i, s) in seps.iter().enumerate() {
            for (field, id) in [("from", &s.from), ("separator", &s.separator), ("to", &s.to)] {
                if !ids.contains(&id.as_str()) {
                    issue(format!("separations[{i}].{field}"), format!("unknown horseshoe id `{id}`"));
                }
            }
            let v = match s.value.as_str() {
                "yes" => Separation::Yes,
                "no" => Separation::No,
                "unknown" => Separation::Unknown,
                other => {
                    issue(format!("separations[{i}].value"), format!("expected yes/no/unknown, found `{other}`"));
                    continue;
                }
            };
            table.insert((s.from.clone(), s.separator.clone(), s.to.clone()), v);
        }
        table
    });
    if !issues.is_empty() {
        return Err(CliError::Scene(issues));
    }
    let graph = HorseshoeGraph::new(g, horseshoes, edges).map_err(|e| {
        CliError::Scene(vec![SceneIssue {
            location: "horseshoes".into(),
            message: e.to_string(),
        }])
    })?;
    Ok(Scene {
        genus: g,
        graph,
        orbits,
        options: raw.options,
        separations,
    })
}

#[derive(Debug, Parser)]
#[command(name = "hn", about = "Rotational horseshoe networks: rotation sets, classes and orbit synthesis")]
pub struct Cli {
    /// Conjugator search depth for geometric predicates.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Tolerance for floating-point geometry.
    #[arg(long = "geom-tol", global = true)]
    pub geom_tol: Option<f64>,
    /// Seed for probe sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scene: class order, geodesic consistency, shape bounds.
    Validate { scene: PathBuf },
    /// Strongly connected components, condensation and filtration.
    Scc { scene: PathBuf },
    /// Class reachability, optionally between two horseshoes.
    Reach {
        scene: PathBuf,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
    },
    /// Partition of the scene orbits into classes.
    Classes { scene: PathBuf },
    /// The graph of classes.
    GraphT { scene: PathBuf },
    /// Rotation set of the graph as a list of polytopes.
    Rotset {
        scene: PathBuf,
        /// Random membership probes to report.
        #[arg(long, default_value_t = 0)]
        probes: usize,
    },
    /// A word or stream realizing a target rotation vector.
    Realize {
        scene: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long, default_value = "1/100")]
        eps: String,
        /// Emit this many stream symbols instead of a finite word.
        #[arg(long)]
        symbols: Option<usize>,
        /// Certificate side file.
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// A stream whose rotations accumulate on a net of vectors.
    RealizeSet {
        scene: PathBuf,
        /// JSON list of vectors, each a list of "p/q" strings.
        #[arg(long)]
        net: PathBuf,
        #[arg(long, default_value = "1/10")]
        eps: String,
        #[arg(long, default_value_t = 1000)]
        symbols: usize,
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// Markovian intersections and chain points of planar rectangles.
    Markov { problem: PathBuf },
    /// Transverse intersections of chord paths.
    Leafspace {
        chords: PathBuf,
        #[arg(long, default_value_t = 2)]
        genus: usize,
    },
    /// SVG projection of the rotation set.
    Svg {
        scene: PathBuf,
        #[arg(long, num_args = 2, default_values_t = [0, 1])]
        axes: Vec<usize>,
    },
}

/// Command output: main document, side files and advisory warnings.
#[derive(Debug, Clone, Default)]
pub struct Output {
    pub stdout: String,
    pub side_files: Vec<(PathBuf, String)>,
    pub warnings: Vec<String>,
}

impl Output {
    pub fn exit_code(&self) -> i32 {
        if self.warnings.is_empty() {
            0
        } else {
            2
        }
    }
}

struct Settings {
    depth: usize,
    tol: f64,
    seed: u64,
}

fn settings(cli: &Cli, scene: Option<&Scene>) -> Settings {
    let opts = scene.map(|s| s.options.clone()).unwrap_or_default();
    Settings {
        depth: cli.depth.or(opts.depth).unwrap_or(DEFAULT_DEPTH),
        tol: cli.geom_tol.or(opts.geom_tol).unwrap_or(DEFAULT_GEOM_TOL),
        seed: cli.seed,
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn rep_for(genus: usize) -> Result<FuchsianRep, CliError> {
    FuchsianRep::new(genus).map_err(input_err)
}

fn poly_json(p: &RatPolytope) -> Value {
    json!({
        "vertices": p.vertices,
        "affine_dim": p.affine_dim(),
    })
}

fn ids(g: &HorseshoeGraph, vs: &[usize]) -> Vec<String> {
    vs.iter().map(|&v| g.vertices()[v].id.clone()).collect()
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Validate { scene } => validate(cli, &load_scene(scene)?),
        Command::Scc { scene } => scc(&load_scene(scene)?),
        Command::Reach { scene, from, to } => reach(&load_scene(scene)?, from.as_deref(), to.as_deref()),
        Command::Classes { scene } => classes(cli, &load_scene(scene)?),
        Command::GraphT { scene } => graph_t_cmd(cli, &load_scene(scene)?),
        Command::Rotset { scene, probes } => rotset(cli, &load_scene(scene)?, *probes),
        Command::Realize {
            scene,
            target,
            eps,
            symbols,
            cert,
        } => realize(&load_scene(scene)?, target, eps, *symbols, cert.as_deref()),
        Command::RealizeSet {
            scene,
            net,
            eps,
            symbols,
            cert,
        } => realize_set_cmd(&load_scene(scene)?, net, eps, *symbols, cert.as_deref()),
        Command::Markov { problem } => markov(problem),
        Command::Leafspace { chords, genus } => leafspace(chords, *genus),
        Command::Svg { scene, axes } => {
            let s = load_scene(scene)?;
            let polys = rot_graph(&s.graph).map_err(input_err)?;
            let svg = emit_svg(&polys, (axes[0], axes[1])).map_err(input_err)?;
            Ok(Output {
                stdout: svg,
                ..Output::default()
            })
        }
    }
}

fn validate(cli: &Cli, s: &Scene) -> Result<Output, CliError> {
    let st = settings(cli, Some(s));
    let rep = rep_for(s.genus)?;
    let report = order_check(&s.graph, &rep, st.depth, st.tol).map_err(input_err)?;
    let mut warnings = Vec::new();
    for (a, b) in &report.antisymmetry_violations {
        warnings.push(format!("class order antisymmetry: classes {a} and {b} reach each other"));
    }
    for m in &report.mismatches {
        warnings.push(format!(
            "class order vs geodesic transversality: {}",
            serde_json::to_string(m).expect("serializable")
        ));
    }
    let mut shape = Vec::new();
    let mut orbit_issues = Vec::new();
    let proxies: Vec<OrbitProxy> = s
        .orbits
        .iter()
        .enumerate()
        .filter_map(|(i, (w, p))| match OrbitProxy::new(w.clone(), *p, &rep) {
            Ok(o) => Some(o),
            Err(e) => {
                orbit_issues.push(format!("orbit {i}: {e}"));
                None
            }
        })
        .collect();
    for w in &orbit_issues {
        warnings.push(format!("orbit proxy needs a hyperbolic deck: {w}"));
    }
    if !proxies.is_empty() {
        let part = partition(&proxies, &rep, st.depth, st.tol).map_err(input_err)?;
        let polys: Vec<(usize, RatPolytope)> = part
            .classes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.chaotic)
            .map(|(ci, c)| {
                let pts: Vec<RatVector> = c
                    .members
                    .iter()
                    .map(|&m| proxies[m].word.abelianize().to_rat().div_int(proxies[m].period as i64))
                    .collect();
                (ci, RatPolytope::from_points(&pts).expect("nonempty class"))
            })
            .collect();
        let refs: Vec<(usize, &RatPolytope)> = polys.iter().map(|(c, p)| (*c, p)).collect();
        shape = shape_diagnostics(s.genus, &refs);
        for w in &shape {
            let rule = match w {
                crate::rotation_polytopes::ShapeWarning::TooManyChaoticClasses { .. } => "at most 2g-2 chaotic classes",
                crate::rotation_polytopes::ShapeWarning::ZeroNotInClassSet { .. } => "chaotic class rotation set contains 0",
            };
            warnings.push(format!("{rule}: {}", serde_json::to_string(w).expect("serializable")));
        }
    }
    let doc = json!({
        "genus": s.genus,
        "vertices": s.graph.len(),
        "edges": s.graph.edges().len(),
        "order_check": report,
        "shape": shape,
        "warnings": warnings,
    });
    Ok(Output {
        stdout: pretty(&doc),
        warnings,
        ..Output::default()
    })
}

fn scc(s: &Scene) -> Result<Output, CliError> {
    let g = &s.graph;
    let cond = g.condensation();
    let classes: Vec<Value> = (0..cond.num_classes())
        .map(|c| json!({ "class": c, "members": ids(g, &cond.members[c]), "successors": cond.dag[c] }))
        .collect();
    let doc = json!({
        "classes": classes,
        "class_of": g.vertices().iter().enumerate().map(|(v, h)| (h.id.clone(), cond.class_of[v])).collect::<BTreeMap<_, _>>(),
        "filtration": cond.filtration(),
        "maximal_chains": maximal_chains(&cond),
    });
    Ok(Output {
        stdout: pretty(&doc),
        ..Output::default()
    })
}

fn reach(s: &Scene, from: Option<&str>, to: Option<&str>) -> Result<Output, CliError> {
    let g = &s.graph;
    let cond = g.condensation();
    let idx = |id: &str| g.vertex_index(id).ok_or_else(|| CliError::Input(format!("unknown horseshoe id `{id}`")));
    let doc = match (from, to) {
        (Some(a), Some(b)) => {
            let (va, vb) = (idx(a)?, idx(b)?);
            let r = va == vb || cond.class_reach(cond.class_of[va], cond.class_of[vb]).map_err(input_err)?;
            json!({ "from": a, "to": b, "reachable": r })
        }
        (None, None) => {
            let m = cond.reach_matrix();
            json!({ "classes": cond.members.iter().map(|ms| ids(g, ms)).collect::<Vec<_>>(), "reach": m })
        }
        _ => return Err(CliError::Input("give both --from and --to, or neither".into())),
    };
    Ok(Output {
        stdout: pretty(&doc),
        ..Output::default()
    })
}

fn classes(cli: &Cli, s: &Scene) -> Result<Output, CliError> {
    let st = settings(cli, Some(s));
    let rep = rep_for(s.genus)?;
    let proxies = s
        .orbits
        .iter()
        .map(|(w, p)| OrbitProxy::new(w.clone(), *p, &rep))
        .collect::<Result<Vec<_>, _>>()
        .map_err(input_err)?;
    let part = partition(&proxies, &rep, st.depth, st.tol).map_err(input_err)?;
    let hulls: Vec<Value> = part
        .classes
        .iter()
        .map(|c| {
            let words: Vec<GroupWord> = c.members.iter().map(|&m| proxies[m].word.clone()).collect();
            match limit_hull(&words, &rep, st.depth, st.tol) {
                Ok(h) => json!({ "anchor": h.anchor, "points": h.points, "gaps": h.gaps() }),
                Err(e) => json!({ "error": e.to_string() }),
            }
        })
        .collect();
    let doc = json!({ "partition": part, "hulls": hulls });
    Ok(Output {
        stdout: pretty(&doc),
        ..Output::default()
    })
}

fn graph_t_cmd(cli: &Cli, s: &Scene) -> Result<Output, CliError> {
    let st = settings(cli, Some(s));
    let g = &s.graph;
    let cond = g.condensation();
    let oracle: Box<dyn SeparationOracle> = match &s.separations {
        Some(table) => {
            let mut t = TableOracle::default();
            for ((a, b, c), v) in table {
                let class = |id: &str| cond.class_of[g.vertex_index(id).expect("validated ids")];
                t.table.insert((class(a), class(b), class(c)), *v);
            }
            Box::new(t)
        }
        None => Box::new(GeodesicOracle::new(g, &cond, &rep_for(s.genus)?, st.depth, st.tol)),
    };
    let edges = graph_t(&cond, oracle.as_ref());
    let doc = json!({
        "oracle": if s.separations.is_some() { "table" } else { "geodesic" },
        "classes": cond.members.iter().map(|ms| ids(g, ms)).collect::<Vec<_>>(),
        "edges": edges,
    });
    Ok(Output {
        stdout: pretty(&doc),
        ..Output::default()
    })
}

fn rotset(cli: &Cli, s: &Scene, probes: usize) -> Result<Output, CliError> {
    let g = &s.graph;
    let polys = rot_graph(g).map_err(input_err)?;
    let cond = g.condensation();
    let class_polys: Vec<Value> = (0..cond.num_classes())
        .map(|c| json!({ "class": c, "members": ids(g, &cond.members[c]), "polytope": poly_json(&class_polytope(g, &cond, c)) }))
        .collect();
    let mut doc = json!({
        "genus": s.genus,
        "rotation_set": polys.iter().map(poly_json).collect::<Vec<_>>(),
        "classes": class_polys,
    });
    if probes > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(settings(cli, Some(s)).seed);
        let dim = 2 * s.genus;
        let mut inside = 0usize;
        let mut samples = Vec::new();
        for _ in 0..probes {
            let v = RatVector(
                (0..dim)
                    .map(|_| crate::exact::ratio(rng.gen_range(-7..=7), rng.gen_range(1..=7)))
                    .collect(),
            );
            let hit = polys.iter().any(|p| p.contains(&v));
            inside += hit as usize;
            if samples.len() < 20 {
                samples.push(json!({ "probe": v, "inside": hit }));
            }
        }
        doc["probes"] = json!({ "count": probes, "inside": inside, "first": samples });
    }
    Ok(Output {
        stdout: pretty(&doc),
        ..Output::default()
    })
}

fn parse_eps(s: &str) -> Result<Rational, CliError> {
    let e = parse_rational(s).map_err(input_err)?;
    if e < Rational::from_integer(0.into()) {
        return Err(CliError::Input("eps must be nonnegative".into()));
    }
    Ok(e)
}

fn realize(s: &Scene, target: &str, eps: &str, symbols: Option<usize>, cert: Option<&Path>) -> Result<Output, CliError> {
    let g = &s.graph;
    let rho = RatVector::parse_list(target).map_err(input_err)?;
    let eps = parse_eps(eps)?;
    let mut out = Output::default();
    match symbols {
        Some(n) => {
            let mut st = RealizationStream::new(g, &rho).map_err(input_err)?;
            let syms = st.take_symbols(n).map_err(input_err)?;
            let edges: Vec<usize> = syms.iter().map(|x| x.edge).collect();
            let mut text = format!("target {}\nunit deviation {}\n", rho.to_text(), format_rational(st.unit_deviation()));
            text.push_str("stage\tword_edges\tword_time\tpower\toffset\tbound\tword_error\n");
            for stage in st.stages() {
                let _ = writeln!(
                    text,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    stage.stage,
                    stage.word.edge_count,
                    stage.word.time,
                    stage.power,
                    stage.offset,
                    format_rational(&stage.bound),
                    format_rational(&stage.word.error)
                );
            }
            if let Some(l) = st.deviation_bound() {
                let _ = writeln!(text, "deviation bound {}", format_rational(&l));
            }
            let last = syms.last();
            let doc = json!({
                "target": rho,
                "edges": edges,
                "final_stage": last.map(|x| x.stage),
                "final_bound": last.map(|x| format_rational(&x.bound)),
                "checkpoint": st.checkpoint(),
            });
            out.stdout = pretty(&doc);
            if let Some(p) = cert {
                out.side_files.push((p.to_path_buf(), text));
            }
        }
        None => {
            let cond = g.condensation();
            let chain = maximal_chains(&cond)
                .into_iter()
                .find(|ch| {
                    let pts: Vec<RatVector> = ch.iter().flat_map(|&c| class_polytope(g, &cond, c).vertices).collect();
                    RatPolytope::from_points(&pts).map(|p| p.contains(&rho)).unwrap_or(false)
                })
                .ok_or_else(|| CliError::Input("target lies outside the rotation set".into()))?;
            let scope: Vec<usize> = chain.iter().flat_map(|&c| cond.members[c].iter().copied()).collect();
            let w = realize_finite(g, &scope, &rho, &eps, None).map_err(input_err)?;
            let doc = json!({
                "target": rho,
                "eps": format_rational(&eps),
                "word": w,
                "rotation": w.rotation(),
            });
            out.stdout = pretty(&doc);
            if let Some(p) = cert {
                let text = format!(
                    "target {}\nbound {}\nerror {}\ntime {}\nedges {}\n",
                    rho.to_text(),
                    format_rational(&w.bound),
                    format_rational(&w.error),
                    w.time,
                    w.edge_count
                );
                out.side_files.push((p.to_path_buf(), text));
            }
        }
    }
    Ok(out)
}

fn realize_set_cmd(s: &Scene, net: &Path, eps: &str, symbols: usize, cert: Option<&Path>) -> Result<Output, CliError> {
    let raw = std::fs::read_to_string(net)?;
    let net: Vec<RatVector> = serde_json::from_str(&raw).map_err(input_err)?;
    let eps = parse_eps(eps)?;
    let mut st = realize_set(&s.graph, &net, &eps).map_err(input_err)?;
    let syms = st.take_symbols(symbols);
    let c = st.certificate();
    let mut out = Output::default();
    let doc = json!({
        "net": net,
        "eps": format_rational(&eps),
        "burn_in": c.burn_in,
        "edges": syms.iter().map(|x| x.edge).collect::<Vec<_>>(),
        "dwells": st.dwells(),
    });
    out.stdout = pretty(&doc);
    if let Some(p) = cert {
        let mut text = format!("eps {}\nburn_in {}\ngrowth {}\n", format_rational(&c.eps), c.burn_in, format_rational(&c.growth));
        for (i, w) in c.words.iter().enumerate() {
            let _ = writeln!(text, "word {i}\ttime {}\terror {}", w.time, format_rational(&w.error));
        }
        out.side_files.push((p.to_path_buf(), text));
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum MarkovProblem {
    Intersection { r1: RectangleSpec, r2: RectangleSpec },
    Chain { rectangles: Vec<RectangleSpec>, maps: Vec<Vec<TriangleSpec>>, tol: f64 },
}

fn markov(path: &Path) -> Result<Output, CliError> {
    let raw = std::fs::read_to_string(path)?;
    let problem: MarkovProblem = serde_json::from_str(&raw).map_err(input_err)?;
    let doc = match problem {
        MarkovProblem::Intersection { r1, r2 } => {
            let (a, b) = normalize(&r1.build().map_err(input_err)?, &r2.build().map_err(input_err)?).map_err(input_err)?;
            let pre = is_pre_markovian(&a, &b).map_err(input_err)?;
            let witness = is_markovian(&a, &b).map_err(input_err)?;
            let margin = match &witness {
                Some(_) => Some(format_rational(&perturbation_margin(&a, &b).map_err(input_err)?)),
                None => None,
            };
            json!({
                "pre_markovian": pre,
                "markovian": witness.is_some(),
                "witness": witness.as_ref().map(RectangleSpec::from_rectangle),
                "margin": margin,
                "normalized": true,
            })
        }
        MarkovProblem::Chain { rectangles, maps, tol } => {
            let rects = rectangles.iter().map(|r| r.build()).collect::<Result<Vec<_>, _>>().map_err(input_err)?;
            let maps = maps.iter().map(|m| build_map(m)).collect::<Result<Vec<_>, _>>().map_err(input_err)?;
            let p = chain_point(&rects, &maps, tol).map_err(input_err)?;
            json!({ "point": p, "approx": [to_f64(&p.x[0]), to_f64(&p.x[1])] })
        }
    };
    Ok(Output {
        stdout: pretty(&doc),
        ..Output::default()
    })
}

fn leafspace(path: &Path, genus: usize) -> Result<Output, CliError> {
    let text = std::fs::read_to_string(path)?;
    let (paths, decks) = parse_chord_file(&text).map_err(CliError::Input)?;
    let paths = paths
        .into_iter()
        .map(TransversePath::new)
        .collect::<Result<Vec<_>, _>>()
        .map_err(input_err)?;
    let mut pairs = Vec::new();
    for i in 0..paths.len() {
        for j in i + 1..paths.len() {
            for (t1, l1) in paths[i].leaves().iter().enumerate() {
                for (t2, l2) in paths[j].leaves().iter().enumerate() {
                    if l1.approx_eq(l2) {
                        let r = f_transverse_intersection(&paths[i], t1, &paths[j], t2).map_err(input_err)?;
                        pairs.push(json!({ "paths": [i, j], "pivot": [t1, t2], "transverse": r }));
                    }
                }
            }
        }
    }
    let mut selfs = Vec::new();
    if !decks.is_empty() {
        let rep = rep_for(genus)?;
        for (i, p) in paths.iter().enumerate() {
            for d in &decks {
                let w = GroupWord::parse(genus, d).map_err(input_err)?;
                let t = rep.evaluate(&w);
                let r = self_transverse_with_deck(p, &t).map_err(input_err)?;
                selfs.push(json!({ "path": i, "deck": d, "witness": r }));
            }
        }
    }
    let doc = json!({ "paths": paths.len(), "pairs": pairs, "self": selfs });
    Ok(Output {
        stdout: pretty(&doc),
        ..Output::default()
    })
}

/// `x` with 12 significant digits, trailing zeros trimmed.
fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (11 - mag).max(0) as usize;
    let mut s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// One `<polygon>` per polytope, projected to the given coordinate axes.
pub fn emit_svg(polytopes: &[RatPolytope], axes: (usize, usize)) -> Result<String, crate::rotation_polytopes::RotError> {
    let shapes = polytopes.iter().map(|p| p.project2d(axes)).collect::<Result<Vec<_>, _>>()?;
    let pts: Vec<(f64, f64)> = shapes.iter().flatten().map(|q| (to_f64(&q[0]), to_f64(&q[1]))).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (-1.0f64, 1.0f64, -1.0f64, 1.0f64);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let pad = 0.05 * (x1 - x0).max(y1 - y0);
    let (vx, vy, vw, vh) = (x0 - pad, -(y1 + pad), x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad);
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="480" height="480">"#,
        sig12(vx),
        sig12(vy),
        sig12(vw),
        sig12(vh)
    );
    let stroke = sig12(vw.max(vh) / 300.0);
    let _ = writeln!(
        out,
        r##"  <g fill="none" stroke="#999" stroke-width="{stroke}"><line x1="{}" y1="0" x2="{}" y2="0"/><line x1="0" y1="{}" x2="0" y2="{}"/></g>"##,
        sig12(vx),
        sig12(vx + vw),
        sig12(vy),
        sig12(vy + vh)
    );
    for (i, shape) in shapes.iter().enumerate() {
        let coords: Vec<String> = shape
            .iter()
            .map(|q| format!("{},{}", sig12(to_f64(&q[0])), sig12(-to_f64(&q[1]))))
            .collect();
        let _ = writeln!(
            out,
            r##"  <polygon id="p{i}" points="{}" fill="#4a7ab5" fill-opacity="0.35" stroke="#1d3d66" stroke-width="{stroke}"/>"##,
            coords.join(" ")
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Parses arguments, runs, writes side files and prints; returns the
/// exit code (0 ok, 2 warnings, 1 errors).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(out) => {
            for (p, text) in &out.side_files {
                if let Err(e) = std::fs::write(p, text) {
                    eprintln!("error: writing {}: {e}", p.display());
                    return 1;
                }
            }
            print!("{}", out.stdout);
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            out.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
