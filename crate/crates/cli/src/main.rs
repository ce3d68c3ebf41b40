mod experiment;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_rational::Rational64;
use rainbow_subdiv::blowup::{
    auxiliary_graph, build_krr_collection, find_blowup_subdivision, intersection_relation_check,
    recheck_codegree, verify_blowup, BlowupCertificate, BlowupOptions,
};
use rainbow_subdiv::expander::{
    almost_regular_expander, edge_expansion_check, extract_expander, regularize_bipartite,
    verify_expander, AlmostRegularOpts, ExpanderParams,
};
use rainbow_subdiv::generators;
use rainbow_subdiv::graph::ColouredGraph;
use rainbow_subdiv::io::{
    format_coloured_graph, format_graph, load_any, load_coloured_graph, LoadedGraph,
};
use rainbow_subdiv::params::{reference_params, ParamSheet, PipelineParams, ReferenceParams};
use rainbow_subdiv::spectral::{
    check_eigen_conductance_bound, conductance, mixing_deviation, mixing_rows, spectrum,
    Conductance,
};
use rainbow_subdiv::subdivision::{
    find_rooted_subdivision, find_subdivision, prepare_rainbow_expander, verify_subdivision,
    SubdivisionCertificate,
};
use rainbow_subdiv::walkcount::{
    count_degenerate_exact, count_paths, estimate_degenerate, good_pairs,
    related_cycles_bound_check, DegenerateStats, GoodPairMode, Relation, DEFAULT_ENUM_BUDGET,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "rsub",
    about = "Rainbow clique subdivisions at desk scale: generators, expanders, walk counts, searches and verifiers",
    version
)]
struct Cli {
    /// Root seed; every stage derives its own stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Scale factor applied to the formula parameters (k, s, ell, L, q).
    #[arg(long, global = true)]
    scale: Option<f64>,
    /// Write the full result as JSON here.
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,
    /// Write tabular output as CSV here.
    #[arg(long, global = true)]
    csv_out: Option<PathBuf>,
    /// Largest n for exact subset/conductance enumeration.
    #[arg(long, global = true, default_value_t = 22)]
    exact_max_n: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Instance generators; graphs go to stdout or --out.
    #[command(subcommand)]
    Gen(GenCmd),
    /// d-minimal subgraphs, expander verification and extraction.
    #[command(subcommand)]
    Expander(ExpanderCmd),
    /// Walk matrices, spectra, conductance and mixing checks.
    #[command(subcommand)]
    Spectral(SpectralCmd),
    /// Exact and Monte-Carlo walk counting and good pairs.
    #[command(subcommand)]
    Walks(WalksCmd),
    /// Rainbow subdivision search and verification.
    #[command(subcommand)]
    Subdiv(SubdivCmd),
    /// Blow-up collections, auxiliary graphs and blow-up search.
    #[command(subcommand)]
    Blowup(BlowupCmd),
    /// The parameter sheet: formula values next to scaled desk values.
    Params(ParamsArgs),
    /// Run a TOML experiment and write a report bundle.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(Args)]
struct OutArg {
    /// Output file (defaults to stdout).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCmd {
    /// Hypercube Q_k with the direction colouring (no rainbow cycles).
    Hypercube {
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Erdős–Rényi G(n, p).
    Gnp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        /// Greedy proper colouring of the sample.
        #[arg(long)]
        colour: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// r-blow-up of a k-cycle.
    BlowupCycle {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        r: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Blow-up-cycle-free lower-bound instance from G(n, n^{-1/r}).
    Crfree {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 4)]
        kmax: usize,
        /// Edge-count target coefficient: requires at least c n^{2 - 1/r}.
        #[arg(long, default_value_t = 0.2)]
        c: f64,
        #[arg(long, default_value_t = 100_000_000)]
        budget: usize,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Subcommand)]
enum ExpanderCmd {
    /// Extract a (d', eta, eps)-expander with d' at least half the input density.
    Extract {
        input: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
    },
    /// Verify the expander definition for explicit parameters.
    Verify {
        input: PathBuf,
        /// Average-degree threshold (integer or fraction like 7/2).
        #[arg(long)]
        d: String,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        eps: f64,
        /// Also run the exhaustive edge-expansion check.
        #[arg(long)]
        edge_expansion: bool,
    },
    /// Degree regularization of a bipartite graph.
    Regularize {
        input: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        relaxed: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Almost-regular expander extraction.
    AlmostRegular {
        input: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long)]
        relaxed: bool,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Subcommand)]
enum SpectralCmd {
    /// Eigenvalues of the normalized walk matrix and basic facts.
    Summary { input: PathBuf },
    /// Mixing deviation of M^k against the stationary terms.
    Mixing {
        input: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Conductance: exact by enumeration up to --exact-max-n, bounds beyond.
    Conductance { input: PathBuf },
}

#[derive(Subcommand)]
enum WalksCmd {
    /// Exact walk table: hom_{x,y}(P_k) and hom_{x,y}(C_{2k}).
    Count {
        input: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Degenerate closed-walk statistics for one pair.
    Degenerate {
        input: PathBuf,
        #[arg(long)]
        x: usize,
        #[arg(long)]
        y: usize,
        #[arg(long)]
        k: usize,
        /// Monte-Carlo sample count; exact enumeration when omitted.
        #[arg(long)]
        mc: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_ENUM_BUDGET)]
        budget: usize,
    },
    /// Classify all same-side pairs against the 1/s^2 threshold.
    GoodPairs {
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        s: usize,
        /// Monte-Carlo samples per pair; exact enumeration when omitted.
        #[arg(long)]
        mc: Option<usize>,
    },
    /// Counting-lemma inequality margins for a relation.
    RelationCheck {
        input: PathBuf,
        #[arg(long)]
        k: usize,
        /// colour | vertex
        #[arg(long, default_value = "colour")]
        relation: String,
        #[arg(long, default_value_t = 1)]
        t: usize,
    },
}

#[derive(Args)]
struct SearchParamArgs {
    /// Walk length of the connectors (even).
    #[arg(long)]
    k: Option<usize>,
    /// Good-pair level: threshold is 1/s^2.
    #[arg(long)]
    s: Option<usize>,
    /// Reach-set growth rounds.
    #[arg(long)]
    ell: Option<usize>,
    /// Colour usage parameter of the robust reach step.
    #[arg(long)]
    q: Option<usize>,
    /// Monte-Carlo samples per good-pair estimate.
    #[arg(long)]
    mc: Option<usize>,
    /// Sampling rounds before a stage gives up.
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
}

impl SearchParamArgs {
    fn build(
        &self,
        m: usize,
        n: usize,
        scale: Option<f64>,
        r: Option<usize>,
    ) -> (PipelineParams, ParamSheet) {
        let reference = reference_params(n.max(2), self.eps, m, r);
        let mut used = match scale {
            Some(f) => PipelineParams::scaled(&reference, f),
            None => PipelineParams::desk(m),
        };
        used.eps = self.eps;
        if let Some(k) = self.k {
            used.k = k;
        }
        if let Some(s) = self.s {
            used.s = s;
        }
        if let Some(ell) = self.ell {
            used.ell = ell;
            used.big_l = used.big_l.max(2 * (ell + 1) + used.k);
        }
        if let Some(q) = self.q {
            used.q = q;
        }
        if let Some(mc) = self.mc {
            used.mc_samples = mc;
        }
        if let Some(rounds) = self.rounds {
            used.max_rounds = rounds;
        }
        let sheet = ParamSheet {
            reference,
            used: used.clone(),
            scale,
        };
        (used, sheet)
    }
}

#[derive(Subcommand)]
enum SubdivCmd {
    /// Search for a rainbow K_m-subdivision.
    Find {
        input: PathBuf,
        #[arg(long)]
        m: usize,
        /// Greedily colour an uncoloured input first.
        #[arg(long)]
        auto_colour: bool,
        #[command(flatten)]
        params: SearchParamArgs,
    },
    /// Rainbow K_m-subdivision rooted at prescribed branch vertices.
    Rooted {
        input: PathBuf,
        /// Comma-separated branch vertices (labels of the input graph).
        #[arg(long, value_delimiter = ',')]
        z: Vec<usize>,
        #[arg(long)]
        auto_colour: bool,
        #[command(flatten)]
        params: SearchParamArgs,
    },
    /// Verify a certificate against the graph.
    Verify {
        input: PathBuf,
        #[arg(long)]
        cert: PathBuf,
    },
}

#[derive(Subcommand)]
enum BlowupCmd {
    /// Build a bounded-codegree K_{r,r} collection.
    Collection {
        input: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 8)]
        cap: usize,
        #[arg(long, default_value_t = 200_000)]
        budget: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Search for an r-blow-up of a K_m-subdivision.
    Find {
        input: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 8)]
        cap: usize,
        #[arg(long, default_value_t = 200_000)]
        budget: usize,
        #[command(flatten)]
        params: SearchParamArgs,
    },
    /// Verify a blow-up certificate against the host graph.
    Verify {
        input: PathBuf,
        #[arg(long)]
        cert: PathBuf,
    },
}

#[derive(Args)]
struct ParamsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    r: Option<usize>,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Execute an experiment spec and write runs.jsonl, summary.json, runs.csv.
    Run {
        spec: PathBuf,
        #[arg(long, default_value = "experiment-out")]
        out_dir: PathBuf,
    },
}

fn parse_rational(text: &str) -> Result<Rational64> {
    if let Some((a, b)) = text.split_once('/') {
        let num: i64 = a.trim().parse().context("rational numerator")?;
        let den: i64 = b.trim().parse().context("rational denominator")?;
        if den == 0 {
            bail!("rational denominator is zero");
        }
        return Ok(Rational64::new(num, den));
    }
    if let Ok(int) = text.parse::<i64>() {
        return Ok(Rational64::from_integer(int));
    }
    let f: f64 = text.parse().context("rational value")?;
    Rational64::approximate_float(f).ok_or_else(|| anyhow!("cannot represent {text} as a rational"))
}

fn emit_graph(text: String, out: &OutArg) -> Result<()> {
    match &out.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {path:?}"))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Option<PathBuf>, value: &T) -> Result<()> {
    if let Some(path) = path {
        let text = serde_json::to_string_pretty(value)?;
        std::fs::write(path, text).with_context(|| format!("writing {path:?}"))?;
    }
    Ok(())
}

fn write_csv(path: &Option<PathBuf>, header: &str, rows: &[String]) -> Result<()> {
    if let Some(path) = path {
        let mut text = String::from(header);
        text.push('\n');
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        std::fs::write(path, text).with_context(|| format!("writing {path:?}"))?;
    }
    Ok(())
}

fn require_coloured(loaded: LoadedGraph, auto_colour: bool, seed: u64) -> Result<ColouredGraph> {
    match loaded {
        LoadedGraph::Coloured(cg) => Ok(cg),
        LoadedGraph::Plain(g) if auto_colour => Ok(generators::greedy_proper_colouring(&g, seed)),
        LoadedGraph::Plain(_) => {
            bail!("input has no colours; pass --auto-colour to colour it greedily")
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => Ok(()),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(cmd) => run_gen(&cli, cmd),
        Command::Expander(cmd) => run_expander(&cli, cmd),
        Command::Spectral(cmd) => run_spectral(&cli, cmd),
        Command::Walks(cmd) => run_walks(&cli, cmd),
        Command::Subdiv(cmd) => run_subdiv(&cli, cmd),
        Command::Blowup(cmd) => run_blowup(&cli, cmd),
        Command::Params(args) => run_params(&cli, args),
        Command::Experiment(ExperimentCmd::Run { spec, out_dir }) => {
            experiment::run_experiment(spec, out_dir)
        }
    }
}

fn run_gen(cli: &Cli, cmd: &GenCmd) -> Result<()> {
    match cmd {
        GenCmd::Hypercube { k, out } => {
            let cg = generators::hypercube_coloured(*k)?;
            emit_graph(format_coloured_graph(&cg), out)
        }
        GenCmd::Gnp { n, p, colour, out } => {
            let g = generators::random_graph(*n, *p, cli.seed);
            if *colour {
                let cg = generators::greedy_proper_colouring(&g, cli.seed);
                emit_graph(format_coloured_graph(&cg), out)
            } else {
                emit_graph(format_graph(&g), out)
            }
        }
        GenCmd::BlowupCycle { k, r, out } => {
            let g = generators::blowup_cycle(*k, *r)?;
            emit_graph(format_graph(&g), out)
        }
        GenCmd::Crfree {
            n,
            r,
            kmax,
            c,
            budget,
            out,
        } => {
            let outcome = generators::crfree_construction(*n, *r, *kmax, *c, cli.seed, *budget)?;
            eprintln!(
                "crfree: {} edges sampled, {} removed, {} remain; target {:.1} met: {}",
                outcome.initial_edges,
                outcome.removed_edges,
                outcome.graph.m(),
                outcome.bound,
                outcome.meets_bound
            );
            emit_graph(format_graph(&outcome.graph), out)?;
            if !outcome.meets_bound {
                bail!("edge count fell below the configured bound");
            }
            Ok(())
        }
    }
}

fn run_expander(cli: &Cli, cmd: &ExpanderCmd) -> Result<()> {
    match cmd {
        ExpanderCmd::Extract { input, eps } => {
            let g = load_any(input)?.graph().clone();
            let (h, orig, cert) = extract_expander(&g, *eps, cli.exact_max_n)?;
            println!(
                "expander: n = {}, m = {}, d = {} (input d = {}), eta = {:.5}, passed = {}",
                h.n(),
                h.m(),
                h.average_degree(),
                g.average_degree(),
                cert.params.eta_f64(),
                cert.passed
            );
            println!("evidence: {:?}", cert.evidence);
            write_json(
                &cli.json_out,
                &serde_json::json!({
                    "vertices": orig,
                    "certificate": cert,
                }),
            )
        }
        ExpanderCmd::Verify {
            input,
            d,
            eta,
            eps,
            edge_expansion,
        } => {
            let g = load_any(input)?.graph().clone();
            let params = ExpanderParams::from_floats(parse_rational(d)?, *eta, *eps)?;
            let cert = verify_expander(&g, &params, cli.exact_max_n);
            println!("passed: {}", cert.passed);
            println!("evidence: {:?}", cert.evidence);
            if let Some(w) = &cert.witness_violation {
                println!("witness: {w:?}");
            }
            write_json(&cli.json_out, &cert)?;
            if *edge_expansion && cert.passed {
                let report = edge_expansion_check(&g, &params)?;
                println!(
                    "edge expansion: min slack {:.6} at S = {:?} over {} subsets",
                    report.min_slack, report.argmin, report.subsets_checked
                );
            }
            if cert.passed {
                Ok(())
            } else {
                bail!("expander verification failed")
            }
        }
        ExpanderCmd::Regularize {
            input,
            d,
            relaxed,
            out,
        } => {
            let g = load_any(input)?.graph().clone();
            let outcome = regularize_bipartite(&g, *d, cli.seed, *relaxed)?;
            eprintln!(
                "regularized: n = {}, max degree = {} (target {}), avg = {} (floor {:.4}), attempts = {}",
                outcome.graph.n(),
                outcome.graph.max_degree(),
                d,
                outcome.graph.average_degree(),
                outcome.d_floor,
                outcome.attempts
            );
            emit_graph(format_graph(&outcome.graph), out)
        }
        ExpanderCmd::AlmostRegular {
            input,
            eps,
            relaxed,
            out,
        } => {
            let g = load_any(input)?.graph().clone();
            let opts = AlmostRegularOpts {
                relaxed: *relaxed,
                ..Default::default()
            };
            let outcome = almost_regular_expander(&g, *eps, cli.seed, &opts)?;
            eprintln!(
                "almost-regular expander: n = {}, d = {}, mu = {:.3}, iterations = {}",
                outcome.graph.n(),
                outcome.graph.average_degree(),
                outcome.mu,
                outcome.iterations
            );
            write_json(
                &cli.json_out,
                &serde_json::json!({
                    "vertices": outcome.orig,
                    "mu": outcome.mu,
                    "certificate": outcome.certificate,
                }),
            )?;
            emit_graph(format_graph(&outcome.graph), out)
        }
    }
}

fn run_spectral(cli: &Cli, cmd: &SpectralCmd) -> Result<()> {
    match cmd {
        SpectralCmd::Summary { input } => {
            let g = load_any(input)?.graph().clone();
            let s = spectrum(&g)?;
            println!("n = {}, m = {}, d = {}", g.n(), g.m(), g.average_degree());
            println!("lambda_2 = {:.9}", s.lambda2);
            let shown = s.lambda.len().min(8);
            println!("top eigenvalues: {:?}", &s.lambda[..shown]);
            write_json(&cli.json_out, &serde_json::json!({"lambda": s.lambda}))
        }
        SpectralCmd::Mixing { input, k } => {
            let g = load_any(input)?.graph().clone();
            let report = mixing_deviation(&g, *k)?;
            println!(
                "k = {}: max deviation {:.3e}, worst pair {:?}, lambda_2 = {:.6}",
                report.k, report.max_deviation, report.worst_pair, report.lambda2
            );
            println!("bound excess (negative is good): {:.3e}", report.max_excess);
            let rows: Vec<String> = mixing_rows(&g, *k)?
                .into_iter()
                .map(|(v, u, actual, stat, bound)| format!("{v},{u},{actual},{stat},{bound}"))
                .collect();
            write_csv(&cli.csv_out, "v,u,actual,stationary,bound", &rows)
        }
        SpectralCmd::Conductance { input } => {
            let g = load_any(input)?.graph().clone();
            match conductance(&g, cli.exact_max_n)? {
                Conductance::Exact { value, minimizer } => {
                    println!("Phi_G = {value:.9} (exact), minimizer {minimizer:?}");
                    let margin = check_eigen_conductance_bound(&g, cli.exact_max_n)?;
                    println!("eigenvalue bound margin (1 - Phi^2/8) - lambda_2 = {margin:.9}");
                }
                Conductance::Bounds {
                    lower,
                    upper,
                    sweep_cut,
                } => {
                    println!(
                        "Phi_G in [{lower:.6}, {upper:.6}] (sweep cut of {} vertices)",
                        sweep_cut.len()
                    );
                }
            }
            Ok(())
        }
    }
}

fn run_walks(cli: &Cli, cmd: &WalksCmd) -> Result<()> {
    match cmd {
        WalksCmd::Count { input, k } => {
            let g = load_any(input)?.graph().clone();
            let table = count_paths(&g, *k);
            let mut rows = Vec::new();
            for x in 0..g.n() {
                for y in 0..g.n() {
                    let p = table.paths(*k, x, y);
                    if p.bits() > 0 {
                        rows.push(format!("{x},{y},{p},{}", table.cycles(x, y)));
                    }
                }
            }
            println!(
                "hom(P_{k}) = {}, hom(C_{}) = {}",
                table.hom_paths_total(*k),
                2 * k,
                table.hom_cycles_total()
            );
            write_csv(&cli.csv_out, "x,y,paths,cycles", &rows)
        }
        WalksCmd::Degenerate {
            input,
            x,
            y,
            k,
            mc,
            budget,
        } => {
            let cg = load_coloured_graph(input)?;
            let stats = match mc {
                Some(samples) => estimate_degenerate(&cg, *x, *y, *k, *samples, cli.seed)?,
                None => count_degenerate_exact(&cg, *x, *y, *k, *budget)?,
            };
            match &stats {
                DegenerateStats::Exact { hom_star, hom } => {
                    println!(
                        "hom* = {hom_star}, hom = {hom}, fraction = {:.6}",
                        stats.fraction()
                    );
                }
                DegenerateStats::MonteCarlo { bad, samples, ci } => {
                    println!(
                        "estimate {:.4} ({bad}/{samples}), 95% CI [{:.4}, {:.4}]",
                        stats.fraction(),
                        ci.0,
                        ci.1
                    );
                }
            }
            Ok(())
        }
        WalksCmd::GoodPairs { input, k, s, mc } => {
            let cg = load_coloured_graph(input)?;
            let bip = cg.graph().bipartition()?;
            let mode = match mc {
                Some(samples) => GoodPairMode::MonteCarlo {
                    samples: *samples,
                    seed: cli.seed,
                },
                None => GoodPairMode::Exact {
                    budget: DEFAULT_ENUM_BUDGET,
                },
            };
            let report = good_pairs(&cg, &bip, *k, *s, mode)?;
            println!(
                "pairs: {}, bad fraction: {}, unknown fraction: {}",
                report.pairs.len(),
                report.fraction_bad,
                report.fraction_unknown
            );
            let rows: Vec<String> = report
                .pairs
                .iter()
                .map(|(x, y, v)| format!("{x},{y},{v:?}"))
                .collect();
            write_csv(&cli.csv_out, "x,y,verdict", &rows)
        }
        WalksCmd::RelationCheck {
            input,
            k,
            relation,
            t,
        } => {
            let loaded = load_any(input)?;
            let report = match relation.as_str() {
                "colour" => {
                    let LoadedGraph::Coloured(cg) = &loaded else {
                        bail!("the colour relation needs a coloured input");
                    };
                    related_cycles_bound_check(cg.graph(), *k, &Relation::EdgeColour(cg), *t)?
                }
                "vertex" => {
                    related_cycles_bound_check(loaded.graph(), *k, &Relation::VertexEquality, *t)?
                }
                other => bail!("unknown relation '{other}', expected colour or vertex"),
            };
            println!(
                "{} relation, k = {}: related = {}, hom = {}, bound = {:.3e}, margin = {:.3e}",
                report.relation, report.k, report.lhs, report.hom, report.rhs, report.margin
            );
            Ok(())
        }
    }
}

fn run_subdiv(cli: &Cli, cmd: &SubdivCmd) -> Result<()> {
    match cmd {
        SubdivCmd::Find {
            input,
            m,
            auto_colour,
            params,
        } => {
            let cg = require_coloured(load_any(input)?, *auto_colour, cli.seed)?;
            let (pipeline, sheet) = params.build(*m, cg.n(), cli.scale, None);
            let mut cert = find_subdivision(&cg, *m, &pipeline, cli.seed)
                .map_err(|e| anyhow!("search failed: {e}"))?;
            cert.params.sheet = Some(sheet);
            println!(
                "found: branch vertices {:?}, {} connectors, {} colours",
                cert.branch_vertices,
                cert.paths.len(),
                cert.colours.len()
            );
            write_json(&cli.json_out, &cert)
        }
        SubdivCmd::Rooted {
            input,
            z,
            auto_colour,
            params,
        } => {
            let cg = require_coloured(load_any(input)?, *auto_colour, cli.seed)?;
            let (pipeline, sheet) = params.build(z.len(), cg.n(), cli.scale, None);
            let prep = prepare_rainbow_expander(&cg, &pipeline, cli.seed)?;
            // Map the requested branch vertices into the prepared subgraph.
            let mut local = Vec::with_capacity(z.len());
            for &v in z {
                match prep.orig.iter().position(|&o| o == v) {
                    Some(i) => local.push(i),
                    None => bail!("branch vertex {v} was lost during expander extraction"),
                }
            }
            let cert = find_rooted_subdivision(&prep.cg, &local, &pipeline, cli.seed)
                .map_err(|e| anyhow!("search failed: {e}"))?;
            let mut cert = cert.relabel(&prep.orig);
            cert.params.sheet = Some(sheet);
            verify_subdivision(&cg, &cert)
                .map_err(|f| anyhow!("relabelled certificate failed verification: {f:?}"))?;
            println!(
                "found: rooted at {:?}, {} connectors, max length {}",
                cert.branch_vertices,
                cert.paths.len(),
                cert.paths
                    .iter()
                    .map(|p| p.vertices.len() - 1)
                    .max()
                    .unwrap_or(0)
            );
            write_json(&cli.json_out, &cert)
        }
        SubdivCmd::Verify { input, cert } => {
            let cg = load_coloured_graph(input)?;
            let text = std::fs::read_to_string(cert)?;
            let cert: SubdivisionCertificate = serde_json::from_str(&text)?;
            match verify_subdivision(&cg, &cert) {
                Ok(()) => {
                    println!("valid");
                    Ok(())
                }
                Err(f) => {
                    println!("invalid: {f:?}");
                    bail!("certificate rejected")
                }
            }
        }
    }
}

fn run_blowup(cli: &Cli, cmd: &BlowupCmd) -> Result<()> {
    match cmd {
        BlowupCmd::Collection {
            input,
            r,
            cap,
            budget,
            out,
        } => {
            let g = load_any(input)?.graph().clone();
            let col = build_krr_collection(&g, *r, *cap, *budget, cli.seed)?;
            let aux = auxiliary_graph(&col);
            let check = intersection_relation_check(&aux, 0);
            eprintln!(
                "collection: {} copies ({} discovered, truncated: {}), codegree max {} (cap {}), aux n = {}, intersection codegree {}",
                col.copies.len(),
                col.discovered,
                col.truncated,
                recheck_codegree(&col),
                col.codegree_cap,
                aux.graph.n(),
                check.max_count,
            );
            let mut text = String::new();
            for (a, b) in &col.copies {
                let fa: Vec<String> = a.iter().map(|v| v.to_string()).collect();
                let fb: Vec<String> = b.iter().map(|v| v.to_string()).collect();
                text.push_str(&format!("{} | {}\n", fa.join(" "), fb.join(" ")));
            }
            emit_graph(text, out)
        }
        BlowupCmd::Find {
            input,
            r,
            m,
            cap,
            budget,
            params,
        } => {
            let g = load_any(input)?.graph().clone();
            let (pipeline, _sheet) = params.build(*m, g.n(), cli.scale, Some(*r));
            let opts = BlowupOptions {
                cap: *cap,
                budget: *budget,
                t_bound: None,
            };
            let cert = find_blowup_subdivision(&g, *r, *m, &pipeline, &opts, cli.seed)
                .map_err(|e| anyhow!("search failed: {e}"))?;
            println!(
                "found: r = {}, aux branch {:?}, {} connectors, {} host vertices used",
                cert.r,
                cert.base.branch_vertices,
                cert.base.paths.len(),
                cert.rsets.values().map(|s| s.len()).sum::<usize>()
            );
            write_json(&cli.json_out, &cert)
        }
        BlowupCmd::Verify { input, cert } => {
            let g = load_any(input)?.graph().clone();
            let text = std::fs::read_to_string(cert)?;
            let cert: BlowupCertificate = serde_json::from_str(&text)?;
            match verify_blowup(&g, &cert) {
                Ok(()) => {
                    println!("valid");
                    Ok(())
                }
                Err(f) => {
                    println!("invalid: {f:?}");
                    bail!("certificate rejected")
                }
            }
        }
    }
}

fn run_params(cli: &Cli, args: &ParamsArgs) -> Result<()> {
    let reference: ReferenceParams = reference_params(args.n, args.eps, args.m, args.r);
    println!(
        "formula values at n = {}, eps = {}, m = {}:",
        args.n, args.eps, args.m
    );
    println!("  eta = {:.6}", reference.eta);
    println!("  ell = {:.1}", reference.ell);
    println!("  k = {}", reference.k);
    println!("  L = {:.1}", reference.big_l);
    println!("  s = {}", reference.s);
    println!("  p = {}", reference.p);
    println!("  q = {:.1}", reference.q);
    println!(
        "  edge threshold n (log n)^60 = {:.3e}{}",
        reference.main_edge_threshold,
        if reference.main_threshold_infeasible {
            "  [infeasible at this n: exceeds C(n,2)]"
        } else {
            ""
        }
    );
    println!(
        "  regular-expander degree floor = {:.3e}",
        reference.regular_expander_d_min
    );
    println!(
        "  rooted degree threshold (mu = 1) = {:.3e}",
        reference.rooted_d_coeff
    );
    if let Some(b) = reference.blowup_edge_threshold {
        println!("  blow-up edge threshold = {:.3e}", b);
    }
    let sheet = ParamSheet {
        used: match cli.scale {
            Some(f) => PipelineParams::scaled(&reference, f),
            None => PipelineParams::desk(args.m),
        },
        scale: cli.scale,
        reference,
    };
    println!(
        "desk values{}: k = {}, s = {}, ell = {}, L = {}, q = {}",
        match cli.scale {
            Some(f) => format!(" (scale {f})"),
            None => " (defaults)".into(),
        },
        sheet.used.k,
        sheet.used.s,
        sheet.used.ell,
        sheet.used.big_l,
        sheet.used.q
    );
    write_json(&cli.json_out, &sheet)
}
