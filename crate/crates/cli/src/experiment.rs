//! Seeded experiment harness: a TOML spec names a generator and a pipeline;
//! every repetition runs with a seed derived from the root seed and is
//! recorded as one JSON line. Timings go only to the CSV so the JSON bundle
//! is byte-reproducible.

use anyhow::{bail, Context, Result};
use rainbow_subdiv::blowup::{find_blowup_subdivision, BlowupOptions};
use rainbow_subdiv::expander::{extract_expander, EXACT_SUBSET_MAX_N};
use rainbow_subdiv::generators;
use rainbow_subdiv::graph::{ColouredGraph, Graph};
use rainbow_subdiv::io;
use rainbow_subdiv::params::{derive_seed, reference_params, ParamSheet, PipelineParams};
use rainbow_subdiv::subdivision::{
    find_rooted_subdivision, find_subdivision, prepare_rainbow_expander, verify_subdivision,
};
use serde::Deserialize;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSpec {
    name: String,
    #[serde(default)]
    seed: u64,
    repetitions: usize,
    #[serde(default)]
    scale: Option<f64>,
    generator: Option<GeneratorSpec>,
    pipeline: PipelineSpec,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum GeneratorSpec {
    Gnp {
        n: usize,
        p: f64,
        #[serde(default)]
        colouring: Colouring,
    },
    Hypercube {
        k: usize,
    },
    BlowupCycle {
        k: usize,
        r: usize,
    },
    File {
        path: String,
    },
}

#[derive(Debug, Default, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum Colouring {
    #[default]
    None,
    Greedy,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum PipelineSpec {
    Subdiv {
        m: usize,
        #[serde(flatten)]
        params: ParamOverrides,
    },
    Rooted {
        m: usize,
        #[serde(flatten)]
        params: ParamOverrides,
    },
    Blowup {
        r: usize,
        m: usize,
        #[serde(default = "default_cap")]
        cap: usize,
        #[serde(default = "default_budget")]
        budget: usize,
        #[serde(flatten)]
        params: ParamOverrides,
    },
    Expander {
        #[serde(default = "default_eps")]
        eps: f64,
    },
    Crfree {
        n: usize,
        r: usize,
        #[serde(default = "default_kmax")]
        kmax: usize,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_crfree_budget")]
        budget: usize,
    },
}

fn default_cap() -> usize {
    8
}
fn default_budget() -> usize {
    200_000
}
fn default_eps() -> f64 {
    0.5
}
fn default_kmax() -> usize {
    4
}
fn default_c() -> f64 {
    0.2
}
fn default_crfree_budget() -> usize {
    100_000_000
}

#[derive(Debug, Default, Deserialize)]
struct ParamOverrides {
    k: Option<usize>,
    s: Option<usize>,
    ell: Option<usize>,
    q: Option<usize>,
    mc: Option<usize>,
    rounds: Option<usize>,
    eps: Option<f64>,
}

impl ParamOverrides {
    fn build(
        &self,
        m: usize,
        n: usize,
        scale: Option<f64>,
        r: Option<usize>,
    ) -> (PipelineParams, ParamSheet) {
        let eps = self.eps.unwrap_or(0.5);
        let reference = reference_params(n.max(2), eps, m, r);
        let mut used = match scale {
            Some(f) => PipelineParams::scaled(&reference, f),
            None => PipelineParams::desk(m),
        };
        used.eps = eps;
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

enum Instance {
    Plain(Graph),
    Coloured(ColouredGraph),
}

impl Instance {
    fn graph(&self) -> &Graph {
        match self {
            Instance::Plain(g) => g,
            Instance::Coloured(cg) => cg.graph(),
        }
    }

    fn coloured(&self) -> Result<&ColouredGraph> {
        match self {
            Instance::Coloured(cg) => Ok(cg),
            Instance::Plain(_) => {
                bail!("pipeline needs a coloured graph; set generator.colouring = \"greedy\"")
            }
        }
    }
}

fn build_instance(spec: &GeneratorSpec, seed: u64) -> Result<Instance> {
    Ok(match spec {
        GeneratorSpec::Gnp { n, p, colouring } => {
            let g = generators::random_graph(*n, *p, derive_seed(seed, "gen", &[]));
            match colouring {
                Colouring::Greedy => Instance::Coloured(generators::greedy_proper_colouring(
                    &g,
                    derive_seed(seed, "colour", &[]),
                )),
                Colouring::None => Instance::Plain(g),
            }
        }
        GeneratorSpec::Hypercube { k } => Instance::Coloured(generators::hypercube_coloured(*k)?),
        GeneratorSpec::BlowupCycle { k, r } => Instance::Plain(generators::blowup_cycle(*k, *r)?),
        GeneratorSpec::File { path } => match io::load_any(Path::new(path))? {
            io::LoadedGraph::Plain(g) => Instance::Plain(g),
            io::LoadedGraph::Coloured(cg) => Instance::Coloured(cg),
        },
    })
}

fn run_one(spec: &ExperimentSpec, rep_seed: u64) -> Result<serde_json::Value> {
    match &spec.pipeline {
        PipelineSpec::Subdiv { m, params } => {
            let generator = spec
                .generator
                .as_ref()
                .context("subdiv pipeline needs a generator")?;
            let instance = build_instance(generator, rep_seed)?;
            let cg = instance.coloured()?;
            let (pipeline, _) = params.build(*m, cg.n(), spec.scale, None);
            let cert = find_subdivision(cg, *m, &pipeline, rep_seed)?;
            Ok(serde_json::to_value(&cert)?)
        }
        PipelineSpec::Rooted { m, params } => {
            let generator = spec
                .generator
                .as_ref()
                .context("rooted pipeline needs a generator")?;
            let instance = build_instance(generator, rep_seed)?;
            let cg = instance.coloured()?;
            let (pipeline, _) = params.build(*m, cg.n(), spec.scale, None);
            let prep = prepare_rainbow_expander(cg, &pipeline, rep_seed)?;
            // Random branch set inside the prepared expander.
            let local =
                generators::random_distinct(prep.cg.n(), *m, derive_seed(rep_seed, "z", &[]));
            let cert = find_rooted_subdivision(&prep.cg, &local, &pipeline, rep_seed)?;
            let relabelled = cert.relabel(&prep.orig);
            verify_subdivision(cg, &relabelled)
                .map_err(|f| anyhow::anyhow!("relabelled certificate rejected: {f:?}"))?;
            Ok(serde_json::to_value(&relabelled)?)
        }
        PipelineSpec::Blowup {
            r,
            m,
            cap,
            budget,
            params,
        } => {
            let generator = spec
                .generator
                .as_ref()
                .context("blowup pipeline needs a generator")?;
            let instance = build_instance(generator, rep_seed)?;
            let (pipeline, _) = params.build(*m, instance.graph().n(), spec.scale, Some(*r));
            let opts = BlowupOptions {
                cap: *cap,
                budget: *budget,
                t_bound: None,
            };
            let cert =
                find_blowup_subdivision(instance.graph(), *r, *m, &pipeline, &opts, rep_seed)?;
            Ok(serde_json::to_value(&cert)?)
        }
        PipelineSpec::Expander { eps } => {
            let generator = spec
                .generator
                .as_ref()
                .context("expander pipeline needs a generator")?;
            let instance = build_instance(generator, rep_seed)?;
            let (h, orig, cert) = extract_expander(instance.graph(), *eps, EXACT_SUBSET_MAX_N)?;
            Ok(serde_json::json!({
                "n": h.n(),
                "average_degree": h.average_degree().to_string(),
                "vertices": orig,
                "certificate": cert,
            }))
        }
        PipelineSpec::Crfree {
            n,
            r,
            kmax,
            c,
            budget,
        } => {
            let outcome = generators::crfree_construction(
                *n,
                *r,
                *kmax,
                *c,
                derive_seed(rep_seed, "gen", &[]),
                *budget,
            )?;
            if !outcome.meets_bound {
                bail!(
                    "edge count {} below the bound {:.1}",
                    outcome.graph.m(),
                    outcome.bound
                );
            }
            Ok(serde_json::json!({
                "initial_edges": outcome.initial_edges,
                "removed_edges": outcome.removed_edges,
                "final_edges": outcome.graph.m(),
                "bound": outcome.bound,
            }))
        }
    }
}

fn params_sheet_of(spec: &ExperimentSpec) -> Option<ParamSheet> {
    let n = spec.generator.as_ref().map(|g| match g {
        GeneratorSpec::Gnp { n, .. } => *n,
        GeneratorSpec::Hypercube { k } => 1usize << k,
        GeneratorSpec::BlowupCycle { k, r } => k * r,
        GeneratorSpec::File { .. } => 2,
    });
    match &spec.pipeline {
        PipelineSpec::Subdiv { m, params } | PipelineSpec::Rooted { m, params } => {
            Some(params.build(*m, n.unwrap_or(2), spec.scale, None).1)
        }
        PipelineSpec::Blowup { r, m, params, .. } => {
            Some(params.build(*m, n.unwrap_or(2), spec.scale, Some(*r)).1)
        }
        _ => None,
    }
}

pub fn run_experiment(spec_path: &Path, out_dir: &Path) -> Result<()> {
    let text = std::fs::read_to_string(spec_path)
        .with_context(|| format!("reading {}", spec_path.display()))?;
    if text.trim().is_empty() {
        bail!("experiment spec is empty");
    }
    let spec: ExperimentSpec =
        toml::from_str(&text).with_context(|| format!("parsing {}", spec_path.display()))?;
    if spec.repetitions == 0 {
        bail!("repetitions must be positive");
    }
    std::fs::create_dir_all(out_dir)?;
    let mut runs = std::fs::File::create(out_dir.join("runs.jsonl"))?;
    let mut csv = std::fs::File::create(out_dir.join("runs.csv"))?;
    writeln!(csv, "rep,seed,ok,millis,error")?;
    let mut successes = 0usize;
    let mut seeds = Vec::with_capacity(spec.repetitions);
    for rep in 0..spec.repetitions {
        let rep_seed = derive_seed(spec.seed, "rep", &[rep as u64]);
        seeds.push(rep_seed);
        let start = std::time::Instant::now();
        let outcome = run_one(&spec, rep_seed);
        let millis = start.elapsed().as_millis();
        match outcome {
            Ok(result) => {
                successes += 1;
                let line = serde_json::json!({
                    "rep": rep,
                    "seed": rep_seed,
                    "ok": true,
                    "result": result,
                });
                writeln!(runs, "{}", serde_json::to_string(&line)?)?;
                writeln!(csv, "{rep},{rep_seed},true,{millis},")?;
            }
            Err(e) => {
                let msg = format!("{e:#}");
                let line = serde_json::json!({
                    "rep": rep,
                    "seed": rep_seed,
                    "ok": false,
                    "error": msg,
                });
                writeln!(runs, "{}", serde_json::to_string(&line)?)?;
                writeln!(csv, "{rep},{rep_seed},false,{millis},\"{msg}\"")?;
            }
        }
    }
    let summary = serde_json::json!({
        "name": spec.name,
        "seed": spec.seed,
        "repetitions": spec.repetitions,
        "successes": successes,
        "derived_seeds": seeds,
        "scale": spec.scale,
        "params": params_sheet_of(&spec),
    });
    std::fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    println!(
        "{}: {successes}/{} repetitions succeeded; bundle in {}",
        spec.name,
        spec.repetitions,
        out_dir.display()
    );
    Ok(())
}
