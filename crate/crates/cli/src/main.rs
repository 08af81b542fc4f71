//! `nilshift`: command-line access to nilshift-core. Every command prints a
//! JSON report and exits with status 0 exactly when all of its verdicts pass.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use nilshift_core::abramov::{
    abramov_rank, is_phase_polynomial, AbramovRank, PhaseMode,
};
use nilshift_core::cube::{
    complete_corner, enumerate_cubes_with_budget, first_violation, moebius_coefficients,
};
use nilshift_core::dynamics::{invariant_measures, is_minimal, orbit_closure};
use nilshift_core::experiment::{cmd_pipeline_main, cmd_sweep, cmd_verify_suite, ExperimentConfig, Report, Verdict};
use nilshift_core::fibration::{covering_onto, is_filtered_surjection, lift_morphism, verify_fibration_cubewise};
use nilshift_core::poly::{
    all_maps, check_morphism_cubes, check_morphism_derivatives, random_morphism, restrict_to_fundamental_domain,
    taylor_expand,
};
use nilshift_core::{
    Character, CornerMap, CubeMap, FilteredGroup, FilteredHom, FiniteSystem, FpPoint, FpSpace, FunctionOnOrbit,
    GroupElement, Mode, PhasePolyObservable, PolyMap,
};

#[derive(Parser)]
#[command(name = "nilshift", version, about = "Exact computation with filtered abelian p-groups and their polynomial maps")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Experiment configuration: a JSON object or `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tuple budget for exhaustive checks; larger checks are sampled.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Describe a filtered group and the domain `F_p^n`.
    Space {
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 1)]
        rank: usize,
    },
    #[command(subcommand)]
    Cube(CubeCmd),
    #[command(subcommand)]
    Poly(PolyCmd),
    #[command(subcommand)]
    Fib(FibCmd),
    #[command(subcommand)]
    Orbit(OrbitCmd),
    /// Abramov rank and phase-polynomial checks on the orbit of a map.
    Abramov {
        #[arg(long)]
        poly: String,
        /// Observable `z=<point>,chi=<exponents>`, e.g. `z=1:0,chi=1`. Repeatable;
        /// defaults to the full generating family.
        #[arg(long)]
        obs: Vec<String>,
    },
    /// End-to-end extension pipeline on a labelled finite system.
    Pipeline,
    /// Desk-scale verification suite for the configured `(p, k)`.
    Verify,
    /// Truncation sweep over a consistent family of maps.
    Sweep {
        /// Where to write the CSV table; defaults to standard error.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CubeCmd {
    /// Test Host-Kra membership of a cube `{n, values}`.
    Check {
        #[arg(long)]
        group: String,
        #[arg(long)]
        cube: String,
    },
    /// Count and list the cubes of dimension `dim`.
    Enumerate {
        #[arg(long)]
        group: String,
        #[arg(long)]
        dim: usize,
        /// Number of cubes to include in the report.
        #[arg(long, default_value_t = 16)]
        limit: usize,
    },
    /// Complete a corner `{n, values}` (all vertices but the last).
    Complete {
        #[arg(long)]
        group: String,
        #[arg(long)]
        corner: String,
    },
}

#[derive(Subcommand)]
enum PolyCmd {
    /// Run both morphism tests on a map `{n, p, group, table}`.
    Check {
        #[arg(long)]
        poly: String,
        #[arg(long)]
        max_dim: Option<usize>,
        /// Fail instead of sampling when the tuple budget is exceeded.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Draw a random morphism.
    Random {
        #[arg(long)]
        group: String,
        #[arg(long)]
        rank: usize,
    },
    /// Taylor coefficients of a morphism.
    Taylor {
        #[arg(long)]
        poly: String,
    },
    /// Count morphisms `F_p^rank -> G` by exhausting all tables.
    Count {
        #[arg(long)]
        group: String,
        #[arg(long)]
        rank: usize,
    },
}

#[derive(Subcommand)]
enum FibCmd {
    /// Levelwise surjectivity certificate and cube audit.
    Verify {
        #[arg(long)]
        hom: String,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Lift a map through a fibration.
    Lift {
        #[arg(long)]
        hom: String,
        #[arg(long)]
        poly: String,
    },
    /// Covering of a target by a truncation of `H_{p,k}`.
    Cover {
        #[arg(long)]
        group: String,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Subcommand)]
enum OrbitCmd {
    /// Orbit closure of a map.
    Run {
        #[arg(long)]
        poly: String,
        /// Include every orbit point in the report.
        #[arg(long)]
        points: bool,
    },
    /// Minimality and invariant measures of a map's orbit or of a finite system.
    Minimal {
        #[arg(long, conflicts_with = "system")]
        poly: Option<String>,
        #[arg(long)]
        system: Option<String>,
    },
    /// Same as the top-level `sweep`.
    Sweep {
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Inline JSON, or a path to a file holding it.
fn load(arg: &str) -> Result<String> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        Ok(arg.to_string())
    } else {
        std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(arg: &str, what: &str) -> Result<T> {
    serde_json::from_str(&load(arg)?).with_context(|| format!("parsing {what}"))
}

fn group(arg: &str) -> Result<Arc<FilteredGroup>> {
    let text = if arg.contains(':') && !arg.trim_start().starts_with('{') { arg.to_string() } else { load(arg)? };
    Ok(Arc::new(FilteredGroup::parse(&text)?))
}

fn poly(arg: &str) -> Result<PolyMap> {
    let f: PolyMap = parse_json(arg, "map")?;
    f.validate()?;
    Ok(f)
}

#[derive(serde::Deserialize)]
struct RawCube {
    n: usize,
    values: Vec<Vec<i64>>,
}

fn elements(g: &FilteredGroup, raw: &[Vec<i64>]) -> Result<Vec<GroupElement>> {
    raw.iter().map(|r| g.element(r).map_err(Into::into)).collect()
}

fn observable(spec: &str, g: &Arc<FilteredGroup>, n: usize) -> Result<PhasePolyObservable> {
    let mut z = None;
    let mut chi = None;
    for part in spec.split(',') {
        match part.split_once('=') {
            Some(("z", v)) => z = Some(v.to_string()),
            Some(("chi", v)) => chi = Some(v.to_string()),
            _ if chi.is_some() => chi.as_mut().unwrap().push_str(&format!(",{part}")),
            _ if z.is_some() => z.as_mut().unwrap().push_str(&format!(",{part}")),
            _ => bail!("observable `{spec}`: expected z=<point>,chi=<exponents>"),
        }
    }
    let nums = |s: &str| -> Result<Vec<u64>> {
        s.split([':', ' ', ';']).filter(|t| !t.is_empty()).map(|t| t.parse().context("observable entry")).collect()
    };
    let z = FpPoint(nums(&z.context("observable needs z=")?)?);
    if z.0.len() != n {
        bail!("observable point has rank {}, map has rank {n}", z.0.len());
    }
    let chi = Character::new(g.clone(), nums(&chi.context("observable needs chi=")?)?)?;
    Ok(PhasePolyObservable { z, chi })
}

fn config(global: &Global) -> Result<ExperimentConfig> {
    let mut c = match &global.config {
        Some(path) => ExperimentConfig::parse(&std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = global.seed {
        c.seed = s;
    }
    if let Some(b) = global.budget {
        c.tuples = b;
    }
    Ok(c)
}

fn run(cli: &Cli) -> Result<Report> {
    let started = Instant::now();
    let cfg = config(&cli.global)?;
    let budget = cfg.budget();
    let report = |command: &str, results: Value, verdicts: Vec<Verdict>| {
        Report::new(command, &cfg, results, verdicts, started)
    };
    Ok(match &cli.command {
        Command::Space { group: g, rank } => {
            let g = group(g)?;
            let space = FpSpace::new(g.p(), *rank)?;
            let levels: Vec<Value> = (0..=g.degree() + 1)
                .map(|i| json!({ "level": i, "order": g.level_order(i).to_string(), "generators": g.level_generators(i) }))
                .collect();
            let results = json!({
                "group": &*g,
                "order": g.order().to_string(),
                "levels": levels,
                "domain": { "p": g.p(), "n": rank, "size": space.size() },
            });
            report("space", results, vec![Verdict::exact("monotone", g.is_monotone(), None)])
        }
        Command::Cube(CubeCmd::Check { group: g, cube }) => {
            let g = group(g)?;
            let raw: RawCube = parse_json(cube, "cube")?;
            let q = CubeMap::new(raw.n, elements(&g, &raw.values)?)?;
            let violation = first_violation(&q, &g);
            let results = json!({ "moebius": moebius_coefficients(&q, &g), "violation": violation });
            report("cube check", results, vec![Verdict::exact("is_cube", violation.is_none(), violation.map(|s| format!("subset {s:#b}")))])
        }
        Command::Cube(CubeCmd::Enumerate { group: g, dim, limit }) => {
            let g = group(g)?;
            let cubes = enumerate_cubes_with_budget(*dim, &g, budget.enumeration)?;
            let count = cubes.total();
            let listed: Vec<Vec<GroupElement>> = cubes.take(*limit).map(|q| q.values).collect();
            report("cube enumerate", json!({ "count": count.to_string(), "cubes": listed }), vec![])
        }
        Command::Cube(CubeCmd::Complete { group: g, corner }) => {
            let g = group(g)?;
            let raw: RawCube = parse_json(corner, "corner")?;
            let c = CornerMap::new(raw.n, elements(&g, &raw.values)?)?;
            match complete_corner(&c, &g) {
                Ok(q) => report("cube complete", json!({ "cube": q.values }), vec![Verdict::exact("completed", true, None)]),
                Err(e) => report("cube complete", json!({}), vec![Verdict::exact("completed", false, Some(e.to_string()))]),
            }
        }
        Command::Poly(PolyCmd::Check { poly: f, max_dim, exhaustive }) => {
            let f = poly(f)?;
            let dim = max_dim.unwrap_or(f.group.degree() + 1);
            let mut b = budget;
            if *exhaustive {
                b.tuples = u64::MAX;
            }
            let cubes = check_morphism_cubes(&f, dim, &b);
            let derivs = check_morphism_derivatives(&f, &b);
            let results = json!({ "cubes": &cubes, "derivatives": &derivs, "max_dim": dim });
            let verdicts = vec![
                Verdict::new("morphism_cubes", cubes.holds, cubes.mode, cubes.witness.as_ref().map(|w| format!("{w:?}"))),
                Verdict::new("morphism_derivatives", derivs.holds, derivs.mode, derivs.witness.as_ref().map(|w| format!("{w:?}"))),
            ];
            report("poly check", results, verdicts)
        }
        Command::Poly(PolyCmd::Random { group: g, rank }) => {
            let g = group(g)?;
            let f = random_morphism(*rank, &g, cfg.seed)?;
            report("poly random", json!({ "poly": f }), vec![Verdict::exact("morphism", true, None)])
        }
        Command::Poly(PolyCmd::Taylor { poly: f }) => {
            let f = poly(f)?;
            match taylor_expand(&f) {
                Ok(t) => {
                    let roundtrip = restrict_to_fundamental_domain(&t).map(|r| r == f).unwrap_or(false);
                    report("poly taylor", json!({ "taylor": t }), vec![Verdict::exact("roundtrip", roundtrip, None)])
                }
                Err(e) => report("poly taylor", json!({}), vec![Verdict::exact("expansion", false, Some(e.to_string()))]),
            }
        }
        Command::Poly(PolyCmd::Count { group: g, rank }) => {
            let g = group(g)?;
            let maps = all_maps(&g, *rank, budget.enumeration)?;
            let homs = maps.iter().filter(|f| check_morphism_derivatives(f, &budget).holds).count();
            report("poly count", json!({ "maps": maps.len(), "morphisms": homs }), vec![])
        }
        Command::Fib(FibCmd::Verify { hom, n_max }) => {
            let phi: FilteredHom = parse_json(hom, "homomorphism")?;
            let n_max = n_max.unwrap_or(phi.top_level());
            let cubewise = verify_fibration_cubewise(&phi, n_max, &budget);
            let (cert, surj) = match is_filtered_surjection(&phi) {
                Ok(c) => (json!(c), Verdict::exact("filtered_surjection", true, None)),
                Err(e) => (Value::Null, Verdict::exact("filtered_surjection", false, Some(e.to_string()))),
            };
            let results = json!({ "certificate": cert, "cubewise": &cubewise, "n_max": n_max });
            let witness = cubewise.witness.as_ref().map(|w| format!("{w:?}"));
            report("fib verify", results, vec![surj, Verdict::new("cubewise", cubewise.holds, cubewise.mode, witness)])
        }
        Command::Fib(FibCmd::Lift { hom, poly: f }) => {
            let phi: FilteredHom = parse_json(hom, "homomorphism")?;
            let f = poly(f)?;
            match lift_morphism(&phi, &f) {
                Ok(g) => report("fib lift", json!({ "lift": g }), vec![Verdict::exact("lift", true, None)]),
                Err(e) => report("fib lift", json!({}), vec![Verdict::exact("lift", false, Some(e.to_string()))]),
            }
        }
        Command::Fib(FibCmd::Cover { group: g, p, k }) => {
            let g = group(g)?;
            match covering_onto(&g, *p, *k) {
                Ok(phi) => report("fib cover", json!({ "hom": phi }), vec![Verdict::exact("covering", true, None)]),
                Err(e) => report("fib cover", json!({}), vec![Verdict::exact("covering", false, Some(e.to_string()))]),
            }
        }
        Command::Orbit(OrbitCmd::Run { poly: f, points }) => {
            let f = poly(f)?;
            let orbit = orbit_closure(&f);
            let mut results = json!({ "base": &orbit.base, "size": orbit.size, "transitions": &orbit.transitions });
            if *points {
                results["points"] = json!(&orbit.points);
            }
            let divides = (f.p as usize).pow(f.n as u32).is_multiple_of(orbit.size);
            report("orbit run", results, vec![Verdict::exact("size_divides_group_order", divides, None)])
        }
        Command::Orbit(OrbitCmd::Minimal { poly: f, system }) => {
            let sys: FiniteSystem = match (f, system) {
                (Some(f), _) => orbit_closure(&poly(f)?).system(),
                (None, Some(s)) => {
                    let s: FiniteSystem = parse_json(s, "system")?;
                    s.validate()?;
                    s
                }
                (None, None) => bail!("give --poly or --system"),
            };
            let measures = invariant_measures(&sys);
            let minimal = is_minimal(&sys);
            let results = json!({ "points": sys.num_points, "components": sys.components(), "ergodic_measures": measures });
            report("orbit minimal", results, vec![Verdict::exact("minimal", minimal, None)])
        }
        Command::Orbit(OrbitCmd::Sweep { csv }) | Command::Sweep { csv } => {
            let (table, r) = cmd_sweep(&cfg)?;
            match csv {
                Some(path) => std::fs::write(path, table).with_context(|| format!("writing {}", path.display()))?,
                None => eprint!("{table}"),
            }
            r
        }
        Command::Abramov { poly: f, obs } => {
            let f = poly(f)?;
            let orbit = orbit_closure(&f);
            let observables = if obs.is_empty() {
                PhasePolyObservable::generating_family(f.n, &f.group)?
            } else {
                obs.iter().map(|s| observable(s, &f.group, f.n)).collect::<Result<_>>()?
            };
            let rank: AbramovRank = abramov_rank(&orbit, &observables)?;
            let mut checks = Vec::new();
            let mut all_hold = true;
            let mut mode = Mode::Exhaustive;
            for o in &observables {
                let values = FunctionOnOrbit::from_observable(&orbit, o)?;
                let c = is_phase_polynomial(&orbit, &values, f.group.degree(), PhaseMode::Exhaustive);
                all_hold &= c.holds;
                mode = mode.combine(c.mode);
                checks.push(json!({ "z": o.z, "chi": o.chi.exponents, "phase_polynomial": c.holds }));
            }
            let results = json!({
                "orbit_size": rank.orbit_size,
                "rank": rank.rank,
                "span_rank": rank.span_rank,
                "is_abramov": rank.is_abramov,
                "derivative_checks": checks,
            });
            let verdicts = vec![
                Verdict::exact("abramov_rank", rank.is_abramov, None),
                Verdict::new("phase_polynomials", all_hold, mode, None),
            ];
            report("abramov", results, verdicts)
        }
        Command::Pipeline => cmd_pipeline_main(&cfg)?,
        Command::Verify => cmd_verify_suite(&cfg)?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let text = report.to_json();
            match &cli.global.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, format!("{text}\n")) {
                        eprintln!("error: writing {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => println!("{text}"),
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
