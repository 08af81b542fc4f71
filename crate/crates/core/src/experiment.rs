//! Experiment configuration, reports, and the composite runs exposed by the
//! command line: the end-to-end extension pipeline, the verification suite
//! and truncation sweeps.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::abramov::{
    abramov_rank, cube_identity_index, is_phase_polynomial, iterated_derivative, Character, FunctionOnOrbit,
    PhaseMode, PhasePolyObservable,
};
use crate::budget::{Budget, Mode};
use crate::cube::{
    alternating_sum, cube_count, enumerate_cubes_with_budget, is_hk_cube, reconstruct, CubeMap,
};
use crate::dynamics::{
    compose_pushforward, embedding_is_equivariant, evaluation_embedding, invariant_measures, is_minimal,
    orbit_closure, rp_identity_check, truncation_sweep, sweep_csv, verify_factor, EmpiricalMeasure,
    FactorMapData, Family, FiniteSystem, Labels, SweepRow,
};
use crate::error::{Error, Result};
use crate::fibration::{covering_onto, is_filtered_surjection, lift_morphism, verify_fibration_cubewise};
use crate::group::{CyclicFactor, FilteredGroup, FpPoint, FpSpace, GroupElement};
use crate::poly::{
    all_maps, check_morphism_cubes, check_morphism_derivatives, random_morphism, PolyMap,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub p: u64,
    pub k: usize,
    /// Rank of the domain `F_p^n`.
    pub n: usize,
    /// Group descriptor: inline JSON or `cf:p,k,l` / `hpk:p,k,c1,..`.
    pub group: Option<String>,
    pub seed: u64,
    pub tuples: u64,
    pub samples: u64,
    pub enumeration: u64,
    /// Sweep family: `constant`, `coordinate`, `coordinate_sum` or `random`.
    pub family: String,
    /// Value of the constant family; defaults to zero.
    pub value: Option<Vec<i64>>,
    pub n_max: usize,
    /// Character exponents for sweep observables; defaults to all ones.
    pub chi: Option<Vec<u64>>,
    /// Pipeline input; defaults to the two-point system of `x -> x` in `Z/p`.
    pub system: Option<FiniteSystem>,
    pub x0: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let b = Budget::default();
        ExperimentConfig {
            p: 2,
            k: 2,
            n: 1,
            group: None,
            seed: 0,
            tuples: b.tuples,
            samples: b.samples,
            enumeration: b.enumeration,
            family: "coordinate".into(),
            value: None,
            n_max: 8,
            chi: None,
            system: None,
            x0: 0,
        }
    }
}

impl ExperimentConfig {
    /// Parses a JSON object or `key = value` lines (`#` starts a comment).
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        if trimmed.starts_with('{') {
            return Ok(serde_json::from_str(trimmed)?);
        }
        let mut map = serde_json::Map::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .ok_or_else(|| Error::Malformed(format!("line {}: expected key = value", lineno + 1)))?;
            let raw = raw.trim();
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            map.insert(key.trim().to_string(), value);
        }
        Ok(serde_json::from_value(Value::Object(map))?)
    }

    pub fn budget(&self) -> Budget {
        Budget { enumeration: self.enumeration, tuples: self.tuples, samples: self.samples, seed: self.seed }
    }

    pub fn target_group(&self) -> Result<Arc<FilteredGroup>> {
        match &self.group {
            Some(spec) => FilteredGroup::parse(spec).map(Arc::new),
            None => FilteredGroup::cf(self.p, self.k, 1).map(Arc::new),
        }
    }

    pub fn family(&self, group: &FilteredGroup) -> Result<Family> {
        Ok(match self.family.as_str() {
            "constant" => {
                let value = match &self.value {
                    Some(v) => group.element(v)?,
                    None => group.zero(),
                };
                Family::Constant { value }
            }
            "coordinate" => Family::Coordinate,
            "coordinate_sum" => Family::CoordinateSum,
            "random" => Family::Random { seed: self.seed },
            other => return Err(Error::Parameter(format!("unknown family `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    #[serde(flatten)]
    pub mode: Mode,
    pub witness: Option<String>,
}

impl Verdict {
    pub fn new(name: &str, passed: bool, mode: Mode, witness: Option<String>) -> Self {
        Verdict { name: name.to_string(), passed, mode, witness }
    }

    pub fn exact(name: &str, passed: bool, witness: Option<String>) -> Self {
        Verdict::new(name, passed, Mode::Exhaustive, witness)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: ExperimentConfig,
    pub results: Value,
    pub verdicts: Vec<Verdict>,
    pub stats: Stats,
}

impl Report {
    pub fn new(command: &str, config: &ExperimentConfig, results: Value, verdicts: Vec<Verdict>, started: Instant) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config: config.clone(),
            results,
            verdicts,
            stats: Stats { runtime_ms: started.elapsed().as_millis() as u64 },
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// The report with timing removed; equal configs give equal values.
    pub fn deterministic_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(map) = &mut v {
            map.remove("stats");
        }
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { stage: name.to_string(), witness: e.to_string() })
}

fn require(name: &str, ok: bool, witness: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Stage { stage: name.to_string(), witness: witness() })
    }
}

/// `Z/p` with the degree-1 filtration.
pub fn cyclic_degree_one(p: u64) -> Result<Arc<FilteredGroup>> {
    FilteredGroup::constant_filtration(p, 1, 1).map(Arc::new)
}

/// Two-point (for `p = 2`) system of translates of `x -> x` in `Z/p`,
/// labelled by the value at the origin.
pub fn linear_system(p: u64) -> Result<FiniteSystem> {
    let group = cyclic_degree_one(p)?;
    let perm = (0..p as usize).map(|a| (a + 1) % p as usize).collect();
    let values = (0..p).map(|a| GroupElement(vec![a])).collect();
    FiniteSystem::new(p, p as usize, vec![perm], Some(Labels { group, values }))
}

/// One fixed point labelled `0` in `Z/p`.
pub fn trivial_system(p: u64) -> Result<FiniteSystem> {
    let group = cyclic_degree_one(p)?;
    FiniteSystem::new(p, 1, vec![vec![0]], Some(Labels { values: vec![group.zero()], group }))
}

/// Embeds a labelled transitive system into a hom-space orbit, lifts it
/// through a covering by an `H_{p,k}` truncation, and checks that the lifted
/// orbit is minimal, finitely Abramov and factors onto the input.
pub fn cmd_pipeline_main(config: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let (p, k) = (config.p, config.k);
    let system = match &config.system {
        Some(s) => {
            stage("input", s.validate())?;
            s.clone()
        }
        None => stage("input", linear_system(p))?,
    };
    let x0 = config.x0;
    let label_group = stage(
        "input",
        system.labels.as_ref().map(|l| l.group.clone()).ok_or_else(|| Error::Parameter("unlabelled system".into())),
    )?;

    let f = stage("evaluation_embedding", evaluation_embedding(&system, x0))?;
    let equivariant = stage("evaluation_embedding", embedding_is_equivariant(&system))?;
    require("evaluation_embedding", equivariant, || "embedding is not equivariant".into())?;

    let cert = check_morphism_derivatives(&f, &config.budget());
    require("morphism_certificate", cert.holds, || format!("{:?}", cert.witness))?;

    let image = orbit_closure(&f);
    let embedded: Vec<usize> = (0..system.num_points)
        .map(|x| {
            let fx = evaluation_embedding(&system, x)?;
            image.index_of(&fx).ok_or_else(|| Error::Internal(format!("point {x} embeds outside the orbit")))
        })
        .collect::<Result<_>>()
        .map_err(|e| Error::Stage { stage: "embedding_injective".into(), witness: e.to_string() })?;
    let mut seen = vec![false; image.size];
    for (x, &b) in embedded.iter().enumerate() {
        require("embedding_injective", !std::mem::replace(&mut seen[b], true), || {
            format!("point {x} has the same embedding as another point")
        })?;
    }
    require("embedding_injective", image.size == system.num_points, || {
        format!("orbit has {} points, system has {}", image.size, system.num_points)
    })?;

    let phi = stage("covering", covering_onto(&label_group, p, k))?;
    let fib = stage("covering", is_filtered_surjection(&phi))?;
    let cubewise = verify_fibration_cubewise(&phi, k + 1, &config.budget());
    require("covering", cubewise.holds, || format!("{:?}", cubewise.witness))?;

    let g = stage("lift", lift_morphism(&phi, &f))?;
    let lifted = orbit_closure(&g);
    let lifted_system = lifted.system();
    require("lifted_orbit", is_minimal(&lifted_system), || "lifted orbit is not minimal".into())?;

    let push = stage("pushforward", compose_pushforward(&phi, &lifted))?;
    require("pushforward", push.orbit.points == image.points, || {
        "image orbit differs from the input orbit".into()
    })?;

    // theta: lifted point -> image orbit point -> system point.
    let mut to_system = vec![usize::MAX; image.size];
    for (x, &b) in embedded.iter().enumerate() {
        to_system[b] = x;
    }
    let theta = FactorMapData {
        map: push
            .point_map
            .iter()
            .map(|&b| image.index_of(&push.orbit.points[b]).map(|c| to_system[c]))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Stage { stage: "factor".into(), witness: "image point outside orbit".into() })?,
    };
    let nu = EmpiricalMeasure::uniform(lifted.size);
    let factor = stage("factor", verify_factor(&lifted_system, &system, &theta, &nu))?;
    require("factor", factor.passed(), || format!("{:?}", factor.failure))?;

    let family = stage("abramov", PhasePolyObservable::generating_family(g.n, &g.group))?;
    let rank = stage("abramov", abramov_rank(&lifted, &family))?;
    require("abramov", rank.is_abramov, || format!("rank {} below orbit size {}", rank.rank, rank.orbit_size))?;
    let mut phase_mode = Mode::Exhaustive;
    for obs in &family {
        let values = stage("abramov", FunctionOnOrbit::from_observable(&lifted, obs))?;
        let check = is_phase_polynomial(&lifted, &values, phi.source.degree(), PhaseMode::Exhaustive);
        phase_mode = phase_mode.combine(check.mode);
        require("abramov", check.holds, || format!("{:?}", check.witness))?;
    }

    let results = json!({
        "input_points": system.num_points,
        "embedded_orbit_size": image.size,
        "covering_source": &*phi.source,
        "covering_matrix": &phi.matrix,
        "certificate_levels": fib.levels.len(),
        "lift": &g.table,
        "lifted_orbit_size": lifted.size,
        "factor": &factor,
        "abramov": &rank,
    });
    let verdicts = vec![
        Verdict::exact("evaluation_embedding", true, None),
        Verdict::new("morphism_certificate", true, cert.mode, None),
        Verdict::exact("embedding_injective", true, None),
        Verdict::new("covering", true, cubewise.mode, None),
        Verdict::exact("lift", true, None),
        Verdict::exact("lifted_minimal", true, None),
        Verdict::exact("pushforward", true, None),
        Verdict::exact("factor", true, None),
        Verdict::new("abramov", true, phase_mode, None),
    ];
    Ok(Report::new("pipeline", config, results, verdicts, started))
}

/// Truncation sweep as CSV plus a report.
pub fn cmd_sweep(config: &ExperimentConfig) -> Result<(String, Report)> {
    let started = Instant::now();
    let group = config.target_group()?;
    let family = config.family(&group)?;
    let chi = Character::new(group.clone(), config.chi.clone().unwrap_or_else(|| vec![1; group.rank()]))?;
    let rows = truncation_sweep(&family, &group, config.n_max, &chi)?;
    let ergodic = rows.iter().all(|r| r.ergodic_measures == 1);
    let results = json!({
        "family": family.name(),
        "character": &chi.exponents,
        "rows": rows.iter().map(sweep_row_json).collect::<Vec<_>>(),
        "note": "finite truncations only; no statement about the limit system",
    });
    let verdicts = vec![
        Verdict::exact("family_consistent", true, None),
        Verdict::exact("single_ergodic_measure", ergodic, None),
    ];
    Ok((sweep_csv(&rows), Report::new("sweep", config, results, verdicts, started)))
}

fn sweep_row_json(r: &SweepRow) -> Value {
    json!({
        "n": r.n,
        "orbit_size": r.orbit_size,
        "observable": r.observable.to_string(),
        "observable_re": r.observable_re,
        "observable_im": r.observable_im,
        "folner": r.folner.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
    })
}

/// `Z/p` carrying the level pattern of `cf(p,k,1)` truncated to exponent 1.
pub fn reduced_target(p: u64, k: usize) -> Result<Arc<FilteredGroup>> {
    let model = FilteredGroup::cf(p, k, 1)?;
    let filt_exp = model.factors()[0].filt_exp.iter().map(|&e| e.min(1)).collect();
    FilteredGroup::new(p, k, vec![CyclicFactor { m: 1, filt_exp }]).map(Arc::new)
}

fn all_ones(k: usize) -> Vec<usize> {
    vec![1; k]
}

/// Runs the desk-scale invariants for the configured `(p, k)`.
pub fn cmd_verify_suite(config: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let budget = config.budget();
    let (p, k) = (config.p, config.k);

    let groups: Result<Vec<Arc<FilteredGroup>>> = match &config.group {
        Some(spec) => FilteredGroup::parse(spec).map(|g| vec![Arc::new(g)]),
        None => (1..=k).map(|l| FilteredGroup::cf(p, k, l).map(Arc::new)).collect(),
    };
    let groups = match groups {
        Ok(g) => g,
        Err(e) => {
            let v = Verdict::exact("construction", false, Some(e.to_string()));
            return Ok(Report::new("verify", config, json!({}), vec![v], started));
        }
    };
    let mut verdicts = vec![Verdict::exact("construction", true, None)];
    let mut results = serde_json::Map::new();

    verdicts.push(suite_filtration(&groups));
    let main = groups[0].clone();
    let (v, counts) = suite_cube_counts(&main, &budget);
    results.insert("cube_counts".into(), counts);
    verdicts.push(v);
    verdicts.extend(groups.iter().map(|g| suite_alternating_sum(g, &budget)));
    let (v, homs) = suite_morphism_tests(&main, &budget);
    results.insert("hom_counts".into(), homs);
    verdicts.push(v);
    verdicts.push(suite_lifting(p, k, &budget));

    let product = Arc::new(FilteredGroup::hpk(p, k, &all_ones(k))?);
    let orbits = suite_orbits(&product, &budget);
    results.insert("orbit_sizes".into(), json!(orbits.iter().map(|o| o.size).collect::<Vec<_>>()));
    verdicts.push(suite_annihilation(&orbits, k, &budget));
    verdicts.push(suite_abramov(&orbits));
    verdicts.push(suite_rp(&product, &budget));

    let pipeline = cmd_pipeline_main(&ExperimentConfig { system: None, x0: 0, group: None, ..config.clone() });
    verdicts.push(match pipeline {
        Ok(r) => Verdict::exact("pipeline", r.passed(), None),
        Err(e) => Verdict::exact("pipeline", false, Some(e.to_string())),
    });
    verdicts.push(suite_ergodic(&main, &orbits, config.n_max.min(8)));

    let report = Report::new("verify", config, Value::Object(results), verdicts, started);
    Ok(report)
}

fn suite_filtration(groups: &[Arc<FilteredGroup>]) -> Verdict {
    for g in groups {
        let k = g.degree();
        if !g.is_monotone() || g.level_order(k + 1) != 1 {
            return Verdict::exact("filtration", false, Some(format!("{g:?}")));
        }
        if g.level_order(0) != g.order() {
            return Verdict::exact("filtration", false, Some(format!("level 0 of {g:?} is proper")));
        }
    }
    Verdict::exact("filtration", true, None)
}

fn suite_cube_counts(g: &FilteredGroup, budget: &Budget) -> (Verdict, Value) {
    let mut counts = Vec::new();
    for n in 0..=3usize {
        let formula = cube_count(n, g);
        if formula > budget.enumeration as u128 {
            break;
        }
        let emitted = match enumerate_cubes_with_budget(n, g, budget.enumeration) {
            Ok(it) => it.total(),
            Err(e) => return (Verdict::exact("cube_counts", false, Some(e.to_string())), json!(counts)),
        };
        let maps = g.order().saturating_pow(1 << n);
        let brute = if maps <= budget.enumeration.min(1 << 20) as u128 {
            Some(count_cubes_by_filter(n, g))
        } else {
            None
        };
        counts.push(json!({ "n": n, "cubes": emitted.to_string(), "maps": maps.to_string() }));
        if emitted != formula || brute.is_some_and(|b| b != formula) {
            let w = format!("n = {n}: formula {formula}, enumerated {emitted}, filtered {brute:?}");
            return (Verdict::exact("cube_counts", false, Some(w)), json!(counts));
        }
    }
    (Verdict::exact("cube_counts", true, None), json!(counts))
}

fn count_cubes_by_filter(n: usize, g: &FilteredGroup) -> u128 {
    let elements: Vec<GroupElement> = g.elements().collect();
    let vertices = 1usize << n;
    let mut digits = vec![0usize; vertices];
    let mut count = 0u128;
    loop {
        let q = CubeMap { n, values: digits.iter().map(|&d| elements[d].clone()).collect() };
        if is_hk_cube(&q, g) {
            count += 1;
        }
        let mut pos = 0;
        while pos < vertices {
            digits[pos] += 1;
            if digits[pos] < elements.len() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
        if pos == vertices {
            return count;
        }
    }
}

fn random_cube<R: Rng>(n: usize, g: &FilteredGroup, rng: &mut R) -> CubeMap {
    let coeffs: Vec<GroupElement> =
        (0..1usize << n).map(|s| g.sample_level((s as u32).count_ones() as usize, rng)).collect();
    reconstruct(n, &coeffs, g)
}

fn suite_alternating_sum(g: &FilteredGroup, budget: &Budget) -> Verdict {
    let n = g.degree() + 1;
    let name = "alternating_sum";
    let cap = budget.enumeration.min(1 << 20);
    if cube_count(n, g) <= cap as u128 {
        let cubes = match enumerate_cubes_with_budget(n, g, cap) {
            Ok(c) => c,
            Err(e) => return Verdict::exact(name, false, Some(e.to_string())),
        };
        for q in cubes {
            if !g.is_zero(&alternating_sum(&q, g)) {
                return Verdict::exact(name, false, Some(format!("{:?}", q.values)));
            }
        }
        Verdict::exact(name, true, None)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        let mode = Mode::Sampled { samples: budget.samples };
        for _ in 0..budget.samples {
            let q = random_cube(n, g, &mut rng);
            if !g.is_zero(&alternating_sum(&q, g)) {
                return Verdict::new(name, false, mode, Some(format!("{:?}", q.values)));
            }
        }
        Verdict::new(name, true, mode, None)
    }
}

fn suite_morphism_tests(g: &Arc<FilteredGroup>, budget: &Budget) -> (Verdict, Value) {
    let name = "morphism_tests_agree";
    let k = g.degree();
    let mut counts = Vec::new();
    let mut mode = Mode::Exhaustive;
    for n in 1..=2usize {
        let maps = match all_maps(g, n, budget.enumeration.min(1 << 20)) {
            Ok(m) => m,
            Err(_) => {
                // Too many tables: compare on random tables and random morphisms.
                let mut rng = ChaCha8Rng::seed_from_u64(budget.seed ^ n as u64);
                let space = match FpSpace::new(g.p(), n) {
                    Ok(s) => s,
                    Err(e) => return (Verdict::exact(name, false, Some(e.to_string())), json!(counts)),
                };
                let mut sample = Vec::new();
                for i in 0..20u64 {
                    let table = (0..space.size()).map(|_| g.sample(&mut rng)).collect();
                    sample.push(PolyMap { n, p: g.p(), group: g.clone(), table });
                    if let Ok(f) = random_morphism(n, g, budget.seed.wrapping_add(i)) {
                        sample.push(f);
                    }
                }
                mode = mode.combine(Mode::Sampled { samples: sample.len() as u64 });
                sample
            }
        };
        let mut homs = 0u64;
        for f in &maps {
            let a = check_morphism_cubes(f, k + 1, budget);
            let b = check_morphism_derivatives(f, budget);
            mode = mode.combine(a.mode).combine(b.mode);
            if a.holds != b.holds {
                let w = format!("tests disagree on {:?}", f.table);
                return (Verdict::new(name, false, mode, Some(w)), json!(counts));
            }
            homs += a.holds as u64;
        }
        counts.push(json!({ "n": n, "maps": maps.len(), "morphisms": homs }));
    }
    (Verdict::new(name, true, mode, None), json!(counts))
}

fn suite_lifting(p: u64, k: usize, budget: &Budget) -> Verdict {
    let name = "lifting";
    let run = || -> Result<Option<String>> {
        let x = reduced_target(p, k)?;
        let phi = covering_onto(&x, p, k)?;
        for n in 1..=2usize {
            for s in 0..20u64 {
                let f = random_morphism(n, &x, budget.seed.wrapping_add(s))?;
                let g = lift_morphism(&phi, &f)?;
                if phi.push(&g)? != f || !check_morphism_cubes(&g, k + 1, budget).holds {
                    return Ok(Some(format!("lift of {:?} fails", f.table)));
                }
            }
        }
        Ok(None)
    };
    match run() {
        Ok(w) => Verdict::exact(name, w.is_none(), w),
        Err(e) => Verdict::exact(name, false, Some(e.to_string())),
    }
}

fn suite_orbits(g: &Arc<FilteredGroup>, budget: &Budget) -> Vec<crate::dynamics::Orbit> {
    let mut out = Vec::new();
    for n in 1..=2usize {
        for s in 0..4u64 {
            if let Ok(f) = random_morphism(n, g, budget.seed.wrapping_add(100 + s)) {
                out.push(orbit_closure(&f));
            }
        }
    }
    out
}

fn suite_annihilation(orbits: &[crate::dynamics::Orbit], k: usize, budget: &Budget) -> Verdict {
    let name = "phase_polynomial_annihilation";
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    for orbit in orbits {
        let family = match PhasePolyObservable::generating_family(orbit.rank(), &orbit.base.group) {
            Ok(f) => f,
            Err(e) => return Verdict::exact(name, false, Some(e.to_string())),
        };
        let space = orbit.base.space();
        for obs in &family {
            let values = match FunctionOnOrbit::from_observable(orbit, obs) {
                Ok(v) => v,
                Err(e) => return Verdict::exact(name, false, Some(e.to_string())),
            };
            let check = is_phase_polynomial(orbit, &values, k, PhaseMode::Exhaustive);
            if !check.holds {
                return Verdict::exact(name, false, Some(format!("{:?}", check.witness)));
            }
            for _ in 0..8 {
                let ws: Vec<FpPoint> = (0..=k).map(|_| space.point(rng.gen_range(0..space.size()))).collect();
                let d = iterated_derivative(orbit, &values, &ws);
                if d.values[0] != cube_identity_index(&orbit.points[0], obs, &ws) {
                    return Verdict::exact(name, false, Some(format!("linkage fails along {ws:?}")));
                }
            }
        }
    }
    Verdict::exact(name, true, None)
}

fn suite_abramov(orbits: &[crate::dynamics::Orbit]) -> Verdict {
    let name = "abramov_rank";
    for orbit in orbits {
        let result = PhasePolyObservable::generating_family(orbit.rank(), &orbit.base.group)
            .and_then(|family| abramov_rank(orbit, &family));
        match result {
            Ok(r) if r.is_abramov => {}
            Ok(r) => return Verdict::exact(name, false, Some(format!("{r:?}"))),
            Err(e) => return Verdict::exact(name, false, Some(e.to_string())),
        }
    }
    Verdict::exact(name, true, None)
}

fn suite_rp(g: &Arc<FilteredGroup>, budget: &Budget) -> Verdict {
    let name = "regionally_proximal_identity";
    let k = g.degree();
    let n = 2;
    let f = match random_morphism(n, g, budget.seed.wrapping_add(7)) {
        Ok(f) => f,
        Err(e) => return Verdict::exact(name, false, Some(e.to_string())),
    };
    let space = f.space();
    let tuples = (space.size() as u128).saturating_pow(k as u32 + 2);
    let check = |idx: &[usize]| -> Option<String> {
        let x = space.point(idx[0]);
        let gs: Vec<FpPoint> = idx[1..].iter().map(|&i| space.point(i)).collect();
        match rp_identity_check(&f, &gs, &x) {
            Ok(r) if r.holds => None,
            Ok(r) => Some(format!("{} != {} at x = {x:?}, g = {gs:?}", r.lhs, r.rhs)),
            Err(e) => Some(e.to_string()),
        }
    };
    if tuples <= budget.tuples as u128 {
        let mut digits = vec![0usize; k + 2];
        loop {
            if let Some(w) = check(&digits) {
                return Verdict::exact(name, false, Some(w));
            }
            let mut pos = 0;
            while pos < digits.len() {
                digits[pos] += 1;
                if digits[pos] < space.size() {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos == digits.len() {
                return Verdict::exact(name, true, None);
            }
        }
    }
    let samples = budget.samples.min(10_000);
    let mode = Mode::Sampled { samples };
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    for _ in 0..samples {
        let idx: Vec<usize> = (0..k + 2).map(|_| rng.gen_range(0..space.size())).collect();
        if let Some(w) = check(&idx) {
            return Verdict::new(name, false, mode, Some(w));
        }
    }
    Verdict::new(name, true, mode, None)
}

fn suite_ergodic(g: &Arc<FilteredGroup>, orbits: &[crate::dynamics::Orbit], n_max: usize) -> Verdict {
    let name = "unique_ergodicity_shadow";
    for orbit in orbits {
        let measures = invariant_measures(&orbit.system());
        if measures.len() != 1 || measures[0] != EmpiricalMeasure::uniform(orbit.size) {
            return Verdict::exact(name, false, Some(format!("{} ergodic measures", measures.len())));
        }
    }
    let chi = Character::new(g.clone(), vec![1; g.rank()]);
    let chi = match chi {
        Ok(c) => c,
        Err(e) => return Verdict::exact(name, false, Some(e.to_string())),
    };
    for (family, expected) in [(Family::Constant { value: g.zero() }, 1), (Family::Coordinate, g.p() as usize)] {
        match truncation_sweep(&family, g, n_max, &chi) {
            Ok(rows) => {
                if let Some(r) = rows.iter().find(|r| r.orbit_size != expected) {
                    let w = format!("{} family has orbit size {} at n = {}", family.name(), r.orbit_size, r.n);
                    return Verdict::exact(name, false, Some(w));
                }
            }
            Err(e) => return Verdict::exact(name, false, Some(e.to_string())),
        }
    }
    Verdict::exact(name, true, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_formats_agree() {
        let kv = ExperimentConfig::parse("p = 3\nk = 3 # degree\nfamily = random\ngroup = cf:3,3,1\n").unwrap();
        let js = ExperimentConfig::parse(r#"{"p": 3, "k": 3, "family": "random", "group": "cf:3,3,1"}"#).unwrap();
        assert_eq!(kv, js);
        assert_eq!(kv.n_max, 8);
        assert!(ExperimentConfig::parse("bogus = 1").is_err());
    }

    #[test]
    fn pipeline_on_two_point_system() {
        let report = cmd_pipeline_main(&ExperimentConfig::default()).unwrap();
        assert!(report.passed());
        assert_eq!(report.results["lifted_orbit_size"], 2);
        assert_eq!(report.results["abramov"]["rank"], 2);
    }

    #[test]
    fn pipeline_on_trivial_system() {
        let config = ExperimentConfig { system: Some(trivial_system(2).unwrap()), ..Default::default() };
        assert!(cmd_pipeline_main(&config).unwrap().passed());
    }

    #[test]
    fn pipeline_rejects_non_transitive_input() {
        let two = linear_system(2).unwrap();
        let config = ExperimentConfig { system: Some(two.disjoint_union(&two).unwrap()), ..Default::default() };
        match cmd_pipeline_main(&config) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "evaluation_embedding"),
            other => panic!("expected a stage failure, got {other:?}"),
        }
    }

    #[test]
    fn sweep_constant_family() {
        let config = ExperimentConfig { family: "constant".into(), n_max: 4, ..Default::default() };
        let (csv, report) = cmd_sweep(&config).unwrap();
        assert!(report.passed());
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().skip(1).all(|l| l.split(',').nth(1) == Some("1")));
    }

    #[test]
    fn corrupted_filtration_fails_construction() {
        let bad = r#"{"p":2,"k":2,"factors":[{"m":2,"filt_exp":[0,1,0,2]}]}"#;
        let config = ExperimentConfig { group: Some(bad.into()), ..Default::default() };
        let report = cmd_verify_suite(&config).unwrap();
        assert!(!report.passed());
        assert_eq!(report.verdicts[0].name, "construction");
    }
}
