//! Subcommand implementations. Each returns the process exit code: 0 for a
//! stable, bounded verdict and 2 for no bound or an inconclusive one.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use srgkit::analysis::{self, AnalysisReport, CanonicalCase, Verdict};
use srgkit::calculus::Mode;
use srgkit::geom::{region_json, region_svg, Region};
use srgkit::lang::{analyze_interconnection, srg_bound, AnalysisOptions, BoundOptions};
use srgkit::lti::{extended_srg_with, nyquist_criterion_with, nyquist_curve, srg_lti_with, FrequencyGrid};
use srgkit::nonlin::Nonlinearity;
use srgkit::sim::{gain_estimate, simulate_lure, System, Topology, Trajectory};
use srgkit::{Settings, Tf, C64};

use crate::config::{bundled, load_config, mode_arg, AnalysisSpec, Project, ProjectConfig, TopologySpec};
use crate::run::RunDir;
use crate::Source;

/// Margin of the cross-check between simulated gains and the bound.
const GAIN_SLACK: f64 = 1.02;

fn load(source: &Source) -> Result<(String, ProjectConfig)> {
    match (&source.config, &source.example) {
        (Some(path), _) => {
            let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "config".into());
            Ok((label, load_config(path)?))
        }
        (None, Some(name)) => Ok((name.clone(), bundled(name)?)),
        (None, None) => bail!("give a configuration file or --example"),
    }
}

fn input_label(source: &Source) -> String {
    match (&source.config, &source.example) {
        (Some(p), _) => p.display().to_string(),
        (None, Some(n)) => format!("example:{n}"),
        (None, None) => String::new(),
    }
}

/// JSON has no infinity; unbounded values are written as `null`.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn analysis_options(p: &Project) -> AnalysisOptions {
    AnalysisOptions {
        bound: BoundOptions { mode: p.config.mode, extended: true, collapse: true, settings: p.config.settings.clone() },
        kappa: p.config.kappa.clone(),
        tau_continuous: p.config.assertions.tau_continuous,
        ..AnalysisOptions::default()
    }
}

fn kind(spec: &AnalysisSpec) -> &'static str {
    match spec {
        AnalysisSpec::Lure { .. } => "lure",
        AnalysisSpec::ControlledLure { .. } => "controlled_lure",
        AnalysisSpec::LureController { .. } => "lure_controller",
        AnalysisSpec::FeedbackMargin { .. } => "feedback_margin",
        AnalysisSpec::GeneralizedCircle { .. } => "generalized_circle",
    }
}

fn run_analysis(p: &Project, spec: &AnalysisSpec) -> Result<AnalysisReport> {
    let mode = p.config.mode;
    let s = &p.config.settings;
    let kappa = |phi: &Nonlinearity, name: &str, given: Option<f64>| {
        given.or_else(|| p.config.kappa.get(name).copied()).unwrap_or_else(|| phi.default_kappa(mode))
    };
    Ok(match spec {
        AnalysisSpec::Lure { g, phi } => analysis::lure_with(&p.tf(g)?, p.nonlinearity(phi)?, mode, s)?,
        AnalysisSpec::ControlledLure { g, k, phi, kappa: kp } | AnalysisSpec::LureController { g, k, phi, kappa: kp } => {
            let case = if matches!(spec, AnalysisSpec::ControlledLure { .. }) {
                CanonicalCase::ControlledLure
            } else {
                CanonicalCase::LureController
            };
            let nl = p.nonlinearity(phi)?;
            analysis::canonical(case, &p.tf(g)?, &p.tf(k)?, nl, kappa(nl, phi, *kp), mode, s)?
        }
        AnalysisSpec::FeedbackMargin { g, k, phi } => analysis::feedback_margin(&p.tf(g)?, &p.tf(k)?, p.nonlinearity(phi)?, mode, s)?,
        AnalysisSpec::GeneralizedCircle { g, phi } => analysis::generalized_circle_with(&p.tf(g)?, p.nonlinearity(phi)?, mode, s)?,
    })
}

fn svg_of(regions: &[(String, Region)]) -> String {
    let refs: Vec<(&str, &Region)> = regions.iter().map(|(n, r)| (n.as_str(), r)).collect();
    region_svg(&refs, &[], None)
}

pub fn analyze(out: &Path, source: &Source, mode: Option<&str>) -> Result<i32> {
    let (label, mut config) = load(source)?;
    if let Some(m) = mode {
        config.mode = mode_arg(m)?;
    }
    let project = Project::new(config)?;
    let mut run = RunDir::create(out, "analyze", &label)?;
    let plots = project.config.outputs.plots;

    let mut verdicts: Vec<Option<Verdict>> = Vec::new();
    let mut analyses = Vec::new();
    for (i, spec) in project.config.analyses.iter().enumerate() {
        match run_analysis(&project, spec) {
            Ok(rep) => {
                println!("{}: r_m = {:.4}, gain bound {} [{}]", kind(spec), rep.r_m, fmt_bound(rep.gain_bound), rep.verdict);
                if plots {
                    run.write(&format!("analysis-{i}-{}.svg", kind(spec)), svg_of(&rep.regions))?;
                }
                verdicts.push(Some(rep.verdict));
                let mut v = serde_json::to_value(&rep)?;
                v["kind"] = json!(kind(spec));
                analyses.push(v);
            }
            Err(e) => {
                println!("{}: error: {}", kind(spec), crate::describe(&e));
                verdicts.push(None);
                analyses.push(json!({"kind": kind(spec), "error": crate::describe(&e)}));
            }
        }
    }

    let mut interconnection = Value::Null;
    if let Some(word) = &project.word {
        match analyze_interconnection(word, &project.table, &analysis_options(&project)) {
            Ok(rep) => {
                println!("word {}: rmin = {} [{}]", rep.word, fmt_bound(rep.gain_bound()), rep.verdict);
                if plots && rep.bound.rmin.is_some() {
                    run.write("bound.svg", svg_of(&[("C(R)".to_string(), rep.region.clone())]))?;
                }
                verdicts.push(Some(rep.verdict));
                interconnection = serde_json::to_value(&rep)?;
            }
            Err(e) => {
                println!("word {word}: error: {e}");
                verdicts.push(None);
                interconnection = json!({"word": word.to_string(), "error": e.to_string()});
            }
        }
    }

    let primary = verdicts.first().copied().flatten();
    let report = json!({
        "description": project.config.description,
        "mode": project.config.mode,
        "verdict": primary,
        "analyses": analyses,
        "interconnection": interconnection,
    });
    let report_name = project.config.outputs.report.clone();
    run.write_json(&report_name, &report)?;
    let code = match (verdicts.first(), primary) {
        (None, _) => bail!("nothing to analyze: give a `word` or `analyses`"),
        (_, Some(v)) => v.exit_code(),
        (_, None) => 1,
    };
    let dir = run.finish(&input_label(source), code)?;
    println!("verdict: {}", primary.map_or("ERROR", Verdict::as_str));
    println!("artifacts: {}", dir.display());
    Ok(code)
}

fn fmt_bound(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.4}")
    } else {
        "inf".into()
    }
}

pub fn nyquist(out: &Path, tf: &str) -> Result<i32> {
    let f: Tf = tf.parse().with_context(|| format!("transfer function `{tf}`"))?;
    let settings = Settings::default();
    let curve = nyquist_curve(&f, &FrequencyGrid::from_settings(&settings))?;
    let crit = nyquist_criterion_with(&f, &settings)?;
    let mut run = RunDir::create(out, "nyquist", "loop")?;
    run.write("nyquist.csv", curve.to_csv())?;
    let axis: Vec<C64> = curve.samples.iter().copied().filter(|z| z.norm() < 1e3).collect();
    let minus_one = [C64::new(-1.0, 0.0)];
    run.write("nyquist.svg", region_svg(&[], &[("L(jw)", &axis), ("-1", &minus_one)], None))?;
    run.write_json(
        "criterion.json",
        &json!({"tf": f.to_string(), "n_p": crit.n_p, "n_n": crit.n_n, "n_z": crit.n_z, "stable": crit.stable}),
    )?;
    println!("n_p = {}, n_n = {}, n_z = {}: closed loop {}", crit.n_p, crit.n_n, crit.n_z, if crit.stable { "stable" } else { "unstable" });
    let code = if crit.stable { 0 } else { 2 };
    let dir = run.finish(tf, code)?;
    println!("artifacts: {}", dir.display());
    Ok(code)
}

pub fn srg(out: &Path, tf: Option<&str>, source: Option<&Source>, plain: bool, mode: Option<&str>) -> Result<i32> {
    let (label, input, region, what) = match (tf, source) {
        (Some(text), _) => {
            let f: Tf = text.parse().with_context(|| format!("transfer function `{text}`"))?;
            let s = Settings::default();
            let r = if plain { srg_lti_with(&f, &s)? } else { extended_srg_with(&f, &s)?.region };
            ("tf".to_string(), text.to_string(), r, f.to_string())
        }
        (None, Some(src)) => {
            let (label, mut config) = load(src)?;
            if let Some(m) = mode {
                config.mode = mode_arg(m)?;
            }
            let p = Project::new(config)?;
            let word = p.word.as_ref().ok_or_else(|| anyhow!("the configuration has no `word`"))?;
            // Folding would hand the plain SRG a single, possibly unstable, transfer function.
            let opts = BoundOptions { mode: p.config.mode, extended: !plain, collapse: !plain, settings: p.config.settings.clone() };
            let v = srg_bound(word, &p.table, &opts)?;
            (label, input_label(src), v.region, word.to_string())
        }
        (None, None) => bail!("give --tf, a configuration file or --example"),
    };
    let mut run = RunDir::create(out, "srg", &label)?;
    let radius = region.radius();
    let mut doc = serde_json::to_value(region_json(&region, 40))?;
    doc["of"] = json!(what);
    doc["extended"] = json!(!plain);
    doc["radius"] = num(radius);
    run.write_json("region.json", &doc)?;
    run.write("region.svg", region_svg(&[(what.as_str(), &region)], &[], None))?;
    println!("radius of the {}SRG of {what}: {}", if plain { "" } else { "extended " }, fmt_bound(radius));
    let code = if radius.is_finite() { 0 } else { 2 };
    let dir = run.finish(&input, code)?;
    println!("artifacts: {}", dir.display());
    Ok(code)
}

fn topology(p: &Project, t: &TopologySpec) -> Result<Option<Topology>> {
    let nl = |n: &str| p.nonlinearity(n).cloned();
    Ok(Some(match t {
        TopologySpec::Lure { g, phi } => Topology::Lure { g: p.tf(g)?, phi: nl(phi)? },
        TopologySpec::ControlledLure { g, k, phi } => Topology::ControlledLure { g: p.tf(g)?, k: p.tf(k)?, phi: nl(phi)? },
        TopologySpec::LureController { g, k, phi } => Topology::LureController { g: p.tf(g)?, k: p.tf(k)?, phi: nl(phi)? },
        TopologySpec::SaturatedLure { g, k, phi_in, phi_fb } => {
            Topology::SaturatedLure { g: p.tf(g)?, k: p.tf(k)?, phi_in: nl(phi_in)?, phi_fb: nl(phi_fb)? }
        }
        TopologySpec::Word => return Ok(None),
    }))
}

pub fn simulate(out: &Path, source: &Source) -> Result<i32> {
    let (label, config) = load(source)?;
    let project = Project::new(config)?;
    let sim = project.config.simulation.as_ref().ok_or_else(|| anyhow!("the configuration has no `simulation` section"))?;
    let mut run = RunDir::create(out, "simulate", &label)?;

    let word_system = || -> Result<System> {
        let word = project.word.as_ref().ok_or_else(|| anyhow!("topology `word` needs a `word`"))?;
        Ok(System::from_word(word, &project.table)?)
    };
    let tr: Trajectory = match topology(&project, &sim.topology)? {
        Some(top) => simulate_lure(&top, &sim.r, &sim.d, sim.t_end, sim.h)?,
        None => {
            let r = &sim.r;
            word_system()?.simulate(&|t| r.eval(t), sim.t_end, sim.h)?
        }
    };
    if project.config.outputs.csv {
        run.write("trajectory.csv", tr.to_csv())?;
    }
    let y = tr.signal("y").unwrap_or_default();
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let probes: Vec<Value> = sim.probes.iter().map(|&t| json!({"t": t, "y": tr.at("y", t)})).collect();
    println!("peak |y| = {peak:.6}");
    for p in &probes {
        println!("y({}) = {}", p["t"], p["y"]);
    }

    let mut code = 0;
    let mut gain = Value::Null;
    if let Some(check) = &sim.gain_check {
        let sys = word_system()?;
        let mode = project.config.mode;
        let mut rng = ChaCha8Rng::seed_from_u64(check.seed);
        let ens = &check.ensemble;
        let mut trajs = Vec::with_capacity(check.trajectories);
        for _ in 0..check.trajectories {
            let s = ens.draw(&mut rng);
            trajs.push(sys.simulate(&|t| s.eval(t), ens.horizon(), ens.h)?);
        }
        let estimate = gain_estimate(&trajs, mode)?;
        let bound = analyze_interconnection(project.word.as_ref().expect("checked"), &project.table, &analysis_options(&project))?.gain_bound();
        let consistent = estimate <= bound * GAIN_SLACK;
        println!("empirical gain {estimate:.4} vs bound {} ({})", fmt_bound(bound), if consistent { "consistent" } else { "VIOLATED" });
        if !consistent {
            code = 2;
        }
        gain = json!({"estimate": estimate, "bound": num(bound), "consistent": consistent, "trajectories": check.trajectories});
    }
    run.write_json(
        "summary.json",
        &json!({"t_end": sim.t_end, "h": sim.h, "samples": tr.t.len(), "peak_abs_y": peak, "probes": probes, "gain_check": gain}),
    )?;
    let dir = run.finish(&input_label(source), code)?;
    println!("artifacts: {}", dir.display());
    Ok(code)
}

pub fn duffing_bound(out: &Path, p: [f64; 6]) -> Result<i32> {
    let [alpha, beta, delta, kp, kd, d_max] = p;
    let bound = analysis::duffing_amplitude_bound(alpha, beta, delta, kp, kd, d_max)?;
    let mut run = RunDir::create(out, "duffing-bound", "duffing")?;
    run.write_json(
        "result.json",
        &json!({"alpha": alpha, "beta": beta, "delta": delta, "kp": kp, "kd": kd, "d_max": d_max, "amplitude_bound": bound}),
    )?;
    println!("sup |y| <= {bound:.6}");
    let dir = run.finish(&format!("{p:?}"), 0)?;
    println!("artifacts: {}", dir.display());
    Ok(0)
}

pub fn circle(out: &Path, tf: &str, k1: f64, k2: f64, mode: &str) -> Result<i32> {
    let g: Tf = tf.parse().with_context(|| format!("transfer function `{tf}`"))?;
    let mode: Mode = mode_arg(mode)?;
    let classical = analysis::classical_circle(&g, k1, k2)?;
    let phi = Nonlinearity::sector_class(k1, k2)?;
    let generalized = analysis::generalized_circle(&g, &phi, mode)?;
    let mut run = RunDir::create(out, "circle", "sector")?;
    run.write("generalized.svg", svg_of(&generalized.regions))?;
    run.write_json("circle.json", &json!({"tf": g.to_string(), "k1": k1, "k2": k2, "classical": classical, "generalized": generalized}))?;
    println!("classical (case {}): {} ({})", classical.case, if classical.stable { "stable" } else { "not shown stable" }, classical.detail);
    println!("generalized: r_m = {:.4}, gain bound {} [{}]", generalized.r_m, fmt_bound(generalized.gain_bound), generalized.verdict);
    let code = generalized.verdict.exit_code();
    let dir = run.finish(tf, code)?;
    println!("artifacts: {}", dir.display());
    Ok(code)
}
