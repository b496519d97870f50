use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use polyharm::barrier::{
    cutoff_integral_estimate, default_ladder, plateau_constant, polysuperharmonic_check, CutoffReport, PolySuperReport,
    Subject,
};
use polyharm::riesz::{chain_residual, potential_grid};
use polyharm::{
    classify_single, classify_system, construct, decay_fit, log_grid, newtonian_potential_chain, region_boundary_csv,
    verify_supersolution, BuilderOptions, Construction, DecayFit, ProblemParams, SampledProfile, Status,
    StructuralVerdict, SystemSpec,
};

use crate::report::{emit, read_input, sibling, unwrap_report, write_text, GridConfig, LoadedProfile, Outcome, ProfileSpec, ResolvedConfig};
use crate::{Cli, Command};

const VERIFY_GRID: GridConfig = GridConfig { min: 1e-2, max: 1e4, points: 200 };
const VERIFY_TOL: f64 = 1e-8;
const POTENTIAL_TOL: f64 = 1e-4;
const SLOPE_TOL: f64 = 0.05;

fn resolve_grid(cli: &Cli, default: GridConfig) -> anyhow::Result<GridConfig> {
    let g = GridConfig {
        min: cli.grid_min.unwrap_or(default.min),
        max: cli.grid_max.unwrap_or(default.max),
        points: cli.grid_points.unwrap_or(default.points),
    };
    if !(g.min > 0.0 && g.max > g.min && g.max.is_finite()) {
        bail!("grid bounds must satisfy 0 < grid-min < grid-max (got {} and {})", g.min, g.max);
    }
    if g.points < 2 {
        bail!("grid-points must be at least 2");
    }
    Ok(g)
}

fn resolve_tol(cli: &Cli, default: f64) -> anyhow::Result<f64> {
    let t = cli.tol.unwrap_or(default);
    if !(t > 0.0 && t.is_finite()) {
        bail!("tolerance must be positive, got {t}");
    }
    Ok(t)
}

fn grid_points(g: GridConfig) -> anyhow::Result<Vec<f64>> {
    Ok(log_grid(g.min, g.max, g.points)?)
}

pub fn run(cli: &Cli, threads: Option<usize>) -> anyhow::Result<Outcome> {
    let mut config = ResolvedConfig {
        command: cli.command.name(),
        input: cli.input.as_ref().map(|p| p.display().to_string()),
        output: cli.output.as_ref().map(|p| p.display().to_string()),
        grid: None,
        tol: None,
        seed: cli.seed,
        threads,
    };
    let input = cli.input.as_deref();
    let output = cli.output.as_deref();
    match cli.command {
        Command::Classify => classify(&config, input, output),
        Command::ClassifySystem => classify_sys(&config, input, output),
        Command::Construct => {
            config.grid = Some(resolve_grid(cli, VERIFY_GRID)?);
            construct_cmd(&config, input, output)
        }
        Command::Verify { ref profile, spot_checks } => {
            config.grid = Some(resolve_grid(cli, VERIFY_GRID)?);
            config.tol = Some(resolve_tol(cli, VERIFY_TOL)?);
            verify_cmd(&config, input, output, profile.as_deref(), spot_checks)
        }
        Command::DecayFit => {
            config.tol = Some(resolve_tol(cli, SLOPE_TOL)?);
            decay_cmd(&config, input, output)
        }
        Command::RegionCsv => region_cmd(input, output),
        Command::Potential => {
            config.grid = Some(resolve_grid(cli, GridConfig { min: 1e-3, max: 1e5, points: potential_grid().len() })?);
            config.tol = Some(resolve_tol(cli, POTENTIAL_TOL)?);
            potential_cmd(&config, input, output)
        }
        Command::BarrierReport => {
            config.grid = Some(resolve_grid(cli, VERIFY_GRID)?);
            barrier_cmd(&config, input, output)
        }
    }
}

fn classify(config: &ResolvedConfig, input: Option<&Path>, output: Option<&Path>) -> anyhow::Result<Outcome> {
    let params: ProblemParams = read_input(input)?;
    let verdict = classify_single(&params)?;
    let outcome = if verdict.status == Status::Inconclusive { Outcome::Inconclusive } else { Outcome::Decisive };
    #[derive(Serialize)]
    struct R<'a> {
        params: &'a ProblemParams,
        #[serde(flatten)]
        verdict: &'a polyharm::Verdict,
    }
    emit(config, output, R { params: &params, verdict: &verdict })?;
    Ok(outcome)
}

fn classify_sys(config: &ResolvedConfig, input: Option<&Path>, output: Option<&Path>) -> anyhow::Result<Outcome> {
    let spec: SystemSpec = read_input(input)?;
    let verdict = classify_system(&spec)?;
    let outcome = if verdict.verdict == StructuralVerdict::Inconclusive { Outcome::Inconclusive } else { Outcome::Decisive };
    emit(config, output, &verdict)?;
    Ok(outcome)
}

/// Optional builder overrides accepted next to the problem parameters.
#[derive(Deserialize)]
struct ConstructInput {
    #[serde(flatten)]
    params: ProblemParams,
    #[serde(default)]
    safety: Option<f64>,
}

fn construct_cmd(config: &ResolvedConfig, input: Option<&Path>, output: Option<&Path>) -> anyhow::Result<Outcome> {
    let output = output.context("construct needs --output for the construction JSON (the U profile CSV goes next to it)")?;
    let inp: ConstructInput = read_input(input)?;
    let g = config.grid.expect("resolved");
    let mut opts = BuilderOptions { grid_min: g.min, grid_max: g.max, grid_points: g.points, ..Default::default() };
    if let Some(s) = inp.safety {
        opts.safety = s;
    }
    let cons = construct(&inp.params, &opts)?;
    let profile = cons.u_samples(&grid_points(g)?)?;
    let csv_path = sibling(Some(output), "_u").expect("output given");
    let mut buf = Vec::new();
    profile.write_csv(&mut buf)?;
    fs::write(&csv_path, buf).with_context(|| format!("writing {}", csv_path.display()))?;
    emit(config, Some(output), &cons)?;
    Ok(Outcome::Decisive)
}

#[derive(Serialize)]
struct VerifyResult<'a> {
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile_max_deviation: Option<f64>,
    certification: &'a polyharm::Certification,
}

fn verify_cmd(
    config: &ResolvedConfig,
    input: Option<&Path>,
    output: Option<&Path>,
    profile: Option<&Path>,
    spot_checks: usize,
) -> anyhow::Result<Outcome> {
    let raw: Value = read_input(input)?;
    let cons: Construction =
        serde_json::from_value(unwrap_report(raw, "construct")?).context("input is not a construction")?;
    let g = config.grid.expect("resolved");
    let tol = config.tol.expect("resolved");
    let mut radii = grid_points(g)?;
    if spot_checks > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (lo, hi) = (g.min.ln(), g.max.ln());
        radii.extend((0..spot_checks).map(|_| rng.gen_range(lo..hi).exp()));
        radii.sort_by(f64::total_cmp);
    }
    let cert = verify_supersolution(&cons, &cons.params, &radii, tol)?;

    let mut profile_dev = None;
    if let Some(path) = profile {
        let sampled = SampledProfile::read_csv(path, Some(-cons.kappa)).with_context(|| format!("reading {}", path.display()))?;
        let u = cons.u();
        let dev = sampled
            .radii()
            .iter()
            .zip(sampled.values())
            .map(|(&r, &v)| {
                let want = polyharm::RadialProfile::value(&u, r);
                (v - want).abs() / want.abs().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max);
        profile_dev = Some(dev);
    }
    let profile_ok = profile_dev.is_none_or(|d| d <= 1e-12);
    let pass = cert.pass && profile_ok;
    emit(config, output, VerifyResult { pass, profile_max_deviation: profile_dev, certification: &cert })?;
    if pass {
        return Ok(Outcome::Decisive);
    }
    let mut why = vec![format!(
        "min normalized margin {:.3e} (tolerance -{tol:e}) at r = {:.6e}",
        cert.min_normalized_margin, cert.argmin_radius
    )];
    why.extend(cert.inconsistencies.iter().cloned());
    if !profile_ok {
        why.push(format!("profile CSV deviates from the construction by {:.3e}", profile_dev.unwrap_or(f64::NAN)));
    }
    Ok(Outcome::Fail(why.join("; ")))
}

#[derive(Deserialize)]
struct DecayInput {
    #[serde(rename = "N")]
    n: u32,
    alpha: f64,
    profile: ProfileSpec,
    #[serde(default = "default_window")]
    window: (f64, f64),
}

fn default_window() -> (f64, f64) {
    (1e3, 1e5)
}

#[derive(Serialize)]
struct DecayResult<'a> {
    agrees: bool,
    fit: &'a DecayFit,
}

fn decay_cmd(config: &ResolvedConfig, input: Option<&Path>, output: Option<&Path>) -> anyhow::Result<Outcome> {
    let inp: DecayInput = read_input(input)?;
    let loaded = inp.profile.load()?;
    let fit = decay_fit(inp.alpha, loaded.as_profile(), inp.n, inp.window)?;
    let tol = config.tol.expect("resolved");
    let agrees = (fit.fitted_slope - fit.predicted_slope).abs() <= tol;
    if let Some(csv) = sibling(output, "_samples") {
        let mut s = String::from("radius,value\n");
        for (r, v) in fit.radii.iter().zip(&fit.values) {
            s.push_str(&format!("{r:e},{v:e}\n"));
        }
        write_text(&csv, &s)?;
    }
    emit(config, output, DecayResult { agrees, fit: &fit })?;
    Ok(if agrees {
        Outcome::Decisive
    } else {
        Outcome::Fail(format!("fitted slope {} vs predicted {}", fit.fitted_slope, fit.predicted_slope))
    })
}

#[derive(Deserialize)]
struct RegionInput {
    #[serde(rename = "N")]
    n: u32,
    m: u32,
    alpha: f64,
    p_range: (f64, f64),
    samples: usize,
}

/// Plain CSV rather than a JSON report, so the data can be plotted as is.
fn region_cmd(input: Option<&Path>, output: Option<&Path>) -> anyhow::Result<Outcome> {
    let inp: RegionInput = read_input(input)?;
    let table = region_boundary_csv(inp.n, inp.m, inp.alpha, inp.p_range, inp.samples)?;
    match output {
        Some(p) => {
            write_text(p, &table.grid_csv())?;
            let boundary = sibling(Some(p), "_boundary").expect("output given");
            write_text(&boundary, &table.boundary_csv())?;
        }
        None => print!("{}", table.grid_csv()),
    }
    Ok(Outcome::Decisive)
}

#[derive(Deserialize)]
struct PotentialInput {
    #[serde(rename = "N")]
    n: u32,
    m: u32,
    source: ProfileSpec,
}

#[derive(Serialize)]
struct PotentialResult {
    tail_constants: Vec<f64>,
    tail_slope: f64,
    expected_tail_slope: f64,
    residual: f64,
    pass: bool,
}

fn potential_cmd(config: &ResolvedConfig, input: Option<&Path>, output: Option<&Path>) -> anyhow::Result<Outcome> {
    let inp: PotentialInput = read_input(input)?;
    let loaded = inp.source.load()?;
    let g = config.grid.expect("resolved");
    let tol = config.tol.expect("resolved");
    let f = loaded.as_profile();
    let chain = newtonian_potential_chain(f, inp.n, inp.m, &grid_points(g)?)?;
    let residual = chain_residual(&chain, f, inp.n)?;
    if let Some(csv) = sibling(output, "_levels") {
        let mut s = String::from("radius");
        for k in 1..=inp.m {
            s.push_str(&format!(",W_{k}"));
        }
        s.push('\n');
        for (i, r) in chain.levels[0].radii().iter().enumerate() {
            s.push_str(&format!("{r:e}"));
            for w in &chain.levels {
                s.push_str(&format!(",{:e}", w.values()[i]));
            }
            s.push('\n');
        }
        write_text(&csv, &s)?;
    }
    let pass = residual <= tol;
    emit(
        config,
        output,
        PotentialResult {
            tail_constants: chain.tail_constants.clone(),
            tail_slope: chain.tail_slope,
            expected_tail_slope: 2.0 * inp.m as f64 - inp.n as f64,
            residual,
            pass,
        },
    )?;
    Ok(if pass { Outcome::Decisive } else { Outcome::Fail(format!("chain residual {residual:.3e} exceeds {tol:e}")) })
}

/// Either a construction (or `construct` report) or parameters with an
/// explicit profile.
#[derive(Deserialize)]
#[serde(untagged)]
enum BarrierInput {
    Profile { params: ProblemParams, profile: ProfileSpec, ladder: Option<Vec<f64>> },
    Construction(Box<Value>),
}

#[derive(Serialize)]
struct BarrierResult {
    #[serde(skip_serializing_if = "Option::is_none")]
    poly_superharmonic: Option<PolySuperReport>,
    cutoff: CutoffReport,
    plateau_constant: f64,
}

fn barrier_cmd(config: &ResolvedConfig, input: Option<&Path>, output: Option<&Path>) -> anyhow::Result<Outcome> {
    let inp: BarrierInput = read_input(input)?;
    let g = config.grid.expect("resolved");
    let grid = grid_points(g)?;
    let (poly, cutoff, params) = match inp {
        BarrierInput::Profile { params, profile, ladder } => {
            let loaded = profile.load()?;
            let ladder = ladder.unwrap_or_else(default_ladder);
            let cutoff = cutoff_integral_estimate(loaded.as_profile(), &params, &ladder)?;
            let poly = match &loaded {
                LoadedProfile::Expr(e) => Some(polysuperharmonic_check(Subject::Expr(e), params.n, params.m, &grid)?),
                _ => None,
            };
            (poly, cutoff, params)
        }
        BarrierInput::Construction(v) => {
            let cons: Construction = serde_json::from_value(unwrap_report(*v, "construct")?)
                .context("input is neither {params, profile} nor a construction")?;
            let poly = polysuperharmonic_check(Subject::Construction(&cons), cons.params.n, cons.params.m, &grid)?;
            let cutoff = cutoff_integral_estimate(&cons.u(), &cons.params, &default_ladder())?;
            (Some(poly), cutoff, cons.params.clone())
        }
    };
    if let Some(csv) = sibling(output, "_cutoff") {
        write_text(&csv, &cutoff.csv())?;
    }
    let outcome = if cutoff.degenerate {
        Outcome::Inconclusive
    } else if !cutoff.bounded_below {
        Outcome::Fail(format!("cutoff ratio min {:e}, slope {:.4}", cutoff.min_ratio, cutoff.slope))
    } else if poly.as_ref().is_some_and(|p| !p.pass) {
        Outcome::Fail("a level (-Δ)^j u is negative on the grid".into())
    } else {
        Outcome::Decisive
    };
    let plateau_constant = plateau_constant(params.n, params.m);
    emit(config, output, BarrierResult { poly_superharmonic: poly, cutoff, plateau_constant })?;
    Ok(outcome)
}
