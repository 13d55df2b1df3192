//! Implementations of the CLI subcommands.

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use qmupl::ensemble::{
    run_ensemble, EnsembleSpec, GridDoubleDeltaA, GridInitial, GridLinearMartingale,
    GridMeanDensity, LinearNormMartingale, SingleGaussianMeans,
};
use qmupl::gauss1;
use qmupl::gauss2::{self, DoubleGaussianState, HittingConfig};
use qmupl::grid::{GridSpec, SpectralEngine, WaveGrid};
use qmupl::master;
use qmupl::model::Model;
use qmupl::stochastic;
use qmupl::units::{derive_constants, ModelParams, Preset};
use qmupl::verify::{self, McOptions};

use crate::config::Config;
use crate::output::{fmt_f64, RunWriter};
use crate::svg::{LineChart, Series};
use crate::ParticleArgs;

/// GRW localization threshold: a macroscopic wavepacket counts as localized
/// once its spread drops below 10⁻⁷ m.
const LOCALIZATION_THRESHOLD_M: f64 = 1e-7;

pub struct Context {
    pub config: Config,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl From<qmupl::Error> for CliError {
    fn from(e: qmupl::Error) -> Self {
        match e {
            qmupl::Error::Configuration(m) | qmupl::Error::Parameter(m) => CliError::Config(m),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<crate::config::ConfigError> for CliError {
    fn from(e: crate::config::ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CmdResult = Result<ExitCode, CliError>;

impl Context {
    fn seed(&self) -> Result<u64, CliError> {
        Ok(self
            .seed
            .or(self.config.get_u64("run", "seed")?)
            .unwrap_or(1))
    }

    fn want_csv(&self) -> bool {
        self.format_str() != "svg"
    }

    fn want_svg(&self) -> bool {
        matches!(self.format_str().as_str(), "svg" | "both")
    }

    fn format_str(&self) -> String {
        self.format
            .clone()
            .or_else(|| self.config.get("run", "format").map(|s| s.to_string()))
            .unwrap_or_else(|| "csv".to_string())
    }

    fn writer(&self, command: &str) -> Result<RunWriter, CliError> {
        let dir = self
            .out
            .clone()
            .or_else(|| self.config.get("run", "out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out").join(command));
        let mut w = RunWriter::new(dir)?;
        w.meta("seed", self.seed()?);
        w.meta("format", self.format_str());
        Ok(w)
    }

    /// Pick the particle from flags, then config, then the nucleon default.
    fn particle(&self, args: &ParticleArgs) -> Result<(ModelParams<f64>, String), CliError> {
        let nucleons = args.nucleons.or(self.config.get_f64("run", "nucleons")?);
        let mass_kg = args.mass_kg.or(self.config.get_f64("run", "mass_kg")?);
        let preset = args
            .preset
            .clone()
            .or_else(|| self.config.get("run", "preset").map(|s| s.to_string()));
        if let Some(n) = nucleons {
            let p = ModelParams::nucleon_aggregate(n).map_err(CliError::from)?;
            return Ok((p, format!("custom ({n:e} nucleons)")));
        }
        if let Some(m) = mass_kg {
            let p = ModelParams::with_mass(m).map_err(CliError::from)?;
            return Ok((p, format!("custom ({m:e} kg)")));
        }
        let name = preset.unwrap_or_else(|| "nucleon".to_string());
        let preset = match name.as_str() {
            "electron" => Preset::Electron,
            "nucleon" => Preset::Nucleon,
            "gram" => Preset::Gram,
            "earth" => Preset::Earth,
            "custom" => {
                return Err(CliError::Config(
                    "preset `custom` needs --mass-kg or --nucleons".into(),
                ))
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown preset `{other}` (electron, nucleon, gram, earth, custom)"
                )))
            }
        };
        Ok((ModelParams::preset(preset), name))
    }
}

fn f64_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("`{s}` is not a number")))
        })
        .collect()
}

// ───────────────────────── constants ─────────────────────────

pub fn constants(ctx: &Context, args: &ParticleArgs) -> CmdResult {
    let (params, label) = ctx.particle(args)?;
    let c = derive_constants(&params).map_err(CliError::from)?;
    let scale = c.scale();
    let rows: Vec<(&str, f64, f64)> = vec![
        ("lambda_per_m2_s", c.lambda, 0.25),
        ("omega_per_s", c.omega, 1.0),
        ("length_unit_m", c.length_unit, 1.0),
        ("time_unit_s", scale.time_unit(), 1.0),
        ("sigma_q_inf_m", c.sigma_q_inf, 1.0),
        (
            "sigma_p_inf_kg_m_per_s",
            c.sigma_p_inf,
            std::f64::consts::FRAC_1_SQRT_2,
        ),
        ("a_inf_re_per_m2", c.a_inf.re, 0.25),
        ("a_inf_im_per_m2", c.a_inf.im, -0.25),
        ("energy_rate_j_per_s", c.energy_rate, 0.125),
        (
            "lambda_cm_per_m2_s",
            c.lambda_cm_for_mass(params.m),
            0.25,
        ),
    ];
    let mut w = ctx.writer("constants")?;
    w.meta("preset", &label);
    if ctx.want_csv() {
        let csv_rows: Vec<Vec<String>> = rows
            .iter()
            .map(|(name, si, nat)| vec![name.to_string(), fmt_f64(*si), fmt_f64(*nat)])
            .collect();
        w.write_csv(
            "constants.csv",
            &["name", "si_value", "dimensionless_value"],
            &csv_rows,
        )?;
        // Reference decoherence rates for context; documentation values only.
        let deco: Vec<Vec<String>> = qmupl::units::DECOHERENCE_COMPARISON_CM2_S
            .iter()
            .map(|(source, dust, molecule)| {
                vec![source.to_string(), fmt_f64(*dust), fmt_f64(*molecule)]
            })
            .collect();
        w.write_csv(
            "decoherence_comparison.csv",
            &[
                "source",
                "lambda_dust_1e-3cm_cm2_s",
                "lambda_molecule_1e-6cm_cm2_s",
            ],
            &deco,
        )?;
    }
    println!("constants for {label}");
    for (name, si, nat) in &rows {
        println!("  {name:<26} {si:>14.6e}   (natural units: {nat})");
    }
    w.finish("constants")?;
    Ok(ExitCode::SUCCESS)
}

// ───────────────────────── single ─────────────────────────

#[allow(clippy::too_many_arguments)]
pub fn single(
    ctx: &Context,
    particle: &ParticleArgs,
    sigma0: Option<f64>,
    sigma0_list: Option<&str>,
    horizon: Option<f64>,
    dt: Option<f64>,
) -> CmdResult {
    let (params, label) = ctx.particle(particle)?;
    let c = derive_constants(&params).map_err(CliError::from)?;
    let scale = c.scale();
    let model = c.natural_model();
    let free: Model<f64> = Model::free();
    let sigma0 = sigma0
        .or(ctx.config.get_f64("single", "sigma0_m")?)
        .unwrap_or(1e-3);
    if sigma0 <= 0.0 {
        return Err(CliError::Config("sigma0 must be positive".into()));
    }
    let horizon = horizon
        .or(ctx.config.get_f64("single", "horizon")?)
        .unwrap_or(5.0);
    let dt = dt.or(ctx.config.get_f64("single", "dt")?).unwrap_or(1e-3);
    let samples = ctx.config.get_usize("single", "samples")?.unwrap_or(400);
    let seed = ctx.seed()?;

    let mut w = ctx.writer("single")?;
    w.meta("preset", &label);
    w.meta("sigma0_m", sigma0);
    w.meta("horizon", horizon);
    w.meta("dt", dt);

    // Spread curves: stochastic vs free Schrödinger, SI units out.
    let sigma0_hat = scale.length_to_dimensionless(sigma0);
    let a0_hat = qmupl::C64::new(1.0 / (4.0 * sigma0_hat * sigma0_hat), 0.0);
    let mut spread_rows = Vec::with_capacity(samples + 1);
    let mut curve_sse = Vec::new();
    let mut curve_sch = Vec::new();
    for i in 0..=samples {
        let tau = horizon * i as f64 / samples as f64;
        let t_si = scale.time_to_si(tau);
        let s_sse =
            scale.length_to_si(gauss1::spreads_at(&model, a0_hat, tau).map_err(CliError::from)?.0);
        let s_sch =
            scale.length_to_si(gauss1::spreads_at(&free, a0_hat, tau).map_err(CliError::from)?.0);
        spread_rows.push(vec![fmt_f64(t_si), fmt_f64(s_sch), fmt_f64(s_sse)]);
        curve_sch.push((t_si, s_sch));
        curve_sse.push((t_si, s_sse));
    }
    if ctx.want_csv() {
        w.write_csv(
            "spreads.csv",
            &["t_s", "sigma_q_schrodinger_m", "sigma_q_stochastic_m"],
            &spread_rows,
        )?;
    }
    if ctx.want_svg() {
        let chart = LineChart {
            title: format!("position spread, {label}, sigma0 = {sigma0:e} m"),
            x_label: "t (s)".into(),
            y_label: "sigma_q (m)".into(),
            log_y: false,
            series: vec![
                Series {
                    name: "Schrodinger".into(),
                    points: curve_sch,
                },
                Series {
                    name: "stochastic".into(),
                    points: curve_sse,
                },
            ],
        };
        w.write_file("spreads.svg", &chart.render())?;
    }

    // One sampled trajectory of the peak dynamics.
    let steps = (horizon / dt).round() as usize;
    let record_every = (steps / 500).max(1);
    let mut state = gauss1::GaussianState::new(a0_hat, 0.0, 0.0).map_err(CliError::from)?;
    let path = stochastic::sample_path::<f64>(horizon, dt, seed, 0).map_err(CliError::from)?;
    let mut rows = Vec::new();
    let mut record = |s: &gauss1::GaussianState<f64>| {
        let (sq, sp) = gauss1::spreads_of(&model, s.a);
        let a_si = scale.width_param_to_si(s.a);
        rows.push(vec![
            fmt_f64(scale.time_to_si(s.t)),
            fmt_f64(a_si.re),
            fmt_f64(a_si.im),
            fmt_f64(scale.length_to_si(sq)),
            fmt_f64(scale.momentum_to_si(sp)),
            fmt_f64(scale.length_to_si(s.x_bar)),
            fmt_f64(scale.wavenumber_to_si(s.k_bar)),
        ]);
    };
    record(&state);
    for (n, &dw) in path.increments.iter().enumerate() {
        state = gauss1::step_means(&model, &state, dw, dt).map_err(CliError::from)?;
        if (n + 1) % record_every == 0 {
            record(&state);
        }
    }
    if ctx.want_csv() {
        w.write_csv(
            "sample_path.csv",
            &[
                "t_s",
                "a_re_per_m2",
                "a_im_per_m2",
                "sigma_q_m",
                "sigma_p_kg_m_per_s",
                "x_bar_m",
                "k_bar_per_m",
            ],
            &rows,
        )?;
    }

    // Localization sweep over a family of initial spreads.
    let list = match sigma0_list {
        Some(text) => Some(f64_list(text)?),
        None => ctx.config.get_f64_list("single", "sigma0_list_m")?,
    };
    let list = list.unwrap_or_else(|| {
        if params.m > 1e-6 {
            vec![1e-2, 1e-4, 1e-6, 1e-8]
        } else {
            Vec::new()
        }
    });
    if !list.is_empty() {
        let mut rows = Vec::new();
        let mut family = Vec::new();
        let mut all_within = true;
        for &s0 in &list {
            if s0 <= 0.0 {
                return Err(CliError::Config("sigma0 list entries must be positive".into()));
            }
            let s0_hat = scale.length_to_dimensionless(s0);
            let a0 = qmupl::C64::new(1.0 / (4.0 * s0_hat * s0_hat), 0.0);
            let mut t_loc = f64::NAN;
            let mut points = Vec::new();
            for i in 0..=240 {
                let t_si = 10f64.powf(-12.0 + 11.0 * i as f64 / 240.0);
                let tau = scale.time_to_dimensionless(t_si);
                let sq =
                    scale.length_to_si(gauss1::spreads_at(&model, a0, tau).map_err(CliError::from)?.0);
                points.push((t_si.log10(), sq));
                if t_loc.is_nan() && sq < LOCALIZATION_THRESHOLD_M {
                    t_loc = t_si;
                }
            }
            let within = !t_loc.is_nan() && t_loc <= 1e-2;
            all_within &= within;
            rows.push(vec![
                fmt_f64(s0),
                fmt_f64(t_loc),
                (within as u8).to_string(),
            ]);
            family.push(Series {
                name: format!("sigma0 = {s0:e} m"),
                points,
            });
        }
        if ctx.want_csv() {
            w.write_csv(
                "localization.csv",
                &["sigma0_m", "t_localized_s", "within_10ms"],
                &rows,
            )?;
        }
        if ctx.want_svg() {
            let chart = LineChart {
                title: format!("spread decay, {label}"),
                x_label: "log10 t (s)".into(),
                y_label: "sigma_q (m)".into(),
                log_y: true,
                series: family,
            };
            w.write_file("localization.svg", &chart.render())?;
        }
        w.meta("all_localized_within_10ms", all_within);
        println!(
            "localization sweep: {} spreads, all below {LOCALIZATION_THRESHOLD_M:e} m within 10 ms: {all_within}",
            list.len()
        );
    }

    w.finish("single")?;
    Ok(ExitCode::SUCCESS)
}

// ───────────────────────── double ─────────────────────────

#[allow(clippy::too_many_arguments)]
pub fn double(
    ctx: &Context,
    x0: Option<f64>,
    k0: Option<f64>,
    gamma0: Option<f64>,
    b: Option<f64>,
    dt: Option<f64>,
    horizon: Option<f64>,
    n_paths: Option<usize>,
) -> CmdResult {
    let model: Model<f64> = Model::natural();
    let x0 = x0.or(ctx.config.get_f64("double", "x0")?).unwrap_or(4.0);
    let k0 = k0.or(ctx.config.get_f64("double", "k0")?).unwrap_or(0.0);
    let gamma0 = gamma0
        .or(ctx.config.get_f64("double", "gamma0")?)
        .unwrap_or(0.0);
    let b = b.or(ctx.config.get_f64("double", "b")?).unwrap_or(10.0);
    let dt = dt.or(ctx.config.get_f64("double", "dt")?).unwrap_or(1e-3);
    let horizon = horizon
        .or(ctx.config.get_f64("double", "horizon")?)
        .unwrap_or(5.0);
    let n_paths = n_paths
        .or(ctx.config.get_usize("double", "n_paths")?)
        .unwrap_or(8);
    let seed = ctx.seed()?;
    if dt <= 0.0 || horizon < dt {
        return Err(CliError::Config("double needs dt > 0 and horizon >= dt".into()));
    }

    let mut init = DoubleGaussianState::symmetric(model.a_inf(), x0, k0)
        .map_err(CliError::from)?
        .normalized();
    init.gamma_2.re += gamma0 / 2.0;
    init.gamma_1.re -= gamma0 / 2.0;

    let steps = (horizon / dt).round() as usize;
    let record_every = (steps / 400).max(1);
    let mut w = ctx.writer("double")?;
    w.meta("x0", x0);
    w.meta("k0", k0);
    w.meta("gamma0", gamma0);
    w.meta("b", b);
    w.meta("dt", dt);
    w.meta("horizon", horizon);
    w.meta("n_paths", n_paths);

    let mut rows = Vec::new();
    let mut outcome_rows = Vec::new();
    let mut n_plus = 0usize;
    let mut n_minus = 0usize;
    let mut n_merged = 0usize;
    let mut gamma_series: Vec<Series> = Vec::new();
    for path in 0..n_paths {
        let traj = gauss2::simulate_double_full(&model, init, dt, steps, seed, path as u64)
            .map_err(CliError::from)?;
        let mut crossing: Option<(f64, i8)> = None;
        let mut points = Vec::new();
        for (n, s) in traj.states.iter().enumerate() {
            let cv = s.collapse_variables();
            if crossing.is_none() && cv.gamma_r.abs() >= b {
                crossing = Some((s.t, if cv.gamma_r > 0.0 { 1 } else { -1 }));
            }
            if n % record_every == 0 {
                rows.push(vec![
                    path.to_string(),
                    fmt_f64(s.t),
                    fmt_f64(cv.x),
                    fmt_f64(cv.k),
                    fmt_f64(cv.gamma_r),
                    fmt_f64(s.mean_position()),
                ]);
                points.push((s.t, cv.gamma_r));
            }
        }
        match crossing {
            Some((t, sign)) => {
                if sign > 0 {
                    n_plus += 1;
                } else {
                    n_minus += 1;
                }
                outcome_rows.push(vec![
                    path.to_string(),
                    sign.to_string(),
                    fmt_f64(t),
                    "0".into(),
                ]);
            }
            None => {
                n_merged += 1;
                outcome_rows.push(vec![path.to_string(), "0".into(), fmt_f64(f64::NAN), "1".into()]);
            }
        }
        gamma_series.push(Series {
            name: format!("path {path}"),
            points,
        });
    }
    if ctx.want_csv() {
        w.write_csv(
            "double_trajectories.csv",
            &["path", "t", "x_sep", "k_sep", "gamma_r", "mean_q"],
            &rows,
        )?;
        w.write_csv(
            "double_outcomes.csv",
            &["path", "hit_sign", "hit_time", "merged"],
            &outcome_rows,
        )?;
    }
    if ctx.want_svg() {
        let chart = LineChart {
            title: format!("log weight ratio, X0 = {x0}"),
            x_label: "omega t".into(),
            y_label: "Gamma_R".into(),
            log_y: false,
            series: gamma_series,
        };
        w.write_file("double_gamma.svg", &chart.render())?;
    }
    println!(
        "double: {n_paths} paths, collapsed +:{n_plus} -:{n_minus}, merged (no |Gamma| >= {b}): {n_merged}"
    );
    w.meta("collapsed_plus", n_plus);
    w.meta("collapsed_minus", n_minus);
    w.meta("merged", n_merged);
    w.finish("double")?;
    Ok(ExitCode::SUCCESS)
}

// ───────────────────────── grid ─────────────────────────

#[allow(clippy::too_many_arguments)]
pub fn grid(
    ctx: &Context,
    scenario: Option<&str>,
    n: Option<usize>,
    length: Option<f64>,
    dt: Option<f64>,
    horizon: Option<f64>,
    x0: Option<f64>,
    snapshots: Option<&str>,
) -> CmdResult {
    let model: Model<f64> = Model::natural();
    let scenario = scenario
        .map(|s| s.to_string())
        .or_else(|| ctx.config.get("grid", "scenario").map(|s| s.to_string()))
        .unwrap_or_else(|| "single".to_string());
    let n = n.or(ctx.config.get_usize("grid", "n")?).unwrap_or(1024);
    let length = length
        .or(ctx.config.get_f64("grid", "length")?)
        .unwrap_or(40.0);
    let dt = dt.or(ctx.config.get_f64("grid", "dt")?).unwrap_or(1e-4);
    let horizon = horizon
        .or(ctx.config.get_f64("grid", "horizon")?)
        .unwrap_or(1.0);
    let x0 = x0.or(ctx.config.get_f64("grid", "x0")?).unwrap_or(4.0);
    let seed = ctx.seed()?;
    let spec = GridSpec::new(n, length).map_err(CliError::from)?;

    let mut wave = match scenario.as_str() {
        "single" => WaveGrid::gaussian(spec, model.a_inf(), 0.0, 0.0).map_err(CliError::from)?,
        "double" => {
            let st = DoubleGaussianState::symmetric(model.a_inf(), x0, 0.0)
                .map_err(CliError::from)?
                .normalized();
            WaveGrid::from_double(spec, &st).map_err(CliError::from)?
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown grid scenario `{other}` (single, double)"
            )))
        }
    };

    let snap_times: Vec<f64> = match snapshots
        .map(|s| s.to_string())
        .or_else(|| ctx.config.get("grid", "snapshots").map(|s| s.to_string()))
    {
        Some(text) => f64_list(&text)?,
        None => vec![0.0, horizon / 2.0, horizon],
    };
    for &t in &snap_times {
        if t < 0.0 || t > horizon + 1e-12 {
            return Err(CliError::Config(format!(
                "snapshot time {t} outside [0, horizon]"
            )));
        }
    }

    let steps = (horizon / dt).round() as usize;
    let record_every = ctx
        .config
        .get_usize("grid", "record_every")?
        .unwrap_or((steps / 200).max(1));
    let path = stochastic::sample_path::<f64>(horizon, dt, seed, 0).map_err(CliError::from)?;

    let mut w = ctx.writer("grid")?;
    w.meta("scenario", &scenario);
    w.meta("n", n);
    w.meta("length", length);
    w.meta("dt", dt);
    w.meta("horizon", horizon);

    let mut engine = SpectralEngine::new(spec);
    let mut measure = SpectralEngine::new(spec);
    let mut rows = Vec::new();
    let mut snapshot_count = 0usize;
    let mut snap_rows: Vec<(String, Vec<Vec<String>>)> = Vec::new();

    let mut take_snapshot = |g: &WaveGrid<f64>, idx: &mut usize| {
        let xs = g.spec.xs();
        let body: Vec<Vec<String>> = xs
            .iter()
            .zip(&g.psi)
            .map(|(&x, p)| {
                vec![
                    fmt_f64(x),
                    fmt_f64(p.re),
                    fmt_f64(p.im),
                    fmt_f64(p.norm_sqr()),
                ]
            })
            .collect();
        snap_rows.push((format!("snapshot_{:03}.csv", idx), body));
        *idx += 1;
    };

    let observe = |g: &WaveGrid<f64>,
                       measure: &mut SpectralEngine<f64>|
     -> Result<Vec<String>, qmupl::Error> {
        let d = measure.delta_a(&model, g)?;
        let (p1, _) = measure.momentum_moments(&model, g)?;
        Ok(vec![
            fmt_f64(g.t),
            fmt_f64(g.mean_q()),
            fmt_f64(p1),
            fmt_f64(g.var_q().sqrt()),
            fmt_f64((d.delta_p).sqrt()),
            fmt_f64(d.delta_a),
        ])
    };

    rows.push(observe(&wave, &mut measure).map_err(CliError::from)?);
    if snap_times.iter().any(|&t| t < dt / 2.0) {
        take_snapshot(&wave, &mut snapshot_count);
    }
    let mut pending: Vec<f64> = snap_times.iter().copied().filter(|&t| t >= dt / 2.0).collect();
    pending.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut pending = pending.into_iter().peekable();

    engine
        .evolve_nonlinear(&model, &mut wave, &path.increments, dt, |g, info| {
            if info.step % record_every == 0 || info.step == steps {
                rows.push(observe(g, &mut measure)?);
            }
            while let Some(&t) = pending.peek() {
                if g.t + dt / 2.0 >= t {
                    take_snapshot(g, &mut snapshot_count);
                    pending.next();
                } else {
                    break;
                }
            }
            Ok(())
        })
        .map_err(CliError::from)?;

    if ctx.want_csv() {
        w.write_csv(
            "trajectory.csv",
            &["t", "mean_q", "mean_p", "sigma_q", "sigma_p", "delta_a"],
            &rows,
        )?;
        for (name, body) in &snap_rows {
            w.write_csv(name, &["x", "re_psi", "im_psi", "density"], body)?;
        }
    }
    if ctx.want_svg() {
        let density: Vec<(f64, f64)> = wave
            .spec
            .xs()
            .iter()
            .zip(&wave.psi)
            .map(|(&x, p)| (x, p.norm_sqr()))
            .collect();
        let chart = LineChart {
            title: format!("|psi|^2 at omega t = {horizon} ({scenario})"),
            x_label: "x / l".into(),
            y_label: "density".into(),
            log_y: false,
            series: vec![Series {
                name: "density".into(),
                points: density,
            }],
        };
        w.write_file("density.svg", &chart.render())?;
    }
    println!(
        "grid {scenario}: {} steps, final sigma_q = {:.4}, delta_a = {:.4e}",
        steps,
        wave.var_q().sqrt(),
        rows.last()
            .and_then(|r| r.last())
            .and_then(|s| s.parse::<f64>().ok())
            .unwrap_or(f64::NAN)
    );
    w.finish("grid")?;
    Ok(ExitCode::SUCCESS)
}

// ───────────────────────── master ─────────────────────────

pub fn master(ctx: &Context, t: Option<f64>, n: Option<usize>, length: Option<f64>) -> CmdResult {
    let model: Model<f64> = Model::natural();
    let t = t.or(ctx.config.get_f64("master", "t")?).unwrap_or(1.0);
    let n = n.or(ctx.config.get_usize("master", "n")?).unwrap_or(512);
    let length = length
        .or(ctx.config.get_f64("master", "length")?)
        .unwrap_or(40.0);
    let a0 = qmupl::C64::new(
        ctx.config.get_f64("master", "a0_re")?.unwrap_or(0.25),
        ctx.config.get_f64("master", "a0_im")?.unwrap_or(-0.25),
    );
    let x0 = ctx.config.get_f64("master", "x0")?.unwrap_or(0.0);
    let k0 = ctx.config.get_f64("master", "k0")?.unwrap_or(0.0);
    if t < 0.0 {
        return Err(CliError::Config("master needs t >= 0".into()));
    }
    let spec = GridSpec::new(n, length).map_err(CliError::from)?;
    let xs = spec.xs();
    let p_s = master::pure_schrodinger_density(&model, a0, x0, k0, t, &xs)
        .map_err(CliError::from)?;
    let out = master::density_convolve(&model, &p_s, t).map_err(CliError::from)?;

    let mut w = ctx.writer("master")?;
    w.meta("t", t);
    w.meta("delta_regime", out.delta_regime);
    if t > 0.0 {
        w.meta("alpha", master::alpha(&model, t).map_err(CliError::from)?);
    }
    if ctx.want_csv() {
        let sch: Vec<Vec<String>> = p_s
            .xs
            .iter()
            .zip(&p_s.values)
            .map(|(&x, &v)| vec![fmt_f64(x), fmt_f64(v)])
            .collect();
        w.write_csv("schrodinger_density.csv", &["x", "p"], &sch)?;
        let mas: Vec<Vec<String>> = out
            .profile
            .xs
            .iter()
            .zip(&out.profile.values)
            .map(|(&x, &v)| vec![fmt_f64(x), fmt_f64(v)])
            .collect();
        w.write_csv("master_density.csv", &["x", "p"], &mas)?;
    }
    if ctx.want_svg() {
        let chart = LineChart {
            title: format!("densities at omega t = {t}"),
            x_label: "x / l".into(),
            y_label: "p(x)".into(),
            log_y: false,
            series: vec![
                Series {
                    name: "pure Schrodinger".into(),
                    points: p_s.xs.iter().zip(&p_s.values).map(|(&x, &v)| (x, v)).collect(),
                },
                Series {
                    name: "master equation".into(),
                    points: out
                        .profile
                        .xs
                        .iter()
                        .zip(&out.profile.values)
                        .map(|(&x, &v)| (x, v))
                        .collect(),
                },
            ],
        };
        w.write_file("densities.svg", &chart.render())?;
    }
    println!(
        "master: t = {t}, delta_regime = {}, mass = {:.6}",
        out.delta_regime,
        out.profile.integral()
    );
    w.finish("master")?;
    Ok(ExitCode::SUCCESS)
}

// ───────────────────────── hitting ─────────────────────────

pub fn hitting(
    ctx: &Context,
    b: Option<f64>,
    b0: Option<f64>,
    eta: Option<f64>,
    dt_s: Option<f64>,
    s_max: Option<f64>,
    n_paths: Option<usize>,
) -> CmdResult {
    let b = b.or(ctx.config.get_f64("hitting", "b")?).unwrap_or(2.0);
    let b0 = b0.or(ctx.config.get_f64("hitting", "b0")?).unwrap_or(0.0);
    let eta = eta.or(ctx.config.get_f64("hitting", "eta")?).unwrap_or(1.0);
    let dt_s = dt_s
        .or(ctx.config.get_f64("hitting", "dt_s")?)
        .unwrap_or(1e-3);
    let s_max = s_max
        .or(ctx.config.get_f64("hitting", "s_max")?)
        .unwrap_or(200.0);
    let n_paths = n_paths
        .or(ctx.config.get_usize("hitting", "n_paths")?)
        .unwrap_or(10_000);
    let post_window = ctx
        .config
        .get_f64("hitting", "post_window")?
        .unwrap_or(20.0);
    let seed = ctx.seed()?;

    let cfg = HittingConfig::new(b, b0, eta).map_err(CliError::from)?;
    let stats = gauss2::hitting_stats(&cfg).map_err(CliError::from)?;
    let ens =
        gauss2::run_hitting_ensemble(b, b0, s_max, dt_s, seed, n_paths).map_err(CliError::from)?;
    let deloc = gauss2::run_delocalization_ensemble(&cfg, s_max, post_window, dt_s, seed + 1, n_paths)
        .map_err(CliError::from)?;

    let mut w = ctx.writer("hitting")?;
    w.meta("b", b);
    w.meta("b0", b0);
    w.meta("eta", eta);
    w.meta("dt_s", dt_s);
    w.meta("n_paths", n_paths);

    if ctx.want_csv() {
        let rows: Vec<Vec<String>> = ens
            .outcomes
            .iter()
            .enumerate()
            .map(|(i, o)| {
                vec![
                    i.to_string(),
                    o.sign.to_string(),
                    fmt_f64(o.s),
                    (o.censored as u8).to_string(),
                ]
            })
            .collect();
        w.write_csv(
            "hitting_paths.csv",
            &["path_index", "hit_sign", "hit_time_s", "censored"],
            &rows,
        )?;
    }
    let z_mean = (ens.mean_s - stats.mean_s) / ens.se_mean;
    let z_var = (ens.var_s - stats.var_s) / ens.se_var;
    let z_frac = (ens.frac_plus - stats.p_collapse_2) / ens.se_frac;
    let mut summary = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(summary, "n_paths = {n_paths}");
    let _ = writeln!(summary, "n_censored = {}", ens.n_censored);
    let _ = writeln!(summary, "mean_s = {}", fmt_f64(ens.mean_s));
    let _ = writeln!(summary, "mean_s_formula = {}", fmt_f64(stats.mean_s));
    let _ = writeln!(summary, "z_mean = {}", fmt_f64(z_mean));
    let _ = writeln!(summary, "var_s = {}", fmt_f64(ens.var_s));
    let _ = writeln!(summary, "var_s_formula = {}", fmt_f64(stats.var_s));
    let _ = writeln!(summary, "z_var = {}", fmt_f64(z_var));
    let _ = writeln!(summary, "frac_plus = {}", fmt_f64(ens.frac_plus));
    let _ = writeln!(summary, "p_collapse_2_formula = {}", fmt_f64(stats.p_collapse_2));
    let _ = writeln!(summary, "z_frac = {}", fmt_f64(z_frac));
    let _ = writeln!(summary, "deloc_frequency = {}", fmt_f64(deloc.frequency));
    let _ = writeln!(summary, "deloc_bound = {}", fmt_f64(deloc.bound));
    let _ = writeln!(summary, "deloc_within_bound = {}", deloc.within_bound);
    w.write_file("hitting_summary.txt", &summary)?;
    print!("{summary}");

    if ctx.want_svg() {
        let mut times: Vec<f64> = ens
            .outcomes
            .iter()
            .filter(|o| !o.censored)
            .map(|o| o.s)
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = times.len() as f64;
        let cdf: Vec<(f64, f64)> = times
            .iter()
            .enumerate()
            .map(|(i, &t)| (t, (i + 1) as f64 / n))
            .collect();
        let chart = LineChart {
            title: format!("exit-time CDF, b = {b}, b0 = {b0}"),
            x_label: "s".into(),
            y_label: "P(S <= s)".into(),
            log_y: false,
            series: vec![Series {
                name: "empirical".into(),
                points: cdf,
            }],
        };
        w.write_file("hitting_cdf.svg", &chart.render())?;
    }
    w.finish("hitting")?;
    Ok(ExitCode::SUCCESS)
}

// ───────────────────────── ensemble ─────────────────────────

pub fn ensemble(
    ctx: &Context,
    scenario: Option<&str>,
    n_paths: Option<usize>,
    dt: Option<f64>,
    steps: Option<usize>,
    record_every: Option<usize>,
) -> CmdResult {
    let model: Model<f64> = Model::natural();
    let name = scenario
        .map(|s| s.to_string())
        .or_else(|| ctx.config.get("ensemble", "scenario").map(|s| s.to_string()))
        .unwrap_or_else(|| "single-means".to_string());
    let n_paths = n_paths
        .or(ctx.config.get_usize("ensemble", "n_paths")?)
        .unwrap_or(2000);
    let dt = dt.or(ctx.config.get_f64("ensemble", "dt")?).unwrap_or(1e-3);
    let steps = steps
        .or(ctx.config.get_usize("ensemble", "steps")?)
        .unwrap_or(1000);
    let record_every = record_every
        .or(ctx.config.get_usize("ensemble", "record_every")?)
        .unwrap_or((steps / 10).max(1));
    let grid_n = ctx.config.get_usize("ensemble", "n")?.unwrap_or(256);
    let grid_len = ctx.config.get_f64("ensemble", "length")?.unwrap_or(40.0);
    let x0 = ctx.config.get_f64("ensemble", "x0")?.unwrap_or(4.0);
    let seed = ctx.seed()?;
    let spec = EnsembleSpec::new(n_paths, seed).map_err(CliError::from)?;

    // Oracle per observable where a closed form exists.
    let (stats, oracles): (qmupl::MomentStats64, Vec<(String, Vec<f64>)>) = match name.as_str() {
        "single-means" => {
            let sc = SingleGaussianMeans::stationary(model, dt, steps, record_every);
            let stats = run_ensemble(&sc, &spec).map_err(CliError::from)?;
            let cov = gauss1::covariance_evolution(&model, model.a_inf(), &stats.times)
                .map_err(CliError::from)?;
            let e0 = gauss1::mean_energy(&model, model.a_inf(), 0.0);
            let oracles = vec![
                ("x".to_string(), vec![0.0; stats.times.len()]),
                ("k".to_string(), vec![0.0; stats.times.len()]),
                ("xx".to_string(), cov.iter().map(|c| c.c_q2).collect()),
                ("kk".to_string(), cov.iter().map(|c| c.c_p2).collect()),
                ("xk".to_string(), cov.iter().map(|c| c.c_qp).collect()),
                (
                    "energy".to_string(),
                    stats
                        .times
                        .iter()
                        .map(|&t| e0 + model.energy_rate() * t)
                        .collect(),
                ),
                ("ehrenfest".to_string(), vec![0.0; stats.times.len()]),
            ];
            (stats, oracles)
        }
        "linear-martingale" => {
            let sc = LinearNormMartingale {
                model,
                a0: model.a_inf(),
                dt,
                steps,
                record_every,
            };
            let stats = run_ensemble(&sc, &spec).map_err(CliError::from)?;
            let ones = vec![1.0; stats.times.len()];
            (stats, vec![("norm_sq".to_string(), ones)])
        }
        "grid-linear-martingale" => {
            let sc = GridLinearMartingale {
                model,
                grid: GridSpec::new(grid_n, grid_len).map_err(CliError::from)?,
                a0: model.a_inf(),
                dt,
                steps,
            };
            let stats = run_ensemble(&sc, &spec).map_err(CliError::from)?;
            let ones = vec![1.0; stats.times.len()];
            (stats, vec![("norm_sq".to_string(), ones)])
        }
        "grid-double-delta-a" => {
            let initial = DoubleGaussianState::symmetric(model.a_inf(), x0, 0.0)
                .map_err(CliError::from)?
                .normalized();
            let sc = GridDoubleDeltaA {
                model,
                grid: GridSpec::new(grid_n, grid_len).map_err(CliError::from)?,
                initial,
                dt,
                steps,
                record_every,
            };
            (run_ensemble(&sc, &spec).map_err(CliError::from)?, Vec::new())
        }
        "grid-mean-density" => {
            let gspec = GridSpec::new(grid_n, grid_len).map_err(CliError::from)?;
            let sc = GridMeanDensity {
                model,
                grid: gspec,
                initial: GridInitial::Gaussian {
                    a0: model.a_inf(),
                    x0: 0.0,
                    k0: 0.0,
                },
                dt,
                steps,
            };
            let stats = run_ensemble(&sc, &spec).map_err(CliError::from)?;
            // Master-equation density as the oracle for every grid point.
            let t_end = steps as f64 * dt;
            let xs = gspec.xs();
            let p_s = master::pure_schrodinger_density(&model, model.a_inf(), 0.0, 0.0, t_end, &xs)
                .map_err(CliError::from)?;
            let conv = master::density_convolve(&model, &p_s, t_end).map_err(CliError::from)?;
            let oracles = stats
                .observables
                .iter()
                .enumerate()
                .map(|(i, o)| (o.clone(), vec![conv.profile.values[i]]))
                .collect();
            (stats, oracles)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown ensemble scenario `{other}`"
            )))
        }
    };

    let mut w = ctx.writer("ensemble")?;
    w.meta("scenario", &name);
    w.meta("n_paths", n_paths);
    w.meta("dt", dt);
    w.meta("steps", steps);

    let mut rows = Vec::new();
    for (oi, obs) in stats.observables.iter().enumerate() {
        let oracle = oracles.iter().find(|(name, _)| name == obs).map(|(_, v)| v);
        for (ti, &t) in stats.times.iter().enumerate() {
            let cell = stats.cell(ti, oi);
            let se = cell.std_error().unwrap_or(0.0);
            let (oracle_s, z_s) = match oracle {
                Some(values) => {
                    let target = values[ti];
                    let z = if se > 0.0 {
                        (cell.mean() - target) / se
                    } else {
                        0.0
                    };
                    (fmt_f64(target), fmt_f64(z))
                }
                None => (String::new(), String::new()),
            };
            rows.push(vec![
                fmt_f64(t),
                obs.clone(),
                fmt_f64(cell.mean()),
                fmt_f64(se),
                oracle_s,
                z_s,
            ]);
        }
    }
    if ctx.want_csv() {
        w.write_csv(
            "stats.csv",
            &["t", "observable", "mean", "stderr", "oracle", "z"],
            &rows,
        )?;
    }
    println!("ensemble {name}: {n_paths} paths, {} observables", stats.observables.len());
    w.finish("ensemble")?;
    Ok(ExitCode::SUCCESS)
}

// ───────────────────────── verify ─────────────────────────

pub fn verify(ctx: &Context, suite: Option<&str>, n_paths: Option<usize>) -> CmdResult {
    let suite = suite
        .map(|s| s.to_string())
        .or_else(|| ctx.config.get("verify", "suite").map(|s| s.to_string()))
        .unwrap_or_else(|| "all".to_string());
    let n_paths = match n_paths {
        Some(n) => Some(n),
        None => ctx.config.get_usize("verify", "n_paths")?,
    };
    let opts = McOptions {
        n_paths,
        seed: ctx.seed.unwrap_or(McOptions::default().seed),
    };
    let reports = verify::run_suite(&suite, opts).map_err(CliError::from)?;
    let mut out = String::new();
    let mut all_pass = true;
    for r in &reports {
        let line = r.line();
        println!("{line}");
        out.push_str(&line);
        out.push('\n');
        all_pass &= r.pass;
    }
    let mut w = ctx.writer("verify")?;
    w.meta("suite", &suite);
    w.write_file("verify_report.txt", &out)?;
    w.finish("verify")?;
    if all_pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(4))
    }
}
