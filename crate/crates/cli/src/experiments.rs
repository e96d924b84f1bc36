//! One function per experiment kind, each turning a [`Config`] into an
//! [`ExperimentResult`] with fixed columns.

use spinbus::hamiltonian::{ChainSpec, DriveParams, RegisterCoupling};
use spinbus::lindblad::NoiseKind;
use spinbus::protocols::{
    classical_threshold, disorder_monte_carlo, ft_threshold, nominal_transfer_time,
    run_entanglement_transfer, run_qst, rwa_validation, threshold_surface, transfer_window, Cell,
    ExperimentKind, ExperimentResult, FtOutcome, Provenance, SearchOptions, ThresholdOutcome,
};
use spinbus::spectral::mode_table;

use crate::config::Config;
use crate::error::CliError;

/// Column names per experiment kind.
pub fn columns(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::Modes => &["n", "E_over_kappa", "Gamma_over_g", "t_times_g"],
        ExperimentKind::Transfer => &["tau_core", "tau_s", "fidelity_sq", "correction"],
        ExperimentKind::Entangle => &["tau_core", "tau_s", "eof", "concurrence"],
        ExperimentKind::Threshold => &[
            "n",
            "g_over_kappa",
            "noise",
            "rate_core",
            "coherence_s",
            "bracket_lo_core",
            "bracket_hi_core",
            "evaluations",
        ],
        ExperimentKind::FtThreshold => &[
            "n",
            "g_over_kappa",
            "noise",
            "target",
            "status",
            "coherence_s",
            "noiseless_max",
        ],
        ExperimentKind::Surface => &["g_over_kappa", "coherence_s", "rate_core", "max_eof"],
        ExperimentKind::Disorder => &[
            "n",
            "model",
            "mean_max_eof",
            "ci95_half_width",
            "kappa_rel_spread",
            "runs",
        ],
        ExperimentKind::LongChain => &["n", "tau_core", "tau_s", "eof"],
        ExperimentKind::RwaCheck => &[
            "factor",
            "t_final_core",
            "first_rwa_deviation",
            "full_deviation",
            "hierarchy_ok",
        ],
    }
}

pub fn run(kind: ExperimentKind, cfg: &Config) -> Result<ExperimentResult, CliError> {
    let mut r = match kind {
        ExperimentKind::Modes => modes(cfg)?,
        ExperimentKind::Transfer => transfer(cfg)?,
        ExperimentKind::Entangle => entangle(cfg)?,
        ExperimentKind::Threshold => threshold(cfg)?,
        ExperimentKind::FtThreshold => ft(cfg)?,
        ExperimentKind::Surface => surface(cfg)?,
        ExperimentKind::Disorder => disorder(cfg)?,
        ExperimentKind::LongChain => long_chain(cfg)?,
        ExperimentKind::RwaCheck => rwa(cfg)?,
    };
    debug_assert_eq!(r.columns, columns(kind));
    r.provenance
        .parameters
        .insert("config_sha256".into(), cfg.hash());
    r.provenance.validate()?;
    Ok(r)
}

fn register_over_kappa(spec: &ChainSpec) -> f64 {
    match spec.register {
        RegisterCoupling::OverKappa(x) => x,
        RegisterCoupling::Hz(g) => g / spec.kappa_hz(),
    }
}

fn search_provenance(spec: &ChainSpec, opts: &SearchOptions, kind: NoiseKind) -> Provenance {
    Provenance::new(Some(spec), None, Some(&opts.integrator))
        .param("noise_kind", kind.name())
        .param("eps_q", opts.eps_q)
        .param("search_rel_tol", opts.rel_tol)
        .param("window_factor", opts.window_factor)
        .param("window_points", opts.points)
}

fn modes(cfg: &Config) -> Result<ExperimentResult, CliError> {
    let spec = cfg.chain()?;
    let table = mode_table(spec.n, 1.0, 1.0)?;
    let mut r = ExperimentResult::new(
        ExperimentKind::Modes,
        columns(ExperimentKind::Modes),
        Provenance::new(Some(&spec), None, None),
    );
    for m in &table.modes {
        r.push_row(vec![
            m.n.into(),
            m.energy.into(),
            m.gamma.into(),
            m.transfer_time.into(),
        ]);
    }
    let t = nominal_transfer_time(&spec);
    r.set("zero_mode_transfer_time_core", t);
    r.set("zero_mode_transfer_time_s", spec.time_to_seconds(t));
    if spec.n % 2 == 0 {
        r.warnings.push("even N has no zero-energy mode".into());
    }
    Ok(r)
}

fn window(cfg: &Config, spec: &ChainSpec) -> Result<Vec<f64>, CliError> {
    let s = cfg.search()?;
    Ok(transfer_window(spec, s.window_factor, s.points))
}

fn transfer(cfg: &Config) -> Result<ExperimentResult, CliError> {
    let spec = cfg.chain()?;
    let noise = cfg.noise(&spec)?;
    let setup = cfg.qst_setup(spec.n)?;
    let grid = window(cfg, &spec)?;
    Ok(run_qst(&spec, &noise, &setup, &grid, &cfg.integrator()?)?)
}

fn entangle(cfg: &Config) -> Result<ExperimentResult, CliError> {
    let spec = cfg.chain()?;
    let noise = cfg.noise(&spec)?;
    let setup = cfg.entanglement_setup(spec.n)?;
    let grid = window(cfg, &spec)?;
    Ok(run_entanglement_transfer(
        &spec,
        &noise,
        &setup,
        &grid,
        &cfg.integrator()?,
    )?)
}

fn threshold_row(spec: &ChainSpec, kind: NoiseKind, t: &ThresholdOutcome) -> Vec<Cell> {
    vec![
        spec.n.into(),
        register_over_kappa(spec).into(),
        kind.name().into(),
        t.rate_core.into(),
        t.coherence_s.into(),
        t.bracket.0.into(),
        t.bracket.1.into(),
        t.evaluations.into(),
    ]
}

fn threshold(cfg: &Config) -> Result<ExperimentResult, CliError> {
    let spec = cfg.chain()?;
    let kind = cfg.search_kind()?;
    let opts = cfg.search()?;
    let setup = cfg.entanglement_setup(spec.n)?;
    let t = classical_threshold(&spec, kind, &setup, &opts)?;
    let prov = search_provenance(&spec, &opts, kind).param(
        "chain_init",
        spinbus::protocols::bits_label(&setup.chain_init),
    );
    let mut r = ExperimentResult::new(
        ExperimentKind::Threshold,
        columns(ExperimentKind::Threshold),
        prov,
    );
    r.push_row(threshold_row(&spec, kind, &t));
    r.set("coherence_s", t.coherence_s);
    r.set("window_core", t.window_core);
    r.warnings.extend(t.warnings);
    Ok(r)
}

fn ft(cfg: &Config) -> Result<ExperimentResult, CliError> {
    let spec = cfg.chain()?;
    let kind = cfg.search_kind()?;
    let opts = cfg.search()?;
    let setup = cfg.qst_setup(spec.n)?;
    let target = cfg.target()?;
    let out = ft_threshold(&spec, kind, &setup, target, &opts)?;
    let prov = search_provenance(&spec, &opts, kind).param("target", target);
    let mut r = ExperimentResult::new(
        ExperimentKind::FtThreshold,
        columns(ExperimentKind::FtThreshold),
        prov,
    );
    let head: Vec<Cell> = vec![
        spec.n.into(),
        register_over_kappa(&spec).into(),
        kind.name().into(),
        target.into(),
    ];
    match out {
        FtOutcome::Never { noiseless_max } => {
            r.push_row(
                [
                    head,
                    vec!["never".into(), "never".into(), noiseless_max.into()],
                ]
                .concat(),
            );
            r.set("status", "never");
        }
        FtOutcome::Reached(t) => {
            r.push_row(
                [
                    head,
                    vec!["reached".into(), t.coherence_s.into(), "".into()],
                ]
                .concat(),
            );
            r.set("status", "reached");
            r.set("coherence_s", t.coherence_s);
            r.warnings.extend(t.warnings);
        }
    }
    Ok(r)
}

fn surface(cfg: &Config) -> Result<ExperimentResult, CliError> {
    let spec = cfg.chain()?;
    let kind = cfg.search_kind()?;
    let opts = cfg.search()?;
    let setup = cfg.entanglement_setup(spec.n)?;
    let g_grid = cfg.g_grid(spec.n)?;
    let times = cfg.coherence_grid()?;
    let rates: Vec<f64> = times.iter().map(|&t| spec.coherence_to_rate(t)).collect();
    let s = threshold_surface(&spec, kind, &g_grid, &rates, &setup, &opts)?;
    let mut r = ExperimentResult::new(
        ExperimentKind::Surface,
        columns(ExperimentKind::Surface),
        search_provenance(&spec, &opts, kind),
    );
    for (i, g) in s.g_over_kappa.iter().enumerate() {
        for (j, rate) in s.rates_core.iter().enumerate() {
            r.push_row(vec![
                (*g).into(),
                times[j].into(),
                (*rate).into(),
                s.max_ef[i][j].into(),
            ]);
        }
    }
    match s.best_g_over_kappa {
        Some(g) => r.set("best_g_over_kappa", g),
        None => r.set("best_g_over_kappa", "none"),
    }
    Ok(r)
}

fn t1_time(cfg: &Config) -> Result<Option<f64>, CliError> {
    match cfg.noise_kind()? {
        None => Ok(None),
        Some(NoiseKind::PhysicalT1) => cfg
            .coherence()?
            .map(Some)
            .ok_or_else(|| CliError::validation("noise is on but `coherence` is missing")),
        Some(NoiseKind::PhysicalT2) => Err(CliError::validation(
            "this experiment runs in the single-excitation block, which supports t1 noise only",
        )),
    }
}

fn disorder(cfg: &Config) -> Result<ExperimentResult, CliError> {
    let template = cfg.chain()?;
    let dis = cfg.disorder()?;
    let opts = cfg.search()?;
    let n_list = cfg.n_list()?;
    let t1 = t1_time(cfg)?;
    let pts = disorder_monte_carlo(&template, &dis, &n_list, template.model, t1, &opts)?;
    let mut prov = Provenance::new(Some(&template), None, Some(&opts.integrator))
        .param("rel_std", dis.rel_std)
        .param("mean_spacing_nm", dis.mean_spacing_nm)
        .param(
            "t1_s",
            t1.map(|t| t.to_string()).unwrap_or_else(|| "none".into()),
        )
        .param("window_factor", opts.window_factor);
    prov.seed = Some(dis.seed);
    let mut r = ExperimentResult::new(
        ExperimentKind::Disorder,
        columns(ExperimentKind::Disorder),
        prov,
    );
    for p in &pts {
        let model = match p.model {
            spinbus::hamiltonian::CouplingModel::NearestNeighbor => "nn",
            spinbus::hamiltonian::CouplingModel::FullDipolar => "fd",
        };
        r.push_row(vec![
            p.n.into(),
            model.into(),
            p.mean.into(),
            p.ci95_half_width.into(),
            p.kappa_rel_spread.into(),
            p.per_run.len().into(),
        ]);
    }
    Ok(r)
}

fn long_chain(cfg: &Config) -> Result<ExperimentResult, CliError> {
    let template = cfg.chain()?;
    let opts = cfg.search()?;
    let n_list = cfg.n_list()?;
    let regime = cfg.regime()?;
    let t1 = t1_time(cfg)?;
    let (pts, warnings) =
        spinbus::protocols::long_chain_scan(&template, &n_list, regime, t1, &opts)?;
    let prov = Provenance::new(Some(&template), None, Some(&opts.integrator))
        .param("regime", format!("{regime:?}").to_lowercase())
        .param(
            "t1_s",
            t1.map(|t| t.to_string()).unwrap_or_else(|| "none".into()),
        )
        .param("window_factor", opts.window_factor);
    let mut r = ExperimentResult::new(
        ExperimentKind::LongChain,
        columns(ExperimentKind::LongChain),
        prov,
    );
    for p in &pts {
        r.push_row(vec![
            p.n.into(),
            p.tau_core.into(),
            p.tau_s.into(),
            p.eof.into(),
        ]);
    }
    r.warnings = warnings;
    Ok(r)
}

fn rwa(cfg: &Config) -> Result<ExperimentResult, CliError> {
    let opts = cfg.rwa()?;
    let p = DriveParams::with_hierarchy(opts.factor);
    let rep = rwa_validation(&p, &opts)?;
    let prov = Provenance::new(None, None, Some(&opts.integrator))
        .param("factor", opts.factor)
        .param("samples", opts.samples);
    let mut r = ExperimentResult::new(
        ExperimentKind::RwaCheck,
        columns(ExperimentKind::RwaCheck),
        prov,
    );
    r.push_row(vec![
        opts.factor.into(),
        rep.t_final.into(),
        rep.first_rwa_deviation.into(),
        rep.full_deviation.into(),
        rep.hierarchy_ok.into(),
    ]);
    r.warnings = rep.warnings;
    Ok(r)
}

/// Entries of the density matrix a run of `kind` evolves; the sweep cost
/// estimate is built from it.
pub fn state_dim(cfg: &Config, kind: ExperimentKind) -> Result<usize, CliError> {
    let n = cfg.n()?;
    let sub = matches!(kind, ExperimentKind::Disorder | ExperimentKind::LongChain)
        || (kind != ExperimentKind::Transfer
            && kind != ExperimentKind::FtThreshold
            && cfg.noise_kind()? != Some(NoiseKind::PhysicalT2)
            && cfg.get("engine") != Some("full")
            && cfg.chain_init(n)?.iter().all(|&b| b == 0));
    Ok(if sub {
        (2 * (n + 3)).pow(2)
    } else {
        1usize << (2 * (n + 3))
    })
}
