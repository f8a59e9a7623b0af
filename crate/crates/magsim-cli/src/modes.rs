//! One entry point per run mode, mapping resolved settings to core-library
//! calls and CSV artifacts.

use crate::config::Settings;
use crate::error::{CliError, WithContext};
use crate::output::{fmt_float, Column, OutputWriter};
use magsim_core::numeric::{golden_min, lin_spaced, loglog_slope};
use magsim_core::{
    broadened_lineshape, detection_result, figure4_sweep, generic_quantum_limit,
    generic_quantum_limit_optimum, length_for_transmission, lineshape_fwhm,
    min_detectable_splitting, montecarlo_stark_oracle, noise_bracket, opm_plateau,
    opm_sensitivity_curve, optimal_rabi_sq, optimal_transmission, phase_noise_budget,
    phase_variance, phase_variance_squeezed, power_to_rabi_sq, propagate_intensity_ode,
    sql_factor_f, sql_factor_f_tilde, sql_min_shift, AbsorptionModel, AtomicParams,
    McConfig, QuantumLimitOptimum, Regime, StarkModel,
};
use std::path::{Path, PathBuf};

type RunResult = Result<Vec<PathBuf>, CliError>;

/// Dispatches the selected mode.
pub fn run(settings: &Settings, out_dir: &Path) -> RunResult {
    let (params, warnings) = settings.atomic_params()?;
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    let mut writer = OutputWriter::new(out_dir, settings).context("creating output directory")?;
    let mut files = match settings.mode() {
        crate::config::Mode::Figure4 => run_figure4(settings, &params, &mut writer)?,
        crate::config::Mode::Lineshape => run_lineshape(settings, &params, &mut writer)?,
        crate::config::Mode::SnrPoint => run_snr_point(settings, &params, &mut writer)?,
        crate::config::Mode::SqlTable => run_sql_table(settings, &params, &mut writer)?,
        crate::config::Mode::McValidate => run_mc_validate(settings, &params, &mut writer)?,
        crate::config::Mode::QuantumLimit => run_quantum_limit(settings, &mut writer)?,
    };
    files.push(writer.write_schema().context("writing SCHEMA.md")?);
    Ok(files)
}

/// Sensitivity-versus-power sweep for each transmission target, with the
/// absorption-magnetometer overlay.
fn run_figure4(
    settings: &Settings,
    params: &AtomicParams,
    writer: &mut OutputWriter,
) -> RunResult {
    let budget = settings.photon_budget()?;
    let etas = settings.f64_list("geometry.eta_list")?;
    let grid = settings.power_grid("detection.power_grid")?;
    let alpha = settings.f64("opm.alpha")?;

    let curves = figure4_sweep(params, &etas, &grid, &budget).context("sensitivity sweep")?;
    let opm = opm_sensitivity_curve(params, alpha, &grid, &budget)
        .context("absorption-magnetometer sweep")?;
    let plateau = opm_plateau(params, alpha, &budget);

    let eit_columns = [
        Column {
            name: "power_ratio",
            description: "input power over the saturation reference power",
        },
        Column {
            name: "omega0_sq",
            description: "input drive intensity |Omega(0)|^2 (units gamma^2)",
        },
        Column {
            name: "min_delta0",
            description: "smallest splitting with unit SNR (units gamma)",
        },
        Column {
            name: "min_delta0_over_gamma0",
            description: "the same splitting in units of the ground linewidth",
        },
        Column {
            name: "regime",
            description: "dominant noise source: shot_limited, optimum or stark_limited",
        },
    ];

    let mut files = Vec::new();
    for curve in &curves {
        let (_, best) = curve.best_point();
        let sql = sql_min_shift(params, curve.eta, &budget).context("quantum-limit shift")?;
        let rows: Vec<Vec<String>> = curve
            .points
            .iter()
            .map(|pt| {
                vec![
                    fmt_float(pt.power_ratio),
                    fmt_float(power_to_rabi_sq(params, pt.power_ratio)),
                    fmt_float(pt.min_delta0),
                    fmt_float(pt.min_delta0 / params.gamma0),
                    pt.regime.label().to_string(),
                ]
            })
            .collect();
        let meta = vec![
            ("eta".to_string(), fmt_float(curve.eta)),
            ("best_power_ratio".to_string(), fmt_float(best.power_ratio)),
            (
                "best_min_delta0_over_gamma0".to_string(),
                fmt_float(best.min_delta0 / params.gamma0),
            ),
            (
                "sql_min_shift_over_gamma0".to_string(),
                fmt_float(sql / params.gamma0),
            ),
        ];
        let file = format!("eit_eta_{}.csv", curve.eta);
        let path = writer
            .write_table(
                &file,
                "Smallest detectable level splitting versus input power for one \
                 transmission target of the dark-resonance magnetometer.",
                &meta,
                &eit_columns,
                &rows,
            )
            .context("writing sweep table")?;
        files.push(path);
    }

    let opm_columns = [
        Column {
            name: "power_ratio",
            description: "input power over the saturation reference power",
        },
        Column {
            name: "min_delta0",
            description: "smallest detectable shift (units gamma)",
        },
        Column {
            name: "min_delta0_over_gamma0",
            description: "the same shift in units of the ground linewidth",
        },
    ];
    let opm_rows: Vec<Vec<String>> = opm
        .iter()
        .map(|pt| {
            vec![
                fmt_float(pt.power_ratio),
                fmt_float(pt.min_delta0),
                fmt_float(pt.min_delta0 / params.gamma0),
            ]
        })
        .collect();
    let opm_meta = vec![(
        "plateau_over_gamma0".to_string(),
        fmt_float(plateau / params.gamma0),
    )];
    files.push(
        writer
            .write_table(
                "opm.csv",
                "Schematic power-broadened absorption magnetometer used as a \
                 comparison curve: shot-noise limit with a width that grows as \
                 the drive amplitude.",
                &opm_meta,
                &opm_columns,
                &opm_rows,
            )
            .context("writing comparison table")?,
    );

    if settings.bool("output.gnuplot")? {
        let mut plot = String::from(
            "set datafile separator ','\nset logscale xy\n\
             set xlabel 'P / P_0'\nset ylabel 'min splitting / gamma_0'\nplot \\\n",
        );
        let mut parts: Vec<String> = curves
            .iter()
            .map(|curve| {
                format!(
                    "  'eit_eta_{0}.csv' every ::1 using 1:4 with lines title 'eta={0}'",
                    curve.eta
                )
            })
            .collect();
        parts.push(
            "  'opm.csv' every ::1 using 1:3 with lines dashtype 2 title 'absorption magnetometer'"
                .to_string(),
        );
        plot.push_str(&parts.join(", \\\n"));
        plot.push('\n');
        files.push(
            writer
                .write_gnuplot("plot_figure4.gp", &plot)
                .context("writing gnuplot script")?,
        );
    }
    Ok(files)
}

/// Light-shift-broadened absorption lines for a list of input powers, plus
/// a width summary.
fn run_lineshape(
    settings: &Settings,
    params: &AtomicParams,
    writer: &mut OutputWriter,
) -> RunResult {
    let powers = settings.f64_list("lineshape.power_list")?;
    let absorbed = settings.f64("lineshape.absorbed_fraction")?;
    if !(absorbed > 0.0 && absorbed < 1.0) {
        return Err(crate::config::ConfigError {
            key: Some("lineshape.absorbed_fraction".to_string()),
            message: format!("must lie in (0, 1), got {absorbed}"),
        }
        .into());
    }
    let z_samples = settings.usize("geometry.z_samples")?;
    let detuning_samples = settings.usize("geometry.detuning_samples")?;
    let model = AbsorptionModel::Linear {
        absorbed_fraction: absorbed,
    };

    let spectrum_columns = [
        Column {
            name: "detuning",
            description: "two-photon detuning (units gamma)",
        },
        Column {
            name: "response",
            description: "length-averaged resonance response (peak ~ 1/gamma0)",
        },
    ];
    let summary_columns = [
        Column {
            name: "power_scaled",
            description: "input intensity in units of shift_detuning * gamma0",
        },
        Column {
            name: "omega0_abs",
            description: "input drive amplitude |Omega(0)| (units gamma)",
        },
        Column {
            name: "omega0_sq",
            description: "input drive intensity |Omega(0)|^2 (units gamma^2)",
        },
        Column {
            name: "fwhm",
            description: "full width at half maximum of the averaged line (units gamma)",
        },
        Column {
            name: "fwhm_over_gamma0",
            description: "the same width in units of the ground linewidth",
        },
    ];

    let mut files = Vec::new();
    let mut summary_rows = Vec::new();
    let mut amplitudes = Vec::new();
    let mut widths = Vec::new();
    for (idx, &scaled) in powers.iter().enumerate() {
        let omega0_sq = scaled * params.shift_detuning * params.gamma0;
        let fwhm = lineshape_fwhm(params, omega0_sq, model, z_samples, detuning_samples)
            .context("measuring line width")?;
        let max_shift = omega0_sq / params.shift_detuning;
        let min_shift = (1.0 - absorbed) * omega0_sq / params.shift_detuning;
        let grid = lin_spaced(
            -max_shift - 12.0 * params.gamma0,
            -min_shift + 12.0 * params.gamma0,
            detuning_samples,
        );
        let values = broadened_lineshape(params, omega0_sq, &grid, model, z_samples)
            .context("sampling the line")?;
        let rows: Vec<Vec<String>> = grid
            .iter()
            .zip(&values)
            .map(|(&d, &v)| vec![fmt_float(d), fmt_float(v)])
            .collect();
        let meta = vec![
            ("power_scaled".to_string(), fmt_float(scaled)),
            ("omega0_sq".to_string(), fmt_float(omega0_sq)),
            ("fwhm".to_string(), fmt_float(fwhm)),
        ];
        files.push(
            writer
                .write_table(
                    &format!("lineshape_spectrum_{idx}.csv"),
                    "Length-averaged resonance line for one input power; the \
                     local light shift drags the centre along the cell and \
                     smears the line.",
                    &meta,
                    &spectrum_columns,
                    &rows,
                )
                .context("writing spectrum")?,
        );
        summary_rows.push(vec![
            fmt_float(scaled),
            fmt_float(omega0_sq.sqrt()),
            fmt_float(omega0_sq),
            fmt_float(fwhm),
            fmt_float(fwhm / params.gamma0),
        ]);
        amplitudes.push(omega0_sq.sqrt());
        widths.push(fwhm);
    }

    let mut summary_meta = Vec::new();
    if powers.len() >= 2 {
        summary_meta.push((
            "loglog_slope_vs_amplitude".to_string(),
            fmt_float(loglog_slope(&amplitudes, &widths)),
        ));
    }
    files.push(
        writer
            .write_table(
                "lineshape_fwhm.csv",
                "Line width versus input power. Once the light-shift spread \
                 exceeds the natural width the width grows proportionally to \
                 the input intensity (slope 2 versus amplitude).",
                &summary_meta,
                &summary_columns,
                &summary_rows,
            )
            .context("writing width summary")?,
    );
    Ok(files)
}

/// Full detection budget at a single operating point.
fn run_snr_point(
    settings: &Settings,
    params: &AtomicParams,
    writer: &mut OutputWriter,
) -> RunResult {
    let budget = settings.photon_budget()?;
    let eta = settings.f64("snr_point.eta")?;
    let power_ratio = match settings.f64_or_auto("snr_point.power_ratio")? {
        Some(x) => x,
        None => {
            optimal_rabi_sq(params, eta).context("optimal drive")?
                / (3.0 * params.gamma_r * params.gamma0)
        }
    };
    let omega0_sq = power_to_rabi_sq(params, power_ratio);
    let photons_in = budget.photons_in(power_ratio);
    let phi_sig = -(params.ground_splitting / params.gamma0) * (1.0 / eta).ln();
    let noise = phase_noise_budget(params, omega0_sq, eta, photons_in).context("noise budget")?;
    let det = detection_result(eta, photons_in, phi_sig, noise.phase_variance())
        .context("detection statistics")?;
    let bracket = noise_bracket(params, omega0_sq, eta).context("noise bracket")?;
    let dmin = min_detectable_splitting(params, omega0_sq, eta, photons_in)
        .context("detection limit")?;
    let regime = Regime::from_stark_to_shot(noise.stark_to_shot());

    let columns = [
        Column {
            name: "quantity",
            description: "name of the reported quantity",
        },
        Column {
            name: "value",
            description: "value (floats carry 17 significant digits)",
        },
    ];
    let rows: Vec<Vec<String>> = vec![
        vec!["eta".into(), fmt_float(eta)],
        vec!["power_ratio".into(), fmt_float(power_ratio)],
        vec!["omega0_sq".into(), fmt_float(omega0_sq)],
        vec!["photons_in".into(), fmt_float(photons_in)],
        vec!["phi_sig".into(), fmt_float(phi_sig)],
        vec!["shot_phase_variance".into(), fmt_float(noise.shot_term)],
        vec!["stark_phase_variance".into(), fmt_float(noise.stark_term)],
        vec![
            "total_phase_variance".into(),
            fmt_float(noise.phase_variance()),
        ],
        vec!["stark_to_shot".into(), fmt_float(noise.stark_to_shot())],
        vec!["noise_bracket".into(), fmt_float(bracket)],
        vec!["mean_counts".into(), fmt_float(det.mean_counts)],
        vec!["count_variance".into(), fmt_float(det.count_variance)],
        vec!["snr".into(), fmt_float(det.snr)],
        vec!["min_detectable_splitting".into(), fmt_float(dmin)],
        vec![
            "min_detectable_over_gamma0".into(),
            fmt_float(dmin / params.gamma0),
        ],
        vec!["regime".into(), regime.label().to_string()],
    ];
    Ok(vec![writer
        .write_table(
            "snr_point.csv",
            "Photon-counting budget at one operating point: signal phase, \
             shot and light-shift phase noise, counts and the resulting \
             detection limit.",
            &[],
            &columns,
            &rows,
        )
        .context("writing operating point")?])
}

/// Quantum-limit factors and optima tabulated over transmission.
fn run_sql_table(
    settings: &Settings,
    params: &AtomicParams,
    writer: &mut OutputWriter,
) -> RunResult {
    let budget = settings.photon_budget()?;
    let etas = settings.f64_list("sql.eta_list")?;

    let columns = [
        Column {
            name: "eta",
            description: "cell transmission",
        },
        Column {
            name: "f",
            description: "transmission factor of the quantum-limited shift",
        },
        Column {
            name: "f_tilde",
            description: "same factor with amplitude-squeezed drive noise",
        },
        Column {
            name: "f_tilde_over_f",
            description: "squeezing gain (values below 1 mean squeezing helps)",
        },
        Column {
            name: "omega_opt_sq_scaled",
            description: "optimal drive intensity over shift_detuning * gamma0",
        },
        Column {
            name: "sql_over_gamma0",
            description: "quantum-limited shift in units of the ground linewidth",
        },
        Column {
            name: "min_at_optimum_over_gamma0",
            description: "full detection limit at the optimal drive, same units",
        },
        Column {
            name: "ratio_to_sql",
            description: "detection limit over quantum limit (sqrt(2) at the optimum)",
        },
    ];
    let mut rows = Vec::new();
    for &eta in &etas {
        let f = sql_factor_f(eta).context("transmission factor")?;
        let f_tilde = sql_factor_f_tilde(eta).context("squeezed factor")?;
        let omega_opt_sq = optimal_rabi_sq(params, eta).context("optimal drive")?;
        let sql = sql_min_shift(params, eta, &budget).context("quantum limit")?;
        let x_opt = omega_opt_sq / (3.0 * params.gamma_r * params.gamma0);
        let photons_in = budget.photons_in(x_opt);
        let dmin = min_detectable_splitting(params, omega_opt_sq, eta, photons_in)
            .context("detection limit")?;
        rows.push(vec![
            fmt_float(eta),
            fmt_float(f),
            fmt_float(f_tilde),
            fmt_float(f_tilde / f),
            fmt_float(omega_opt_sq / (params.shift_detuning * params.gamma0)),
            fmt_float(sql / params.gamma0),
            fmt_float(dmin / params.gamma0),
            fmt_float(dmin / sql),
        ]);
    }
    let meta = vec![(
        "best_transmission".to_string(),
        fmt_float(optimal_transmission()),
    )];
    Ok(vec![writer
        .write_table(
            "sql_table.csv",
            "Quantum-limited shift sensitivity versus cell transmission, \
             with the optimal drive intensity and the full detection limit \
             at that drive.",
            &meta,
            &columns,
            &rows,
        )
        .context("writing quantum-limit table")?])
}

/// Monte Carlo validation of the light-shift phase-noise quadrature.
fn run_mc_validate(
    settings: &Settings,
    params: &AtomicParams,
    writer: &mut OutputWriter,
) -> RunResult {
    let omega0_sq = settings.f64("mc_validate.omega0_sq")?;
    let eta = settings.f64("mc_validate.eta")?;
    let photons_in = settings.f64("mc_validate.photons_in")?;
    let measurement_time = settings.f64("mc_validate.measurement_time")?;
    let z_samples = settings.usize("geometry.z_samples")?;
    let cfg = McConfig {
        samples: settings.u64("mc.samples")?,
        seed: settings.u64("mc.seed")?,
        cells: settings.usize("mc.cells")?,
        common_mode_amplitude: settings.f64("mc.common_mode")?,
        squeezed: settings.bool("mc.squeezed")?,
        block_size: settings.u64("mc.block_size")?,
    };

    let length = length_for_transmission(params, omega0_sq, eta).context("cell length")?;
    let profile = propagate_intensity_ode(params, omega0_sq, length, z_samples, 1e-9)
        .context("intensity profile")?;
    let model = StarkModel::from_photon_budget(
        params.shift_detuning,
        omega0_sq,
        measurement_time,
        length,
        photons_in,
    )
    .context("noise coupling")?;
    let analytic =
        phase_variance(&model, params, &profile, measurement_time).context("phase variance")?;
    let squeezed = phase_variance_squeezed(&model, params, &profile, measurement_time)
        .context("squeezed phase variance")?;
    let moments = montecarlo_stark_oracle(&model, params, &profile, measurement_time, &cfg)
        .context("Monte Carlo run")?;
    let reference = if cfg.squeezed { squeezed } else { analytic };

    let columns = [
        Column {
            name: "quantity",
            description: "name of the reported quantity",
        },
        Column {
            name: "value",
            description: "value (floats carry 17 significant digits)",
        },
    ];
    let rows: Vec<Vec<String>> = vec![
        vec!["omega0_sq".into(), fmt_float(omega0_sq)],
        vec!["eta_target".into(), fmt_float(eta)],
        vec!["eta_actual".into(), fmt_float(profile.eta())],
        vec!["length".into(), fmt_float(length)],
        vec!["photons_in".into(), fmt_float(photons_in)],
        vec!["measurement_time".into(), fmt_float(measurement_time)],
        vec!["coupling_ratio".into(), fmt_float(model.coupling_ratio)],
        vec!["analytic_variance".into(), fmt_float(analytic)],
        vec!["squeezed_variance".into(), fmt_float(squeezed)],
        vec!["mc_samples".into(), format!("{}", moments.samples)],
        vec!["mc_seed".into(), format!("{}", cfg.seed)],
        vec!["mc_mean".into(), fmt_float(moments.mean)],
        vec!["mc_mean_se".into(), fmt_float(moments.mean_se)],
        vec!["mc_second_moment".into(), fmt_float(moments.second_moment)],
        vec![
            "mc_second_moment_se".into(),
            fmt_float(moments.second_moment_se),
        ],
        vec![
            "discrete_second_moment".into(),
            fmt_float(moments.discrete_second_moment),
        ],
        vec![
            "common_second_moment".into(),
            fmt_float(moments.common_second_moment),
        ],
        vec![
            "relative_deviation".into(),
            fmt_float(moments.second_moment / reference - 1.0),
        ],
    ];
    Ok(vec![writer
        .write_table(
            "mc_validate.csv",
            "Monte Carlo check of the differential-phase noise picked up \
             from intensity fluctuations along the cell, against the \
             closed-form variance.",
            &[],
            &columns,
            &rows,
        )
        .context("writing validation table")?])
}

/// Generic interferometric limit versus the intensity-phase coupling.
fn run_quantum_limit(settings: &Settings, writer: &mut OutputWriter) -> RunResult {
    let chi_ratio = settings.f64("quantum_limit.chi_ratio")?;
    let betas = settings.f64_list("quantum_limit.beta_list")?;

    let columns = [
        Column {
            name: "beta",
            description: "back-action coupling of photon-number variance to phase",
        },
        Column {
            name: "n_var_opt",
            description: "closed-form optimal photon-number variance",
        },
        Column {
            name: "min_shift",
            description: "closed-form smallest resolvable shift",
        },
        Column {
            name: "n_var_numeric",
            description: "numerically minimised photon-number variance",
        },
        Column {
            name: "min_shift_numeric",
            description: "numerically minimised shift",
        },
        Column {
            name: "relative_error",
            description: "numeric minimum over closed form, minus one",
        },
    ];
    let mut rows = Vec::new();
    for &beta in &betas {
        let optimum =
            generic_quantum_limit_optimum(chi_ratio, beta).context("closed-form optimum")?;
        match optimum {
            QuantumLimitOptimum::ShotNoiseLimited => {
                rows.push(vec![
                    fmt_float(beta),
                    "inf".to_string(),
                    fmt_float(0.0),
                    "inf".to_string(),
                    fmt_float(0.0),
                    fmt_float(0.0),
                ]);
            }
            QuantumLimitOptimum::Interior {
                n_var_opt,
                min_shift,
            } => {
                let objective = |ln_n: f64| {
                    generic_quantum_limit(chi_ratio, beta, ln_n.exp()).unwrap_or(f64::INFINITY)
                };
                let (ln_n, numeric_min) = golden_min(
                    &objective,
                    (n_var_opt / 1e3).ln(),
                    (n_var_opt * 1e3).ln(),
                    1e-12,
                );
                rows.push(vec![
                    fmt_float(beta),
                    fmt_float(n_var_opt),
                    fmt_float(min_shift),
                    fmt_float(ln_n.exp()),
                    fmt_float(numeric_min),
                    fmt_float(numeric_min / min_shift - 1.0),
                ]);
            }
        }
    }
    Ok(vec![writer
        .write_table(
            "quantum_limit.csv",
            "Smallest resolvable shift of a photon-counting interferometer \
             whose phase picks up a back-action term linear in the photon \
             number, optimised over the probe photon-number variance.",
            &[],
            &columns,
            &rows,
        )
        .context("writing quantum-limit scan")?])
}
