use std::path::{Path, PathBuf};

use tripole::metrics::{evaluate, PatternSweep};
use tripole::sparse_design::{design_group_sparse, design_reweighted, design_ula_reference};
use tripole::{DesignResult, MetricBundle};

use crate::config::{Method, Resolved, RunConfig};
use crate::error::CliError;
use crate::output::{self, ComparisonRow, MetricsReport, TraceRow};

/// Global flags that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub sweep_res_deg: Option<f64>,
    pub svg: bool,
}

fn load(config_path: &Path, ov: &Overrides) -> Result<Resolved, CliError> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(dir) = &ov.out_dir {
        config.out_dir = dir.clone();
    }
    if let Some(res) = ov.sweep_res_deg {
        config.sweep_res_deg = res;
    }
    config.resolve()
}

struct Outcome {
    method: Method,
    result: DesignResult,
    sweep: PatternSweep,
    metrics: MetricBundle,
    warnings: Vec<String>,
}

fn run_method(r: &Resolved, method: Method) -> Result<Outcome, CliError> {
    let spec = r.spec_for(method)?;
    let result = match method {
        Method::Plain => design_group_sparse(&spec, &r.solver, r.group.prune_threshold)?,
        Method::Reweighted => design_reweighted(&spec, &r.group, &r.solver)?,
        Method::Ula => design_ula_reference(r.config.aperture_wl, r.config.ula_spacing_wl, &spec)?,
    };
    let (sweep, metrics) = evaluate(&result.weights, &result.positions, &spec, r.config.sweep_res_deg)?;
    let mut warnings = zero_design_warning(&metrics);
    if method != Method::Ula && metrics.residual > spec.alpha + 1e-6 {
        warnings.push(format!(
            "residual {} exceeds alpha = {} after pruning; the reported weights are unpruned",
            metrics.residual, spec.alpha
        ));
    }
    if let Some(trace) = &result.trace {
        let n = trace.iterations.len();
        let settled = trace.iterations[n.saturating_sub(r.group.stop_patience)..]
            .windows(2)
            .all(|w| w[0].active_count == w[1].active_count);
        if n >= r.group.max_reweight_iters && !settled {
            warnings.push(format!("reweighting stopped at the {n}-iteration limit before the count settled"));
        }
    }
    for w in &warnings {
        log::warn!("{}: {w}", method.name());
    }
    Ok(Outcome {
        method,
        result,
        sweep,
        metrics,
        warnings,
    })
}

fn zero_design_warning(metrics: &MetricBundle) -> Vec<String> {
    if metrics.num_tripoles == 0 {
        vec!["alpha is at least the norm of the reference samples, so the zero design is optimal and no tripole is active".into()]
    } else {
        Vec::new()
    }
}

fn report(r: &Resolved, o: &Outcome) -> MetricsReport {
    MetricsReport {
        config: r.config.clone(),
        metrics: o.metrics.clone(),
        objective: (o.method != Method::Ula).then_some(o.result.objective),
        solver_residuals: o.result.solver_residuals,
        trace: o.result.trace.as_ref().map(|t| {
            t.iterations
                .iter()
                .map(|it| TraceRow {
                    k: it.k,
                    active_count: it.active_count,
                    residual: it.residual,
                    objective: it.objective,
                })
                .collect()
        }),
        warnings: o.warnings.clone(),
    }
}

pub fn design(config_path: &Path, ov: &Overrides) -> Result<(), CliError> {
    let r = load(config_path, ov)?;
    let method = r.config.method;
    log::info!("{} design on {} locations", method.name(), r.grid_for(method)?.num_locations());
    let o = run_method(&r, method)?;
    let dir = &r.config.out_dir;
    output::create_dir(dir)?;
    output::write_locations(dir, &o.result.positions, &o.result.weights)?;
    output::write_pattern(dir, &o.sweep)?;
    output::write_metrics(dir, &report(&r, &o))?;
    if ov.svg {
        output::write_svg(dir, "pattern.svg", &[(method.name(), &o.sweep)])?;
    }
    println!(
        "{}: {} tripoles, psl {:.2} dB, residual {:.6}",
        method.name(),
        o.metrics.num_tripoles,
        o.metrics.psl_db,
        o.metrics.residual
    );
    Ok(())
}

fn status_of(e: &CliError) -> &'static str {
    match e.exit_code() {
        1 => "invalid",
        2 => "infeasible",
        _ => "failed",
    }
}

pub fn compare(config_path: &Path, ov: &Overrides) -> Result<(), CliError> {
    let r = load(config_path, ov)?;
    let methods = [Method::Plain, Method::Reweighted, Method::Ula];
    let outcomes: Vec<Result<Outcome, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = methods.iter().map(|m| s.spawn(|| run_method(&r, *m))).collect();
        handles.into_iter().map(|h| h.join().expect("design thread panicked")).collect()
    });

    let rows: Vec<ComparisonRow> = methods
        .iter()
        .zip(&outcomes)
        .map(|(m, o)| match o {
            Ok(o) => ComparisonRow {
                method: m.name(),
                status: "ok",
                metrics: Some(o.metrics.clone()),
                objective: (*m != Method::Ula).then_some(o.result.objective),
                iterations: o.result.trace.as_ref().map(|t| t.iterations.len()),
                message: o.warnings.join("; "),
            },
            Err(e) => {
                log::error!("{}: {e}", m.name());
                ComparisonRow {
                    method: m.name(),
                    status: status_of(e),
                    metrics: None,
                    objective: None,
                    iterations: None,
                    message: e.to_string(),
                }
            }
        })
        .collect();

    let dir = &r.config.out_dir;
    output::create_dir(dir)?;
    output::write_comparison(dir, &rows)?;
    let series: Vec<(&str, Option<&PatternSweep>)> = methods
        .iter()
        .zip(&outcomes)
        .map(|(m, o)| (m.name(), o.as_ref().ok().map(|o| &o.sweep)))
        .collect();
    output::write_patterns(dir, &series)?;
    if ov.svg {
        let ok: Vec<(&str, &PatternSweep)> = series.iter().filter_map(|(n, s)| s.map(|s| (*n, s))).collect();
        output::write_svg(dir, "patterns.svg", &ok)?;
    }
    for row in &rows {
        match &row.metrics {
            Some(m) => println!("{}: {} tripoles, psl {:.2} dB", row.method, m.num_tripoles, m.psl_db),
            None => println!("{}: {}", row.method, row.status),
        }
    }

    if outcomes.iter().any(Result::is_ok) {
        Ok(())
    } else {
        Err(outcomes.into_iter().find_map(Result::err).expect("every leg failed"))
    }
}

pub fn sweep_only(weights_csv: &Path, config_path: &Path, ov: &Overrides) -> Result<(), CliError> {
    let r = load(config_path, ov)?;
    let method = r.config.method;
    let spec = r.spec_for(method)?;
    let (positions, weights) = output::read_locations(weights_csv)?;
    let grid = spec.grid.positions();
    let input = |msg: String| CliError::Input {
        path: weights_csv.to_path_buf(),
        msg,
    };
    if positions.len() != grid.len() {
        return Err(input(format!(
            "{} locations, but the {} grid has {}",
            positions.len(),
            method.name(),
            grid.len()
        )));
    }
    if let Some(m) = positions.iter().zip(grid).position(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + b.abs())) {
        return Err(input(format!(
            "line {}: position {} does not match grid position {}",
            m + 2,
            positions[m],
            grid[m]
        )));
    }
    let (sweep, metrics) = evaluate(&weights, grid, &spec, r.config.sweep_res_deg)?;
    let dir = &r.config.out_dir;
    output::create_dir(dir)?;
    output::write_pattern(dir, &sweep)?;
    output::write_metrics(
        dir,
        &MetricsReport {
            config: r.config.clone(),
            warnings: zero_design_warning(&metrics),
            metrics,
            objective: None,
            solver_residuals: None,
            trace: None,
        },
    )?;
    if ov.svg {
        output::write_svg(dir, "pattern.svg", &[(method.name(), &sweep)])?;
    }
    Ok(())
}
