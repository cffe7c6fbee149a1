use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::credibility::{compare_indices, load_index, load_outcomes, rolling_index, write_auc_report, write_index, write_roc, OutcomeSeries};
use crate::error::{Error, Result};
use crate::estimation::{
    diagnostics, fit_ardl, fit_mar_amle, fit_pseudo_causal, fit_smar, select_mar, select_marx_offsets, FitResult,
};
use crate::forecast::{
    gj_density_h1, gj_probability, lls_probability, marx_sir_forecast, sir_forecast, Method, ProbabilityForecast,
    SirForecast, SirSettings,
};
use crate::kv::{fmt_f64, fmt_f64_list, parse_f64_list, KvDoc};
use crate::process::{residuals, simulate as simulate_model, AnyModel};
use crate::timeseries::{
    format_value, load_bounds, load_panel, load_series, pct_change_yoy, write_series, yoy_log_inflation, Dated, TimeSeries,
    YearMonth,
};

use super::{BacktestArgs, CredibilityArgs, FitArgs, ForecastArgs, Outputs, SimulateArgs, TransformArgs, TransformKind};

fn parse_date(flag: &str, s: &str) -> Result<YearMonth> {
    s.parse()
        .map_err(|_| Error::InvalidArgument(format!("--{flag}: malformed date `{s}` (expected YYYY-MM)")))
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| Error::InvalidArgument(format!("--{flag}: cannot parse `{p}`"))))
        .collect()
}

pub fn transform(a: &TransformArgs, out: &mut Outputs) -> Result<()> {
    let input = load_series(&a.input, &a.column)?;
    let y = match a.kind {
        TransformKind::YoyLog => yoy_log_inflation(&input)?,
        TransformKind::PctYoy => pct_change_yoy(&input)?,
    }
    .renamed(a.name.clone());
    out.write_with(&a.output, |w| write_series(w, &y))
}

fn fit_report(doc: &mut KvDoc, prefix: &str, fit: &FitResult) {
    let names = fit.param_names();
    doc.set(format!("{prefix}kind"), fit.model.kind());
    doc.set(format!("{prefix}params"), names.join(","));
    doc.set(format!("{prefix}estimates"), fmt_f64_list(&fit.params()));
    if let Some(se) = &fit.std_errors {
        doc.set(format!("{prefix}std_errors"), fmt_f64_list(se));
    }
    doc.set(format!("{prefix}loglik"), fmt_f64(fit.loglik));
    doc.set(format!("{prefix}bic"), fmt_f64(fit.bic));
    doc.set(format!("{prefix}n_effective"), fit.n_effective.to_string());
    doc.set(format!("{prefix}sample_start"), fit.sample_start.to_string());
    doc.set(format!("{prefix}converged"), fit.converged.to_string());
    doc.set(format!("{prefix}grad_norm"), fmt_f64(fit.grad_norm));
}

fn non_convergence(fit: &FitResult) -> Error {
    Error::NonConvergence {
        message: format!("{} optimizer stopped with gradient norm {:.3e}", fit.model.kind(), fit.grad_norm),
        best_loglik: fit.loglik,
        best_params: fit.params(),
    }
}

pub fn fit(a: &FitArgs, out: &mut Outputs) -> Result<()> {
    let series = load_series(&a.data, &a.column)?;
    let mut report = KvDoc::new();
    report.set("series", series.name());
    report.set("sample", format!("{}..{}", series.start(), series.end()));
    report.set("n_obs", series.len().to_string());

    let mar = match (a.r, a.s) {
        (Some(r), Some(s)) => {
            report.set("orders", "fixed");
            fit_mar_amle(&series, r, s, a.n_starts)?
        }
        _ => {
            let pc = fit_pseudo_causal(&series, a.p_max)?;
            report.set("pseudo_causal.p", pc.p.to_string());
            report.set("pseudo_causal.bic", fmt_f64_list(&pc.bic));
            report.set("pseudo_causal.coefficients", fmt_f64_list(&pc.coefficients));
            if pc.p == 0 {
                return Err(Error::InsufficientData("the pseudo-causal order is 0: no autoregressive dynamics to split".into()));
            }
            let sel = select_mar(&series, pc.p, a.n_starts)?;
            let lls: Vec<f64> = sel.candidates.iter().map(|c| c.loglik).collect();
            report.set("selection.common_window_loglik", fmt_f64_list(&lls));
            sel.best
        }
    };
    fit_report(&mut report, "mar.", &mar);
    let (r, s) = (mar.model.base().r(), mar.model.base().s());

    let mut x = None;
    let final_fit = if let Some(d) = &a.smar {
        let ds: Vec<usize> = parse_list("smar", d)?;
        let (d1, d2) = match ds.as_slice() {
            [d1] => (*d1, None),
            [d1, d2] => (*d1, Some(*d2)),
            _ => return Err(Error::InvalidArgument("--smar takes D1 or D1,D2".into())),
        };
        let sel = fit_smar(&series, &mar, d1, d2, a.n_starts)?;
        for (i, c) in sel.candidates.iter().enumerate() {
            fit_report(&mut report, &format!("smar.candidate{i}."), c);
        }
        sel.best
    } else if let Some(path) = &a.exog {
        let panel = load_panel(path)?;
        let ardl = fit_ardl(&series, &panel, a.ardl_max_lag_y, a.ardl_max_lag_x)?;
        report.set("ardl.p", ardl.p.to_string());
        report.set("ardl.x_lags", ardl.x_lags.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","));
        report.set("ardl.terms", ardl.terms.join(","));
        report.set("ardl.coefficients", fmt_f64_list(&ardl.coefficients));
        report.set("ardl.std_errors", fmt_f64_list(&ardl.std_errors));
        report.set("ardl.bic", fmt_f64(ardl.bic));
        let sel = select_marx_offsets(&series, &panel, r, s, a.n_starts)?;
        let lls: Vec<f64> = sel.candidates.iter().map(|c| c.loglik).collect();
        report.set("marx.offset_loglik", fmt_f64_list(&lls));
        x = Some(panel);
        sel.best
    } else {
        mar
    };
    fit_report(&mut report, "final.", &final_fit);

    let names = x.as_ref().map(|p| p.names().to_vec());
    out.write("model.txt", final_fit.model.to_kv(names.as_deref()).render().as_bytes())?;
    let resid = residuals(&series, &final_fit.model, x.as_ref())?.renamed("residual");
    out.write_with("residuals.csv", |w| write_series(w, &resid))?;
    let diag = diagnostics(&resid, a.acf_lags.min(resid.len().saturating_sub(6)))?;
    report.set("diagnostics.jarque_bera", fmt_f64(diag.jarque_bera));
    report.set("diagnostics.jarque_bera_p", fmt_f64(diag.jarque_bera_p));
    report.set(
        "diagnostics.significant_lags",
        diag.significant_displacements.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","),
    );
    out.write_with("diagnostics.csv", |w| {
        writeln!(w, "lag,acf,significant")?;
        for (k, v) in diag.acf.iter().enumerate() {
            writeln!(w, "{k},{},{}", format_value(*v), diag.significant_displacements.contains(&k))?;
        }
        Ok(())
    })?;
    out.write("fit_report.txt", report.render().as_bytes())?;
    if final_fit.converged {
        Ok(())
    } else {
        Err(non_convergence(&final_fit))
    }
}

const FORECAST_HEADER: &str = "origin_date,horizon,method,p_in_bounds,p_below,p_above,point_mean,point_median,seed,N_or_K";

fn forecast_row(f: &ProbabilityForecast) -> String {
    let opt = |v: Option<f64>| v.map(format_value).unwrap_or_else(|| "NA".into());
    let seed = if f.method == Method::Gj { "NA".to_string() } else { f.settings.seed.to_string() };
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        f.origin,
        f.horizon,
        f.method,
        format_value(f.p_in_bounds),
        format_value(f.p_below),
        format_value(f.p_above),
        opt(f.point_mean),
        opt(f.point_median),
        seed,
        f.settings.draws
    )
}

fn write_paths(w: &mut Vec<u8>, sir: &SirForecast) -> Result<()> {
    let h = sir.paths.horizon();
    let cols: Vec<String> = (1..=h).map(|k| format!("h{k}")).collect();
    writeln!(w, "path,{}", cols.join(","))?;
    for (i, p) in sir.paths.paths().iter().enumerate() {
        let vals: Vec<String> = p.iter().map(|v| format_value(*v)).collect();
        writeln!(w, "{i},{}", vals.join(","))?;
    }
    Ok(())
}

pub fn forecast(a: &ForecastArgs, out: &mut Outputs) -> Result<()> {
    let series = load_series(&a.data, &a.column)?;
    let model = AnyModel::load(&a.model)?;
    let bounds = load_bounds(&a.bounds)?;
    let method: Method = a.method.parse()?;
    let (n, k, s) = a.counts.resolved();
    let h = a.horizon;
    let mut sir_out = None;
    let f = match (method, &model) {
        (Method::Sir, AnyModel::Marx(_)) => {
            let (Some(xp), Some(fp)) = (&a.exog, &a.exog_future) else {
                return Err(Error::InvalidArgument("a MARX forecast needs --exog and --exog-future".into()));
            };
            let x = load_panel(xp)?;
            let xf = load_panel(fp)?;
            let vintage = a.vintage.as_ref().map(load_panel).transpose()?;
            let sir = marx_sir_forecast(&model, &series, &x, &xf, vintage.as_ref(), h, &SirSettings::new(k, s, a.seed))?;
            let p = sir.probability(&bounds)?;
            sir_out = Some(sir);
            p
        }
        (_, AnyModel::Marx(_)) => {
            return Err(Error::Unsupported(format!("{method} forecasts are not available for MARX models; use SIR")));
        }
        (Method::Lls, _) => lls_probability(&model, &series, &bounds, h, n, a.counts.m, a.seed)?,
        (Method::Gj, _) => {
            if h != 1 {
                return Err(Error::Unsupported("the GJ density is one-step only; use SIR for h > 1".into()));
            }
            gj_probability(&model, &series, &bounds, a.counts.grid_points)?
        }
        (Method::Sir, _) => {
            let sir = sir_forecast(&model, &series, h, &SirSettings::new(k, s, a.seed))?;
            let p = sir.probability(&bounds)?;
            sir_out = Some(sir);
            p
        }
    };
    out.write("forecast.csv", format!("{FORECAST_HEADER}\n{}\n", forecast_row(&f)).as_bytes())?;
    if a.density {
        if h != 1 || matches!(model, AnyModel::Marx(_)) {
            return Err(Error::Unsupported("--density is available for one-step MAR(1,1) forecasts only".into()));
        }
        let d = gj_density_h1(&model, &series, None)?;
        if d.grid_warning {
            eprintln!("warning: density grid renormalization factor {:.3} is outside [0.5, 2]", 1.0 / d.raw_integral);
        }
        out.write_with("density.csv", |w| {
            writeln!(w, "grid_value,density")?;
            for (x, v) in d.grid.iter().zip(&d.density) {
                writeln!(w, "{},{}", format_value(*x), format_value(*v))?;
            }
            Ok(())
        })?;
    }
    if a.paths {
        let Some(sir) = &sir_out else {
            return Err(Error::InvalidArgument("--paths needs --method SIR".into()));
        };
        out.write_with("paths.csv", |w| write_paths(w, sir))?;
    }
    Ok(())
}

pub fn backtest(a: &BacktestArgs, out: &mut Outputs) -> Result<()> {
    let series = load_series(&a.data, &a.column)?;
    let bounds = load_bounds(&a.bounds)?;
    let (from, to) = (parse_date("from", &a.from)?, parse_date("to", &a.to)?);
    if to < from {
        return Err(Error::InvalidArgument("--to precedes --from".into()));
    }
    if series.index_of(from).is_none() || series.index_of(to).is_none() {
        return Err(Error::Alignment(format!(
            "origins {from}..{to} must lie inside the data {}..{}",
            series.start(),
            series.end()
        )));
    }
    let origins: Vec<YearMonth> = (0..=from.months_until(to)).map(|i| from.add_months(i)).collect();
    let horizons: Vec<usize> = parse_list("horizons", &a.horizons)?;
    let methods: Vec<Method> = parse_list("methods", &a.methods)?;
    if horizons.is_empty() || methods.is_empty() || horizons.contains(&0) {
        return Err(Error::InvalidArgument("need at least one method and horizons >= 1".into()));
    }
    let (n, k, s) = a.counts.resolved();

    // One fit per origin, shared by every horizon and method.
    let fits: BTreeMap<YearMonth, std::result::Result<AnyModel, String>> = origins
        .par_iter()
        .map(|&o| {
            let fit = series.up_to(o).and_then(|sample| {
                if a.select {
                    let p = fit_pseudo_causal(&sample, a.p_max)?.p.max(1);
                    Ok(select_mar(&sample, p, a.n_starts)?.best.model)
                } else {
                    Ok(fit_mar_amle(&sample, a.r, a.s, a.n_starts)?.model)
                }
            });
            (o, fit.map_err(|e| e.to_string()))
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &h in &horizons {
        for &method in &methods {
            if method == Method::Gj && h > 1 {
                eprintln!("note: GJ skipped at h = {h}; the sample-based density is one-step only");
                continue;
            }
            let forecast = |model: &AnyModel, sample: &TimeSeries, h: usize| -> Result<ProbabilityForecast> {
                match method {
                    Method::Lls => lls_probability(model, sample, &bounds, h, n, a.counts.m, a.seed),
                    Method::Gj => gj_probability(model, sample, &bounds, a.counts.grid_points),
                    Method::Sir => sir_forecast(model, sample, h, &SirSettings::new(k, s, a.seed))?.probability(&bounds),
                }
            };
            let fit = |sample: &TimeSeries| -> Result<AnyModel> {
                match &fits[&sample.end()] {
                    Ok(m) => Ok(m.clone()),
                    Err(e) => Err(Error::NonConvergence {
                        message: e.clone(),
                        best_loglik: f64::NAN,
                        best_params: Vec::new(),
                    }),
                }
            };
            let name = format!("{method}_h{h}");
            let (index, forecasts, failed) = rolling_index(&name, &series, &origins, h, fit, forecast)?;
            for f in forecasts.iter().flatten() {
                rows.push(forecast_row(f));
            }
            for (o, msg) in failed {
                eprintln!("warning: origin {o}, {method}, h = {h}: {msg}");
                failures.push(format!("{o},{h},{method},\"{}\"", msg.replace('"', "'")));
            }
            out.write_with(&format!("index_{name}.csv"), |w| write_index(w, &index))?;
        }
    }
    let mut text = format!("{FORECAST_HEADER}\n");
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    out.write("backtest.csv", text.as_bytes())?;
    let mut text = String::from("origin_date,horizon,method,error\n");
    for f in failures {
        text.push_str(&f);
        text.push('\n');
    }
    out.write("failures.csv", text.as_bytes())
}

pub fn credibility(a: &CredibilityArgs, out: &mut Outputs) -> Result<()> {
    let indices = a
        .index
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(load_index)
        .collect::<Result<Vec<_>>>()?;
    let outcomes = match (&a.outcomes, &a.realized, &a.bounds) {
        (Some(p), _, _) => load_outcomes(p)?,
        (None, Some(r), Some(b)) => OutcomeSeries::from_realized(&load_series(r, &a.column)?, &load_bounds(b)?),
        _ => return Err(Error::InvalidArgument("give --outcomes, or --realized with --bounds".into())),
    };
    let mut comparison = compare_indices(&indices, &outcomes)?;
    if let Some(t) = &a.thresholds {
        let grid = parse_f64_list("thresholds", t)?;
        for (i, ix) in indices.iter().enumerate() {
            comparison.curves[i].1 = crate::credibility::roc_curve(ix, &outcomes, Some(&grid))?;
        }
        comparison.ranking.sort_by(|&x, &y| comparison.curves[y].1.auc.total_cmp(&comparison.curves[x].1.auc));
    }
    out.write_with("roc.csv", |w| write_roc(w, &comparison))?;
    out.write_with("auc_report.csv", |w| write_auc_report(w, &comparison))
}

pub fn simulate(a: &SimulateArgs, out: &mut Outputs) -> Result<()> {
    let model = AnyModel::load(&a.model)?;
    let start = parse_date("start", &a.start)?;
    let x = a.exog.as_ref().map(load_panel).transpose()?;
    let sim = simulate_model(&model, a.n, a.seed, x.as_ref(), a.burn, start)?;
    let series = sim.series.renamed(a.name.clone());
    out.write_with("series.csv", |w| write_series(w, &series))?;
    out.write_with("innovations.csv", |w| write_series(w, &sim.innovations.renamed("innovation")))
}
