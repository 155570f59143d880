//! Subcommand implementations. Each builds its rows, then writes them as
//! CSV or JSON to `--out` or stdout.

use std::io::Write;

use anyhow::{bail, Context};
use illiquid::analytics::{
    density_grid, empirical_moments, gaussian_tail, reproduce_table1, reproduce_table2,
    reproduce_table3, tail_convergence_in_n, tail_probability, ReproSettings, TableReport, TailQuery, TailSide,
};
use illiquid::coefficients::residual_check;
use illiquid::cutoff::{divergence_scan, max_safe_k, mid_tail_grid, ratio_family};
use illiquid::io::{table_to_json, TableDocument, DEFAULT_CSV_DIGITS};
use illiquid::oracle::{compare_series_to_oracle, symbol_taylor_check, MIN_JUMP_INTENSITY};
use illiquid::series::{convergence_in_n, gaussian_density};
use illiquid::{
    build_full, build_truncated, lattice_pmf, min_time, CoefficientTable, Cutoff, Execution,
    Truncation,
};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::{Command, OracleArgs, ScanKArgs, ScanNArgs};

/// Spread used by the table commands when none is given.
const TABLE_EPSILON: f64 = 0.005;
/// Volatility used by the table commands when none is given.
const TABLE_SIGMA: f64 = 0.1;

pub fn dispatch(command: &Command, cfg: &RunConfig) -> anyhow::Result<()> {
    match command {
        Command::Coeffs { full } => coeffs(cfg, *full),
        Command::Density => density(cfg),
        Command::Tails { q } => tails(cfg, q),
        Command::Moments => moments(cfg),
        Command::Cutoff { k_max } => cutoff(cfg, *k_max),
        Command::Oracle(args) => oracle(cfg, args),
        Command::Table1 => table(cfg, 1),
        Command::Table2 => table(cfg, 2),
        Command::Table3 => table(cfg, 3),
        Command::ScanK(args) => scan_k(cfg, args),
        Command::ScanN(args) => scan_n(cfg, args),
    }
}

fn emit(cfg: &RunConfig, text: String) -> anyhow::Result<()> {
    match &cfg.output_path {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .context("writing to stdout")
        }
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> anyhow::Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for row in rows {
        wtr.serialize(row)?;
    }
    let bytes = wtr.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes)?)
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn emit_rows<T: Serialize>(cfg: &RunConfig, rows: &[T]) -> anyhow::Result<()> {
    let text = match cfg.format {
        Format::Csv => to_csv(rows)?,
        Format::Json => to_json(rows)?,
    };
    emit(cfg, text)
}

fn truncated_table(cfg: &RunConfig) -> anyhow::Result<CoefficientTable> {
    Ok(build_truncated(&cfg.params()?, &cfg.truncation()?)?)
}

fn coeffs(cfg: &RunConfig, full: bool) -> anyhow::Result<()> {
    let params = cfg.params()?;
    let trunc = cfg.truncation()?;
    let table = if full {
        build_full(&params, &trunc)?
    } else {
        build_truncated(&params, &trunc)?
    };
    let residual = residual_check(&table);
    let order = if full {
        "full equation".to_string()
    } else {
        format!("K = {}", trunc.order)
    };
    eprintln!(
        "residual check: max normalized residual {:.3e} over N = {}, {order}, {} bits",
        residual.to_f64(),
        trunc.max_n,
        table.precision()
    );
    let text = match cfg.format {
        Format::Json => {
            let mut s = table_to_json(&table)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            #[derive(Serialize)]
            struct Entry<'a> {
                n: usize,
                m: usize,
                a_nm: &'a str,
            }
            let doc = TableDocument::from_table(&table);
            let mut rows = vec![Entry { n: 0, m: 0, a_nm: &doc.a00 }];
            rows.extend(doc.entries.iter().map(|(n, m, a)| Entry { n: *n, m: *m, a_nm: a }));
            to_csv(&rows)?
        }
    };
    emit(cfg, text)
}

fn density(cfg: &RunConfig) -> anyhow::Result<()> {
    let table = truncated_table(cfg)?;
    let t = cfg.time()?;
    let grid = density_grid(&table, t, cfg.grid_span_sd, cfg.grid_points, Execution::default())?;
    #[derive(Serialize)]
    struct Row {
        x: f64,
        density: String,
        max_monomial: String,
        final_over_max: String,
    }
    let digits = Some(DEFAULT_CSV_DIGITS);
    let rows: Vec<Row> = grid
        .points
        .iter()
        .map(|p| Row {
            x: p.x,
            density: p.value.to_string_radix(10, digits),
            max_monomial: p.max_monomial.to_string_radix(10, digits),
            final_over_max: p.final_over_max.to_string_radix(10, digits),
        })
        .collect();
    emit_rows(cfg, &rows)
}

fn tails(cfg: &RunConfig, qs: &[f64]) -> anyhow::Result<()> {
    let table = truncated_table(cfg)?;
    let t = cfg.time()?;
    let grid = density_grid(&table, t, cfg.grid_span_sd, cfg.grid_points, Execution::default())?;
    #[derive(Serialize)]
    struct Row {
        side: TailSide,
        q_sd: f64,
        probability: f64,
        gaussian: f64,
    }
    let mut rows = Vec::new();
    for &q in qs {
        for query in [TailQuery::left(q), TailQuery::right(q)] {
            rows.push(Row {
                side: query.side,
                q_sd: q,
                probability: tail_probability(&grid, query)?,
                gaussian: gaussian_tail(q),
            });
        }
    }
    emit_rows(cfg, &rows)
}

fn moments(cfg: &RunConfig) -> anyhow::Result<()> {
    let table = truncated_table(cfg)?;
    let t = cfg.time()?;
    let grid = density_grid(&table, t, cfg.grid_span_sd, cfg.grid_points, Execution::default())?;
    let report = empirical_moments(&grid)?;
    emit_rows(cfg, &[report])
}

fn cutoff(cfg: &RunConfig, k_max: usize) -> anyhow::Result<()> {
    let params = cfg.params()?;
    let k = cfg.order();
    if k == 0 {
        bail!("--K must be at least 1");
    }
    let family = ratio_family(&params, k_max.max(k), cfg.precision_bits)?;
    let est = family[k - 1];
    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "K")]
        k: usize,
        j: usize,
        c1: f64,
        c2: f64,
        /// Empty when no finite time bounds the ratio.
        min_t: Option<f64>,
        t: Option<f64>,
        #[serde(rename = "K_safe")]
        k_safe: Option<usize>,
    }
    let min_t = match min_time(&est, 0.0, cfg.tolerance)? {
        Cutoff::Time(t) => Some(t),
        Cutoff::Unconstrained => None,
    };
    let k_safe = cfg
        .t
        .map(|t| max_safe_k(&family, t, 0.0, cfg.tolerance))
        .transpose()?;
    emit_rows(
        cfg,
        &[Row {
            k,
            j: est.j,
            c1: est.c1,
            c2: est.c2,
            min_t,
            t: cfg.t,
            k_safe,
        }],
    )
}

fn oracle(cfg: &RunConfig, args: &OracleArgs) -> anyhow::Result<()> {
    let params = cfg.params()?;
    let t = cfg.time()?;
    let taylor_residual = symbol_taylor_check(&params, cfg.order())?;
    let lattice = lattice_pmf(&params, t, args.mass_tol)?;
    let intensity = params.jump_intensity(t);
    // Fail before the grid evaluation; the comparison enforces the same bound.
    if !(intensity >= MIN_JUMP_INTENSITY) {
        eprintln!(
            "symbol taylor check: {taylor_residual:.3e}; lattice mass: {:.15}",
            lattice.total_mass()
        );
        return Err(illiquid::Error::Regime(format!(
            "sigma^2 t / eps^2 = {intensity:.4} < {MIN_JUMP_INTENSITY}: the lattice law is too discrete for a smooth comparison"
        ))
        .into());
    }
    let table = truncated_table(cfg)?;
    let grid = density_grid(&table, t, cfg.grid_span_sd, cfg.grid_points, Execution::default())?;
    let report = compare_series_to_oracle(&grid, &lattice, args.bulk_sd)?;
    let kappa = lattice.cumulants();
    #[derive(Serialize)]
    struct Row {
        jump_intensity: f64,
        taylor_residual: f64,
        lattice_mass: f64,
        lattice_kappa2: f64,
        kappa2_rel_error: f64,
        points: usize,
        max_rel_error: f64,
        mean_rel_error: f64,
        worst_x: f64,
    }
    let variance = params.variance(t);
    emit_rows(
        cfg,
        &[Row {
            jump_intensity: intensity,
            taylor_residual,
            lattice_mass: lattice.total_mass(),
            lattice_kappa2: kappa[1],
            kappa2_rel_error: ((kappa[1] - variance) / variance).abs(),
            points: report.points,
            max_rel_error: report.max_rel_error,
            mean_rel_error: report.mean_rel_error,
            worst_x: report.worst_x,
        }],
    )
}

fn repro_settings(cfg: &RunConfig, which: u8) -> ReproSettings {
    let mut s = ReproSettings {
        sigma: cfg.sigma.unwrap_or(TABLE_SIGMA),
        max_n: cfg.max_n,
        precision_bits: cfg.precision_bits,
        epsilon: cfg.epsilon.unwrap_or(TABLE_EPSILON),
        tolerance: cfg.tolerance,
        grid_span_sd: cfg.grid_span_sd,
        grid_points: cfg.grid_points,
        ..ReproSettings::default()
    };
    if let Some(eps) = cfg.epsilon {
        s.table3_epsilons = vec![eps];
    }
    if let Some(k) = cfg.order {
        match which {
            1 => s.table1_max_order = k,
            2 => s.table2_order = k,
            _ => s.table3_max_order = k,
        }
    }
    s
}

fn emit_report<R: Serialize>(cfg: &RunConfig, report: TableReport<R>) -> anyhow::Result<()> {
    let text = match cfg.format {
        Format::Csv => report.csv,
        Format::Json => to_json(&report.summary)?,
    };
    emit(cfg, text)
}

fn table(cfg: &RunConfig, which: u8) -> anyhow::Result<()> {
    let settings = repro_settings(cfg, which);
    match which {
        1 => emit_report(cfg, reproduce_table1(&settings)?),
        2 => emit_report(cfg, reproduce_table2(&settings, Execution::default())?),
        _ => emit_report(cfg, reproduce_table3(&settings)?),
    }
}

fn scan_k(cfg: &RunConfig, args: &ScanKArgs) -> anyhow::Result<()> {
    let params = cfg.params()?;
    let t = cfg.time()?;
    let k_max = cfg.order();
    if k_max < 2 {
        bail!("scan-k needs --K >= 2, got {k_max}");
    }
    let tables = (1..=k_max)
        .map(|k| {
            let trunc = Truncation::new(cfg.max_n, k, cfg.precision_bits)?;
            build_truncated(&params, &trunc)
        })
        .collect::<illiquid::Result<Vec<_>>>()?;
    let xs = mid_tail_grid(params.sigma, t, args.lo_sd, args.hi_sd, args.per_side);
    let steps = divergence_scan(&tables, &xs, t, Execution::default())?;
    let peak = gaussian_density(params.sigma, t, 0.0);
    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "K")]
        k: usize,
        sup_diff: f64,
        over_gaussian_peak: f64,
    }
    let rows: Vec<Row> = steps
        .iter()
        .map(|s| Row {
            k: s.k,
            sup_diff: s.sup_diff,
            over_gaussian_peak: s.sup_diff / peak,
        })
        .collect();
    emit_rows(cfg, &rows)
}

fn scan_n(cfg: &RunConfig, args: &ScanNArgs) -> anyhow::Result<()> {
    let params = cfg.params()?;
    let t = cfg.time()?;
    if args.n_step == 0 || args.n_min == 0 || args.n_min >= cfg.max_n {
        bail!(
            "scan-n needs 0 < --n-min < --N and --n-step > 0 (got {}, {}, {})",
            args.n_min,
            cfg.max_n,
            args.n_step
        );
    }
    let table = truncated_table(cfg)?;
    let mut ns: Vec<usize> = (args.n_min..=cfg.max_n).step_by(args.n_step).collect();
    if ns.last() != Some(&cfg.max_n) {
        ns.push(cfg.max_n);
    }
    #[derive(Serialize)]
    struct Row {
        quantity: &'static str,
        at_sd: f64,
        /// Empty when the value has not settled by the largest N.
        converged_by_n: Option<usize>,
    }
    let sd = params.std_dev(t);
    let mut rows = Vec::new();
    for &q in &args.at_sd {
        rows.push(Row {
            quantity: "density",
            at_sd: q,
            converged_by_n: convergence_in_n(&table, &ns, q * sd, t, args.rel_change)?,
        });
    }
    let queries: Vec<TailQuery> = args.tail_sd.iter().map(|&q| TailQuery::left(q)).collect();
    let tails = tail_convergence_in_n(
        &table,
        &ns,
        t,
        cfg.grid_span_sd,
        cfg.grid_points,
        &queries,
        args.rel_change,
        Execution::default(),
    )?;
    for (&q, n0) in args.tail_sd.iter().zip(tails) {
        rows.push(Row {
            quantity: "left_tail",
            at_sd: q,
            converged_by_n: n0,
        });
    }
    emit_rows(cfg, &rows)
}
