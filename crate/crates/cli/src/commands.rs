use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use lobq::analytics::{
    depth, events_for_window, expected_duration, survival_duration, tail_law, vol_balanced, vol_balanced_window,
    vol_unbalanced, AsymmetryReport, ChainOptions, UpProbability,
};
use lobq::estimation::{
    estimate, predicted_vs_realized, read_event_log_file, write_event_log, EstimateOptions, EventRecord, ParseOptions,
};
use lobq::model::{
    simulate_logged, simulate_path, BookState, FlowRegime, Horizon, InitialState, ModelParams, QueueDist,
    Replenishment, SimConfig,
};
use lobq::numerics::QuadSpec;
use lobq::xval::{run_suite, SuiteConfig, SuiteScale};
use lobq::{Dist, Params};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::error::{CliError, CliResult, Kind};

pub const DEFAULT_TICK: f64 = 0.01;

/// Where the main output goes and in which format.
pub struct Sink {
    pub path: Option<PathBuf>,
    pub format: Format,
}

fn open(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::runtime(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `# config: {...}` line that opens every CSV output.
fn config_line(w: &mut dyn Write, config: &Value) -> CliResult<()> {
    writeln!(w, "# config: {}", serde_json::to_string(config)?)?;
    Ok(())
}

fn write_json(w: &mut dyn Write, doc: &Value) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *w, doc)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn echo<A: Serialize>(subcommand: &str, args: &A, format: Format) -> CliResult<Value> {
    Ok(json!({"subcommand": subcommand, "format": format, "args": serde_json::to_value(args)?}))
}

fn only(format: Format, allowed: &[Format], cmd: &str) -> CliResult<()> {
    if allowed.contains(&format) {
        Ok(())
    } else {
        Err(CliError::usage(format!("{cmd} does not support --format {format:?}").to_lowercase()))
    }
}

fn need<T: Clone>(v: &Option<T>, flag: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| CliError::usage(format!("missing required --{flag}")))
}

/// Builds parameters and fills the tick default into `m`.
pub fn params(m: &mut ModelArgs) -> CliResult<Params> {
    let lambda = need(&m.lambda, "lambda")?;
    let tick = *m.tick.get_or_insert(DEFAULT_TICK);
    let p = match (m.mu, m.theta, m.mu_theta) {
        (Some(mu), Some(theta), total) => {
            if let Some(t) = total {
                if (t - (mu + theta)).abs() > 1e-12 * t.abs().max(1.0) {
                    return Err(CliError::usage(format!("--mu-theta {t} differs from --mu + --theta = {}", mu + theta)));
                }
            }
            ModelParams::new(lambda, mu, theta, tick)?
        }
        (None, None, Some(total)) => ModelParams::with_removal_rate(lambda, total, tick)?,
        _ => return Err(CliError::usage("give --mu-theta, or both --mu and --theta")),
    };
    p.validate()?;
    Ok(p)
}

/// Parses `bid:ask:weight,...`.
fn parse_inline_dist(s: &str) -> CliResult<Dist> {
    let mut cells = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        let bad = || CliError::usage(format!("bad f entry `{item}`, expected bid:ask:weight"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let b: u32 = parts[0].parse().map_err(|_| bad())?;
        let a: u32 = parts[1].parse().map_err(|_| bad())?;
        let w: f64 = parts[2].parse().map_err(|_| bad())?;
        cells.push((b, a, w));
    }
    Ok(QueueDist::from_weights(cells)?)
}

pub fn dist(d: &DistArgs) -> CliResult<Dist> {
    match (&d.f, &d.f_file) {
        (Some(s), None) => parse_inline_dist(s),
        (None, Some(p)) => {
            let file = File::open(p).map_err(|e| CliError::usage(format!("cannot open {}: {e}", p.display())))?;
            Ok(QueueDist::read_csv(file)?)
        }
        (Some(_), Some(_)) => Err(CliError::usage("give only one of --f and --f-file")),
        (None, None) => Err(CliError::usage("missing required --f or --f-file")),
    }
}

/// `start:stop:step` (inclusive) or a comma-separated list of times.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let bad = |why: &str| CliError::usage(format!("bad --t-grid `{s}`: {why}"));
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let grid: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(h > 0.0) || !(b >= a) {
            return Err(bad("need step > 0 and stop >= start"));
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        if n > 10_000_000 {
            return Err(bad("too many points"));
        }
        (0..=n).map(|i| a + i as f64 * h).collect()
    } else {
        s.split(',').map(num).collect::<CliResult<_>>()?
    };
    if grid.is_empty() || grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(bad("times must be finite and >= 0"));
    }
    Ok(grid)
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn duration(mut a: DurationArgs, sink: &Sink) -> CliResult<()> {
    only(sink.format, &[Format::Csv, Format::Json], "duration")?;
    let p = params(&mut a.model)?;
    let (bid, ask) = (need(&a.bid, "bid")?, need(&a.ask, "ask")?);
    if bid == 0 || ask == 0 {
        return Err(CliError::usage("--bid and --ask must be >= 1"));
    }
    let grid = parse_grid(&need(&a.t_grid, "t-grid")?)?;
    let want_mean = *a.mean.get_or_insert(false);
    let config = echo("duration", &a, sink.format)?;

    let spec = QuadSpec::default();
    let law = if p.regime() == FlowRegime::LimitDominated { None } else { Some(tail_law(bid, ask, &p)?) };
    let mut rows = Vec::with_capacity(grid.len());
    for &t in &grid {
        let s = survival_duration(bid, ask, t, &p, &spec)?;
        let tail = law.filter(|_| t > 0.0).map(|l| l.prefactor / t.powf(l.exponent));
        rows.push((t, s, tail));
    }
    let mean = if want_mean { Some(expected_duration(bid, ask, &p, &spec)?) } else { None };

    let mut w = open(sink.path.as_deref())?;
    match sink.format {
        Format::Csv => {
            config_line(&mut *w, &config)?;
            if let Some(m) = mean {
                writeln!(w, "# expected_duration: {m}")?;
            }
            writeln!(w, "t,survival,tail_asymptote")?;
            for (t, s, tail) in rows {
                writeln!(w, "{t},{s},{}", opt_num(tail))?;
            }
            w.flush()?;
        }
        _ => {
            let rows: Vec<Value> =
                rows.iter().map(|(t, s, tail)| json!({"t": t, "survival": s, "tail_asymptote": tail})).collect();
            let law = law.map(|l| json!({"exponent": l.exponent, "prefactor": l.prefactor}));
            write_json(&mut *w, &json!({"config": config, "tail_law": law, "expected_duration": mean, "rows": rows}))?;
        }
    }
    Ok(())
}

pub fn prob_up(mut a: ProbUpArgs, sink: &Sink) -> CliResult<()> {
    only(sink.format, &[Format::Csv, Format::Json], "prob-up")?;
    let p = params(&mut a.model)?;
    let n = *a.max_queue.get_or_insert(20);
    let truncation = *a.truncation.get_or_insert(400);
    if n == 0 {
        return Err(CliError::usage("--max-queue must be >= 1"));
    }
    let config = echo("prob-up", &a, sink.format)?;
    let opts = ChainOptions {
        truncation,
        ..ChainOptions::default()
    };
    let up = UpProbability::new(&p, &opts)?;
    let method = if p.is_balanced() { "closed_form" } else { "grid" };
    let mut rows = Vec::with_capacity((n * n) as usize);
    for b in 1..=n {
        for k in 1..=n {
            rows.push((b, k, up.at(b, k)?));
        }
    }
    let mut w = open(sink.path.as_deref())?;
    match sink.format {
        Format::Csv => {
            config_line(&mut *w, &config)?;
            writeln!(w, "bid,ask,phi")?;
            for (b, k, v) in rows {
                writeln!(w, "{b},{k},{v}")?;
            }
            w.flush()?;
        }
        _ => {
            let rows: Vec<Value> = rows.iter().map(|(b, k, v)| json!({"bid": b, "ask": k, "phi": v})).collect();
            write_json(&mut *w, &json!({"config": config, "method": method, "rows": rows}))?;
        }
    }
    Ok(())
}

pub fn price_stats(mut a: PriceStatsArgs, sink: &Sink) -> CliResult<()> {
    only(sink.format, &[Format::Csv, Format::Json], "price-stats")?;
    let p = params(&mut a.model)?;
    let f = dist(&a.dist)?;
    let lags = *a.lags.get_or_insert(5);
    let truncation = *a.truncation.get_or_insert(400);
    if lags == 0 {
        return Err(CliError::usage("--lags must be >= 1"));
    }
    let start = match (a.bid, a.ask) {
        (Some(b), Some(k)) if b > 0 && k > 0 => Some((b, k)),
        (None, None) => None,
        _ => return Err(CliError::usage("--bid and --ask go together and must be >= 1")),
    };
    let config = echo("price-stats", &a, sink.format)?;
    let opts = ChainOptions {
        truncation,
        ..ChainOptions::default()
    };
    let up = UpProbability::new(&p, &opts)?;
    let pc = up.p_cont(&f)?;
    let autocov: Vec<f64> = (1..=lags).map(|k| (2.0 * pc - 1.0).powi(k as i32 - 1)).collect();
    let pn: Option<Vec<f64>> = match start {
        Some((b, k)) => Some((1..=lags).map(|n| up.p_n(n, b, k, &f)).collect::<lobq::Result<_>>()?),
        None => None,
    };
    let asym = AsymmetryReport::from_p_cont(&f, pc);
    let d = depth(&f);

    let mut w = open(sink.path.as_deref())?;
    match sink.format {
        Format::Csv => {
            config_line(&mut *w, &config)?;
            writeln!(w, "# p_cont: {pc}")?;
            writeln!(w, "# depth: {d}")?;
            writeln!(w, "k,autocov,p_n")?;
            for k in 1..=lags as usize {
                let pn_k = pn.as_ref().map(|v| v[k - 1]);
                writeln!(w, "{k},{},{}", autocov[k - 1], opt_num(pn_k))?;
            }
            w.flush()?;
        }
        _ => write_json(
            &mut *w,
            &json!({
                "config": config,
                "p_cont": pc,
                "depth": d,
                "asymmetry": asym,
                "consistent": asym.consistent(),
                "autocov": autocov,
                "p_n": pn,
            }),
        )?,
    }
    Ok(())
}

fn parse_pair(s: &str, flag: &str) -> CliResult<(u32, u32)> {
    let bad = || CliError::usage(format!("bad --{flag} `{s}`, expected bid,ask"));
    let (b, k) = s.split_once(',').ok_or_else(bad)?;
    Ok((b.trim().parse().map_err(|_| bad())?, k.trim().parse().map_err(|_| bad())?))
}

pub fn simulate(mut a: SimulateArgs, sink: &Sink) -> CliResult<()> {
    only(sink.format, &[Format::Csv, Format::Json], "simulate")?;
    let p = params(&mut a.model)?;
    let f = dist(&a.dist)?;
    let mut sim = match &a.sim_config {
        Some(path) => crate::config::read_typed::<SimConfig>(path)?,
        None => SimConfig::new(1, Horizon::Time(1.0)),
    };
    if let Some(s) = a.seed {
        sim.seed = s;
    }
    let horizons = [a.time.map(Horizon::Time), a.events.map(Horizon::Events), a.moves.map(Horizon::Moves)];
    match horizons.iter().flatten().collect::<Vec<_>>()[..] {
        [h] => sim.horizon = *h,
        [] if a.sim_config.is_some() => {}
        [] => return Err(CliError::usage("give one of --time, --events, --moves (or a --sim-config)")),
        _ => return Err(CliError::usage("give only one of --time, --events, --moves")),
    }
    if let Some(s) = &a.start {
        let (b, k) = parse_pair(s, "start")?;
        sim.initial_state = InitialState::State(BookState::new(0, b, k)?);
    }
    sim.horizon.validate()?;
    let config = json!({
        "subcommand": "simulate",
        "format": sink.format,
        "args": serde_json::to_value(&a)?,
        "sim": serde_json::to_value(&sim)?,
    });
    let repl = Replenishment::mirrored(&f);
    let (path, log) = if a.log.is_some() {
        let (path, log) = simulate_logged(&p, &repl, &sim)?;
        (path, Some(log))
    } else {
        (simulate_path(&p, &repl, &sim, 0)?, None)
    };
    if let (Some(file), Some(log)) = (&a.log, &log) {
        let mut w = open(Some(file))?;
        config_line(&mut *w, &config)?;
        write_event_log(log, &mut w)?;
        w.flush()?;
    }
    let mut w = open(sink.path.as_deref())?;
    match sink.format {
        Format::Csv => {
            config_line(&mut *w, &config)?;
            path.write_csv(&mut w)?;
            w.flush()?;
        }
        _ => write_json(&mut *w, &json!({"config": config, "path": path}))?,
    }
    Ok(())
}

fn load_log(path: &Path, batch: u32) -> CliResult<Vec<EventRecord>> {
    let log = read_event_log_file(path, ParseOptions { batch_size: batch }).map_err(|e| match e {
        lobq::Error::Io(io) => CliError::usage(format!("cannot read {}: {io}", path.display())),
        other => other.into(),
    })?;
    if !log.malformed.is_empty() {
        log::warn!("{} malformed rows skipped in {}", log.malformed.len(), path.display());
    }
    Ok(log.records)
}

pub fn estimate_cmd(mut a: EstimateArgs, sink: &Sink) -> CliResult<()> {
    only(sink.format, &[Format::Json], "estimate")?;
    let path = need(&a.log, "log")?;
    let batch = *a.batch_size.get_or_insert(1);
    let pool = *a.pool_down_moves.get_or_insert(true);
    let config = echo("estimate", &a, sink.format)?;
    let records = load_log(&path, batch)?;
    let opts = EstimateOptions {
        window_start: a.window_start,
        window_end: a.window_end,
        tick: a.tick,
        pool_down_moves: pool,
    };
    let est = estimate(&records, &opts)?;
    if let Some(out) = &a.f_out {
        let f_hat = est.f_hat().ok_or(lobq::Error::NoPriceChanges)?;
        let mut w = open(Some(out))?;
        config_line(&mut *w, &config)?;
        f_hat.write_csv(&mut w)?;
        w.flush()?;
    }
    let mut w = open(sink.path.as_deref())?;
    write_json(&mut *w, &json!({"config": config, "estimation": est}))
}

pub fn vol(mut a: VolArgs, sink: &Sink) -> CliResult<()> {
    only(sink.format, &[Format::Json], "vol")?;
    let has_model = a.model.lambda.is_some();
    if !has_model && a.log.is_none() {
        return Err(CliError::usage("give model parameters (--lambda ...) and f, or a --log"));
    }
    if let Some(w) = a.window {
        if !(w > 0.0) || !w.is_finite() {
            return Err(CliError::usage("--window must be a positive number of seconds"));
        }
    }
    let mut prediction = Value::Null;
    if has_model {
        let p = params(&mut a.model)?;
        let f = dist(&a.dist)?;
        let d = depth(&f);
        prediction = match p.regime() {
            FlowRegime::Balanced => {
                let sigma = vol_balanced(&p, &f)?;
                let window = match a.window {
                    Some(w) => {
                        let n: f64 = events_for_window(w)?;
                        json!({"seconds": w, "n": n, "sd": vol_balanced_window(&p, &f, n)?})
                    }
                    None => Value::Null,
                };
                json!({"regime": "balanced", "depth": d, "sigma": sigma,
                       "sigma_units": "currency per sqrt(rescaled time), time scaled by n ln n and price by sqrt(n)",
                       "window": window})
            }
            FlowRegime::RemovalDominated => {
                let sigma = vol_unbalanced(&p, &f, &QuadSpec::default())?;
                let window = a.window.map(|w| json!({"seconds": w, "sd": sigma * w.sqrt()}));
                json!({"regime": "removal_dominated", "depth": d, "sigma": sigma,
                       "sigma_units": "currency per sqrt(second)", "window": window})
            }
            FlowRegime::LimitDominated => {
                return Err(CliError::usage("no diffusion limit when lambda > mu + theta"));
            }
        };
    }
    let batch = *a.batch_size.get_or_insert(1);
    let config = echo("vol", &a, sink.format)?;
    let realized = match &a.log {
        Some(path) => {
            let window = need(&a.window, "window")?;
            let records = load_log(path, batch)?;
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let opts = EstimateOptions {
                pool_down_moves: true,
                ..EstimateOptions::default()
            };
            serde_json::to_value(predicted_vs_realized(&name, &records, window, &opts)?)?
        }
        None => Value::Null,
    };
    let mut w = open(sink.path.as_deref())?;
    write_json(&mut *w, &json!({"config": config, "prediction": prediction, "realized": realized}))
}

/// Runs the suite; a failed comparison is reported through exit status 3
/// after the report has been written.
pub fn xval(mut a: XvalArgs, sink: &Sink) -> CliResult<()> {
    only(sink.format, &[Format::Json, Format::Table], "xval")?;
    let criteria: Vec<u8> = match &a.criteria {
        Some(s) => s
            .split(',')
            .map(|c| c.trim().parse::<u8>().ok().filter(|c| (1..=8).contains(c)))
            .collect::<Option<_>>()
            .ok_or_else(|| CliError::usage(format!("bad --criteria `{s}`, expected numbers 1-8")))?,
        None => (1..=8).collect(),
    };
    let cfg = SuiteConfig {
        seed: *a.seed.get_or_insert(SuiteConfig::default().seed),
        scale: if *a.quick.get_or_insert(false) { SuiteScale::Quick } else { SuiteScale::Full },
        criteria,
    };
    let config = json!({"subcommand": "xval", "format": sink.format, "args": serde_json::to_value(&a)?, "suite": cfg});
    let report = run_suite(&cfg);
    match sink.format {
        Format::Table => {
            let mut w = open(sink.path.as_deref())?;
            writeln!(w, "# config: {}", serde_json::to_string(&config)?)?;
            write!(w, "{}", report.table())?;
            w.flush()?;
        }
        _ => {
            let mut w = open(sink.path.as_deref())?;
            write_json(&mut *w, &json!({"config": config, "report": report}))?;
            if sink.path.is_some() {
                print!("{}", report.table());
            }
        }
    }
    if report.pass {
        Ok(())
    } else {
        let failed: Vec<String> = report.reports.iter().filter(|r| !r.pass).map(|r| r.quantity.clone()).collect();
        Err(CliError {
            kind: Kind::Comparison,
            message: format!("{} comparison(s) failed: {}", failed.len(), failed.join("; ")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0:10:0.01").unwrap().len(), 1001);
        assert_eq!(parse_grid("1, 2.5").unwrap(), vec![1.0, 2.5]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("-1").is_err());
        assert!(parse_grid("a").is_err());
    }

    #[test]
    fn inline_law() {
        let f = parse_inline_dist("1:2:1, 2:1:3").unwrap();
        assert_eq!(f.prob(2, 1), 0.75);
        assert!(parse_inline_dist("1:2").is_err());
        assert!(parse_inline_dist("0:2:1").is_err());
    }

    #[test]
    fn removal_rate_forms() {
        let mut m = ModelArgs {
            lambda: Some(1.0),
            mu: Some(0.5),
            theta: Some(1.5),
            ..ModelArgs::default()
        };
        assert_eq!(params(&mut m).unwrap().mu_theta(), 2.0);
        assert_eq!(m.tick, Some(DEFAULT_TICK));
        m.mu_theta = Some(3.0);
        assert!(params(&mut m).is_err());
        let mut only_total = ModelArgs {
            lambda: Some(1.0),
            mu_theta: Some(2.0),
            ..ModelArgs::default()
        };
        assert!(params(&mut only_total).is_ok());
        assert_eq!(params(&mut ModelArgs::default()).unwrap_err().kind, Kind::Usage);
    }
}
