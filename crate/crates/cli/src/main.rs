use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use trendwave::calibration::{self, write_curve_csv, Calibration, TimescaleGrid, WEAK_CORRELATION};
use trendwave::market_data::{format_timestamp, load_csv, mid_price_series, parse_timestamp, write_csv, CsvFormat};
use trendwave::sar_minmax::{write_extrema_csv, PreparedSeries, SarConfig};
use trendwave::stats::{
    dynamic_histogram, grid, reversed_cdf, run_study, write_histogram_csv, write_reversed_cdf_csv, HistogramBin,
};
use trendwave::synth::{generate, staircase_extrema, RandomWalkSpec, SineSpec, StaircaseSpec, SynthSpec};
use trendwave::trend_engine::{run_trend_indicator, write_situations_csv, write_trends_csv, SituationKind};
use trendwave::wavelength::{correlogram_with, write_correlogram_csv, CorrelationKind, WavelengthOptions};
use trendwave::{CandleSeries, Execution, Warning};

mod config;

use config::ConfigFile;

#[derive(Parser)]
#[command(
    name = "trendwave",
    version,
    about = "Wavelength-calibrated 1-2-3 trend detection for OHLC candles"
)]
struct Cli {
    /// Exit with status 1 when any warning was raised.
    #[arg(long, global = true)]
    strict: bool,
    /// File of key=value lines supplying defaults for the long options.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correlogram of the detrended mid-price and its dominant wavelength n*.
    Wavelength(AnalysisArgs),
    /// Period-length curve over the timescale grid and the selected t*.
    Calibrate(AnalysisArgs),
    /// MinMax extrema at a given (or calibrated) timescale.
    Extrema(AnalysisArgs),
    /// Trends and 1-2-3 / 3-2-3 / 2-3-2 situations.
    Trends(AnalysisArgs),
    /// Full statistics report with histogram and reversed-CDF data.
    Stats(AnalysisArgs),
    /// Write a synthetic candle series.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

/// Options shared by the analysis commands; a command ignores those it does
/// not use.
#[derive(Args)]
struct AnalysisArgs {
    /// Candle CSV with timestamp, open, high, low, close columns.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Directory for output files [default: .]
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Output format for tabular exports [default: csv]
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Symbol label [default: input file stem]
    #[arg(long)]
    symbol: Option<String>,
    /// Aggregation label such as 1d or 10min.
    #[arg(long)]
    aggregation: Option<String>,
    /// Drop candles before this date or date-time.
    #[arg(long)]
    start: Option<String>,
    /// Drop candles after this date (inclusive) or date-time.
    #[arg(long)]
    end: Option<String>,
    /// Smallest shift of the correlogram [default: 2]
    #[arg(long)]
    n_min: Option<usize>,
    /// Largest shift of the correlogram [default: 300]
    #[arg(long)]
    n_max: Option<usize>,
    /// Use mean-removed correlation instead of the plain cosine.
    #[arg(long)]
    centered: bool,
    /// First timescale of the calibration grid [default: 0.4]
    #[arg(long)]
    t_start: Option<f64>,
    /// Last timescale of the calibration grid [default: 6.0]
    #[arg(long)]
    t_stop: Option<f64>,
    /// Grid step [default: 0.1]
    #[arg(long)]
    t_step: Option<f64>,
    /// Hysteresis in units of ATR [default: 0.3]
    #[arg(long)]
    delta_factor: Option<f64>,
    /// ATR period [default: 100]
    #[arg(long)]
    atr_period: Option<usize>,
    /// Timescale to use instead of calibrating.
    #[arg(long)]
    timescale: Option<f64>,
    /// Bin width of the dynamic histogram [default: 0.25]
    #[arg(long)]
    hist_width: Option<f64>,
    /// Start of the open-ended last histogram bin [default: 4.0]
    #[arg(long)]
    hist_cap: Option<f64>,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SynthKind {
    Sine,
    RandomWalk,
    Staircase,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "sine")]
    kind: SynthKind,
    /// Number of candles (sine, random walk).
    #[arg(long, default_value_t = 5000)]
    length: usize,
    #[arg(long, default_value_t = 50.0)]
    period: f64,
    #[arg(long, default_value_t = 10.0)]
    amplitude: f64,
    /// Mean level of the sine.
    #[arg(long, default_value_t = 100.0)]
    base: f64,
    /// Half the candle range of the sine.
    #[arg(long, default_value_t = 0.2)]
    half_range: f64,
    /// Per-bar drift (absolute for the sine, relative for the random walk).
    #[arg(long, default_value_t = 0.0)]
    drift: f64,
    /// Noise standard deviation of the sine.
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    /// Relative step standard deviation of the random walk.
    #[arg(long, default_value_t = 0.01)]
    volatility: f64,
    /// Number of pivots of a random staircase.
    #[arg(long, default_value_t = 30)]
    pivots: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file [default: <out-dir>/synth_<kind>.csv]
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// csv writes the candle dialect read by --input; json writes the candles as JSON.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

struct Run {
    series: CandleSeries,
    out_dir: PathBuf,
    format: Format,
    wavelength: WavelengthOptions,
    grid: TimescaleGrid,
    sar: SarConfig,
    timescale: Option<f64>,
    hist_width: f64,
    hist_cap: f64,
    exec: Execution,
}

fn parse_bound(text: &str, end: bool) -> Result<i64> {
    let t = parse_timestamp(text).with_context(|| format!("invalid date `{text}`"))?;
    // a bare date as upper bound covers the whole day
    let date_only = text.trim().len() == 10 && text.contains('-');
    Ok(if end && date_only { t + 86_399 } else { t })
}

impl Run {
    fn resolve(a: AnalysisArgs, cfg: &ConfigFile) -> Result<Self> {
        let input: PathBuf = cfg.pick(a.input, "input")?.context("--input is required")?;
        let mut series = load_csv(&input, &CsvFormat::default())?;
        if let Some(s) = cfg.pick(a.symbol, "symbol")? {
            series.symbol = s;
        }
        if let Some(s) = cfg.pick(a.aggregation, "aggregation")? {
            series.aggregation = s;
        }
        let start: Option<String> = cfg.pick(a.start, "start")?;
        let end: Option<String> = cfg.pick(a.end, "end")?;
        if start.is_some() || end.is_some() {
            let lo = start
                .as_deref()
                .map(|s| parse_bound(s, false))
                .transpose()?
                .unwrap_or(i64::MIN);
            let hi = end
                .as_deref()
                .map(|s| parse_bound(s, true))
                .transpose()?
                .unwrap_or(i64::MAX);
            series = series.between(lo, hi).context("no candles in the requested period")?;
        }
        let exec = if a.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        };
        let wd = WavelengthOptions::default();
        let gd = TimescaleGrid::default();
        let sd = SarConfig::default();
        let run = Run {
            series,
            out_dir: cfg.pick(a.out_dir, "out_dir")?.unwrap_or_else(|| PathBuf::from(".")),
            format: cfg.pick(a.format, "format")?.unwrap_or(Format::Csv),
            wavelength: WavelengthOptions {
                n_min: cfg.pick(a.n_min, "n_min")?.unwrap_or(wd.n_min),
                n_max: cfg.pick(a.n_max, "n_max")?.unwrap_or(wd.n_max),
                correlation: if a.centered {
                    CorrelationKind::Centered
                } else {
                    CorrelationKind::Uncentered
                },
                execution: exec,
            },
            grid: TimescaleGrid {
                start: cfg.pick(a.t_start, "t_start")?.unwrap_or(gd.start),
                stop: cfg.pick(a.t_stop, "t_stop")?.unwrap_or(gd.stop),
                step: cfg.pick(a.t_step, "t_step")?.unwrap_or(gd.step),
            },
            sar: SarConfig {
                delta_factor: cfg.pick(a.delta_factor, "delta_factor")?.unwrap_or(sd.delta_factor),
                atr_period: cfg.pick(a.atr_period, "atr_period")?.unwrap_or(sd.atr_period),
                ..sd
            },
            timescale: cfg.pick(a.timescale, "timescale")?,
            hist_width: cfg.pick(a.hist_width, "hist_width")?.unwrap_or(0.25),
            hist_cap: cfg.pick(a.hist_cap, "hist_cap")?.unwrap_or(4.0),
            exec,
        };
        run.sar.validate()?;
        run.grid.points()?;
        if let Some(t) = run.timescale {
            run.sar.with_timescale(t).validate()?;
        }
        Ok(run)
    }

    fn period(&self) -> Period {
        let (a, b) = self.series.period();
        Period {
            symbol: self.series.symbol.clone(),
            aggregation: self.series.aggregation.clone(),
            start: format_timestamp(a),
            end: format_timestamp(b),
            candles: self.series.len(),
        }
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        fs::create_dir_all(&self.out_dir).with_context(|| format!("cannot create {}", self.out_dir.display()))?;
        create(&self.out_dir.join(name))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        write_json(self.create(name)?, value)
    }

    fn calibrate(&self, warnings: &mut Vec<Warning>) -> Result<Calibration> {
        let c = calibration::calibrate(&self.series, &self.wavelength, &self.grid, &self.sar, self.exec)?;
        warnings.extend(c.warnings.iter().cloned());
        Ok(c)
    }

    /// The explicit timescale, or the calibrated one.
    fn timescale(&self, warnings: &mut Vec<Warning>) -> Result<f64> {
        if let Some(t) = self.timescale {
            return Ok(t);
        }
        let c = self.calibrate(warnings)?;
        println!("calibrated t*={} (n*={}, phi*={:.6})", c.t_star, c.n_star, c.phi_star);
        Ok(c.t_star)
    }
}

/// Evaluation period echoed with every table-shaped output.
#[derive(Serialize)]
struct Period {
    symbol: String,
    aggregation: String,
    start: String,
    end: String,
    candles: usize,
}

impl std::fmt::Display for Period {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {} from {} to {} ({} candles)",
            self.symbol, self.aggregation, self.start, self.end, self.candles
        )
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json<T: Serialize, W: Write>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn cmd_wavelength(run: &Run, warnings: &mut Vec<Warning>) -> Result<()> {
    let c = correlogram_with(&mid_price_series(&run.series), &run.wavelength)?;
    warnings.extend(c.warnings.iter().cloned());
    let (n_star, phi_star) = c.best;
    if phi_star < WEAK_CORRELATION {
        warnings.push(Warning::WeakCorrelation {
            phi: phi_star,
            threshold: WEAK_CORRELATION,
        });
    }
    match run.format {
        Format::Csv => write_correlogram_csv(&c, run.create("correlogram.csv")?)?,
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                period: Period,
                n_star: usize,
                phi_star: f64,
                correlogram: &'a trendwave::Correlogram,
            }
            run.write_json(
                "correlogram.json",
                &Out {
                    period: run.period(),
                    n_star,
                    phi_star,
                    correlogram: &c,
                },
            )?
        }
    }
    println!("{}", run.period());
    println!("n*={n_star}, phi*={phi_star:.6}");
    Ok(())
}

fn cmd_calibrate(run: &Run, warnings: &mut Vec<Warning>) -> Result<()> {
    let c = run.calibrate(warnings)?;
    match run.format {
        Format::Csv => {
            write_curve_csv(&c.curve, run.create("calibration_curve.csv")?)?;
            write_correlogram_csv(&c.correlogram, run.create("correlogram.csv")?)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                period: Period,
                calibration: &'a Calibration,
                monotonicity: Option<f64>,
            }
            run.write_json(
                "calibration.json",
                &Out {
                    period: run.period(),
                    calibration: &c,
                    monotonicity: c.curve.monotonicity(),
                },
            )?
        }
    }
    let p_star = c
        .curve
        .points
        .iter()
        .find(|p| p.timescale == c.t_star)
        .and_then(|p| p.avg_period_length);
    println!("{}", run.period());
    println!("n*={}, phi*={:.6}", c.n_star, c.phi_star);
    println!(
        "t*={}, period length at t*={}",
        c.t_star,
        p_star.map_or("-".into(), |p| format!("{p:.3}"))
    );
    Ok(())
}

fn cmd_extrema(run: &Run, warnings: &mut Vec<Warning>) -> Result<()> {
    let t = run.timescale(warnings)?;
    let config = run.sar.with_timescale(t);
    let extrema = PreparedSeries::new(&run.series, config.atr_period)?.extrema(&config)?;
    match run.format {
        Format::Csv => write_extrema_csv(&extrema, run.create("extrema.csv")?)?,
        Format::Json => run.write_json("extrema.json", &extrema)?,
    }
    println!("{}", run.period());
    println!("timescale {t}: {} extrema", extrema.len());
    Ok(())
}

fn cmd_trends(run: &Run, warnings: &mut Vec<Warning>) -> Result<()> {
    let t = run.timescale(warnings)?;
    let config = run.sar.with_timescale(t);
    let extrema = PreparedSeries::new(&run.series, config.atr_period)?.extrema(&config)?;
    let result = run_trend_indicator(&extrema, &run.series)?;
    match run.format {
        Format::Csv => {
            write_trends_csv(&result.trends, run.create("trends.csv")?)?;
            for kind in [SituationKind::S123, SituationKind::S323, SituationKind::S232] {
                let name = format!("situations_{}.csv", kind.as_str());
                write_situations_csv(&result.situations, kind, run.create(&name)?)?;
            }
        }
        Format::Json => run.write_json("trends.json", &result)?,
    }
    println!("{}", run.period());
    println!(
        "timescale {t}: {} trends, {} s123, {} s323, {} s232",
        result.trends.len(),
        result.count(SituationKind::S123),
        result.count(SituationKind::S323),
        result.count(SituationKind::S232)
    );
    Ok(())
}

#[derive(Serialize)]
struct CdfGrid {
    x: Vec<f64>,
    y: Vec<f64>,
    values: Vec<Vec<f64>>,
}

fn cdf_grid(samples: &[(f64, f64)], x: Vec<f64>, y: Vec<f64>) -> Result<CdfGrid> {
    let values = reversed_cdf(samples, &x, &y)?;
    Ok(CdfGrid { x, y, values })
}

fn cmd_stats(run: &Run, warnings: &mut Vec<Warning>) -> Result<()> {
    let t = run.timescale(warnings)?;
    let study = run_study(&run.series, &run.sar.with_timescale(t), run.exec)?;
    let d = &study.metrics.s232;
    let histogram: Vec<HistogramBin> = dynamic_histogram(
        &d.iter().map(|m| m.dynamic).collect::<Vec<_>>(),
        run.hist_width,
        run.hist_cap,
    )?;
    let durations = grid(0.0, 10.0, 0.25);
    let dynamic = cdf_grid(
        &d.iter().map(|m| (m.rel_dur_dynamic, m.dynamic)).collect::<Vec<_>>(),
        durations.clone(),
        grid(1.0, 5.0, 0.25),
    )?;
    let lagged = cdf_grid(
        &d.iter()
            .map(|m| (m.rel_dur_lagged, m.lagged_dynamic))
            .collect::<Vec<_>>(),
        durations.clone(),
        grid(0.0, 5.0, 0.25),
    )?;
    let breakout = cdf_grid(
        &d.iter().map(|m| (m.rel_dur_break, 1.0)).collect::<Vec<_>>(),
        durations,
        vec![1.0],
    )?;

    run.write_json("report.json", &study.report)?;
    let table = study.report.to_table();
    let mut txt = run.create("report.txt")?;
    txt.write_all(table.as_bytes())?;
    txt.flush()?;
    match run.format {
        Format::Csv => {
            write_histogram_csv(&histogram, run.create("histogram.csv")?)?;
            for (name, g) in [("dynamic", &dynamic), ("lagged", &lagged), ("break", &breakout)] {
                write_reversed_cdf_csv(&g.x, &g.y, &g.values, run.create(&format!("reversed_cdf_{name}.csv"))?)?;
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Plots<'a> {
                histogram: &'a [HistogramBin],
                reversed_cdf_dynamic: &'a CdfGrid,
                reversed_cdf_lagged: &'a CdfGrid,
                reversed_cdf_break: &'a CdfGrid,
            }
            run.write_json(
                "plots.json",
                &Plots {
                    histogram: &histogram,
                    reversed_cdf_dynamic: &dynamic,
                    reversed_cdf_lagged: &lagged,
                    reversed_cdf_break: &breakout,
                },
            )?;
        }
    }
    print!("{table}");
    Ok(())
}

fn cmd_synth(a: SynthArgs, cfg: &ConfigFile) -> Result<()> {
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(1);
    let format = cfg.pick(a.format, "format")?.unwrap_or(Format::Csv);
    let spec = match a.kind {
        SynthKind::Sine => SynthSpec::Sine(SineSpec {
            length: a.length,
            period: a.period,
            amplitude: a.amplitude,
            base: a.base,
            half_range: a.half_range,
            drift: a.drift,
            noise_sigma: a.noise_sigma,
            seed,
        }),
        SynthKind::RandomWalk => SynthSpec::RandomWalk(RandomWalkSpec {
            length: a.length,
            volatility: a.volatility,
            drift: a.drift,
            seed,
            ..RandomWalkSpec::default()
        }),
        SynthKind::Staircase => SynthSpec::TrendStaircase(StaircaseSpec::random(seed, a.pivots)),
    };
    let series = generate(&spec)?;
    let kind = a.kind.to_possible_value().expect("named").get_name().replace('-', "_");
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = match a.output {
        Some(p) => p,
        None => {
            let dir: PathBuf = cfg.pick(a.out_dir, "out_dir")?.unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
            dir.join(format!("synth_{kind}.{ext}"))
        }
    };
    match format {
        Format::Csv => write_csv(&series, create(&path)?)?,
        Format::Json => write_json(create(&path)?, &series.candles())?,
    }
    if let SynthSpec::TrendStaircase(s) = &spec {
        let truth = staircase_extrema(s)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let truth_path = path.with_file_name(format!("{stem}_extrema.csv"));
        write_extrema_csv(&truth, create(&truth_path)?)?;
    }
    println!("{} candles written to {}", series.len(), path.display());
    Ok(())
}

type Handler = fn(&Run, &mut Vec<Warning>) -> Result<()>;

fn execute(cli: Cli) -> Result<Vec<Warning>> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let mut warnings = Vec::new();
    let (args, f): (AnalysisArgs, Handler) = match cli.command {
        Command::Synth(a) => {
            cmd_synth(a, &cfg)?;
            return Ok(warnings);
        }
        Command::Wavelength(a) => (a, cmd_wavelength),
        Command::Calibrate(a) => (a, cmd_calibrate),
        Command::Extrema(a) => (a, cmd_extrema),
        Command::Trends(a) => (a, cmd_trends),
        Command::Stats(a) => (a, cmd_stats),
    };
    let run = Run::resolve(args, &cfg)?;
    f(&run, &mut warnings)?;
    Ok(warnings)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    let strict = cli.strict;
    match execute(cli) {
        Ok(warnings) => {
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            if strict && !warnings.is_empty() {
                eprintln!("error: {} warning(s) with --strict", warnings.len());
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
