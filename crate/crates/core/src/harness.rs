//! Monte Carlo sweeps: per-trial channel draws shared by all schemes,
//! averaging, and CSV / JSON output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cccp::{run_scheme_suite, CccpOptions, Scheme};
use crate::error::{Error, Result};
use crate::model::{sample_channels, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    SnrDb,
    NumUes,
    PhaseOffsetDeg,
    WorstCaseDelay,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::SnrDb => "snr_db",
            SweepVariable::NumUes => "num_ues",
            SweepVariable::PhaseOffsetDeg => "phase_offset_deg",
            SweepVariable::WorstCaseDelay => "worst_case_delay",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "snr_db" => Ok(SweepVariable::SnrDb),
            "num_ues" => Ok(SweepVariable::NumUes),
            "phase_offset_deg" => Ok(SweepVariable::PhaseOffsetDeg),
            "worst_case_delay" => Ok(SweepVariable::WorstCaseDelay),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep variable `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2,
    Fig3,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            other => Err(Error::InvalidConfig(format!("unknown preset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidConfig(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub base_config: SystemConfig,
    pub sweep_variable: SweepVariable,
    pub sweep_values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub master_seed: u64,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    /// When sweeping `num_ues`, give each RRH `N_U / 2` antennas.
    pub antennas_follow_ues: bool,
    /// Extra evaluation phase offsets in degrees. When non-empty every
    /// scheme is reported once per offset, labelled `scheme@<deg>deg`, and
    /// the base phase offset is ignored.
    pub eval_phase_offsets_deg: Vec<f64>,
    pub dump_trials: bool,
    pub cccp: CccpOptions,
}

impl ExperimentPlan {
    /// Average worst-case rate versus SNR: two scalar UEs, `θ = 0`, `D = 1`,
    /// SNR from −5 to 20 dB, all schemes.
    pub fn fig2() -> Self {
        Self {
            base_config: SystemConfig::scalar(2, 1, 1.0),
            sweep_variable: SweepVariable::SnrDb,
            sweep_values: vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            schemes: Scheme::all().to_vec(),
            trials: 100,
            master_seed: 1,
            output_path: None,
            format: OutputFormat::Csv,
            antennas_follow_ues: false,
            eval_phase_offsets_deg: Vec::new(),
            dump_trials: false,
            cccp: CccpOptions::default(),
        }
    }

    /// Average worst-case rate versus number of UEs at 10 dB with
    /// `N_U / 2` antennas per RRH, evaluated at phase offsets 0°, 20°, 45°.
    pub fn fig3() -> Self {
        Self {
            base_config: SystemConfig::symmetric(2, 1, 1, 1, 10.0),
            sweep_variable: SweepVariable::NumUes,
            sweep_values: vec![2.0, 4.0, 6.0],
            antennas_follow_ues: true,
            eval_phase_offsets_deg: vec![0.0, 20.0, 45.0],
            ..Self::fig2()
        }
    }

    pub fn from_preset(preset: Preset) -> Self {
        match preset {
            Preset::Fig2 => Self::fig2(),
            Preset::Fig3 => Self::fig3(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.sweep_values.is_empty() {
            return Err(Error::InvalidConfig("sweep_values is empty".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("schemes is empty".into()));
        }
        if self.eval_phase_offsets_deg.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidConfig(
                "eval_phase_offsets_deg must be finite".into(),
            ));
        }
        if self.dump_trials && self.output_path.is_none() {
            return Err(Error::InvalidConfig(
                "dumping trials needs an output path".into(),
            ));
        }
        for &value in &self.sweep_values {
            self.config_at(value)?.validate()?;
        }
        Ok(())
    }

    /// System configuration at one sweep point.
    pub fn config_at(&self, value: f64) -> Result<SystemConfig> {
        let mut cfg = self.base_config.clone();
        let as_count = |what: &str| -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 && value < 1e6 {
                Ok(value as usize)
            } else {
                Err(Error::InvalidConfig(format!(
                    "{what} sweep value {value} is not a non-negative integer"
                )))
            }
        };
        match self.sweep_variable {
            SweepVariable::SnrDb => {
                if !value.is_finite() {
                    return Err(Error::InvalidConfig(format!("SNR {value} dB")));
                }
                let p = 10f64.powf(value / 10.0);
                cfg.power_rrh1 = p;
                cfg.power_rrh2 = p;
            }
            SweepVariable::NumUes => {
                let n = as_count("num_ues")?;
                if n == 0 {
                    return Err(Error::InvalidConfig("num_ues must be at least 1".into()));
                }
                if self.antennas_follow_ues {
                    if n % 2 != 0 {
                        return Err(Error::InvalidConfig(format!(
                            "num_ues {n} must be even when antennas follow UEs"
                        )));
                    }
                    cfg.antennas_rrh1 = n / 2;
                    cfg.antennas_rrh2 = n / 2;
                }
                let per_ue = cfg.antennas_ue.first().copied().unwrap_or(1);
                cfg.num_ues = n;
                cfg.antennas_ue = vec![per_ue; n];
            }
            SweepVariable::PhaseOffsetDeg => {
                if !value.is_finite() {
                    return Err(Error::InvalidConfig(format!("phase offset {value}")));
                }
                cfg.phase_offset_eval = value.to_radians();
            }
            SweepVariable::WorstCaseDelay => cfg.worst_case_delay = as_count("worst_case_delay")?,
        }
        Ok(cfg)
    }

    fn labels(&self) -> Vec<(Scheme, Option<f64>)> {
        let mut out = Vec::new();
        for &s in &self.schemes {
            if self.eval_phase_offsets_deg.is_empty() {
                out.push((s, None));
            } else {
                out.extend(self.eval_phase_offsets_deg.iter().map(|&t| (s, Some(t))));
            }
        }
        out
    }
}

fn label(scheme: &Scheme, theta_deg: Option<f64>) -> String {
    match theta_deg {
        None => scheme.name().to_string(),
        Some(t) => format!("{}@{}deg", scheme.name(), format_sig(t)),
    }
}

/// Seed of one trial, mixing the master seed with the sweep and trial indices.
pub fn trial_seed(master_seed: u64, sweep_index: usize, trial_index: usize) -> u64 {
    let mut z = master_seed;
    for part in [sweep_index as u64, trial_index as u64] {
        z = splitmix(z ^ splitmix(part.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    z
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Delay actually experienced in a trial, uniform on `{0, …, D}`.
pub fn trial_delay(seed: u64, worst_case_delay: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ 0xD1A7));
    rng.random_range(0..=worst_case_delay)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub sweep_variable: String,
    pub sweep_value: f64,
    /// Trials that finished without a solver failure.
    pub trials: usize,
    pub avg_min_rate_bits: f64,
    pub std_err: f64,
    pub avg_iterations: f64,
    pub failures: usize,
}

/// Outcome of one scheme on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub scheme: String,
    pub sweep_value: f64,
    pub trial: usize,
    /// `None` when the scheme failed on this trial.
    pub min_rate: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub trials: Vec<TrialRecord>,
}

impl SweepOutput {
    /// Whether any row lost more than 10 % of its trials to solver failures.
    pub fn excessive_failures(&self) -> bool {
        self.rows
            .iter()
            .any(|r| 10 * r.failures > r.trials + r.failures)
    }
}

fn run_trial(
    plan: &ExperimentPlan,
    cfg: &SystemConfig,
    value: f64,
    sweep_index: usize,
    trial: usize,
) -> Vec<TrialRecord> {
    let seed = trial_seed(plan.master_seed, sweep_index, trial);
    let channels = sample_channels(cfg, seed);
    let genie = trial_delay(seed, cfg.worst_case_delay);
    let suite = run_scheme_suite(cfg, &channels, &plan.cccp, Some(genie));
    plan.labels()
        .into_iter()
        .map(|(scheme, theta_deg)| {
            let outcome = suite.get(&scheme);
            let min_rate = outcome.and_then(|o| match theta_deg {
                None => Some(o.report().min_rate),
                Some(t) => o
                    .evaluate_at(cfg, &channels, t.to_radians())
                    .ok()
                    .map(|r| r.min_rate),
            });
            TrialRecord {
                scheme: label(&scheme, theta_deg),
                sweep_value: value,
                trial,
                min_rate: min_rate.filter(|r| r.is_finite()),
                iterations: outcome.map_or(0, |o| o.trace.iterations),
            }
        })
        .collect()
}

fn aggregate(
    plan: &ExperimentPlan,
    value: f64,
    scheme: String,
    records: &[&TrialRecord],
) -> ResultRow {
    let ok: Vec<&TrialRecord> = records
        .iter()
        .copied()
        .filter(|r| r.min_rate.is_some())
        .collect();
    let n = ok.len();
    let rates: Vec<f64> = ok.iter().filter_map(|r| r.min_rate).collect();
    let mean = if n == 0 {
        f64::NAN
    } else {
        rates.iter().sum::<f64>() / n as f64
    };
    let std_err = if n < 2 {
        0.0
    } else {
        let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    let avg_iterations = if n == 0 {
        f64::NAN
    } else {
        ok.iter().map(|r| r.iterations as f64).sum::<f64>() / n as f64
    };
    ResultRow {
        scheme,
        sweep_variable: plan.sweep_variable.name().to_string(),
        sweep_value: value,
        trials: n,
        avg_min_rate_bits: mean,
        std_err,
        avg_iterations,
        failures: records.len() - n,
    }
}

/// Runs every (sweep value, trial) in parallel and aggregates per scheme.
pub fn run_sweep(plan: &ExperimentPlan) -> Result<SweepOutput> {
    run_sweep_with_progress(plan, &|_, _| {})
}

/// As [`run_sweep`], calling `progress(done, total)` as trials finish.
pub fn run_sweep_with_progress(
    plan: &ExperimentPlan,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<SweepOutput> {
    plan.validate()?;
    let configs: Vec<SystemConfig> = plan
        .sweep_values
        .iter()
        .map(|&v| plan.config_at(v))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|i| (0..plan.trials).map(move |t| (i, t)))
        .collect();
    let total = jobs.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let per_job: Vec<Vec<TrialRecord>> = jobs
        .par_iter()
        .map(|&(i, t)| {
            let out = run_trial(plan, &configs[i], plan.sweep_values[i], i, t);
            progress(
                done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1,
                total,
            );
            out
        })
        .collect();
    let trials: Vec<TrialRecord> = per_job.into_iter().flatten().collect();

    let mut rows = Vec::new();
    for &value in &plan.sweep_values {
        for (scheme, theta) in plan.labels() {
            let name = label(&scheme, theta);
            let records: Vec<&TrialRecord> = trials
                .iter()
                .filter(|r| r.sweep_value == value && r.scheme == name)
                .collect();
            rows.push(aggregate(plan, value, name, &records));
        }
    }
    Ok(SweepOutput { rows, trials })
}

/// `x` rounded to 9 significant digits, printed in its shortest exact form.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    if rounded == 0.0 {
        "0".into()
    } else {
        format!("{rounded}")
    }
}

fn rounded(x: f64) -> f64 {
    format_sig(x).parse().unwrap_or(x)
}

pub const CSV_HEADER: &str =
    "scheme,sweep_variable,sweep_value,trials,avg_min_rate_bits,std_err,avg_iterations,failures";

/// Header plus one record per item, every field already formatted.
fn write_csv(header: &str, records: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let infallible = "writing CSV to memory";
    w.write_record(header.split(',')).expect(infallible);
    for record in records {
        w.write_record(&record).expect(infallible);
    }
    String::from_utf8(w.into_inner().expect(infallible)).expect("CSV fields are UTF-8")
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    write_csv(
        CSV_HEADER,
        rows.iter().map(|r| {
            vec![
                r.scheme.clone(),
                r.sweep_variable.clone(),
                format_sig(r.sweep_value),
                r.trials.to_string(),
                format_sig(r.avg_min_rate_bits),
                format_sig(r.std_err),
                format_sig(r.avg_iterations),
                r.failures.to_string(),
            ]
        }),
    )
}

pub fn to_json(rows: &[ResultRow]) -> Result<String> {
    let values: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            let num = |x: f64| {
                serde_json::Number::from_f64(rounded(x)).map_or(serde_json::Value::Null, Into::into)
            };
            serde_json::json!({
                "scheme": r.scheme,
                "sweep_variable": r.sweep_variable,
                "sweep_value": num(r.sweep_value),
                "trials": r.trials,
                "avg_min_rate_bits": num(r.avg_min_rate_bits),
                "std_err": num(r.std_err),
                "avg_iterations": num(r.avg_iterations),
                "failures": r.failures,
            })
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&values)?;
    text.push('\n');
    Ok(text)
}

pub fn render(rows: &[ResultRow], format: OutputFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    match format {
        OutputFormat::Csv => Ok(to_csv(rows)),
        OutputFormat::Json => to_json(rows),
    }
}

/// Writes the rows to `path`; nothing is created when `rows` is empty.
pub fn emit_results(rows: &[ResultRow], format: OutputFormat, path: &Path) -> Result<()> {
    let text = render(rows, format)?;
    fs::write(path, text)?;
    Ok(())
}

/// Parses CSV produced by [`to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let bad = |e: csv::Error| Error::InvalidConfig(format!("malformed CSV: {e}"));
    let header = reader.headers().map_err(bad)?;
    if !header.iter().eq(CSV_HEADER.split(',')) {
        return Err(Error::InvalidConfig("unexpected CSV header".into()));
    }
    reader.deserialize().map(|row| row.map_err(bad)).collect()
}

pub const TRIALS_HEADER: &str = "scheme,sweep_value,trial,min_rate_bits,iterations,failed";

pub fn trials_to_csv(trials: &[TrialRecord]) -> String {
    write_csv(
        TRIALS_HEADER,
        trials.iter().map(|t| {
            vec![
                t.scheme.clone(),
                format_sig(t.sweep_value),
                t.trial.to_string(),
                t.min_rate.map_or("nan".to_string(), format_sig),
                t.iterations.to_string(),
                t.min_rate.is_none().to_string(),
            ]
        }),
    )
}

/// Path of the per-trial dump next to the main output.
pub fn trials_path(output: &Path) -> PathBuf {
    let mut name = output
        .file_stem()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    name.push(".trials.csv");
    output.with_file_name(name)
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidConfig(format!(
            "bad boolean `{value}` for `{key}`"
        ))),
    }
}

/// Flat `key = value` pairs with `#` comments, in file order.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("line {}: expected `key = value`", n + 1))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl ExperimentPlan {
    /// Builds a plan from config-file text: the `preset` key (default fig2)
    /// picks the starting plan and every other key overrides it.
    pub fn from_config_text(text: &str, preset_override: Option<Preset>) -> Result<Self> {
        let pairs = parse_key_values(text)?;
        let preset = match preset_override {
            Some(p) => p,
            None => match pairs.iter().rev().find(|(k, _)| k == "preset") {
                Some((_, v)) => v.parse()?,
                None => Preset::Fig2,
            },
        };
        let mut plan = Self::from_preset(preset);
        for (k, v) in &pairs {
            plan.set(k, v)?;
        }
        Ok(plan)
    }

    /// Applies one configuration key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let cfg = &mut self.base_config;
        match key {
            "preset" => {}
            "num_ues" => {
                let n: usize = parse_num(key, value)?;
                let per_ue = cfg.antennas_ue.first().copied().unwrap_or(1);
                cfg.num_ues = n;
                cfg.antennas_ue = vec![per_ue; n];
            }
            "antennas_rrh1" => cfg.antennas_rrh1 = parse_num(key, value)?,
            "antennas_rrh2" => cfg.antennas_rrh2 = parse_num(key, value)?,
            "antennas_rrh" => {
                let n = parse_num(key, value)?;
                cfg.antennas_rrh1 = n;
                cfg.antennas_rrh2 = n;
            }
            "antennas_ue" => {
                let list: Vec<usize> = parse_list(value, |s| parse_num(key, s))?;
                cfg.antennas_ue = if list.len() == 1 {
                    vec![list[0]; cfg.num_ues]
                } else {
                    list
                };
            }
            "worst_case_delay" => cfg.worst_case_delay = parse_num(key, value)?,
            "snr_db" => {
                let p = 10f64.powf(parse_num::<f64>(key, value)? / 10.0);
                cfg.power_rrh1 = p;
                cfg.power_rrh2 = p;
            }
            "power_rrh1_db" => cfg.power_rrh1 = 10f64.powf(parse_num::<f64>(key, value)? / 10.0),
            "power_rrh2_db" => cfg.power_rrh2 = 10f64.powf(parse_num::<f64>(key, value)? / 10.0),
            "phase_offset_deg" => {
                cfg.phase_offset_eval = parse_num::<f64>(key, value)?.to_radians()
            }
            "sweep_variable" => self.sweep_variable = value.parse()?,
            "sweep_values" => self.sweep_values = parse_list(value, |s| parse_num(key, s))?,
            "schemes" => self.schemes = parse_list(value, str::parse)?,
            "trials" => self.trials = parse_num(key, value)?,
            "master_seed" | "seed" => self.master_seed = parse_num(key, value)?,
            "output_path" | "out" => self.output_path = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            "antennas_follow_ues" => self.antennas_follow_ues = parse_bool(key, value)?,
            "eval_phase_offsets_deg" => {
                self.eval_phase_offsets_deg = parse_list(value, |s| parse_num(key, s))?
            }
            "dump_trials" => self.dump_trials = parse_bool(key, value)?,
            "max_outer" => self.cccp.max_outer = parse_num(key, value)?,
            "tol_outer" => self.cccp.tol_outer = parse_num(key, value)?,
            "extrapolate" => self.cccp.extrapolate = parse_bool(key, value)?,
            "warm_start" => self.cccp.warm_start = parse_bool(key, value)?,
            "split" => self.cccp.split = value.parse()?,
            other => return Err(Error::InvalidConfig(format!("unknown key `{other}`"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scheme: &str, value: f64) -> ResultRow {
        ResultRow {
            scheme: scheme.into(),
            sweep_variable: "snr_db".into(),
            sweep_value: value,
            trials: 10,
            avg_min_rate_bits: 1.234567891234,
            std_err: 0.0123456789012,
            avg_iterations: 12.5,
            failures: 0,
        }
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig(1.234567891234), "1.23456789");
        assert_eq!(format_sig(0.0123456789012), "0.0123456789");
        assert_eq!(format_sig(20.0), "20");
        assert_eq!(format_sig(-5.0), "-5");
        assert_eq!(format_sig(0.0), "0");
    }

    #[test]
    fn one_row_gives_two_lines() {
        let text = to_csv(&[row("robust", 10.0)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(
            lines[1],
            "robust,snr_db,10,10,1.23456789,0.0123456789,12.5,0"
        );
    }

    #[test]
    fn csv_and_json_carry_the_same_numbers() {
        let rows = vec![row("robust", 10.0), row("tx_selection", -5.0)];
        let from_csv = parse_csv(&to_csv(&rows)).unwrap();
        let from_json: Vec<ResultRow> = serde_json::from_str(&to_json(&rows).unwrap()).unwrap();
        assert_eq!(from_csv, from_json);
    }

    #[test]
    fn empty_rows_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        assert!(matches!(
            emit_results(&[], OutputFormat::Csv, &path),
            Err(Error::EmptyResults)
        ));
        assert!(!path.exists());
    }

    #[test]
    fn trial_seeds_differ_and_repeat() {
        assert_eq!(trial_seed(7, 1, 2), trial_seed(7, 1, 2));
        assert_ne!(trial_seed(7, 1, 2), trial_seed(7, 2, 1));
        assert_ne!(trial_seed(7, 0, 0), trial_seed(8, 0, 0));
        for s in 0..50 {
            assert!(trial_delay(s, 2) <= 2);
        }
    }

    #[test]
    fn presets_match_figures() {
        let f2 = ExperimentPlan::fig2();
        assert_eq!(f2.base_config.num_ues, 2);
        assert_eq!(f2.config_at(20.0).unwrap().power_rrh1, 100.0);
        let f3 = ExperimentPlan::fig3();
        let c = f3.config_at(6.0).unwrap();
        assert_eq!(
            (
                c.num_ues,
                c.antennas_rrh1,
                c.antennas_rrh2,
                c.antennas_ue.len()
            ),
            (6, 3, 3, 6)
        );
        assert_eq!(c.power_rrh1, 10.0);
        assert!(f3.config_at(3.0).is_err());
    }

    #[test]
    fn config_text_overrides_preset() {
        let text = "# demo\npreset = fig2\nworst_case_delay = 2\nsweep_values = 0, 10\nschemes = robust, non_cooperative\ntrials = 3 # few\n";
        let plan = ExperimentPlan::from_config_text(text, None).unwrap();
        assert_eq!(plan.base_config.worst_case_delay, 2);
        assert_eq!(plan.sweep_values, vec![0.0, 10.0]);
        assert_eq!(plan.schemes, vec![Scheme::Robust, Scheme::NonCooperative]);
        assert_eq!(plan.trials, 3);
        assert!(ExperimentPlan::from_config_text("bogus = 1", None).is_err());
        assert!(ExperimentPlan::from_config_text("trials", None).is_err());
        let mut bad = plan.clone();
        bad.trials = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn tiny_sweep_aggregates_trials() {
        let mut plan = ExperimentPlan::fig2();
        plan.sweep_values = vec![0.0];
        plan.trials = 2;
        plan.cccp.max_outer = 3;
        let out = run_sweep(&plan).unwrap();
        assert_eq!(out.rows.len(), 5);
        assert_eq!(out.trials.len(), 10);
        for r in &out.rows {
            let mine: Vec<f64> = out
                .trials
                .iter()
                .filter(|t| t.scheme == r.scheme)
                .filter_map(|t| t.min_rate)
                .collect();
            assert_eq!(r.trials + r.failures, 2);
            assert!(
                (r.avg_min_rate_bits - mine.iter().sum::<f64>() / mine.len() as f64).abs() < 1e-12
            );
        }
    }
}
