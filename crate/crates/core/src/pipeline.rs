//! File-to-file orchestration: scenarios in, design and verification
//! artifacts plus a hashed manifest out.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{aggregate, analysis_grid, exclude, DesignSet, PeakOptions, PolicyRegistry, DEFAULT_POLICY};
use crate::design::{optimize_compensator, BandPass, DesignOptions, DesignReport, SearchRegistry};
use crate::error::{Error, Result};
use crate::lti::{rad_to_hz, FrequencyResponse};
use crate::scenario::{validate_family, Channel, NetworkScenario};
use crate::verify::{
    gain_sweep, select_gain, stability_csv, sweep_csv, verify_all_in, GainSweepRow, PODControllerDesign, StabilityReport,
    SweepOptions,
};

pub const DESIGN_FILE: &str = "design.json";
pub const DESIGN_SET_FILE: &str = "design_set.csv";
pub const SWEEP_FILE: &str = "gain_sweep.csv";
pub const STABILITY_FILE: &str = "stability.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
/// Subdirectory of the run directory that receives exports.
pub const EXPORT_DIR: &str = "export";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub scenarios: Vec<NetworkScenario>,
}

/// Parses and validates a scenario document.
pub fn parse_scenarios(text: &str) -> Result<Vec<NetworkScenario>> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
    if file.scenarios.is_empty() {
        return Err(Error::ParseError("scenario file lists no scenarios".into()));
    }
    for s in &file.scenarios {
        s.validate().map_err(|e| Error::ParseError(e.to_string()))?;
    }
    validate_family(&file.scenarios).map_err(|e| Error::ParseError(e.to_string()))?;
    Ok(file.scenarios)
}

pub fn load_scenarios(path: &Path) -> Result<Vec<NetworkScenario>> {
    let text = fs::read_to_string(path).map_err(|e| Error::ParseError(format!("{}: {e}", path.display())))?;
    parse_scenarios(&text)
}

pub fn scenarios_json(scenarios: &[NetworkScenario]) -> Result<String> {
    let file = ScenarioFile {
        scenarios: scenarios.to_vec(),
    };
    let mut s = serde_json::to_string_pretty(&file).map_err(|e| Error::NumericalFailure(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub scenario_path: PathBuf,
    pub band_hz: (f64, f64),
    pub order_p: usize,
    pub order_q: usize,
    pub m: u32,
    pub gain_grid: Vec<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Local search strategy name.
    pub optimizer: String,
    /// Exclusion policy name.
    pub policy: String,
}

impl PipelineConfig {
    pub fn new(scenario_path: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            scenario_path: scenario_path.into(),
            band_hz: (0.1, 2.0),
            order_p: 3,
            order_q: 4,
            m: 3,
            gain_grid: parse_gain_grid("0:3:0.1").expect("default grid parses"),
            seed: 0,
            out_dir: out_dir.into(),
            optimizer: crate::design::search::DEFAULT_SEARCH.to_string(),
            policy: DEFAULT_POLICY.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvariantViolation(msg));
        let (lo, hi) = self.band_hz;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return bad(format!("band must satisfy 0 < lo < hi, got {lo}:{hi}"));
        }
        if self.order_p < 1 || self.order_q < 1 {
            return bad("orders must be at least 1".into());
        }
        if self.gain_grid.is_empty() || self.gain_grid.iter().any(|k| !(*k >= 0.0) || !k.is_finite()) {
            return bad("gain grid must be a non-empty list of non-negative gains".into());
        }
        SearchRegistry::default().get(&self.optimizer)?;
        PolicyRegistry::default().get(&self.policy)?;
        self.design_options(Channel::P).validate()
    }

    pub fn design_options(&self, ch: Channel) -> DesignOptions {
        let stages = match ch {
            Channel::P => self.order_p,
            Channel::Q => self.order_q,
        };
        DesignOptions {
            exponent_m: self.m,
            seed: self.seed,
            search: self.optimizer.clone(),
            ..DesignOptions::default().with_band(self.band_hz)
        }
        .with_stages(stages)
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            band_hz: self.band_hz,
            ..SweepOptions::default()
        }
    }
}

/// `lo:hi` in Hz.
pub fn parse_band(s: &str) -> Result<(f64, f64)> {
    let v = parse_numbers(s)?;
    match v[..] {
        [lo, hi] if lo > 0.0 && hi > lo && hi.is_finite() => Ok((lo, hi)),
        _ => Err(Error::InvariantViolation(format!("band must be lo:hi with 0 < lo < hi, got `{s}`"))),
    }
}

/// `start:stop:step` (inclusive of `stop` up to rounding) or a comma list.
pub fn parse_gain_grid(s: &str) -> Result<Vec<f64>> {
    if s.contains(',') || !s.contains(':') {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvariantViolation(format!("gain grid `{s}`: {e}")))?;
        return Ok(v);
    }
    let v = parse_numbers(s)?;
    let [start, stop, step] = v[..] else {
        return Err(Error::InvariantViolation(format!("gain grid must be start:stop:step, got `{s}`")));
    };
    if !(step > 0.0) || !(stop >= start) || !stop.is_finite() {
        return Err(Error::InvariantViolation(format!("gain grid `{s}` is empty or unbounded")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

fn parse_numbers(s: &str) -> Result<Vec<f64>> {
    s.split(':')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvariantViolation(format!("`{s}`: {e}")))
}

/// Contents of `design.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignArtifact {
    pub design: PODControllerDesign,
    pub report_p: DesignReport,
    pub report_q: DesignReport,
    pub selected_gain: Option<f64>,
    pub excluded: Vec<ExcludedScenario>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedScenario {
    pub id: i64,
    pub reason: String,
}

impl DesignArtifact {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::NumericalFailure(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))
    }
}

/// Peak analysis followed by the configured exclusion policy.
pub fn analyze(scenarios: &[NetworkScenario], cfg: &PipelineConfig) -> Result<DesignSet> {
    let peaks = PeakOptions {
        band_hz: cfg.band_hz,
        ..PeakOptions::default()
    };
    let ds = aggregate(scenarios, &BandPass::default(), &peaks)?;
    let registry = PolicyRegistry::default();
    exclude(&ds, registry.get(&cfg.policy)?)
}

/// Fits both channel compensators; the gains are left at their defaults.
pub fn design(ds: &DesignSet, cfg: &PipelineConfig) -> Result<DesignArtifact> {
    let (cp, report_p) = optimize_compensator(ds.points(Channel::P), &cfg.design_options(Channel::P))?;
    let (cq, report_q) = optimize_compensator(ds.points(Channel::Q), &cfg.design_options(Channel::Q))?;
    let excluded = ds
        .scenarios
        .iter()
        .filter_map(|s| {
            s.excluded.as_ref().map(|r| ExcludedScenario {
                id: s.id,
                reason: r.clone(),
            })
        })
        .collect();
    Ok(DesignArtifact {
        design: PODControllerDesign::new(BandPass::default(), cp, cq),
        report_p,
        report_q,
        selected_gain: None,
        excluded,
    })
}

/// The first scenario that survived exclusion stands in for the nominal
/// configuration.
pub fn nominal<'a>(scenarios: &'a [NetworkScenario], ds: &DesignSet) -> Result<&'a NetworkScenario> {
    let kept = ds.included_ids();
    scenarios
        .iter()
        .find(|s| kept.contains(&s.id))
        .ok_or(Error::AllScenariosExcluded)
}

pub fn sweep(scn: &NetworkScenario, d: &PODControllerDesign, cfg: &PipelineConfig) -> Result<(Vec<GainSweepRow>, Option<f64>)> {
    let rows = gain_sweep(scn, d, &cfg.gain_grid, &cfg.sweep_options())?;
    let k = select_gain(&rows);
    Ok((rows, k))
}

pub fn verify(scenarios: &[NetworkScenario], d: &PODControllerDesign, cfg: &PipelineConfig) -> Result<StabilityReport> {
    verify_all_in(scenarios, d, cfg.band_hz)
}

/// Plant frequency responses over the analysis grid, one CSV per scenario
/// and channel, keyed by file name.
pub fn plant_fr_csvs(scenarios: &[NetworkScenario]) -> Result<Vec<(String, String)>> {
    let grid = analysis_grid();
    let mut out = Vec::new();
    for s in scenarios {
        for ch in Channel::BOTH {
            let fr = FrequencyResponse::from_tf(s.plant(ch), &grid)?;
            out.push((format!("fr_{}_{}.csv", s.id, ch), fr.to_csv()));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStatus {
    pub stage: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: PipelineConfig,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub stages: Vec<StageStatus>,
    pub selected_gain: Option<f64>,
    pub all_stable: Option<bool>,
    /// Every artifact written next to the manifest.
    pub files: Vec<FileRecord>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::ParseError(e.to_string()))
    }

    pub fn file(&self, name: &str) -> Option<&FileRecord> {
        self.files.iter().find(|f| f.name == name)
    }
}

fn unix_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<FileRecord> {
    fs::write(dir.join(name), content)?;
    Ok(FileRecord {
        name: name.to_string(),
        sha256: sha256_hex(content.as_bytes()),
        bytes: content.len(),
    })
}

/// Process exit status for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ParseError(_) => 2,
        Error::AllScenariosExcluded => 3,
        Error::NoFeasiblePoint => 4,
        _ => 5,
    }
}

/// Runs analysis, exclusion, design, the nominal gain sweep and
/// verification. Input and configuration problems fail before anything is
/// written; later failures still leave a manifest describing how far the
/// run got.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunManifest> {
    let started = unix_ms();
    cfg.validate()?;
    let scenarios = load_scenarios(&cfg.scenario_path)?;
    fs::create_dir_all(&cfg.out_dir)?;

    let mut manifest = RunManifest {
        tool: "podtune".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        started_unix_ms: started,
        finished_unix_ms: 0,
        stages: vec![StageStatus {
            stage: "load".into(),
            ok: true,
            detail: format!("{} scenarios", scenarios.len()),
        }],
        selected_gain: None,
        all_stable: None,
        files: Vec::new(),
    };
    let outcome = run_stages(cfg, &scenarios, &mut manifest);
    if let Err(e) = &outcome {
        manifest.stages.push(StageStatus {
            stage: "failed".into(),
            ok: false,
            detail: e.to_string(),
        });
    }
    manifest.finished_unix_ms = unix_ms();
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::NumericalFailure(e.to_string()))?;
    text.push('\n');
    fs::write(cfg.out_dir.join(MANIFEST_FILE), text)?;
    outcome.map(|_| manifest)
}

fn run_stages(cfg: &PipelineConfig, scenarios: &[NetworkScenario], manifest: &mut RunManifest) -> Result<()> {
    let dir = cfg.out_dir.as_path();
    let mut stage = |name: &str, detail: String| {
        manifest.stages.push(StageStatus {
            stage: name.into(),
            ok: true,
            detail,
        })
    };

    let ds = analyze(scenarios, cfg)?;
    let ds_csv = ds.to_csv();
    stage(
        "analyze",
        format!(
            "{} of {} scenarios kept, {} P / {} Q design points",
            ds.scenario_count,
            scenarios.len(),
            ds.points_p.len(),
            ds.points_q.len()
        ),
    );

    let mut artifact = design(&ds, cfg)?;
    stage(
        "design",
        format!(
            "mean error P {:.2} deg, Q {:.2} deg",
            artifact.report_p.mean_error, artifact.report_q.mean_error
        ),
    );

    let nominal = nominal(scenarios, &ds)?;
    let (rows, selected) = sweep(nominal, &artifact.design, cfg)?;
    let k = selected.unwrap_or(0.0);
    stage(
        "sweep",
        match selected {
            Some(k) => format!("scenario {}: selected gain {k}", nominal.id),
            None => format!("scenario {}: no stable gain on the grid, using 0", nominal.id),
        },
    );
    artifact.design = artifact.design.with_gain(k);
    artifact.selected_gain = selected;

    let report = verify(scenarios, &artifact.design, cfg)?;
    let unstable: Vec<String> = report.rows.iter().filter(|r| !r.stable).map(|r| r.scenario_id.to_string()).collect();
    stage(
        "verify",
        if unstable.is_empty() {
            "all scenarios stable".to_string()
        } else {
            format!("unstable scenarios: {}", unstable.join(" "))
        },
    );

    manifest.selected_gain = selected;
    manifest.all_stable = Some(report.all_stable);
    manifest.files = vec![
        write_file(dir, DESIGN_FILE, &artifact.to_json()?)?,
        write_file(dir, DESIGN_SET_FILE, &ds_csv)?,
        write_file(dir, SWEEP_FILE, &sweep_csv(&rows))?,
        write_file(dir, STABILITY_FILE, &stability_csv(&report))?,
    ];
    Ok(())
}

/// `channel,scenario_id,mode_index,f_hz,target_phase_deg,achieved_phase_deg,error_deg`
pub fn design_errors_csv(artifact: &DesignArtifact) -> String {
    let mut s = String::from("channel,scenario_id,mode_index,f_hz,target_phase_deg,achieved_phase_deg,error_deg\n");
    for r in [&artifact.report_p, &artifact.report_q] {
        for e in &r.per_point_error {
            let _ = writeln!(
                s,
                "{},{},{},{:.11e},{:.11e},{:.11e},{:.11e}",
                e.channel,
                e.scenario_id,
                e.mode_index,
                rad_to_hz(e.omega_o),
                e.target_phase,
                e.achieved_phase,
                e.error
            );
        }
    }
    s
}

fn csv_rows(text: &str) -> Value {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().map(|h| h.split(',').collect()).unwrap_or_default();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let mut obj = Map::new();
            for (k, v) in header.iter().zip(l.split(',')) {
                let value = match v {
                    "true" => Value::Bool(true),
                    "false" => Value::Bool(false),
                    _ => match v.parse::<f64>() {
                        Ok(x) => serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number),
                        Err(_) => Value::String(v.to_string()),
                    },
                };
                obj.insert(k.to_string(), value);
            }
            Value::Object(obj)
        })
        .collect();
    Value::Array(rows)
}

/// Re-emits a finished run's artifacts under `<out_dir>/export`: one CSV per
/// report kind, or a single consolidated `report.json`. Artifacts whose hash
/// no longer matches the manifest are refused.
pub fn export_report(manifest: &RunManifest, format: &str) -> Result<Vec<PathBuf>> {
    if format != "csv" && format != "json" {
        return Err(Error::UnknownFormat(format.to_string()));
    }
    let dir = manifest.config.out_dir.as_path();
    let read = |name: &str| -> Result<String> {
        let rec = manifest
            .file(name)
            .ok_or_else(|| Error::InvariantViolation(format!("manifest lists no {name}")))?;
        let text = fs::read_to_string(dir.join(name))?;
        if sha256_hex(text.as_bytes()) != rec.sha256 {
            return Err(Error::InvariantViolation(format!("{name} changed since the run")));
        }
        Ok(text)
    };
    let design_text = read(DESIGN_FILE)?;
    let artifact = DesignArtifact::from_json(&design_text)?;
    let design_set = read(DESIGN_SET_FILE)?;
    let sweep = read(SWEEP_FILE)?;
    let stability = read(STABILITY_FILE)?;
    let errors = design_errors_csv(&artifact);

    let out = dir.join(EXPORT_DIR);
    fs::create_dir_all(&out)?;
    let files: Vec<(&str, String)> = if format == "csv" {
        vec![
            ("design_set.csv", design_set),
            ("design_errors.csv", errors),
            ("gain_sweep.csv", sweep),
            ("stability.csv", stability),
        ]
    } else {
        let doc = json!({
            "version": manifest.version,
            "selected_gain": manifest.selected_gain,
            "all_stable": manifest.all_stable,
            "design": serde_json::from_str::<Value>(&design_text).map_err(|e| Error::ParseError(e.to_string()))?,
            "design_set": csv_rows(&design_set),
            "design_errors": csv_rows(&errors),
            "gain_sweep": csv_rows(&sweep),
            "stability": csv_rows(&stability),
        });
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::NumericalFailure(e.to_string()))?;
        text.push('\n');
        vec![("report.json", text)]
    };
    files
        .into_iter()
        .map(|(name, content)| {
            let path = out.join(name);
            fs::write(&path, content)?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_grid_forms() {
        let g = parse_gain_grid("0:3:0.1").unwrap();
        assert_eq!(g.len(), 31);
        assert!((g[30] - 3.0).abs() < 1e-12);
        assert_eq!(parse_gain_grid("0.5, 1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        assert!(parse_gain_grid("1:0:0.1").is_err());
        assert!(parse_gain_grid("0:1:0").is_err());
    }

    #[test]
    fn band_form() {
        assert_eq!(parse_band("0.1:2").unwrap(), (0.1, 2.0));
        assert!(parse_band("2:0.1").is_err());
        assert!(parse_band("0.1").is_err());
    }

    #[test]
    fn scenario_file_errors() {
        assert!(matches!(parse_scenarios("{\"scenarios\": ["), Err(Error::ParseError(_))));
        assert!(matches!(parse_scenarios("{\"scenarios\": []}"), Err(Error::ParseError(_))));
        let one = r#"{"id": 1, "label": "a", "plant_p": {"num": [1], "den": [1, 1]}, "plant_q": {"num": [1], "den": [1, 2]}}"#;
        assert_eq!(parse_scenarios(&format!("{{\"scenarios\": [{one}]}}")).unwrap().len(), 1);
        assert!(matches!(
            parse_scenarios(&format!("{{\"scenarios\": [{one}, {one}]}}")),
            Err(Error::ParseError(_))
        ));
        let improper = r#"{"scenarios": [{"id": 1, "label": "a", "plant_p": {"num": [1, 0, 0], "den": [1, 1]}, "plant_q": {"num": [1], "den": [1, 2]}}]}"#;
        assert!(matches!(parse_scenarios(improper), Err(Error::ParseError(_))));
    }

    #[test]
    fn scenario_round_trip() {
        let fam = crate::bench::reference_benchmark();
        let back = parse_scenarios(&scenarios_json(&fam).unwrap()).unwrap();
        assert_eq!(back, fam);
    }

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [
            exit_code(&Error::ParseError(String::new())),
            exit_code(&Error::AllScenariosExcluded),
            exit_code(&Error::NoFeasiblePoint),
            exit_code(&Error::EmptyGrid),
        ];
        assert_eq!(codes, [2, 3, 4, 5]);
    }

    #[test]
    fn csv_rows_typed() {
        let v = csv_rows("a,b,c\n1.5,true,P\n");
        assert_eq!(v, json!([{"a": 1.5, "b": true, "c": "P"}]));
    }

    #[test]
    fn unknown_export_format() {
        let m = RunManifest {
            tool: "podtune".into(),
            version: "0".into(),
            config: PipelineConfig::new("x.json", "out"),
            started_unix_ms: 0,
            finished_unix_ms: 0,
            stages: Vec::new(),
            selected_gain: None,
            all_stable: None,
            files: Vec::new(),
        };
        assert!(matches!(export_report(&m, "xml"), Err(Error::UnknownFormat(_))));
    }
}
