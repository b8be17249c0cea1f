use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use podtune_core::bench::reference_benchmark;
use podtune_core::pipeline::{
    self, exit_code, export_report, load_scenarios, parse_band, parse_gain_grid, run_pipeline, scenarios_json, DesignArtifact,
    PipelineConfig, RunManifest, DESIGN_FILE, DESIGN_SET_FILE, STABILITY_FILE, SWEEP_FILE,
};
use podtune_core::verify::{stability_csv, sweep_csv};

/// Reconfiguration-aware power oscillation damping controller synthesis.
#[derive(Parser)]
#[command(name = "podtune", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect oscillation modes, build and filter the design set.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Also write every plant frequency response as CSV.
        #[arg(long)]
        emit_fr: bool,
    },
    /// Fit both compensators and write design.json.
    Design {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the loop gain on the nominal scenario for a saved design.
    SweepGain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        design: PathBuf,
    },
    /// Check closed-loop stability of a saved design on every scenario.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        design: PathBuf,
        /// Gain for both channels; defaults to the design's selected gain.
        #[arg(long)]
        gain: Option<f64>,
    },
    /// Write the reference benchmark family as a scenario file.
    Bench {
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline: analyze, design, sweep, verify, manifest.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Re-emit a finished run's reports.
    Export {
        #[arg(long)]
        manifest: PathBuf,
        /// csv or json
        #[arg(long, default_value = "json")]
        format: String,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenarios: PathBuf,
    /// Oscillation band in Hz, lo:hi.
    #[arg(long, default_value = "0.1:2")]
    band: String,
    /// Lead-lag stages for the active-power channel.
    #[arg(long, default_value_t = 3)]
    order_p: usize,
    /// Lead-lag stages for the reactive-power channel.
    #[arg(long, default_value_t = 4)]
    order_q: usize,
    /// Phase error exponent.
    #[arg(long, default_value_t = 3)]
    m: u32,
    /// start:stop:step or a comma list.
    #[arg(long, default_value = "0:3:0.1")]
    gain_grid: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "podtune-out")]
    out: PathBuf,
    /// Local search strategy.
    #[arg(long, default_value = "nelder-mead")]
    optimizer: String,
    /// Design set exclusion policy.
    #[arg(long, default_value = "cluster-median")]
    policy: String,
}

impl Common {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::new(&self.scenarios, &self.out);
        cfg.band_hz = parse_band(&self.band)?;
        cfg.order_p = self.order_p;
        cfg.order_q = self.order_q;
        cfg.m = self.m;
        cfg.gain_grid = parse_gain_grid(&self.gain_grid)?;
        cfg.seed = self.seed;
        cfg.optimizer = self.optimizer.clone();
        cfg.policy = self.policy.clone();
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write(dir: &Path, name: &str, content: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_design(path: &Path) -> Result<DesignArtifact> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(DesignArtifact::from_json(&text)?)
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Analyze { common, emit_fr } => {
            let cfg = common.config()?;
            let scenarios = load_scenarios(&cfg.scenario_path)?;
            let ds = pipeline::analyze(&scenarios, &cfg)?;
            for s in ds.scenarios.iter().filter(|s| s.excluded.is_some()) {
                println!("excluded scenario {}: {}", s.id, s.excluded.as_deref().unwrap_or_default());
            }
            println!(
                "{} of {} scenarios kept; {} P and {} Q design points",
                ds.scenario_count,
                scenarios.len(),
                ds.points_p.len(),
                ds.points_q.len()
            );
            write(&cfg.out_dir, DESIGN_SET_FILE, &ds.to_csv())?;
            if emit_fr {
                for (name, csv) in pipeline::plant_fr_csvs(&scenarios)? {
                    write(&cfg.out_dir, &name, &csv)?;
                }
            }
            Ok(0)
        }
        Command::Design { common } => {
            let cfg = common.config()?;
            let scenarios = load_scenarios(&cfg.scenario_path)?;
            let ds = pipeline::analyze(&scenarios, &cfg)?;
            let artifact = pipeline::design(&ds, &cfg)?;
            for (ch, r) in [("P", &artifact.report_p), ("Q", &artifact.report_q)] {
                println!(
                    "{ch}: mean error {:.2} deg, max {:.2} deg, max out-of-band |C| {:.6}",
                    r.mean_error, r.max_error, r.max_out_band_gain
                );
            }
            write(&cfg.out_dir, DESIGN_FILE, &artifact.to_json()?)?;
            Ok(0)
        }
        Command::SweepGain { common, design } => {
            let cfg = common.config()?;
            let scenarios = load_scenarios(&cfg.scenario_path)?;
            let artifact = load_design(&design)?;
            let nominal = scenarios
                .iter()
                .find(|s| !artifact.excluded.iter().any(|e| e.id == s.id))
                .ok_or(podtune_core::Error::AllScenariosExcluded)?;
            let (rows, k) = pipeline::sweep(nominal, &artifact.design, &cfg)?;
            for r in &rows {
                let zeta = r.min_damping.map_or("-".to_string(), |z| format!("{z:.4}"));
                let stop = r.stop_reason.as_deref().unwrap_or("");
                println!("K {:<6} min zeta {zeta:<8} max in-band {:.4} {stop}", r.gain, r.max_in_band());
            }
            match k {
                Some(k) => println!("selected gain {k} on scenario {}", nominal.id),
                None => println!("no stable gain on the grid"),
            }
            write(&cfg.out_dir, SWEEP_FILE, &sweep_csv(&rows))?;
            Ok(0)
        }
        Command::Verify { common, design, gain } => {
            let cfg = common.config()?;
            let scenarios = load_scenarios(&cfg.scenario_path)?;
            let artifact = load_design(&design)?;
            let d = match gain.or(artifact.selected_gain) {
                Some(k) => artifact.design.with_gain(k),
                None => artifact.design.clone(),
            };
            let report = pipeline::verify(&scenarios, &d, &cfg)?;
            for r in &report.rows {
                let zeta = r.min_in_band_zeta.map_or("-".to_string(), |z| format!("{z:.4}"));
                println!(
                    "scenario {:>3}: {} max Re {:+.4e} min in-band zeta {zeta}",
                    r.scenario_id,
                    if r.stable { "stable  " } else { "UNSTABLE" },
                    r.max_pole_re
                );
            }
            write(&cfg.out_dir, STABILITY_FILE, &stability_csv(&report))?;
            Ok(if report.all_stable { 0 } else { 1 })
        }
        Command::Bench { out } => {
            let text = scenarios_json(&reference_benchmark())?;
            match out {
                Some(path) => {
                    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                        fs::create_dir_all(dir)?;
                    }
                    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                    println!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Run { common } => {
            let cfg = common.config()?;
            let manifest = run_pipeline(&cfg)?;
            for s in &manifest.stages {
                println!("{:<8} {}", s.stage, s.detail);
            }
            for f in &manifest.files {
                println!("{}  {}", f.sha256, cfg.out_dir.join(&f.name).display());
            }
            Ok(if manifest.all_stable == Some(true) { 0 } else { 1 })
        }
        Command::Export { manifest, format } => {
            let m = RunManifest::load(&manifest).with_context(|| format!("reading {}", manifest.display()))?;
            for path in export_report(&m, &format)? {
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<podtune_core::Error>().map_or(5, exit_code);
            ExitCode::from(code as u8)
        }
    }
}
