//! Experiment runner behind the `evh` binary.

pub mod config;
mod experiments;

pub use config::{parse_ladder, ConfigError, Experiment, ExperimentConfig, Ladder, Tolerances};

use serde_json::{json, Value};
use std::path::Path;
use thiserror::Error;

/// Exit status of a run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] evh::Error),
    /// A numerical check the run itself performs came out wrong.
    #[error("check failed: {0}")]
    Check(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Core(e) if e.is_hypothesis_violation() => EXIT_HYPOTHESIS,
            _ => EXIT_INTERNAL,
        }
    }

    /// Name of the violated hypothesis, if this is a violation.
    pub fn violated_condition(&self) -> Option<String> {
        use evh::homog::HomogError;
        use evh::models::ModelsError;
        let RunError::Core(e) = self else { return None };
        if !e.is_hypothesis_violation() {
            return None;
        }
        Some(match e {
            evh::Error::Homog(HomogError::HypothesisViolated { condition, .. }) => {
                condition.clone()
            }
            evh::Error::Models(ModelsError::ConditionViolated { block, .. }) => block.clone(),
            evh::Error::Law(_) => "zero-order".into(),
            evh::Error::Decomp(_) | evh::Error::Homog(_) => "structure".into(),
            evh::Error::Evolve(_) => "solution theory".into(),
            _ => "hypothesis".into(),
        })
    }
}

/// A CSV table; cells are already formatted.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
    }

    /// Cell in `column` of the first row whose first cell is `key`.
    pub fn lookup(&self, key: &str, column: &str) -> Option<&str> {
        let c = self.header.iter().position(|h| h == column)?;
        self.rows
            .iter()
            .find(|r| r[0] == key)
            .map(|r| r[c].as_str())
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub result: Value,
    pub tables: Vec<Table>,
}

/// Runs the configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    cfg.validate()?;
    match cfg.experiment()? {
        Experiment::Certify => experiments::certify(cfg),
        Experiment::HomogenizeOde => experiments::homogenize_ode(cfg),
        Experiment::HomogenizePde => experiments::homogenize_pde(cfg),
        Experiment::HeatSweep => experiments::heat_sweep(cfg),
        Experiment::Counterexample => experiments::counterexample(cfg),
        Experiment::Causality => experiments::causality(cfg),
    }
}

/// The `result.json` document of a finished run.
pub fn result_document(cfg: &ExperimentConfig, outcome: &Result<Outcome, RunError>) -> Value {
    let name = cfg.experiment.map(Experiment::name).unwrap_or("none");
    let config = serde_json::to_value(cfg).unwrap_or(Value::Null);
    match outcome {
        Ok(o) => {
            json!({ "experiment": name, "status": "ok", "config": config, "result": o.result })
        }
        Err(e) => {
            let status = if e.exit_code() == EXIT_HYPOTHESIS {
                "hypothesis_violated"
            } else {
                "error"
            };
            json!({
                "experiment": name,
                "status": status,
                "config": config,
                "violated_condition": e.violated_condition(),
                "message": e.to_string(),
            })
        }
    }
}

/// Writes `result.json` and `tables/*.csv` under `dir`.
pub fn write_artifacts(dir: &Path, doc: &Value, tables: &[Table]) -> Result<(), RunError> {
    let io = |e: std::io::Error| RunError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir.join("tables")).map_err(io)?;
    let mut text = evh::json::to_string_pretty(doc);
    text.push('\n');
    std::fs::write(dir.join("result.json"), text).map_err(io)?;
    for t in tables {
        std::fs::write(
            dir.join("tables").join(format!("{}.csv", t.name)),
            t.to_csv(),
        )
        .map_err(io)?;
    }
    Ok(())
}

/// Runs, writes the artifacts and returns the exit code.
pub fn execute(cfg: &ExperimentConfig) -> (i32, Result<Outcome, RunError>) {
    let outcome = run(cfg);
    let doc = result_document(cfg, &outcome);
    let tables = outcome.as_ref().map(|o| o.tables.as_slice()).unwrap_or(&[]);
    if let Err(e) = write_artifacts(&cfg.output_dir(), &doc, tables) {
        return (EXIT_INTERNAL, Err(e));
    }
    let code = match &outcome {
        Ok(_) => EXIT_OK,
        Err(e) => e.exit_code(),
    };
    (code, outcome)
}
