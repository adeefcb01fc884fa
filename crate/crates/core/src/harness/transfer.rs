use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{adversarial_stem, load_report};
use crate::error::{Result, StbaError};
use crate::optimizer::AttackResult;
use crate::oracle::Oracle;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferOutcome {
    /// Successful source adversarials scored on the target.
    pub evaluated: usize,
    /// Those the target also misclassifies.
    pub transferred: usize,
    /// `transferred / evaluated`, or `None` with no successes.
    pub fraction: Option<f64>,
}

/// Scores every successful adversarial saved under `report_dir` on `target`.
///
/// The campaign must have been run with saved adversarials; a missing file
/// is an error rather than a skipped item.
pub fn transfer_check(report_dir: &Path, target: &dyn Oracle) -> Result<TransferOutcome> {
    let report = load_report(report_dir)?;
    let mut evaluated = 0;
    let mut transferred = 0;
    for item in report.per_item.iter().filter(|i| i.success) {
        let path = adversarial_stem(report_dir, item.index).with_extension("json");
        if !path.is_file() {
            return Err(StbaError::MissingAdversarial(path));
        }
        let bytes = std::fs::read(&path).map_err(|e| StbaError::io(&path, e))?;
        let result: AttackResult = serde_json::from_slice(&bytes)?;
        let scores = target.scores(&result.adversarial)?;
        evaluated += 1;
        if scores.argmax() != item.label {
            transferred += 1;
        }
    }
    Ok(TransferOutcome {
        evaluated,
        transferred,
        fraction: (evaluated > 0).then(|| transferred as f64 / evaluated as f64),
    })
}
