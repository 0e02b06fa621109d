use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Diagnostic only; nothing was asserted.
    Measured,
}

/// Outcome of one numerical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    /// The statement being certified, in words.
    #[serde(rename = "paper_ref")]
    pub reference: String,
    pub status: Status,
    pub values: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub seed: u64,
    pub config_hash: String,
}

impl CheckReport {
    pub fn new(check_id: impl Into<String>, reference: impl Into<String>, tolerance: f64) -> Self {
        CheckReport {
            check_id: check_id.into(),
            reference: reference.into(),
            status: Status::Measured,
            values: BTreeMap::new(),
            tolerance,
            seed: 0,
            config_hash: String::new(),
        }
    }

    pub fn value(&mut self, name: impl Into<String>, v: f64) -> &mut Self {
        self.values.insert(name.into(), v);
        self
    }

    pub fn flag(&mut self, name: impl Into<String>, v: bool) -> &mut Self {
        self.value(name, f64::from(u8::from(v)))
    }

    /// Pass if every assertion held, fail otherwise.
    pub fn assert_all(&mut self, held: bool) -> &mut Self {
        self.status = if held { Status::Pass } else { Status::Fail };
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let mut r = CheckReport::new("ground_state", "ground-state energy bound", 1e-12);
        r.value("energy", -1.5).assert_all(true);
        let text = serde_json::to_string(&r).unwrap();
        let order: Vec<usize> = ["check_id", "paper_ref", "status", "values", "tolerance", "seed", "config_hash"]
            .iter()
            .map(|k| text.find(&format!("\"{k}\"")).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
        assert!(text.contains("\"status\":\"pass\""));
        let back: CheckReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
