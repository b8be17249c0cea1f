use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::RationalTF;

/// Power channel through which the damping controller acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    P,
    Q,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::P, Channel::Q];
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::P => f.write_str("P"),
            Channel::Q => f.write_str("Q"),
        }
    }
}

/// One network configuration: frequency deviation responses to active and
/// reactive power injections at the plant's point of connection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkScenario {
    pub id: i64,
    pub label: String,
    pub plant_p: RationalTF,
    pub plant_q: RationalTF,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded: Option<String>,
}

impl NetworkScenario {
    pub fn new(id: i64, label: impl Into<String>, plant_p: RationalTF, plant_q: RationalTF) -> Result<Self> {
        let scn = Self {
            id,
            label: label.into(),
            plant_p,
            plant_q,
            excluded: None,
        };
        scn.validate()?;
        Ok(scn)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.plant_p.is_proper() || !self.plant_q.is_proper() {
            return Err(Error::InvariantViolation(format!(
                "scenario {} has an improper plant",
                self.id
            )));
        }
        Ok(())
    }

    pub fn plant(&self, channel: Channel) -> &RationalTF {
        match channel {
            Channel::P => &self.plant_p,
            Channel::Q => &self.plant_q,
        }
    }

    pub fn is_excluded(&self) -> bool {
        self.excluded.is_some()
    }
}

/// Checks that ids are unique within a family.
pub fn validate_family(scenarios: &[NetworkScenario]) -> Result<()> {
    let mut ids: Vec<i64> = scenarios.iter().map(|s| s.id).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvariantViolation(format!("duplicate scenario id {}", w[0])));
    }
    scenarios.iter().try_for_each(NetworkScenario::validate)
}
