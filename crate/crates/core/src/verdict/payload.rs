use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Lexicons;
use crate::extract::{EncodedPayload, IpClass};
use crate::intel::IntelVerdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayloadClass {
    Benign,
    Suspicious,
    Malicious,
}

/// Classification plus the reasons behind it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadDecision {
    pub class: PayloadClass,
    /// Embedded IPs with at least one malicious verdict.
    pub malicious_ips: Vec<String>,
    pub exec_match: Option<String>,
}

/// Public embedded IPs of a payload, in order of appearance, deduplicated.
pub fn public_ips(p: &EncodedPayload) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for ip in &p.embedded_ips {
        if ip.classification == IpClass::Public && !out.contains(&ip.literal) {
            out.push(ip.literal.clone());
        }
    }
    out
}

/// A payload pointing somewhere public is suspicious; it becomes malicious
/// when one of its IPs is known bad or it carries an execution pattern.
pub fn classify_payload(
    p: &EncodedPayload,
    intel: &BTreeMap<String, Vec<IntelVerdict>>,
    lex: &Lexicons,
) -> PayloadDecision {
    let ips = public_ips(p);
    if ips.is_empty() && p.embedded_urls.is_empty() {
        return PayloadDecision {
            class: PayloadClass::Benign,
            malicious_ips: Vec::new(),
            exec_match: None,
        };
    }
    let malicious_ips: Vec<String> = ips
        .into_iter()
        .filter(|ip| intel.get(ip).is_some_and(|vs| vs.iter().any(|v| v.malicious)))
        .collect();
    let exec_match = if p.printable {
        lex.exec_match(&p.decoded_text()).map(str::to_string)
    } else {
        None
    };
    let class = if !malicious_ips.is_empty() || exec_match.is_some() {
        PayloadClass::Malicious
    } else {
        PayloadClass::Suspicious
    };
    PayloadDecision {
        class,
        malicious_ips,
        exec_match,
    }
}
