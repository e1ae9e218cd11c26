//! Per-server client limit assignment.
//!
//! A server with limit `x_i` and client demands `r^(j)` hands each client a
//! limit `x^(j)`. Two policies:
//!
//! * [`proportional_split`] scales every demand by `x_i / Σ r^(j)`, so all
//!   clients see the same throttled ratio.
//! * [`waterfill_split`] caps every client at a common water level `l`
//!   solving `Σ_j min(r^(j), l) = x_i`; small demands pass untouched and only
//!   the large ones are throttled. The accepted vector is max-min fair.
//!
//! In both cases the accepted total `Σ_j min(x^(j), r^(j))` equals
//! `min(x_i, Σ_j r^(j))`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThrottleError {
    #[error("a server needs at least one client")]
    NoClients,
    #[error("client {client}: demand {value} must be finite and >= 0")]
    InvalidDemand { client: usize, value: f64 },
    #[error("server limit {0} must be finite and >= 0")]
    InvalidLimit(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientDemands {
    requests: Vec<f64>,
    server_limit: f64,
}

impl ClientDemands {
    pub fn new(requests: Vec<f64>, server_limit: f64) -> Result<Self, ThrottleError> {
        if requests.is_empty() {
            return Err(ThrottleError::NoClients);
        }
        if let Some((client, &value)) =
            requests.iter().enumerate().find(|(_, r)| !(r.is_finite() && **r >= 0.0))
        {
            return Err(ThrottleError::InvalidDemand { client, value });
        }
        if !(server_limit.is_finite() && server_limit >= 0.0) {
            return Err(ThrottleError::InvalidLimit(server_limit));
        }
        Ok(Self { requests, server_limit })
    }

    pub fn requests(&self) -> &[f64] {
        &self.requests
    }

    pub fn server_limit(&self) -> f64 {
        self.server_limit
    }

    pub fn total(&self) -> f64 {
        self.requests.iter().sum()
    }

    pub fn oversubscribed(&self) -> bool {
        self.total() > self.server_limit
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Per-client limits `x^(j)`.
    pub limits: Vec<f64>,
    /// Common cap, set only by waterfilling on an over-subscribed server.
    pub water_level: Option<f64>,
}

impl Allocation {
    /// Traffic actually served per client, `min(x^(j), r^(j))`.
    pub fn accepted(&self, demands: &ClientDemands) -> Vec<f64> {
        self.limits.iter().zip(demands.requests()).map(|(x, r)| x.min(*r)).collect()
    }

    pub fn accepted_total(&self, demands: &ClientDemands) -> f64 {
        self.accepted(demands).iter().sum()
    }
}

/// Uniform throttled ratio: `x^(j) = (x_i / r_i) r^(j)` when over-subscribed.
pub fn proportional_split(d: &ClientDemands) -> Allocation {
    let total = d.total();
    let limits = if total <= d.server_limit {
        d.requests.clone()
    } else {
        let ratio = d.server_limit / total;
        d.requests.iter().map(|r| ratio * r).collect()
    };
    Allocation { limits, water_level: None }
}

/// The level `l ≥ 0` with `Σ_j min(r^(j), l) = x_i`, by one pass over the
/// sorted demands. `None` when the demand fits under the limit.
pub fn water_level(d: &ClientDemands) -> Option<f64> {
    if !d.oversubscribed() {
        return None;
    }
    let mut sorted = d.requests.clone();
    sorted.sort_by(f64::total_cmp);
    let c = sorted.len();
    let mut below = 0.0;
    for (k, &r) in sorted.iter().enumerate() {
        // Clients k.. all sit at the level; the first k are fully served.
        let level = (d.server_limit - below) / (c - k) as f64;
        if level <= r {
            return Some(level.max(0.0));
        }
        below += r;
    }
    unreachable!("over-subscribed demand always crosses the level")
}

/// Throttles the largest demands first; every client gets limit `l`.
pub fn waterfill_split(d: &ClientDemands) -> Allocation {
    match water_level(d) {
        None => Allocation { limits: d.requests.clone(), water_level: None },
        Some(l) => Allocation { limits: vec![l; d.requests.len()], water_level: Some(l) },
    }
}

/// The slack recurrence exactly as it is usually written in pseudocode
/// (`s := s - r↑_j + l; l := s / (c - j) + l`). It re-adds redistributed
/// slack and therefore over-allocates: on demands `(1, 2, 3, 10)` with limit
/// 8 it returns level 3 and serves 9. Kept only for comparison.
pub fn waterfill_split_legacy_recurrence(d: &ClientDemands) -> Allocation {
    if !d.oversubscribed() {
        return Allocation { limits: d.requests.clone(), water_level: None };
    }
    let mut sorted = d.requests.clone();
    sorted.sort_by(f64::total_cmp);
    let c = sorted.len();
    let mut slack = 0.0;
    let mut level = d.server_limit / c as f64;
    for (idx, &r) in sorted.iter().enumerate() {
        let j = idx + 1;
        if level > r && j < c {
            slack = slack - r + level;
            level += slack / (c - j) as f64;
        }
    }
    Allocation { limits: vec![level; c], water_level: Some(level) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demands(r: &[f64], limit: f64) -> ClientDemands {
        ClientDemands::new(r.to_vec(), limit).unwrap()
    }

    #[test]
    fn proportional_examples() {
        assert_eq!(proportional_split(&demands(&[2.0, 6.0], 4.0)).limits, vec![1.0, 3.0]);
        assert_eq!(proportional_split(&demands(&[2.0, 6.0], 10.0)).limits, vec![2.0, 6.0]);
        assert_eq!(proportional_split(&demands(&[5.0], 0.0)).limits, vec![0.0]);
        assert_eq!(proportional_split(&demands(&[0.0, 0.0], 0.0)).limits, vec![0.0, 0.0]);
    }

    #[test]
    fn water_level_examples() {
        assert_eq!(water_level(&demands(&[1.0, 2.0, 3.0, 10.0], 8.0)), Some(2.5));
        assert_eq!(water_level(&demands(&[7.0; 4], 10.0)), Some(2.5));
        assert_eq!(water_level(&demands(&[4.0, 4.0], 8.0)), None);
        assert_eq!(water_level(&demands(&[10.0, 3.0, 1.0, 2.0], 8.0)), Some(2.5));
    }

    #[test]
    fn waterfill_examples() {
        let d = demands(&[1.0, 2.0, 3.0, 10.0], 8.0);
        let a = waterfill_split(&d);
        assert_eq!(a.water_level, Some(2.5));
        assert_eq!(a.accepted(&d), vec![1.0, 2.0, 2.5, 2.5]);
        assert_eq!(a.accepted_total(&d), 8.0);

        let d = demands(&[1.0, 1.0, 1.0], 9.0);
        let a = waterfill_split(&d);
        assert_eq!((a.limits.clone(), a.water_level), (vec![1.0; 3], None));

        let d = demands(&[0.0, 5.0], 3.0);
        let a = waterfill_split(&d);
        assert_eq!(a.water_level, Some(3.0));
        assert_eq!(a.accepted(&d), vec![0.0, 3.0]);
    }

    #[test]
    fn legacy_recurrence_over_allocates() {
        let d = demands(&[1.0, 2.0, 3.0, 10.0], 8.0);
        let a = waterfill_split_legacy_recurrence(&d);
        assert_eq!(a.water_level, Some(3.0));
        assert_eq!(a.accepted_total(&d), 9.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(ClientDemands::new(vec![], 1.0), Err(ThrottleError::NoClients));
        assert!(ClientDemands::new(vec![1.0, -1.0], 1.0).is_err());
        assert!(ClientDemands::new(vec![1.0], f64::NAN).is_err());
    }
}
