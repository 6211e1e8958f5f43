//! Stop-and-wait HARQ with ideal chase combining.
//!
//! Each (UE, stream) owns a [`HarqPool`] of parallel processes. A packet is
//! sent at most `max_transmissions` times (first transmission plus
//! retransmissions); feedback arrives a fixed number of TTIs after each
//! transmission.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarqConfig {
    pub processes: usize,
    pub max_retransmissions: u8,
    pub feedback_delay_ttis: u64,
}

impl Default for HarqConfig {
    fn default() -> Self {
        Self {
            processes: 6,
            max_retransmissions: 3,
            feedback_delay_ttis: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarqState {
    Idle,
    AwaitingFeedback,
    PendingRetx,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarqProcess {
    pub state: HarqState,
    pub transmission_count: u8,
    /// Sum of the linear effective SINRs of every transmission so far.
    pub accumulated_sinr: f64,
    pub payload_bits: u64,
    pub mcs: usize,
    pub n_prb: usize,
    pub last_tx_tti: u64,
    /// TTI at which the process entered `PendingRetx`.
    pub pending_since: u64,
}

impl HarqProcess {
    const IDLE: HarqProcess = HarqProcess {
        state: HarqState::Idle,
        transmission_count: 0,
        accumulated_sinr: 0.0,
        payload_bits: 0,
        mcs: 0,
        n_prb: 0,
        last_tx_tti: 0,
        pending_since: 0,
    };
}

/// Result of applying feedback to a process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackOutcome {
    /// ACK: the payload is credited once and the process frees up.
    Delivered { bits: u64, first_transmission: bool },
    /// NACK with transmissions left.
    Retransmit { first_transmission: bool },
    /// NACK on the last allowed transmission.
    Dropped { bits: u64 },
}

impl FeedbackOutcome {
    pub fn first_transmission(&self) -> bool {
        match *self {
            FeedbackOutcome::Delivered { first_transmission, .. } => first_transmission,
            FeedbackOutcome::Retransmit { first_transmission } => first_transmission,
            FeedbackOutcome::Dropped { .. } => false,
        }
    }

    pub fn delivered_bits(&self) -> u64 {
        match *self {
            FeedbackOutcome::Delivered { bits, .. } => bits,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingRetx {
    pub process: usize,
    pub payload_bits: u64,
    pub mcs: usize,
    pub n_prb: usize,
}

/// Ideal chase combining: linear SINRs add.
pub fn combine(accumulated: f64, new: f64) -> f64 {
    accumulated + new
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarqPool {
    pub stream: usize,
    cfg: HarqConfig,
    slots: Vec<HarqProcess>,
}

impl HarqPool {
    pub fn new(stream: usize, cfg: HarqConfig) -> Self {
        Self {
            stream,
            cfg,
            slots: vec![HarqProcess::IDLE; cfg.processes],
        }
    }

    pub fn process(&self, id: usize) -> &HarqProcess {
        &self.slots[id]
    }

    pub fn processes(&self) -> &[HarqProcess] {
        &self.slots
    }

    pub fn max_transmissions(&self) -> u8 {
        self.cfg.max_retransmissions + 1
    }

    pub fn has_idle(&self) -> bool {
        self.slots.iter().any(|p| p.state == HarqState::Idle)
    }

    pub fn in_flight(&self) -> usize {
        self.slots.iter().filter(|p| p.state != HarqState::Idle).count()
    }

    /// Occupies the first idle slot with a new packet.
    pub fn start_transmission(&mut self, payload_bits: u64, mcs: usize, n_prb: usize, eff_sinr: f64, tti: u64) -> Result<usize> {
        let id = self
            .slots
            .iter()
            .position(|p| p.state == HarqState::Idle)
            .ok_or(Error::NoIdleProcess(self.stream))?;
        self.slots[id] = HarqProcess {
            state: HarqState::AwaitingFeedback,
            transmission_count: 1,
            accumulated_sinr: eff_sinr.max(0.0),
            payload_bits,
            mcs,
            n_prb,
            last_tx_tti: tti,
            pending_since: 0,
        };
        Ok(id)
    }

    /// Sends the stored packet again and chase-combines `eff_sinr`. Returns
    /// the accumulated SINR.
    pub fn retransmit(&mut self, id: usize, eff_sinr: f64, tti: u64) -> Result<f64> {
        let max = self.max_transmissions();
        let p = self.slots.get_mut(id).ok_or(Error::UnexpectedFeedback(id))?;
        if p.state != HarqState::PendingRetx || p.transmission_count >= max {
            return Err(Error::Consistency(format!(
                "retransmission of HARQ process {id} in state {:?} after {} transmissions",
                p.state, p.transmission_count
            )));
        }
        p.transmission_count += 1;
        p.accumulated_sinr = combine(p.accumulated_sinr, eff_sinr.max(0.0));
        p.state = HarqState::AwaitingFeedback;
        p.last_tx_tti = tti;
        Ok(p.accumulated_sinr)
    }

    pub fn on_feedback(&mut self, id: usize, ack: bool, tti: u64) -> Result<FeedbackOutcome> {
        let delay = self.cfg.feedback_delay_ttis;
        let max = self.max_transmissions();
        let p = self.slots.get_mut(id).ok_or(Error::UnexpectedFeedback(id))?;
        if p.state != HarqState::AwaitingFeedback {
            return Err(Error::UnexpectedFeedback(id));
        }
        if tti != p.last_tx_tti + delay {
            return Err(Error::FeedbackTiming {
                process: id,
                expected: p.last_tx_tti + delay,
                got: tti,
            });
        }
        let first = p.transmission_count == 1;
        let outcome = if ack {
            let bits = p.payload_bits;
            *p = HarqProcess::IDLE;
            FeedbackOutcome::Delivered {
                bits,
                first_transmission: first,
            }
        } else if p.transmission_count < max {
            p.state = HarqState::PendingRetx;
            p.pending_since = tti;
            FeedbackOutcome::Retransmit {
                first_transmission: first,
            }
        } else {
            let bits = p.payload_bits;
            *p = HarqProcess::IDLE;
            FeedbackOutcome::Dropped { bits }
        };
        Ok(outcome)
    }

    /// Processes waiting for a retransmission, oldest first.
    pub fn pending_retransmissions(&self) -> Vec<PendingRetx> {
        let mut v: Vec<(u64, PendingRetx)> = self
            .slots
            .iter()
            .enumerate()
            .filter(|(_, p)| p.state == HarqState::PendingRetx)
            .map(|(i, p)| {
                (
                    p.pending_since,
                    PendingRetx {
                        process: i,
                        payload_bits: p.payload_bits,
                        mcs: p.mcs,
                        n_prb: p.n_prb,
                    },
                )
            })
            .collect();
        v.sort_by_key(|(since, r)| (*since, r.process));
        v.into_iter().map(|(_, r)| r).collect()
    }
}
