use super::{FlowKey, SimTime};
use crate::topology::Path;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

#[derive(Debug, Clone, PartialEq)]
pub enum BackgroundRoute {
    /// Forwarded hop by hop with the min-hop baseline tables.
    Baseline,
    Fixed(Path),
}

/// Poisson cross traffic competing with model transfers.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundFlowSpec {
    pub flow: FlowKey,
    pub rate_pps: f64,
    pub packet_bytes: u32,
    pub route: BackgroundRoute,
}

/// Arrival process of one background flow.
#[derive(Debug, Clone)]
pub struct BackgroundSource {
    gap: Option<Exp<f64>>,
    rng: ChaCha8Rng,
    last: SimTime,
}

/// Seeded Poisson arrival generator; a zero rate never produces arrivals.
pub fn spawn_background(rate_pps: f64, seed: u64) -> BackgroundSource {
    let gap = if rate_pps > 0.0 {
        Some(Exp::new(rate_pps).expect("positive rate"))
    } else {
        None
    };
    BackgroundSource {
        gap,
        rng: ChaCha8Rng::seed_from_u64(seed),
        last: SimTime::ZERO,
    }
}

impl BackgroundSource {
    pub fn next_arrival(&mut self) -> Option<SimTime> {
        let gap = self.gap.as_ref()?;
        let secs: f64 = gap.sample(&mut self.rng);
        self.last += SimTime::from_secs(secs);
        Some(self.last)
    }

    /// All arrivals strictly before `end`.
    pub fn arrivals_until(&mut self, end: SimTime) -> Vec<SimTime> {
        let mut out = Vec::new();
        while let Some(t) = self.next_arrival() {
            if t >= end {
                break;
            }
            out.push(t);
        }
        out
    }
}
