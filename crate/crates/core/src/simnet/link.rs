use super::SimTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

/// Bounded uniform jitter in `[0, max]`, drawn from the link's own generator.
#[derive(Debug, Clone)]
pub struct Jitter {
    max: SimTime,
    rng: ChaCha8Rng,
}

impl Jitter {
    pub fn none() -> Jitter {
        Jitter::uniform(0.0, 0)
    }

    pub fn uniform(max_ms: f64, seed: u64) -> Jitter {
        Jitter {
            max: SimTime::from_ms(max_ms),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn sample(&mut self) -> SimTime {
        if self.max == SimTime::ZERO {
            SimTime::ZERO
        } else {
            SimTime(self.rng.random_range(0..=self.max.0))
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkStats {
    pub packets: u64,
    pub bytes: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransmitOutcome {
    /// Packet arrives at the far end `delay` after it was enqueued.
    Delivered {
        delay: SimTime,
        queuing: SimTime,
        transmission: SimTime,
    },
    /// Bounded queue was full; the packet was tail-dropped.
    Dropped,
}

/// One direction of a link: FIFO store-and-forward with a fixed processing
/// delay.
///
/// Jitter extends the time the channel stays occupied, so later packets queue
/// behind it and delivery order always matches enqueue order. Zero-byte
/// control stubs skip the queue and see the processing delay only.
#[derive(Debug, Clone)]
pub struct LinkState {
    capacity_bps: f64,
    proc_delay: SimTime,
    jitter: Jitter,
    busy_until: SimTime,
    /// channel-release times of packets not yet fully sent
    queue: VecDeque<SimTime>,
    queue_limit: Option<usize>,
    stats: LinkStats,
}

impl LinkState {
    pub fn new(capacity_bps: f64, proc_delay_ms: f64, jitter: Jitter) -> LinkState {
        LinkState {
            capacity_bps,
            proc_delay: SimTime::from_ms(proc_delay_ms),
            jitter,
            busy_until: SimTime::ZERO,
            queue: VecDeque::new(),
            queue_limit: None,
            stats: LinkStats::default(),
        }
    }

    pub fn with_queue_limit(mut self, limit: Option<usize>) -> LinkState {
        self.queue_limit = limit;
        self
    }

    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    pub fn proc_delay(&self) -> SimTime {
        self.proc_delay
    }

    pub fn stats(&self) -> LinkStats {
        self.stats
    }

    pub fn transmission_time(&self, payload_bytes: u32) -> SimTime {
        let bits = payload_bytes as f64 * 8.0;
        SimTime((bits / self.capacity_bps * 1e9).round() as u64)
    }

    /// Packets enqueued or on the channel at `now`.
    pub fn backlog(&mut self, now: SimTime) -> usize {
        while self.queue.front().is_some_and(|t| *t <= now) {
            self.queue.pop_front();
        }
        self.queue.len()
    }

    /// Enqueues a packet at `now` and returns its delivery delay:
    /// queuing + transmission + jitter + processing.
    pub fn transmit(&mut self, payload_bytes: u32, now: SimTime) -> TransmitOutcome {
        if payload_bytes == 0 {
            self.stats.packets += 1;
            return TransmitOutcome::Delivered {
                delay: self.proc_delay,
                queuing: SimTime::ZERO,
                transmission: SimTime::ZERO,
            };
        }
        if let Some(limit) = self.queue_limit {
            if self.backlog(now) >= limit {
                self.stats.dropped += 1;
                return TransmitOutcome::Dropped;
            }
        }
        let start = self.busy_until.max(now);
        let transmission = self.transmission_time(payload_bytes);
        let release = start + transmission + self.jitter.sample();
        self.busy_until = release;
        if self.queue_limit.is_some() {
            self.queue.push_back(release);
        }
        self.stats.packets += 1;
        self.stats.bytes += payload_bytes as u64;
        TransmitOutcome::Delivered {
            delay: release + self.proc_delay - now,
            queuing: start - now,
            transmission,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delay(o: TransmitOutcome) -> SimTime {
        match o {
            TransmitOutcome::Delivered { delay, .. } => delay,
            TransmitOutcome::Dropped => panic!("dropped"),
        }
    }

    #[test]
    fn model_transfer_on_idle_link() {
        // 5.8 MB over 40 Mbps
        let mut link = LinkState::new(40e6, 0.0, Jitter::none());
        let d = delay(link.transmit(5_800_000, SimTime::ZERO));
        assert_eq!(d.as_secs(), 1.16);
    }

    #[test]
    fn control_stub_sees_processing_delay_only() {
        let mut link = LinkState::new(40e6, 0.5, Jitter::none());
        link.transmit(1_000_000, SimTime::ZERO);
        assert_eq!(delay(link.transmit(0, SimTime::ZERO)).as_ms(), 0.5);
    }

    #[test]
    fn simultaneous_packets_queue_fifo() {
        let mut link = LinkState::new(10e6, 0.0, Jitter::none());
        let first = delay(link.transmit(1500, SimTime::ZERO));
        let second = delay(link.transmit(1500, SimTime::ZERO));
        assert_eq!(second.0, 2 * first.0);
    }

    #[test]
    fn bounded_queue_drops_tail() {
        let mut link = LinkState::new(1e6, 0.0, Jitter::none()).with_queue_limit(Some(2));
        assert!(matches!(link.transmit(1500, SimTime::ZERO), TransmitOutcome::Delivered { .. }));
        assert!(matches!(link.transmit(1500, SimTime::ZERO), TransmitOutcome::Delivered { .. }));
        assert_eq!(link.transmit(1500, SimTime::ZERO), TransmitOutcome::Dropped);
        assert_eq!(link.stats().dropped, 1);
        // once the first packet has left, there is room again
        let t = link.transmission_time(1500);
        assert!(matches!(link.transmit(1500, t), TransmitOutcome::Delivered { .. }));
    }

    #[test]
    fn delay_decomposes_into_components() {
        let mut link = LinkState::new(8e6, 2.0, Jitter::uniform(1.0, 3));
        let now = SimTime::from_ms(1.0);
        link.transmit(10_000, SimTime::ZERO);
        match link.transmit(1000, now) {
            TransmitOutcome::Delivered {
                delay,
                queuing,
                transmission,
            } => {
                assert_eq!(transmission.as_ms(), 1.0);
                let jitter = delay - queuing - transmission - link.proc_delay();
                assert!(jitter <= SimTime::from_ms(1.0));
            }
            TransmitOutcome::Dropped => unreachable!(),
        }
    }
}
