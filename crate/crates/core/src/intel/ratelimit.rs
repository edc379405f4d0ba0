use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Sliding-window limiter: at most `cap` acquisitions in any `window`.
#[derive(Debug)]
pub struct RateLimiter {
    cap: usize,
    window: Duration,
    sent: Mutex<VecDeque<Instant>>,
}

impl RateLimiter {
    pub fn new(cap: usize, window: Duration) -> Self {
        assert!(cap > 0, "rate limit cap must be positive");
        RateLimiter {
            cap,
            window,
            sent: Mutex::new(VecDeque::with_capacity(cap)),
        }
    }

    /// Blocks until a request may be sent.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut sent = self.sent.lock().expect("limiter lock");
                let now = Instant::now();
                while sent.front().is_some_and(|t| now.duration_since(*t) >= self.window) {
                    sent.pop_front();
                }
                if sent.len() < self.cap {
                    sent.push_back(now);
                    return;
                }
                self.window - now.duration_since(*sent.front().expect("non-empty at cap"))
            };
            std::thread::sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn never_exceeds_cap_under_parallelism() {
        let window = Duration::from_millis(60);
        let limiter = Arc::new(RateLimiter::new(3, window));
        let stamps = Arc::new(Mutex::new(Vec::new()));
        let handles: Vec<_> = (0..6)
            .map(|_| {
                let (l, s) = (limiter.clone(), stamps.clone());
                std::thread::spawn(move || {
                    for _ in 0..2 {
                        l.acquire();
                        s.lock().unwrap().push(Instant::now());
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let mut t = stamps.lock().unwrap().clone();
        t.sort();
        assert_eq!(t.len(), 12);
        for (i, start) in t.iter().enumerate() {
            let in_window = t[i..].iter().take_while(|x| x.duration_since(*start) < window).count();
            // Stamps are taken just after acquisition, so allow no slack above cap.
            assert!(in_window <= 3, "{in_window} requests within one window");
        }
    }
}
