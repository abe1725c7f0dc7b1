/// Windowed adaptation of the `phi` proposal half-width during burn-in.
///
/// After every `interval` recorded moves the window's acceptance rate is
/// compared with the target band: above it the step grows by `factor`, below
/// it the step shrinks by `factor`. Single windows are noisy because `phi`
/// mixes slowly, so on freezing the step is set to the value whose pooled
/// acceptance over the second half of the windows is closest to the band
/// centre. Once frozen the step never changes.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTuner {
    step: f64,
    band: (f64, f64),
    interval: usize,
    factor: f64,
    window_accepted: usize,
    window_total: usize,
    /// `(step, accepted, total)` per completed window.
    history: Vec<(f64, usize, usize)>,
    frozen: bool,
}

impl PhiTuner {
    pub fn new(initial_step: f64, band: (f64, f64), interval: usize, factor: f64) -> Self {
        Self {
            step: initial_step,
            band,
            interval,
            factor,
            window_accepted: 0,
            window_total: 0,
            history: Vec::new(),
            frozen: false,
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        if !self.frozen {
            if let Some(step) = self.pooled_choice() {
                self.step = step;
            }
        }
        self.frozen = true;
    }

    fn pooled_choice(&self) -> Option<f64> {
        let recent = &self.history[self.history.len() / 2..];
        let mut pooled: Vec<(f64, usize, usize)> = Vec::new();
        for &(step, acc, tot) in recent {
            match pooled.iter_mut().find(|(s, _, _)| *s == step) {
                Some(p) => {
                    p.1 += acc;
                    p.2 += tot;
                }
                None => pooled.push((step, acc, tot)),
            }
        }
        let centre = 0.5 * (self.band.0 + self.band.1);
        pooled
            .into_iter()
            .filter(|&(_, _, tot)| tot >= 2 * self.interval)
            .map(|(step, acc, tot)| (step, (acc as f64 / tot as f64 - centre).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(step, _)| step)
    }

    /// Adjusts a step for one window's acceptance rate.
    pub fn adjust(&self, acceptance: f64, current: f64) -> f64 {
        if acceptance > self.band.1 {
            current * self.factor
        } else if acceptance < self.band.0 {
            current / self.factor
        } else {
            current
        }
    }

    /// Records one move and returns the (possibly updated) step.
    pub fn record(&mut self, accepted: bool) -> f64 {
        if self.frozen {
            return self.step;
        }
        self.window_total += 1;
        self.window_accepted += accepted as usize;
        if self.window_total == self.interval {
            let rate = self.window_accepted as f64 / self.window_total as f64;
            self.history.push((self.step, self.window_accepted, self.window_total));
            self.step = self.adjust(rate, self.step);
            self.window_total = 0;
            self.window_accepted = 0;
        }
        self.step
    }
}
