use std::cmp::Ordering;

/// Indexed binary min-heap over per-atom next-event times.
///
/// Ties are broken by the lower atom index so the event order is fully
/// deterministic.
#[derive(Debug, Clone)]
pub struct EventSchedule {
    times: Vec<f64>,
    heap: Vec<usize>,
    position: Vec<usize>,
}

impl EventSchedule {
    /// A schedule for `n` atoms, all at `+inf`.
    pub fn new(n: usize) -> Self {
        Self {
            times: vec![f64::INFINITY; n],
            heap: (0..n).collect(),
            position: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn time_of(&self, atom: usize) -> f64 {
        self.times[atom]
    }

    /// The atom with the smallest next-event time, without removing it.
    pub fn peek(&self) -> Option<(usize, f64)> {
        self.heap.first().map(|&i| (i, self.times[i]))
    }

    /// Reschedules `atom`. Every atom stays in the heap; an idle atom sits at
    /// `+inf`, so "extract-min" is `peek` followed by `set` with the atom's
    /// new time.
    pub fn set(&mut self, atom: usize, t: f64) {
        let old = self.times[atom];
        self.times[atom] = t;
        let pos = self.position[atom];
        match t.total_cmp(&old) {
            Ordering::Less => self.sift_up(pos),
            Ordering::Greater => self.sift_down(pos),
            Ordering::Equal => {}
        }
    }

    fn less(&self, a: usize, b: usize) -> bool {
        match self.times[a].total_cmp(&self.times[b]) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => a < b,
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.position[self.heap[i]] = i;
        self.position[self.heap[j]] = j;
    }

    fn sift_up(&mut self, mut pos: usize) {
        while pos > 0 {
            let parent = (pos - 1) / 2;
            if self.less(self.heap[pos], self.heap[parent]) {
                self.swap(pos, parent);
                pos = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut pos: usize) {
        let n = self.heap.len();
        loop {
            let left = 2 * pos + 1;
            if left >= n {
                break;
            }
            let right = left + 1;
            let mut child = left;
            if right < n && self.less(self.heap[right], self.heap[left]) {
                child = right;
            }
            if self.less(self.heap[child], self.heap[pos]) {
                self.swap(pos, child);
                pos = child;
            } else {
                break;
            }
        }
    }
}
