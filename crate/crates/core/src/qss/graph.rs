/// Which atoms must re-evaluate their derivative when a given atom's quantized
/// output changes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    dependents: Vec<Vec<usize>>,
}

impl DependencyGraph {
    /// Builds the graph from the read sets of the derivative functions:
    /// `reads[j]` lists the atoms whose quantized output `f_j` depends on.
    ///
    /// Self-reads are dropped; an atom always re-evaluates itself when it
    /// fires.
    pub fn from_reads(reads: &[Vec<usize>]) -> Self {
        let n = reads.len();
        let mut dependents = vec![Vec::new(); n];
        for (j, read) in reads.iter().enumerate() {
            for &i in read {
                assert!(i < n, "atom {j} reads unknown atom {i}");
                if i != j && !dependents[i].contains(&j) {
                    dependents[i].push(j);
                }
            }
        }
        for list in &mut dependents {
            list.sort_unstable();
        }
        Self { dependents }
    }

    pub fn len(&self) -> usize {
        self.dependents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dependents.is_empty()
    }

    pub fn dependents(&self, atom: usize) -> &[usize] {
        &self.dependents[atom]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.dependents[from].contains(&to)
    }
}
