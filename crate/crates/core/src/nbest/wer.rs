use super::NBestError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WerStats {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub reference_len: usize,
    pub wer: f64,
}

impl WerStats {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Whitespace tokens, lowercased.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

#[derive(Clone, Copy)]
enum Step {
    Diagonal,
    Deletion,
    Insertion,
}

/// Levenshtein alignment with unit costs.
///
/// The backtrace prefers a diagonal move (match or substitution), then a
/// deletion, then an insertion.
pub fn word_error_rate<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> Result<WerStats, NBestError> {
    if reference.is_empty() {
        return Err(NBestError::EmptyReference);
    }
    let (n, m) = (reference.len(), hypothesis.len());
    let width = m + 1;
    let mut dist = vec![0usize; (n + 1) * width];
    for i in 0..=n {
        dist[i * width] = i;
    }
    for (j, cell) in dist.iter_mut().take(width).enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = usize::from(reference[i - 1].as_ref() != hypothesis[j - 1].as_ref());
            let diag = dist[(i - 1) * width + j - 1] + sub;
            let del = dist[(i - 1) * width + j] + 1;
            let ins = dist[i * width + j - 1] + 1;
            dist[i * width + j] = diag.min(del).min(ins);
        }
    }

    let (mut i, mut j) = (n, m);
    let (mut substitutions, mut deletions, mut insertions) = (0, 0, 0);
    while i > 0 || j > 0 {
        let here = dist[i * width + j];
        let step = if i > 0 && j > 0 {
            let sub = usize::from(reference[i - 1].as_ref() != hypothesis[j - 1].as_ref());
            if dist[(i - 1) * width + j - 1] + sub == here {
                Step::Diagonal
            } else if dist[(i - 1) * width + j] + 1 == here {
                Step::Deletion
            } else {
                Step::Insertion
            }
        } else if i > 0 {
            Step::Deletion
        } else {
            Step::Insertion
        };
        match step {
            Step::Diagonal => {
                if reference[i - 1].as_ref() != hypothesis[j - 1].as_ref() {
                    substitutions += 1;
                }
                i -= 1;
                j -= 1;
            }
            Step::Deletion => {
                deletions += 1;
                i -= 1;
            }
            Step::Insertion => {
                insertions += 1;
                j -= 1;
            }
        }
    }
    let errors = substitutions + deletions + insertions;
    debug_assert_eq!(errors, dist[n * width + m]);
    Ok(WerStats {
        substitutions,
        deletions,
        insertions,
        reference_len: n,
        wer: errors as f64 / n as f64,
    })
}
